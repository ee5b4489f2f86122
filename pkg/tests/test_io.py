# test_io.py
#
# Date: 31 - Mar - 2024
#
# Test input / output routines
###############################################################################
import os
import struct
import numpy as np
from PIL import Image as PILImage

from FlowCNN.io import (read_flo, write_flo, read_image, write_image,
                        flow_to_hsv, flow_to_color, write_color)
from FlowCNN.image_ops import FlowField
from FlowCNN.errors import FlowFormatError, TruncationError, ImageFormatError


def test_flo_round_trip(tmp_path):
    rng = np.random.default_rng(60)
    u, v = rng.standard_normal((2, 3, 4)).astype('f4')
    u[1, 2] = np.nan
    filename = str(tmp_path / 'a.flo')

    write_flo(FlowField(u, v), filename)
    back = read_flo(filename)

    assert(back.shape == (3, 4))
    assert(back.u.tobytes() == u.tobytes())
    assert(back.v.tobytes() == v.tobytes())

def test_flo_size(tmp_path):
    filename = str(tmp_path / 'b.flo')
    write_flo(FlowField(np.array([[1.5, 0.]]), np.array([[-2., 0.]])),
              filename)
    assert(os.path.getsize(filename) == 4 + 4 + 4 + 16)

def test_flo_reference_layout(tmp_path):
    # Constant (1, -2) field written byte by byte
    w, h = 3, 2
    raw = struct.pack('<f', 202021.25) + struct.pack('<ii', w, h)
    raw += struct.pack('<' + 'ff'*w*h, *([1., -2.]*w*h))
    filename = str(tmp_path / 'ref.flo')
    with open(filename, 'wb') as f:
        f.write(raw)

    flow = read_flo(filename)
    assert(flow.shape == (2, 3))
    assert(np.all(flow.u == 1.) and np.all(flow.v == -2.))

def test_flo_errors(tmp_path):
    good = str(tmp_path / 'good.flo')
    write_flo(FlowField.zeros(2, 2), good)
    with open(good, 'rb') as f:
        raw = f.read()

    bad = str(tmp_path / 'bad.flo')
    cases = [(struct.pack('<f', 0.) + raw[4:], FlowFormatError),
             (raw[:-4], TruncationError),
             (raw[:8], TruncationError),
             (raw + b'\0'*8, TruncationError)]
    for data, error in cases:
        with open(bad, 'wb') as f:
            f.write(data)
        try:
            read_flo(bad)
            failed = False
        except error:
            failed = True
        assert(failed)

    # Truncation is a format error too
    assert(issubclass(TruncationError, FlowFormatError))

def test_read_pgm(tmp_path):
    filename = str(tmp_path / 'a.pgm')
    PILImage.fromarray(np.array([[0, 255], [51, 102]],
                                dtype=np.uint8)).save(filename)
    I = read_image(filename)
    assert(I.data[0, 0] == 0.0 and I.data[0, 1] == 1.0)
    assert(np.isclose(I.data[1, 0], 0.2))

def test_read_colour(tmp_path):
    filename = str(tmp_path / 'red.png')
    rgb = np.zeros((2, 2, 3), dtype=np.uint8)
    rgb[..., 0] = 255
    PILImage.fromarray(rgb).save(filename)
    assert(np.allclose(read_image(filename).data, 0.299))

def test_image_round_trip(tmp_path):
    rng = np.random.default_rng(61)
    I = np.round(rng.uniform(0, 1, (5, 7)) * 255) / 255
    for ext in ['pgm', 'png']:
        filename = str(tmp_path / 'img.{}'.format(ext))
        write_image(I, filename)
        assert(np.allclose(read_image(filename).data, I, atol=1e-12))

def test_read_image_error(tmp_path):
    filename = str(tmp_path / 'notes.pgm')
    with open(filename, 'w') as f:
        f.write('not an image')
    try:
        read_image(filename)
        failed = False
    except ImageFormatError as e:
        failed = True
        assert(filename in str(e))
    assert(failed)

def test_zero_flow_is_white():
    rgb = flow_to_color(FlowField.zeros(4, 5))
    assert(rgb.shape == (4, 5, 3) and rgb.dtype == np.uint8)
    assert(np.all(rgb == 255))

def test_antipodal_hues():
    ones = np.ones((2, 2))
    for u, v in [(1., 0.), (0., 1.), (0.6, -0.8)]:
        a = flow_to_hsv(FlowField(u*ones, v*ones), 1.0)
        b = flow_to_hsv(FlowField(-u*ones, -v*ones), 1.0)
        dh = np.abs(a[..., 0] - b[..., 0])
        assert(np.allclose(np.minimum(dh, 1 - dh), 0.5))

def test_saturation_monotone():
    mags = np.linspace(0, 3, 31)[None, :]
    hsv = flow_to_hsv(FlowField(mags, 0*mags), max_magnitude=2.0)
    s = hsv[0, :, 1]
    assert(np.all(np.diff(s) >= 0))
    assert(s[0] == 0 and np.all(s[mags[0] >= 2.0] == 1))
    assert(np.all(hsv[..., 2] == 1))

def test_write_color(tmp_path):
    rgb = flow_to_color(FlowField(np.ones((3, 4)), np.zeros((3, 4))))
    for ext in ['png', 'ppm']:
        filename = str(tmp_path / 'c.{}'.format(ext))
        write_color(rgb, filename)
        back = np.asarray(PILImage.open(filename))
        assert(np.array_equal(back, rgb))

    try:
        write_color(np.zeros((3, 4)), str(tmp_path / 'c.png'))
        failed = False
    except ImageFormatError:
        failed = True
    assert(failed)
