# io.py
#
# Date: 11 - Mar - 2024
#
# Input/Output routines: Middlebury .flo files, grey-scale image reading and
# writing, and colour coding of flow fields.
###############################################################################
from __future__ import print_function
import numpy as np
from PIL import Image as PILImage
from matplotlib.colors import hsv_to_rgb

from .constants import FLO_TAG, LUMA
from .errors import FlowFormatError, TruncationError, ImageFormatError
from .image_ops import Image, FlowField, _as_array

__all__ = [ "read_flo", "write_flo", "read_image", "write_image",
            "flow_to_hsv", "flow_to_color", "write_color" ]

_HEADER_BYTES = 12

###############################################################################
# Middlebury flow files
###############################################################################
def read_flo(filename):
    """Read a Middlebury .flo file.

    Layout: float32 tag 202021.25, int32 width, int32 height, then
    height x width interleaved (u, v) float32 values, all little endian.

    returns:
        FlowField with float32 components
    """
    with open(filename, 'rb') as f:
        raw = f.read()

    if len(raw) < _HEADER_BYTES:
        raise TruncationError("{}: file too short for a .flo header "
                              "({} bytes)".format(filename, len(raw)))

    tag = np.frombuffer(raw[:4], dtype='<f4')[0]
    if tag != np.float32(FLO_TAG):
        raise FlowFormatError("{}: bad .flo tag {}, expected {}".format(
            filename, tag, FLO_TAG))

    w, h = np.frombuffer(raw[4:12], dtype='<i4')
    if w < 1 or h < 1:
        raise FlowFormatError("{}: invalid size {}x{}".format(filename, w, h))

    expected = _HEADER_BYTES + 4 * 2 * int(w) * int(h)
    if len(raw) != expected:
        raise TruncationError("{}: payload is {} bytes, header implies "
                              "{}".format(filename, len(raw), expected))

    data = np.frombuffer(raw[_HEADER_BYTES:], dtype='<f4').reshape(h, w, 2)
    return FlowField(data[..., 0].astype('f4'), data[..., 1].astype('f4'))

def write_flo(flow, filename):
    """Write a flow field as a Middlebury .flo file"""
    h, w = flow.shape
    data = np.empty([h, w, 2], dtype='<f4')
    data[..., 0] = flow.u
    data[..., 1] = flow.v

    with open(filename, 'wb') as f:
        f.write(np.array([FLO_TAG], dtype='<f4').tobytes())
        f.write(np.array([w, h], dtype='<i4').tobytes())
        f.write(data.tobytes())

###############################################################################
# Images
###############################################################################
def read_image(filename):
    """Read an image as grey-scale intensities in [0, 1].

    8-bit grey-scale (PGM, PNG) is scaled by 1/255, 16-bit by 1/65535 and
    colour inputs are converted with the luma weights (0.299, 0.587, 0.114).
    """
    try:
        img = PILImage.open(filename)
        img.load()
    except (IOError, OSError, ValueError, SyntaxError) as e:
        raise ImageFormatError("Cannot read image {}: {}".format(filename, e))

    mode = img.mode
    if mode in ('1', 'L', 'LA'):
        data = np.asarray(img.convert('L'), dtype='f8') / 255.
    elif mode in ('I;16', 'I;16B', 'I;16L', 'I'):
        data = np.asarray(img, dtype='f8') / 65535.
    elif mode in ('P', 'RGB', 'RGBA', 'CMYK', 'YCbCr'):
        rgb = np.asarray(img.convert('RGB'), dtype='f8') / 255.
        data = rgb.dot(np.array(LUMA))
    else:
        raise ImageFormatError("Unsupported image mode {} in {}".format(
            mode, filename))

    return Image(np.clip(data, 0, 1))

def write_image(image, filename):
    """Write intensities in [0, 1] as an 8-bit grey-scale image.

    The format follows the extension, e.g. .pgm or .png.
    """
    data = np.clip(_as_array(image), 0, 1)
    PILImage.fromarray(np.round(255 * data).astype(np.uint8)).save(filename)

###############################################################################
# Colour coding
###############################################################################
def flow_to_hsv(flow, max_magnitude=None):
    """Colour wheel coding of a flow field in HSV.

    Hue encodes the direction and saturation the magnitude relative to
    max_magnitude (default: 99th percentile of the field). Value is 1, so
    zero flow is white. Non-finite vectors are shown as zero flow.
    """
    u = np.where(np.isfinite(flow.u), flow.u, 0).astype('f8')
    v = np.where(np.isfinite(flow.v), flow.v, 0).astype('f8')
    mag = np.hypot(u, v)

    if max_magnitude is None:
        max_magnitude = np.percentile(mag, 99) if mag.size else 0.

    hue = (np.arctan2(-v, -u) / np.pi + 1) / 2
    if max_magnitude > 0:
        sat = np.clip(mag / max_magnitude, 0, 1)
    else:
        sat = np.zeros_like(mag)

    return np.stack([np.mod(hue, 1.0), sat, np.ones_like(mag)], axis=-1)

def flow_to_color(flow, max_magnitude=None):
    """RGB (uint8, [H, W, 3]) colour coding of a flow field"""
    rgb = hsv_to_rgb(flow_to_hsv(flow, max_magnitude))
    return np.round(255 * rgb).astype(np.uint8)

def write_color(rgb, filename):
    """Write an RGB image as PNG or binary PPM, following the extension"""
    rgb = np.asarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ImageFormatError("Expected an [H, W, 3] colour image, found "
                               "{}".format(rgb.shape))
    PILImage.fromarray(rgb).save(filename)
