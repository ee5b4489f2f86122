# test_image_ops.py
#
# Date: 27 - Mar - 2024
#
# Derivative stencil, warping, pyramid and flow filters
###############################################################################
import numpy as np

from FlowCNN.image_ops import (Image, FlowField, spatiotemporal_derivatives,
                               bilinear_warp, pyramid_downsample,
                               build_pyramid, median_filter_flow,
                               upsample_flow, pad_to_multiple, crop)
from FlowCNN.synthetic import random_texture, shifted_pair
from FlowCNN.errors import ShapeError, DegenerateInputError, ConfigurationError


def _stencil(I1, I2):
    """Direct evaluation of the 2x2x2 cube averages with clamped borders"""
    H, W = I1.shape
    Ix, Iy, It = np.zeros((3, H, W))
    for y in range(H):
        for x in range(W):
            y1, x1 = min(y + 1, H - 1), min(x + 1, W - 1)
            s = 0.
            for I in (I1, I2):
                Ix[y, x] += (I[y, x1] - I[y, x]) + (I[y1, x1] - I[y1, x])
                Iy[y, x] += (I[y1, x] - I[y, x]) + (I[y1, x1] - I[y, x1])
            for (a, b) in [(y, x), (y, x1), (y1, x), (y1, x1)]:
                s += I2[a, b] - I1[a, b]
            It[y, x] = s
    return Ix / 4, Iy / 4, It / 4


def test_derivatives_match_stencil():
    rng = np.random.default_rng(10)
    for n in range(20):
        shape = (5 + n % 4, 6 + n % 3)
        I1, I2 = rng.uniform(0, 1, (2,) + shape)
        D = spatiotemporal_derivatives(Image(I1), Image(I2))
        for d, d0 in zip(D, _stencil(I1, I2)):
            assert(np.allclose(d, d0, rtol=1e-12, atol=1e-14))

def test_derivatives_ramp():
    y, x = np.mgrid[0:8, 0:8].astype('f8')
    Ix, Iy, It = spatiotemporal_derivatives(0.1*x, 0.1*x + 0.05)
    assert(np.allclose(Ix[:, :-1], 0.1))
    assert(np.allclose(Iy, 0))
    assert(np.allclose(It, 0.05))

    try:
        spatiotemporal_derivatives(np.zeros((4, 4)), np.zeros((4, 5)))
        failed = False
    except ShapeError:
        failed = True
    assert(failed)

def test_warp_integer_flow():
    rng = np.random.default_rng(11)
    for n in range(20):
        H, W = 9, 11
        I = rng.uniform(0, 1, (H, W))
        u = rng.integers(-3, 4, (H, W)).astype('f8')
        v = rng.integers(-3, 4, (H, W)).astype('f8')

        warped = bilinear_warp(Image(I), FlowField(u, v)).data

        y, x = np.mgrid[0:H, 0:W]
        ys = np.clip(y + v.astype(int), 0, H - 1)
        xs = np.clip(x + u.astype(int), 0, W - 1)
        assert(np.array_equal(warped, I[ys, xs]))

def test_warp_fractional():
    I = np.tile(np.arange(6.), (4, 1))
    warped = bilinear_warp(I, FlowField(np.full((4, 6), 0.25),
                                        np.zeros((4, 6)))).data
    assert(np.allclose(warped[:, :-1], I[:, :-1] + 0.25))
    assert(np.allclose(warped[:, -1], 5.))

def test_pyramid():
    I = np.full((16, 12), 0.3)
    P = build_pyramid(Image(I), 3)
    assert([p.shape for p in P] == [(16, 12), (8, 6), (4, 3)])
    assert(np.allclose(P[-1].data, 0.3))

    assert(pyramid_downsample(np.zeros((5, 7))).shape == (3, 4))

    try:
        pyramid_downsample(np.zeros((1, 8)))
        failed = False
    except DegenerateInputError:
        failed = True
    assert(failed)

def _sort_median(a, r):
    H, W = a.shape
    out = np.zeros_like(a)
    for y in range(H):
        for x in range(W):
            vals = [a[min(max(y + i, 0), H - 1), min(max(x + j, 0), W - 1)]
                    for i in range(-r, r + 1) for j in range(-r, r + 1)]
            out[y, x] = np.sort(vals)[len(vals) // 2]
    return out

def test_median_filter_matches_sort():
    rng = np.random.default_rng(12)
    for n in range(20):
        r = 1 + n % 2
        u, v = rng.standard_normal((2, 7, 9))
        m = median_filter_flow(FlowField(u, v), r)
        assert(np.array_equal(m.u, _sort_median(u, r)))
        assert(np.array_equal(m.v, _sort_median(v, r)))

    try:
        median_filter_flow(FlowField(u, v), 0)
        failed = False
    except ConfigurationError:
        failed = True
    assert(failed)

def test_median_removes_outlier():
    u = np.zeros((8, 8))
    u[3, 4] = 100.
    m = median_filter_flow(FlowField(u, u.copy()), 2)
    assert(np.all(m.u == 0) and np.all(m.v == 0))

def test_upsample_flow():
    f = FlowField(np.array([[1., -2.]]), np.array([[0.5, 0.]]))
    up = upsample_flow(f)
    assert(up.shape == (2, 4))
    assert(np.all(up.u[:, :2] == 2.) and np.all(up.u[:, 2:] == -4.))
    assert(np.all(up.v[:, :2] == 1.))

def test_pad_and_crop():
    I = np.arange(12.).reshape(3, 4)
    P = pad_to_multiple(I, 4)
    assert(P.shape == (4, 4))
    assert(np.array_equal(P.data[3], I[2]))
    assert(pad_to_multiple(I, 1).shape == (3, 4))

    f = FlowField(np.ones((8, 8)), np.zeros((8, 8)))
    c = crop(f, 3, 5)
    assert(c.shape == (3, 5))

def test_flow_field():
    f = FlowField.zeros(3, 4)
    g = FlowField.from_array(np.ones((2, 3, 4)))
    s = f + g
    assert(s.shape == (3, 4) and np.all(s.u == 1))
    assert(s.data.shape == (2, 3, 4))
    assert(np.allclose(FlowField(np.full((2, 2), 3.),
                                 np.full((2, 2), 4.)).magnitude, 5.))

    try:
        FlowField(np.zeros((2, 2)), np.zeros((2, 3)))
        failed = False
    except ShapeError:
        failed = True
    assert(failed)

def test_image_from_array():
    I = Image.from_array(np.ones((1, 3, 4), dtype='f4'))
    assert(I.shape == (3, 4) and I.data.dtype == np.float64)
    assert(Image.from_array(np.zeros((2, 5))).width == 5)

    try:
        Image.from_array(np.zeros((2, 3, 4)))
        failed = False
    except ShapeError:
        failed = True
    assert(failed)

def test_median_keeps_piecewise_constant():
    u = np.zeros((12, 12))
    u[:, 5:] = 1.5
    v = np.full((12, 12), -2.)
    v[7:] = 0.25
    f = FlowField(u, v)

    once = median_filter_flow(f, 2)
    twice = median_filter_flow(once, 2)
    assert(np.array_equal(once.u, u) and np.array_equal(once.v, v))
    assert(np.array_equal(twice.data, once.data))

def _textured_shift(shift, size, sigma, seed):
    T = random_texture((size[0] + 16, size[1] + 16),
                       np.random.default_rng(seed), sigma)
    return shifted_pair(T, shift, size, (8, 8))

def test_warp_half_pixel():
    f1, f2, _ = _textured_shift((0.5, 0.), (32, 32), 2.0, 13)
    warped = bilinear_warp(f2, FlowField(np.full((32, 32), 0.5),
                                         np.zeros((32, 32)))).data
    d = (warped - f1.data)[:, :-1]
    assert(np.mean(d*d) < 1e-3)

def test_upsample_matches_pyramid_scale():
    f1, f2, truth = _textured_shift((2., 1.), (32, 32), 3.0, 14)

    # (2, 1) pixels at full resolution is (1, 0.5) one level down
    c1, c2 = pyramid_downsample(f1), pyramid_downsample(f2)
    coarse = FlowField(np.full((16, 16), 1.), np.full((16, 16), 0.5))
    d = (bilinear_warp(c2, coarse).data - c1.data)[2:-2, 2:-2]
    assert(np.mean(d*d) < 1e-3)

    fine = upsample_flow(coarse)
    assert(fine.shape == (32, 32))
    epe = np.hypot(fine.u - truth.u, fine.v - truth.v)
    assert(epe.mean() < 0.5)
    d = (bilinear_warp(f2, fine).data - f1.data)[:-2, :-3]
    assert(np.mean(d*d) < 1e-3)
