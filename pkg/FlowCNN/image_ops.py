# image_ops.py
#
# Date: 5 - Mar - 2024
#
# Classical image processing needed by the loss and by the coarse-to-fine
# estimator: Horn & Schunck derivatives, bilinear warping, binomial pyramids,
# median filtering of flow fields and flow upsampling.
#
# Border policy is the same everywhere: coordinates / neighbours are clamped
# to the image (edge replication).
################################################################################
from __future__ import print_function
import numpy as np
from scipy import ndimage

from .errors import ShapeError, DegenerateInputError, ConfigurationError

__all__ = [ "Image", "FlowField",
            "spatiotemporal_derivatives", "bilinear_warp",
            "pyramid_downsample", "build_pyramid",
            "median_filter_flow", "upsample_flow",
            "pad_to_multiple", "crop" ]

_BINOMIAL = np.array([1., 4., 6., 4., 1.]) / 16.

################################################################################
# Data types
################################################################################
class Image(object):
    """Grey-scale image with intensities in [0, 1].

    args:
        data : 2D array [height, width]
    """
    def __init__(self, data):
        data = np.asarray(data, dtype='f8')
        if data.ndim != 2:
            raise ShapeError("Image data must be 2D, found shape "
                             "{}".format(data.shape))
        self._data = data

    @staticmethod
    def from_array(data):
        """Create from a [height, width] or [1, height, width] array"""
        data = np.asarray(data)
        if data.ndim == 3 and data.shape[0] == 1:
            data = data[0]
        return Image(data)

    @property
    def data(self):
        return self._data
    @property
    def shape(self):
        return self._data.shape
    @property
    def height(self):
        return self._data.shape[0]
    @property
    def width(self):
        return self._data.shape[1]


class FlowField(object):
    """Dense displacement field (u, v) in pixels.

    u is the horizontal displacement and v the vertical one, so that pixel
    (x, y) of the first frame corresponds to (x+u, y+v) in the second.

    args:
        u, v : 2D arrays [height, width]
    """
    def __init__(self, u, v):
        u = np.asarray(u)
        v = np.asarray(v)
        if u.ndim != 2 or u.shape != v.shape:
            raise ShapeError("u and v must be 2D arrays of equal shape, found "
                             "{} and {}".format(u.shape, v.shape))
        self._u = u
        self._v = v

    @staticmethod
    def zeros(height, width, dtype='f8'):
        return FlowField(np.zeros([height, width], dtype=dtype),
                         np.zeros([height, width], dtype=dtype))

    @staticmethod
    def from_array(data):
        """Create from a stacked [2, height, width] array"""
        data = np.asarray(data)
        if data.ndim != 3 or data.shape[0] != 2:
            raise ShapeError("Flow data must have shape [2, H, W], found "
                             "{}".format(data.shape))
        return FlowField(data[0], data[1])

    def copy(self):
        return FlowField(self._u.copy(), self._v.copy())

    def __add__(self, other):
        _check_same(self.shape, other.shape, "flow")
        return FlowField(self._u + other.u, self._v + other.v)

    @property
    def u(self):
        return self._u
    @property
    def v(self):
        return self._v
    @property
    def data(self):
        return np.stack([self._u, self._v])
    @property
    def shape(self):
        return self._u.shape
    @property
    def height(self):
        return self._u.shape[0]
    @property
    def width(self):
        return self._u.shape[1]
    @property
    def magnitude(self):
        return np.hypot(self._u, self._v)


def _check_same(a, b, what):
    if tuple(a) != tuple(b):
        raise ShapeError("Extents of {} do not match: {} vs {}".format(what,
                                                                     a, b))

def _as_array(image):
    return image.data if isinstance(image, Image) else np.asarray(image,
                                                                  dtype='f8')

################################################################################
# Derivatives
################################################################################
def _cube_corners(I):
    """Values at (x,y), (x+1,y), (x,y+1) and (x+1,y+1), clamped"""
    P = np.pad(I, ((0, 1), (0, 1)), mode='edge')
    return P[:-1, :-1], P[:-1, 1:], P[1:, :-1], P[1:, 1:]

def spatiotemporal_derivatives(frame1, frame2):
    """Horn & Schunck estimates of Ix, Iy and It.

    Each derivative is the average of the four first differences along its
    axis over the 2 x 2 x 2 cube spanned by pixels (x, x+1), (y, y+1) and
    the two frames.

    args:
        frame1, frame2 : Image or 2D array
    returns:
        Ix, Iy, It : 2D arrays
    """
    I1, I2 = _as_array(frame1), _as_array(frame2)
    _check_same(I1.shape, I2.shape, "frames")

    a1, b1, c1, d1 = _cube_corners(I1)
    a2, b2, c2, d2 = _cube_corners(I2)

    Ix = 0.25 * ((b1 - a1) + (d1 - c1) + (b2 - a2) + (d2 - c2))
    Iy = 0.25 * ((c1 - a1) + (d1 - b1) + (c2 - a2) + (d2 - b2))
    It = 0.25 * ((a2 - a1) + (b2 - b1) + (c2 - c1) + (d2 - d1))

    return Ix, Iy, It

################################################################################
# Warping
################################################################################
def bilinear_warp(image, flow):
    """Sample image at (x + u, y + v), clamping coordinates to the border.

    args:
        image : Image (the second frame)
        flow  : FlowField on the grid of the first frame
    returns:
        Image, the second frame warped towards the first
    """
    I = _as_array(image)
    _check_same(I.shape, flow.shape, "image and flow")
    H, W = I.shape

    y, x = np.mgrid[0:H, 0:W].astype('f8')
    xs = np.clip(x + flow.u, 0, W - 1)
    ys = np.clip(y + flow.v, 0, H - 1)

    x0 = np.floor(xs).astype(int)
    y0 = np.floor(ys).astype(int)
    x1 = np.minimum(x0 + 1, W - 1)
    y1 = np.minimum(y0 + 1, H - 1)
    ax = xs - x0
    ay = ys - y0

    top = (1 - ax) * I[y0, x0] + ax * I[y0, x1]
    bot = (1 - ax) * I[y1, x0] + ax * I[y1, x1]

    return Image((1 - ay) * top + ay * bot)

################################################################################
# Pyramids
################################################################################
def pyramid_downsample(image):
    """Binomial (1 4 6 4 1)/16 low-pass filter followed by 2x decimation.

    The output has extents ceil(H/2) x ceil(W/2).
    """
    I = _as_array(image)
    if min(I.shape) < 2:
        raise DegenerateInputError("Cannot downsample an image of size "
                                   "{}x{}".format(*I.shape))
    S = ndimage.correlate1d(I, _BINOMIAL, axis=0, mode='nearest')
    S = ndimage.correlate1d(S, _BINOMIAL, axis=1, mode='nearest')
    return Image(S[::2, ::2])

def build_pyramid(image, num_levels):
    """Return [finest, ..., coarsest] with num_levels entries"""
    levels = [image if isinstance(image, Image) else Image(image)]
    for _ in range(num_levels - 1):
        levels.append(pyramid_downsample(levels[-1]))
    return levels

################################################################################
# Flow field filters
################################################################################
def median_filter_flow(flow, radius):
    """Median of u and v over (2 radius + 1)^2 windows, edge clamped"""
    if radius < 1:
        raise ConfigurationError("Median radius must be >= 1")
    size = 2*radius + 1
    return FlowField(ndimage.median_filter(flow.u, size=size, mode='nearest'),
                     ndimage.median_filter(flow.v, size=size, mode='nearest'))

def upsample_flow(flow):
    """Double the extents by repetition, scaling the displacements by 2"""
    def up(x):
        return 2 * np.repeat(np.repeat(x, 2, axis=0), 2, axis=1)
    return FlowField(up(flow.u), up(flow.v))

################################################################################
# Padding
################################################################################
def pad_to_multiple(image, multiple):
    """Edge-replicate pad (bottom / right) to the next multiple of `multiple`"""
    I = _as_array(image)
    H, W = I.shape
    pH = (-H) % multiple
    pW = (-W) % multiple
    return Image(np.pad(I, ((0, pH), (0, pW)), mode='edge'))

def crop(flow, height, width):
    """Top-left height x width window of a flow field"""
    return FlowField(flow.u[:height, :width].copy(),
                     flow.v[:height, :width].copy())
