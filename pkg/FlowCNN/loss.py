# loss.py
#
# Date: 6 - Mar - 2024
#
# Unsupervised training objective: the Charbonnier penalised optical flow
# constraint, its per-pixel gradient with respect to the flow, the
# non-linearised photometric error used for monitoring, and a finite
# difference oracle for the gradient.
################################################################################
from __future__ import print_function
import numpy as np

from .constants import CHARBONNIER_EPS
from .errors import ShapeError, ConfigurationError
from .image_ops import FlowField, _as_array
from .utils import make_ASCII_header

__all__ = [ "LossConfig", "ofc_penalty", "ofc_loss", "ofc_loss_grad",
            "photometric_loss", "finite_difference_grad", "relative_error" ]


class LossConfig(object):
    """Parameters of the Charbonnier penalty rho(x) = sqrt(x^2 + epsilon).

    args:
        epsilon : smoothing constant, default=1e-3
    """
    def __init__(self, epsilon=CHARBONNIER_EPS):
        if not epsilon > 0:
            raise ConfigurationError("Charbonnier epsilon must be positive, "
                                     "found {}".format(epsilon))
        self._eps = float(epsilon)

    @property
    def epsilon(self):
        return self._eps

    def ASCII_header(self):
        """LossConfig header"""
        return make_ASCII_header(self.HDF5_attributes())

    def HDF5_attributes(self):
        """Class information for HDF5 headers"""
        return self.__class__.__name__, { "epsilon" : "{}".format(self._eps) }


def _residual(flow, Ix, Iy, It):
    for name, D in zip(["Ix", "Iy", "It"], [Ix, Iy, It]):
        if D.shape != flow.shape:
            raise ShapeError("{} has extents {}, flow has {}".format(
                name, D.shape, flow.shape))
    u = np.asarray(flow.u, dtype='f8')
    v = np.asarray(flow.v, dtype='f8')
    return u*Ix + v*Iy + It

def ofc_penalty(flow, Ix, Iy, It, cfg):
    """Per-pixel penalty sqrt((u Ix + v Iy + It)^2 + epsilon)"""
    r = _residual(flow, Ix, Iy, It)
    return np.sqrt(r*r + cfg.epsilon)

def ofc_loss(flow, Ix, Iy, It, cfg):
    """Sum of the penalised optical flow constraint over all pixels"""
    return ofc_penalty(flow, Ix, Iy, It, cfg).sum()

def ofc_loss_grad(flow, Ix, Iy, It, cfg):
    """Gradient of ofc_loss with respect to u and v at every pixel.

    dE/du = Ix r / sqrt(r^2 + eps),  dE/dv = Iy r / sqrt(r^2 + eps)
    with r = u Ix + v Iy + It. Summing the field over pixels gives the two
    component form.

    returns:
        FlowField holding (dE/du, dE/dv)
    """
    r = _residual(flow, Ix, Iy, It)
    w = r / np.sqrt(r*r + cfg.epsilon)
    return FlowField(Ix * w, Iy * w)

def photometric_loss(frame1, warped2):
    """Sum of squared motion compensated intensity differences"""
    I1, I2 = _as_array(frame1), _as_array(warped2)
    if I1.shape != I2.shape:
        raise ShapeError("Extents do not match: {} vs {}".format(I1.shape,
                                                                I2.shape))
    d = I2 - I1
    return (d*d).sum()

################################################################################
# Finite difference oracle
################################################################################
def finite_difference_grad(flow, Ix, Iy, It, cfg, h=1e-4):
    """Central differences of ofc_loss with respect to every u and v.

    The loss is a sum of independent per-pixel terms, so all pixels are
    perturbed together and the differences of the per-pixel penalties are
    used.
    """
    u = np.asarray(flow.u, dtype='f8')
    v = np.asarray(flow.v, dtype='f8')

    def diff(du, dv):
        Ep = ofc_penalty(FlowField(u + du, v + dv), Ix, Iy, It, cfg)
        Em = ofc_penalty(FlowField(u - du, v - dv), Ix, Iy, It, cfg)
        return (Ep - Em) / (2*h)

    zero = np.zeros_like(u)
    return FlowField(diff(h, zero), diff(zero, h))

def relative_error(a, b, floor=1e-12):
    """Elementwise |a - b| / max(|a|, |b|, floor)"""
    a = np.asarray(a, dtype='f8')
    b = np.asarray(b, dtype='f8')
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return np.abs(a - b) / scale
