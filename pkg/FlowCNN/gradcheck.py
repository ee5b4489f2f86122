# gradcheck.py
#
# Date: 20 - Mar - 2024
#
# Finite difference verification of the analytic gradients: the per-pixel
# loss gradient with respect to the flow, and the full chain through the
# network down to every weight and bias.
################################################################################
from __future__ import print_function
import collections
import numpy as np

from .constants import CHARBONNIER_EPS
from .image_ops import FlowField, spatiotemporal_derivatives
from .network import TINY_LAYER_TABLE, init_network
from . import loss

__all__ = [ "GradCheckResult", "loss_gradient_suite",
            "network_gradient_suite", "run_gradcheck" ]

LOSS_TOLERANCE = 1e-5
NETWORK_TOLERANCE = 1e-3


class GradCheckResult(collections.namedtuple(
        "GradCheckResult", ["suite", "max_rel_error", "tolerance", "checked",
                            "step"])):
    """Outcome of one suite; checked is the number of compared values and
    step the 64-bit central difference step"""
    __slots__ = ()

    @property
    def passed(self):
        return self.max_rel_error < self.tolerance


def loss_gradient_suite(seed=0, n_instances=100, size=16,
                        epsilon=CHARBONNIER_EPS, h=1e-4,
                        tolerance=LOSS_TOLERANCE):
    """Compare ofc_loss_grad with 64-bit central differences.

    Every instance draws flow components in [-1, 1] and derivatives in
    [-0.5, 0.5] on a size x size grid.
    """
    rng = np.random.default_rng(seed)
    cfg = loss.LossConfig(epsilon)

    worst, count = 0., 0
    for _ in range(n_instances):
        flow = FlowField(rng.uniform(-1, 1, (size, size)),
                         rng.uniform(-1, 1, (size, size)))
        Ix, Iy, It = rng.uniform(-0.5, 0.5, (3, size, size))

        analytic = loss.ofc_loss_grad(flow, Ix, Iy, It, cfg)
        numeric = loss.finite_difference_grad(flow, Ix, Iy, It, cfg, h)

        err = loss.relative_error(analytic.data, numeric.data, floor=1e-6)
        worst = max(worst, float(err.max()))
        count += err.size

    return GradCheckResult("loss_gradient", worst, tolerance, count, h)

################################################################################
# End to end
################################################################################
def _network_loss(net, frame1, frame2, derivs, cfg):
    """Pixel-normalised loss and the activation signs of the forward pass"""
    flow = net.forward(frame1, frame2, cache=True)
    E = loss.ofc_loss(flow, *derivs, cfg=cfg) / flow.u.size
    signs = [np.signbit(z) for (x, z), layer in zip(net.cache, net.layers)
             if layer.has_activation]
    return E, signs

def _same_branch(s1, s2):
    return all(np.array_equal(a, b) for a, b in zip(s1, s2))

def _central_difference(net, param, idx, h, frame1, frame2, derivs, cfg):
    """(dE/dparam[idx], smooth) where smooth is False across a kink"""
    w0 = param[idx]
    param[idx] = w0 + h
    Ep, sp = _network_loss(net, frame1, frame2, derivs, cfg)
    param[idx] = w0 - h
    Em, sm = _network_loss(net, frame1, frame2, derivs, cfg)
    param[idx] = w0
    return (Ep - Em) / (2*h), _same_branch(sp, sm)

def network_gradient_suite(seed=0, size=8, h=1e-6,
                           epsilon=CHARBONNIER_EPS,
                           tolerance=NETWORK_TOLERANCE):
    """Compare back-propagated parameter gradients of the reduced network
    with central differences of the composed loss.

    The network is copied to 64-bit and perturbed by h = 1e-6. The trained
    networks are 32-bit, but a 32-bit forward pass with h = 1e-2 has
    rounding and rectifier kink errors well above the 1e-3 tolerance, so the
    reported error is always the 64-bit one.

    Components whose perturbation flips any leaky rectifier input are not
    differentiable at that step size and are skipped. A random directional
    derivative over all parameters is checked as well.
    """
    rng = np.random.default_rng(seed)
    cfg = loss.LossConfig(epsilon)
    net = init_network(seed, TINY_LAYER_TABLE, dtype='f8')

    frame1 = rng.uniform(0, 1, (size, size))
    frame2 = rng.uniform(0, 1, (size, size))
    derivs = spatiotemporal_derivatives(frame1, frame2)

    flow = net.forward(frame1, frame2, cache=True)
    g = loss.ofc_loss_grad(flow, *derivs, cfg=cfg)
    npix = flow.u.size
    grads = net.backward(FlowField(g.u / npix, g.v / npix))
    grads = [gr for pair in grads for gr in pair]

    worst, count = 0., 0
    for param, grad in zip(net.parameters(), grads):
        for idx in np.ndindex(*param.shape):
            numeric, smooth = _central_difference(net, param, idx, h, frame1,
                                                  frame2, derivs, cfg)
            if not smooth:
                continue
            err = loss.relative_error(grad[idx], numeric, floor=1e-6)
            worst = max(worst, float(err))
            count += 1

    # Directional derivative along a random unit direction
    params = net.parameters()
    direction = [rng.standard_normal(p.shape) for p in params]
    norm = np.sqrt(sum((d*d).sum() for d in direction))
    direction = [d / norm for d in direction]

    saved = [p.copy() for p in params]
    for p, d, s in zip(params, direction, saved):
        p[...] = s + h*d
    Ep, sp = _network_loss(net, frame1, frame2, derivs, cfg)
    for p, d, s in zip(params, direction, saved):
        p[...] = s - h*d
    Em, sm = _network_loss(net, frame1, frame2, derivs, cfg)
    for p, s in zip(params, saved):
        p[...] = s

    if _same_branch(sp, sm):
        analytic = sum((gr*d).sum() for gr, d in zip(grads, direction))
        err = loss.relative_error(analytic, (Ep - Em) / (2*h), floor=1e-6)
        worst = max(worst, float(err))
        count += 1

    return GradCheckResult("network_gradient", worst, tolerance, count, h)


def run_gradcheck(seed=0):
    """Both suites, in reporting order"""
    return [loss_gradient_suite(seed), network_gradient_suite(seed)]
