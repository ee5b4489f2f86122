# inference.py
#
# Date: 18 - Mar - 2024
#
# Test-time flow estimation: coarse to fine over an image pyramid, with a
# fixed number of residual network passes per scale. Every pass is median
# filtered, added to the accumulated flow, and the second frame is warped
# again from the original with the new total.
################################################################################
from __future__ import print_function
import collections
from concurrent.futures import ThreadPoolExecutor
import numpy as np

from .constants import (ITERATIONS_PER_SCALE, MEDIAN_RADIUS, MIN_COARSE_SIDE,
                        NET_DIVISOR)
from .errors import (ConfigurationError, ShapeError, AdmissibilityError,
                     StateError, EmptyDatasetError)
from .image_ops import (FlowField, bilinear_warp, build_pyramid,
                        median_filter_flow, upsample_flow, pad_to_multiple,
                        crop, _as_array)
from .loss import photometric_loss
from .metrics import compute_metrics, average_metrics
from .trainer import ingest_pairs
from .utils import num_threads, make_ASCII_header
from . import io

__all__ = [ "InferenceConfig", "TraceEntry", "default_num_scales",
            "estimate_flow", "iteration_trace", "estimate_directory",
            "evaluate_dataset" ]

# Maximum deviation between the carried warped frame and a fresh warp
WARP_TOLERANCE = 1e-6

# One pass of the coarse to fine loop. mean_photometric_error is the sum of
# squared differences between frame1 and the warped frame2 divided by the
# number of pixels of the level.
TraceEntry = collections.namedtuple("TraceEntry", ["scale", "iteration",
                                                   "mean_photometric_error"])


class InferenceConfig(object):
    """Parameters of the coarse to fine estimation.

    args:
        num_scales           : pyramid levels (k+1, coarsest factor 2^k).
                               None picks default_num_scales for each input.
        iterations_per_scale : network passes per level, default=4
        median_radius        : radius of the median filter, default=2
    """
    def __init__(self, num_scales=None, iterations_per_scale=ITERATIONS_PER_SCALE,
                 median_radius=MEDIAN_RADIUS):
        if num_scales is not None and num_scales < 1:
            raise ConfigurationError("num_scales must be >= 1")
        if iterations_per_scale < 1:
            raise ConfigurationError("iterations_per_scale must be >= 1")
        if median_radius < 1:
            raise ConfigurationError("median_radius must be >= 1")

        self._scales = None if num_scales is None else int(num_scales)
        self._iters = int(iterations_per_scale)
        self._radius = int(median_radius)

    @property
    def num_scales(self):
        return self._scales
    @property
    def iterations_per_scale(self):
        return self._iters
    @property
    def median_radius(self):
        return self._radius

    def scales_for(self, H, W):
        if self._scales is None:
            return default_num_scales(H, W)
        return self._scales

    def ASCII_header(self):
        """InferenceConfig header"""
        return make_ASCII_header(self.HDF5_attributes())

    def HDF5_attributes(self):
        """Class information for HDF5 headers"""
        def fmt(x):  return "{}".format(x)
        scales = "auto" if self._scales is None else self._scales
        return self.__class__.__name__, { "scales" : fmt(scales),
                                          "iterations" : fmt(self._iters),
                                          "median_radius" : fmt(self._radius),
                                          }


def default_num_scales(H, W, min_side=MIN_COARSE_SIDE):
    """Largest k+1 such that the coarsest level keeps a side >= min_side"""
    side = min(H, W)
    k = 0
    while side / 2.0**(k + 1) >= min_side:
        k += 1
    return k + 1


def _coarse_to_fine(net, frame1, frame2, cfg, trace=None):
    I1, I2 = _as_array(frame1), _as_array(frame2)
    if I1.shape != I2.shape:
        raise ShapeError("Frame extents differ: {} vs {}".format(I1.shape,
                                                                 I2.shape))
    H, W = I1.shape
    n_scales = cfg.scales_for(H, W)
    multiple = getattr(net, 'divisor', NET_DIVISOR) * 2**(n_scales - 1)

    P1 = build_pyramid(pad_to_multiple(I1, multiple), n_scales)
    P2 = build_pyramid(pad_to_multiple(I2, multiple), n_scales)

    F_tot = None
    for level in reversed(range(n_scales)):
        f1, f2 = P1[level], P2[level]
        if F_tot is None:
            F_tot = FlowField.zeros(*f1.shape)
            warped2 = f2
        else:
            F_tot = upsample_flow(F_tot)
            warped2 = bilinear_warp(f2, F_tot)

        for it in range(cfg.iterations_per_scale):
            dF = net.forward(f1, warped2, cache=False)
            dF = median_filter_flow(dF, cfg.median_radius)
            F_tot = F_tot + dF
            warped2 = bilinear_warp(f2, F_tot)

            if trace is not None:
                if not check_warp_consistency(f2, F_tot, warped2):
                    raise StateError("Warped frame drifted from "
                                     "warp(frame2, F_tot)")
                trace.append(TraceEntry(
                    level, it, photometric_loss(f1, warped2) / f1.data.size))

    flow = crop(F_tot, H, W)
    if flow.shape != (H, W):
        raise AdmissibilityError("Estimated flow {} does not cover the "
                                 "input {}".format(flow.shape, (H, W)))
    return flow


def estimate_flow(net, frame1, frame2, cfg=None):
    """Coarse to fine flow estimate from frame1 to frame2.

    Frames are edge-padded so that every pyramid level is admissible for the
    network; the padded margins are cropped from the result.

    args:
        net            : predictor with forward(frame1, frame2, cache)
        frame1, frame2 : Image or 2D arrays of equal extent
        cfg            : InferenceConfig, default=InferenceConfig()
    returns:
        FlowField with the extents of the frames
    """
    if cfg is None:
        cfg = InferenceConfig()
    return _coarse_to_fine(net, frame1, frame2, cfg)


def iteration_trace(net, frame1, frame2, cfg=None):
    """estimate_flow, also returning the mean photometric error per pass.

    Each entry holds photometric_loss(frame1, warped2) of the current level
    divided by the pixel count of that level, so values from different
    levels can be compared.

    returns:
        flow, [TraceEntry(scale, iteration, mean_photometric_error), ...]
        with scale 0 the finest level
    """
    if cfg is None:
        cfg = InferenceConfig()
    trace = []
    flow = _coarse_to_fine(net, frame1, frame2, cfg, trace)
    return flow, trace


def check_warp_consistency(frame2, flow, warped2, tol=WARP_TOLERANCE):
    """True if warped2 equals a fresh warp of frame2 with flow"""
    fresh = _as_array(bilinear_warp(frame2, flow))
    return np.max(np.abs(fresh - _as_array(warped2))) <= tol


def estimate_directory(net, root, cfg=None, threads=None):
    """Run estimate_flow on every consecutive frame pair under root.

    Pairs are estimated concurrently (threads, default from USCNN_THREADS);
    the result order is the pair order.

    returns:
        list of (FramePair, FlowField)
    """
    if cfg is None:
        cfg = InferenceConfig()
    if threads is None:
        threads = num_threads()

    dataset = ingest_pairs(root)

    def work(pair):
        return estimate_flow(net, io.read_image(pair.frame1),
                             io.read_image(pair.frame2), cfg)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        flows = list(pool.map(work, dataset.pairs))

    return list(zip(dataset.pairs, flows))


def evaluate_dataset(net, dataset, cfg=None):
    """Average AEE / AAE of estimate_flow over the pairs with ground truth.

    returns:
        FlowMetrics aggregated over every evaluated pair
    """
    if cfg is None:
        cfg = InferenceConfig()

    metrics = []
    for pair in dataset.pairs:
        if pair.truth is None:
            continue
        flow = estimate_flow(net, io.read_image(pair.frame1),
                             io.read_image(pair.frame2), cfg)
        metrics.append(compute_metrics(flow, io.read_flo(pair.truth)))

    if not metrics:
        raise EmptyDatasetError("No pairs with ground truth in {}".format(
            dataset.root))
    return average_metrics(metrics)
