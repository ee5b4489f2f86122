# metrics.py
#
# Date: 12 - Mar - 2024
#
# Flow evaluation: average end-point error (AEE) and average angular error
# (AAE), split by ground truth magnitude into motions below and at or above
# 5 pixels.
################################################################################
from __future__ import print_function
import numpy as np

from .constants import LARGE_MOTION
from .errors import ShapeError

__all__ = [ "FlowMetrics", "compute_metrics", "average_metrics",
            "endpoint_error", "angular_error" ]

METRIC_LABELS = ["AEE-05", "AEE-5so", "AEE-tot", "AAE-05", "AAE-5so", "AAE-tot"]


class FlowMetrics(object):
    """Bucketed error averages.

    AEE values are in pixels, AAE values in degrees. Buckets are ground truth
    magnitude < 5 px ("lt5") and >= 5 px ("ge5"). An empty bucket has mean 0.
    """
    def __init__(self, aee_lt5, aee_ge5, aae_lt5, aae_ge5, count_lt5,
                 count_ge5):
        self.aee_lt5 = float(aee_lt5)
        self.aee_ge5 = float(aee_ge5)
        self.aae_lt5 = float(aae_lt5)
        self.aae_ge5 = float(aae_ge5)
        self.count_lt5 = int(count_lt5)
        self.count_ge5 = int(count_ge5)

    @property
    def count(self):
        return self.count_lt5 + self.count_ge5

    def _total(self, lt5, ge5):
        if self.count == 0:
            return 0.
        return (lt5 * self.count_lt5 + ge5 * self.count_ge5) / self.count

    @property
    def aee_tot(self):
        return self._total(self.aee_lt5, self.aee_ge5)

    @property
    def aae_tot(self):
        return self._total(self.aae_lt5, self.aae_ge5)

    def as_rows(self):
        """(label, value) pairs in reporting order"""
        values = [self.aee_lt5, self.aee_ge5, self.aee_tot,
                  self.aae_lt5, self.aae_ge5, self.aae_tot]
        return list(zip(METRIC_LABELS, values))

    def __repr__(self):
        return "FlowMetrics({})".format(", ".join(
            "{}={:.6g}".format(k, v) for k, v in self.as_rows()))


def endpoint_error(eu, ev, tu, tv):
    """Per-pixel Euclidean distance between estimate and truth"""
    return np.hypot(eu - tu, ev - tv)

def angular_error(eu, ev, tu, tv):
    """Per-pixel angle (degrees) between (eu, ev, 1) and (tu, tv, 1)"""
    num = eu*tu + ev*tv + 1
    den = np.sqrt((eu*eu + ev*ev + 1) * (tu*tu + tv*tv + 1))
    return np.degrees(np.arccos(np.clip(num / den, -1, 1)))

def compute_metrics(estimate, truth):
    """Compare an estimated flow field with the ground truth.

    Pixels where the ground truth is not finite are excluded.

    args:
        estimate, truth : FlowField of equal extent
    returns:
        FlowMetrics
    """
    if estimate.shape != truth.shape:
        raise ShapeError("Estimate extents {} differ from ground truth "
                         "{}".format(estimate.shape, truth.shape))

    eu = np.asarray(estimate.u, dtype='f8')
    ev = np.asarray(estimate.v, dtype='f8')
    tu = np.asarray(truth.u, dtype='f8')
    tv = np.asarray(truth.v, dtype='f8')

    valid = np.isfinite(tu) & np.isfinite(tv)
    eu, ev, tu, tv = eu[valid], ev[valid], tu[valid], tv[valid]

    epe = endpoint_error(eu, ev, tu, tv)
    ang = angular_error(eu, ev, tu, tv)

    small = np.hypot(tu, tv) < LARGE_MOTION
    large = ~small

    def mean(x, m):
        return x[m].mean() if m.any() else 0.

    return FlowMetrics(mean(epe, small), mean(epe, large),
                       mean(ang, small), mean(ang, large),
                       small.sum(), large.sum())

def average_metrics(metrics):
    """Count weighted combination of several FlowMetrics"""
    n_lt5 = sum(m.count_lt5 for m in metrics)
    n_ge5 = sum(m.count_ge5 for m in metrics)

    def avg(attr, count_attr, n):
        if n == 0:
            return 0.
        return sum(getattr(m, attr) * getattr(m, count_attr)
                   for m in metrics) / n

    return FlowMetrics(avg('aee_lt5', 'count_lt5', n_lt5),
                       avg('aee_ge5', 'count_ge5', n_ge5),
                       avg('aae_lt5', 'count_lt5', n_lt5),
                       avg('aae_ge5', 'count_ge5', n_ge5),
                       n_lt5, n_ge5)
