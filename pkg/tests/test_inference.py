# test_inference.py
#
# Date: 30 - Mar - 2024
#
# Coarse to fine estimation. A global least squares predictor stands in for
# a trained network so the loop can be checked against known motion.
###############################################################################
import os
import numpy as np

from FlowCNN.inference import (InferenceConfig, TraceEntry, default_num_scales,
                               estimate_flow, iteration_trace,
                               estimate_directory, check_warp_consistency,
                               evaluate_dataset)
from FlowCNN.image_ops import (FlowField, Image, spatiotemporal_derivatives,
                               median_filter_flow, bilinear_warp)
from FlowCNN.network import init_network
from FlowCNN.synthetic import random_texture, shifted_pair, make_dataset
from FlowCNN.errors import ConfigurationError, ShapeError, EmptyDatasetError
from FlowCNN.trainer import ingest_pairs
from FlowCNN.utils import num_threads, THREADS_ENV, make_ASCII_header
from FlowCNN import io


class GlobalShiftPredictor(object):
    """Predicts the constant flow minimising the linearised constraint"""
    def __init__(self):
        self.calls = 0

    def forward(self, frame1, frame2, cache=True):
        self.calls += 1
        Ix, Iy, It = spatiotemporal_derivatives(frame1, frame2)
        A = np.array([[np.sum(Ix*Ix), np.sum(Ix*Iy)],
                      [np.sum(Ix*Iy), np.sum(Iy*Iy)]])
        b = -np.array([np.sum(Ix*It), np.sum(Iy*It)])
        u, v = np.linalg.lstsq(A, b, rcond=None)[0]
        return FlowField(np.full(Ix.shape, u), np.full(Ix.shape, v))


def _shift(shift, size=(128, 128), seed=0, sigma=3.0):
    rng = np.random.default_rng(seed)
    T = random_texture((size[0] + 16, size[1] + 16), rng, sigma)
    return shifted_pair(T, shift, size, (8, 8))


def test_config():
    cfg = InferenceConfig()
    assert(cfg.iterations_per_scale == 4 and cfg.median_radius == 2)
    assert(cfg.num_scales is None and cfg.scales_for(128, 128) == 3)
    assert('auto' in cfg.ASCII_header())
    assert(cfg.ASCII_header() == make_ASCII_header(cfg.HDF5_attributes()))

    for kwargs in [dict(num_scales=0), dict(iterations_per_scale=0),
                   dict(median_radius=0)]:
        try:
            InferenceConfig(**kwargs)
            failed = False
        except ConfigurationError:
            failed = True
        assert(failed)

def test_default_num_scales():
    assert(default_num_scales(128, 128) == 3)
    assert(default_num_scales(64, 100) == 2)
    assert(default_num_scales(436, 1024) == 4)
    assert(default_num_scales(20, 20) == 1)

def test_single_pass_is_median_of_network():
    net = init_network(0)
    rng = np.random.default_rng(50)
    f1, f2 = rng.uniform(0, 1, (2, 32, 32))
    cfg = InferenceConfig(num_scales=1, iterations_per_scale=1)

    flow = estimate_flow(net, f1, f2, cfg)
    expected = median_filter_flow(net.forward(f1, f2, cache=False), 2)
    assert(np.array_equal(flow.u, expected.u))
    assert(np.array_equal(flow.v, expected.v))

def test_static_pair():
    f1, _, _ = _shift((0, 0))
    flow, trace = iteration_trace(GlobalShiftPredictor(), f1, f1,
                                  InferenceConfig(num_scales=3))
    assert(np.abs(flow.data).mean() < 1e-6)
    assert(max(E for _, _, E in trace) < 1e-6)

def test_recovers_large_shift():
    f1, f2, truth = _shift((3.0, 0.0))
    cfg = InferenceConfig(num_scales=3)
    net = GlobalShiftPredictor()

    flow, trace = iteration_trace(net, f1, f2, cfg)
    assert(abs(np.median(flow.u) - 3.0) < 0.5)
    assert(abs(np.median(flow.v)) < 0.5)

    assert(len(trace) == 3 * 4 and net.calls == 12)
    assert([s for s, _, _ in trace] == [2]*4 + [1]*4 + [0]*4)
    assert(trace[-1][2] < trace[0][2])

    # Same result without tracing
    again = estimate_flow(GlobalShiftPredictor(), f1, f2, cfg)
    assert(np.array_equal(again.u, flow.u))

def test_trace_improves_over_trials():
    rng = np.random.default_rng(51)
    improved = 0
    for n in range(50):
        f1, f2, _ = _shift((3.0, rng.uniform(-0.5, 0.5)), size=(64, 64),
                           seed=100 + n)
        _, trace = iteration_trace(GlobalShiftPredictor(), f1, f2,
                                   InferenceConfig(num_scales=2))
        improved += trace[-1].mean_photometric_error < \
            trace[0].mean_photometric_error
    assert(improved >= 48)

def test_trace_entries():
    f1, f2, _ = _shift((1.0, 0.5), size=(64, 64))
    _, trace = iteration_trace(GlobalShiftPredictor(), f1, f2,
                               InferenceConfig(num_scales=2,
                                               iterations_per_scale=3))
    assert(TraceEntry._fields == ('scale', 'iteration',
                                  'mean_photometric_error'))
    assert([(e.scale, e.iteration) for e in trace] ==
           [(1, 0), (1, 1), (1, 2), (0, 0), (0, 1), (0, 2)])

    # Per-pixel mean: a constant unit offset scores 1 whatever the flow
    one = np.zeros((16, 16))
    _, trace = iteration_trace(init_network(0), one, one + 1.,
                               InferenceConfig(num_scales=1,
                                               iterations_per_scale=1))
    assert(np.isclose(trace[0].mean_photometric_error, 1.))

def test_output_extents():
    rng = np.random.default_rng(52)
    f1, f2 = rng.uniform(0, 1, (2, 50, 70))
    flow = estimate_flow(GlobalShiftPredictor(), f1, f2,
                         InferenceConfig(num_scales=2, iterations_per_scale=1))
    assert(flow.shape == (50, 70))

    try:
        estimate_flow(GlobalShiftPredictor(), f1, f2[:, :60])
        failed = False
    except ShapeError:
        failed = True
    assert(failed)

def test_warp_consistency():
    rng = np.random.default_rng(53)
    I = Image(rng.uniform(0, 1, (16, 16)))
    flow = FlowField(*rng.uniform(-2, 2, (2, 16, 16)))
    warped = bilinear_warp(I, flow)
    assert(check_warp_consistency(I, flow, warped))

    # Re-warping an already warped image is not the same
    twice = bilinear_warp(warped, flow)
    assert(not check_warp_consistency(I, flow + flow, twice))

def test_estimate_directory(tmp_path):
    shifts = make_dataset(str(tmp_path), 3, size=(64, 64), max_shift=2.0,
                          seed=5, sigma=3.0)
    results = estimate_directory(GlobalShiftPredictor(), str(tmp_path),
                                 threads=2)
    assert(len(results) == 3)
    for (pair, flow), (u, v) in zip(results, shifts):
        assert(os.path.basename(os.path.dirname(pair.frame1)).startswith('seq'))
        truth = io.read_flo(pair.truth)
        assert(np.allclose(truth.u, u, atol=1e-6))
        assert(abs(np.median(flow.u) - u) < 0.5)
        assert(abs(np.median(flow.v) - v) < 0.5)

def test_num_threads(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, '3')
    assert(num_threads() == 3)
    monkeypatch.setenv(THREADS_ENV, 'many')
    assert(num_threads() == 1)
    monkeypatch.setenv(THREADS_ENV, '0')
    assert(num_threads() == 1)
    monkeypatch.delenv(THREADS_ENV)
    assert(num_threads() >= 1)

def test_evaluate_dataset(tmp_path):
    make_dataset(str(tmp_path / 'data'), 4, size=(64, 64), max_shift=2.0,
                 seed=6, sigma=3.0)
    metrics = evaluate_dataset(GlobalShiftPredictor(),
                               ingest_pairs(str(tmp_path / 'data')))
    assert(metrics.count == 4 * 64 * 64)
    assert(metrics.aee_tot < 0.5)

    # Pairs without ground truth are not scored
    os.makedirs(str(tmp_path / 'bare'))
    f1, f2, _ = _shift((1.0, 0.0), size=(32, 32))
    io.write_image(f1, str(tmp_path / 'bare' / 'a.pgm'))
    io.write_image(f2, str(tmp_path / 'bare' / 'b.pgm'))
    try:
        evaluate_dataset(GlobalShiftPredictor(),
                         ingest_pairs(str(tmp_path / 'bare')))
        failed = False
    except EmptyDatasetError:
        failed = True
    assert(failed)
