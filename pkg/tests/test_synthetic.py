# test_synthetic.py
#
# Date: 2 - Apr - 2024
#
# Synthetic data with known motion, and the desk-scale training run on it
# (slow, needs --runslow).
###############################################################################
import json
import os
import numpy as np
import pytest

from FlowCNN.synthetic import (random_texture, shifted_pair, make_dataset,
                               desk_experiment)
from FlowCNN.inference import InferenceConfig, estimate_flow
from FlowCNN.errors import ConfigurationError, ShapeError
from FlowCNN import io

SYNTHETIC_MODEL = os.path.join(os.path.dirname(__file__), '..',
                               'control_scripts', 'FlowConfig_synthetic.json')


def test_random_texture():
    T = random_texture((40, 30), np.random.default_rng(60))
    assert(T.shape == (40, 30))
    assert(T.min() == 0 and T.max() == 1)

def test_shifted_pair_integer_shift():
    T = random_texture((40, 40), np.random.default_rng(61))
    f1, f2, truth = shifted_pair(T, (2.0, 1.0), (32, 32), (4, 4))

    # frame2(x + 2, y + 1) == frame1(x, y)
    assert(np.allclose(f2.data[1:, 2:], f1.data[:-1, :-2], atol=1e-9))
    assert(np.all(truth.u == 2.0) and np.all(truth.v == 1.0))

    try:
        shifted_pair(T, (5.0, 0.0), (32, 32), (4, 4))
        failed = False
    except ShapeError:
        failed = True
    assert(failed)

def test_make_dataset_static_fraction(tmp_path):
    shifts = make_dataset(str(tmp_path), 10, size=(16, 16), seed=62,
                          static_fraction=0.2)
    assert(len(shifts) == 10)
    for i, s in enumerate(shifts):
        if i in (4, 9):
            assert(s == (0., 0.))
        else:
            assert(s != (0., 0.))

    seq = str(tmp_path / 'seq_0004')
    f1 = io.read_image(os.path.join(seq, 'frame_0.pgm'))
    f2 = io.read_image(os.path.join(seq, 'frame_1.pgm'))
    assert(np.array_equal(f1.data, f2.data))
    assert(np.all(io.read_flo(os.path.join(seq, 'frame_0.flo')).data == 0))

    # The static pairs do not change the textures of the others
    plain = make_dataset(str(tmp_path / 'plain'), 10, size=(16, 16), seed=62)
    assert(shifts[3] == plain[3])

def test_make_dataset_bad_fraction(tmp_path):
    for fraction in [-0.1, 1.5]:
        try:
            make_dataset(str(tmp_path), 2, size=(16, 16),
                         static_fraction=fraction)
            failed = False
        except ConfigurationError:
            failed = True
        assert(failed)

###############################################################################
# Desk-scale training run
###############################################################################
@pytest.fixture(scope='module')
def desk(tmp_path_factory):
    with open(SYNTHETIC_MODEL) as f:
        model = json.load(f)
    result = desk_experiment(str(tmp_path_factory.mktemp('desk')), model,
                             verbose=False)
    return result, InferenceConfig(**model['inference'])

@pytest.mark.slow
def test_desk_held_out_error(desk):
    result, _ = desk
    assert(result.metrics.count > 0)
    assert(result.metrics.aee_tot < 0.5)

    n = len(result.history)
    assert(result.history.window_mean(n - 100, n) <
           result.history.window_mean(0, 100))

@pytest.mark.slow
def test_desk_static_pair(desk):
    result, cfg = desk
    I = random_texture((64, 64), np.random.default_rng(63), 2.0)
    flow = estimate_flow(result.net, I, I, cfg)
    assert(flow.magnitude.mean() < 0.3)

@pytest.mark.slow
def test_desk_large_shift_three_scales(desk):
    result, _ = desk
    T = random_texture((144, 144), np.random.default_rng(64), 3.0)
    f1, f2, _ = shifted_pair(T, (3.0, 0.0), (128, 128), (8, 8))

    flow = estimate_flow(result.net, f1, f2, InferenceConfig(num_scales=3))
    assert(abs(np.median(flow.u) - 3.0) < 0.5)
    assert(abs(np.median(flow.v)) < 0.5)
