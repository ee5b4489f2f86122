# synthetic.py
#
# Date: 21 - Mar - 2024
#
# Synthetic training and test data with known motion: blurred random
# textures and pairs related by a constant sub-pixel displacement. Also the
# desk-scale experiment that trains the full network on such data and
# scores it on held-out pairs.
################################################################################
from __future__ import print_function
import collections
import os
import sys
import numpy as np
from scipy import ndimage

from .driver import TrainingDriver
from .errors import ShapeError, ConfigurationError
from .image_ops import Image, FlowField
from .inference import InferenceConfig, evaluate_dataset
from .network import init_network
from .trainer import TrainConfig, ingest_pairs
from .utils import mkdir_p
from . import io

__all__ = [ "random_texture", "shifted_pair", "random_shift", "make_dataset",
            "DeskResult", "desk_experiment" ]


def random_texture(shape, rng, sigma=2.0):
    """Uniform noise, Gaussian blurred and rescaled to [0, 1]"""
    T = ndimage.gaussian_filter(rng.uniform(0, 1, shape), sigma,
                                mode='nearest')
    lo, hi = T.min(), T.max()
    if hi > lo:
        T = (T - lo) / (hi - lo)
    return T


def shifted_pair(texture, shift, size, offset):
    """Two frames of texture related by a constant flow.

    frame1 is the size window of texture starting at offset (row, col).
    frame2 is sampled (cubic spline) so that frame2(x + u, y + v) equals
    frame1(x, y), i.e. the flow from frame1 to frame2 is shift = (u, v).

    returns:
        frame1, frame2 (Image), truth (FlowField)
    """
    u, v = shift
    h, w = size
    y0, x0 = offset
    if (y0 - abs(v) < 0 or x0 - abs(u) < 0 or
            y0 + h + abs(v) > texture.shape[0] or
            x0 + w + abs(u) > texture.shape[1]):
        raise ShapeError("Shift {} leaves the texture from offset "
                         "{}".format(shift, offset))

    frame1 = texture[y0:y0 + h, x0:x0 + w].copy()

    y, x = np.mgrid[0:h, 0:w].astype('f8')
    coords = np.array([y0 + y - v, x0 + x - u])
    frame2 = ndimage.map_coordinates(texture, coords, order=3, mode='nearest')

    truth = FlowField(np.full(size, float(u)), np.full(size, float(v)))
    return Image(frame1), Image(np.clip(frame2, 0, 1)), truth


def random_shift(rng, max_shift):
    """Displacement with magnitude uniform over the disc of radius max_shift"""
    r = max_shift * np.sqrt(rng.uniform())
    theta = rng.uniform(0, 2*np.pi)
    return r * np.cos(theta), r * np.sin(theta)


def make_dataset(root, n_pairs, size=(64, 64), max_shift=2.0, seed=0,
                 sigma=2.0, static_fraction=0.):
    """Write n_pairs shifted texture pairs under root.

    Each pair is its own sequence directory holding frame_0.pgm,
    frame_1.pgm and the ground truth frame_0.flo. A static_fraction of the
    pairs (every k-th directory) gets a zero shift.

    returns:
        list of the (u, v) shifts, in directory order
    """
    if not 0 <= static_fraction <= 1:
        raise ConfigurationError("static_fraction must lie in [0, 1], found "
                                 "{}".format(static_fraction))
    rng = np.random.default_rng(seed)
    margin = int(np.ceil(max_shift)) + 2
    shape = (size[0] + 2*margin, size[1] + 2*margin)

    every = int(round(1 / static_fraction)) if static_fraction > 0 else 0

    shifts = []
    for i in range(n_pairs):
        texture = random_texture(shape, rng, sigma)
        shift = random_shift(rng, max_shift)
        if every and i % every == every - 1:
            shift = (0., 0.)
        frame1, frame2, truth = shifted_pair(texture, shift, size,
                                             (margin, margin))

        seq = os.path.join(root, 'seq_{:04d}'.format(i))
        mkdir_p(seq)
        io.write_image(frame1, os.path.join(seq, 'frame_0.pgm'))
        io.write_image(frame2, os.path.join(seq, 'frame_1.pgm'))
        io.write_flo(truth, os.path.join(seq, 'frame_0.flo'))
        shifts.append(shift)

    return shifts

################################################################################
# Desk-scale experiment
################################################################################
DeskResult = collections.namedtuple("DeskResult", ["net", "history",
                                                   "metrics"])


def desk_experiment(directory, model, n_train=500, n_test=50, size=(64, 64),
                    max_shift=2.0, sigma=2.0, static_fraction=0.1,
                    verbose=True, n_print=100):
    """Train the full network on synthetic pairs and score held-out pairs.

    The training set lives in directory/train (with static_fraction zero
    shift pairs), the held-out set in directory/test (shifted pairs only,
    different seed). The checkpoint and the loss trace are written to
    directory/net.uscn and directory/loss.csv.

    args:
        directory : output directory
        model     : dict with "train", "loss" and "inference" sections
    returns:
        DeskResult(net, history, metrics)
    """
    train = dict(model.get('train', {}))
    if 'epsilon' in model.get('loss', {}):
        train['charbonnier_epsilon'] = model['loss']['epsilon']
    cfg = TrainConfig(**train)
    infer_cfg = InferenceConfig(**model.get('inference', {}))

    train_dir = os.path.join(directory, 'train')
    test_dir = os.path.join(directory, 'test')
    make_dataset(train_dir, n_train, size, max_shift, cfg.seed, sigma,
                 static_fraction)
    make_dataset(test_dir, n_test, size, max_shift, cfg.seed + 1, sigma)

    net = init_network(cfg.seed, learning_rate=cfg.learning_rate,
                       beta1=cfg.beta1, beta2=cfg.beta2,
                       epsilon_adam=cfg.epsilon_adam)
    driver = TrainingDriver(net, ingest_pairs(train_dir, cfg.seed), cfg,
                            checkpoint=os.path.join(directory, 'net.uscn'))
    history = driver.run(verbose=verbose, n_print=n_print)
    history.save(os.path.join(directory, 'loss.csv'),
                 driver.headers() + [infer_cfg.ASCII_header()])

    metrics = evaluate_dataset(net, ingest_pairs(test_dir), infer_cfg)
    if verbose:
        print('Held-out AEE-tot {:.4f} px over {} pairs'.format(
            metrics.aee_tot, n_test), file=sys.stderr)

    return DeskResult(net, history, metrics)
