# trainer.py
#
# Date: 14 - Mar - 2024
#
# Unsupervised training: frame pair ingestion, a single forward / loss /
# backward / ADAM step, and the binary checkpoint format.
################################################################################
from __future__ import print_function
import collections
import os
import struct
import sys
import warnings
import numpy as np

from .constants import (LEARNING_RATE, BETA1, BETA2, EPS_ADAM, BATCH_SIZE,
                        EPOCHS, CHARBONNIER_EPS, CROP_SIZE, NET_DIVISOR,
                        CHECKPOINT_MAGIC, CHECKPOINT_VERSION)
from .errors import (ConfigurationError, EmptyDatasetError, NumericalError,
                     CheckpointError, ImageFormatError)
from .image_ops import Image, FlowField, spatiotemporal_derivatives
from .loss import LossConfig, ofc_loss, ofc_loss_grad
from .network import EncoderDecoderNet
from .tensor import ConvLayer, AdamState
from .utils import make_ASCII_header
from . import io

__all__ = [ "TrainConfig", "FramePair", "FramePairDataset", "ingest_pairs",
            "train_step", "evaluate_pair",
            "save_checkpoint", "load_checkpoint" ]

IMAGE_EXTENSIONS = ('.pgm', '.pnm', '.ppm', '.png', '.bmp', '.tif', '.tiff',
                    '.jpg', '.jpeg')
FLOW_EXTENSION = '.flo'

################################################################################
# Configuration
################################################################################
class TrainConfig(object):
    """Training hyper-parameters.

    args:
        learning_rate        : ADAM step size, default=1e-4
        beta1, beta2         : ADAM decay rates, default=0.9, 0.999
        epsilon_adam         : ADAM denominator floor, default=1e-8
        batch_size           : pairs per (gradient averaged) step, default=8
        epochs               : passes over the data set, default=1
        charbonnier_epsilon  : loss smoothing constant, default=1e-3
        crop_size            : (height, width) of training crops, both
                               divisible by 16, default=(128, 96)
        seed                 : seed for initialisation, crops and ordering
    """
    def __init__(self, learning_rate=LEARNING_RATE, beta1=BETA1, beta2=BETA2,
                 epsilon_adam=EPS_ADAM, batch_size=BATCH_SIZE, epochs=EPOCHS,
                 charbonnier_epsilon=CHARBONNIER_EPS, crop_size=CROP_SIZE,
                 seed=0):
        crop_size = tuple(int(c) for c in crop_size)
        if len(crop_size) != 2 or min(crop_size) < 1:
            raise ConfigurationError("crop_size must be (height, width)")
        if crop_size[0] % NET_DIVISOR or crop_size[1] % NET_DIVISOR:
            raise ConfigurationError("crop_size {}x{} must be divisible by "
                                     "{}".format(crop_size[0], crop_size[1],
                                                 NET_DIVISOR))
        if batch_size < 1 or epochs < 1:
            raise ConfigurationError("batch_size and epochs must be >= 1")

        # Validates the ADAM and loss parameters
        AdamState((1,), learning_rate, beta1, beta2, epsilon_adam)
        self._loss = LossConfig(charbonnier_epsilon)

        self.learning_rate = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.epsilon_adam = float(epsilon_adam)
        self.batch_size = int(batch_size)
        self.epochs = int(epochs)
        self.crop_size = crop_size
        self.seed = int(seed)

    @property
    def charbonnier_epsilon(self):
        return self._loss.epsilon

    @property
    def loss_config(self):
        return self._loss

    def ASCII_header(self):
        """TrainConfig header, followed by the loss header"""
        return (make_ASCII_header(self.HDF5_attributes()) + '\n' +
                self._loss.ASCII_header())

    def HDF5_attributes(self):
        """Class information for HDF5 headers"""
        def fmt(x):  return "{}".format(x)
        return self.__class__.__name__, { "lr" : fmt(self.learning_rate),
                                          "beta1" : fmt(self.beta1),
                                          "beta2" : fmt(self.beta2),
                                          "eps_adam" : fmt(self.epsilon_adam),
                                          "batch" : fmt(self.batch_size),
                                          "epochs" : fmt(self.epochs),
                                          "crop" : "{}x{}".format(*self.crop_size),
                                          "seed" : fmt(self.seed),
                                          }

################################################################################
# Data
################################################################################
FramePair = collections.namedtuple("FramePair", ["frame1", "frame2", "truth"])


class FramePairDataset(object):
    """Consecutive frame pairs found under a root directory.

    args:
        root  : directory that was scanned
        pairs : list of FramePair (paths)
        seed  : seed for the per-epoch ordering and crops
    """
    def __init__(self, root, pairs, seed=0):
        self._root = root
        self._pairs = list(pairs)
        self._seed = int(seed)

    @property
    def root(self):
        return self._root
    @property
    def pairs(self):
        return self._pairs

    def __len__(self):
        return len(self._pairs)

    def __getitem__(self, i):
        return self._pairs[i]

    def epoch_order(self, epoch):
        """Shuffled pair indices, a pure function of (seed, epoch)"""
        rng = np.random.default_rng([self._seed, epoch])
        return rng.permutation(len(self._pairs))

    def crop_generator(self, epoch):
        """Random generator for the crops of one epoch"""
        return np.random.default_rng([self._seed, epoch, 1])

    def load_pair(self, i, crop_size=None, rng=None):
        """Read pair i, optionally taking a random crop of crop_size.

        Returns (frame1, frame2) as Images, or None (with a warning) when the
        pair cannot be read or is smaller than the crop.
        """
        pair = self._pairs[i]
        try:
            I1 = io.read_image(pair.frame1)
            I2 = io.read_image(pair.frame2)
        except ImageFormatError as e:
            warnings.warn("Skipping pair {}: {}".format(i, e))
            return None

        if I1.shape != I2.shape:
            warnings.warn("Skipping pair {}: frame extents differ ({} vs {})"
                          .format(i, I1.shape, I2.shape))
            return None

        if crop_size is None:
            return I1, I2

        H, W = I1.shape
        ch, cw = crop_size
        if H < ch or W < cw:
            warnings.warn("Skipping pair {}: {}x{} is smaller than the crop "
                          "{}x{}".format(i, H, W, ch, cw))
            return None

        if rng is None:
            y0, x0 = (H - ch) // 2, (W - cw) // 2
        else:
            y0 = int(rng.integers(0, H - ch + 1))
            x0 = int(rng.integers(0, W - cw + 1))
        window = (slice(y0, y0 + ch), slice(x0, x0 + cw))
        return Image(I1.data[window]), Image(I2.data[window])


def _is_image(name):
    return os.path.splitext(name)[1].lower() in IMAGE_EXTENSIONS

def ingest_pairs(root, seed=0, verbose=False):
    """Enumerate consecutive frame pairs in root and its sub-directories.

    Every directory is a sequence whose frames are ordered by file name.
    Non-image files are skipped with a warning; .flo files named after the
    first frame of a pair are attached to it as ground truth.

    args:
        root    : data directory
        seed    : seed stored on the dataset
        verbose : print the number of pairs found
    returns:
        FramePairDataset
    """
    if not os.path.isdir(root):
        raise EmptyDatasetError("Data directory {} does not exist".format(root))

    pairs = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()

        frames = []
        for name in sorted(filenames):
            if name.startswith('.'):
                continue
            if _is_image(name):
                frames.append(name)
            elif not name.lower().endswith(FLOW_EXTENSION):
                warnings.warn("Skipping non-image file {}".format(
                    os.path.join(dirpath, name)))

        names = set(filenames)
        for f0, f1 in zip(frames[:-1], frames[1:]):
            flo = os.path.splitext(f0)[0] + FLOW_EXTENSION
            truth = os.path.join(dirpath, flo) if flo in names else None
            pairs.append(FramePair(os.path.join(dirpath, f0),
                                   os.path.join(dirpath, f1), truth))

    if not pairs:
        raise EmptyDatasetError("No frame pairs found in {}".format(root))

    if verbose:
        print('Found {} frame pairs in {}'.format(len(pairs), root),
              file=sys.stderr)

    return FramePairDataset(root, pairs, seed)

################################################################################
# Training step
################################################################################
def _as_batch(pairs):
    """Accept a single (frame1, frame2) pair or a list of them"""
    if len(pairs) == 2 and isinstance(pairs[0], (Image, np.ndarray)):
        return [pairs]
    return list(pairs)

def _diagnostics(net, flow):
    norms = ', '.join('{:.3g}'.format(float(np.linalg.norm(p)))
                      for p in net.parameters()[::2])
    return 'max|u|={:.3g}, max|v|={:.3g}, |W| per layer: {}'.format(
        float(np.nanmax(np.abs(flow.u))), float(np.nanmax(np.abs(flow.v))),
        norms)

def evaluate_pair(net, pair, cfg):
    """Pixel-normalised loss of the network on one pair, no update"""
    frame1, frame2 = pair
    Ix, Iy, It = spatiotemporal_derivatives(frame1, frame2)
    flow = net.forward(frame1, frame2, cache=False)
    return ofc_loss(flow, Ix, Iy, It, cfg.loss_config) / flow.u.size

def train_step(net, pairs, cfg):
    """One ADAM step on a batch of frame pairs.

    For every pair: derivatives from the raw frames, flow from the network,
    the per-pixel loss gradient back-propagated through the network. The
    loss is normalised by the number of pixels and the gradients are
    averaged over the batch (summed in batch order).

    args:
        net   : EncoderDecoderNet (updated in place)
        pairs : (frame1, frame2) or a list of such pairs, already cropped
        cfg   : TrainConfig
    returns:
        mean pixel-normalised loss of the batch (before the update)
    """
    batch = _as_batch(pairs)
    if not batch:
        raise EmptyDatasetError("Empty training batch")

    net.set_optimizer(cfg.learning_rate, cfg.beta1, cfg.beta2,
                      cfg.epsilon_adam)
    loss_cfg = cfg.loss_config
    n = len(batch)

    total, grads = 0., None
    for frame1, frame2 in batch:
        Ix, Iy, It = spatiotemporal_derivatives(frame1, frame2)
        flow = net.forward(frame1, frame2, cache=True)
        npix = flow.u.size

        loss = ofc_loss(flow, Ix, Iy, It, loss_cfg) / npix
        if not np.isfinite(loss):
            raise NumericalError("Non-finite loss {}; step aborted ({})"
                                 .format(loss, _diagnostics(net, flow)))

        g = ofc_loss_grad(flow, Ix, Iy, It, loss_cfg)
        scale = 1.0 / (npix * n)
        pair_grads = net.backward(FlowField(g.u * scale, g.v * scale))

        if grads is None:
            grads = pair_grads
        else:
            for acc, new in zip(grads, pair_grads):
                acc[0] += new[0]
                acc[1] += new[1]
        total += loss

    net.apply_gradients(grads)

    for p in net.parameters():
        if not np.all(np.isfinite(p)):
            raise NumericalError("Non-finite parameters after the update")

    return total / n

################################################################################
# Checkpoints
################################################################################
# Layout (little endian):
#   4s   magic "USCN"
#   u32  format version
#   u32  number of layers, then per layer 6 x u32:
#        kernel, in channels, out channels, stride, upsample, activation
#   4 x f64  ADAM learning rate, beta1, beta2, epsilon
#   per parameter (weights then bias, layer order):
#        u64 ADAM step count, then three length prefixed (u32 count) float32
#        arrays: parameter, first moment, second moment
def _pack_array(a):
    a = np.ascontiguousarray(a, dtype='<f4').ravel()
    return struct.pack('<I', a.size) + a.tobytes()

def save_checkpoint(net, filename):
    """Write the network parameters and optimiser state"""
    chunks = [CHECKPOINT_MAGIC, struct.pack('<I', CHECKPOINT_VERSION),
              struct.pack('<I', len(net.layers))]
    for row in net.layer_table():
        chunks.append(struct.pack('<6I', *[int(x) for x in row]))

    states = net.optimizer_states()
    s0 = states[0]
    chunks.append(struct.pack('<4d', s0.learning_rate, s0.beta1, s0.beta2,
                              s0.epsilon_adam))

    for p, s in zip(net.parameters(), states):
        chunks.append(struct.pack('<Q', s.step_count))
        chunks += [_pack_array(p), _pack_array(s.first_moment),
                   _pack_array(s.second_moment)]

    with open(filename, 'wb') as f:
        f.write(b''.join(chunks))


class _Reader(object):
    """Sequential reader that reports truncation as CheckpointError"""
    def __init__(self, raw, filename):
        self._raw = raw
        self._pos = 0
        self._name = filename

    def take(self, n):
        if self._pos + n > len(self._raw):
            raise CheckpointError("{}: truncated, expected {} more bytes at "
                                  "offset {}, found {}".format(
                                      self._name, n, self._pos,
                                      len(self._raw) - self._pos))
        out = self._raw[self._pos:self._pos + n]
        self._pos += n
        return out

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, shape):
        count, = self.unpack('<I')
        expected = int(np.prod(shape))
        if count != expected:
            raise CheckpointError("{}: array of {} values found, expected {}"
                                  .format(self._name, count, expected))
        data = np.frombuffer(self.take(4 * count), dtype='<f4')
        return data.astype('f4').reshape(shape)

    def finished(self):
        return self._pos == len(self._raw)


def load_checkpoint(filename):
    """Read a network written by save_checkpoint.

    Raises CheckpointError on a bad magic string, a different format version
    or a truncated file; no partial network is returned.
    """
    with open(filename, 'rb') as f:
        r = _Reader(f.read(), filename)

    magic = r.take(len(CHECKPOINT_MAGIC))
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError("{}: bad magic {!r}, expected {!r}".format(
            filename, magic, CHECKPOINT_MAGIC))
    version, = r.unpack('<I')
    if version != CHECKPOINT_VERSION:
        raise CheckpointError("{}: format version mismatch, expected {}, "
                              "found {}".format(filename, CHECKPOINT_VERSION,
                                                version))

    n_layers, = r.unpack('<I')
    table = [r.unpack('<6I') for _ in range(n_layers)]
    lr, beta1, beta2, eps = r.unpack('<4d')

    layers, states = [], []
    for K, Cin, Cout, stride, up, act in table:
        params = []
        for shape in [(Cout, Cin, K, K), (Cout,)]:
            step, = r.unpack('<Q')
            p = r.array(shape)
            s = AdamState(shape, lr, beta1, beta2, eps)
            s.first_moment = r.array(shape)
            s.second_moment = r.array(shape)
            s.step_count = step
            params.append((p, s))
        (W, sW), (b, sb) = params
        try:
            layers.append(ConvLayer(W, b, stride, bool(act), bool(up)))
        except ConfigurationError as e:
            raise CheckpointError("{}: invalid layer table: {}".format(
                filename, e))
        states.append([sW, sb])

    if not r.finished():
        raise CheckpointError("{}: unexpected trailing data".format(filename))

    try:
        return EncoderDecoderNet(layers, states)
    except ConfigurationError as e:
        raise CheckpointError("{}: invalid layer table: {}".format(filename,
                                                                   e))
