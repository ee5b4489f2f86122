# network.py
#
# Date: 8 - Mar - 2024
#
# Fully convolutional encoder-decoder mapping a stacked pair of grey-scale
# frames to a dense two channel (u, v) flow field, with the exact backward
# pass and per-parameter ADAM states.
################################################################################
from __future__ import print_function
import copy
import numpy as np

from .constants import DTYPE, LEAKY_SLOPE
from .errors import AdmissibilityError, ConfigurationError, StateError
from .image_ops import FlowField, _as_array
from .tensor import (ConvLayer, AdamState, adam_step, leaky_relu,
                     conv2d_preactivation, conv2d_backward,
                     upsample_repeat, upsample_repeat_backward)
from .utils import make_ASCII_header

__all__ = [ "LAYER_TABLE", "TINY_LAYER_TABLE", "EncoderDecoderNet",
            "init_network", "required_padding", "standardize_pair" ]

# Rows: (kernel, in channels, out channels, stride, upsample before, activation)
LAYER_TABLE = [
    # Encoder
    (7,   2,  16, 2, False, True),
    (5,  16,  32, 2, False, True),
    (3,  32,  64, 2, False, True),
    (3,  64, 128, 2, False, True),
    (3, 128, 128, 1, False, True),
    (3, 128, 128, 1, False, True),
    # Decoder
    (3, 128,  64, 1, True,  True),
    (3,  64,  32, 1, True,  True),
    (3,  32,  16, 1, True,  True),
    (3,  16,  16, 1, True,  True),
    (3,  16,  16, 1, False, True),
    (3,  16,   2, 1, False, False),
]

# Reduced network for end-to-end gradient checks on 8x8 inputs
TINY_LAYER_TABLE = [
    (3, 2, 4, 2, False, True),
    (3, 4, 4, 1, True,  True),
    (3, 4, 2, 1, False, False),
]

# Smallest joint standard deviation used to scale an input pair
STD_FLOOR = 1e-3


def required_padding(H, W, multiple):
    """Rows / columns that must be added to make H x W divisible"""
    return (-H) % multiple, (-W) % multiple


def standardize_pair(I1, I2):
    """Stack two frames as [2, H, W] with zero mean and unit variance.

    The mean and standard deviation are taken over both frames together, so
    a brightness offset or contrast factor common to the pair does not
    change the network input. Nearly flat pairs are divided by STD_FLOOR
    instead of their own deviation.
    """
    x = np.stack([I1, I2]).astype('f8')
    x -= x.mean()
    x /= max(float(x.std()), STD_FLOOR)
    return x


class EncoderDecoderNet(object):
    """Ordered stack of convolutional layers.

    Stride 2 layers halve the spatial extent and decoder layers flagged with
    upsample_before double it again, so the output has the input's extent.
    The two frames enter the first layer through standardize_pair.

    args:
        layers      : list of ConvLayer
        adam_states : list of [AdamState(weights), AdamState(bias)] per layer.
                      Zero-initialised when not given.
    """
    def __init__(self, layers, adam_states=None):
        if len(layers) == 0:
            raise ConfigurationError("Network needs at least one layer")
        for l0, l1 in zip(layers[:-1], layers[1:]):
            if l0.out_channels != l1.in_channels:
                raise ConfigurationError("Channel mismatch between layers: "
                                         "{} -> {}".format(l0.out_channels,
                                                           l1.in_channels))
        if layers[0].in_channels != 2:
            raise ConfigurationError("First layer must take the 2 stacked "
                                     "frames")
        if layers[-1].out_channels != 2 or layers[-1].has_activation:
            raise ConfigurationError("Last layer must be linear with 2 "
                                     "outputs (u, v)")
        n_down = sum(l.stride == 2 for l in layers)
        n_up = sum(l.upsample_before for l in layers)
        if n_down != n_up:
            raise ConfigurationError("{} downsamplings but {} upsamplings"
                                     .format(n_down, n_up))

        self._layers = list(layers)
        self._n_down = n_down

        if adam_states is None:
            adam_states = [[AdamState.for_param(l.weights),
                            AdamState.for_param(l.bias)] for l in layers]
        self._adam = adam_states

        self._cache = None

    @property
    def layers(self):
        return self._layers
    @property
    def adam_states(self):
        return self._adam
    @property
    def upsample_positions(self):
        return [i for i, l in enumerate(self._layers) if l.upsample_before]
    @property
    def num_downsamplings(self):
        return self._n_down
    @property
    def divisor(self):
        """Input extents must be multiples of this"""
        return 2**self._n_down
    @property
    def dtype(self):
        return self._layers[0].weights.dtype
    @property
    def cache(self):
        return self._cache

    def parameters(self):
        """Parameter tensors in checkpoint order: weights, bias per layer"""
        params = []
        for l in self._layers:
            params += [l.weights, l.bias]
        return params

    def optimizer_states(self):
        """AdamState objects in the same order as parameters()"""
        return [s for pair in self._adam for s in pair]

    def set_optimizer(self, learning_rate, beta1, beta2, epsilon_adam):
        """Update the ADAM hyper-parameters, keeping the moments"""
        # Validate through a throw-away state
        AdamState((1,), learning_rate, beta1, beta2, epsilon_adam)
        for s in self.optimizer_states():
            s.learning_rate = float(learning_rate)
            s.beta1 = float(beta1)
            s.beta2 = float(beta2)
            s.epsilon_adam = float(epsilon_adam)

    def check_admissible(self, H, W):
        """Raise AdmissibilityError unless H and W are divisible"""
        d = self.divisor
        if H % d or W % d:
            pH, pW = required_padding(H, W, d)
            raise AdmissibilityError(
                "Input extents {}x{} are not divisible by {}: pad by {} rows "
                "and {} columns".format(H, W, d, pH, pW))

    def forward(self, frame1, frame2, cache=True):
        """Predict the flow from frame1 to frame2.

        args:
            frame1, frame2 : Image or 2D arrays of equal extent
            cache          : keep the activations for backward, default=True
        returns:
            FlowField with the input extents
        """
        I1, I2 = _as_array(frame1), _as_array(frame2)
        if I1.shape != I2.shape:
            raise AdmissibilityError("Frame extents differ: {} vs {}".format(
                I1.shape, I2.shape))
        self.check_admissible(*I1.shape)

        x = standardize_pair(I1, I2).astype(self.dtype)

        stored = []
        for layer in self._layers:
            if layer.upsample_before:
                x = upsample_repeat(x, 2)
            z = conv2d_preactivation(x, layer)
            if cache:
                stored.append((x, z))
            x = leaky_relu(z) if layer.has_activation else z

        self._cache = stored if cache else None
        return FlowField(x[0], x[1])

    def backward(self, grad_flow):
        """Back-propagate dE/dF through the cached forward pass.

        args:
            grad_flow : FlowField of dE/du, dE/dv
        returns:
            list of [grad_weights, grad_bias] per layer
        """
        if self._cache is None:
            raise StateError("backward called without a cached forward pass")

        g = grad_flow.data.astype(self.dtype)
        grads = [None] * len(self._layers)
        for i in reversed(range(len(self._layers))):
            layer = self._layers[i]
            x, z = self._cache[i]
            g, gW, gb = conv2d_backward(x, layer, g, z)
            grads[i] = [gW, gb]
            if layer.upsample_before:
                g = upsample_repeat_backward(g, 2)

        return grads

    def apply_gradients(self, grads):
        """One ADAM step on every parameter"""
        for layer, (gW, gb), (sW, sb) in zip(self._layers, grads, self._adam):
            adam_step(layer.weights, gW, sW)
            adam_step(layer.bias, gb, sb)

    def astype(self, dtype):
        """Copy of the network (and optimiser state) in another precision"""
        layers = [l.astype(dtype) for l in self._layers]
        states = copy.deepcopy(self._adam)
        for s in [s for pair in states for s in pair]:
            s.first_moment = s.first_moment.astype(dtype)
            s.second_moment = s.second_moment.astype(dtype)
        return EncoderDecoderNet(layers, states)

    def layer_table(self):
        """Rows describing the architecture, as in LAYER_TABLE"""
        return [(l.kernel_size, l.in_channels, l.out_channels, l.stride,
                 l.upsample_before, l.has_activation) for l in self._layers]

    def ASCII_header(self):
        """Network header"""
        return make_ASCII_header(self.HDF5_attributes())

    def HDF5_attributes(self):
        """Class information for HDF5 headers"""
        def fmt(x):  return "{}".format(x)
        n_params = sum(p.size for p in self.parameters())
        return self.__class__.__name__, { "layers" : fmt(len(self._layers)),
                                          "downsamplings" : fmt(self._n_down),
                                          "parameters" : fmt(n_params),
                                          "dtype" : fmt(np.dtype(self.dtype)),
                                          }


def init_network(seed, layer_table=LAYER_TABLE, dtype=DTYPE, **adam_kwargs):
    """Create a network with fan-in scaled random weights.

    Hidden layers use He initialisation for the leaky rectifier. The linear
    output layer is scaled down by a further factor 10 so that the initial
    flow is a small fraction of a pixel. Biases start at zero.

    args:
        seed        : seed for the random generator
        layer_table : rows of (K, Cin, Cout, stride, upsample, activation)
        dtype       : parameter precision, default float32
        adam_kwargs : learning_rate, beta1, beta2, epsilon_adam
    """
    rng = np.random.default_rng(seed)

    layers, states = [], []
    for K, Cin, Cout, stride, up, act in layer_table:
        fan_in = Cin * K * K
        if act:
            std = np.sqrt(2.0 / ((1 + LEAKY_SLOPE**2) * fan_in))
        else:
            std = 0.1 * np.sqrt(1.0 / fan_in)
        W = (rng.standard_normal((Cout, Cin, K, K)) * std).astype(dtype)
        b = np.zeros(Cout, dtype=dtype)
        layers.append(ConvLayer(W, b, stride, act, up))
        states.append([AdamState.for_param(W, **adam_kwargs),
                       AdamState.for_param(b, **adam_kwargs)])

    return EncoderDecoderNet(layers, states)
