# tensor.py
#
# Date: 4 - Mar - 2024
#
# Dense tensor primitives used by the network: zero-padded strided
# cross-correlation, leaky rectifier, row/column repeat upsampling and the
# ADAM parameter update, each with its exact backward pass.
#
# Tensors are plain C-ordered numpy arrays. Feature maps are stored as
# [channels, height, width] and filters as [out, in, kernel, kernel].
################################################################################
from __future__ import print_function
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .constants import DTYPE, LEAKY_SLOPE, LEARNING_RATE, BETA1, BETA2, EPS_ADAM
from .errors import ConfigurationError, ShapeError

__all__ = [ "ConvLayer", "AdamState",
            "conv2d_forward", "conv2d_preactivation", "conv2d_backward",
            "leaky_relu", "leaky_relu_backward",
            "upsample_repeat", "upsample_repeat_backward",
            "adam_step" ]

################################################################################
# Layers
################################################################################
class ConvLayer(object):
    """A single convolutional stage of the network.

    The spatial padding is fixed to (K-1)/2 zeros on every side, so that a
    stride 1 layer preserves the spatial size and a stride 2 layer halves it.

    args:
        weights         : filter bank, shape [Cout, Cin, K, K], K odd
        bias            : shape [Cout]
        stride          : 1 or 2, default=1
        has_activation  : apply the leaky rectifier, default=True
        upsample_before : repeat rows and columns x2 before the
                          convolution, default=False
    """
    def __init__(self, weights, bias, stride=1, has_activation=True,
                 upsample_before=False):
        weights = np.asarray(weights)
        bias = np.asarray(bias)

        if weights.ndim != 4 or weights.shape[2] != weights.shape[3]:
            raise ConfigurationError("Weights must have shape [Cout, Cin, K, K]"
                                     ", found {}".format(weights.shape))
        if weights.shape[2] % 2 != 1:
            raise ConfigurationError("Kernel size must be odd, found "
                                     "{}".format(weights.shape[2]))
        if bias.shape != (weights.shape[0],):
            raise ConfigurationError("Bias shape {} does not match {} output "
                                     "channels".format(bias.shape,
                                                       weights.shape[0]))
        if stride not in (1, 2):
            raise ConfigurationError("Stride must be 1 or 2, found "
                                     "{}".format(stride))

        self._W = weights
        self._b = bias
        self._stride = int(stride)
        self._act = bool(has_activation)
        self._up = bool(upsample_before)

    @property
    def weights(self):
        return self._W
    @property
    def bias(self):
        return self._b
    @property
    def stride(self):
        return self._stride
    @property
    def kernel_size(self):
        return self._W.shape[2]
    @property
    def padding(self):
        return (self.kernel_size - 1) // 2
    @property
    def in_channels(self):
        return self._W.shape[1]
    @property
    def out_channels(self):
        return self._W.shape[0]
    @property
    def has_activation(self):
        return self._act
    @property
    def upsample_before(self):
        return self._up

    def output_size(self, H, W):
        """Spatial size of the convolution output for an H x W input"""
        K, p, s = self.kernel_size, self.padding, self.stride
        return (H + 2*p - K) // s + 1, (W + 2*p - K) // s + 1

    def astype(self, dtype):
        """Copy of the layer with parameters cast to dtype"""
        return ConvLayer(self._W.astype(dtype), self._b.astype(dtype),
                         self._stride, self._act, self._up)


################################################################################
# Activation
################################################################################
def leaky_relu(z, slope=LEAKY_SLOPE):
    """Leaky rectifier, max(z, slope*z)"""
    return np.where(z > 0, z, slope * z).astype(z.dtype, copy=False)

def leaky_relu_backward(z, grad_output, slope=LEAKY_SLOPE):
    """Gradient of the leaky rectifier given its input z"""
    return np.where(z > 0, grad_output,
                    slope * grad_output).astype(grad_output.dtype, copy=False)


################################################################################
# Convolution
################################################################################
def _check_input(x, layer):
    if x.ndim != 3:
        raise ConfigurationError("Input must have shape [C, H, W], found "
                                 "{}".format(x.shape))
    if x.shape[0] != layer.in_channels:
        raise ConfigurationError("Input has {} channels, layer expects "
                                 "{}".format(x.shape[0], layer.in_channels))

def _windows(x, layer):
    """Padded input and the strided K x K windows, [Cin, Ho, Wo, K, K]"""
    p, K, s = layer.padding, layer.kernel_size, layer.stride
    xp = np.pad(x, ((0, 0), (p, p), (p, p)), mode='constant')
    Ho, Wo = layer.output_size(x.shape[1], x.shape[2])
    win = sliding_window_view(xp, (K, K), axis=(1, 2))[:, ::s, ::s]
    return xp, win[:, :Ho, :Wo]

def conv2d_preactivation(x, layer):
    """Cross-correlation of x with the layer filters plus bias.

    args:
        x     : input feature map, [Cin, H, W]
        layer : ConvLayer
    returns:
        z : [Cout, Ho, Wo] with Ho = floor((H + 2p - K)/stride) + 1
    """
    _check_input(x, layer)
    _, win = _windows(x, layer)

    z = np.tensordot(layer.weights, win, axes=([1, 2, 3], [0, 3, 4]))
    z += layer.bias[:, None, None]
    return z

def conv2d_forward(x, layer):
    """Convolution followed by the activation (when the layer has one)"""
    z = conv2d_preactivation(x, layer)
    if layer.has_activation:
        return leaky_relu(z)
    return z

def conv2d_backward(x, layer, grad_output, z=None):
    """Exact gradients of a scalar loss through conv2d_forward.

    args:
        x           : the input passed to conv2d_forward
        layer       : ConvLayer
        grad_output : dE/d(output), same shape as the forward output
        z           : pre-activation from the forward pass. Recomputed when
                      not provided.
    returns:
        grad_input, grad_weights, grad_bias
    """
    _check_input(x, layer)
    Ho, Wo = layer.output_size(x.shape[1], x.shape[2])
    if grad_output.shape != (layer.out_channels, Ho, Wo):
        raise ConfigurationError("grad_output shape {} does not match the "
                                 "forward output {}".format(
                                     grad_output.shape,
                                     (layer.out_channels, Ho, Wo)))

    if layer.has_activation:
        if z is None:
            z = conv2d_preactivation(x, layer)
        gz = leaky_relu_backward(z, grad_output)
    else:
        gz = grad_output

    xp, win = _windows(x, layer)

    grad_b = gz.sum(axis=(1, 2))
    grad_W = np.tensordot(gz, win, axes=([1, 2], [1, 2]))

    # Scatter the column gradients back, one kernel offset at a time
    K, s, p = layer.kernel_size, layer.stride, layer.padding
    W = layer.weights
    grad_xp = np.zeros_like(xp, dtype=gz.dtype)
    for i in range(K):
        for j in range(K):
            grad_xp[:, i:i + s*(Ho-1) + 1:s, j:j + s*(Wo-1) + 1:s] += \
                np.tensordot(W[:, :, i, j], gz, axes=([0], [0]))

    H, Wd = x.shape[1:]
    grad_x = grad_xp[:, p:p+H, p:p+Wd]

    return grad_x, grad_W.astype(W.dtype, copy=False), \
        grad_b.astype(layer.bias.dtype, copy=False)


################################################################################
# Upsampling
################################################################################
def upsample_repeat(x, factor):
    """Repeat every row and column of a [C, H, W] map factor times"""
    if factor < 1:
        raise ConfigurationError("Upsampling factor must be >= 1")
    if factor == 1:
        return x.copy()
    return np.repeat(np.repeat(x, factor, axis=-2), factor, axis=-1)

def upsample_repeat_backward(grad_output, factor):
    """Adjoint of upsample_repeat: sum each factor x factor block"""
    if factor < 1:
        raise ConfigurationError("Upsampling factor must be >= 1")
    H, W = grad_output.shape[-2:]
    if (H % factor) or (W % factor):
        raise ShapeError("Extents {}x{} not divisible by {}".format(H, W,
                                                                   factor))
    if factor == 1:
        return grad_output.copy()
    shape = grad_output.shape[:-2] + (H // factor, factor, W // factor, factor)
    return grad_output.reshape(shape).sum(axis=(-3, -1))


################################################################################
# ADAM
################################################################################
class AdamState(object):
    """Moment estimates and hyper-parameters for one parameter tensor.

    args:
        shape         : shape of the parameter
        learning_rate : step size, default=1e-4
        beta1, beta2  : decay rates of the moment estimates
        epsilon_adam  : denominator floor, default=1e-8
        dtype         : storage type of the moments
    """
    def __init__(self, shape, learning_rate=LEARNING_RATE, beta1=BETA1,
                 beta2=BETA2, epsilon_adam=EPS_ADAM, dtype=DTYPE):
        if not (0 < beta1 < 1 and 0 < beta2 < 1):
            raise ConfigurationError("ADAM decay rates must lie in (0, 1)")
        if not epsilon_adam > 0:
            raise ConfigurationError("ADAM epsilon must be positive")
        if learning_rate < 0:
            raise ConfigurationError("Learning rate must be non-negative")

        self.first_moment = np.zeros(shape, dtype=dtype)
        self.second_moment = np.zeros(shape, dtype=dtype)
        self.step_count = 0

        self.learning_rate = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.epsilon_adam = float(epsilon_adam)

    @staticmethod
    def for_param(param, **kwargs):
        """Zero-initialised state matching param"""
        return AdamState(param.shape, dtype=param.dtype, **kwargs)


def adam_step(param, grad, state):
    """Bias-corrected ADAM update, applied in place.

    args:
        param : parameter tensor (updated in place)
        grad  : dE/dparam
        state : AdamState for this parameter (updated in place)
    returns:
        param, state
    """
    if not (param.shape == grad.shape == state.first_moment.shape
            == state.second_moment.shape):
        raise ConfigurationError("ADAM shapes differ: param {}, grad {}, "
                                 "moments {}".format(param.shape, grad.shape,
                                                     state.first_moment.shape))
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2

    m, v = state.first_moment, state.second_moment
    m *= b1
    m += (1 - b1) * grad
    v *= b2
    v += (1 - b2) * (grad * grad)

    m_hat = m / (1 - b1**t)
    v_hat = v / (1 - b2**t)

    param -= (state.learning_rate * m_hat /
              (np.sqrt(v_hat) + state.epsilon_adam)).astype(param.dtype,
                                                          copy=False)
    return param, state
