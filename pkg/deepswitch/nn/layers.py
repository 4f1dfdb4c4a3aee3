"""
Layers of the feedforward networks.

Each layer maps a batch of row vectors forward, records what its backward
pass needs, and maps an output cotangent back to an input cotangent together
with the gradients of its parameters.
"""

import numpy as np

from ..errors import TrainingError

ACTIVATIONS = ('relu', 'tanh')


class Layer:

    kind = None

    def __init__(self):
        self._cache = None

    @property
    def input_dim(self):
        raise NotImplementedError

    @property
    def output_dim(self):
        return self.input_dim

    def parameters(self):
        return {}

    def _recorded(self):
        if self._cache is None:
            raise TrainingError("{} layer: backward called without a recorded forward pass".format(self.kind))
        return self._cache

    def forget(self):
        self._cache = None

    def _check_inputs(self, inputs):
        if inputs.ndim != 2 or inputs.shape[1] != self.input_dim:
            raise ValueError('{} layer: inputs.shape {} does not match input dimension {}'
                             ''.format(self.kind, inputs.shape, self.input_dim))


class Affine(Layer):

    """y = x W + b, with W of shape (input_dim, output_dim)."""

    kind = 'affine'

    def __init__(self, weight, bias=None):
        super().__init__()
        self.weight = np.array(weight, dtype=float, ndmin=2)
        if bias is None:
            bias = np.zeros(self.weight.shape[1])
        self.bias = np.array(bias, dtype=float, ndmin=1)
        if self.bias.shape != (self.weight.shape[1],):
            raise ValueError('bias.shape {} does not match weight.shape {}'
                             ''.format(self.bias.shape, self.weight.shape))

    @property
    def input_dim(self):
        return self.weight.shape[0]

    @property
    def output_dim(self):
        return self.weight.shape[1]

    def parameters(self):
        return {'weight': self.weight, 'bias': self.bias}

    def forward(self, inputs, mode='eval', record=True, track_stats=True):
        self._check_inputs(inputs)
        if record:
            self._cache = inputs
        return inputs @ self.weight + self.bias

    def backward(self, cotangent):
        inputs = self._recorded()
        grads = {'weight': inputs.T @ cotangent, 'bias': cotangent.sum(axis=0)}
        return cotangent @ self.weight.T, grads


class BatchNorm(Layer):

    """
    Batch normalization over the batch axis.

    Train mode normalizes with the batch statistics (and backpropagates
    through them) and updates the running statistics; eval mode uses the
    running statistics only.
    """

    kind = 'batchnorm'

    def __init__(self, dim, momentum=0.1, eps=1e-5):
        super().__init__()
        self.gamma = np.ones(dim)
        self.beta = np.zeros(dim)
        self.running_mean = np.zeros(dim)
        self.running_var = np.ones(dim)
        self.momentum = momentum
        self.eps = eps

    @property
    def input_dim(self):
        return self.gamma.size

    def parameters(self):
        return {'gamma': self.gamma, 'beta': self.beta}

    def state(self):
        return {'running_mean': self.running_mean, 'running_var': self.running_var}

    def forward(self, inputs, mode='eval', record=True, track_stats=True):
        self._check_inputs(inputs)
        if mode == 'train':
            mean = inputs.mean(axis=0)
            var = inputs.var(axis=0)
            if track_stats:
                self.running_mean *= 1 - self.momentum
                self.running_mean += self.momentum*mean
                self.running_var *= 1 - self.momentum
                self.running_var += self.momentum*var
        elif mode == 'eval':
            mean = self.running_mean
            var = self.running_var
        else:
            raise ValueError("Unknown mode {}".format(mode))
        inv_std = 1/np.sqrt(var + self.eps)
        normalized = (inputs - mean)*inv_std
        if record:
            self._cache = (mode, normalized, inv_std)
        return self.gamma*normalized + self.beta

    def backward(self, cotangent):
        mode, normalized, inv_std = self._recorded()
        grads = {'gamma': (cotangent*normalized).sum(axis=0), 'beta': cotangent.sum(axis=0)}
        d_normalized = cotangent*self.gamma
        if mode == 'eval':
            return d_normalized*inv_std, grads
        batch = normalized.shape[0]
        d_inputs = inv_std/batch * (batch*d_normalized
                                    - d_normalized.sum(axis=0)
                                    - normalized*(d_normalized*normalized).sum(axis=0))
        return d_inputs, grads

    def as_affine(self):
        """The eval-mode map as an affine layer."""
        scale = self.gamma/np.sqrt(self.running_var + self.eps)
        return Affine(np.diag(scale), self.beta - scale*self.running_mean)


class Activation(Layer):

    """
    Pointwise activation. Units where `mask` is False pass through unchanged.
    """

    kind = 'activation'

    def __init__(self, function, dim, mask=None):
        super().__init__()
        if function not in ACTIVATIONS:
            raise ValueError("Activation {} not in {}".format(function, ACTIVATIONS))
        self.function = function
        self.dim = dim
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != (dim,):
                raise ValueError('mask.shape {} does not match dimension {}'.format(mask.shape, dim))
            if mask.all():
                mask = None
        self.mask = mask

    @property
    def input_dim(self):
        return self.dim

    def forward(self, inputs, mode='eval', record=True, track_stats=True):
        self._check_inputs(inputs)
        if self.function == 'relu':
            outputs = np.maximum(inputs, 0.)
        else:
            outputs = np.tanh(inputs)
        if self.mask is not None:
            outputs = np.where(self.mask, outputs, inputs)
        if record:
            self._cache = outputs
        return outputs

    def backward(self, cotangent):
        outputs = self._recorded()
        if self.function == 'relu':
            slope = (outputs > 0).astype(float)
        else:
            slope = 1 - outputs**2
        if self.mask is not None:
            slope = np.where(self.mask, slope, 1.)
        return cotangent*slope, {}
