"""
Feedforward networks built from affine, batch-norm and activation layers.
"""

import numpy as np

from ..errors import TrainingError
from .layers import Activation, Affine, BatchNorm


def xavier_init(shape, seed):
    """
    Xavier normal weights: entries N(0, 2/(fan_in + fan_out)) for shape (fan_in, fan_out).
    """
    fan_in, fan_out = shape
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    return gen.normal(0., np.sqrt(2/(fan_in + fan_out)), size=shape)


class Network:

    """
    A chain of layers acting on row vectors.

    Parameters are addressed as ``"<layer index>.<name>"`` in the dictionaries
    returned by `parameters` and `backward`.
    """

    def __init__(self, layers):
        if not layers:
            raise ValueError("A network needs at least one layer")
        for index, (previous, layer) in enumerate(zip(layers[:-1], layers[1:])):
            if previous.output_dim != layer.input_dim:
                raise ValueError('layer {} output dimension {} does not equal layer {} input dimension {}'
                                 ''.format(index, previous.output_dim, index + 1, layer.input_dim))
        self.layers = list(layers)
        self._recorded = False

    @property
    def input_dim(self):
        return self.layers[0].input_dim

    @property
    def output_dim(self):
        return self.layers[-1].output_dim

    @property
    def activations(self):
        return {layer.function for layer in self.layers if isinstance(layer, Activation)}

    @property
    def has_batch_norm(self):
        return any(isinstance(layer, BatchNorm) for layer in self.layers)

    def forward(self, inputs, mode='eval', record=True, track_stats=True):
        """
        Outputs for a batch of inputs (n_points, input_dim).

        Train mode uses batch statistics in the batch-norm layers and, with
        `track_stats`, updates their running statistics.
        """
        inputs = np.asarray(inputs, dtype=float)
        if inputs.ndim != 2 or inputs.shape[1] != self.input_dim:
            raise ValueError('inputs.shape {} does not match input dimension {}'
                             ''.format(inputs.shape, self.input_dim))
        values = inputs
        for layer in self.layers:
            values = layer.forward(values, mode=mode, record=record, track_stats=track_stats)
        self._recorded = record
        return values

    __call__ = forward

    def backward(self, cotangent):
        """
        Gradients of <cotangent, outputs> for the recorded forward pass.
        """
        if not self._recorded:
            raise TrainingError("backward called without a recorded forward pass")
        cotangent = np.asarray(cotangent, dtype=float)
        grads = {}
        for index in reversed(range(len(self.layers))):
            cotangent, layer_grads = self.layers[index].backward(cotangent)
            for name, grad in layer_grads.items():
                grads['{}.{}'.format(index, name)] = grad
        return grads

    def input_gradient(self, cotangent):
        """Cotangent with respect to the inputs of the recorded forward pass."""
        if not self._recorded:
            raise TrainingError("backward called without a recorded forward pass")
        for layer in reversed(self.layers):
            cotangent, _ = layer.backward(cotangent)
        return cotangent

    def forget(self):
        for layer in self.layers:
            layer.forget()
        self._recorded = False

    def parameters(self):
        params = {}
        for index, layer in enumerate(self.layers):
            for name, value in layer.parameters().items():
                params['{}.{}'.format(index, name)] = value
        return params

    def size(self):
        """Number of nonzero parameter entries."""
        return int(sum(np.count_nonzero(value) for value in self.parameters().values()))


def gradients(net, inputs, cotangent, mode='train'):
    """
    Forward `inputs` through `net` and return the parameter gradients of
    <cotangent, outputs>. Running statistics are left untouched.
    """
    net.forward(inputs, mode=mode, record=True, track_stats=False)
    return net.backward(cotangent)


def mlp(input_dim, output_dim, width, depth=3, activation='relu', batch_norm=True, seed=0):
    """
    Fully connected network with `depth` hidden layers of `width` units.

    With batch normalization the layout is
    BN, [Affine, BN, activation] * depth, Affine.
    """
    layers = []
    if batch_norm:
        layers.append(BatchNorm(input_dim))
    dims = [input_dim] + [width]*depth + [output_dim]
    seeds = np.random.SeedSequence(int(seed)).generate_state(len(dims) - 1)
    for index, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        layers.append(Affine(xavier_init((fan_in, fan_out), seeds[index])))
        if index < depth:
            if batch_norm:
                layers.append(BatchNorm(fan_out))
            layers.append(Activation(activation, fan_out))
    return Network(layers)
