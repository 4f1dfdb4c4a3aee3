"""
ReLU network realizing the pointwise maximum of scalar ReLU networks.

The members are put in parallel and their outputs reduced pairwise with

    max(a, b) = ReLU(a - b) + ReLU(b) - ReLU(-b),

which costs 4 nonzero weights before the ReLU and 3 after it, so that
size(max) <= 7 (M - 1) + sum of the member sizes. An unpaired output of a
level is carried through the ReLU layer by an identity unit and folded into
the next reduction.
"""

import logging

import numpy as np
from scipy.linalg import block_diag

from ..errors import ConfigurationError
from .layers import Activation, Affine, BatchNorm
from .network import Network

logger = logging.getLogger(__name__)


def _stages(net):
    """
    Eval-mode form of `net` as alternating affine maps and ReLU masks:
    affines[0], masks[0], affines[1], ..., affines[-1].
    """
    affines = []
    masks = []
    pending = None
    for layer in net.layers:
        if isinstance(layer, BatchNorm):
            layer = layer.as_affine()
        if isinstance(layer, Affine):
            W, b = layer.weight, layer.bias
            if pending is not None:
                W, b = pending[0] @ W, pending[1] @ W + b
            pending = (W, b)
        else:
            if pending is None:
                pending = (np.eye(layer.dim), np.zeros(layer.dim))
            affines.append(pending)
            masks.append(np.ones(layer.dim, dtype=bool) if layer.mask is None else layer.mask)
            pending = None
    if pending is None:
        pending = (np.eye(net.output_dim), np.zeros(net.output_dim))
    affines.append(pending)
    return affines, masks


def _nnz(affine):
    return np.count_nonzero(affine[0]) + np.count_nonzero(affine[1])


def _compose(first, second):
    return first[0] @ second[0], first[1] @ second[0] + second[1]


def _reduction(count):
    """
    One pairwise level over `count` values: pre-activation map, ReLU mask and
    post-activation map.
    """
    pairs = count // 2
    hidden = 3*pairs + count % 2
    A1 = np.zeros((count, hidden))
    A2 = np.zeros((hidden, pairs + count % 2))
    mask = np.ones(hidden, dtype=bool)
    for p in range(pairs):
        a, b = 2*p, 2*p + 1
        A1[a, 3*p], A1[b, 3*p] = 1., -1.
        A1[b, 3*p + 1] = 1.
        A1[b, 3*p + 2] = -1.
        A2[3*p:3*p + 3, p] = [1., 1., -1.]
    if count % 2:
        A1[count - 1, -1] = 1.
        A2[-1, -1] = 1.
        mask[-1] = False
    return (A1, np.zeros(hidden)), mask, (A2, np.zeros(A2.shape[1]))


def max_network(nets):
    """
    Network computing max_m nets[m](x).

    All members must be ReLU networks with the same input dimension and a
    scalar output; batch-norm layers are folded in with their running
    statistics. Members shallower than the deepest one carry their output
    through the remaining layers with identity units.
    """
    if not nets:
        raise ValueError("max_network needs at least one network")
    input_dim = nets[0].input_dim
    for net in nets:
        if net.input_dim != input_dim:
            raise ConfigurationError("Input dimensions {} and {} differ".format(input_dim, net.input_dim))
        if net.output_dim != 1:
            raise ConfigurationError("Member output dimension is {}, expected 1".format(net.output_dim))
        if net.activations - {'relu'}:
            raise ConfigurationError("Mixed activation families {}: only ReLU members can be combined"
                                     "".format(sorted(net.activations)))

    members = [_stages(net) for net in nets]
    depth = max(len(masks) for _, masks in members)
    for affines, masks in members:
        while len(masks) < depth:
            masks.append(np.zeros(1, dtype=bool))
            affines.append((np.ones((1, 1)), np.zeros(1)))

    affines = []
    masks = []
    for level in range(depth + 1):
        parts = [member_affines[level] for member_affines, _ in members]
        if level == 0:
            W = np.hstack([W for W, _ in parts])
        else:
            W = block_diag(*[W for W, _ in parts])
        affines.append((W, np.concatenate([b for _, b in parts])))
        if level < depth:
            masks.append(np.concatenate([member_masks[level] for _, member_masks in members]))

    count = len(nets)
    while count > 1:
        pre, mask, post = _reduction(count)
        merged = _compose(affines[-1], pre)
        if _nnz(merged) <= _nnz(affines[-1]) + _nnz(pre):
            affines[-1] = merged
        else:
            masks.append(None)
            affines.append(pre)
        masks.append(mask)
        affines.append(post)
        count = post[0].shape[1]

    layers = []
    for index, (W, b) in enumerate(affines):
        layers.append(Affine(W, b))
        if index < len(masks):
            mask = masks[index]
            # consecutive affine maps are kept unmerged when that is sparser
            if mask is not None:
                layers.append(Activation('relu', W.shape[1], mask=mask))
    result = Network(layers)
    bound = 7*(len(nets) - 1) + sum(net.size() for net in nets)
    logger.debug("max_network of %d members: size %d, bound %d", len(nets), result.size(), bound)
    return result
