"""
Network checkpoints: ``<stem>.json`` holds the architecture and a tensor
table, ``<stem>.bin`` the tensors as contiguous little-endian float64.
"""

import json
from pathlib import Path

import numpy as np

from .layers import Activation, Affine, BatchNorm
from .network import Network

_DTYPE = np.dtype('<f8')


def _tensors(layer):
    if isinstance(layer, Affine):
        return {'weight': layer.weight, 'bias': layer.bias}
    if isinstance(layer, BatchNorm):
        return {'gamma': layer.gamma, 'beta': layer.beta,
                'running_mean': layer.running_mean, 'running_var': layer.running_var}
    if isinstance(layer, Activation) and layer.mask is not None:
        return {'mask': layer.mask.astype(float)}
    return {}


def save_network(net, stem, metadata=None):
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    layers = []
    tensors = []
    offset = 0
    with open(stem.with_suffix('.bin'), 'wb') as f:
        for index, layer in enumerate(net.layers):
            entry = {'kind': layer.kind, 'input_dim': layer.input_dim, 'output_dim': layer.output_dim}
            if isinstance(layer, BatchNorm):
                entry.update(momentum=layer.momentum, eps=layer.eps)
            if isinstance(layer, Activation):
                entry['function'] = layer.function
            layers.append(entry)
            for name, value in _tensors(layer).items():
                data = np.ascontiguousarray(value, dtype=_DTYPE)
                f.write(data.tobytes())
                tensors.append({'layer': index, 'name': name, 'shape': list(value.shape), 'offset': offset})
                offset += data.nbytes
    meta = {
        'layers': layers,
        'tensors': tensors,
        'size': net.size(),
        'metadata': metadata or {},
    }
    with open(stem.with_suffix('.json'), 'w') as f:
        json.dump(meta, f, indent=1)


def load_network(stem):
    stem = Path(stem)
    json_path = stem.with_suffix('.json')
    bin_path = stem.with_suffix('.bin')
    for path in [json_path, bin_path]:
        if not path.exists():
            raise FileNotFoundError("Missing checkpoint file {}".format(path))
    with open(json_path) as f:
        meta = json.load(f)
    payload = bin_path.read_bytes()
    tensors = {}
    for entry in meta['tensors']:
        count = int(np.prod(entry['shape']))
        data = np.frombuffer(payload, dtype=_DTYPE, count=count, offset=entry['offset'])
        tensors[entry['layer'], entry['name']] = data.reshape(entry['shape']).astype(float)

    layers = []
    for index, entry in enumerate(meta['layers']):
        if entry['kind'] == 'affine':
            layer = Affine(tensors[index, 'weight'], tensors[index, 'bias'])
        elif entry['kind'] == 'batchnorm':
            layer = BatchNorm(entry['input_dim'], momentum=entry['momentum'], eps=entry['eps'])
            for name in ['gamma', 'beta', 'running_mean', 'running_var']:
                getattr(layer, name)[:] = tensors[index, name]
        elif entry['kind'] == 'activation':
            mask = tensors.get((index, 'mask'))
            layer = Activation(entry['function'], entry['input_dim'],
                               mask=None if mask is None else mask > 0.5)
        else:
            raise ValueError("Unknown layer kind {} in {}".format(entry['kind'], json_path))
        layers.append(layer)
    return Network(layers)
