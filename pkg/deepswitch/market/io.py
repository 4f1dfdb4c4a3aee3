"""
Flat binary dump of path batches: one JSON header line followed by the
little-endian float64 payload of states, dW and (if present) dN.
"""

import json

import numpy as np

from .grid import TimeGrid
from .simulation import PathBatch

_DTYPE = np.dtype('<f8')

def paths_to_file(paths, filename):
    with open(filename, 'wb') as f:
        f.write(json.dumps(paths.header(), sort_keys=True).encode() + b'\n')
        arrays = [paths.states, paths.dW] + ([paths.dN] if paths.has_jumps else [])
        for arr in arrays:
            f.write(np.ascontiguousarray(arr, dtype=_DTYPE).tobytes())

def paths_from_file(filename):
    with open(filename, 'rb') as f:
        header = json.loads(f.readline().decode())
        payload = np.frombuffer(f.read(), dtype=_DTYPE)
    p, s, d = header['n_paths'], header['n_steps'], header['dim']
    shapes = [(p, s + 1, d), (p, s, d)] + ([(p, s, d)] if header['has_jumps'] else [])
    expected = sum(int(np.prod(shape)) for shape in shapes)
    if payload.size != expected:
        raise ValueError("Payload has {} values, header announces {}".format(payload.size, expected))
    arrays = []
    offset = 0
    for shape in shapes:
        count = int(np.prod(shape))
        arrays.append(payload[offset:offset + count].reshape(shape).astype(float))
        offset += count
    return PathBatch(
        states=arrays[0], dW=arrays[1], dN=arrays[2] if header['has_jumps'] else None,
        seed=header['seed'], grid=TimeGrid(**header['grid']),
        start_index=header['start_index'], path_offset=header['path_offset'])
