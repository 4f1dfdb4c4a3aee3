"""
Run artifacts: reports, tables and trained penalties or policies.

Every artifact carries the resolved run configuration and a provenance
string, so that a run can be reproduced from any of its outputs.
"""

import json
import subprocess
from pathlib import Path

import numpy as np
import pandas as pd

from ..dual.penalty import DualPenalty
from ..market.grid import TimeGrid
from ..nn.checkpoint import load_network, save_network
from ..primal.policy import Policy

VERSION = '0.1'


def provenance():
    """`git describe` of the working tree, or the package version outside a repository."""
    try:
        completed = subprocess.run(['git', 'describe', '--always', '--dirty', '--tags'],
                                   cwd=Path(__file__).resolve().parent, stdout=subprocess.PIPE,
                                   stderr=subprocess.DEVNULL, check=False, timeout=5)
        described = completed.stdout.decode().strip()
    except (OSError, subprocess.SubprocessError):
        described = ''
    return described or 'deepswitch-{}'.format(VERSION)


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def write_json(path, payload, config=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = dict(payload)
    document['config'] = config or {}
    document['provenance'] = provenance()
    with open(path, 'w') as f:
        json.dump(_plain(document), f, indent=1)


def write_csv(path, table, config=None):
    """
    Write a DataFrame (or a list of row mappings); the first line is a '#'
    comment holding the configuration and provenance.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = table if isinstance(table, pd.DataFrame) else pd.DataFrame(list(table))
    header = {'config': config or {}, 'provenance': provenance()}
    with open(path, 'w') as f:
        f.write('# ' + json.dumps(_plain(header), sort_keys=True) + '\n')
        frame.to_csv(f, index=False)


def read_csv(path):
    return pd.read_csv(path, comment='#')


def _meta(directory):
    path = Path(directory)/'meta.json'
    if not path.exists():
        raise FileNotFoundError("Missing checkpoint {}".format(path))
    with open(path) as f:
        return json.load(f)


def save_penalty(penalty, directory, config=None):
    """One network checkpoint per (date, regime) plus ``meta.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    sizes = {}
    for n in range(penalty.grid.dates):
        for name, net in penalty.networks(n):
            stem = '{}-{}'.format(name.replace('.', '-'), n)
            save_network(net, directory/stem, metadata={'date': n, 'name': name})
            sizes[stem] = net.size()
    meta = {
        'kind': 'penalty',
        'grid': penalty.grid.as_dict(),
        'regimes': penalty.n_regimes,
        'dim': penalty.dim,
        'jumps': penalty.has_jumps,
        'intensity': penalty.intensity.tolist(),
        'compensated': penalty.compensated,
        'sizes': sizes,
    }
    write_json(directory/'meta.json', meta, config)


def load_penalty(directory):
    directory = Path(directory)
    meta = _meta(directory)
    grid = TimeGrid(**meta['grid'])
    J = meta['regimes']

    def nets(prefix):
        return [[load_network(directory/'{}-{}-{}'.format(prefix, i, n)) for i in range(J)]
                for n in range(grid.dates)]

    return DualPenalty(grid, J, meta['dim'], nets('z'), jump_nets=nets('zp') if meta['jumps'] else None,
                       intensity=meta['intensity'], compensated=meta['compensated'])


def save_policy(policy, directory, config=None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for n, net in enumerate(policy.nets):
        save_network(net, directory/'p-{}'.format(n), metadata={'date': n})
    meta = {
        'kind': 'policy',
        'grid': policy.grid.as_dict(),
        'regimes': policy.n_regimes,
        'dim': policy.dim,
        'sizes': [net.size() for net in policy.nets],
    }
    write_json(directory/'meta.json', meta, config)


def load_policy(directory):
    directory = Path(directory)
    meta = _meta(directory)
    grid = TimeGrid(**meta['grid'])
    nets = [load_network(directory/'p-{}'.format(n)) for n in range(grid.dates)]
    return Policy(grid, meta['regimes'], meta['dim'], nets)
