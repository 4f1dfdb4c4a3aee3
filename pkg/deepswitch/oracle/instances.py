"""
Random lattice instances and the bundled certification fixtures.
"""

import json
import os

import numpy as np

from ..errors import ConfigurationError
from ..utils.seeding import generator
from .lattice import LatticeModel

FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures.json')

COST_KINDS = ('strict', 'zero', 'prohibitive')


def power_costs(n_regimes, scale=0.3, exponent=0.9, offset=0.05):
    """
    l_ij = scale*|i - j|**exponent + offset off the diagonal; strictly
    triangular for 0 < exponent <= 1 and offset > 0.
    """
    i, j = np.indices((n_regimes, n_regimes))
    costs = scale*np.abs(i - j)**exponent + offset
    costs[i == j] = 0.
    return costs


def random_lattice(branching, dates, regimes, dim=1, seed=0, costs='strict', volatility=0.2):
    """
    Lattice with random transition probabilities, a multiplicative random
    walk as state, and running and terminal payoffs affine in the state with
    random coefficients.

    `costs` is one of 'strict', 'zero', 'prohibitive' (10**6 off the
    diagonal) or a (J, J) array used at every node.
    """
    rng = generator(seed, 'lattice', branching, dates, regimes, dim)
    b, J = branching, regimes
    if isinstance(costs, str):
        if costs not in COST_KINDS:
            raise ConfigurationError("Unknown cost kind {}, expected one of {}".format(costs, COST_KINDS))
        table = {'strict': power_costs(J),
                 'zero': np.zeros((J, J)),
                 'prohibitive': 1e6*(1 - np.eye(J))}[costs]
    else:
        table = np.asarray(costs, dtype=float)

    states = [np.ones((1, dim))]
    probabilities = []
    for n in range(dates):
        shocks = np.exp(volatility*rng.standard_normal((b**n, b, dim)))
        states.append((states[n][:, None, :]*shocks).reshape(b**(n + 1), dim))
        probabilities.append(rng.dirichlet(np.ones(b), size=b**n))

    slopes = rng.standard_normal((J, dim))/dim
    levels = 0.5*rng.standard_normal(J)
    running = [levels + states[n] @ slopes.T + 0.1*rng.standard_normal((b**n, J)) for n in range(dates)]
    terminal = states[dates] @ rng.standard_normal((J, dim)).T/dim + 0.1*rng.standard_normal((b**dates, J))
    return LatticeModel(b, states, probabilities, running,
                        [np.broadcast_to(table, (b**n, J, J)).copy() for n in range(dates)], terminal)


def fixture_specs(path=FIXTURES):
    with open(path) as f:
        return json.load(f)


def bundled_instances(path=FIXTURES):
    """
    The certification fixtures as (name, model) pairs.
    """
    instances = []
    for spec in fixture_specs(path):
        spec = dict(spec)
        name = spec.pop('name')
        instances.append((name, random_lattice(**spec)))
    return instances
