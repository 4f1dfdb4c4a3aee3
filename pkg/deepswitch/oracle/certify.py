"""
Certification of the duality properties of a lattice instance.

Every property is checked exactly on the full tree, with conditional
expectations computed over children rather than estimated.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..dual.recursion import dual_backward, propagation_slack
from ..errors import CertificationError
from ..problem.problem import TriangularReport, triangular_report
from ..utils.seeding import generator
from .lattice import (brute_force_value, candidates, doob_martingale, exact_value, path_increments,
                      policy_value, rule_count)

logger = logging.getLogger(__name__)

PROPERTIES = (
    'terminal',
    'dp_enumeration',
    'doob_centered',
    'strong_duality',
    'weak_duality',
    'error_propagation',
    'no_double_switch',
    'restriction',
    'domination',
    'greedy_optimality',
)


@dataclass
class Check:
    passed: bool
    max_violation: float
    # (depth, node, regime) of the worst violation
    node: Optional[tuple] = None

    def as_dict(self):
        return {'passed': self.passed, 'max_violation': self.max_violation,
                'node': None if self.node is None else list(self.node)}


@dataclass
class OracleResult:
    name: str
    values: list
    increments: list
    greedy: list
    precondition: TriangularReport
    checks: dict = field(default_factory=dict)
    skipped: bool = False
    enumeration_depth: Optional[int] = None

    @property
    def failures(self):
        return [prop for prop, check in self.checks.items() if not check.passed]

    @property
    def passed(self):
        """True unless a property failed; a skipped instance has no failure."""
        return not self.failures

    def raise_for_failures(self):
        for prop in self.failures:
            check = self.checks[prop]
            raise CertificationError(prop, check.node, check.max_violation)

    def as_dict(self):
        return {
            'name': self.name,
            'skipped': self.skipped,
            'passed': self.passed,
            'triangular_min_slack': self.precondition.min_slack,
            'enumeration_depth': self.enumeration_depth,
            'root_values': self.values[0][0].tolist(),
            'checks': {prop: check.as_dict() for prop, check in self.checks.items()},
        }


def _worst(violation, tolerance, locate=None):
    """Check from an array of violations indexed (node, regime) or a list of them per depth."""
    arrays = violation if isinstance(violation, list) else [violation]
    worst, where = -np.inf, None
    for n, array in enumerate(arrays):
        array = np.atleast_1d(array)
        if array.size == 0:
            continue
        k = int(np.argmax(array))
        if array.flat[k] > worst:
            worst = float(array.flat[k])
            where = (n,) + tuple(int(c) for c in np.unravel_index(k, array.shape))
    if where is None:
        return Check(passed=True, max_violation=0.)
    if locate is not None:
        where = locate(where)
    return Check(passed=worst <= tolerance, max_violation=worst, node=where)


def _random_penalty(model, rng, scale):
    """Random increments on every edge, centered under the transition probabilities."""
    b = model.branching
    J = model.n_regimes
    edges = []
    for n in range(model.dates):
        raw = scale*rng.standard_normal((b**n, b, J))
        edges.append(raw - model.expectation(n, raw.reshape(b**(n + 1), J))[:, None, :])
    return path_increments(model, edges)


def certify(model, name='lattice', n_penalties=100, seed=0, tolerance=1e-10, enumeration_tolerance=1e-12,
            enumeration_budget=10**6):
    """
    Certify the duality properties of `model`.

    The instance is skipped, with its triangular report, unless the
    switching costs are strictly triangular at every node.
    """
    if n_penalties < 1:
        raise ValueError("At least one random penalty is needed, got {}".format(n_penalties))
    N = model.dates
    J = model.n_regimes
    precondition = triangular_report(model.costs)
    values = exact_value(model)
    q = candidates(model, values)
    g = [table.argmax(axis=2) for table in q]
    doob = doob_martingale(model, values)
    result = OracleResult(name=name, values=values, increments=doob, greedy=g, precondition=precondition)
    if not precondition.passed:
        logger.warning("%s: switching costs are not strictly triangular (min slack %.3e); certification skipped",
                       name, precondition.min_slack)
        result.skipped = True
        return result

    scale = max(1., max(float(np.abs(v).max()) for v in values))
    tables, _, nodes = model.path_tables()
    checks = result.checks

    def on_path(where):
        # (date, path, regime) -> (date, node, regime)
        n, p, i = where
        return (n, int(nodes[p, n]), i)

    # DP against enumeration at the shallowest depth within budget
    depth = next((n for n in range(N + 1) if rule_count(model, n) <= enumeration_budget), N)
    result.enumeration_depth = depth
    enumerated = np.stack([brute_force_value(model, depth, i) for i in range(J)], axis=1)
    checks['dp_enumeration'] = _worst(np.abs(enumerated - values[depth]), enumeration_tolerance*scale,
                                      locate=lambda where: (depth,) + where[1:])

    checks['doob_centered'] = _worst([np.abs(model.expectation(n, d.reshape(-1, J))) for n, d in enumerate(doob)],
                                     enumeration_tolerance*scale)

    exact = dual_backward(model, tables, path_increments(model, doob))
    residual = np.abs(exact.U - np.stack([values[n][nodes[:, n]] for n in range(N + 1)], axis=1))
    checks['strong_duality'] = _worst(list(np.moveaxis(residual, 1, 0)), tolerance, locate=on_path)

    rng = generator(seed, 'certify', name)
    penalties = [_random_penalty(model, rng, scale) for _ in range(n_penalties)]
    duals = [dual_backward(model, tables, xi) for xi in penalties]
    weak = [np.max([values[n] - model.conditional_mean(n, dual.at(n)) for dual in duals], axis=0)
            for n in range(N + 1)]
    checks['weak_duality'] = _worst(weak, tolerance)
    checks['terminal'] = _worst([np.max([np.abs(dual.at(N) - tables.G) for dual in duals + [exact]], axis=0)],
                                0., locate=lambda where: (N,) + where[1:])

    pairs = list(zip(duals, penalties))
    pairs = pairs + [(exact, path_increments(model, doob))]
    excess = np.max([-propagation_slack(first, second, xi_first, xi_second)
                    for (first, xi_first), (second, xi_second) in zip(pairs[:-1], pairs[1:])], axis=0)
    checks['error_propagation'] = _worst(list(excess.T), tolerance*scale,
                                         locate=lambda where: (where[0], int(nodes[where[1], where[0]])))

    double = []
    for n in range(N):
        chosen = g[n]
        again = np.take_along_axis(chosen, chosen, axis=1)
        double.append((again != chosen).astype(float))
    checks['no_double_switch'] = _worst(double, 0.)

    restricted = []
    for n in range(N):
        stays = g[n] == np.arange(J)[None, :]
        best = np.where(stays[:, None, :], q[n], -np.inf).max(axis=2)
        restricted.append(np.abs(best - values[n]))
    checks['restriction'] = _worst(restricted, tolerance)

    domination = []
    for n in range(N):
        others = values[n][:, None, :] - model.costs[n]
        others[:, np.arange(J), np.arange(J)] = -np.inf
        domination.append(np.maximum(others.max(axis=2) - values[n], 0.))
    checks['domination'] = _worst(domination, tolerance)

    rolled = policy_value(model, g)
    checks['greedy_optimality'] = _worst([np.abs(r - v) for r, v in zip(rolled, values)], tolerance)

    if result.passed:
        logger.info("%s: all %d properties certified", name, len(checks))
    else:
        logger.warning("%s: properties %s failed", name, result.failures)
    return result


def certify_many(instances, workers=1, **kwargs):
    """
    Certify (name, model) pairs in parallel; results follow the input order.
    """
    def run(item):
        name, model = item
        return certify(model, name=name, **kwargs)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(run, instances))
