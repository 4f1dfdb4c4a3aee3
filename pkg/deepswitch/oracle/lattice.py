"""
Finite non-recombining trees on which every quantity of the switching
problem is computed exactly.

Depth n holds b**n nodes; the children of node ``k`` at depth n are the
nodes ``k*b + c``, c = 0..b-1, at depth n+1. A leaf index therefore encodes
its whole path, and the node of leaf ``l`` at depth n is ``l // b**(N-n)``.
Interval payoffs are stored as totals per node, so there is no quadrature.
"""

import json
import logging

import numpy as np

from ..errors import ConfigurationError, InstanceTooLargeError
from ..market.grid import TimeGrid
from ..problem.payoffs import PayoffTables
from ..utils.seeding import generator

logger = logging.getLogger(__name__)

# largest number of decision rules brute_force_value enumerates
ENUMERATION_CAP = 10**7
RULE_CHUNK = 2**14


class LatticeModel:
    """
    Per depth n: `states[n]` (b**n, d), and for n < N `probabilities[n]`
    (b**n, b), `running[n]` (b**n, J) and `costs[n]` (b**n, J, J);
    `terminal` is (b**N, J).
    """

    def __init__(self, branching, states, probabilities, running, costs, terminal):
        self.branching = int(branching)
        self.states = [np.asarray(s, dtype=float) for s in states]
        self.probabilities = [np.asarray(p, dtype=float) for p in probabilities]
        self.running = [np.asarray(f, dtype=float) for f in running]
        self.costs = [np.asarray(c, dtype=float) for c in costs]
        self.terminal = np.asarray(terminal, dtype=float)
        self._check()

    def _check(self):
        b = self.branching
        N = self.dates
        J = self.n_regimes
        if b < 1 or N < 1:
            raise ConfigurationError("Lattice needs branching >= 1 and at least one date, got {} and {}".format(b, N))
        if len(self.states) != N + 1 or len(self.running) != N or len(self.costs) != N:
            raise ConfigurationError("Lattice tables do not cover {} dates".format(N))
        for n in range(N):
            expected = {'probabilities': (b**n, b), 'running': (b**n, J), 'costs': (b**n, J, J)}
            for name, shape in expected.items():
                actual = getattr(self, name)[n].shape
                if actual != shape:
                    raise ConfigurationError("{}[{}].shape {} does not equal {}".format(name, n, actual, shape))
            probs = self.probabilities[n]
            if (probs < 0).any() or not np.allclose(probs.sum(axis=1), 1., rtol=0, atol=1e-12):
                raise ConfigurationError("Transition probabilities at depth {} do not sum to 1".format(n))
            diagonal = np.diagonal(self.costs[n], axis1=1, axis2=2)
            if np.any(diagonal != 0):
                raise ConfigurationError("Costs l_ii at depth {} must vanish".format(n))
        for n, states in enumerate(self.states):
            if states.ndim != 2 or states.shape != (b**n, self.dim):
                raise ConfigurationError("states[{}].shape {} does not equal {}".format(n, states.shape, (b**n, self.dim)))
        if self.terminal.shape != (b**N, J):
            raise ConfigurationError("terminal.shape {} does not equal {}".format(self.terminal.shape, (b**N, J)))

    @property
    def dates(self):
        return len(self.probabilities)

    @property
    def n_regimes(self):
        return self.terminal.shape[1]

    @property
    def dim(self):
        return self.states[0].shape[1]

    @property
    def grid(self):
        """Unit-spaced grid with one substep per interval."""
        return TimeGrid(horizon=float(self.dates), dates=self.dates, substeps=1)

    def n_nodes(self, n):
        return self.branching**n

    def __repr__(self):
        return '{}(branching={}, dates={}, regimes={}, dim={})'.format(
            type(self).__name__, self.branching, self.dates, self.n_regimes, self.dim)

    def expectation(self, n, values):
        """
        Conditional expectation at depth n of `values` (b**(n+1), ...) given at depth n+1.
        """
        b = self.branching
        values = np.asarray(values, dtype=float)
        children = values.reshape((b**n, b) + values.shape[1:])
        weights = self.probabilities[n].reshape((b**n, b) + (1,)*(values.ndim - 1))
        return (weights*children).sum(axis=1)

    def leaf_weights(self):
        """Probability of each leaf, i.e. of each full path."""
        weights = np.ones(1)
        for probs in self.probabilities:
            weights = (weights[:, None]*probs).ravel()
        return weights

    def leaf_nodes(self):
        """Node index at each depth 0..N of every leaf, shape (b**N, N+1)."""
        N = self.dates
        leaves = np.arange(self.n_nodes(N))
        return np.stack([leaves // self.branching**(N - n) for n in range(N + 1)], axis=1)

    def conditional_mean(self, n, leaf_values):
        """
        Expectation given the node at depth n of `leaf_values` (b**N, ...) indexed by leaves.
        """
        N = self.dates
        leaf_values = np.asarray(leaf_values, dtype=float)
        weights = self.leaf_weights().reshape(self.n_nodes(n), -1)
        grouped = leaf_values.reshape((self.n_nodes(n), self.branching**(N - n)) + leaf_values.shape[1:])
        extra = (1,)*(leaf_values.ndim - 1)
        totals = (weights.reshape(weights.shape + extra)*grouped).sum(axis=1)
        mass = weights.sum(axis=1).reshape((-1,) + extra)
        return np.divide(totals, mass, out=np.zeros_like(totals), where=mass > 0)

    def path_tables(self):
        """
        Every path of the tree as payoff tables, with the path probabilities
        and the node index at each depth.
        """
        nodes = self.leaf_nodes()
        N = self.dates
        F = np.stack([self.running[n][nodes[:, n]] for n in range(N)], axis=1)
        L = np.stack([self.costs[n][nodes[:, n]] for n in range(N)], axis=1)
        tables = PayoffTables(F=F, L=L, G=self.terminal.copy())
        return tables, self.leaf_weights(), nodes

    def sample_leaves(self, n_paths, seed):
        """Leaves drawn with their path probabilities."""
        weights = self.leaf_weights()
        return generator(seed, 'lattice').choice(len(weights), size=n_paths, p=weights/weights.sum())

    def edge_values(self, n, node_values):
        """
        Path-indexed version of per-edge values (b**n, b, ...) on the edges
        leaving depth n, shape (b**N, ...).
        """
        nodes = self.leaf_nodes()
        node_values = np.asarray(node_values)
        flat = node_values.reshape((-1,) + node_values.shape[2:])
        return flat[nodes[:, n + 1]]

    def as_dict(self):
        return {
            'branching': self.branching,
            'dates': self.dates,
            'regimes': self.n_regimes,
            'dim': self.dim,
            'states': [s.tolist() for s in self.states],
            'probabilities': [p.tolist() for p in self.probabilities],
            'running': [f.tolist() for f in self.running],
            'costs': [c.tolist() for c in self.costs],
            'terminal': self.terminal.tolist(),
        }

    @classmethod
    def from_dict(cls, spec):
        try:
            return cls(spec['branching'], spec['states'], spec['probabilities'], spec['running'],
                       spec['costs'], spec['terminal'])
        except KeyError as error:
            raise ConfigurationError("Missing lattice entry {}".format(error))

    def to_file(self, path):
        with open(path, 'w') as f:
            json.dump(self.as_dict(), f)

    @classmethod
    def from_file(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))


def _candidates(model, n, continuation):
    """q[node, i, j] = F_n^j - l_ij + E_n[Y_{n+1}^j]."""
    return (model.running[n] + continuation)[:, None, :] - model.costs[n]


def exact_value(model):
    """
    Value process by backward induction: Y_N = Phi and
    Y_n^i = max_j (F_n^j - l_ij + E_n[Y_{n+1}^j]).

    Returns the list of arrays Y[n] (b**n, J), n = 0..N.
    """
    N = model.dates
    values = [None]*(N + 1)
    values[N] = model.terminal.copy()
    for n in reversed(range(N)):
        values[n] = _candidates(model, n, model.expectation(n, values[n + 1])).max(axis=2)
    return values


def candidates(model, values):
    """Candidate values q[n] (b**n, J, J) of every switch at every node."""
    return [_candidates(model, n, model.expectation(n, values[n + 1])) for n in range(model.dates)]


def greedy(model, values):
    """
    Greedy regime g[n][node, i], the maximizer of the candidates (smallest index on ties).
    """
    return [q.argmax(axis=2) for q in candidates(model, values)]


def doob_martingale(model, values):
    """
    Doob increments dM[n][node, c, i] = Y_{n+1}^i(child c) - E_n[Y_{n+1}^i] on the edges leaving depth n.
    """
    b = model.branching
    increments = []
    for n in range(model.dates):
        children = values[n + 1].reshape(b**n, b, -1)
        increments.append(children - model.expectation(n, values[n + 1])[:, None, :])
    return increments


def path_increments(model, edge_increments):
    """Per-edge increments as a (b**N, N, J) array along every path."""
    return np.stack([model.edge_values(n, edge_increments[n]) for n in range(model.dates)], axis=1)


def policy_value(model, rule):
    """
    Exact value of the node-level rule `rule[n][node, i]` (regime chosen at
    depth n when in regime i), for every node and starting regime.
    """
    N = model.dates
    values = [None]*(N + 1)
    values[N] = model.terminal.copy()
    J = model.n_regimes
    for n in reversed(range(N)):
        q = _candidates(model, n, model.expectation(n, values[n + 1]))
        values[n] = np.take_along_axis(q, np.asarray(rule[n]).reshape(-1, J, 1), axis=2)[:, :, 0]
    return values


def rule_count(model, n):
    """Number of node-level decision rules in a subtree rooted at depth n."""
    b = model.branching
    n_nodes = sum(b**k for k in range(model.dates - n))
    return model.n_regimes**n_nodes


def brute_force_value(model, n, i, cap=ENUMERATION_CAP):
    """
    Best expected payoff from regime i at every node of depth n, maximized by
    enumerating all decision rules of the subtree below the node (one regime
    per subtree node, so rules are adapted by construction).

    Returns an array (b**n,).
    """
    if not 0 <= n <= model.dates:
        raise ValueError("Date index violation: 0 <= {} <= {}".format(n, model.dates))
    if not 0 <= i < model.n_regimes:
        raise ValueError("Regime index violation: 0 <= {} < {}".format(i, model.n_regimes))
    if n == model.dates:
        return model.terminal[:, i].copy()
    count = rule_count(model, n)
    if count > cap:
        raise InstanceTooLargeError(count, cap)
    N = model.dates
    b = model.branching
    J = model.n_regimes
    tables, weights, _ = model.path_tables()
    M = N - n
    leaves_per_node = b**M
    # subtree nodes are numbered depth by depth; local[p, m] is the one leaf p visits at depth n + m
    offsets = np.cumsum([0] + [b**k for k in range(M)])
    local = np.stack([np.arange(leaves_per_node)//b**(M - m) + offsets[m] for m in range(M)], axis=1)
    digits = J**np.arange(offsets[-1], dtype=np.int64)
    rows = np.arange(leaves_per_node)[None, :, None]
    steps = np.arange(M)[None, None, :]

    logger.debug("enumerating %d rules below each of %d nodes", count, b**n)
    result = np.empty(b**n)
    for node in range(b**n):
        leaves = slice(node*leaves_per_node, (node + 1)*leaves_per_node)
        F = tables.F[leaves, n:]
        L = tables.L[leaves, n:]
        G = tables.G[leaves]
        w = weights[leaves]
        mass = w.sum()
        w = w/mass if mass > 0 else np.full(leaves_per_node, 1/leaves_per_node)
        best = -np.inf
        for first in range(0, count, RULE_CHUNK):
            rules = np.arange(first, min(first + RULE_CHUNK, count), dtype=np.int64)
            decisions = (rules[:, None]//digits[None, :]) % J
            # D[r, p, m] regime chosen on leaf p at depth n + m under rule r
            D = decisions[:, local]
            previous = np.concatenate([np.full(D.shape[:2] + (1,), i), D[:, :, :-1]], axis=2)
            totals = (F[rows, steps, D] - L[rows, steps, previous, D]).sum(axis=2) + G[rows[:, :, 0], D[:, :, -1]]
            best = max(best, float((totals @ w).max()))
        result[node] = best
    return result
