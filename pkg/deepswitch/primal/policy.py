"""
Switching policies and their evaluation as lower bounds.

A policy holds one network per intervention date mapping
(t_n, x, one-hot current regime) to J logits. Its hard rule switches to the
regime of largest logit (smallest index on ties).
"""

from dataclasses import dataclass

import numpy as np

from ..nn.network import mlp
from ..problem.payoffs import evaluate_payoffs
from ..utils.seeding import derive_seed


class Policy:

    def __init__(self, grid, n_regimes, dim, nets):
        if len(nets) != grid.dates:
            raise ValueError("Policy needs {} networks, got {}".format(grid.dates, len(nets)))
        for net in nets:
            if net.input_dim != 1 + dim + n_regimes or net.output_dim != n_regimes:
                raise ValueError('network maps {} -> {}, expected {} -> {}'
                                 ''.format(net.input_dim, net.output_dim, 1 + dim + n_regimes, n_regimes))
        self.grid = grid
        self.n_regimes = n_regimes
        self.dim = dim
        self.nets = nets

    @classmethod
    def initialize(cls, grid, n_regimes, dim, width=None, depth=3, activation='relu', seed=0):
        width = width or 20 + dim
        nets = [mlp(1 + dim + n_regimes, n_regimes, width, depth=depth, activation=activation,
                    seed=derive_seed(seed, 'policy', n) % 2**32)
                for n in range(grid.dates)]
        return cls(grid, n_regimes, dim, nets)

    def inputs(self, n, states, regimes):
        states = np.asarray(states, dtype=float)
        regimes = np.broadcast_to(np.asarray(regimes), (len(states),))
        times = np.full((len(states), 1), self.grid.date_time(n))
        onehot = (regimes[:, None] == np.arange(self.n_regimes)[None, :]).astype(float)
        return np.hstack([times, states, onehot])

    def logits(self, n, states, regimes, mode='eval', record=False, track_stats=True):
        """Logits at date n, shape (n_points, J)."""
        return self.nets[n].forward(self.inputs(n, states, regimes), mode=mode, record=record,
                                    track_stats=track_stats)

    def probabilities(self, n, states, regimes, temperature=1.):
        return softmax(self.logits(n, states, regimes)/temperature)

    def decide(self, n, states, regimes):
        """Hard decisions at date n, shape (n_points,)."""
        return self.logits(n, states, regimes).argmax(axis=1)


def softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    weights = np.exp(shifted)
    return weights/weights.sum(axis=1, keepdims=True)


def decision_table(policy, date_states, start_index=0):
    """
    Hard decisions D[p, m, i] from regime i at date start_index + m, given the
    states at dates start_index..N-1 as an array (n_paths, n_dates, d).
    """
    P, M = date_states.shape[:2]
    J = policy.n_regimes
    D = np.empty((P, M, J), dtype=int)
    for m in range(M):
        for i in range(J):
            D[:, m, i] = policy.decide(start_index + m, date_states[:, m], i)
    return D


def rollout(decisions, payoffs, start_regime):
    """
    Realized payoff of following `decisions` (n_paths, n_intervals, J) from
    `start_regime`: running payoffs of the chosen regimes, minus switching
    costs, plus the terminal payoff of the final regime.

    Returns the per-path totals and switch counts.
    """
    P, M, _ = decisions.shape
    rows = np.arange(P)
    regime = np.full(P, start_regime)
    total = np.zeros(P)
    switches = np.zeros(P, dtype=int)
    for m in range(M):
        choice = decisions[rows, m, regime]
        total += payoffs.F[rows, m, choice] - payoffs.L[rows, m, regime, choice]
        switches += choice != regime
        regime = choice
    total += payoffs.G[rows, regime]
    return total, switches


@dataclass
class LowerBoundReport:
    values: np.ndarray
    standard_errors: np.ndarray
    n_paths: int
    mean_switches: np.ndarray
    max_switches: np.ndarray

    def as_dict(self):
        return {
            'lower_bound': self.values.tolist(),
            'standard_error': self.standard_errors.tolist(),
            'n_paths': self.n_paths,
            'mean_switches': self.mean_switches.tolist(),
            'max_switches': self.max_switches.tolist(),
        }


def evaluate_policy(problem, policy, paths, payoffs=None):
    """
    Lower bounds of the hard rule of `policy` from every starting regime,
    estimated on `paths` (which must not have been used for training).
    """
    if payoffs is None:
        payoffs = evaluate_payoffs(problem, paths)
    K = problem.grid.substeps
    date_states = paths.states[:, :-1:K]
    decisions = decision_table(policy, date_states, paths.start_index)
    J = problem.n_regimes
    values, errors, mean_switches, max_switches = [np.zeros(J) for _ in range(4)]
    for i in range(J):
        totals, switches = rollout(decisions, payoffs, i)
        values[i] = totals.mean()
        errors[i] = totals.std(ddof=1)/np.sqrt(len(totals)) if len(totals) > 1 else np.nan
        mean_switches[i] = switches.mean()
        max_switches[i] = switches.max()
    return LowerBoundReport(values=values, standard_errors=errors, n_paths=paths.n_paths,
                            mean_switches=mean_switches, max_switches=max_switches)
