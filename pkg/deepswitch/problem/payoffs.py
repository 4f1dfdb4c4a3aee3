"""
Pathwise evaluation of running payoff integrals, switching costs and
terminal payoffs.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import NumericError


@dataclass
class PayoffTables:
    """
    Payoffs along paths, for the intervals from date `start_index` on.

    F[p, m, j]     integral of f^j over interval start_index + m
    L[p, m, i, j]  switching cost l_ij at date start_index + m
    G[p, j]        terminal payoff Phi^j
    """
    F: np.ndarray
    L: np.ndarray
    G: np.ndarray
    start_index: int = 0

    @property
    def n_paths(self):
        return self.G.shape[0]

    @property
    def n_intervals(self):
        return self.F.shape[1]

    @property
    def n_regimes(self):
        return self.G.shape[1]


def _check_finite(values, what, first_step=0):
    """Raise with the first offending (path, step) of a (n_paths, n_steps) array."""
    bad = ~np.isfinite(values)
    if bad.any():
        path, step = np.argwhere(bad)[0]
        raise NumericError("Non-finite {}".format(what), path=int(path), step=int(first_step + step))


def evaluate_payoffs(problem, paths, quadrature=None):
    """
    Evaluate the payoff tables of `problem` along `paths`.

    Running integrals use the left-endpoint rule over the K substeps of each
    interval unless `quadrature` (or the problem) asks for ``'trapezoid'``.
    """
    grid = problem.grid
    if paths.grid != grid:
        raise ValueError("Paths grid {} does not equal problem grid {}".format(paths.grid, grid))
    if paths.dim != problem.dim:
        raise ValueError("Paths dimension {} does not equal problem dimension {}".format(paths.dim, problem.dim))
    quadrature = quadrature or problem.quadrature
    J = problem.n_regimes
    P = paths.n_paths
    K = grid.substeps
    start = paths.start_index
    n_intervals = grid.dates - start
    n_steps = n_intervals * K
    first_step = grid.get_offset(start)

    times = grid.step_times(start)
    flat_states = paths.states.reshape(-1, paths.dim)
    flat_times = np.tile(times, P)

    F = np.empty((P, n_intervals, J))
    for j in range(J):
        values = problem.running_payoff(j, flat_times, flat_states).reshape(P, n_steps + 1)
        _check_finite(values, "running payoff of regime {}".format(j), first_step)
        if quadrature == 'left':
            per_step = values[:, :-1]
        else:
            per_step = 0.5*(values[:, :-1] + values[:, 1:])
        F[:, :, j] = per_step.reshape(P, n_intervals, K).sum(axis=2) * grid.dt

    L = np.empty((P, n_intervals, J, J))
    for m in range(n_intervals):
        n = start + m
        L[:, m] = problem.cost_matrix(grid.date_time(n), paths.date_states(n))
        bad = ~np.isfinite(L[:, m]).all(axis=(1, 2))
        if bad.any():
            raise NumericError("Non-finite switching cost at date {}".format(n),
                               path=int(np.argmax(bad)), step=grid.get_offset(n))

    terminal_states = paths.date_states(grid.dates)
    G = np.stack([problem.terminal_payoff(j, terminal_states) for j in range(J)], axis=1)
    _check_finite(G, "terminal payoff", grid.n_steps)

    return PayoffTables(F=F, L=L, G=G, start_index=start)
