"""
Pathwise dual upper-bound recursion

    U_N^i = Phi^i,
    U_n^i = max_j [ F_n^j - l_ij(t_n) - xi_n^j + U_{n+1}^j ],

and the training losses built on it.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import NumericError


@dataclass
class DualValues:
    """
    U[p, m, i]  dual value of regime i at date start_index + m
    a[p, m, i]  maximizing regime j of that date (smallest index on ties)
    """
    U: np.ndarray
    a: np.ndarray
    start_index: int = 0

    def at(self, n):
        """Values at date n, shape (n_paths, J)."""
        return self.U[:, n - self.start_index]


def dual_step(F, L, xi, U_next):
    """
    One backward step. F, xi, U_next have shape (n_paths, J) and L (n_paths, J, J).

    Returns the values (n_paths, J) and argmax regimes (n_paths, J).
    """
    candidates = (F - xi + U_next)[:, None, :] - L
    choice = candidates.argmax(axis=2)
    values = np.take_along_axis(candidates, choice[:, :, None], axis=2)[:, :, 0]
    return values, choice


def dual_backward(problem, payoffs, increments):
    """
    Run the dual recursion along paths.

    `increments` has shape (n_paths, n_intervals, J), aligned with the
    intervals of `payoffs`. `problem` only fixes the number of regimes, so a
    lattice model can stand in for a switching problem.
    """
    increments = np.asarray(increments, dtype=float)
    P, M, J = payoffs.F.shape
    if J != problem.n_regimes:
        raise ValueError("Payoffs have {} regimes, problem has {}".format(J, problem.n_regimes))
    if increments.shape != (P, M, J):
        raise ValueError('increments.shape {} does not equal {}'.format(increments.shape, (P, M, J)))
    U = np.empty((P, M + 1, J))
    a = np.empty((P, M, J), dtype=int)
    U[:, M] = payoffs.G
    for m in reversed(range(M)):
        U[:, m], a[:, m] = dual_step(payoffs.F[:, m], payoffs.L[:, m], increments[:, m], U[:, m + 1])
        bad = ~np.isfinite(U[:, m]).all(axis=1)
        if bad.any():
            raise NumericError("Non-finite dual value", path=int(np.argmax(bad)), step=payoffs.start_index + m)
    return DualValues(U=U, a=a, start_index=payoffs.start_index)


def loss_upper(values, regime, n=None):
    """
    Upper-bound loss: batch mean of U_n^regime (date 0 unless `n` is given).
    """
    n = values.start_index if n is None else n
    return float(np.mean(values.at(n)[:, regime]))


def loss_l2(values, baseline, regime, n=None, states=None, dates=None, t=0.):
    """
    L2 surrogate loss: batch mean of |U_n^regime - eta_n|^2.

    `baseline` is either the per-path array of eta_n or a `Baseline`, in
    which case the states at date n and the number of dates are needed; `t`
    is the time of date n.
    """
    n = values.start_index if n is None else n
    if hasattr(baseline, 'evaluate'):
        if states is None or dates is None:
            raise ValueError("Evaluating a baseline needs the states at date {} and the number of dates".format(n))
        baseline = baseline.evaluate(n, dates, states, t=t)
    residual = values.at(n)[:, regime] - np.asarray(baseline, dtype=float)
    return float(np.mean(residual**2))


def propagation_slack(first, second, first_increments, second_increments):
    """
    Pathwise slack of the one-step error bound between two penalties,

        max_i |U_{n+1}^i - V_{n+1}^i| + max_i |xi_n^i - zeta_n^i| - max_i |U_n^i - V_n^i|,

    for every path and date covered by the two `DualValues`. Shape (n_paths, n_intervals).
    """
    step_gap = np.abs(np.asarray(first_increments) - np.asarray(second_increments)).max(axis=2)
    value_gap = np.abs(first.U - second.U).max(axis=2)
    return value_gap[:, 1:] + step_gap - value_gap[:, :-1]
