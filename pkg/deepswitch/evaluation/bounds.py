"""
Out-of-sample upper and lower bounds.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..dual.recursion import dual_backward
from ..errors import ConfigurationError
from ..market.simulation import simulate
from ..primal.policy import decision_table, rollout
from ..problem.payoffs import evaluate_payoffs
from ..utils.seeding import PATH_BLOCK, derive_seed

logger = logging.getLogger(__name__)

# paths per evaluation chunk, a multiple of PATH_BLOCK
CHUNK_PATHS = 16 * PATH_BLOCK


class Moments:
    """
    Running mean and variance per column, merged chunk by chunk (Chan et al.).
    """

    def __init__(self, width):
        self.count = 0
        self.mean = np.zeros(width)
        self.m2 = np.zeros(width)

    def add(self, samples):
        samples = np.asarray(samples, dtype=float)
        count = len(samples)
        if count == 0:
            return
        mean = samples.mean(axis=0)
        m2 = ((samples - mean)**2).sum(axis=0)
        total = self.count + count
        delta = mean - self.mean
        self.mean = self.mean + delta*count/total
        self.m2 = self.m2 + m2 + delta**2*self.count*count/total
        self.count = total

    @property
    def standard_error(self):
        if self.count < 2:
            return np.full_like(self.mean, np.nan)
        return np.sqrt(self.m2/(self.count - 1)/self.count)


@dataclass
class BoundReport:
    upper: np.ndarray
    upper_se: np.ndarray
    lower: np.ndarray
    lower_se: np.ndarray
    n_paths: int
    seed: Optional[int] = None
    eval_seed: Optional[int] = None

    @property
    def gap(self):
        return self.upper - self.lower

    @property
    def max_gap(self):
        return float(np.max(self.gap))

    def consistent(self, n_se=4.):
        """Weak duality at the estimator level: UB_i >= LB_i - n_se*(SE_UB + SE_LB) for all i."""
        slack = self.upper - self.lower + n_se*(np.nan_to_num(self.upper_se) + np.nan_to_num(self.lower_se))
        return bool(np.all(slack >= 0))

    @classmethod
    def from_samples(cls, upper, lower, weights=None, seed=None, eval_seed=None):
        """
        Report from per-path samples (n_paths, J), optionally weighted
        (exact expectations over a finite tree, with zero standard errors).
        """
        upper = np.asarray(upper, dtype=float)
        lower = np.asarray(lower, dtype=float)
        if weights is not None:
            weights = np.asarray(weights, dtype=float)/np.sum(weights)
            zeros = np.zeros(upper.shape[1])
            return cls(upper=weights @ upper, upper_se=zeros, lower=weights @ lower, lower_se=zeros.copy(),
                       n_paths=len(upper), seed=seed, eval_seed=eval_seed)
        moments = []
        for samples in (upper, lower):
            m = Moments(samples.shape[1])
            m.add(samples)
            moments.append(m)
        return cls(upper=moments[0].mean, upper_se=moments[0].standard_error,
                   lower=moments[1].mean, lower_se=moments[1].standard_error,
                   n_paths=len(upper), seed=seed, eval_seed=eval_seed)

    def as_dict(self):
        return {
            'upper_bound': self.upper.tolist(),
            'upper_standard_error': self.upper_se.tolist(),
            'lower_bound': self.lower.tolist(),
            'lower_standard_error': self.lower_se.tolist(),
            'gap': self.gap.tolist(),
            'max_gap': self.max_gap,
            'n_paths': self.n_paths,
            'seed': self.seed,
            'eval_seed': self.eval_seed,
        }

    def table_row(self):
        """One row of the bounds table, regimes numbered from 1."""
        row = {}
        for i, (ub, se) in enumerate(zip(self.upper, self.upper_se), 1):
            row['UB_{}'.format(i)] = ub
            row['UB_SE_{}'.format(i)] = se
        for i, (lb, se) in enumerate(zip(self.lower, self.lower_se), 1):
            row['LB_{}'.format(i)] = lb
            row['LB_SE_{}'.format(i)] = se
        row['Gap(max)'] = self.max_gap
        row['paths'] = self.n_paths
        return row


def dual_values(problem, penalty, paths, payoffs=None):
    """Dual values of `penalty` along `paths` with eval-mode networks."""
    if payoffs is None:
        payoffs = evaluate_payoffs(problem, paths)
    increments = np.stack([penalty.increments(paths, n, mode='eval')
                           for n in range(paths.start_index, problem.grid.dates)], axis=1)
    return dual_backward(problem, payoffs, increments)


def upper_samples(problem, penalty, paths, payoffs=None):
    """Per-path dual values at the first date of `paths`, shape (n_paths, J)."""
    values = dual_values(problem, penalty, paths, payoffs)
    return values.at(paths.start_index)


def lower_samples(problem, policy, paths, payoffs=None):
    """Per-path realized payoffs of the hard rule of `policy` from every regime, shape (n_paths, J)."""
    if payoffs is None:
        payoffs = evaluate_payoffs(problem, paths)
    K = problem.grid.substeps
    decisions = decision_table(policy, paths.states[:, :-1:K], paths.start_index)
    return np.stack([rollout(decisions, payoffs, i)[0] for i in range(problem.n_regimes)], axis=1)


def estimate_bounds(problem, penalty, policy, n_eval_paths, seed, workers=1, chunk_paths=CHUNK_PATHS):
    """
    Upper bounds of `penalty` and lower bounds of `policy` on fresh paths.

    The evaluation stream is derived from `seed` under its own label, so it
    never overlaps training batches. Paths are processed in chunks; without a
    policy the lower bounds are NaN.
    """
    if n_eval_paths < 2:
        raise ConfigurationError("At least two evaluation paths are needed, got {}".format(n_eval_paths))
    if chunk_paths % PATH_BLOCK:
        raise ConfigurationError("Chunk size {} is not a multiple of {}".format(chunk_paths, PATH_BLOCK))
    eval_seed = derive_seed(seed, 'evaluate')
    J = problem.n_regimes
    upper, lower = Moments(J), Moments(J)
    for start in range(0, n_eval_paths, chunk_paths):
        size = min(chunk_paths, n_eval_paths - start)
        paths = simulate(problem.dynamics, problem.grid, size, eval_seed, path_offset=start, workers=workers)
        payoffs = evaluate_payoffs(problem, paths)
        upper.add(upper_samples(problem, penalty, paths, payoffs))
        if policy is not None:
            lower.add(lower_samples(problem, policy, paths, payoffs))
        logger.debug("evaluated %d of %d paths", start + size, n_eval_paths)
    if policy is None:
        lower.mean[:] = np.nan
    report = BoundReport(upper=upper.mean, upper_se=upper.standard_error, lower=lower.mean,
                         lower_se=lower.standard_error if policy is not None else np.full(J, np.nan),
                         n_paths=n_eval_paths, seed=seed, eval_seed=eval_seed)
    logger.info("bounds on %d paths: UB %s, LB %s, max gap %.4g", n_eval_paths,
                np.round(report.upper, 4), np.round(report.lower, 4), report.max_gap)
    return report
