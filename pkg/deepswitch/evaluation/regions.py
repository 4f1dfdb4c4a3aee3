"""
Preferred-regime partitions of the state space at an intervention date.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from ..market.simulation import simulate, simulate_conditional
from ..utils.seeding import PATH_BLOCK, derive_seed
from .bounds import CHUNK_PATHS, dual_values

logger = logging.getLogger(__name__)


@dataclass
class RegionExport:
    """
    dual_choice[p, i]    regime chosen at `date` from regime i by the dual-induced rule
    primal_choice[p, i]  the same for the hard rule of the policy (None without policy)

    Regimes are 0-based here and 1-based in `frame`.
    """
    date: int
    states: np.ndarray
    dual_choice: np.ndarray
    primal_choice: Optional[np.ndarray] = None

    @property
    def n_regimes(self):
        return self.dual_choice.shape[1]

    def frame(self):
        """One row per (state, current regime)."""
        P, d = self.states.shape
        J = self.n_regimes
        data = {'x{}'.format(k + 1): np.repeat(self.states[:, k], J) for k in range(d)}
        data['regime'] = np.tile(np.arange(1, J + 1), P)
        data['dual'] = self.dual_choice.ravel() + 1
        if self.primal_choice is not None:
            data['primal'] = self.primal_choice.ravel() + 1
        return pd.DataFrame(data)

    def agreement(self):
        """Fraction of (state, regime) pairs where both rules agree."""
        if self.primal_choice is None:
            return np.nan
        return float(np.mean(self.dual_choice == self.primal_choice))


def export_regions(problem, penalty, policy, n, n_states, seed, workers=1, chunk_paths=CHUNK_PATHS):
    """
    Sample states at date n and record the regime preferred from each
    current regime by the dual-induced rule and, when given, by the policy.

    The dual rule is the maximizing index of the dual recursion at date n,
    run on one fresh continuation path per sampled state.
    """
    grid = problem.grid
    if not 0 <= n < grid.dates:
        raise ValueError("Intervention date violation: 0 <= {} < {}".format(n, grid.dates))
    if chunk_paths % PATH_BLOCK:
        raise ValueError("Chunk size {} is not a multiple of {}".format(chunk_paths, PATH_BLOCK))
    state_seed = derive_seed(seed, 'regions', 'states')
    path_seed = derive_seed(seed, 'regions', 'continuation')
    states, dual, primal = [], [], []
    for start in range(0, n_states, chunk_paths):
        size = min(chunk_paths, n_states - start)
        sampled = simulate(problem.dynamics, grid, size, state_seed, path_offset=start,
                           workers=workers).date_states(n)
        continuation = simulate_conditional(problem.dynamics, grid, n, sampled, size, path_seed,
                                            path_offset=start, workers=workers)
        dual.append(dual_values(problem, penalty, continuation).a[:, 0])
        if policy is not None:
            primal.append(np.stack([policy.decide(n, sampled, i) for i in range(problem.n_regimes)], axis=1))
        states.append(sampled)
    export = RegionExport(date=n, states=np.concatenate(states), dual_choice=np.concatenate(dual),
                          primal_choice=np.concatenate(primal) if policy is not None else None)
    logger.info("exported regimes at %d states of date %d, rules agree on %.3f", n_states, n, export.agreement())
    return export
