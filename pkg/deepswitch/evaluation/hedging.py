"""
Hedging errors of trained penalties and the delta ratios they induce.

The hedging error of regime i on a path is H = U_0^i - UB_i: what remains
of the pathwise dual value once the hedge martingale is subtracted and the
price estimate UB_i is charged. Risk metrics are reported on H
("shortfall") or on -H ("loss").
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ConfigurationError
from ..market.simulation import simulate
from ..utils.seeding import derive_seed
from .bounds import CHUNK_PATHS, upper_samples
from .risk import LEVELS, tail_metrics

logger = logging.getLogger(__name__)

SIGNS = ('shortfall', 'loss')


@dataclass
class HedgeReport:
    regime: int
    price: float
    errors: np.ndarray
    sign: str = 'shortfall'
    levels: tuple = LEVELS
    metrics: dict = field(default_factory=dict)
    bins: int = 50
    seed: Optional[int] = None

    def __post_init__(self):
        if self.sign not in SIGNS:
            raise ConfigurationError("Unknown sign convention {}, expected one of {}".format(self.sign, SIGNS))
        self.errors = np.asarray(self.errors, dtype=float)
        if not self.metrics:
            self.metrics = tail_metrics(self.signed, self.levels)

    @property
    def signed(self):
        return self.errors if self.sign == 'shortfall' else -self.errors

    @property
    def n_samples(self):
        return len(self.errors)

    def var(self, level):
        return self.metrics[level][0]

    def cvar(self, level):
        return self.metrics[level][1]

    def histogram(self):
        """Counts and bin edges of the signed errors."""
        return np.histogram(self.signed, bins=self.bins)

    def as_dict(self):
        return {
            'regime': self.regime + 1,
            'price': self.price,
            'sign': self.sign,
            'definition': 'H = U_0 - UB' if self.sign == 'shortfall' else 'UB - U_0',
            'n_samples': self.n_samples,
            'mean': float(self.signed.mean()),
            'var': {str(level): self.var(level) for level in self.levels},
            'cvar': {str(level): self.cvar(level) for level in self.levels},
            'seed': self.seed,
        }


def hedging_errors(problem, penalty, regime, n_paths, seed, price=None, sign='shortfall', workers=1,
                   chunk_paths=CHUNK_PATHS, bins=50):
    """
    Hedging errors of `penalty` for `regime` on fresh paths.

    `price` is the upper-bound estimate UB_i. Without it the sample mean of
    the dual values is charged, which centres the errors.
    """
    if not 0 <= regime < problem.n_regimes:
        raise ValueError("Regime index violation: 0 <= {} < {}".format(regime, problem.n_regimes))
    hedge_seed = derive_seed(seed, 'hedge')
    values = []
    for start in range(0, n_paths, chunk_paths):
        size = min(chunk_paths, n_paths - start)
        paths = simulate(problem.dynamics, problem.grid, size, hedge_seed, path_offset=start, workers=workers)
        values.append(upper_samples(problem, penalty, paths)[:, regime])
    values = np.concatenate(values)
    if price is None:
        price = float(values.mean())
        logger.warning("no upper bound given for regime %d, charging the sample mean %.6g of the hedge paths",
                       regime + 1, price)
    report = HedgeReport(regime=regime, price=price, errors=values - price, sign=sign, bins=bins, seed=seed)
    logger.info("hedging errors of regime %d (%s) on %d paths: %s", regime + 1, sign, n_paths,
                ', '.join('CVaR{:g} {:.4g}'.format(100*level, report.cvar(level)) for level in report.levels))
    return report


def delta_ratio(problem, penalty, n, t, states, regime=None):
    """
    Hedge ratios Pi solving sigma(t, x) Pi = z_n^i(t, x) at every state.

    Returns the ratios (n_points, d), NaN where sigma is singular, and the
    mask of those singular states.
    """
    regime = problem.reference_regime if regime is None else regime
    states = np.atleast_2d(np.asarray(states, dtype=float))
    z = penalty.integrand(n, regime, t, states)
    sigma = problem.dynamics.diffusion(t, states)
    try:
        ratios = np.linalg.solve(sigma, z[:, :, None])[:, :, 0]
        singular = ~np.isfinite(ratios).all(axis=1)
    except np.linalg.LinAlgError:
        ratios = np.full_like(z, np.nan)
        singular = np.zeros(len(states), dtype=bool)
        for p in range(len(states)):
            try:
                ratios[p] = np.linalg.solve(sigma[p], z[p])
            except np.linalg.LinAlgError:
                singular[p] = True
    ratios[singular] = np.nan
    if singular.any():
        logger.warning("diffusion matrix singular at %d of %d states", int(singular.sum()), len(states))
    return ratios, singular
