"""
Tail risk of Monte Carlo samples.

Quantiles use linear interpolation between order statistics (type 7, the
numpy default).
"""

import numpy as np

# fewer samples give no risk metrics
MIN_SAMPLES = 1000

LEVELS = (0.95, 0.99)


def _samples(samples):
    samples = np.asarray(samples, dtype=float).ravel()
    if len(samples) < MIN_SAMPLES:
        raise ValueError("Risk metrics need at least {} samples, got {}".format(MIN_SAMPLES, len(samples)))
    return samples


def value_at_risk(samples, level):
    """The `level` quantile of the samples (large values are bad)."""
    if not 0 < level < 1:
        raise ValueError("Level violation: 0 < {} < 1".format(level))
    return float(np.quantile(_samples(samples), level))


def conditional_value_at_risk(samples, level):
    """Mean of the samples at or beyond the value at risk."""
    samples = _samples(samples)
    var = value_at_risk(samples, level)
    return float(samples[samples >= var].mean())


def tail_metrics(samples, levels=LEVELS):
    """VaR and CVaR at each level, keyed by level."""
    samples = _samples(samples)
    return {level: (value_at_risk(samples, level), conditional_value_at_risk(samples, level)) for level in levels}
