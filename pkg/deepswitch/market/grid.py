"""
Intervention dates and the fine simulation subgrid.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError


@dataclass(frozen=True)
class TimeGrid:
    """
    Uniform grid of N intervention dates on [0, T], each interval split in K substeps.

    Global step ``n*K + k`` is the substep time ``t_k^n = n*T/N + k*dt``;
    ``t_K^n`` and ``t_0^{n+1}`` are the same global step.
    """
    horizon: float
    dates: int
    substeps: int = 1

    def __post_init__(self):
        if not self.dates >= 1:
            raise ConfigurationError("Number of dates must be at least 1, got {}".format(self.dates))
        if not self.substeps >= 1:
            raise ConfigurationError("Number of substeps must be at least 1, got {}".format(self.substeps))
        if not self.horizon > 0:
            raise ConfigurationError("Non-positive step: horizon {} over {} steps".format(self.horizon, self.dates*self.substeps))

    @property
    def n_steps(self):
        return self.dates * self.substeps

    @property
    def dt(self):
        return self.horizon / self.n_steps

    @property
    def interval(self):
        """Length T/N between intervention dates."""
        return self.horizon / self.dates

    def get_offset(self, n, k=0):
        """
        Global step index of substep k of interval n.
        """
        if not 0 <= n <= self.dates:
            raise ValueError("Date index violation: 0 <= {} <= {}".format(n, self.dates))
        max_k = self.substeps if n < self.dates else 0
        if not 0 <= k <= max_k:
            raise ValueError("Date {}: substep violation: 0 <= {} <= {}".format(n, k, max_k))
        return n * self.substeps + k

    def step_times(self, start_index=0):
        """
        Times of all global steps from date `start_index` to the horizon.
        """
        first = self.get_offset(start_index)
        return np.arange(first, self.n_steps + 1) * self.dt

    def date_time(self, n):
        return self.get_offset(n) * self.dt

    def date_times(self):
        return np.arange(self.dates + 1) * self.interval

    def substep_times(self, n):
        """
        Left endpoints t_0^n, ..., t_{K-1}^n of the substeps of interval n.
        """
        if not 0 <= n < self.dates:
            raise ValueError("Interval index violation: 0 <= {} < {}".format(n, self.dates))
        return (self.get_offset(n) + np.arange(self.substeps)) * self.dt

    def as_dict(self):
        return {'horizon': self.horizon, 'dates': self.dates, 'substeps': self.substeps}
