"""
Baselines eta_n for the L2 surrogate loss.

A baseline is a cheap lower estimate of the value process at date n; the
surrogate loss pulls the dual value towards it.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError
from ..problem.expressions import Expression

# default parameters of each form
BASELINE_FORMS = {
    'zero': {},
    'linear_in_n': {'rate': 0.45},
    'expou_moment': {
        'cost_slope': 0.01,
        'cost_floor': 0.001,
        'running': 1/720,
        'growth': 0.02,
        'floor': 6.,
    },
    'expression': {'source': '0'},
}


@dataclass
class Baseline:
    form: str = 'zero'
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.form not in BASELINE_FORMS:
            raise ConfigurationError("Unknown baseline form {}, expected one of {}".format(self.form, sorted(BASELINE_FORMS)))
        unknown = set(self.parameters) - set(BASELINE_FORMS[self.form])
        if unknown:
            raise ConfigurationError("Unknown parameters {} for baseline {}".format(sorted(unknown), self.form))
        self.parameters = dict(BASELINE_FORMS[self.form], **self.parameters)
        if self.form == 'expression':
            self._expression = Expression(self.parameters['source'], variables=('n', 'N'))

    def evaluate(self, n, N, states, t=0.):
        """eta_n at states (n_paths, d) and time t of date n, shape (n_paths,)."""
        states = np.asarray(states, dtype=float)
        P = len(states)
        par = self.parameters
        if self.form == 'zero':
            return np.zeros(P)
        if self.form == 'linear_in_n':
            return np.full(P, par['rate']*(n - N))
        if self.form == 'expou_moment':
            if states.shape[1] < 2:
                raise ConfigurationError("expou_moment baseline needs d >= 2")
            moment = np.exp(par['growth'])*np.maximum(states[:, 1:].mean(axis=1), par['floor'])
            return (n - N)*(par['cost_slope']*moment + par['cost_floor'] + par['running'])
        return self._expression.evaluate(t, states, n=n, N=N)

    def as_dict(self):
        return {'form': self.form, 'parameters': dict(self.parameters)}


def baseline_eval(baseline, n, states, N, t=0.):
    """Pathwise eta_n."""
    return baseline.evaluate(n, N, states, t=t)
