"""
Optimal switching problem instances.
"""

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError
from ..market.dynamics import Dynamics
from ..market.grid import TimeGrid
from .expressions import Expression

logger = logging.getLogger(__name__)

QUADRATURES = ('left', 'trapezoid')


class SwitchingProblem:
    """
    J regimes with running payoffs f^i(t, x), terminal payoffs Phi^i(x) and
    switching costs l_ij(t, x), over a time grid and state dynamics.

    Regimes are indexed 0..J-1; `reference_regime` is the regime whose dual
    loss is trained.
    """

    def __init__(self, grid, dynamics, running, terminal, costs, reference_regime=0,
                 quadrature='left', name='custom'):
        if not isinstance(grid, TimeGrid):
            raise ConfigurationError("grid must be a TimeGrid, got {}".format(type(grid).__name__))
        if not isinstance(dynamics, Dynamics):
            raise ConfigurationError("dynamics must be a Dynamics, got {}".format(type(dynamics).__name__))
        self.grid = grid
        self.dynamics = dynamics
        self.running = [Expression(f) for f in running]
        self.terminal = [Expression(phi) for phi in terminal]
        J = len(self.running)
        if J < 1:
            raise ConfigurationError("At least one regime is needed")
        if len(self.terminal) != J:
            raise ConfigurationError("{} terminal payoffs for {} regimes".format(len(self.terminal), J))
        if len(costs) != J or any(len(row) != J for row in costs):
            raise ConfigurationError("Switching costs must form a {0}x{0} table".format(J))
        self.costs = [[Expression(c) for c in row] for row in costs]
        for i in range(J):
            if self.costs[i][i].constant != 0.:
                raise ConfigurationError("Cost l_{0}{0} must be the constant 0, got {1!r}".format(i, self.costs[i][i].source))
        if not 0 <= reference_regime < J:
            raise ConfigurationError("Reference regime violation: 0 <= {} < {}".format(reference_regime, J))
        self.reference_regime = reference_regime
        if quadrature not in QUADRATURES:
            raise ConfigurationError("Quadrature {} not in {}".format(quadrature, QUADRATURES))
        self.quadrature = quadrature
        self.name = name

    @property
    def n_regimes(self):
        return len(self.running)

    @property
    def dim(self):
        return self.dynamics.dim

    def running_payoff(self, j, t, x):
        return self.running[j].evaluate(t, x)

    def terminal_payoff(self, j, x):
        return self.terminal[j].evaluate(self.grid.horizon, x)

    def cost_matrix(self, t, x):
        """
        Switching costs at states x (n_points, d), shape (n_points, J, J).
        """
        J = self.n_regimes
        out = np.zeros((len(x), J, J))
        for i, j in itertools.product(range(J), repeat=2):
            if i != j:
                out[:, i, j] = self.costs[i][j].evaluate(t, x)
        return out

    def with_grid(self, grid):
        return SwitchingProblem(grid, self.dynamics, self.running, self.terminal, self.costs,
                                reference_regime=self.reference_regime,
                                quadrature=self.quadrature, name=self.name)

    def as_dict(self):
        return {
            'name': self.name,
            'grid': self.grid.as_dict(),
            'dynamics': self.dynamics.as_dict(),
            'running': [f.source for f in self.running],
            'terminal': [phi.source for phi in self.terminal],
            'costs': [[c.source for c in row] for row in self.costs],
            'reference_regime': self.reference_regime,
            'quadrature': self.quadrature,
        }

    @classmethod
    def from_dict(cls, spec):
        """
        Problem from an inline configuration mapping.
        """
        spec = dict(spec)
        try:
            grid = TimeGrid(spec.pop('horizon'), spec.pop('dates'), spec.pop('substeps', 1))
            dynamics = Dynamics.from_dict(spec.pop('dynamics'))
            running = spec.pop('running')
            terminal = spec.pop('terminal')
            costs = spec.pop('costs')
        except KeyError as error:
            raise ConfigurationError("Missing problem entry {}".format(error))
        return cls(grid, dynamics, running, terminal, costs, **spec)

    @classmethod
    def from_name(cls, name, **parameters):
        """
        Return one of the built-in problems.
        """
        from .builtins import BUILTIN_PROBLEMS
        if name not in BUILTIN_PROBLEMS:
            raise ConfigurationError("No built-in problem of name {}".format(name))
        return BUILTIN_PROBLEMS[name](**parameters)


@dataclass
class TriangularReport:
    """
    Outcome of the strict triangular check l_ij + l_jk > l_ik.

    Triples are 0-based (i, j, k) with i != j and j != k.
    """
    min_slack: float
    max_violation: float
    binding: list = field(default_factory=list)
    violated: list = field(default_factory=list)
    n_samples: int = 0
    tolerance: float = 1e-12

    @property
    def passed(self):
        return self.min_slack > self.tolerance

    @property
    def equality(self):
        """Strictness fails only through equality cases."""
        return not self.passed and not self.violated


def triangular_report(cost_tables, tolerance=1e-12):
    """
    Check l_ij + l_jk > l_ik on an iterable of cost arrays (n_points, J, J).
    """
    slack = None
    n_samples = 0
    for costs in cost_tables:
        costs = np.asarray(costs, dtype=float)
        n_samples += len(costs)
        # slack[i, j, k] minimised over points
        current = (costs[:, :, :, None] + costs[:, None, :, :] - costs[:, :, None, :]).min(axis=0)
        slack = current if slack is None else np.minimum(slack, current)
    if slack is None:
        raise ValueError("No switching costs to check")
    J = slack.shape[0]
    if J == 1:
        return TriangularReport(min_slack=np.inf, max_violation=-np.inf, n_samples=n_samples, tolerance=tolerance)

    triples = [(i, j, k) for i, j, k in itertools.product(range(J), repeat=3) if i != j and j != k]
    values = np.array([slack[triple] for triple in triples])
    report = TriangularReport(
        min_slack=float(values.min()),
        max_violation=float(-values.min()),
        binding=[triple for triple, s in zip(triples, values) if abs(s) <= tolerance],
        violated=[triple for triple, s in zip(triples, values) if s < -tolerance],
        n_samples=n_samples,
        tolerance=tolerance,
    )
    if report.violated:
        logger.warning("Triangular condition violated on %d triples, worst by %.3e",
                       len(report.violated), report.max_violation)
    elif not report.passed:
        logger.warning("Triangular condition holds only with equality on triples %s", report.binding)
    return report


def validate_triangular(problem, sample_states, dates, tolerance=1e-12):
    """
    Check the strict triangular condition on sampled states at the given dates.

    `sample_states` is either (n_points, d), used at every date, or
    (len(dates), n_points, d).
    """
    states = np.asarray(sample_states, dtype=float)
    if states.ndim == 2:
        states = np.broadcast_to(states, (len(dates),) + states.shape)
    if states.ndim != 3 or states.shape[0] != len(dates) or states.shape[1] == 0:
        raise ValueError("sample_states.shape {} does not match {} dates".format(states.shape, len(dates)))
    return triangular_report((problem.cost_matrix(problem.grid.date_time(n), x) for n, x in zip(dates, states)),
                             tolerance=tolerance)
