"""
Built-in switching problems.
"""

import numpy as np

from ..errors import ConfigurationError
from ..market.dynamics import GBM, ExpOUJump
from ..market.grid import TimeGrid
from .problem import SwitchingProblem

GBM_PARAMETERS = {
    "x0": 50.,
    "drift": -0.05,
    # first half of the coordinates
    "low_volatility": 0.2,
    # second half
    "high_volatility": 0.3,
    "horizon": 1.,
    "dates": 12,
    "cost_rate": 0.2,
}

EXPOU_PARAMETERS = {
    "power": 50.,
    "fuel": 6.,
    "kappa": 2.,
    "power_volatility": 0.5,
    "fuel_volatility": 0.3,
    # jumps hit the first coordinate only
    "jump_size": 0.3,
    "jump_intensity": 4.,
    "heat_rate": 7.5,
    "horizon": 0.25,
    "dates": 180,
    "cost_slope": 0.01,
    "cost_floor": 0.001,
}


def gbm_dynamics(d, drift=None):
    par = GBM_PARAMETERS
    volatility = np.where(np.arange(1, d + 1) <= d/2, par["low_volatility"], par["high_volatility"])
    return GBM(x0=np.full(d, par["x0"]), drift=par["drift"] if drift is None else drift, volatility=volatility)


def gbm3regime(d=2, dates=None, substeps=None, horizon=None):
    """
    Three regimes on a d-dimensional GBM:
    f^1 = -0.5, f^2 = 2 mean(x) - 100, f^3 = 2 (x_1 - 1.1 x_d) - 1,
    no terminal payoff and costs 0.2 |i - j|.
    """
    par = GBM_PARAMETERS
    grid = TimeGrid(horizon or par["horizon"], dates or par["dates"], substeps or 60 + d)
    running = ['-0.5', '2*mean(x) - 100', '2*(x[0] - 1.1*x[-1]) - 1']
    costs = [[par["cost_rate"]*abs(i - j) for j in range(3)] for i in range(3)]
    return SwitchingProblem(grid, gbm_dynamics(d), running, [0., 0., 0.], costs, name='gbm3regime')


def single_regime(d=2, dates=None, substeps=None, horizon=None):
    """
    One regime on the gbm3regime dynamics, no running payoff and terminal
    payoff the sum of the coordinates.
    """
    par = GBM_PARAMETERS
    grid = TimeGrid(horizon or par["horizon"], dates or par["dates"], substeps or 60 + d)
    return SwitchingProblem(grid, gbm_dynamics(d), ['0'], ['d*mean(x)'], [[0.]], name='single_regime')


def expou_jump(d=2, dates=None, substeps=1, horizon=None):
    """
    Tolling agreement on an exponential OU model with jumps: the first
    coordinate is a power price with jumps, the others fuel prices.
    Regimes are off, half and full load.
    """
    if d < 2:
        raise ConfigurationError("expou_jump needs d >= 2, got {}".format(d))
    par = EXPOU_PARAMETERS
    grid = TimeGrid(horizon or par["horizon"], dates or par["dates"], substeps)
    x0 = np.array([par["power"]] + [par["fuel"]]*(d - 1))
    sigma1 = np.diag([par["power_volatility"]] + [par["fuel_volatility"]]*(d - 1))
    sigma2 = np.zeros((d, d))
    sigma2[0, 0] = par["jump_size"]
    intensity = np.zeros(d)
    intensity[0] = par["jump_intensity"]
    dynamics = ExpOUJump(x0=x0, kappa=par["kappa"], mean_level=np.log(x0),
                         sigma1=sigma1, sigma2=sigma2, intensity=intensity)
    spread = 'x[0] - {}*mean(x[1:])'.format(par["heat_rate"])
    running = ['-1', '0.5*({}) - 1.1'.format(spread), '{} - 1.2'.format(spread)]
    cost = '{}*mean(x[1:]) + {}'.format(par["cost_slope"], par["cost_floor"])
    costs = [[0. if i == j else cost for j in range(3)] for i in range(3)]
    return SwitchingProblem(grid, dynamics, running, [0., 0., 0.], costs, name='expou_jump')


BUILTIN_PROBLEMS = {
    'gbm3regime': gbm3regime,
    'expou_jump': expou_jump,
    'single_regime': single_regime,
}
