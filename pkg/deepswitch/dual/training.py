"""
Training of martingale penalties by backward minimization of the dual loss.

Each epoch draws one batch of paths. Starting from the terminal payoffs the
dates are visited backwards; at date n the networks of that date take
`inner_steps` Adam steps on the date-n loss of the reference regime (the
networks of later dates stay frozen), and the recursion is then rolled one
date down with the updated networks.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ConfigurationError, TrainingError
from ..market.simulation import simulate
from ..nn.adam import AdamState, adam_step
from ..problem.payoffs import evaluate_payoffs
from ..utils.seeding import derive_seed
from .baseline import Baseline
from .penalty import DualPenalty
from .recursion import dual_step

logger = logging.getLogger(__name__)

LOSSES = ('d1', 'd2')


@dataclass
class DualTrainingConfig:
    epochs: int = 100
    batch_size: int = 4096
    learning_rate: float = 1e-3
    loss: str = 'd2'
    baseline: Baseline = field(default_factory=Baseline)
    seed: int = 0
    inner_steps: int = 1
    # defaults to the problem's reference regime
    reference_regime: Optional[int] = None
    all_regimes: bool = False
    width: Optional[int] = None
    depth: int = 3
    activation: str = 'relu'
    compensated: bool = True
    workers: int = 1
    log_every: int = 10

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ConfigurationError("Unknown loss {}, expected one of {}".format(self.loss, LOSSES))
        if self.epochs < 0 or self.batch_size < 1 or self.inner_steps < 1:
            raise ConfigurationError("epochs >= 0, batch_size >= 1 and inner_steps >= 1 are required")
        if isinstance(self.baseline, dict):
            self.baseline = Baseline(**self.baseline)


@dataclass
class DualTrainingResult:
    penalty: DualPenalty
    trace: list


def stage_loss(values, baseline, regimes, loss):
    """
    Loss over the given regimes and its derivative with respect to the values.
    """
    batch = values.shape[0]
    selected = values[:, regimes]
    weight = 1/(batch*len(regimes))
    d_values = np.zeros_like(values)
    if loss == 'd1':
        d_values[:, regimes] = weight
        return float(selected.mean()), d_values
    residual = selected - baseline[:, None]
    d_values[:, regimes] = 2*weight*residual
    return float(np.mean(residual**2)), d_values


def increment_cotangent(d_values, choice):
    """
    Derivative with respect to xi_n^j of a function of the date-n values,
    given the maximizing regimes `choice` (n_paths, J).
    """
    J = d_values.shape[1]
    onehot = choice[:, :, None] == np.arange(J)[None, None, :]
    return -(d_values[:, :, None]*onehot).sum(axis=1)


def train(problem, config, penalty=None):
    """
    Train a martingale penalty for `problem`.

    Returns the penalty with the loss trace, one row per (epoch, date, step).
    """
    if penalty is None:
        penalty = DualPenalty.initialize(problem, width=config.width, depth=config.depth,
                                         activation=config.activation, seed=derive_seed(config.seed, 'dual', 'init'),
                                         compensated=config.compensated)
    N = problem.grid.dates
    J = problem.n_regimes
    reference = problem.reference_regime if config.reference_regime is None else config.reference_regime
    if not 0 <= reference < J:
        raise ConfigurationError("Reference regime violation: 0 <= {} < {}".format(reference, J))
    regimes = list(range(J)) if config.all_regimes else [reference]
    optimizers = [AdamState(learning_rate=config.learning_rate) for _ in range(N)]
    trace = []

    for epoch in range(config.epochs):
        paths = simulate(problem.dynamics, problem.grid, config.batch_size,
                         derive_seed(config.seed, 'dual', 'epoch', epoch), workers=config.workers)
        tables = evaluate_payoffs(problem, paths)
        U_next = tables.G
        epoch_loss = 0.
        for n in reversed(range(N)):
            baseline = config.baseline.evaluate(n, N, paths.date_states(n), t=problem.grid.date_time(n))
            F, L = tables.F[:, n], tables.L[:, n]
            params = penalty.stage_parameters(n)
            for step in range(config.inner_steps):
                xi = penalty.increments(paths, n, mode='train', record=True)
                values, choice = dual_step(F, L, xi, U_next)
                loss, d_values = stage_loss(values, baseline, regimes, config.loss)
                grads = penalty.backward(paths, n, increment_cotangent(d_values, choice))
                grad_norm = float(np.sqrt(sum(np.sum(g**2) for g in grads.values())))
                trace.append({'epoch': epoch, 'stage': n, 'loss': loss, 'grad_norm': grad_norm})
                if not (np.isfinite(loss) and np.isfinite(grad_norm)):
                    raise TrainingError("Dual loss diverged at epoch {}, date {}".format(epoch, n), trace=trace,
                                        diagnostics={'epoch': epoch, 'stage': n, 'loss': loss, 'grad_norm': grad_norm})
                adam_step(optimizers[n], params, grads)
            xi = penalty.increments(paths, n, mode='train', record=False, track_stats=False)
            U_next, _ = dual_step(F, L, xi, U_next)
            epoch_loss += loss
        if config.log_every and (epoch % config.log_every == 0 or epoch == config.epochs - 1):
            logger.info("dual epoch %d: mean stage loss %.5g, U_0 of regime %d %.5g",
                        epoch, epoch_loss/N, reference, float(U_next[:, reference].mean()))
    for n in range(N):
        for _, net in penalty.networks(n):
            net.forget()
    return DualTrainingResult(penalty=penalty, trace=trace)
