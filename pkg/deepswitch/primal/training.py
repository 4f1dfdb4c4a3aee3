"""
Training of switching policies through the softmax-relaxed primal recursion

    L_n^i = sum_j w_j^i (F_n^j - l_ij + L_{n+1}^j),  w^i = softmax(logits^i / temperature),

visited backwards in n. The networks of date n maximize the batch mean of
L_n^i over all current regimes i; the values L_{n+1} used at date n are
those of the hard rule of the already trained later dates.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConfigurationError, TrainingError
from ..market.simulation import simulate
from ..nn.adam import AdamState, adam_step
from ..problem.payoffs import evaluate_payoffs
from ..utils.seeding import derive_seed
from .policy import Policy, softmax

logger = logging.getLogger(__name__)


@dataclass
class PolicyTrainingConfig:
    epochs: int = 100
    batch_size: int = 4096
    learning_rate: float = 1e-3
    seed: int = 0
    temperature_start: float = 1.
    temperature_end: float = 0.1
    inner_steps: int = 1
    width: Optional[int] = None
    depth: int = 3
    activation: str = 'relu'
    workers: int = 1
    log_every: int = 10

    def __post_init__(self):
        if not self.temperature_start > 0 or not self.temperature_end > 0:
            raise ConfigurationError("Temperatures must be positive")
        if self.epochs < 0 or self.batch_size < 1 or self.inner_steps < 1:
            raise ConfigurationError("epochs >= 0, batch_size >= 1 and inner_steps >= 1 are required")

    def temperature(self, epoch):
        """Linear anneal from temperature_start to temperature_end."""
        fraction = epoch/max(self.epochs - 1, 1)
        return self.temperature_start + (self.temperature_end - self.temperature_start)*fraction


@dataclass
class PolicyTrainingResult:
    policy: Policy
    trace: list


def _stacked_inputs(policy, n, states):
    J = policy.n_regimes
    return np.vstack([policy.inputs(n, states, i) for i in range(J)])


def relaxed_loss(logits, q, temperature):
    """
    Negative mean of the softmax-relaxed switch payoff and its cotangent with
    respect to `logits`. Both `logits` and `q` have shape (J, B, J), indexed
    by current regime, path and target regime.
    """
    J, B = q.shape[:2]
    weights = softmax((logits/temperature).reshape(J*B, J)).reshape(J, B, J)
    relaxed = (weights*q).sum(axis=2)
    d_logits = -weights*(q - relaxed[:, :, None])/(temperature*B*J)
    return -float(relaxed.mean()), d_logits


def fit_policy(policy, sample, config):
    """
    Train `policy` in place.

    `sample(epoch)` returns the states at the dates 0..N, an array
    (n_paths, N + 1, d), and the matching `PayoffTables`.
    """
    N = policy.grid.dates
    J = policy.n_regimes
    optimizers = [AdamState(learning_rate=config.learning_rate) for _ in range(N)]
    trace = []
    for epoch in range(config.epochs):
        temperature = config.temperature(epoch)
        date_states, tables = sample(epoch)
        B = date_states.shape[0]
        rows = np.arange(B)
        V_next = tables.G
        epoch_value = 0.
        for n in reversed(range(N)):
            net = policy.nets[n]
            params = net.parameters()
            inputs = _stacked_inputs(policy, n, date_states[:, n])
            # q[i, p, j]: payoff of switching from i to j at date n
            q = (tables.F[:, n] + V_next)[None, :, :] - np.moveaxis(tables.L[:, n], 1, 0)
            for step in range(config.inner_steps):
                logits = net.forward(inputs, mode='train', record=True).reshape(J, B, J)
                loss, d_logits = relaxed_loss(logits, q, temperature)
                grads = net.backward(d_logits.reshape(J*B, J))
                grad_norm = float(np.sqrt(sum(np.sum(g**2) for g in grads.values())))
                trace.append({'epoch': epoch, 'stage': n, 'loss': loss, 'grad_norm': grad_norm,
                              'temperature': temperature})
                if not (np.isfinite(loss) and np.isfinite(grad_norm)):
                    raise TrainingError("Policy loss diverged at epoch {}, date {}".format(epoch, n), trace=trace,
                                        diagnostics={'epoch': epoch, 'stage': n, 'loss': loss})
                adam_step(optimizers[n], params, grads)
            logits = net.forward(inputs, mode='train', record=False, track_stats=False).reshape(J, B, J)
            choice = logits.argmax(axis=2)
            V_next = np.stack([q[i, rows, choice[i]] for i in range(J)], axis=1)
            epoch_value -= loss
        if config.log_every and (epoch % config.log_every == 0 or epoch == config.epochs - 1):
            logger.info("policy epoch %d: temperature %.3f, mean relaxed value %.5g", epoch, temperature, epoch_value/N)
    for net in policy.nets:
        net.forget()
    return PolicyTrainingResult(policy=policy, trace=trace)


def train_policy(problem, config):
    """
    Train a switching policy for `problem` on fresh simulated batches.
    """
    policy = Policy.initialize(problem.grid, problem.n_regimes, problem.dim, width=config.width,
                               depth=config.depth, activation=config.activation,
                               seed=derive_seed(config.seed, 'primal', 'init'))
    K = problem.grid.substeps

    def sample(epoch):
        paths = simulate(problem.dynamics, problem.grid, config.batch_size,
                         derive_seed(config.seed, 'primal', 'epoch', epoch), workers=config.workers)
        return paths.states[:, ::K], evaluate_payoffs(problem, paths)

    return fit_policy(policy, sample, config)
