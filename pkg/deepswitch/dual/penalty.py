"""
Martingale penalties parametrized by networks.

The increment of regime i over interval n is

    xi_n^i = sum_k z_n^i(t_k^n, X_{t_k^n}) . dW_{t_k^n}
             (+ sum_k zp_n^i(t_k^n, X_{t_k^n}) . (dN_{t_k^n} - lambda dt))

with one integrand network z_n^i : R^{1+d} -> R^d per date and regime, and
optional jump networks zp_n^i for models with jumps.
"""

import numpy as np

from ..nn.layers import Affine
from ..nn.network import Network, mlp
from ..utils.seeding import derive_seed

# rows per forward pass when no gradient is recorded
EVAL_ROWS = 2**16


class DualPenalty:

    def __init__(self, grid, n_regimes, dim, nets, jump_nets=None, intensity=None, compensated=True):
        if len(nets) != grid.dates or any(len(row) != n_regimes for row in nets):
            raise ValueError("Penalty needs {}x{} networks".format(grid.dates, n_regimes))
        for row in nets:
            for net in row:
                if net.input_dim != 1 + dim or net.output_dim != dim:
                    raise ValueError('network maps {} -> {}, expected {} -> {}'
                                     ''.format(net.input_dim, net.output_dim, 1 + dim, dim))
        if jump_nets is not None and (len(jump_nets) != grid.dates or any(len(row) != n_regimes for row in jump_nets)):
            raise ValueError("Jump penalty needs {}x{} networks".format(grid.dates, n_regimes))
        self.grid = grid
        self.n_regimes = n_regimes
        self.dim = dim
        self.nets = nets
        self.jump_nets = jump_nets
        self.intensity = np.zeros(dim) if intensity is None else np.asarray(intensity, dtype=float)
        self.compensated = compensated

    @classmethod
    def initialize(cls, problem, width=None, depth=3, activation='relu', seed=0, jumps=None, compensated=True):
        """
        Freshly initialized networks for every (date, regime) of `problem`.

        Jump networks are created when the dynamics have jumps unless
        `jumps` says otherwise; the default width is 20 + d.
        """
        d = problem.dim
        width = width or 20 + d
        if jumps is None:
            jumps = problem.dynamics.has_jumps

        def build(label):
            return [[mlp(1 + d, d, width, depth=depth, activation=activation,
                         seed=derive_seed(seed, label, n, i) % 2**32)
                     for i in range(problem.n_regimes)]
                    for n in range(problem.grid.dates)]

        return cls(problem.grid, problem.n_regimes, d, build('z'),
                   jump_nets=build('zp') if jumps else None,
                   intensity=problem.dynamics.intensity, compensated=compensated)

    @classmethod
    def constant(cls, problem, value=0.):
        """
        Penalty whose integrands are the constant vector `value` (zero by default).
        """
        d = problem.dim
        bias = np.broadcast_to(np.asarray(value, dtype=float), (d,))
        nets = [[Network([Affine(np.zeros((1 + d, d)), bias.copy())])
                 for _ in range(problem.n_regimes)]
                for _ in range(problem.grid.dates)]
        return cls(problem.grid, problem.n_regimes, d, nets, intensity=problem.dynamics.intensity)

    @property
    def has_jumps(self):
        return self.jump_nets is not None

    def networks(self, n):
        """(name, network) pairs of date n."""
        pairs = [('z.{}'.format(i), net) for i, net in enumerate(self.nets[n])]
        if self.has_jumps:
            pairs += [('zp.{}'.format(i), net) for i, net in enumerate(self.jump_nets[n])]
        return pairs

    def stage_parameters(self, n):
        """Live parameter arrays of date n, keyed ``"<name>.<layer>.<parameter>"``."""
        params = {}
        for prefix, net in self.networks(n):
            for key, value in net.parameters().items():
                params['{}.{}'.format(prefix, key)] = value
        return params

    def _check(self, paths, n):
        if paths.grid != self.grid:
            raise ValueError("Penalty grid {} does not equal paths grid {}".format(self.grid, paths.grid))
        if paths.dim != self.dim:
            raise ValueError("Penalty dimension {} does not equal paths dimension {}".format(self.dim, paths.dim))
        if not paths.start_index <= n < self.grid.dates:
            raise ValueError("Date violation: {} <= {} < {}".format(paths.start_index, n, self.grid.dates))

    def _inputs(self, paths, n):
        states, dW, dN = paths.interval(n)
        P, K, d = states.shape
        times = np.broadcast_to(self.grid.substep_times(n)[None, :, None], (P, K, 1))
        inputs = np.concatenate([times, states], axis=2).reshape(P*K, 1 + d)
        if dN is not None and self.compensated:
            dN = dN - self.intensity*self.grid.dt
        return inputs, dW, dN

    def integrand(self, n, i, t, states, mode='eval'):
        """z_n^i(t, x) at states (n_points, d)."""
        states = np.asarray(states, dtype=float)
        times = np.broadcast_to(np.asarray(t, dtype=float), (len(states),))
        return _forward(self.nets[n][i], np.column_stack([times, states]), mode, False, False)

    def increments(self, paths, n, mode='eval', record=False, track_stats=True):
        """
        Increments xi_n^i of all regimes, shape (n_paths, J).
        """
        self._check(paths, n)
        inputs, dW, dN = self._inputs(paths, n)
        P, K, d = dW.shape
        xi = np.zeros((P, self.n_regimes))
        for i in range(self.n_regimes):
            z = _forward(self.nets[n][i], inputs, mode, record, track_stats).reshape(P, K, d)
            xi[:, i] = np.einsum('pkd,pkd->p', z, dW)
            if self.has_jumps and dN is not None:
                zp = _forward(self.jump_nets[n][i], inputs, mode, record, track_stats).reshape(P, K, d)
                xi[:, i] += np.einsum('pkd,pkd->p', zp, dN)
        return xi

    def backward(self, paths, n, cotangent):
        """
        Gradients of sum_p sum_i cotangent[p, i] xi_n^i(p) for the recorded
        increments of date n, keyed like `stage_parameters`.
        """
        self._check(paths, n)
        _, dW, dN = self._inputs(paths, n)
        P, K, d = dW.shape
        grads = {}
        for i in range(self.n_regimes):
            weights = cotangent[:, i][:, None, None]
            pairs = [('z.{}'.format(i), self.nets[n][i], dW)]
            if self.has_jumps and dN is not None:
                pairs.append(('zp.{}'.format(i), self.jump_nets[n][i], dN))
            for prefix, net, noise in pairs:
                net_grads = net.backward((weights*noise).reshape(P*K, d))
                for key, value in net_grads.items():
                    grads['{}.{}'.format(prefix, key)] = value
        return grads


def _forward(net, inputs, mode, record, track_stats):
    if record or mode == 'train' or len(inputs) <= EVAL_ROWS:
        return net.forward(inputs, mode=mode, record=record, track_stats=track_stats)
    return np.concatenate([net.forward(inputs[start:start + EVAL_ROWS], mode=mode, record=False)
                           for start in range(0, len(inputs), EVAL_ROWS)])


def martingale_increments(penalty, paths, n, mode='eval'):
    """
    Increments xi_n^i of `penalty` along `paths` for every regime, shape (n_paths, J).
    """
    return penalty.increments(paths, n, mode=mode)
