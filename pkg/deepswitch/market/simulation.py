"""
Monte Carlo simulation of state paths on the fine subgrid.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConfigurationError
from ..utils.seeding import PATH_BLOCK, block_generator
from .grid import TimeGrid

logger = logging.getLogger(__name__)

# largest allocation accepted for one batch of paths, in bytes
DEFAULT_MEMORY_BUDGET = 4 * 2**30


@dataclass
class PathBatch:
    """
    Simulated paths from date `start_index` to the horizon.

    ``states[p, s]`` is the state at global step ``start_index*K + s``;
    ``dW[p, s]`` and ``dN[p, s]`` are the increments over that step.
    """
    states: np.ndarray
    dW: np.ndarray
    dN: Optional[np.ndarray]
    seed: int
    grid: TimeGrid
    start_index: int = 0
    path_offset: int = 0

    @property
    def n_paths(self):
        return self.states.shape[0]

    @property
    def dim(self):
        return self.states.shape[2]

    @property
    def has_jumps(self):
        return self.dN is not None

    def _local(self, n, last):
        if not self.start_index <= n <= last:
            raise ValueError("Date violation: {} <= {} <= {}".format(self.start_index, n, last))
        return (n - self.start_index) * self.grid.substeps

    def date_states(self, n):
        """States at intervention date n, shape (n_paths, d)."""
        return self.states[:, self._local(n, self.grid.dates)]

    def interval(self, n):
        """
        States at the left substep endpoints of interval n with the increments
        of those substeps: arrays of shape (n_paths, K, d), dN possibly None.
        """
        first = self._local(n, self.grid.dates - 1)
        window = slice(first, first + self.grid.substeps)
        dN = self.dN[:, window] if self.dN is not None else None
        return self.states[:, window], self.dW[:, window], dN

    def header(self):
        return {
            'n_paths': self.n_paths,
            'n_steps': self.dW.shape[1],
            'dim': self.dim,
            'seed': self.seed,
            'grid': self.grid.as_dict(),
            'start_index': self.start_index,
            'path_offset': self.path_offset,
            'has_jumps': self.has_jumps,
        }


def simulate(dynamics, grid, n_paths, seed, path_offset=0, workers=1, memory_budget=DEFAULT_MEMORY_BUDGET):
    """
    Simulate `n_paths` paths of `dynamics` started at its initial state.

    Paths are drawn in blocks of `PATH_BLOCK` with one counter-based stream
    per block, so path p is the same whatever `n_paths`, `path_offset`
    (a multiple of the block size) or `workers`.
    """
    start_states = np.broadcast_to(dynamics.x0, (n_paths, dynamics.dim))
    return simulate_conditional(dynamics, grid, 0, start_states, n_paths, seed,
                                path_offset=path_offset, workers=workers, memory_budget=memory_budget)


def simulate_conditional(dynamics, grid, start_index, start_states, n_paths, seed,
                         path_offset=0, workers=1, memory_budget=DEFAULT_MEMORY_BUDGET):
    """
    Simulate paths from date `start_index` started at `start_states` (n_paths, d).
    """
    if not 0 <= start_index <= grid.dates:
        raise ValueError("Start index violation: 0 <= {} <= {}".format(start_index, grid.dates))
    if not n_paths >= 1:
        raise ConfigurationError("Number of paths must be positive, got {}".format(n_paths))
    if path_offset % PATH_BLOCK:
        raise ConfigurationError("Path offset {} is not a multiple of {}".format(path_offset, PATH_BLOCK))
    start_states = np.asarray(start_states, dtype=float)
    if start_states.shape != (n_paths, dynamics.dim):
        raise ConfigurationError("start_states.shape {} does not equal {}".format(
            start_states.shape, (n_paths, dynamics.dim)))

    d = dynamics.dim
    n_steps = (grid.dates - start_index) * grid.substeps
    arrays = 3 if dynamics.has_jumps else 2
    required = 8 * n_paths * d * ((n_steps + 1) + (arrays - 1)*n_steps)
    if required > memory_budget:
        raise ConfigurationError("Path batch needs {} bytes, above the budget of {}".format(required, memory_budget))

    states = np.empty((n_paths, n_steps + 1, d))
    dW = np.empty((n_paths, n_steps, d))
    dN = np.empty((n_paths, n_steps, d)) if dynamics.has_jumps else None
    states[:, 0] = start_states

    first_block = path_offset // PATH_BLOCK
    n_blocks = -(-n_paths // PATH_BLOCK)
    first_step = grid.get_offset(start_index)
    dt = grid.dt
    intensity = dynamics.intensity * dt

    def run_block(b):
        rows = slice(b*PATH_BLOCK, min((b + 1)*PATH_BLOCK, n_paths))
        size = rows.stop - rows.start
        gen = block_generator(seed, first_block + b)
        noise = gen.standard_normal((PATH_BLOCK, n_steps, d))[:size] * np.sqrt(dt)
        jumps = None
        if dN is not None:
            jumps = gen.poisson(intensity, size=(PATH_BLOCK, n_steps, d))[:size].astype(float)
            dN[rows] = jumps
        dW[rows] = noise
        x = states[rows, 0]
        for s in range(n_steps):
            t = (first_step + s) * dt
            x = dynamics.step(x, t, dt, noise[:, s], None if jumps is None else jumps[:, s])
            states[rows, s + 1] = x

    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_block, range(n_blocks)))
    else:
        for b in range(n_blocks):
            run_block(b)
    logger.debug("Simulated %d paths over %d steps in %d blocks", n_paths, n_steps, n_blocks)

    return PathBatch(states=states, dW=dW, dN=dN, seed=seed, grid=grid,
                     start_index=start_index, path_offset=path_offset)
