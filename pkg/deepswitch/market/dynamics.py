"""
State dynamics dX = mu(t, X) dt + sigma(t, X) dW (+ jumps).

Each variant knows how to advance a batch of states over one substep given
the Brownian (and Poisson) increments of that substep, and how to report
its diffusion matrix for hedge ratios.
"""

import numpy as np

from ..errors import ConfigurationError


def _vector(value, dim, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(dim, float(arr))
    if arr.shape != (dim,):
        raise ConfigurationError("{} has shape {}, expected ({},)".format(name, arr.shape, dim))
    return arr

def _matrix(value, shape, name):
    arr = np.asarray(value, dtype=float)
    if arr.shape != shape:
        raise ConfigurationError("{} has shape {}, expected {}".format(name, arr.shape, shape))
    return arr


class Dynamics:
    """
    Base class of the supported state dynamics.
    """
    variant = None
    has_jumps = False

    def __init__(self, x0):
        self.x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        if self.x0.ndim != 1 or self.x0.size < 1:
            raise ConfigurationError("Initial state must be a non-empty vector, got shape {}".format(self.x0.shape))

    @property
    def dim(self):
        return self.x0.size

    @property
    def intensity(self):
        """Poisson intensity per component (zero without jumps)."""
        return np.zeros(self.dim)

    def step(self, x, t, dt, dW, dN=None):
        """
        Advance states `x` (n_paths, d) from t to t + dt.
        """
        raise NotImplementedError

    def diffusion(self, t, x):
        """
        Diffusion matrices sigma(t, x), shape (n_paths, d, d).
        """
        raise NotImplementedError

    def as_dict(self):
        raise NotImplementedError

    @classmethod
    def from_dict(cls, spec):
        """
        Build dynamics from a configuration mapping with a ``variant`` key.
        """
        spec = dict(spec)
        try:
            variant = spec.pop('variant')
        except KeyError:
            raise ConfigurationError("Dynamics needs a variant, one of {}".format(sorted(DYNAMICS)))
        if variant not in DYNAMICS:
            raise ConfigurationError("No dynamics of variant {}".format(variant))
        try:
            return DYNAMICS[variant](**spec)
        except TypeError as error:
            raise ConfigurationError("Bad parameters for {}: {}".format(variant, error))


class GBM(Dynamics):
    """
    Geometric Brownian motion, simulated exactly in log space.

    dX_k = mu_k X_k dt + X_k sigma_k (L dW)_k, where L is the Cholesky factor
    of the optional correlation matrix.
    """
    variant = 'gbm'

    def __init__(self, x0, drift, volatility, correlation=None):
        super().__init__(x0)
        d = self.dim
        self.drift = _vector(drift, d, 'drift')
        self.volatility = _vector(volatility, d, 'volatility')
        if np.any(self.volatility < 0):
            raise ConfigurationError("GBM volatilities must be non-negative, got {}".format(self.volatility))
        if correlation is None:
            self.correlation = np.eye(d)
        else:
            self.correlation = _matrix(correlation, (d, d), 'correlation')
        try:
            cholesky = np.linalg.cholesky(self.correlation)
        except np.linalg.LinAlgError:
            raise ConfigurationError("Correlation matrix is not positive definite")
        # volatility matrix S = diag(sigma) L, rows have norm sigma_k
        self.vol_matrix = self.volatility[:, None] * cholesky

    def step(self, x, t, dt, dW, dN=None):
        log_growth = (self.drift - 0.5*self.volatility**2)*dt + dW @ self.vol_matrix.T
        return x * np.exp(log_growth)

    def diffusion(self, t, x):
        return x[:, :, None] * self.vol_matrix[None, :, :]

    def as_dict(self):
        return {
            'variant': self.variant,
            'x0': self.x0.tolist(),
            'drift': self.drift.tolist(),
            'volatility': self.volatility.tolist(),
            'correlation': self.correlation.tolist(),
        }


class AffineIto(Dynamics):
    """
    Affine Ito diffusion, simulated with Euler-Maruyama.

    mu(x) = A_mu x + b_mu, and column k of sigma(x) is A_sigma[k] x + b_sigma[k].
    """
    variant = 'affine'

    def __init__(self, x0, drift_matrix, drift_offset, vol_matrices, vol_offsets):
        super().__init__(x0)
        d = self.dim
        self.drift_matrix = _matrix(drift_matrix, (d, d), 'drift_matrix')
        self.drift_offset = _vector(drift_offset, d, 'drift_offset')
        self.vol_matrices = _matrix(vol_matrices, (d, d, d), 'vol_matrices')
        self.vol_offsets = _matrix(vol_offsets, (d, d), 'vol_offsets')

    def diffusion(self, t, x):
        # columns[p, i, k] = (A_sigma[k] x_p + b_sigma[k])_i
        return np.einsum('kij,pj->pik', self.vol_matrices, x) + self.vol_offsets.T[None, :, :]

    def step(self, x, t, dt, dW, dN=None):
        drift = x @ self.drift_matrix.T + self.drift_offset
        return x + drift*dt + np.einsum('pik,pk->pi', self.diffusion(t, x), dW)

    def as_dict(self):
        return {
            'variant': self.variant,
            'x0': self.x0.tolist(),
            'drift_matrix': self.drift_matrix.tolist(),
            'drift_offset': self.drift_offset.tolist(),
            'vol_matrices': self.vol_matrices.tolist(),
            'vol_offsets': self.vol_offsets.tolist(),
        }


class ExpOUJump(Dynamics):
    """
    Exponential Ornstein-Uhlenbeck model with jumps,
    d log X = kappa (mu - log X) dt + Sigma1 dW + Sigma2 dN.

    The mean reversion is diagonal and correlated coordinates share their
    speed. Each substep applies the exact OU transition of the log state; the
    Gaussian term is the Brownian increment scaled by the OU variance factor,
    and the jump term Sigma2 dN is added at the end of the substep.
    """
    variant = 'expou_jump'
    has_jumps = True

    def __init__(self, x0, kappa, mean_level, sigma1, sigma2, intensity):
        super().__init__(x0)
        d = self.dim
        if np.any(self.x0 <= 0):
            raise ConfigurationError("Exponential OU states must be positive, got {}".format(self.x0))
        self.kappa = _vector(kappa, d, 'kappa')
        if np.any(self.kappa <= 0):
            raise ConfigurationError("Mean reversion speeds must be positive, got {}".format(self.kappa))
        self.mean_level = _vector(mean_level, d, 'mean_level')
        self.sigma1 = _matrix(sigma1, (d, d), 'sigma1')
        if np.linalg.matrix_rank(self.sigma1) < d:
            raise ConfigurationError("sigma1 is degenerate")
        covariance = self.sigma1 @ self.sigma1.T
        coupled = (np.abs(covariance) > 0) & (self.kappa[:, None] != self.kappa[None, :])
        if coupled.any():
            i, j = np.argwhere(coupled)[0]
            raise ConfigurationError("Coordinates {} and {} are correlated but revert at different speeds {} and {}"
                                     "".format(i, j, self.kappa[i], self.kappa[j]))
        self.sigma2 = _matrix(sigma2, (d, d), 'sigma2')
        self.jump_intensity = _vector(intensity, d, 'intensity')
        if np.any(self.jump_intensity < 0):
            raise ConfigurationError("Jump intensities must be non-negative, got {}".format(self.jump_intensity))

    @property
    def intensity(self):
        return self.jump_intensity

    def step(self, x, t, dt, dW, dN=None):
        decay = np.exp(-self.kappa*dt)
        scale = np.sqrt(-np.expm1(-2*self.kappa*dt) / (2*self.kappa*dt))
        y = np.log(x)
        y = self.mean_level + decay*(y - self.mean_level) + scale*(dW @ self.sigma1.T)
        if dN is not None:
            y = y + dN @ self.sigma2.T
        return np.exp(y)

    def diffusion(self, t, x):
        return x[:, :, None] * self.sigma1[None, :, :]

    def as_dict(self):
        return {
            'variant': self.variant,
            'x0': self.x0.tolist(),
            'kappa': self.kappa.tolist(),
            'mean_level': self.mean_level.tolist(),
            'sigma1': self.sigma1.tolist(),
            'sigma2': self.sigma2.tolist(),
            'intensity': self.jump_intensity.tolist(),
        }


DYNAMICS = {cls.variant: cls for cls in [GBM, AffineIto, ExpOUJump]}
