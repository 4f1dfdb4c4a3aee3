import numpy as np
import numpy.testing as nt
import pytest
import scipy.stats

from deepswitch.errors import ConfigurationError
from deepswitch.market.dynamics import GBM, AffineIto, ExpOUJump, Dynamics
from deepswitch.market.grid import TimeGrid
from deepswitch.market.io import paths_from_file, paths_to_file
from deepswitch.market.simulation import simulate, simulate_conditional


def test_grid_offsets():
    grid = TimeGrid(1., 12, 3)
    assert grid.n_steps == 36
    assert grid.get_offset(2, 1) == 7
    # the end of an interval is the start of the next one
    assert grid.get_offset(2, 3) == grid.get_offset(3, 0)
    assert grid.get_offset(12) == 36
    with pytest.raises(ValueError):
        grid.get_offset(12, 1)
    with pytest.raises(ValueError):
        grid.get_offset(13)
    nt.assert_allclose(grid.substep_times(1), [1/12, 1/12 + 1/36, 1/12 + 2/36])
    assert pytest.approx(grid.date_time(6)) == 0.5


def test_grid_validation():
    with pytest.raises(ConfigurationError):
        TimeGrid(1., 0)
    with pytest.raises(ConfigurationError):
        TimeGrid(1., 4, 0)
    with pytest.raises(ConfigurationError):
        TimeGrid(0., 4)


def test_zero_volatility():
    """
    Without noise every path follows x0 exp(mu t).
    """
    dynamics = GBM(x0=[50.], drift=-0.05, volatility=0.)
    paths = simulate(dynamics, TimeGrid(1., 4, 5), 10, seed=0)
    nt.assert_allclose(paths.date_states(4), 50*np.exp(-0.05), rtol=1e-12)
    nt.assert_allclose(paths.date_states(2), 50*np.exp(-0.025), rtol=1e-12)


def test_gbm_mean():
    dynamics = GBM(x0=[50., 50.], drift=-0.05, volatility=[0.2, 0.3])
    paths = simulate(dynamics, TimeGrid(1., 4, 2), 20000, seed=3)
    final = paths.date_states(4)
    se = final.std(axis=0, ddof=1)/np.sqrt(len(final))
    assert np.all(np.abs(final.mean(axis=0) - 50*np.exp(-0.05)) < 3*se)


def test_gbm_log_normal():
    """
    log X_T is exactly Gaussian.
    """
    mu, sigma = 0.1, 0.3
    dynamics = GBM(x0=[1.], drift=mu, volatility=sigma)
    paths = simulate(dynamics, TimeGrid(1., 5, 3), 10000, seed=11)
    logs = np.log(paths.date_states(5)[:, 0])
    standardized = (logs - (mu - sigma**2/2))/sigma
    assert scipy.stats.kstest(standardized, 'norm').pvalue > 1e-3


def test_conditional_one_interval():
    dynamics = GBM(x0=[50.], drift=-0.05, volatility=0.2)
    grid = TimeGrid(1., 12, 4)
    start = np.full((20000, 1), 50.)
    paths = simulate_conditional(dynamics, grid, 11, start, 20000, seed=5)
    assert paths.states.shape == (20000, 5, 1)
    final = paths.date_states(12)[:, 0]
    se = final.std(ddof=1)/np.sqrt(len(final))
    assert abs(final.mean() - 50*np.exp(-0.05/12)) < 3*se
    with pytest.raises(ValueError):
        paths.date_states(10)


def test_expou_log_moments():
    """
    Without jumps the log state is an OU process sampled exactly.
    """
    kappa, level, sigma = 2., np.log(6.), 0.3
    dynamics = ExpOUJump(x0=[10.], kappa=kappa, mean_level=level, sigma1=[[sigma]], sigma2=[[0.]], intensity=0.)
    paths = simulate(dynamics, TimeGrid(0.5, 5, 2), 20000, seed=2)
    logs = np.log(paths.date_states(5)[:, 0])
    mean = level + np.exp(-kappa*0.5)*(np.log(10.) - level)
    var = sigma**2*(1 - np.exp(-2*kappa*0.5))/(2*kappa)
    assert abs(logs.mean() - mean) < 4*np.sqrt(var/len(logs))
    assert pytest.approx(logs.var(), rel=0.05) == var


def test_jump_counts():
    dynamics = ExpOUJump(x0=[50., 6.], kappa=2., mean_level=np.log([50., 6.]), sigma1=np.diag([0.5, 0.3]),
                         sigma2=[[0.3, 0.], [0., 0.]], intensity=[4., 0.])
    grid = TimeGrid(0.25, 10, 1)
    paths = simulate(dynamics, grid, 5000, seed=1)
    assert paths.has_jumps
    assert np.all(paths.dN[:, :, 1] == 0)
    assert pytest.approx(paths.dN[:, :, 0].sum(axis=1).mean(), rel=0.05) == 4*0.25


def test_blocks_are_reproducible():
    """
    Path p does not depend on the batch size, the offset or the worker count.
    """
    dynamics = GBM(x0=[50., 50.], drift=-0.05, volatility=0.2)
    grid = TimeGrid(1., 3, 2)
    full = simulate(dynamics, grid, 3072, seed=7)
    nt.assert_array_equal(simulate(dynamics, grid, 1500, seed=7).states, full.states[:1500])
    nt.assert_array_equal(simulate(dynamics, grid, 2048, seed=7, path_offset=1024).states, full.states[1024:])
    nt.assert_array_equal(simulate(dynamics, grid, 3072, seed=7, workers=3).states, full.states)
    other = simulate(dynamics, grid, 1024, seed=8)
    assert not np.array_equal(other.states, full.states[:1024])


def test_simulation_errors():
    dynamics = GBM(x0=[50.], drift=0., volatility=0.2)
    grid = TimeGrid(1., 3, 2)
    with pytest.raises(ConfigurationError):
        simulate(dynamics, grid, 10, seed=0, path_offset=10)
    with pytest.raises(ConfigurationError):
        simulate_conditional(dynamics, grid, 1, np.ones((5, 2)), 5, seed=0)
    with pytest.raises(ConfigurationError):
        simulate(dynamics, grid, 10**6, seed=0, memory_budget=1024)


def test_affine_diffusion():
    dynamics = AffineIto(x0=[1., 2.], drift_matrix=np.zeros((2, 2)), drift_offset=0.,
                         vol_matrices=np.zeros((2, 2, 2)), vol_offsets=np.eye(2))
    sigma = dynamics.diffusion(0., np.ones((3, 2)))
    nt.assert_allclose(sigma, np.broadcast_to(np.eye(2), (3, 2, 2)))


def test_dynamics_from_dict():
    dynamics = GBM(x0=[50., 40.], drift=-0.05, volatility=[0.2, 0.3], correlation=[[1., 0.5], [0.5, 1.]])
    rebuilt = Dynamics.from_dict(dynamics.as_dict())
    assert isinstance(rebuilt, GBM)
    nt.assert_allclose(rebuilt.vol_matrix, dynamics.vol_matrix)
    with pytest.raises(ConfigurationError):
        Dynamics.from_dict({'variant': 'heston'})
    with pytest.raises(ConfigurationError):
        GBM(x0=[1., 1.], drift=0., volatility=0.2, correlation=[[1., 2.], [2., 1.]])


def test_path_file(tmp_path):
    dynamics = ExpOUJump(x0=[50., 6.], kappa=2., mean_level=np.log([50., 6.]), sigma1=np.diag([0.5, 0.3]),
                         sigma2=[[0.3, 0.], [0., 0.]], intensity=[4., 0.])
    paths = simulate(dynamics, TimeGrid(0.25, 3, 2), 17, seed=4)
    paths_to_file(paths, tmp_path/'paths.bin')
    loaded = paths_from_file(tmp_path/'paths.bin')
    nt.assert_array_equal(loaded.states, paths.states)
    nt.assert_array_equal(loaded.dN, paths.dN)
    assert loaded.grid == paths.grid


def test_brownian_increment_moments():
    """
    Each component of dW has mean 0 and variance dt within 4 standard errors.
    """
    dynamics = GBM(x0=[1., 1.], drift=0., volatility=0.2)
    grid = TimeGrid(1., 4, 5)
    n = 100000
    paths = simulate(dynamics, grid, n, seed=13)
    dW = paths.dW[:, 7]
    assert np.all(np.abs(dW.mean(axis=0)) < 4*np.sqrt(grid.dt/n))
    # var of a sample variance of Gaussians is 2 dt^2/n
    assert np.all(np.abs(dW.var(axis=0, ddof=1) - grid.dt) < 4*grid.dt*np.sqrt(2/n))


def test_grid_stitching():
    """
    N dates with K substeps walk the same path as one date with N K substeps.
    """
    dynamics = GBM(x0=[50., 40.], drift=-0.05, volatility=[0.2, 0.3], correlation=[[1., 0.5], [0.5, 1.]])
    coarse = simulate(dynamics, TimeGrid(1., 4, 3), 1500, seed=21)
    fine = simulate(dynamics, TimeGrid(1., 1, 12), 1500, seed=21)
    nt.assert_array_equal(coarse.dW, fine.dW)
    nt.assert_array_equal(coarse.states, fine.states)
    nt.assert_array_equal(coarse.date_states(4), fine.date_states(1))


def test_conditional_at_maturity():
    dynamics = GBM(x0=[50.], drift=-0.05, volatility=0.2)
    grid = TimeGrid(1., 6, 4)
    start = np.linspace(40., 60., 10)[:, None]
    paths = simulate_conditional(dynamics, grid, 6, start, 10, seed=5)
    assert paths.dW.shape == (10, 0, 1)
    assert paths.states.shape == (10, 1, 1)
    nt.assert_array_equal(paths.date_states(6), start)


def test_conditional_from_start_matches_simulate():
    dynamics = ExpOUJump(x0=[50., 6.], kappa=2., mean_level=np.log([50., 6.]), sigma1=np.diag([0.5, 0.3]),
                         sigma2=[[0.3, 0.], [0., 0.]], intensity=[4., 0.])
    grid = TimeGrid(0.25, 3, 2)
    full = simulate(dynamics, grid, 1100, seed=9)
    start = np.tile(dynamics.x0, (1100, 1))
    conditional = simulate_conditional(dynamics, grid, 0, start, 1100, seed=9)
    nt.assert_array_equal(conditional.states, full.states)
    nt.assert_array_equal(conditional.dW, full.dW)
    nt.assert_array_equal(conditional.dN, full.dN)


def test_expou_correlated_speeds():
    """
    Correlated log coordinates must revert at the same speed.
    """
    with pytest.raises(ConfigurationError):
        ExpOUJump(x0=[50., 6.], kappa=[1., 2.], mean_level=0., sigma1=[[0.3, 0.1], [0., 0.2]],
                  sigma2=np.zeros((2, 2)), intensity=0.)
    ExpOUJump(x0=[50., 6.], kappa=[1., 2.], mean_level=0., sigma1=np.diag([0.3, 0.2]),
              sigma2=np.zeros((2, 2)), intensity=0.)
    ExpOUJump(x0=[50., 6.], kappa=1.5, mean_level=0., sigma1=[[0.3, 0.1], [0., 0.2]],
              sigma2=np.zeros((2, 2)), intensity=0.)
    with pytest.raises(ConfigurationError):
        ExpOUJump(x0=[50., -6.], kappa=1.5, mean_level=0., sigma1=np.diag([0.3, 0.2]),
                  sigma2=np.zeros((2, 2)), intensity=0.)
