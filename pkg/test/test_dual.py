from types import SimpleNamespace

import numpy as np
import numpy.testing as nt
import pytest

from deepswitch.dual import (Baseline, DualPenalty, DualTrainingConfig, baseline_eval, dual_backward, loss_l2,
                             loss_upper, martingale_increments, propagation_slack, train)
from deepswitch.dual.recursion import dual_step
from deepswitch.dual.training import increment_cotangent, stage_loss
from deepswitch.errors import ConfigurationError, TrainingError
from deepswitch.evaluation import estimate_bounds
from deepswitch.market.dynamics import GBM
from deepswitch.market.grid import TimeGrid
from deepswitch.market.simulation import simulate
from deepswitch.nn import central_differences, relative_error
from deepswitch.nn.layers import Affine
from deepswitch.nn.network import Network
from deepswitch.primal import Policy
from deepswitch.problem import PayoffTables, SwitchingProblem, evaluate_payoffs


def _hand_tables():
    costs = np.array([[0., 0.5], [0.3, 0.]])
    return PayoffTables(F=np.array([[[1., 0.], [0., 2.]]]), L=np.broadcast_to(costs, (1, 2, 2, 2)).copy(),
                        G=np.array([[0., 1.]]))


def test_dual_recursion_by_hand():
    values = dual_backward(SimpleNamespace(n_regimes=2), _hand_tables(), np.zeros((1, 2, 2)))
    nt.assert_allclose(values.U[0], [[3.5, 3.2], [2.5, 3.], [0., 1.]])
    nt.assert_array_equal(values.a[0], [[0, 0], [1, 1]])
    assert loss_upper(values, 1) == pytest.approx(3.2)


def test_dual_recursion_with_increments():
    increments = np.zeros((1, 2, 2))
    increments[0, 1, 1] = 1.
    values = dual_backward(SimpleNamespace(n_regimes=2), _hand_tables(), increments)
    nt.assert_allclose(values.at(0)[0], [2.5, 2.2])
    nt.assert_allclose(values.at(1)[0], [1.5, 2.])


def test_ties_pick_smallest_regime():
    _, choice = dual_step(np.zeros((4, 3)), np.zeros((4, 3, 3)), np.zeros((4, 3)), np.zeros((4, 3)))
    nt.assert_array_equal(choice, 0)


def test_dual_shapes():
    with pytest.raises(ValueError):
        dual_backward(SimpleNamespace(n_regimes=3), _hand_tables(), np.zeros((1, 2, 2)))
    with pytest.raises(ValueError):
        dual_backward(SimpleNamespace(n_regimes=2), _hand_tables(), np.zeros((1, 3, 2)))


def test_loss_l2():
    values = dual_backward(SimpleNamespace(n_regimes=2), _hand_tables(), np.zeros((1, 2, 2)))
    assert loss_l2(values, np.array([0.5]), 0) == pytest.approx(9.)
    baseline = Baseline('linear_in_n', {'rate': 1.})
    assert loss_l2(values, baseline, 0, n=0, states=np.zeros((1, 1)), dates=2) == pytest.approx(5.5**2)
    with pytest.raises(ValueError):
        loss_l2(values, baseline, 0)


def test_error_propagation():
    """
    |U - V|_n <= |U - V|_{n+1} + |xi - zeta|_n on every path.
    """
    rng = np.random.default_rng(3)
    P, M, J = 200, 4, 3
    costs = rng.uniform(0., 1., (P, M, J, J))
    costs[:, :, np.arange(J), np.arange(J)] = 0.
    tables = PayoffTables(F=rng.standard_normal((P, M, J)), L=costs, G=rng.standard_normal((P, J)))
    problem = SimpleNamespace(n_regimes=J)
    for _ in range(100):
        xi, zeta = rng.standard_normal((2, P, M, J))
        slack = propagation_slack(dual_backward(problem, tables, xi), dual_backward(problem, tables, zeta), xi, zeta)
        assert slack.shape == (P, M)
        assert slack.min() >= -1e-9


def test_baselines():
    states = np.full((3, 2), 6.)
    nt.assert_allclose(Baseline('linear_in_n').evaluate(0, 12, states), -5.4)
    nt.assert_allclose(Baseline('linear_in_n').evaluate(12, 12, states), 0.)
    nt.assert_allclose(baseline_eval(Baseline('linear_in_n'), 6, states, 12), -2.7)
    nt.assert_allclose(Baseline('expression', {'source': 'n - N + x[0]'}).evaluate(3, 12, states), -3.)
    moment = Baseline('expou_moment').evaluate(0, 180, states)
    assert np.all(moment < 0)
    with pytest.raises(ConfigurationError):
        Baseline('expou_moment').evaluate(0, 180, np.ones((3, 1)))
    with pytest.raises(ConfigurationError):
        Baseline('quadratic')
    with pytest.raises(ConfigurationError):
        Baseline('linear_in_n', {'slope': 1.})


def _small_problem(d=1):
    return SwitchingProblem.from_name('gbm3regime', d=d, dates=2, substeps=3)


def test_constant_penalty():
    problem = _small_problem(d=2)
    penalty = DualPenalty.constant(problem, value=[1., -2.])
    paths = simulate(problem.dynamics, problem.grid, 50, seed=0)
    _, dW, _ = paths.interval(1)
    expected = (dW[:, :, 0] - 2*dW[:, :, 1]).sum(axis=1)
    xi = penalty.increments(paths, 1)
    nt.assert_array_equal(martingale_increments(penalty, paths, 1), xi)
    assert xi.shape == (50, 3)
    for i in range(3):
        nt.assert_allclose(xi[:, i], expected)
    nt.assert_allclose(penalty.integrand(0, 2, 0.1, np.ones((4, 2))), [[1., -2.]]*4)


def _constant_nets(problem, value):
    d = problem.dim
    return [[Network([Affine(np.zeros((1 + d, d)), np.full(d, value))]) for _ in range(problem.n_regimes)]
            for _ in range(problem.grid.dates)]


@pytest.mark.parametrize('compensated', [True, False])
def test_jump_compensation(compensated):
    problem = SwitchingProblem.from_name('expou_jump', d=2, dates=2)
    penalty = DualPenalty(problem.grid, 3, 2, _constant_nets(problem, 0.), jump_nets=_constant_nets(problem, 1.),
                          intensity=problem.dynamics.intensity, compensated=compensated)
    paths = simulate(problem.dynamics, problem.grid, 4000, seed=1)
    xi = penalty.increments(paths, 0)[:, 0]
    expected = 0. if compensated else 4.*problem.grid.interval
    assert abs(xi.mean() - expected) < 4*xi.std(ddof=1)/np.sqrt(len(xi))


@pytest.mark.parametrize('activation', ['relu', 'tanh'])
@pytest.mark.parametrize('loss', ['d1', 'd2'])
def test_stage_gradient(loss, activation):
    """
    Gradients of the date loss through the maximum match central differences.
    """
    problem = _small_problem(d=2)
    paths = simulate(problem.dynamics, problem.grid, 64, seed=2)
    tables = evaluate_payoffs(problem, paths)
    F, L, G = tables.F[:, 1], tables.L[:, 1], tables.G
    baseline = np.full(64, 0.1)
    regimes = [0, 1, 2]
    for seed in range(10):
        penalty = DualPenalty.initialize(problem, width=6, activation=activation, seed=seed)
        xi = penalty.increments(paths, 1, mode='train', record=True, track_stats=False)
        values, choice = dual_step(F, L, xi, G)
        _, d_values = stage_loss(values, baseline, regimes, loss)
        grads = penalty.backward(paths, 1, increment_cotangent(d_values, choice))

        def objective():
            xi = penalty.increments(paths, 1, mode='train', record=False, track_stats=False)
            return stage_loss(dual_step(F, L, xi, G)[0], baseline, regimes, loss)[0]

        params = penalty.stage_parameters(1)
        assert set(grads) == set(params)
        numeric, smooth = central_differences(objective, params)
        error, kept = relative_error(numeric, grads, smooth)
        assert kept > 0.9
        assert error < 1e-5, seed


def test_train_trace():
    problem = _small_problem()
    config = DualTrainingConfig(epochs=3, batch_size=256, inner_steps=2, seed=4, log_every=1)
    result = train(problem, config)
    assert len(result.trace) == 3*2*2
    assert [row['stage'] for row in result.trace[:4]] == [1, 1, 0, 0]
    assert all(np.isfinite(row['loss']) for row in result.trace)
    again = train(problem, config)
    paths = simulate(problem.dynamics, problem.grid, 100, seed=9)
    nt.assert_array_equal(result.penalty.increments(paths, 0), again.penalty.increments(paths, 0))


def test_train_divergence():
    problem = _small_problem()
    config = DualTrainingConfig(epochs=2, batch_size=64, learning_rate=np.inf, log_every=0)
    with np.errstate(all='ignore'):
        with pytest.raises(TrainingError) as info:
            train(problem, config)
    assert info.value.trace
    assert 'stage' in info.value.diagnostics


def test_training_config():
    with pytest.raises(ConfigurationError):
        DualTrainingConfig(loss='d3')
    with pytest.raises(ConfigurationError):
        DualTrainingConfig(inner_steps=0)
    assert DualTrainingConfig(baseline={'form': 'linear_in_n'}).baseline.parameters == {'rate': 0.45}
    with pytest.raises(ConfigurationError):
        train(_small_problem(), DualTrainingConfig(epochs=1, reference_regime=3))


def test_expression_baseline_time():
    states = np.full((3, 2), 6.)
    nt.assert_allclose(Baseline('expression', {'source': 't - 1'}).evaluate(3, 12, states, t=0.25), -0.75)
    nt.assert_allclose(baseline_eval(Baseline('expression', {'source': 't*N'}), 3, states, 12, t=0.25), 3.)
    values = dual_backward(SimpleNamespace(n_regimes=2), _hand_tables(), np.zeros((1, 2, 2)))
    baseline = Baseline('expression', {'source': 't'})
    assert loss_l2(values, baseline, 0, n=0, states=np.zeros((1, 1)), dates=2, t=0.5) == pytest.approx(9.)


class RecordingBaseline(Baseline):

    def __post_init__(self):
        super().__post_init__()
        self.times = {}

    def evaluate(self, n, N, states, t=0.):
        self.times[n] = t
        return super().evaluate(n, N, states, t=t)


def test_training_passes_date_time():
    problem = SwitchingProblem.from_name('gbm3regime', d=1, dates=4, substeps=2)
    baseline = RecordingBaseline('expression', {'source': 't - 1'})
    train(problem, DualTrainingConfig(epochs=1, batch_size=32, baseline=baseline, log_every=0))
    assert sorted(baseline.times) == [0, 1, 2, 3]
    for n, t in baseline.times.items():
        assert t == pytest.approx(problem.grid.date_time(n))


def test_regime_relabelling():
    """
    Permuting the regimes permutes payoffs and dual values the same way.
    """
    dynamics = GBM(x0=[1., 1.], drift=0.05, volatility=0.2)
    grid = TimeGrid(1., 3, 2)
    running = ['x[0] - 1', 'mean(x) - 1.1', '0.2']
    terminal = ['0', 'x[1] - 1', '0.1']
    costs = [[0., 0.1, '0.05*x[0]'], [0.2, 0., 0.1], [0.3, 0.15, 0.]]
    perm = [2, 0, 1]
    problem = SwitchingProblem(grid, dynamics, running, terminal, costs)
    relabelled = SwitchingProblem(grid, dynamics, [running[k] for k in perm], [terminal[k] for k in perm],
                                  [[costs[a][b] for b in perm] for a in perm])
    paths = simulate(dynamics, grid, 500, seed=4)
    tables = evaluate_payoffs(problem, paths)
    other = evaluate_payoffs(relabelled, paths)
    nt.assert_allclose(other.F, tables.F[:, :, perm])
    nt.assert_allclose(other.G, tables.G[:, perm])
    nt.assert_allclose(other.L, tables.L[:, :, perm][:, :, :, perm])

    penalty = DualPenalty.initialize(problem, width=5, seed=1)
    xi = np.stack([penalty.increments(paths, n) for n in range(grid.dates)], axis=1)
    values = dual_backward(problem, tables, xi)
    permuted = dual_backward(relabelled, other, xi[:, :, perm])
    nt.assert_allclose(permuted.U, values.U[:, :, perm], rtol=1e-12)


def test_increments_have_zero_mean():
    problem = _small_problem(d=2)
    penalty = DualPenalty.initialize(problem, width=6, seed=3)
    paths = simulate(problem.dynamics, problem.grid, 20000, seed=11)
    for n in range(problem.grid.dates):
        xi = martingale_increments(penalty, paths, n)
        se = xi.std(axis=0, ddof=1)/np.sqrt(len(xi))
        assert np.all(np.abs(xi.mean(axis=0)) < 4*se)


def test_zero_epoch_weak_duality():
    problem = _small_problem()
    result = train(problem, DualTrainingConfig(epochs=0, seed=1))
    assert result.trace == []
    policy = Policy.initialize(problem.grid, 3, 1, seed=2)
    report = estimate_bounds(problem, result.penalty, policy, 4096, seed=5)
    se = np.sqrt(report.upper_se**2 + report.lower_se**2)
    assert np.all(report.upper >= report.lower - 4*se)
