import numpy as np
import numpy.testing as nt
import pytest

from deepswitch.errors import ConfigurationError, NumericError
from deepswitch.market.dynamics import GBM
from deepswitch.market.grid import TimeGrid
from deepswitch.market.simulation import simulate
from deepswitch.problem import (Expression, SwitchingProblem, evaluate_payoffs, triangular_report,
                                validate_triangular)


def test_expression_values():
    x = np.array([[50., 52.], [1., 3.]])
    nt.assert_allclose(Expression('2*mean(x) - 100').evaluate(0., x), [2., -96.])
    nt.assert_allclose(Expression('2*(x[0] - 1.1*x[-1]) - 1').evaluate(0., x), [2*(50 - 57.2) - 1, 2*(1 - 3.3) - 1])
    nt.assert_allclose(Expression('max(x)').evaluate(0., x), [52., 3.])
    nt.assert_allclose(Expression('max(x[0] - 2, 0)').evaluate(0., x), [48., 0.])
    nt.assert_allclose(Expression('d*mean(x[1:]) + t').evaluate(0.5, x), [104.5, 6.5])
    nt.assert_allclose(Expression(-0.5).evaluate(0., x), [-0.5, -0.5])


def test_expression_constant():
    assert Expression('-0.5').constant == -0.5
    assert Expression(0.).constant == 0.
    assert Expression('x[0]').constant is None


@pytest.mark.parametrize('source', ['x.__class__', '__import__("os")', '2**3', 'x[0]/2', 'y + 1', 'x[::2]',
                                    'mean(x, x)', 'True'])
def test_expression_rejected(source):
    with pytest.raises(ConfigurationError):
        Expression(source)


def test_expression_range():
    with pytest.raises(ConfigurationError):
        Expression('x[5]').evaluate(0., np.ones((2, 2)))
    with pytest.raises(ConfigurationError):
        Expression('x').evaluate(0., np.ones((2, 2)))


def test_problem_validation():
    grid = TimeGrid(1., 2)
    dynamics = GBM(x0=[1.], drift=0., volatility=0.1)
    with pytest.raises(ConfigurationError):
        SwitchingProblem(grid, dynamics, ['0', '1'], [0., 0.], [[0., 1.], [1., 0.5]])
    with pytest.raises(ConfigurationError):
        SwitchingProblem(grid, dynamics, ['0', '1'], [0.], [[0., 1.], [1., 0.]])
    with pytest.raises(ConfigurationError):
        SwitchingProblem(grid, dynamics, ['0', '1'], [0., 0.], [[0., 1.], [1., 0.]], reference_regime=2)
    with pytest.raises(ConfigurationError):
        SwitchingProblem.from_name('unknown')


def test_problem_from_dict():
    problem = SwitchingProblem.from_name('gbm3regime', d=3, dates=4, substeps=2)
    spec = problem.as_dict()
    spec.update(spec.pop('grid'))
    rebuilt = SwitchingProblem.from_dict(spec)
    assert rebuilt.n_regimes == 3
    assert rebuilt.grid == problem.grid
    x = np.array([[50., 51., 49.]])
    nt.assert_allclose(rebuilt.cost_matrix(0., x), problem.cost_matrix(0., x))


def test_triangular_equality():
    """
    Costs 0.2|i - j| hold the triangular inequality only with equality.
    """
    problem = SwitchingProblem.from_name('gbm3regime', d=2, dates=4, substeps=2)
    report = validate_triangular(problem, np.full((5, 2), 50.), dates=[0, 1])
    assert not report.passed
    assert report.equality
    assert (0, 1, 2) in report.binding
    assert report.n_samples == 10


def test_triangular_strict():
    problem = SwitchingProblem.from_name('expou_jump', d=2, dates=4)
    report = validate_triangular(problem, [[50., 6.], [40., 8.]], dates=[0, 3])
    assert report.passed
    assert report.min_slack > 0


def test_triangular_violation():
    costs = np.array([[[0., 1., 3.], [1., 0., 1.], [3., 1., 0.]]])
    report = triangular_report([costs])
    assert not report.passed
    assert not report.equality
    assert (0, 1, 2) in report.violated
    assert pytest.approx(report.max_violation) == 1.
    single = triangular_report([np.zeros((4, 1, 1))])
    assert single.passed


def _deterministic_problem(quadrature='left', substeps=4):
    dynamics = GBM(x0=[1.], drift=1., volatility=0.)
    return SwitchingProblem(TimeGrid(1., 2, substeps), dynamics, ['x[0]', '2'], ['x[0]', '0'],
                            [[0., '0.1*x[0]'], [0.3, 0.]], quadrature=quadrature)


def test_payoff_tables():
    problem = _deterministic_problem()
    paths = simulate(problem.dynamics, problem.grid, 3, seed=0)
    tables = evaluate_payoffs(problem, paths)
    assert tables.F.shape == (3, 2, 2)
    assert tables.L.shape == (3, 2, 2, 2)
    dt = 1/8
    left = [sum(np.exp((4*n + k)*dt)*dt for k in range(4)) for n in range(2)]
    nt.assert_allclose(tables.F[0, :, 0], left)
    nt.assert_allclose(tables.F[:, :, 1], 1.)
    nt.assert_allclose(tables.L[0, 1], [[0., 0.1*np.exp(0.5)], [0.3, 0.]])
    nt.assert_allclose(tables.G[0], [np.e, 0.])


def test_trapezoid_closer():
    exact = np.exp(0.5) - 1
    errors = []
    for quadrature in ['left', 'trapezoid']:
        problem = _deterministic_problem(quadrature)
        paths = simulate(problem.dynamics, problem.grid, 1, seed=0)
        errors.append(abs(evaluate_payoffs(problem, paths).F[0, 0, 0] - exact))
    assert errors[1] < errors[0]/10


def test_non_finite_payoff():
    dynamics = GBM(x0=[1.], drift=1e5, volatility=0.)
    problem = SwitchingProblem(TimeGrid(1., 2), dynamics, ['x[0]'], ['0'], [[0.]])
    with np.errstate(over='ignore', invalid='ignore'):
        paths = simulate(dynamics, problem.grid, 2, seed=0)
        with pytest.raises(NumericError) as info:
            evaluate_payoffs(problem, paths)
    assert info.value.path == 0
    assert info.value.step == 1


def test_riemann_convergence_rate():
    """
    The left sum error halves whenever the substep count doubles.
    """
    exact = np.e - 1
    substeps = [30, 60, 120]
    errors = []
    for k in substeps:
        problem = _deterministic_problem('left', k)
        paths = simulate(problem.dynamics, problem.grid, 1, seed=0)
        errors.append(abs(evaluate_payoffs(problem, paths).F[0, :, 0].sum() - exact))
    slope = np.polyfit(np.log(substeps), np.log(errors), 1)[0]
    assert slope == pytest.approx(-1., abs=0.05)
    nt.assert_allclose(np.array(errors[:-1])/errors[1:], 2., rtol=0.05)
