import numpy as np
import numpy.testing as nt
import pytest

from deepswitch.errors import CertificationError, ConfigurationError, InstanceTooLargeError
from deepswitch.oracle import (LatticeModel, bundled_instances, brute_force_value, certify, certify_many,
                               doob_martingale, exact_value, greedy, path_increments, policy_value, random_lattice)
from deepswitch.oracle.certify import PROPERTIES, Check
from deepswitch.oracle.instances import power_costs
from deepswitch.oracle.lattice import rule_count


def hand_lattice():
    """
    One date, two branches of probability 1/2, two regimes:
    E[Phi] = (0, 3), so Y_0 = (max(1, -0.5 + 3), max(1 - 0.3, 3)) = (2.5, 3).
    """
    return LatticeModel(2, [[[0.]], [[1.], [2.]]], [[[0.5, 0.5]]], [[[1., 0.]]], [[[[0., 0.5], [0.3, 0.]]]],
                        [[0., 2.], [0., 4.]])


def test_hand_instance():
    model = hand_lattice()
    values = exact_value(model)
    nt.assert_allclose(values[0], [[2.5, 3.]])
    nt.assert_array_equal(greedy(model, values)[0], [[1, 1]])
    for i in range(2):
        nt.assert_allclose(brute_force_value(model, 0, i), values[0][:, i])
    increments = doob_martingale(model, values)
    nt.assert_allclose(increments[0], [[[0., -1.], [0., 1.]]])
    result = certify(model, name='hand')
    assert result.passed
    assert not result.skipped
    assert set(result.checks) == set(PROPERTIES)


@pytest.mark.parametrize('branching,dates,regimes', [(2, 2, 2), (2, 3, 3), (3, 2, 3), (2, 4, 2), (3, 3, 2)])
def test_dp_equals_enumeration(branching, dates, regimes):
    model = random_lattice(branching, dates, regimes, seed=branching + dates + regimes)
    values = exact_value(model)
    scale = max(1., max(np.abs(v).max() for v in values))
    for n in range(dates + 1):
        if rule_count(model, n) > 10**5:
            continue
        for i in range(regimes):
            nt.assert_allclose(brute_force_value(model, n, i), values[n][:, i], rtol=0, atol=1e-12*scale)


def test_enumeration_cap():
    model = random_lattice(3, 4, 3, seed=0)
    with pytest.raises(InstanceTooLargeError) as info:
        brute_force_value(model, 0, 0)
    assert info.value.count == 3**40
    with pytest.raises(InstanceTooLargeError):
        brute_force_value(model, 2, 0, cap=10)
    with pytest.raises(ValueError):
        brute_force_value(model, 5, 0)


def test_prohibitive_costs():
    """
    With prohibitive costs the value is the value of never switching.
    """
    model = random_lattice(2, 3, 3, seed=5, costs='prohibitive')
    values = exact_value(model)
    stay = [np.broadcast_to(np.arange(3), (model.n_nodes(n), 3)) for n in range(model.dates)]
    for value, staying in zip(values, policy_value(model, stay)):
        nt.assert_allclose(value, staying)
    assert certify(model, n_penalties=10).passed


def test_zero_costs_skipped():
    model = random_lattice(2, 3, 2, seed=1, costs='zero')
    result = certify(model, name='free')
    assert result.skipped
    assert result.precondition.equality
    assert result.passed
    assert result.checks == {}


def test_single_regime():
    model = random_lattice(2, 3, 1, seed=2)
    values = exact_value(model)
    tables, weights, _ = model.path_tables()
    expected = weights @ (tables.F.sum(axis=1) + tables.G)
    nt.assert_allclose(values[0][0], expected)
    assert certify(model, n_penalties=10).passed


def test_strong_duality_pathwise():
    model = random_lattice(2, 3, 3, seed=8)
    values = exact_value(model)
    result = certify(model)
    assert result.passed
    assert result.checks['strong_duality'].max_violation <= 1e-10
    assert result.checks['weak_duality'].max_violation <= 1e-10
    tables, _, nodes = model.path_tables()
    xi = path_increments(model, doob_martingale(model, values))
    assert xi.shape == (8, 3, 3)
    # Doob increments vanish in conditional mean at every node
    for n in range(model.dates):
        nt.assert_allclose(model.conditional_mean(n, xi[:, n]), 0., atol=1e-12)


def test_power_costs_are_strict():
    costs = power_costs(3)
    nt.assert_allclose(costs, [[0., 0.35, 0.3*2**0.9 + 0.05], [0.35, 0., 0.35], [0.3*2**0.9 + 0.05, 0.35, 0.]])
    model = random_lattice(2, 2, 3, seed=0)
    assert certify(model, n_penalties=5).precondition.passed


def test_bundled_fixtures():
    instances = bundled_instances()
    assert len(instances) >= 20
    results = certify_many(instances, workers=4)
    assert [result.name for result in results] == [name for name, _ in instances]
    for result in results:
        assert not result.skipped
        assert result.passed, (result.name, result.failures)


def test_failure_raises():
    result = certify(hand_lattice(), n_penalties=5)
    result.checks['terminal'] = Check(passed=False, max_violation=0.5, node=(1, 0, 1))
    assert not result.passed
    with pytest.raises(CertificationError) as info:
        result.raise_for_failures()
    assert info.value.prop == 'terminal'
    assert info.value.node == (1, 0, 1)
    with pytest.raises(ValueError):
        certify(hand_lattice(), n_penalties=0)


def test_lattice_validation(tmp_path):
    with pytest.raises(ConfigurationError):
        LatticeModel(2, [[[0.]], [[1.], [2.]]], [[[0.5, 0.6]]], [[[1., 0.]]], [[[[0., 0.5], [0.3, 0.]]]],
                     [[0., 2.], [0., 4.]])
    with pytest.raises(ConfigurationError):
        LatticeModel(2, [[[0.]], [[1.], [2.]]], [[[0.5, 0.5]]], [[[1., 0.]]], [[[[0.1, 0.5], [0.3, 0.]]]],
                     [[0., 2.], [0., 4.]])
    model = random_lattice(3, 2, 2, dim=2, seed=3)
    model.to_file(tmp_path/'lattice.json')
    loaded = LatticeModel.from_file(tmp_path/'lattice.json')
    nt.assert_allclose(exact_value(loaded)[0], exact_value(model)[0])
