import logging

import numpy as np
import numpy.testing as nt
import pytest

from deepswitch.dual import DualPenalty
from deepswitch.market.simulation import simulate
from deepswitch.primal import Policy
from deepswitch.problem import SwitchingProblem
from deepswitch.utils.io import (load_penalty, load_policy, provenance, read_csv, save_penalty, save_policy,
                                 write_csv, write_json)
from deepswitch.utils.seeding import derive_seed, generator
from deepswitch.utils.verbosity import Verbosity


def test_derive_seed():
    assert derive_seed(1, 'evaluate') == derive_seed(1, 'evaluate')
    assert derive_seed(1, 'evaluate') != derive_seed(1, 'hedge')
    assert derive_seed(1, 'epoch', 12) != derive_seed(1, 'epoch', 1, 2)
    assert 0 <= derive_seed(2**40, 'x') < 2**63
    with pytest.raises(ValueError):
        derive_seed(-1)
    nt.assert_array_equal(generator(3, 'a').standard_normal(5), generator(3, 'a').standard_normal(5))


def test_verbosity():
    logger = logging.getLogger('deepswitch')
    before = logger.level
    with Verbosity('debug'):
        assert logger.level == logging.DEBUG
    assert logger.level == before
    with pytest.raises(ValueError):
        Verbosity('loud')


def test_csv_header(tmp_path):
    config = {'seed': 4, 'evaluation': {'paths': np.int64(10)}}
    write_csv(tmp_path/'table.csv', [{'a': 1., 'b': np.nan}, {'a': 2., 'b': 3.}], config)
    first = (tmp_path/'table.csv').read_text().splitlines()[0]
    assert first.startswith('# ')
    assert '"seed": 4' in first
    frame = read_csv(tmp_path/'table.csv')
    assert list(frame.columns) == ['a', 'b']
    assert np.isnan(frame['b'][0])
    write_json(tmp_path/'report.json', {'value': np.float64(np.inf)}, config)
    assert '"value": null' in (tmp_path/'report.json').read_text()
    assert provenance()


def test_penalty_checkpoint(tmp_path):
    problem = SwitchingProblem.from_name('expou_jump', d=2, dates=3)
    penalty = DualPenalty.initialize(problem, width=5, depth=2, seed=1)
    save_penalty(penalty, tmp_path/'penalty')
    loaded = load_penalty(tmp_path/'penalty')
    assert loaded.has_jumps
    assert loaded.compensated
    paths = simulate(problem.dynamics, problem.grid, 20, seed=0)
    for n in range(3):
        nt.assert_array_equal(loaded.increments(paths, n), penalty.increments(paths, n))
    with pytest.raises(FileNotFoundError):
        load_penalty(tmp_path/'nothing')


def test_policy_checkpoint(tmp_path):
    problem = SwitchingProblem.from_name('gbm3regime', d=2, dates=3, substeps=2)
    policy = Policy.initialize(problem.grid, 3, 2, seed=2)
    save_policy(policy, tmp_path/'policy')
    loaded = load_policy(tmp_path/'policy')
    states = np.random.default_rng(0).uniform(40, 60, (30, 2))
    for n in range(3):
        nt.assert_array_equal(loaded.logits(n, states, 1), policy.logits(n, states, 1))
