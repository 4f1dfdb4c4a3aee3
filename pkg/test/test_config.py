import json

import pytest

from deepswitch.config import FULL_EVAL_PATHS, RunConfig, preset_values
from deepswitch.dual.baseline import Baseline
from deepswitch.errors import ConfigurationError
from deepswitch.utils.seeding import derive_seed


def test_defaults():
    config = RunConfig.from_dict({})
    assert config.preset == 'full'
    assert config.problem == {'name': 'gbm3regime', 'd': 2}
    assert config.training.epochs == 1040
    assert config.primal.epochs == 1040
    assert config.training.baseline == Baseline('linear_in_n')
    assert config.evaluation.paths == FULL_EVAL_PATHS
    assert config.evaluation.region_states == 200000
    assert config.build_problem().grid.substeps == 62


def test_desk_preset():
    config = RunConfig.from_dict({'problem': {'name': 'gbm3regime', 'd': 10}}, {'preset': 'desk'})
    assert config.training.epochs == 120
    assert config.evaluation.paths == 163840
    assert config.evaluation.hedge_paths == 163840
    with pytest.raises(ConfigurationError) as info:
        preset_values({}, 'huge')
    assert info.value.pointer == '/preset'


def test_jump_preset():
    config = RunConfig.from_dict({'problem': {'name': 'expou_jump', 'd': 3}})
    assert config.training.epochs == 309
    assert config.training.baseline.form == 'expou_moment'
    # an explicit entry wins over the preset
    config = RunConfig.from_dict({'problem': {'name': 'expou_jump', 'd': 3}, 'training': {'epochs': 5}})
    assert config.training.epochs == 5


def test_dimension_override_keeps_problem():
    config = RunConfig.from_dict({}, {'problem': {'d': 3}})
    assert config.problem == {'name': 'gbm3regime', 'd': 3}
    assert config.build_problem().dim == 3


@pytest.mark.parametrize('spec,pointer', [
    ({'training': {'epochs': 'many'}}, '/training/epochs'),
    ({'training': {'epochs': 2.5}}, '/training/epochs'),
    ({'evaluation': {'colour': 'red'}}, '/evaluation/colour'),
    ({'evaluation': {'hedge_regime': 0}}, '/evaluation/hedge_regime'),
    ({'evaluation': {'hedge_sign': 'gain'}}, '/evaluation/hedge_sign'),
    ({'training': {'loss': 'd3'}}, '/training'),
    ({'training': {'baseline': {'form': 'cubic'}}}, '/training/baseline'),
    ({'training': []}, '/training'),
    ({'workers': 0}, '/workers'),
    ({'speed': 1}, '/speed'),
    ({'problem': {'name': 'nothing'}}, '/problem'),
    ({'grid': {'dates': 0}}, '/grid'),
])
def test_error_pointers(spec, pointer):
    with pytest.raises(ConfigurationError) as info:
        RunConfig.from_dict(spec)
    assert info.value.pointer == pointer
    assert pointer in str(info.value)


def test_regimes_from_one():
    config = RunConfig.from_dict({'evaluation': {'hedge_regime': 2}, 'training': {'reference_regime': 3}})
    assert config.evaluation.hedge_regime == 1
    assert config.training.reference_regime == 2
    resolved = config.as_dict()
    assert resolved['evaluation']['hedge_regime'] == 2
    assert resolved['training']['reference_regime'] == 3
    assert RunConfig.from_dict(resolved).as_dict() == resolved


def test_inline_problem():
    spec = {'problem': {'regimes': 2, 'horizon': 1., 'dates': 3, 'substeps': 1,
                        'dynamics': {'variant': 'gbm', 'x0': [1.], 'drift': 0., 'volatility': 0.2},
                        'running': ['0', 'x[0]'], 'terminal': [0, 0], 'costs': [[0, 0.1], [0.1, 0]],
                        'reference_regime': 2}}
    problem = RunConfig.from_dict(spec).build_problem()
    assert problem.n_regimes == 2
    assert problem.reference_regime == 1
    spec['problem']['reference_regime'] = 0
    with pytest.raises(ConfigurationError):
        RunConfig.from_dict(spec)


def test_grid_override():
    config = RunConfig.from_dict({'grid': {'dates': 4, 'substeps': 2}})
    grid = config.build_problem().grid
    assert (grid.dates, grid.substeps, grid.horizon) == (4, 2, 1.)


def test_stage_seeds():
    config = RunConfig.from_dict({'seed': 7})
    assert config.training.seed == derive_seed(7, 'train-dual') % 2**32
    assert config.training.seed != config.primal.seed
    assert RunConfig.from_dict({'seed': 7}).primal.seed == config.primal.seed
    assert RunConfig.from_dict({'seed': 8}).primal.seed != config.primal.seed


def test_from_file(tmp_path):
    path = tmp_path/'run.json'
    path.write_text(json.dumps({'seed': 3, 'out': 'elsewhere'}))
    config = RunConfig.from_file(path, {'out': 'here'})
    assert config.seed == 3
    assert config.out == 'here'
    with pytest.raises(FileNotFoundError):
        RunConfig.from_file(tmp_path/'missing.json')
    path.write_text('{"seed": ')
    with pytest.raises(ConfigurationError):
        RunConfig.from_file(path)
