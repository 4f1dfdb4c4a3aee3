"""
Run configuration.

A run is described by one JSON document. Each section maps onto a typed
dataclass through a table of ``(json key, attribute, type)`` triples; any
unknown key or badly typed value is reported with its JSON pointer.
Regimes are numbered from 1 in configuration files.
"""

import json
import os
from dataclasses import dataclass, field

from .dual.baseline import Baseline
from .dual.training import DualTrainingConfig
from .errors import ConfigurationError
from .primal.training import PolicyTrainingConfig
from .problem.problem import SwitchingProblem
from .utils.seeding import derive_seed

PRESETS = ('full', 'desk')

# published evaluation and region sample sizes
FULL_EVAL_PATHS = 1638400
FULL_REGION_STATES = 200000
DESK_DIVISOR = 10
DEFAULT_PROBLEM = {'name': 'gbm3regime', 'd': 2}


@dataclass
class EvaluationConfig:
    paths: int = FULL_EVAL_PATHS
    hedge_paths: int = FULL_EVAL_PATHS
    hedge_regime: int = 0
    hedge_sign: str = 'shortfall'
    # clipped to the last intervention date
    region_date: int = 6
    region_states: int = FULL_REGION_STATES
    histogram_bins: int = 50
    certify_penalties: int = 100


def _regime(value):
    """1-based regime in files, 0-based in code."""
    value = _integer(value)
    if value < 1:
        raise TypeError("regimes are numbered from 1")
    return value - 1


def _integer(value):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise TypeError("expected an integer")
    return int(value)


def _number(value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeError("expected a number")
    return float(value)


def _flag(value):
    if not isinstance(value, bool):
        raise TypeError("expected true or false")
    return value


def _text(value):
    if not isinstance(value, str):
        raise TypeError("expected a string")
    return value


def _mapping(value):
    if not isinstance(value, dict):
        raise TypeError("expected an object")
    return dict(value)


def _optional(convert):
    def optional(value):
        return None if value is None else convert(value)
    return optional


# a mapping between configuration keys and attributes, with the corresponding type
TOP_MAPPING = [
    ("seed", "seed", _integer),
    ("out", "out", _text),
    ("workers", "workers", _integer),
    ("preset", "preset", _text),
    ("problem", "problem", _mapping),
    ("grid", "grid", _mapping),
]

SECTION_MAPPING = {
    "training": [
        ("epochs", "epochs", _integer),
        ("batch_size", "batch_size", _integer),
        ("learning_rate", "learning_rate", _number),
        ("loss", "loss", _text),
        ("baseline", "baseline", _mapping),
        ("inner_steps", "inner_steps", _integer),
        ("reference_regime", "reference_regime", _optional(_regime)),
        ("all_regimes", "all_regimes", _flag),
        ("width", "width", _optional(_integer)),
        ("depth", "depth", _integer),
        ("activation", "activation", _text),
        ("compensated", "compensated", _flag),
        ("log_every", "log_every", _integer),
    ],
    "primal": [
        ("epochs", "epochs", _integer),
        ("batch_size", "batch_size", _integer),
        ("learning_rate", "learning_rate", _number),
        ("temperature_start", "temperature_start", _number),
        ("temperature_end", "temperature_end", _number),
        ("inner_steps", "inner_steps", _integer),
        ("width", "width", _optional(_integer)),
        ("depth", "depth", _integer),
        ("activation", "activation", _text),
        ("log_every", "log_every", _integer),
    ],
    "evaluation": [
        ("paths", "paths", _integer),
        ("hedge_paths", "hedge_paths", _integer),
        ("hedge_regime", "hedge_regime", _regime),
        ("hedge_sign", "hedge_sign", _text),
        ("region_date", "region_date", _integer),
        ("region_states", "region_states", _integer),
        ("histogram_bins", "histogram_bins", _integer),
        ("certify_penalties", "certify_penalties", _integer),
    ],
}

def preset_values(problem, preset):
    """
    Epochs and sample sizes of a preset for a problem section.

    The full preset uses 1000 + 20d epochs for the GBM instances and
    300 + 3d for the jump model; the desk preset divides epochs and path
    counts by ten. The built-in instances get their baseline form.
    """
    if preset not in PRESETS:
        raise ConfigurationError("Unknown preset {}, expected one of {}".format(preset, PRESETS), pointer='/preset')
    d = problem.get('d', 2)
    epochs = 300 + 3*d if problem.get('name') == 'expou_jump' else 1000 + 20*d
    divisor = DESK_DIVISOR if preset == 'desk' else 1
    values = {
        'training': {'epochs': max(1, epochs // divisor)},
        'primal': {'epochs': max(1, epochs // divisor)},
        'evaluation': {'paths': FULL_EVAL_PATHS // divisor,
                       'hedge_paths': FULL_EVAL_PATHS // divisor,
                       'region_states': FULL_REGION_STATES // divisor},
    }
    if problem.get('name') == 'expou_jump':
        values['training']['baseline'] = {'form': 'expou_moment'}
    elif problem.get('name') == 'gbm3regime':
        values['training']['baseline'] = {'form': 'linear_in_n'}
    return values


def _apply(target, mapping, values, pointer):
    known = {key: (attribute, convert) for key, attribute, convert in mapping}
    for key, value in values.items():
        if key not in known:
            raise ConfigurationError("unknown key", pointer='{}/{}'.format(pointer, key))
        attribute, convert = known[key]
        try:
            value = convert(value)
        except (TypeError, ValueError) as error:
            raise ConfigurationError(str(error), pointer='{}/{}'.format(pointer, key))
        setattr(target, attribute, value)


@dataclass
class RunConfig:
    problem: dict = field(default_factory=lambda: dict(DEFAULT_PROBLEM))
    grid: dict = field(default_factory=dict)
    training: DualTrainingConfig = field(default_factory=DualTrainingConfig)
    primal: PolicyTrainingConfig = field(default_factory=PolicyTrainingConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    seed: int = 0
    out: str = 'runs/default'
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    preset: str = 'full'

    @classmethod
    def from_dict(cls, spec, overrides=None):
        """
        Resolve defaults, the preset, the document `spec` and then
        `overrides` (same layout as `spec`), in that order.
        """
        spec = _merge(spec or {}, overrides or {})
        if not isinstance(spec, dict):
            raise ConfigurationError("expected an object", pointer='')
        problem = spec.get('problem', {})
        if isinstance(problem, dict) and 'regimes' not in problem:
            spec = _merge({'problem': DEFAULT_PROBLEM}, spec)
        config = cls()
        top = {key: value for key, value in spec.items() if key not in SECTION_MAPPING}
        _apply(config, TOP_MAPPING, top, '')
        sections = _merge(preset_values(config.problem, config.preset),
                          {key: spec[key] for key in SECTION_MAPPING if key in spec})
        for name, mapping in SECTION_MAPPING.items():
            values = sections.get(name, {})
            if not isinstance(values, dict):
                raise ConfigurationError("expected an object", pointer='/' + name)
            _apply(getattr(config, name), mapping, values, '/' + name)
        config._validate()
        return config

    @classmethod
    def from_file(cls, path, overrides=None):
        if not os.path.exists(path):
            raise FileNotFoundError("Missing configuration file {}".format(path))
        with open(path) as f:
            try:
                spec = json.load(f)
            except json.JSONDecodeError as error:
                raise ConfigurationError("malformed JSON: {}".format(error), pointer='')
        return cls.from_dict(spec, overrides)

    def _validate(self):
        if isinstance(self.training.baseline, dict):
            try:
                self.training.baseline = Baseline(**self.training.baseline)
            except (TypeError, ConfigurationError) as error:
                raise ConfigurationError(str(error), pointer='/training/baseline')
        for name in SECTION_MAPPING:
            check = getattr(getattr(self, name), '__post_init__', None)
            try:
                if check is not None:
                    check()
            except ConfigurationError as error:
                raise ConfigurationError(str(error), pointer='/' + name)
        self.training.seed = self.stage_seed('train-dual')
        self.primal.seed = self.stage_seed('train-primal')
        self.training.workers = self.primal.workers = self.workers
        if self.workers < 1:
            raise ConfigurationError("at least one worker is needed", pointer='/workers')
        if self.evaluation.hedge_sign not in ('shortfall', 'loss'):
            raise ConfigurationError("expected 'shortfall' or 'loss'", pointer='/evaluation/hedge_sign')
        self.build_problem()

    def build_problem(self):
        spec = dict(self.problem)
        try:
            if 'name' in spec and 'regimes' not in spec:
                name = spec.pop('name')
                problem = SwitchingProblem.from_name(name, **spec)
            else:
                spec.pop('regimes', None)
                if 'reference_regime' in spec:
                    spec['reference_regime'] = _regime(spec['reference_regime'])
                problem = SwitchingProblem.from_dict(spec)
        except (TypeError, ConfigurationError) as error:
            raise ConfigurationError(str(error), pointer='/problem')
        if self.grid:
            grid = problem.grid
            try:
                grid = type(grid)(self.grid.get('horizon', grid.horizon), self.grid.get('dates', grid.dates),
                                  self.grid.get('substeps', grid.substeps))
            except ConfigurationError as error:
                raise ConfigurationError(str(error), pointer='/grid')
            problem = problem.with_grid(grid)
        return problem

    def stage_seed(self, stage):
        return derive_seed(self.seed, stage) % 2**32

    def as_dict(self):
        """The resolved configuration, in the file layout."""
        resolved = {'seed': self.seed, 'out': self.out, 'workers': self.workers, 'preset': self.preset,
                    'problem': dict(self.problem), 'grid': dict(self.grid)}
        for name, mapping in SECTION_MAPPING.items():
            section = getattr(self, name)
            values = {}
            for key, attribute, _ in mapping:
                value = getattr(section, attribute)
                if isinstance(value, Baseline):
                    value = value.as_dict()
                if key in ('reference_regime', 'hedge_regime') and value is not None:
                    value += 1
                values[key] = value
            resolved[name] = values
        return resolved


def _merge(base, update):
    """Recursive dictionary update returning a new mapping."""
    if not isinstance(base, dict) or not isinstance(update, dict):
        return update
    merged = dict(base)
    for key, value in update.items():
        merged[key] = _merge(base.get(key), value) if isinstance(value, dict) and key in base else value
    return merged
