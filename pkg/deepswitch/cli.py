"""
Command line entry point: ``python -m deepswitch <command> [options]``.

Every command resolves one `RunConfig` (defaults, preset, ``--config`` file,
then flags) and writes its artifacts under the output directory.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from .config import RunConfig
from .dual.training import train
from .errors import CertificationError, ConfigurationError, NumericError, TrainingError
from .evaluation.bounds import estimate_bounds
from .evaluation.hedging import hedging_errors
from .evaluation.regions import export_regions
from .market.io import paths_to_file
from .market.simulation import simulate
from .oracle.certify import certify_many
from .oracle.instances import bundled_instances
from .oracle.lattice import LatticeModel
from .primal.training import train_policy
from .utils.io import load_penalty, load_policy, save_penalty, save_policy, write_csv, write_json
from .utils.verbosity import Verbosity

logger = logging.getLogger(__name__)

COMMANDS = ('simulate', 'train-dual', 'train-primal', 'evaluate', 'certify', 'hedge', 'regions', 'table1')

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_NUMERIC = 4


def _report(config, key, payload):
    """Merge `payload` under `key` into ``report.json`` of the output directory."""
    path = Path(config.out)/'report.json'
    report = {}
    if path.exists():
        with open(path) as f:
            report = json.load(f)
        report.pop('config', None)
        report.pop('provenance', None)
    report[key] = payload
    write_json(path, report, config.as_dict())


def command_simulate(config, args):
    problem = config.build_problem()
    n_paths = args.paths or config.training.batch_size
    paths = simulate(problem.dynamics, problem.grid, n_paths, config.stage_seed('simulate'), workers=config.workers)
    target = Path(config.out)/'paths.bin'
    target.parent.mkdir(parents=True, exist_ok=True)
    paths_to_file(paths, target)
    _report(config, 'simulate', {'file': str(target), 'n_paths': n_paths})
    return EXIT_OK


def command_train_dual(config, args):
    problem = config.build_problem()
    result = train(problem, config.training)
    save_penalty(result.penalty, Path(config.out)/'penalty', config.as_dict())
    write_csv(Path(config.out)/'trace.csv', pd.DataFrame(result.trace), config.as_dict())
    last = result.trace[-1] if result.trace else {}
    _report(config, 'train-dual', {'epochs': config.training.epochs, 'last': last})
    return EXIT_OK


def command_train_primal(config, args):
    problem = config.build_problem()
    result = train_policy(problem, config.primal)
    save_policy(result.policy, Path(config.out)/'policy', config.as_dict())
    write_csv(Path(config.out)/'primal_trace.csv', pd.DataFrame(result.trace), config.as_dict())
    last = result.trace[-1] if result.trace else {}
    _report(config, 'train-primal', {'epochs': config.primal.epochs, 'last': last})
    return EXIT_OK


def _policy_or_none(config):
    directory = Path(config.out)/'policy'
    if not (directory/'meta.json').exists():
        logger.warning("no policy under %s, lower bounds are not estimated", directory)
        return None
    return load_policy(directory)


def _bounds(config):
    problem = config.build_problem()
    penalty = load_penalty(Path(config.out)/'penalty')
    policy = _policy_or_none(config)
    return estimate_bounds(problem, penalty, policy, config.evaluation.paths, config.seed, workers=config.workers)


def _write_bounds(config, report, hedge=None):
    row = report.table_row()
    if hedge is not None:
        for level in hedge.levels:
            row['CVaR{:g}'.format(100*level)] = hedge.cvar(level)
    write_csv(Path(config.out)/'bounds.csv', [row], config.as_dict())
    _report(config, 'evaluate', dict(report.as_dict(), consistent=report.consistent()))
    if not np.isnan(report.lower).all() and not report.consistent():
        logger.error("upper bounds fall below lower bounds by more than 4 standard errors")
        return EXIT_FAILED
    return EXIT_OK


def command_evaluate(config, args):
    return _write_bounds(config, _bounds(config))


def _stored_price(config):
    """UB of the hedged regime from an earlier evaluation in the output directory, if any."""
    path = Path(config.out)/'report.json'
    if not path.exists():
        return None
    with open(path) as f:
        upper = json.load(f).get('evaluate', {}).get('upper_bound')
    if not upper or upper[config.evaluation.hedge_regime] is None:
        return None
    return float(upper[config.evaluation.hedge_regime])


def _hedge(config, args, price=None):
    if getattr(args, 'price', None) is not None:
        price = args.price
    elif price is None:
        price = _stored_price(config)
    problem = config.build_problem()
    penalty = load_penalty(Path(config.out)/'penalty')
    hedge = hedging_errors(problem, penalty, config.evaluation.hedge_regime, config.evaluation.hedge_paths,
                           config.seed, price=price, sign=config.evaluation.hedge_sign,
                           workers=config.workers, bins=config.evaluation.histogram_bins)
    counts, edges = hedge.histogram()
    write_csv(Path(config.out)/'hedge.csv',
              pd.DataFrame({'bin_left': edges[:-1], 'bin_right': edges[1:], 'count': counts}), config.as_dict())
    _report(config, 'hedge', hedge.as_dict())
    return hedge


def command_hedge(config, args):
    hedge = _hedge(config, args)
    ordered = all(hedge.cvar(high) >= hedge.cvar(low) >= hedge.var(low)
                  for low, high in zip(hedge.levels[:-1], hedge.levels[1:]))
    return EXIT_OK if ordered else EXIT_FAILED


def command_regions(config, args):
    problem = config.build_problem()
    penalty = load_penalty(Path(config.out)/'penalty')
    policy = _policy_or_none(config)
    date = min(config.evaluation.region_date, problem.grid.dates - 1)
    export = export_regions(problem, penalty, policy, date, config.evaluation.region_states, config.seed,
                            workers=config.workers)
    write_csv(Path(config.out)/'regions.csv', export.frame(), config.as_dict())
    _report(config, 'regions', {'date': date, 'n_states': config.evaluation.region_states,
                                'agreement': export.agreement()})
    return EXIT_OK


def command_certify(config, args):
    if args.lattice:
        instances = [(Path(path).stem, LatticeModel.from_file(path)) for path in args.lattice]
    else:
        instances = bundled_instances()
    results = certify_many(instances, workers=config.workers, n_penalties=config.evaluation.certify_penalties,
                           seed=config.seed)
    rows = []
    for result in results:
        for prop, check in result.checks.items():
            rows.append({'instance': result.name, 'property': prop, 'passed': check.passed,
                         'max_violation': check.max_violation})
        if result.skipped:
            rows.append({'instance': result.name, 'property': 'precondition', 'passed': False,
                         'max_violation': result.precondition.max_violation})
    write_csv(Path(config.out)/'certify.csv', rows, config.as_dict())
    _report(config, 'certify', {'instances': [result.as_dict() for result in results]})
    failed = [result for result in results if not result.passed]
    for result in failed:
        try:
            result.raise_for_failures()
        except CertificationError as error:
            logger.error("%s: %s", result.name, error)
    logger.info("certified %d instances, %d skipped, %d failed", len(results),
                sum(result.skipped for result in results), len(failed))
    return EXIT_FAILED if failed else EXIT_OK


def command_table1(config, args):
    for step in (command_train_dual, command_train_primal):
        step(config, args)
    report = _bounds(config)
    hedge = _hedge(config, args, price=float(report.upper[config.evaluation.hedge_regime]))
    return _write_bounds(config, report, hedge=hedge)


HANDLERS = {
    'simulate': command_simulate,
    'train-dual': command_train_dual,
    'train-primal': command_train_primal,
    'evaluate': command_evaluate,
    'certify': command_certify,
    'hedge': command_hedge,
    'regions': command_regions,
    'table1': command_table1,
}


def parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help="JSON run configuration")
    common.add_argument('--seed', type=int, help="root seed of every random stream")
    common.add_argument('--out', help="output directory")
    common.add_argument('--workers', type=int, help="worker threads (default: available cores)")
    common.add_argument('--desk-scale', action='store_true', help="epochs and paths divided by ten")
    common.add_argument('--loss', choices=['d1', 'd2'], help="dual training loss")
    common.add_argument('--d', type=int, help="dimension of a built-in problem")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true')
    verbosity.add_argument('-q', '--quiet', action='store_true')

    main_parser = argparse.ArgumentParser(prog='deepswitch', description="Deep primal-dual bounds for optimal switching")
    commands = main_parser.add_subparsers(dest='command', required=True)
    for name in COMMANDS:
        sub = commands.add_parser(name, parents=[common])
        if name == 'simulate':
            sub.add_argument('--paths', type=int, help="number of paths (default: training batch size)")
        if name in ('hedge', 'table1'):
            sub.add_argument('--price', type=float,
                             help="price charged against the dual values (default: the evaluated upper bound)")
        if name == 'certify':
            sub.add_argument('--lattice', nargs='*', default=[], help="lattice instance JSON files")
    return main_parser


def overrides(args):
    """Configuration entries set on the command line."""
    values = {}
    for key in ('seed', 'out', 'workers'):
        if getattr(args, key) is not None:
            values[key] = getattr(args, key)
    if args.desk_scale:
        values['preset'] = 'desk'
    if args.loss:
        values['training'] = {'loss': args.loss}
    if args.d is not None:
        values['problem'] = {'d': args.d}
    return values


def run(command, config_path=None, args=None, flags=None):
    """
    Run one command and return its exit code.
    """
    if command not in HANDLERS:
        raise ValueError("Unknown command {}, expected one of {}".format(command, COMMANDS))
    if args is None:
        args = parser().parse_args([command])
    try:
        config = (RunConfig.from_file(config_path, flags) if config_path
                  else RunConfig.from_dict({}, flags))
        logger.info("%s: writing to %s", command, config.out)
        return HANDLERS[command](config, args)
    except ConfigurationError as error:
        logger.error("configuration error: %s", error)
        return EXIT_CONFIG
    except FileNotFoundError as error:
        logger.error("%s", error)
        return EXIT_MISSING
    except (NumericError, TrainingError) as error:
        logger.error("%s: %s", type(error).__name__, error)
        return EXIT_NUMERIC


def main(argv=None):
    args = parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(format='%(asctime)s %(name)s %(levelname)s %(message)s')
    with Verbosity(level):
        return run(args.command, args.config, args, overrides(args))


if __name__ == '__main__':
    sys.exit(main())
