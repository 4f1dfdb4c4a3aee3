import logging

from .errors import ConfigurationError, NumericError, TrainingError, InstanceTooLargeError, CertificationError
from .market import TimeGrid, GBM, AffineIto, ExpOUJump, PathBatch, simulate, simulate_conditional
from .problem import SwitchingProblem, PayoffTables, evaluate_payoffs, validate_triangular
from .dual import DualPenalty, DualTrainingConfig, dual_backward, train
from .primal import Policy, PolicyTrainingConfig, evaluate_policy, train_policy
from .oracle import LatticeModel, certify, exact_value, brute_force_value, doob_martingale
from .evaluation import BoundReport, estimate_bounds, hedging_errors, delta_ratio, export_regions

logging.getLogger(__name__).addHandler(logging.NullHandler())
