from .penalty import DualPenalty, martingale_increments
from .recursion import DualValues, dual_backward, loss_upper, loss_l2, propagation_slack
from .baseline import Baseline, baseline_eval
from .training import DualTrainingConfig, train
