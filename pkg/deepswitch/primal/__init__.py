from .policy import Policy, LowerBoundReport, decision_table, rollout, evaluate_policy
from .training import PolicyTrainingConfig, fit_policy, train_policy
