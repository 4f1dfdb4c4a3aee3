from .lattice import (LatticeModel, exact_value, greedy, brute_force_value, doob_martingale, path_increments,
                      policy_value)
from .certify import OracleResult, certify, certify_many
from .instances import random_lattice, bundled_instances
