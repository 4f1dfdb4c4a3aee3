from .grid import TimeGrid
from .dynamics import Dynamics, GBM, AffineIto, ExpOUJump
from .simulation import PathBatch, simulate, simulate_conditional
