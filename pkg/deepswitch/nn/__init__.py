from .layers import Affine, BatchNorm, Activation
from .network import Network, gradients, mlp, xavier_init
from .adam import AdamState, adam_step
from .maxnet import max_network
from .gradcheck import central_differences, relative_error
