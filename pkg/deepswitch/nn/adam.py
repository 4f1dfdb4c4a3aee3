"""
Adam optimizer over dictionaries of parameter arrays.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingError


@dataclass
class AdamState:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)


def adam_step(state, params, grads):
    """
    One Adam update with bias correction, applied in place to `params`.
    """
    for name, grad in grads.items():
        if name not in params:
            raise ValueError("Gradient for unknown parameter {}".format(name))
        if grad.shape != params[name].shape:
            raise ValueError('gradient shape {} does not equal parameter shape {} for {}'
                             ''.format(grad.shape, params[name].shape, name))
        if not np.all(np.isfinite(grad)):
            raise TrainingError("Non-finite gradient for {}".format(name),
                                diagnostics={'parameter': name, 'step': state.step,
                                             'non_finite': int(np.count_nonzero(~np.isfinite(grad)))})

    state.step += 1
    correction1 = 1 - state.beta1**state.step
    correction2 = 1 - state.beta2**state.step
    for name, grad in grads.items():
        if name not in state.first_moment:
            state.first_moment[name] = np.zeros_like(grad)
            state.second_moment[name] = np.zeros_like(grad)
        m = state.first_moment[name]
        v = state.second_moment[name]
        m *= state.beta1
        m += (1 - state.beta1)*grad
        v *= state.beta2
        v += (1 - state.beta2)*grad**2
        params[name] -= state.learning_rate*(m/correction1)/(np.sqrt(v/correction2) + state.eps)
    return params
