"""
Central finite differences for checking backpropagated gradients.
"""

import numpy as np

# largest second difference, relative to 1 + |objective|, of an entry taken as smooth
KINK_TOLERANCE = 1e-12


def central_differences(objective, params, h=1e-7):
    """
    Central differences of the scalar `objective()` in every entry of the
    live arrays `params` (a name -> array mapping, perturbed in place and
    restored).

    Returns the estimates and, per array, a mask of the entries whose
    difference quotient does not straddle a kink of a ReLU or a maximum.
    """
    base = objective()
    tolerance = KINK_TOLERANCE*(1 + abs(base))
    numeric, smooth = {}, {}
    for name, value in params.items():
        estimate = np.zeros(value.shape)
        flat = np.ones(value.shape, dtype=bool)
        for k in range(value.size):
            saved = value.flat[k]
            value.flat[k] = saved + h
            up = objective()
            value.flat[k] = saved - h
            down = objective()
            value.flat[k] = saved
            estimate.flat[k] = (up - down)/(2*h)
            flat.flat[k] = abs(up + down - 2*base) <= tolerance
        numeric[name] = estimate
        smooth[name] = flat
    return numeric, smooth


def relative_error(numeric, analytic, smooth=None):
    """
    |numeric - analytic| / |numeric + analytic| over the entries kept by
    `smooth`, and the fraction of entries kept.
    """
    names = sorted(numeric)
    keep = np.concatenate([(smooth[name] if smooth else np.ones(numeric[name].shape, dtype=bool)).ravel()
                           for name in names])
    a = np.concatenate([numeric[name].ravel() for name in names])[keep]
    b = np.concatenate([np.asarray(analytic[name], dtype=float).ravel() for name in names])[keep]
    return float(np.linalg.norm(a - b)/np.linalg.norm(a + b)), float(keep.mean())
