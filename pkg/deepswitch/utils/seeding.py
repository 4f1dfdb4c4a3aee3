"""
Seed derivation.

Every random stream of a run is derived from one root seed and a tuple of
labels, so that stages (training epochs, evaluation, region export) never
share draws and never depend on the order in which they run.
"""

import hashlib

import numpy as np

# paths simulated per random stream
PATH_BLOCK = 1024

def derive_seed(root, *labels):
    """
    Return a 63-bit seed from a root seed and a sequence of labels.
    """
    if int(root) < 0:
        raise ValueError("Seed must be non-negative, got {}".format(root))
    digest = hashlib.sha256()
    digest.update(str(int(root)).encode())
    for label in labels:
        digest.update(b'/')
        digest.update(str(label).encode())
    return int.from_bytes(digest.digest()[:8], 'little') >> 1

def block_generator(seed, block):
    """
    Counter-based generator for one block of paths.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(block)])))

def generator(seed, *labels):
    """
    Generator for a labelled stage of a run.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(derive_seed(seed, *labels))))
