"""
Exceptions raised by deepswitch.
"""


class ConfigurationError(ValueError):
    """
    Invalid problem, grid or run configuration.

    `pointer` is the JSON pointer of the offending entry when the error
    comes from a configuration file.
    """
    def __init__(self, message, pointer=None):
        if pointer is not None:
            message = "{}: {}".format(pointer, message)
        super().__init__(message)
        self.pointer = pointer


class NumericError(ArithmeticError):
    """
    A non-finite value appeared while evaluating payoffs or values.
    """
    def __init__(self, message, path=None, step=None):
        super().__init__("{} (path {}, step {})".format(message, path, step))
        self.path = path
        self.step = step


class TrainingError(RuntimeError):
    """
    Training cannot proceed: non-finite loss or gradient, or a gradient
    requested without a recorded forward pass.
    """
    def __init__(self, message, trace=None, diagnostics=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []
        self.diagnostics = dict(diagnostics) if diagnostics is not None else {}


class InstanceTooLargeError(ValueError):
    """
    A lattice instance has too many adapted decision rules to enumerate.
    """
    def __init__(self, count, cap):
        super().__init__("{} decision rules exceed the enumeration cap {}".format(count, cap))
        self.count = count
        self.cap = cap


class CertificationError(AssertionError):
    """
    A duality property failed on a lattice instance.
    """
    def __init__(self, prop, node, violation):
        super().__init__("property {} violated at node {} by {:.3e}".format(prop, node, violation))
        self.prop = prop
        self.node = node
        self.violation = violation
