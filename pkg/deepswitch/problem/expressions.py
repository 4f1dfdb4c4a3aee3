"""
Small expression language for payoffs, switching costs and baselines.

Expressions use Python syntax restricted to numeric constants, ``+``, ``-``,
``*``, the variables ``t`` and ``d`` (plus any extra scalar variables the
caller declares), coordinate access ``x[k]`` and slices ``x[a:b]``,
``mean(vector)``, ``max(vector)`` and the elementwise ``max(a, b, ...)``.

>>> Expression('2*mean(x) - 100').evaluate(0., np.array([[50., 52.]]))
array([2.])
"""

import ast

import numpy as np

from ..errors import ConfigurationError

_BINARY = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
}

class _Vector:
    """A group of state coordinates, shape (n_points, k)."""
    def __init__(self, values):
        self.values = values


class Expression:
    """
    A compiled expression of (t, x).
    """
    def __init__(self, source, variables=()):
        if isinstance(source, Expression):
            source = source.source
        if isinstance(source, (int, float)) and not isinstance(source, bool):
            source = repr(float(source))
        if not isinstance(source, str):
            raise ConfigurationError("Expression must be a string or a number, got {!r}".format(source))
        self.source = source
        self.variables = ('t', 'd') + tuple(variables)
        try:
            self.tree = ast.parse(source, mode='eval')
        except SyntaxError as error:
            raise ConfigurationError("Cannot parse expression {!r}: {}".format(source, error.msg))
        self._check(self.tree.body)

    def __repr__(self):
        return "Expression({!r})".format(self.source)

    @property
    def constant(self):
        """Value of a constant expression, None otherwise."""
        node = self.tree.body
        sign = 1.
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            node, sign = node.operand, -1.
        if isinstance(node, ast.Constant):
            return sign*float(node.value)
        return None

    def _check(self, node):
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ConfigurationError("Only numeric constants are allowed in {!r}".format(self.source))
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINARY:
                raise ConfigurationError("Operator {} not allowed in {!r}".format(type(node.op).__name__, self.source))
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.USub, ast.UAdd)):
                raise ConfigurationError("Operator {} not allowed in {!r}".format(type(node.op).__name__, self.source))
            self._check(node.operand)
        elif isinstance(node, ast.Name):
            if node.id not in self.variables + ('x',):
                raise ConfigurationError("Unknown name {} in {!r}".format(node.id, self.source))
        elif isinstance(node, ast.Subscript):
            if not (isinstance(node.value, ast.Name) and node.value.id == 'x'):
                raise ConfigurationError("Only x can be indexed in {!r}".format(self.source))
            index = node.slice
            parts = [index.lower, index.upper] if isinstance(index, ast.Slice) else [index]
            if isinstance(index, ast.Slice) and index.step is not None:
                raise ConfigurationError("Slice steps are not allowed in {!r}".format(self.source))
            for part in parts:
                if part is not None and not _is_integer(part):
                    raise ConfigurationError("Indices must be integer constants in {!r}".format(self.source))
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in ('mean', 'max'):
                raise ConfigurationError("Only mean and max may be called in {!r}".format(self.source))
            if node.keywords or not node.args:
                raise ConfigurationError("Bad call to {} in {!r}".format(node.func.id, self.source))
            if node.func.id == 'mean' and len(node.args) != 1:
                raise ConfigurationError("mean takes one vector in {!r}".format(self.source))
            for arg in node.args:
                self._check(arg)
        else:
            raise ConfigurationError("Construct {} not allowed in {!r}".format(type(node).__name__, self.source))

    def evaluate(self, t, x, **variables):
        """
        Evaluate at times `t` (scalar or (n_points,)) and states `x` (n_points, d).

        Returns an array of shape (n_points,).
        """
        x = np.asarray(x, dtype=float)
        if x.ndim != 2:
            raise ValueError("x must have shape (n_points, d), got {}".format(x.shape))
        env = {'t': np.asarray(t, dtype=float), 'd': float(x.shape[1])}
        for name, value in variables.items():
            env[name] = np.asarray(value, dtype=float)
        missing = set(self.variables) - set(env)
        if missing:
            raise ValueError("Missing variables {} for {!r}".format(sorted(missing), self.source))
        result = self._eval(self.tree.body, x, env)
        if isinstance(result, _Vector):
            raise ConfigurationError("Expression {!r} is a vector, reduce it with mean or max".format(self.source))
        return np.array(np.broadcast_to(result, (x.shape[0],)), dtype=float)

    def _eval(self, node, x, env):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id == 'x':
                return _Vector(x)
            return env[node.id]
        if isinstance(node, ast.UnaryOp):
            value = self._eval(node.operand, x, env)
            if isinstance(node.op, ast.USub):
                return _Vector(-value.values) if isinstance(value, _Vector) else -value
            return value
        if isinstance(node, ast.BinOp):
            left = self._eval(node.left, x, env)
            right = self._eval(node.right, x, env)
            vector = isinstance(left, _Vector) or isinstance(right, _Vector)
            left = left.values if isinstance(left, _Vector) else _column(left, vector)
            right = right.values if isinstance(right, _Vector) else _column(right, vector)
            value = _BINARY[type(node.op)](left, right)
            return _Vector(value) if vector else value
        if isinstance(node, ast.Subscript):
            index = node.slice
            if isinstance(index, ast.Slice):
                lower = _integer(index.lower) if index.lower is not None else None
                upper = _integer(index.upper) if index.upper is not None else None
                part = x[:, lower:upper]
                if part.shape[1] == 0:
                    raise ConfigurationError("Empty slice in {!r} for d = {}".format(self.source, x.shape[1]))
                return _Vector(part)
            k = _integer(index)
            if not -x.shape[1] <= k < x.shape[1]:
                raise ConfigurationError("Coordinate {} out of range for d = {} in {!r}".format(k, x.shape[1], self.source))
            return x[:, k]
        if isinstance(node, ast.Call):
            args = [self._eval(arg, x, env) for arg in node.args]
            if node.func.id == 'mean':
                (arg,) = args
                if not isinstance(arg, _Vector):
                    return arg
                return arg.values.mean(axis=1)
            if len(args) == 1:
                (arg,) = args
                return arg.values.max(axis=1) if isinstance(arg, _Vector) else arg
            if any(isinstance(arg, _Vector) for arg in args):
                raise ConfigurationError("Elementwise max of vectors in {!r}".format(self.source))
            result = args[0]
            for arg in args[1:]:
                result = np.maximum(result, arg)
            return result
        raise ConfigurationError("Cannot evaluate {!r}".format(self.source))


def _is_integer(node):
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        node = node.operand
    return isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool)

def _integer(node):
    if isinstance(node, ast.UnaryOp):
        return -node.operand.value
    return node.value

def _column(value, vector):
    value = np.asarray(value, dtype=float)
    if vector and value.ndim == 1:
        return value[:, None]
    return value
