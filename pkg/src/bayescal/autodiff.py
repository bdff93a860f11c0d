"""Forward-mode automatic differentiation with dual numbers.

A :class:`Dual` carries a value (scalar or ndarray) together with a tangent
array holding partial derivatives with respect to ``q`` seed directions; the
tangent's trailing axis indexes those directions.  Arithmetic propagates
exact per-operation chain rules, so compositions of the primitives below are
differentiated exactly (up to floating point), with no truncation parameter.

The value path performs the same floating-point operations whether or not
tangents are attached, so attaching seeds never perturbs the primal result.

Typical use::

    x = seed([2.0, 5.0])          # identity tangents
    y = log(x[0]) + x[1]
    y.val        # 5.693...
    y.tan        # array([0.5, 1.0])

or, for a scalar-valued function, :func:`gradient`.
"""
from __future__ import annotations

import numpy as np
from scipy import special as _sp

__all__ = [
    "Dual", "seed", "value", "partials", "gradient", "matvec", "stack",
    "exp", "log", "log1p", "expm1", "sqrt", "erf",
]

_TWO_OVER_SQRT_PI = 2.0 / np.sqrt(np.pi)


def _ex(v):
    """Append a unit axis to arrays so values broadcast against tangents."""
    return v[..., None] if isinstance(v, np.ndarray) else v


class Dual:
    """Value plus forward-mode partial derivatives.

    Parameters
    ----------
    val : float or ndarray
        Primal value, shape ``S``.
    tan : ndarray
        Tangents, shape ``S + (q,)`` for ``q`` seed directions.
    """

    __slots__ = ("val", "tan")

    # Let numpy defer binary ops to this class instead of broadcasting into it.
    __array_ufunc__ = None

    def __init__(self, val, tan):
        tan = np.asarray(tan, dtype=float)
        if tan.shape[:-1] != np.shape(val):
            raise ValueError(
                f"tangent shape {tan.shape} does not extend value shape {np.shape(val)}")
        self.val = val
        self.tan = tan

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.tan + other.tan)
        other = _plain(other)
        return Dual(self.val + other, self.tan + np.zeros(np.shape(other) + (1,)))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.tan - other.tan)
        other = _plain(other)
        return Dual(self.val - other, self.tan + np.zeros(np.shape(other) + (1,)))

    def __rsub__(self, other):
        other = _plain(other)
        return Dual(other - self.val, -self.tan + np.zeros(np.shape(other) + (1,)))

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val,
                        self.tan * _ex(other.val) + _ex(self.val) * other.tan)
        other = _plain(other)
        return Dual(self.val * other, self.tan * _ex(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            q = self.val / other.val
            return Dual(q, (self.tan - _ex(q) * other.tan) / _ex(other.val))
        other = _plain(other)
        return Dual(self.val / other, self.tan / _ex(other))

    def __rtruediv__(self, other):
        q = _plain(other) / self.val
        return Dual(q, -_ex(q / self.val) * self.tan)

    def __pow__(self, n):
        if isinstance(n, Dual):
            raise TypeError("dual exponents are not supported; use exp/log")
        if n == 0:
            return Dual(np.ones_like(np.asarray(self.val, dtype=float)) + 0.0
                        if np.ndim(self.val) else 1.0,
                        np.zeros_like(self.tan))
        return Dual(self.val ** n, _ex(n * self.val ** (n - 1)) * self.tan)

    def __neg__(self):
        return Dual(-self.val, -self.tan)

    def __pos__(self):
        return self

    # -- comparisons act on values ---------------------------------------
    def __lt__(self, other):
        return self.val < value(other)

    def __le__(self, other):
        return self.val <= value(other)

    def __gt__(self, other):
        return self.val > value(other)

    def __ge__(self, other):
        return self.val >= value(other)

    def __eq__(self, other):
        return self.val == value(other)

    def __ne__(self, other):
        return self.val != value(other)

    __hash__ = None

    # -- container behaviour ----------------------------------------------
    def __getitem__(self, idx):
        return Dual(self.val[idx], self.tan[idx])

    def __len__(self):
        return len(self.val)

    @property
    def shape(self):
        return np.shape(self.val)

    @property
    def ndim(self):
        return np.ndim(self.val)

    def sum(self):
        """Sum over all value axes, keeping the tangent axis."""
        if np.ndim(self.val) == 0:
            return self
        q = self.tan.shape[-1]
        return Dual(float(np.sum(self.val)), self.tan.reshape(-1, q).sum(axis=0))

    def ravel(self):
        """Flatten the value axes, keeping the tangent axis."""
        q = self.tan.shape[-1]
        return Dual(np.ravel(self.val), self.tan.reshape(-1, q))

    def __repr__(self):
        return f"Dual(val={self.val!r}, tan={self.tan!r})"


def _plain(x):
    if isinstance(x, (list, tuple)):
        return np.asarray(x, dtype=float)
    return x


def seed(x) -> Dual:
    """Wrap a 1-D vector with identity tangents (one seed per component)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("seed expects a 1-D vector")
    return Dual(x.copy(), np.eye(x.size))


def value(x):
    """Primal value of ``x`` (pass-through for plain numbers/arrays)."""
    return x.val if isinstance(x, Dual) else x


def partials(x) -> np.ndarray:
    """Tangent array of a Dual; raises for plain inputs."""
    if not isinstance(x, Dual):
        raise TypeError("partials() requires a Dual")
    return x.tan


def gradient(f, x) -> np.ndarray:
    """Gradient of scalar-valued ``f`` at 1-D point ``x`` via one dual sweep."""
    x = np.asarray(x, dtype=float)
    y = f(seed(x))
    if isinstance(y, Dual):
        return np.array(y.tan, dtype=float)
    return np.zeros(x.size)


def matvec(a, x):
    """Matrix-vector product with a plain matrix and a plain or Dual vector."""
    a = np.asarray(a, dtype=float)
    if isinstance(x, Dual):
        return Dual(a @ x.val, a @ x.tan)
    return a @ np.asarray(x, dtype=float)


def stack(items):
    """Stack scalar floats/Duals into a vector; plain if no Dual present."""
    duals = [it for it in items if isinstance(it, Dual)]
    if not duals:
        return np.asarray([float(it) for it in items])
    widths = {d.tan.shape[-1] for d in duals}
    if len(widths) != 1:
        raise ValueError(f"inconsistent tangent widths {sorted(widths)}")
    q = widths.pop()
    vals = np.empty(len(items))
    tans = np.zeros((len(items), q))
    for i, it in enumerate(items):
        if isinstance(it, Dual):
            if np.ndim(it.val) != 0:
                raise ValueError("stack expects scalar items")
            vals[i] = float(it.val)
            tans[i] = it.tan
        else:
            vals[i] = float(it)
    return Dual(vals, tans)


# -- elementwise primitives ------------------------------------------------

def exp(x):
    if isinstance(x, Dual):
        v = np.exp(x.val)
        return Dual(v, _ex(v) * x.tan)
    return np.exp(x)


def log(x):
    if isinstance(x, Dual):
        return Dual(np.log(x.val), x.tan / _ex(x.val))
    return np.log(x)


def log1p(x):
    if isinstance(x, Dual):
        return Dual(np.log1p(x.val), x.tan / _ex(1.0 + x.val))
    return np.log1p(x)


def expm1(x):
    if isinstance(x, Dual):
        return Dual(np.expm1(x.val), _ex(np.exp(x.val)) * x.tan)
    return np.expm1(x)


def sqrt(x):
    if isinstance(x, Dual):
        v = np.sqrt(x.val)
        return Dual(v, x.tan / _ex(2.0 * v))
    return np.sqrt(x)


def erf(x):
    if isinstance(x, Dual):
        d = _TWO_OVER_SQRT_PI * np.exp(-np.square(x.val))
        return Dual(_sp.erf(x.val), _ex(d) * x.tan)
    return _sp.erf(x)
