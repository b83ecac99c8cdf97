"""Truncated Taylor jets for forward-mode differentiation.

Two jet flavours are provided:

* :class:`Jet1` -- a scalar function of one variable ``t`` carried to order
  1..3.  Coefficients are ``(f, f', f'', f''')`` in *derivative* form.
* :class:`Jet2` -- a scalar function of ``(u, v)`` carried to order 1 or 2.
  Coefficients are ``(f, f_u, f_v)`` or ``(f, f_u, f_v, f_uu, f_uv, f_vv)``.

Arithmetic follows the Leibniz rule, elementary functions follow
Faa di Bruno's formula truncated at the jet order.  The module level
functions (:func:`sin`, :func:`exp`, ...) accept plain floats as well, so an
expression evaluator can run unchanged on floats or jets.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence, Union

__all__ = [
    "Jet",
    "Jet1",
    "Jet2",
    "JetDomainError",
    "seed",
    "sin",
    "cos",
    "tan",
    "sinh",
    "cosh",
    "tanh",
    "exp",
    "log",
    "sqrt",
    "atan",
    "atan2",
    "ELEMENTARY",
]

Number = Union[int, float]


class JetDomainError(ArithmeticError):
    """A function was evaluated outside its domain."""

    def __init__(self, message: str, value: float | None = None):
        super().__init__(message)
        self.value = value


class Jet:
    """Common arithmetic for :class:`Jet1` and :class:`Jet2`."""

    __slots__ = ("c",)

    def __init__(self, coeffs: Sequence[float]):
        self.c = tuple(float(x) for x in coeffs)
        self._check_shape()

    # subclasses fill these in
    def _check_shape(self) -> None:
        raise NotImplementedError

    def _mul(self, other: "Jet") -> tuple:
        raise NotImplementedError

    def _compose(self, f: Sequence[float]) -> tuple:
        raise NotImplementedError

    @property
    def value(self) -> float:
        return self.c[0]

    @property
    def order(self) -> int:
        raise NotImplementedError

    def constant(self, value: float) -> "Jet":
        """A jet of the same shape whose derivative slots are zero."""
        return type(self)((value,) + (0.0,) * (len(self.c) - 1))

    def is_constant(self) -> bool:
        return all(x == 0.0 for x in self.c[1:])

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if type(other) is not type(self) or len(other.c) != len(self.c):
                raise ValueError(
                    f"cannot combine {self!r} with {other!r}: different jet contexts"
                )
            return other
        if isinstance(other, (int, float)):
            return self.constant(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return type(self)(a + b for a, b in zip(self.c, o.c))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return type(self)(a - b for a, b in zip(self.c, o.c))

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o - self

    def __neg__(self):
        return type(self)(-a for a in self.c)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return type(self)(a * other for a in self.c)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return type(self)(self._mul(o))

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        x = self.value
        if x == 0.0:
            raise JetDomainError("division by a jet with zero value", x)
        r = 1.0 / x
        return type(self)(self._compose((r, -r * r, 2 * r**3, -6 * r**4)))

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            if other == 0:
                raise JetDomainError("division by zero", 0.0)
            return type(self)(a / other for a in self.c)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o * self.reciprocal()

    def __pow__(self, p):
        if isinstance(p, Jet):
            p = self._coerce(p)
            if not p.is_constant():
                if self.value <= 0.0:
                    raise JetDomainError(
                        "variable exponent needs a positive base", self.value
                    )
                return exp(p * log(self))
            p = p.value
        p = float(p)
        if p.is_integer():
            n = int(p)
            if n == 0:
                return self.constant(1.0)
            base = self if n > 0 else self.reciprocal()
            return _ipow(base, abs(n))
        x = self.value
        if x <= 0.0:
            raise JetDomainError(f"fractional power {p} of non-positive base", x)
        f = (
            x**p,
            p * x ** (p - 1),
            p * (p - 1) * x ** (p - 2),
            p * (p - 1) * (p - 2) * x ** (p - 3),
        )
        return type(self)(self._compose(f))

    def __rpow__(self, base):
        if not isinstance(base, (int, float)):
            return NotImplemented
        if base <= 0:
            raise JetDomainError("variable exponent needs a positive base", base)
        return exp(self * math.log(base))

    def __eq__(self, other):
        if isinstance(other, Jet):
            return type(self) is type(other) and self.c == other.c
        return NotImplemented

    def __hash__(self):
        return hash((type(self).__name__, self.c))

    def __repr__(self) -> str:
        body = ", ".join(f"{x:.17g}" for x in self.c)
        return f"{type(self).__name__}({body})"


def _ipow(base: Jet, n: int) -> Jet:
    result = None
    while n:
        if n & 1:
            result = base if result is None else result * base
        n >>= 1
        if n:
            base = base * base
    return result


class Jet1(Jet):
    """Univariate jet ``(f, f', f'', f''')`` truncated at ``order``."""

    __slots__ = ()

    def _check_shape(self) -> None:
        if not 2 <= len(self.c) <= 4:
            raise ValueError("Jet1 carries 2..4 coefficients (order 1..3)")

    @property
    def order(self) -> int:
        return len(self.c) - 1

    def deriv(self, k: int) -> float:
        if k > self.order:
            raise IndexError(f"derivative {k} is beyond jet order {self.order}")
        return self.c[k]

    def _mul(self, o: "Jet1") -> tuple:
        a, b = self.c, o.c
        out = [a[0] * b[0], a[0] * b[1] + a[1] * b[0]]
        if len(a) > 2:
            out.append(a[0] * b[2] + 2 * a[1] * b[1] + a[2] * b[0])
        if len(a) > 3:
            out.append(a[0] * b[3] + 3 * (a[1] * b[2] + a[2] * b[1]) + a[3] * b[0])
        return tuple(out)

    def _compose(self, f: Sequence[float]) -> tuple:
        a = self.c
        out = [f[0], f[1] * a[1]]
        if len(a) > 2:
            out.append(f[2] * a[1] ** 2 + f[1] * a[2])
        if len(a) > 3:
            out.append(f[3] * a[1] ** 3 + 3 * f[2] * a[1] * a[2] + f[1] * a[3])
        return tuple(out)


class Jet2(Jet):
    """Bivariate jet in ``(u, v)`` of order 1 or 2 (mixed partial stored once)."""

    __slots__ = ()

    def _check_shape(self) -> None:
        if len(self.c) not in (3, 6):
            raise ValueError("Jet2 carries 3 (order 1) or 6 (order 2) coefficients")

    @property
    def order(self) -> int:
        return 1 if len(self.c) == 3 else 2

    @property
    def d_u(self) -> float:
        return self.c[1]

    @property
    def d_v(self) -> float:
        return self.c[2]

    def _second(self, i: int) -> float:
        if len(self.c) == 3:
            raise IndexError("second partials are beyond an order-1 jet")
        return self.c[i]

    @property
    def d_uu(self) -> float:
        return self._second(3)

    @property
    def d_uv(self) -> float:
        return self._second(4)

    @property
    def d_vv(self) -> float:
        return self._second(5)

    def _mul(self, o: "Jet2") -> tuple:
        a, b = self.c, o.c
        out = [
            a[0] * b[0],
            a[1] * b[0] + a[0] * b[1],
            a[2] * b[0] + a[0] * b[2],
        ]
        if len(a) == 6:
            out += [
                a[3] * b[0] + 2 * a[1] * b[1] + a[0] * b[3],
                a[4] * b[0] + a[1] * b[2] + a[2] * b[1] + a[0] * b[4],
                a[5] * b[0] + 2 * a[2] * b[2] + a[0] * b[5],
            ]
        return tuple(out)

    def _compose(self, f: Sequence[float]) -> tuple:
        a = self.c
        out = [f[0], f[1] * a[1], f[1] * a[2]]
        if len(a) == 6:
            out += [
                f[2] * a[1] * a[1] + f[1] * a[3],
                f[2] * a[1] * a[2] + f[1] * a[4],
                f[2] * a[2] * a[2] + f[1] * a[5],
            ]
        return tuple(out)


def seed(variable: str, value: float, order: int | None = None) -> Jet:
    """Independent-variable jet: value slot set, own first derivative 1."""
    if variable == "t":
        order = 3 if order is None else order
        return Jet1((value, 1.0) + (0.0,) * (order - 1))
    if variable in ("u", "v"):
        order = 2 if order is None else order
        n = 3 if order == 1 else 6
        c = [0.0] * n
        c[0] = value
        c[1 if variable == "u" else 2] = 1.0
        return Jet2(c)
    raise ValueError(f"unknown seed variable {variable!r}")


# -- elementary functions ---------------------------------------------------
# Each entry maps x0 to (f, f', f'', f''') at x0.


def _sin_d(x):
    s, c = math.sin(x), math.cos(x)
    return s, c, -s, -c


def _cos_d(x):
    s, c = math.sin(x), math.cos(x)
    return c, -s, -c, s


def _tan_d(x):
    if math.cos(x) == 0.0:
        raise JetDomainError("tan evaluated at a pole", x)
    t = math.tan(x)
    q = 1 + t * t
    return t, q, 2 * t * q, q * (2 + 6 * t * t)


def _sinh_d(x):
    s, c = math.sinh(x), math.cosh(x)
    return s, c, s, c


def _cosh_d(x):
    s, c = math.sinh(x), math.cosh(x)
    return c, s, c, s


def _tanh_d(x):
    t = math.tanh(x)
    q = 1 - t * t
    return t, q, -2 * t * q, q * (6 * t * t - 2)


def _exp_d(x):
    e = math.exp(x)
    return e, e, e, e


def _log_d(x):
    if not x > 0.0:
        raise JetDomainError(f"log of non-positive value {x!r}", x)
    r = 1.0 / x
    return math.log(x), r, -r * r, 2 * r**3


def _sqrt_d(x):
    if not x > 0.0:
        raise JetDomainError(f"sqrt of non-positive value {x!r}", x)
    r = math.sqrt(x)
    return r, 0.5 / r, -0.25 / (r * x), 0.375 / (r * x * x)


def _atan_d(x):
    q = 1.0 / (1 + x * x)
    return math.atan(x), q, -2 * x * q * q, (6 * x * x - 2) * q**3


_DERIVS: dict[str, Callable[[float], tuple]] = {
    "sin": _sin_d,
    "cos": _cos_d,
    "tan": _tan_d,
    "sinh": _sinh_d,
    "cosh": _cosh_d,
    "tanh": _tanh_d,
    "exp": _exp_d,
    "log": _log_d,
    "sqrt": _sqrt_d,
    "atan": _atan_d,
}


def _lift(name: str):
    derivs = _DERIVS[name]

    def fn(x):
        if isinstance(x, Jet):
            return type(x)(x._compose(derivs(x.value)))
        x = float(x)
        if name in ("log", "sqrt") and not x > 0.0:
            # math.sqrt(0) is fine for floats, but keep one domain rule
            if not (name == "sqrt" and x == 0.0):
                raise JetDomainError(f"{name} of non-positive value {x!r}", x)
        if name == "tan" and math.cos(x) == 0.0:
            raise JetDomainError("tan evaluated at a pole", x)
        try:
            return getattr(math, name)(x)
        except OverflowError as exc:
            raise JetDomainError(f"{name} overflowed at {x!r}", x) from exc

    fn.__name__ = name
    fn.__doc__ = f"{name} for floats and jets."
    return fn


sin = _lift("sin")
cos = _lift("cos")
tan = _lift("tan")
sinh = _lift("sinh")
cosh = _lift("cosh")
tanh = _lift("tanh")
exp = _lift("exp")
log = _lift("log")
sqrt = _lift("sqrt")
atan = _lift("atan")


def atan2(y, x):
    """Two-argument arctangent for floats and jets.

    For jets the pair is rotated by the base angle so the remaining
    correction is an ``atan`` of a ratio whose value is zero.
    """
    if not isinstance(y, Jet) and not isinstance(x, Jet):
        if x == 0 and y == 0:
            raise JetDomainError("atan2(0, 0) is undefined", 0.0)
        return math.atan2(y, x)
    proto = y if isinstance(y, Jet) else x
    y = proto._coerce(y)
    x = proto._coerce(x)
    if x.value == 0.0 and y.value == 0.0:
        raise JetDomainError("atan2(0, 0) is undefined", 0.0)
    theta = math.atan2(y.value, x.value)
    c, s = math.cos(theta), math.sin(theta)
    xr = x * c + y * s
    yr = y * c - x * s
    corr = atan(yr / xr)
    return corr + (theta - corr.value)


ELEMENTARY: dict[str, Callable] = {
    "sin": sin,
    "cos": cos,
    "tan": tan,
    "sinh": sinh,
    "cosh": cosh,
    "tanh": tanh,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "atan": atan,
}
