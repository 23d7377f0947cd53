"""Scale-invariant bowl-shaped losses ``L(delta / theta)``."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError

KINDS = ("quadratic", "entropy", "symmetric", "linex")


def _positive(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("loss argument must be positive")
    return t


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class LossSpec:
    """One of the four built-in losses; ``a`` is the Linex shape (nonzero)."""

    kind: str
    a: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown loss kind {self.kind!r}")
        if self.kind == "linex":
            if self.a is None or self.a == 0 or not np.isfinite(self.a):
                raise DomainError("linex loss needs a finite nonzero 'a'")
            object.__setattr__(self, "a", float(self.a))
        elif self.a is not None:
            raise DomainError(f"{self.kind} loss takes no 'a' parameter")

    @property
    def name(self) -> str:
        if self.kind == "linex":
            return f"linex:a={self.a:g}"
        return self.kind

    def value(self, t):
        t = _positive(t)
        if self.kind == "quadratic":
            v = (t - 1.0) ** 2
        elif self.kind == "entropy":
            v = t - np.log(t) - 1.0
        elif self.kind == "symmetric":
            v = t + 1.0 / t - 2.0
        else:
            d = self.a * (t - 1.0)
            v = np.expm1(d) - d
        return _out(v)

    def deriv(self, t):
        t = _positive(t)
        if self.kind == "quadratic":
            v = 2.0 * (t - 1.0)
        elif self.kind == "entropy":
            v = 1.0 - 1.0 / t
        elif self.kind == "symmetric":
            v = 1.0 - 1.0 / (t * t)
        else:
            v = self.a * np.expm1(self.a * (t - 1.0))
        return _out(v)


QUADRATIC = LossSpec("quadratic")
ENTROPY = LossSpec("entropy")
SYMMETRIC = LossSpec("symmetric")


def linex(a: float) -> LossSpec:
    return LossSpec("linex", a)


@dataclass(frozen=True, eq=False)
class CustomLoss:
    """User-supplied loss ``(L, L')``; both callables must accept arrays.

    Construct through :func:`custom_loss` so the bowl-shape conditions are
    checked.
    """

    label: str
    value_fn: Callable = field(repr=False)
    deriv_fn: Callable = field(repr=False)
    kind: str = "custom"
    a: None = None

    @property
    def name(self) -> str:
        return self.label

    def value(self, t):
        return _out(np.asarray(self.value_fn(_positive(t)), dtype=float))

    def deriv(self, t):
        return _out(np.asarray(self.deriv_fn(_positive(t)), dtype=float))


def validate_loss(loss, grid=None, tol: float = 1e-10) -> None:
    """Check a loss on a log grid: zero minimum at 1, bowl shape, increasing L'.

    Raises :class:`DomainError` naming the first violated condition.
    """
    if grid is None:
        grid = np.geomspace(1e-2, 1e2, 801)
    grid = np.asarray(grid, dtype=float)
    v = np.asarray(loss.value(grid))
    d = np.asarray(loss.deriv(grid))
    if abs(loss.value(1.0)) > tol:
        raise DomainError(f"{loss.name}: L(1) must be 0")
    left, right = grid < 1.0, grid > 1.0
    if np.any(np.diff(v[left]) > tol) or np.any(np.diff(v[right]) < -tol):
        raise DomainError(f"{loss.name}: L must decrease on (0,1] and increase on [1,inf)")
    if np.any(v < -tol):
        raise DomainError(f"{loss.name}: L must be nonnegative")
    if np.any(np.diff(d) < -tol * np.maximum(1.0, np.abs(d[1:]))):
        raise DomainError(f"{loss.name}: L' must be increasing")


def custom_loss(label: str, value_fn: Callable, deriv_fn: Callable) -> CustomLoss:
    loss = CustomLoss(label, value_fn, deriv_fn)
    validate_loss(loss)
    return loss


_LINEX_RE = re.compile(r"^linex:a=(?P<a>[-+0-9.eE]+)$")


def parse_loss(text: str) -> LossSpec:
    """Parse ``quadratic``, ``entropy``, ``symmetric`` or ``linex:a=<real>``."""
    s = text.strip().lower()
    if s in ("quadratic", "entropy", "symmetric"):
        return LossSpec(s)
    m = _LINEX_RE.match(s)
    if m:
        try:
            a = float(m.group("a"))
        except ValueError:
            raise DomainError(f"bad linex parameter in {text!r}") from None
        return LossSpec("linex", a)
    raise DomainError(f"unknown loss {text!r}; expected quadratic, entropy, symmetric or linex:a=<real>")


def loss_value(loss, t):
    return loss.value(t)


def loss_deriv(loss, t):
    return loss.deriv(t)
