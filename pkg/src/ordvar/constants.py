"""Equivariant (BAEE) and Stein truncation constants.

Every constant here is the unique ``alpha > 0`` with ``E[L'(alpha Z^{k/2})] = 0``
for ``Z ~ chi^2_df``, for some ``df``. The weighted BAEE equation
``E[L'(c V^{k/2}) V^{k/2}] = 0`` with ``V ~ chi^2_{p-1}`` is the same equation
after tilting ``chi^2_{p-1}`` by ``V^{k/2}``, which gives ``chi^2_{p-1+k}``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special

from .errors import DomainError
from .losses import LossSpec
from .numerics import gamma_ratio, integrate, solve_root

BRACKET = (1e-6, 1.0)


@dataclass(frozen=True)
class ConstantsBundle:
    c01: float
    c02: float
    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float
    df1: float
    df2: float
    df3: float
    df4: float

    def to_dict(self) -> dict:
        return asdict(self)


def check_finite(loss, df: float, k: float) -> None:
    """Raise if ``E[L'(alpha Z^{k/2})]`` diverges for ``Z ~ chi^2_df``."""
    if not df > 0:
        raise DomainError(f"degrees of freedom must be positive, got {df!r}")
    if not k > 0:
        raise DomainError(f"power k must be positive, got {k!r}")
    kind = loss.kind
    if kind == "entropy" and not df > k:
        raise DomainError(f"entropy loss needs df > k (df={df}, k={k})")
    if kind == "symmetric" and not df > 2 * k:
        raise DomainError(f"symmetric loss needs df > 2k (df={df}, k={k})")
    if kind == "linex" and loss.a > 0 and k > 2:
        raise DomainError("linex loss with a > 0 diverges for k > 2")


def closed_form(loss, df: float, k: float) -> float | None:
    """Closed-form constant, or ``None`` when only the numeric route applies."""
    h = df / 2.0
    if loss.kind == "quadratic":
        return gamma_ratio(h, k / 2.0) / 2.0 ** (k / 2.0)
    if loss.kind == "entropy":
        return gamma_ratio(h - k / 2.0, k / 2.0) / 2.0 ** (k / 2.0)
    if loss.kind == "symmetric":
        return math.sqrt(gamma_ratio(h - k, k) / 2.0 ** k)
    if loss.kind == "linex" and k == 2:
        return -math.expm1(-2.0 * loss.a / df) / (2.0 * loss.a)
    return None


def chi2_expectation(h, df: float, rel_tol: float = 1e-12, abs_tol: float = 1e-14) -> float:
    """``E[h(Z)]`` for ``Z ~ chi^2_df`` by adaptive quadrature in ``log Z``.

    The range is cut where the integrand drops 45 nats below its peak.
    """
    def logw(y):
        z = np.exp(y)
        return (df / 2.0) * (y - math.log(2.0)) - z / 2.0 - special.gammaln(df / 2.0)

    def integrand(y):
        return h(np.exp(y)) * np.exp(logw(y))

    y0 = math.log(df)
    ys = np.linspace(y0 - 400.0 / df - 12.0, math.log(4.0 * df + 600.0), 4001)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        mag = np.log(np.abs(h(np.exp(ys)))) + logw(ys)
    mag = np.where(np.isfinite(mag) | (mag == -np.inf), mag, np.inf)
    if np.any(mag == np.inf):
        raise DomainError("expectation integrand is not finite on its support")
    keep = np.nonzero(mag > mag.max() - 45.0)[0]
    step = ys[1] - ys[0]
    lo, hi = ys[keep[0]] - step, ys[keep[-1]] + step
    return integrate(integrand, lo, hi, abs_tol=abs_tol, rel_tol=rel_tol)


def numeric_constant(loss, df: float, k: float, rel_tol: float = 1e-12) -> float:
    """Solve ``E[L'(alpha Z^{k/2})] = 0`` by quadrature and root finding."""
    check_finite(loss, df, k)

    def residual(alpha):
        try:
            with np.errstate(over="ignore"):
                return chi2_expectation(lambda z: loss.deriv(alpha * z ** (k / 2.0)), df)
        except DomainError:
            # only reachable through overflow at large arguments, where L' > 0
            return 1e300

    return solve_root(residual, *BRACKET, rel_tol=rel_tol, domain=(0.0, math.inf))


@functools.lru_cache(maxsize=4096)
def _cached(loss, df, k, method):
    check_finite(loss, df, k)
    if method in ("auto", "closed"):
        value = closed_form(loss, df, k) if isinstance(loss, LossSpec) else None
        if value is not None:
            return value
        if method == "closed":
            raise DomainError(f"no closed form for {loss.name} with k={k}")
    return numeric_constant(loss, df, k)


def equivariant_constant(loss, df: float, k: float, method: str = "auto") -> float:
    """The ``alpha > 0`` solving ``E[L'(alpha Z^{k/2})] = 0``, ``Z ~ chi^2_df``.

    ``method`` is ``"auto"`` (closed form when known, else numeric),
    ``"closed"`` or ``"numeric"``.
    """
    if method not in ("auto", "closed", "numeric"):
        raise ValueError(f"unknown method {method!r}")
    return _cached(loss, float(df), float(k), method)


def baee_constant(loss, p: int, k: float, method: str = "auto") -> float:
    """Constant ``c0`` of the best affine equivariant estimator ``c0 S^{k/2}``."""
    if int(p) != p or p < 2:
        raise DomainError(f"sample size must be an integer >= 2, got {p!r}")
    return equivariant_constant(loss, p - 1 + k, k, method)


def stein_constants(loss, p1: int, p2: int, k: float, method: str = "auto") -> ConstantsBundle:
    df1, df2, df3 = p1 + p2 + k - 2, p1 + p2 + k - 1, p1 + p2 + k
    alpha2 = equivariant_constant(loss, df2, k, method)
    return ConstantsBundle(
        c01=baee_constant(loss, p1, k, method),
        c02=baee_constant(loss, p2, k, method),
        alpha1=equivariant_constant(loss, df1, k, method),
        alpha2=alpha2,
        alpha3=equivariant_constant(loss, df3, k, method),
        alpha4=alpha2,
        df1=float(df1), df2=float(df2), df3=float(df3), df4=float(df2),
    )
