"""Boundary functions of the smooth (Brewster-Zidek type) improvements.

For the first component the improved estimator is ``phi*(U) S1^{k/2}`` with
``U = S2/S1``; for the second it is ``psi*(W) S2^{k/2}`` with ``W = S1/S2``.
Both boundaries solve

    int x^{a-1} (1-x)^{m0-a-1} E[L'(phi V^{k/2}) V^{k/2}] dx = 0,
    V = 2 (1-x) G,  G ~ Gamma(m0, 1),  m0 = (p1+p2-2)/2,

over ``x in (0, u/(1+u))`` (component 1, ``a = (p2-1)/2``) or
``x in (w/(1+w), 1)`` (component 2, ``a = (p1-1)/2``). For the quadratic,
entropy and symmetric losses the inner expectation is a gamma moment and the
equation reduces to a ratio of incomplete beta functions; other losses use
nested quadrature.

The generalized Bayes estimators are computed separately by two-dimensional
quadrature of the posterior integrals, so agreement between the two routes is
a genuine check.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.interpolate import PchipInterpolator

from .constants import baee_constant, stein_constants
from .errors import DomainError, OrdvarError
from .estimators import Target, TwoSampleSummary
from .losses import LossSpec
from .numerics import fixed_gk_rule, gamma_log_rule, integrate, integrate_2d, reg_inc_beta, solve_root

CLOSED_KINDS = ("quadratic", "entropy", "symmetric")
BOUNDARY_REL_TOL = 1e-10
GB_REL_TOL = 1e-8
LINEX_Q_NOTE = ("linex boundary: the q-weight uses the joint-density exponent "
                "(p-3)/2 of the other sample, as for the other losses")


@dataclass(frozen=True)
class BoundaryFunctionSpec:
    component: int
    loss: object
    p1: int
    p2: int
    k: float

    def __post_init__(self):
        if self.component not in (1, 2):
            raise DomainError(f"component must be 1 or 2, got {self.component!r}")
        for name in ("p1", "p2"):
            p = getattr(self, name)
            if int(p) != p or p < 2:
                raise DomainError(f"{name} must be an integer >= 2, got {p!r}")
            object.__setattr__(self, name, int(p))
        if not self.k > 0:
            raise DomainError(f"power k must be positive, got {self.k!r}")
        object.__setattr__(self, "k", float(self.k))
        if self.loss.kind == "symmetric" and not self.p1 + self.p2 > self.k + 2:
            raise DomainError("symmetric loss needs p1 + p2 > k + 2")
        # both limiting constants must exist
        stein_constants(self.loss, self.p1, self.p2, self.k)

    @property
    def a(self) -> float:
        """Half the degrees of freedom of the other sample's sum of squares."""
        return (self.p2 - 1) / 2.0 if self.component == 1 else (self.p1 - 1) / 2.0

    @property
    def m0(self) -> float:
        return (self.p1 + self.p2 - 2) / 2.0

    @property
    def c0(self) -> float:
        p = self.p1 if self.component == 1 else self.p2
        return baee_constant(self.loss, p, self.k)

    @property
    def alpha1(self) -> float:
        return stein_constants(self.loss, self.p1, self.p2, self.k).alpha1


def _exponents(spec):
    """``(A, B, root)`` of the gamma-moment ratio for the closed-form losses."""
    n, k = spec.p1 + spec.p2, spec.k
    kind = spec.loss.kind
    if kind == "quadratic":
        return (n + k - 2) / 2.0, (n + 2 * k - 2) / 2.0, False
    if kind == "entropy":
        return (n - 2) / 2.0, (n + k - 2) / 2.0, False
    if kind == "symmetric":
        return (n - k - 2) / 2.0, (n + k - 2) / 2.0, True
    raise DomainError(f"no closed-form boundary for {spec.loss.name}")


def _log_lower(M, a, u):
    """``log int_0^u q^{a-1} (1+q)^{-M} dq`` for an array ``u``."""
    u = np.asarray(u, float)
    b = M - a
    out = np.full(u.shape, np.nan)
    if b > 0:
        with np.errstate(divide="ignore"):
            out = special.betaln(a, b) + np.log(reg_inc_beta(u / (1.0 + u), a, b) * np.ones(u.shape))
    bad = ~np.isfinite(out) | (out < -650.0)
    for i in np.flatnonzero(bad):
        ui = float(u.flat[i])
        # q = u r^{1/a} removes the endpoint singularity
        j = integrate(lambda r: (1.0 + ui * r ** (1.0 / a)) ** (-M), 0.0, 1.0,
                      abs_tol=0.0, rel_tol=1e-13)
        out.flat[i] = a * math.log(ui) - math.log(a) + math.log(j)
    return out


def _log_upper(M, a, w):
    """``log int_w^inf q^{a-1} (1+q)^{-M} dq`` for an array ``w``."""
    w = np.asarray(w, float)
    b = M - a
    if not b > 0:
        raise DomainError("tail integral diverges; sample sizes too small for this loss and k")
    with np.errstate(divide="ignore"):
        out = special.betaln(a, b) + np.log(reg_inc_beta(1.0 / (1.0 + w), b, a) * np.ones(w.shape))
    bad = ~np.isfinite(out) | (out < -650.0)
    for i in np.flatnonzero(bad):
        y = 1.0 / (1.0 + float(w.flat[i]))
        j = integrate(lambda r: (1.0 - y * r ** (1.0 / b)) ** (a - 1.0), 0.0, 1.0,
                      abs_tol=0.0, rel_tol=1e-13)
        out.flat[i] = b * math.log(y) - math.log(b) + math.log(j)
    return out


def _closed_values(spec, z):
    A, B, root = _exponents(spec)
    part = _log_lower if spec.component == 1 else _log_upper
    log_ratio = (special.gammaln(A) + part(A, spec.a, z)
                 - special.gammaln(B) - part(B, spec.a, z))
    if root:
        return np.exp(0.5 * (log_ratio - spec.k * math.log(2.0)))
    return np.exp(log_ratio - 0.5 * spec.k * math.log(2.0))


@functools.lru_cache(maxsize=64)
def _rule(m0, panels):
    return gamma_log_rule(m0, panels=panels)


def _nested_residual(spec, z, panels=16, outer_panels=12):
    """``phi -> int ... E[L'(phi V^{k/2}) V^{k/2}] dx`` up to a positive factor.

    The outer variable is mapped so the endpoint power singularity is absorbed
    and the integrand is smooth; a fixed composite rule then keeps the residual
    a smooth function of ``phi``.
    """
    g, gw = _rule(spec.m0, panels)
    a, b = spec.a, spec.m0 - spec.a
    h = spec.k / 2.0
    loss = spec.loss
    # the weight can peak within ~eps of r = 1, so grade panels towards it
    eps = 1.0 / (1.0 + z) if spec.component == 1 else z / (1.0 + z)
    gaps = np.geomspace(0.5, min(0.25, 1e-3 * eps), 24)
    edges = np.concatenate([np.linspace(0.0, 0.5, outer_panels // 2 + 1)[:-1], 1.0 - gaps, [1.0]])
    edges = np.unique(edges)
    rules = [fixed_gk_rule(lo, hi, 1) for lo, hi in zip(edges[:-1], edges[1:])]
    r = np.concatenate([q[0] for q in rules])
    rw = np.concatenate([q[1] for q in rules])
    if spec.component == 1:
        beta = 1.0 / min(a, 1.0)
        x = (z / (1.0 + z)) * r ** beta
        weight = r ** (beta * a - 1.0) * (1.0 - x) ** (b - 1.0)
    else:
        beta = 1.0 / min(b, 1.0)
        one_minus_x = r ** beta / (1.0 + z)
        x = 1.0 - one_minus_x
        weight = r ** (beta * b - 1.0) * x ** (a - 1.0)
    vk = (2.0 * (1.0 - x)[:, None] * g[None, :]) ** h
    weight = weight * rw

    def residual(phi):
        with np.errstate(over="ignore", invalid="ignore"):
            inner = (np.asarray(loss.deriv(phi * vk)) * vk) @ gw
            val = float(weight @ inner)
        if not math.isfinite(val):
            # overflow only happens for large phi, where L' is positive
            return 1e300
        return val

    return residual


def _nested_value(spec, z):
    if not z > 0 or not math.isfinite(z):
        raise DomainError(f"boundary argument must be positive and finite, got {z!r}")
    c0, a1 = spec.c0, spec.alpha1
    limit = a1 * (1.0 + z) ** (spec.k / 2.0) if spec.component == 2 else a1
    lo, hi = min(c0, limit), max(c0, limit)
    try:
        return solve_root(_nested_residual(spec, z), lo, hi * (1 + 1e-9),
                          rel_tol=BOUNDARY_REL_TOL, domain=(0.0, math.inf))
    except OrdvarError as exc:
        raise type(exc)(f"boundary of {spec.loss.name} (component {spec.component}, "
                        f"p1={spec.p1}, p2={spec.p2}, k={spec.k}) at {z!r}: {exc}") from exc


def boundary_values(spec: BoundaryFunctionSpec, z, method: str = "auto"):
    """Boundary function at ``z`` (``u`` for component 1, ``w`` for component 2).

    ``method`` is ``"auto"``, ``"closed"`` (beta-function ratio) or
    ``"nested"`` (quadrature plus root finding). Accepts arrays.
    """
    za = np.asarray(z, dtype=float)
    if np.any(~(za > 0)) or np.any(~np.isfinite(za)):
        raise DomainError("boundary argument must be positive and finite")
    if method not in ("auto", "closed", "nested"):
        raise ValueError(f"unknown method {method!r}")
    closed_ok = isinstance(spec.loss, LossSpec) and spec.loss.kind in CLOSED_KINDS
    if method == "closed" and not closed_ok:
        raise DomainError(f"no closed-form boundary for {spec.loss.name}")
    if closed_ok and method != "nested":
        out = _closed_values(spec, za)
    else:
        out = np.vectorize(lambda v: _nested_value(spec, float(v)), otypes=[float])(za)
    return float(out) if np.ndim(out) == 0 else out


def phi_star(spec: BoundaryFunctionSpec, u, method: str = "auto"):
    if spec.component != 1:
        raise DomainError("phi_star needs a component-1 spec")
    return boundary_values(spec, u, method)


def psi_star(spec: BoundaryFunctionSpec, w, method: str = "auto"):
    if spec.component != 2:
        raise DomainError("psi_star needs a component-2 spec")
    return boundary_values(spec, w, method)


@dataclass(frozen=True)
class BoundaryTable:
    """Monotone cubic interpolant of a boundary function in ``x = z/(1+z)``.

    Component 2 stores ``psi*(w) / (1+w)^{k/2}``, which stays bounded, and the
    limits at ``x = 0`` and ``x = 1`` are pinned to the known constants.
    """

    spec: BoundaryFunctionSpec
    nodes: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, spec: BoundaryFunctionSpec, n_nodes: int = 161, method: str = "auto"):
        # Chebyshev-like spacing clusters nodes near both limits
        x = 0.5 - 0.5 * np.cos(np.linspace(0.0, math.pi, n_nodes))
        inner = x[1:-1]
        z = inner / (1.0 - inner)
        vals = np.asarray(boundary_values(spec, z, method), float)
        if spec.component == 1:
            ends = (spec.alpha1, spec.c0)
        else:
            vals = vals / (1.0 + z) ** (spec.k / 2.0)
            ends = (spec.c0, spec.alpha1)
        values = np.concatenate([[ends[0]], vals, [ends[1]]])
        return cls(spec, x, values)

    @functools.cached_property
    def _interp(self):
        return PchipInterpolator(self.nodes, self.values)

    def __call__(self, z):
        z = np.asarray(z, float)
        x = z / (1.0 + z)
        x = np.where(np.isinf(z), 1.0, x)
        out = self._interp(x)
        if self.spec.component == 2:
            out = out * (1.0 + z) ** (self.spec.k / 2.0)
        return float(out) if out.ndim == 0 else out


@functools.lru_cache(maxsize=32)
def boundary_table(spec: BoundaryFunctionSpec, n_nodes: int = 161) -> BoundaryTable:
    return BoundaryTable.build(spec, n_nodes)


def _spec_for(s: TwoSampleSummary, t: Target, loss) -> BoundaryFunctionSpec:
    return BoundaryFunctionSpec(t.component, loss, s.p1, s.p2, t.k)


def bz_estimate(s: TwoSampleSummary, t: Target, loss, method: str = "auto") -> float:
    """``phi*(U) S1^{k/2}`` or ``psi*(W) S2^{k/2}``."""
    spec = _spec_for(s, t, loss)
    if t.component == 1:
        return phi_star(spec, s.ss2 / s.ss1, method) * s.ss1 ** (t.k / 2.0)
    return psi_star(spec, s.ss1 / s.ss2, method) * s.ss2 ** (t.k / 2.0)


def _gb_exponents(kind, n, k):
    if kind == "quadratic":
        return (n + k - 4) / 2.0, (n + 2 * k - 4) / 2.0, False
    if kind == "entropy":
        return (n - 4) / 2.0, (n + k - 4) / 2.0, False
    if kind == "symmetric":
        return (n - k - 4) / 2.0, (n + k - 4) / 2.0, True
    raise DomainError(f"generalized Bayes estimator is only available for "
                      f"{', '.join(CLOSED_KINDS)}; got {getattr(kind, 'name', kind)}")


def _posterior_integral(e, c, t_range):
    """``log int int exp(-v(1+t)/2) v^e t^c dv dt`` over ``t_range x (0, inf)``."""
    # a wide finite t-range hides the peak from the adaptive rule; split it by decades
    lo, hi = t_range
    cuts = [lo]
    edge = max(1.0, 10.0 * lo)
    while math.isfinite(hi) and edge < hi:
        cuts.append(edge)
        edge *= 10.0
    cuts.append(hi)
    logs = [_posterior_piece(e, c, a, b) for a, b in zip(cuts[:-1], cuts[1:])]
    top = max(logs)
    return top + math.log(math.fsum(math.exp(x - top) for x in logs))


def _posterior_piece(e, c, t_lo, t_hi):
    # v is rescaled by a representative 1 + t so the v-peak stays O(1) on the piece
    ref = 1.0 + (t_lo if not math.isfinite(t_hi) else math.sqrt(t_lo * t_hi) if t_lo > 0 else t_hi)
    lam = 2.0 * (e + 1.0) / ref
    log_scale = (e + 1.0) * math.log(2.0 * (e + 1.0)) + (e * math.log(e) - e if e > 0 else 0.0)
    log_scale -= (e + 1.0) * math.log(ref)
    log_scale += c * math.log(max(t_lo, 1.0) if c < 0 or not math.isfinite(t_hi) else t_hi)

    def f(t, v):
        s = 2.0 * (e + 1.0) * v
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            lg = (e * np.log(s) - e * math.log(ref) - 0.5 * s * (1.0 + t) / ref + c * np.log(t)
                  + math.log(lam) - log_scale)
            out = np.exp(lg)
        return np.where(np.isfinite(out), out, 0.0)

    val = integrate_2d(f, (t_lo, t_hi), (0.0, math.inf), rel_tol=GB_REL_TOL * 0.01)
    if not val > 0:
        return -math.inf
    return math.log(val) + log_scale


def gb_estimate(s: TwoSampleSummary, t: Target, loss) -> float:
    """Generalized Bayes estimator under the prior ``1/(sigma1^4 sigma2^4)``."""
    kind = loss.kind if isinstance(loss, LossSpec) else loss
    e_num, e_den, root = _gb_exponents(kind, s.p1 + s.p2, t.k)
    if t.component == 1:
        c, t_range, scale = (s.p2 - 3) / 2.0, (0.0, s.ss2 / s.ss1), s.ss1
    else:
        c, t_range, scale = (s.p1 - 3) / 2.0, (s.ss1 / s.ss2, math.inf), s.ss2
    if not e_num > -1.0:
        raise DomainError("posterior integral diverges for these sample sizes")
    log_ratio = _posterior_integral(e_num, c, t_range) - _posterior_integral(e_den, c, t_range)
    if root:
        log_ratio *= 0.5
    return math.exp(log_ratio) * scale ** (t.k / 2.0)


@dataclass
class IERDReport:
    """Findings of the sufficient-condition check for a candidate boundary."""

    component: int
    monotone: bool
    limit: bool
    bound: bool
    worst_decrease: float
    limit_rel_error: float
    worst_bound_violation: float
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.monotone and self.limit and self.bound

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def check_ierd_conditions(candidate, spec: BoundaryFunctionSpec, grid, tol: float = 1e-9) -> IERDReport:
    """Check a candidate multiplier against the improvement conditions.

    (a) nondecreasing on ``grid``; (b) within 1e-3 relative of the BAEE
    constant at the limiting end of the grid; (c) at least ``phi*`` for
    component 1, at most ``psi*`` for component 2, at every grid point.
    Violations are reported as relative amounts; ``tol`` absorbs rounding.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) < 0) or np.any(~(grid > 0)):
        raise DomainError("grid must be a nonempty sorted list of positive reals")
    vals = np.array([float(candidate(g)) for g in grid])
    scale = np.maximum(np.abs(vals), 1e-300)
    drops = (vals[:-1] - vals[1:]) / scale[:-1]
    worst_decrease = float(max(drops.max(initial=0.0), 0.0))
    c0 = spec.c0
    end = vals[-1] if spec.component == 1 else vals[0]
    limit_err = abs(end - c0) / c0
    exact = np.asarray(boundary_values(spec, grid), float)
    gap = (exact - vals) if spec.component == 1 else (vals - exact)
    worst_bound = float(max((gap / exact).max(), 0.0))
    notes = []
    if spec.loss.kind == "linex":
        notes.append(LINEX_Q_NOTE)
    extreme = grid[-1] if spec.component == 1 else grid[0]
    notes.append(f"limit checked at {'u' if spec.component == 1 else 'w'}={extreme:g}")
    return IERDReport(
        component=spec.component,
        monotone=worst_decrease <= tol,
        limit=bool(limit_err <= 1e-3),
        bound=worst_bound <= tol,
        worst_decrease=worst_decrease,
        limit_rel_error=float(limit_err),
        worst_bound_violation=worst_bound,
        notes=notes,
    )
