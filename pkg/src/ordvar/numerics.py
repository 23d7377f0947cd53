"""Special functions, quadrature, root finding and random streams.

Everything here is reentrant. ``RandomStream`` is the only stateful object and
is meant to be owned by one consumer at a time.
"""

from __future__ import annotations

import heapq
import math
from typing import Callable

import numpy as np
from scipy import optimize, special

from .errors import BracketError, ConvergenceError, DomainError

# Gauss-Kronrod (G10, K21) nodes on [-1, 1]; the Gauss nodes are the odd entries.
_GK_X = np.array([
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0,
    -0.148874338981631210884826001129720, -0.294392862701460198131126603103866,
    -0.433395394129247190799265943165784, -0.562757134668604683339000099272694,
    -0.679409568299024406234327365114874, -0.780817726586416897063717578345042,
    -0.865063366688984510732096688423493, -0.930157491355708226001207180059508,
    -0.973906528517171720077964012084452, -0.995657163025808080735527280689003,
])
_GK_WK = np.array([
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
    0.147739104901338491374841515972068, 0.142775938577060080797094273138717,
    0.134709217311473325928054001771707, 0.123491976262065851077958109831074,
    0.109387158802297641899210590325805, 0.093125454583697605535065465083366,
    0.075039674810919952767043140916190, 0.054755896574351996031381300244580,
    0.032558162307964727478818972459390, 0.011694638867371874278064396062192,
])
_GK_WG = np.zeros(21)
_GK_WG[1::2] = [
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338, 0.295524224714752870173892994651338,
    0.269266719309996355091226921569469, 0.219086362515982043995534934228163,
    0.149451349150580593145776339657697, 0.066671344308688137593568809893332,
]

_EPS = np.finfo(float).eps


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    if not x > 0:
        raise DomainError(f"log_gamma requires x > 0, got {x!r}")
    return float(special.gammaln(x))


def gamma_ratio(x: float, r: float) -> float:
    """``Gamma(x) / Gamma(x + r)`` evaluated in log space."""
    if not x > 0 or not x + r > 0:
        raise DomainError(f"gamma_ratio requires x > 0 and x + r > 0, got x={x!r}, r={r!r}")
    return math.exp(log_gamma(x) - log_gamma(x + r))


def reg_inc_beta(x, a: float, b: float, upper: bool = False):
    """Regularized incomplete beta ``I_x(a, b)``; ``upper`` gives ``1 - I_x(a, b)``.

    ``x`` may be an array.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(~((xa >= 0.0) & (xa <= 1.0))) or not a > 0 or not b > 0:
        raise DomainError(f"reg_inc_beta requires 0<=x<=1, a>0, b>0; got x={x!r}, a={a!r}, b={b!r}")
    out = special.betaincc(a, b, xa) if upper else special.betainc(a, b, xa)
    return float(out) if out.ndim == 0 else out


def _gk21(f, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fx = np.asarray(f(mid + half * _GK_X), dtype=float)
    k = half * float(fx @ _GK_WK)
    g = half * float(fx @ _GK_WG)
    return k, abs(k - g)


def _finite_map(f, lower, upper):
    """Rewrite an integral over an infinite range as one over a finite range."""
    if math.isinf(lower) and math.isinf(upper):
        if lower > 0 or upper < 0:
            raise DomainError("integration bounds must satisfy lower < upper")
        return None
    if math.isinf(upper):
        # q = lower + t / (1 - t), t in [0, 1)
        def g(t):
            s = 1.0 - t
            return f(lower + t / s) / (s * s)
        return g, 0.0, 1.0
    if math.isinf(lower):
        def g(t):
            s = 1.0 - t
            return f(upper - t / s) / (s * s)
        return g, 0.0, 1.0
    return f, lower, upper


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    lower: float,
    upper: float,
    abs_tol: float = 1e-12,
    rel_tol: float = 1e-10,
    max_intervals: int = 4000,
    full_output: bool = False,
):
    """Adaptive Gauss-Kronrod integral of a vectorized integrand.

    Semi-infinite ranges are mapped to ``[0, 1)`` via ``t = q / (1 + q)``.
    The integrand is called with 1-d arrays of nodes and must return an array
    of the same shape. With ``full_output`` the pair ``(value, error)`` is
    returned. Raises :class:`ConvergenceError` carrying the best estimate when
    ``max_intervals`` is exhausted.
    """
    if lower == upper:
        return (0.0, 0.0) if full_output else 0.0
    if lower > upper:
        res = integrate(f, upper, lower, abs_tol, rel_tol, max_intervals, full_output=True)
        return (-res[0], res[1]) if full_output else -res[0]
    mapped = _finite_map(f, lower, upper)
    if mapped is None:
        left = integrate(f, -math.inf, 0.0, abs_tol / 2, rel_tol, max_intervals, full_output=True)
        right = integrate(f, 0.0, math.inf, abs_tol / 2, rel_tol, max_intervals, full_output=True)
        val, err = left[0] + right[0], left[1] + right[1]
        return (val, err) if full_output else val
    g, a, b = mapped

    val, err = _gk21(g, a, b)
    heap = [(-err, a, b, val, err)]
    total, total_err = val, err
    n = 1
    while total_err > max(abs_tol, rel_tol * abs(total)):
        if n >= max_intervals:
            raise ConvergenceError(
                f"integrate: no convergence after {n} subintervals "
                f"(estimate {total:.6g}, error {total_err:.3g})",
                estimate=total, error=total_err,
            )
        neg, lo, hi, v, e = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi or (hi - lo) < 64 * _EPS * max(abs(lo), abs(hi), 1e-300):
            # interval at floating-point resolution; accept its contribution
            heapq.heappush(heap, (0.0, lo, hi, v, 0.0))
            total_err -= e
            if all(item[0] == 0.0 for item in heap):
                break
            continue
        v1, e1 = _gk21(g, lo, mid)
        v2, e2 = _gk21(g, mid, hi)
        heapq.heappush(heap, (-e1, lo, mid, v1, e1))
        heapq.heappush(heap, (-e2, mid, hi, v2, e2))
        total += v1 + v2 - v
        total_err += e1 + e2 - e
        n += 1
    # re-sum to shed accumulated cancellation from the running updates
    total = math.fsum(item[3] for item in heap)
    total_err = math.fsum(item[4] for item in heap)
    return (total, total_err) if full_output else total


def _axis_map(lower, upper):
    """Return (to_x, jacobian, a, b) mapping a finite parameter onto the range."""
    if math.isinf(upper) and not math.isinf(lower):
        return (lambda t: lower + t / (1.0 - t)), (lambda t: 1.0 / (1.0 - t) ** 2), 0.0, 1.0
    if math.isinf(lower) or math.isinf(upper):
        raise DomainError("integrate_2d supports only [a, b] and [a, inf) ranges")
    return (lambda t: t), (lambda t: np.ones_like(t)), lower, upper


def _gk21x21(f, box, maps):
    (t0, t1), (v0, v1) = box
    (xt, jt), (xv, jv) = maps
    ht, hv = 0.5 * (t1 - t0), 0.5 * (v1 - v0)
    tt = 0.5 * (t0 + t1) + ht * _GK_X
    vv = 0.5 * (v0 + v1) + hv * _GK_X
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        vals = np.asarray(f(xt(tt)[:, None], xv(vv)[None, :]), dtype=float)
        vals = vals * (jt(tt)[:, None] * jv(vv)[None, :]) * (ht * hv)
    # nodes rounded onto a mapped infinite end carry no mass
    vals = np.where(np.isfinite(vals), vals, 0.0)
    kk = _GK_WK @ vals @ _GK_WK
    gk = _GK_WG @ vals @ _GK_WK
    kg = _GK_WK @ vals @ _GK_WG
    et, ev = abs(kk - gk), abs(kk - kg)
    return float(kk), float(et + ev), 0 if et >= ev else 1


def integrate_2d(f, t_range, v_range, abs_tol: float = 0.0, rel_tol: float = 1e-10,
                 max_cells: int = 20000) -> float:
    """Adaptive product Gauss-Kronrod cubature over a rectangle.

    ``f(t, v)`` receives broadcastable arrays. Either upper bound may be
    infinite; it is then mapped with ``t = q / (1 + q)``. Cells are bisected
    along the axis whose embedded Gauss estimate disagrees most.
    """
    maps = []
    box = []
    for lo, hi in (t_range, v_range):
        xt, jac, a, b = _axis_map(float(lo), float(hi))
        maps.append((xt, jac))
        box.append((a, b))
    box = tuple(box)
    val, err, axis = _gk21x21(f, box, maps)
    heap = [(-err, 0, box, val, err, axis)]
    total, total_err, counter = val, err, 1
    while total_err > max(abs_tol, rel_tol * abs(total)):
        if len(heap) >= max_cells:
            raise ConvergenceError(
                f"integrate_2d: no convergence after {len(heap)} cells "
                f"(estimate {total:.6g}, error {total_err:.3g})",
                estimate=total, error=total_err,
            )
        _, _, cell, v, e, axis = heapq.heappop(heap)
        lo, hi = cell[axis]
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            heapq.heappush(heap, (0.0, counter, cell, v, 0.0, axis))
            counter += 1
            total_err -= e
            if all(item[0] == 0.0 for item in heap):
                break
            continue
        for part in ((lo, mid), (mid, hi)):
            sub = (part, cell[1]) if axis == 0 else (cell[0], part)
            sv, se, sa = _gk21x21(f, sub, maps)
            heapq.heappush(heap, (-se, counter, sub, sv, se, sa))
            counter += 1
            total += sv
            total_err += se
        total -= v
        total_err -= e
    return math.fsum(item[3] for item in heap)


def fixed_gk_rule(lower: float, upper: float, panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a composite 21-point Kronrod rule on ``[lower, upper]``."""
    edges = np.linspace(lower, upper, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * _GK_X[None, :]).ravel()
    weights = (half[:, None] * _GK_WK[None, :]).ravel()
    return nodes, weights


def gamma_log_rule(shape: float, panels: int = 64, headroom: float = 4.0):
    """Quadrature rule for expectations over ``G ~ Gamma(shape, 1)``.

    Returns ``(g, w)`` such that ``E[h(G)] ~= sum(w * h(g))``. The rule is laid
    out in ``y = log G`` where the density is a smooth bump, and is truncated
    where the log-density falls about 60 nats below its peak; ``headroom``
    stretches the right end for integrands tilted towards large ``G``.
    """
    if not shape > 0:
        raise DomainError(f"gamma shape must be positive, got {shape!r}")
    y_mode = math.log(shape)

    def logdens(y):
        return shape * y - math.exp(y) - special.gammaln(shape)

    peak = logdens(y_mode)
    lo = y_mode - 1.0
    while logdens(lo) > peak - 60.0:
        lo -= max(1.0, 1.0 / shape)
    hi = y_mode + 0.5
    while logdens(hi) > peak - 60.0:
        hi += 0.25
    hi += math.log(headroom)
    y, w = fixed_gk_rule(lo, hi, panels)
    g = np.exp(y)
    w = w * np.exp(shape * y - g - special.gammaln(shape))
    return g, w


def solve_root(
    f: Callable[[float], float],
    bracket_lo: float,
    bracket_hi: float,
    rel_tol: float = 1e-12,
    domain: tuple[float, float] = (-math.inf, math.inf),
    max_expand: int = 60,
    max_iter: int = 500,
) -> float:
    """Root of a scalar function on a bracket that is expanded as needed.

    The bracket grows geometrically (its width doubles on each side, or the
    distance to a finite ``domain`` end is halved) up to ``max_expand`` times.
    Raises :class:`BracketError` when no sign change is found and
    :class:`ConvergenceError` when Brent's iteration does not settle.
    """
    lo, hi = float(bracket_lo), float(bracket_hi)
    if not lo < hi:
        raise DomainError(f"bracket must satisfy lo < hi, got [{lo}, {hi}]")
    dlo, dhi = domain
    flo, fhi = f(lo), f(hi)
    for _ in range(max_expand):
        if flo == 0.0:
            return lo
        if fhi == 0.0:
            return hi
        if np.sign(flo) != np.sign(fhi):
            break
        width = hi - lo
        lo = 0.5 * (lo + dlo) if math.isfinite(dlo) else lo - width
        hi = 0.5 * (hi + dhi) if math.isfinite(dhi) else hi + width
        flo, fhi = f(lo), f(hi)
    else:
        if np.sign(flo) == np.sign(fhi) and flo != 0.0 and fhi != 0.0:
            raise BracketError(
                f"solve_root: no sign change on [{lo:.6g}, {hi:.6g}] after {max_expand} expansions"
            )
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if not (np.isfinite(flo) and np.isfinite(fhi)):
        raise BracketError(f"solve_root: non-finite function value on [{lo:.6g}, {hi:.6g}]")
    root, info = optimize.brentq(
        f, lo, hi, xtol=1e-300, rtol=max(rel_tol, 4 * _EPS), maxiter=max_iter,
        full_output=True, disp=False,
    )
    if not info.converged:
        raise ConvergenceError(f"solve_root: {info.flag}", estimate=root)
    return float(root)


class RandomStream:
    """Reproducible random substream keyed by ``(seed, stream_id)``.

    Streams are derived with numpy's ``SeedSequence`` spawn keys feeding a
    counter-based Philox generator, so distinct ids give independent streams
    and equal keys give identical sequences.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise DomainError("seed and stream_id must be non-negative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(ss))

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id})"

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def standard_gamma(self, shape, size=None):
        return self.generator.standard_gamma(shape, size)


def sample_gamma(shape: float, scale: float, stream: RandomStream, size=None):
    """Gamma(shape, scale) draw(s); chi-square with ``d`` df is ``(d / 2, 2)``."""
    if not shape > 0 or not scale > 0:
        raise DomainError(f"gamma requires shape > 0 and scale > 0, got {shape!r}, {scale!r}")
    return scale * stream.standard_gamma(shape, size)


def sample_normal(mean: float, sd: float, stream: RandomStream, size=None):
    """Normal draw(s) computed as ``mean + sd * z``."""
    if not sd > 0:
        raise DomainError(f"normal sd must be positive, got {sd!r}")
    return mean + sd * stream.standard_normal(size)


def kolmogorov_cdf(x: float) -> float:
    """Limiting distribution of ``sqrt(n) * D_n`` (Kolmogorov)."""
    if x <= 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < 1.0:
        # Jacobi-transformed series converges fast for small x
        c = math.pi ** 2 / (8.0 * x * x)
        total, j = 0.0, 1
        while True:
            term = math.exp(-((2 * j - 1) ** 2) * c)
            total += term
            if term < 1e-16:
                break
            j += 1
        return math.sqrt(2.0 * math.pi) / x * total
    total, j = 0.0, 1
    while True:
        term = math.exp(-2.0 * j * j * x * x)
        total += (-1) ** (j - 1) * term
        if term < 1e-12:
            break
        j += 1
    return max(0.0, min(1.0, 1.0 - 2.0 * total))
