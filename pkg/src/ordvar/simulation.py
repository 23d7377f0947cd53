"""Monte Carlo risk and relative risk improvement (RRI) over an eta grid.

For each ``eta`` the model uses ``sigma2 = 1``, ``sigma1 = eta`` and the
configured means. One random substream is derived per ``(seed, eta index)``
and every variant is evaluated on the same replicates, so risk differences
against the BAEE are paired.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bz_bayes import CLOSED_KINDS, BoundaryFunctionSpec, boundary_table, boundary_values
from .constants import baee_constant, stein_constants
from .errors import DomainError, OrdvarError
from .estimators import STEIN_VARIANTS, Target, TwoSampleSummary, Variant, stein_coefficients, umvue_constant
from .losses import LossSpec, parse_loss
from .numerics import RandomStream

DEFAULT_ETA_GRID = tuple(round(0.05 * i, 2) for i in range(1, 21))
DEFAULT_N_REP = 60000
DEFAULT_SEED = 20240611
CONFIG_FIELDS = ("p1", "p2", "mu1", "mu2", "loss", "k", "target", "variants",
                 "eta_grid", "n_rep", "seed")
CSV_COLUMNS = ("config_id", "variant", "eta", "risk", "risk_se", "rri_percent",
               "rri_se_percent", "n")


@dataclass(frozen=True)
class ModelParams:
    mu1: float
    mu2: float
    sigma1: float
    sigma2: float

    @property
    def eta(self) -> float:
        return self.sigma1 / self.sigma2


@dataclass(frozen=True)
class SampleBatch:
    """Vectors of independent draws of the four summary statistics."""

    mean1: np.ndarray
    mean2: np.ndarray
    ss1: np.ndarray
    ss2: np.ndarray

    def __len__(self):
        return len(self.ss1)


@dataclass(frozen=True)
class SimConfig:
    p1: int
    p2: int
    mu1: float
    mu2: float
    loss: LossSpec
    k: float
    target: Target
    variants: tuple
    eta_grid: tuple = DEFAULT_ETA_GRID
    n_rep: int = DEFAULT_N_REP
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        for name in ("p1", "p2"):
            p = getattr(self, name)
            if int(p) != p or p < 2:
                raise DomainError(f"{name} must be an integer >= 2, got {p!r}")
            object.__setattr__(self, name, int(p))
        if not self.k > 0:
            raise DomainError(f"k must be positive, got {self.k!r}")
        if self.target.k != self.k:
            raise DomainError("target power must equal k")
        object.__setattr__(self, "variants", tuple(Variant.parse(v) for v in self.variants))
        if Variant.GEN_BAYES in self.variants:
            raise DomainError("gen_bayes is not simulated; it coincides with bz and is far costlier")
        grid = tuple(float(e) for e in self.eta_grid)
        if not grid or any(not 0.0 < e <= 1.0 for e in grid):
            raise DomainError("eta_grid values must lie in (0, 1]")
        object.__setattr__(self, "eta_grid", grid)
        if int(self.n_rep) != self.n_rep or self.n_rep < 1000:
            raise DomainError(f"n_rep must be an integer >= 1000, got {self.n_rep!r}")
        object.__setattr__(self, "n_rep", int(self.n_rep))
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        unknown = set(d) - set(CONFIG_FIELDS)
        if unknown:
            raise DomainError(f"unknown config fields: {sorted(unknown)}")
        missing = {"p1", "p2", "loss", "k", "target", "variants"} - set(d)
        if missing:
            raise DomainError(f"config is missing fields: {sorted(missing)}")
        k = float(d["k"])
        loss = d["loss"] if isinstance(d["loss"], LossSpec) else parse_loss(str(d["loss"]))
        target = d["target"] if isinstance(d["target"], Target) else Target.parse(d["target"], k)
        return cls(
            p1=d["p1"], p2=d["p2"], mu1=float(d.get("mu1", 0.0)), mu2=float(d.get("mu2", 0.0)),
            loss=loss, k=k, target=target, variants=tuple(d["variants"]),
            eta_grid=tuple(d.get("eta_grid", DEFAULT_ETA_GRID)),
            n_rep=d.get("n_rep", DEFAULT_N_REP), seed=d.get("seed", DEFAULT_SEED),
        )

    def to_dict(self) -> dict:
        return {
            "p1": self.p1, "p2": self.p2, "mu1": self.mu1, "mu2": self.mu2,
            "loss": self.loss.name, "k": self.k, "target": f"sigma{self.target.component}",
            "variants": [v.value for v in self.variants], "eta_grid": list(self.eta_grid),
            "n_rep": self.n_rep, "seed": self.seed,
        }


def load_configs(path, seed_override=None) -> list:
    """Read one config object or a list of them from a JSON file.

    ``ORDVAR_SEED`` in the environment (or ``seed_override``) replaces every
    config's seed.
    """
    with open(path) as fh:
        doc = json.load(fh)
    items = doc if isinstance(doc, list) else [doc]
    if seed_override is None and os.environ.get("ORDVAR_SEED"):
        try:
            seed_override = int(os.environ["ORDVAR_SEED"])
        except ValueError:
            raise DomainError("ORDVAR_SEED must be an integer") from None
    configs = []
    for i, item in enumerate(items):
        if not isinstance(item, dict):
            raise DomainError(f"config #{i} is not a JSON object")
        if seed_override is not None:
            item = {**item, "seed": seed_override}
        try:
            configs.append(SimConfig.from_dict(item))
        except (OrdvarError, TypeError, ValueError) as exc:
            raise DomainError(f"config #{i}: {exc}") from exc
    return configs


def regime_notes(config: SimConfig) -> list:
    """Variants whose dominance result does not cover the configured means."""
    notes = []
    sign_ok = config.mu1 >= 0 and config.mu2 >= 0
    if config.target.component == 2:
        sign_ok = config.mu1 <= 0 and config.mu2 <= 0
    for v in config.variants:
        if v in (Variant.STEIN_ONE_MEAN, Variant.STEIN_TWO_MEANS) and not sign_ok:
            notes.append(f"{v.value}: dominance is only established for means of the gated sign")
        if v is Variant.STEIN_MEAN_DIFF:
            ordered = config.mu1 <= config.mu2
            if not ordered:
                notes.append(f"{v.value}: dominance is only established for mu1 <= mu2")
    return notes


def sample_model(params: ModelParams, p1: int, p2: int, stream: RandomStream, size=None):
    """Draw ``(mean1, mean2, ss1, ss2)``; a :class:`SampleBatch` when ``size`` is given."""
    if not params.sigma1 > 0 or not params.sigma2 > 0:
        raise DomainError("sigmas must be positive")
    n = 1 if size is None else int(size)
    z1 = stream.standard_normal(n)
    z2 = stream.standard_normal(n)
    g1 = stream.standard_gamma((p1 - 1) / 2.0, n)
    g2 = stream.standard_gamma((p2 - 1) / 2.0, n)
    batch = SampleBatch(
        mean1=params.mu1 + params.sigma1 / math.sqrt(p1) * z1,
        mean2=params.mu2 + params.sigma2 / math.sqrt(p2) * z2,
        ss1=params.sigma1 ** 2 * 2.0 * g1,
        ss2=params.sigma2 ** 2 * 2.0 * g2,
    )
    if size is None:
        return TwoSampleSummary(p1, p2, float(batch.mean1[0]), float(batch.mean2[0]),
                                float(batch.ss1[0]), float(batch.ss2[0]))
    return batch


def multipliers(variant, t: Target, loss, p1: int, p2: int, batch: SampleBatch) -> np.ndarray:
    """Per-replicate ``c`` such that the estimate is ``c * S_i^{k/2}``."""
    variant = Variant.parse(variant)
    n = len(batch)
    if variant is Variant.BAEE:
        p = p1 if t.component == 1 else p2
        return np.full(n, baee_constant(loss, p, t.k))
    if variant is Variant.UMVUE:
        p = p1 if t.component == 1 else p2
        return np.full(n, umvue_constant(p, t.k))
    if variant in STEIN_VARIANTS:
        consts = stein_constants(loss, p1, p2, t.k)
        return np.asarray(stein_coefficients(variant, t.component, t.k, loss, p1, p2,
                                             batch.mean1, batch.mean2, batch.ss1, batch.ss2,
                                             consts), float)
    if variant is Variant.BZ_BOUNDARY:
        spec = BoundaryFunctionSpec(t.component, loss, p1, p2, t.k)
        z = batch.ss2 / batch.ss1 if t.component == 1 else batch.ss1 / batch.ss2
        if isinstance(loss, LossSpec) and loss.kind in CLOSED_KINDS:
            return np.asarray(boundary_values(spec, z), float)
        return np.asarray(boundary_table(spec)(z), float)
    raise DomainError(f"{variant.value} cannot be simulated")


def replicate_losses(variant, params: ModelParams, t: Target, loss, p1, p2, batch) -> np.ndarray:
    c = multipliers(variant, t, loss, p1, p2, batch)
    if t.component == 1:
        ratio = c * (batch.ss1 / params.sigma1 ** 2) ** (t.k / 2.0)
    else:
        ratio = c * (batch.ss2 / params.sigma2 ** 2) ** (t.k / 2.0)
    out = np.asarray(loss.value(ratio), float)
    if not np.all(np.isfinite(out)):
        bad = int(np.flatnonzero(~np.isfinite(out))[0])
        raise DomainError(f"{Variant.parse(variant).value}: non-finite loss at replicate {bad}")
    return out


@dataclass(frozen=True)
class RiskPoint:
    eta: float
    risk: float
    stderr: float
    n: int


def _risk_point(eta, losses) -> RiskPoint:
    n = len(losses)
    se = float(np.std(losses, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return RiskPoint(eta, float(np.mean(losses)), se, n)


def mc_risk(variant, params: ModelParams, t: Target, loss, p1: int, p2: int, n: int,
            stream: RandomStream) -> RiskPoint:
    """Average loss of ``variant`` over ``n`` fresh draws from ``stream``."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    batch = sample_model(params, p1, p2, stream, size=n)
    return _risk_point(params.eta, replicate_losses(variant, params, t, loss, p1, p2, batch))


@dataclass(frozen=True)
class CurvePoint:
    eta: float
    risk: float
    risk_se: float
    rri_percent: float
    rri_se_percent: float
    n: int


@dataclass(frozen=True)
class RRICurve:
    config: SimConfig
    variant: Variant
    points: tuple


def _rri(l0, l1):
    """RRI in percent and its delta-method standard error from paired losses."""
    n = len(l0)
    m0 = float(np.mean(l0))
    d = l0 - l1
    r = float(np.mean(d)) / m0
    if n < 2:
        return 100.0 * r, 0.0
    infl = d - r * l0
    return 100.0 * r, 100.0 * float(np.std(infl, ddof=1)) / (math.sqrt(n) * m0)


def _cell(config: SimConfig, eta_index: int) -> list:
    """All variants at one eta; returns one :class:`CurvePoint` per variant."""
    eta = config.eta_grid[eta_index]
    params = ModelParams(config.mu1, config.mu2, eta, 1.0)
    stream = RandomStream(config.seed, eta_index)
    batch = sample_model(params, config.p1, config.p2, stream, size=config.n_rep)
    args = (params, config.target, config.loss, config.p1, config.p2, batch)
    l0 = replicate_losses(Variant.BAEE, *args)
    out = []
    for v in config.variants:
        lv = l0 if v is Variant.BAEE else replicate_losses(v, *args)
        rp = _risk_point(eta, lv)
        rri, rri_se = _rri(l0, lv)
        out.append(CurvePoint(eta, rp.risk, rp.stderr, rri, rri_se, rp.n))
    return out


def _assemble(config, cells) -> list:
    return [RRICurve(config, v, tuple(cell[j] for cell in cells))
            for j, v in enumerate(config.variants)]


def rri_curve(config: SimConfig) -> list:
    """One :class:`RRICurve` per configured variant."""
    return _assemble(config, [_cell(config, i) for i in range(len(config.eta_grid))])


@dataclass
class GridResult:
    config_id: int
    config: SimConfig
    curves: list = field(default_factory=list)
    error: str | None = None


def _safe_cell(job):
    config, i = job
    try:
        return _cell(config, i), None
    except Exception as exc:  # isolate failures to their config
        return None, f"{type(exc).__name__}: {exc}"


def run_grid(configs, jobs: int = 1) -> list:
    """Evaluate every (config, eta) cell; output order and values do not depend on ``jobs``."""
    if int(jobs) != jobs or jobs < 1:
        raise DomainError(f"jobs must be a positive integer, got {jobs!r}")
    work = [(c, i) for c in configs for i in range(len(c.eta_grid))]
    if jobs == 1 or len(work) <= 1:
        done = [_safe_cell(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=int(jobs)) as pool:
            done = list(pool.map(_safe_cell, work))
    results, pos = [], 0
    for cid, c in enumerate(configs):
        chunk = done[pos:pos + len(c.eta_grid)]
        pos += len(c.eta_grid)
        errors = [e for _, e in chunk if e is not None]
        if errors:
            results.append(GridResult(cid, c, error=errors[0]))
        else:
            results.append(GridResult(cid, c, _assemble(c, [cells for cells, _ in chunk])))
    return results


def write_csv(results, path) -> None:
    """Write grid results; failed configs appear as comment lines."""
    seeds = sorted({r.config.seed for r in results})
    with open(path, "w", newline="") as fh:
        fh.write(f"# ordvar {__version__} seed={','.join(str(s) for s in seeds)}\n")
        for r in results:
            if r.error is not None:
                fh.write(f"# config {r.config_id} failed: {r.error}\n")
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in results:
            for curve in r.curves:
                for pt in curve.points:
                    w.writerow([r.config_id, curve.variant.value, repr(pt.eta),
                                f"{pt.risk:.15g}", f"{pt.risk_se:.15g}",
                                f"{pt.rri_percent:.15g}", f"{pt.rri_se_percent:.15g}", pt.n])
