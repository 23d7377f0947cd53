"""Point estimators of ``sigma_i^k`` from two-sample summary statistics.

The array-level helpers (``*_coefficients``) take numpy arrays of means and
sums of squares so the simulation engine can evaluate many replicates at
once; the summary-level functions wrap them for a single data set.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .constants import baee_constant, stein_constants
from .errors import DomainError
from .numerics import gamma_ratio


class Variant(str, Enum):
    BAEE = "baee"
    UMVUE = "umvue"
    STEIN_PLAIN = "stein_plain"
    STEIN_ONE_MEAN = "stein_one_mean"
    STEIN_TWO_MEANS = "stein_two_means"
    STEIN_MEAN_DIFF = "stein_mean_diff"
    BZ_BOUNDARY = "bz"
    GEN_BAYES = "gen_bayes"

    @classmethod
    def parse(cls, text) -> "Variant":
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower()
        for v in cls:
            if key in (v.value, v.name.lower()):
                return v
        raise DomainError(f"unknown estimator variant {text!r}; expected one of "
                          + ", ".join(v.value for v in cls))


STEIN_VARIANTS = (Variant.STEIN_PLAIN, Variant.STEIN_ONE_MEAN,
                  Variant.STEIN_TWO_MEANS, Variant.STEIN_MEAN_DIFF)


@dataclass(frozen=True)
class TwoSampleSummary:
    """Sample sizes, means and centred sums of squares of two normal samples."""

    p1: int
    p2: int
    mean1: float
    mean2: float
    ss1: float
    ss2: float

    def __post_init__(self):
        for name in ("p1", "p2"):
            p = getattr(self, name)
            if int(p) != p or p < 2:
                raise DomainError(f"{name} must be an integer >= 2, got {p!r}")
            object.__setattr__(self, name, int(p))
        for name in ("ss1", "ss2"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)!r}")
        for name in ("mean1", "mean2", "ss1", "ss2"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite")
            object.__setattr__(self, name, v)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TwoSampleSummary":
        missing = {"p1", "p2", "mean1", "mean2", "ss1", "ss2"} - set(d)
        if missing:
            raise DomainError(f"summary is missing keys: {sorted(missing)}")
        return cls(d["p1"], d["p2"], d["mean1"], d["mean2"], d["ss1"], d["ss2"])

    @classmethod
    def load(cls, path) -> "TwoSampleSummary":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def scaled(self, b: float) -> "TwoSampleSummary":
        """Summary of the data after multiplying every observation by ``b``."""
        return TwoSampleSummary(self.p1, self.p2, b * self.mean1, b * self.mean2,
                                b * b * self.ss1, b * b * self.ss2)


@dataclass(frozen=True)
class DerivedStatistics:
    u: float
    u1: float
    u2: float
    u3: float
    w: float
    w1: float
    w2: float
    w3: float


@dataclass(frozen=True)
class Target:
    """Estimate ``sigma_component ** k``."""

    component: int
    k: float

    def __post_init__(self):
        if self.component not in (1, 2):
            raise DomainError(f"component must be 1 or 2, got {self.component!r}")
        if not self.k > 0:
            raise DomainError(f"power k must be positive, got {self.k!r}")

    @classmethod
    def parse(cls, text: str, k: float) -> "Target":
        key = str(text).strip().lower()
        if key in ("sigma1", "1"):
            return cls(1, k)
        if key in ("sigma2", "2"):
            return cls(2, k)
        raise DomainError(f"target must be sigma1 or sigma2, got {text!r}")


def derived_statistics(s: TwoSampleSummary) -> DerivedStatistics:
    r1, r2 = math.sqrt(s.ss1), math.sqrt(s.ss2)
    return DerivedStatistics(
        u=s.ss2 / s.ss1, u1=s.mean1 / r1, u2=s.mean2 / r1, u3=(s.mean2 - s.mean1) / r1,
        w=s.ss1 / s.ss2, w1=s.mean1 / r2, w2=s.mean2 / r2, w3=(s.mean1 - s.mean2) / r2,
    )


def umvue_constant(p: int, k: float) -> float:
    return gamma_ratio((p - 1) / 2.0, k / 2.0) / 2.0 ** (k / 2.0)


def stein_coefficients(variant, component, k, loss, p1, p2, mean1, mean2, ss1, ss2, consts=None):
    """Multiplier of ``S_i^{k/2}`` for a Stein-type variant, elementwise.

    Component 1 truncates the BAEE constant down to the Stein bound, component
    2 truncates it up; when the variant's sign gate fails the BAEE constant is
    returned unchanged.
    """
    variant = Variant.parse(variant)
    if variant not in STEIN_VARIANTS:
        raise DomainError(f"{variant.value} is not a Stein-type variant")
    if consts is None:
        consts = stein_constants(loss, p1, p2, k)
    mean1, mean2 = np.asarray(mean1, float), np.asarray(mean2, float)
    ss1, ss2 = np.asarray(ss1, float), np.asarray(ss2, float)
    h = 1.0 / (1.0 / p1 + 1.0 / p2)
    if component == 1:
        c0 = consts.c01
        rt = np.sqrt(ss1)
        ratio = ss2 / ss1
        x1, x2 = mean1 / rt, mean2 / rt
        xd = (mean2 - mean1) / rt
    else:
        c0 = consts.c02
        rt = np.sqrt(ss2)
        ratio = ss1 / ss2
        x1, x2 = mean1 / rt, mean2 / rt
        xd = (mean1 - mean2) / rt
    # for component 2 the one/two-mean gates ask for negative means
    sgn = 1.0 if component == 1 else -1.0
    if variant is Variant.STEIN_PLAIN:
        alpha, inner, gate = consts.alpha1, 1.0 + ratio, np.ones(np.shape(ratio), bool)
    elif variant is Variant.STEIN_ONE_MEAN:
        alpha, inner, gate = consts.alpha2, 1.0 + ratio + p1 * x1 ** 2, sgn * x1 > 0
    elif variant is Variant.STEIN_TWO_MEANS:
        alpha = consts.alpha3
        inner = 1.0 + ratio + p1 * x1 ** 2 + p2 * x2 ** 2
        gate = (sgn * x1 > 0) & (sgn * x2 > 0)
    else:
        alpha, inner, gate = consts.alpha4, 1.0 + ratio + h * xd ** 2, xd > 0
    bound = alpha * inner ** (k / 2.0)
    clipped = np.minimum(c0, bound) if component == 1 else np.maximum(c0, bound)
    out = np.where(gate, clipped, c0)
    return float(out) if out.ndim == 0 else out


def baee(s: TwoSampleSummary, t: Target, loss) -> float:
    """``c0i * S_i^{k/2}``."""
    p, ss = (s.p1, s.ss1) if t.component == 1 else (s.p2, s.ss2)
    return baee_constant(loss, p, t.k) * ss ** (t.k / 2.0)


def umvue(s: TwoSampleSummary, t: Target) -> float:
    p, ss = (s.p1, s.ss1) if t.component == 1 else (s.p2, s.ss2)
    return umvue_constant(p, t.k) * ss ** (t.k / 2.0)


def stein_estimate(s: TwoSampleSummary, t: Target, loss, variant) -> float:
    coef = stein_coefficients(variant, t.component, t.k, loss, s.p1, s.p2,
                              s.mean1, s.mean2, s.ss1, s.ss2)
    ss = s.ss1 if t.component == 1 else s.ss2
    return coef * ss ** (t.k / 2.0)


def estimate(s: TwoSampleSummary, t: Target, loss, variant) -> float:
    """Any variant's point estimate of ``sigma_i^k``."""
    variant = Variant.parse(variant)
    if variant is Variant.BAEE:
        return baee(s, t, loss)
    if variant is Variant.UMVUE:
        return umvue(s, t)
    if variant in STEIN_VARIANTS:
        return stein_estimate(s, t, loss, variant)
    from . import bz_bayes

    if variant is Variant.BZ_BOUNDARY:
        return bz_bayes.bz_estimate(s, t, loss)
    return bz_bayes.gb_estimate(s, t, loss)
