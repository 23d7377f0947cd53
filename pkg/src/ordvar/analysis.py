"""Data ingestion, a normality check and tables of point estimates."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy import special, stats

from . import __version__
from .errors import DomainError, OrdvarError
from .estimators import Target, TwoSampleSummary, Variant, estimate
from .numerics import kolmogorov_cdf

KS_NOTES = {
    "exact": ("p-value from the finite-sample Kolmogorov distribution treating the "
              "fitted mean and sd as known; Lilliefors critical values would be more conservative"),
    "asymptotic": ("p-value from the limiting Kolmogorov distribution treating the "
                   "fitted mean and sd as known; Lilliefors critical values would be more conservative"),
}
BUNDLED = {"bengaluru": "bengaluru.txt", "hyderabad": "hyderabad.txt"}


@dataclass(frozen=True)
class Series:
    values: tuple
    label: str = ""

    def __len__(self):
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class KSResult:
    statistic: float
    p_value: float
    n: int
    method: str = "exact"

    @property
    def note(self) -> str:
        return KS_NOTES[self.method]


def parse_series(text: str, label: str = "") -> Series:
    values = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            v = float(line)
        except ValueError:
            raise DomainError(f"{label or 'input'}: line {lineno}: not a number: {line!r}") from None
        if not math.isfinite(v):
            raise DomainError(f"{label or 'input'}: line {lineno}: value must be finite")
        values.append(v)
    if not values:
        raise DomainError(f"{label or 'input'}: no data values")
    return Series(tuple(values), label)


def load_series(path) -> Series:
    """One number per line; blank lines and lines starting with ``#`` are skipped."""
    with open(path) as fh:
        return parse_series(fh.read(), str(path))


def bundled_series(name: str) -> Series:
    """One of the packaged rainfall series, ``bengaluru`` or ``hyderabad``."""
    if name not in BUNDLED:
        raise DomainError(f"unknown bundled series {name!r}; expected one of {sorted(BUNDLED)}")
    text = resources.files("ordvar.data").joinpath(BUNDLED[name]).read_text()
    return parse_series(text, name)


def summarize(s1: Series, s2: Series) -> TwoSampleSummary:
    for s in (s1, s2):
        if len(s) < 2:
            raise DomainError(f"series {s.label!r} needs at least 2 values")
    x1, x2 = s1.as_array(), s2.as_array()
    m1, m2 = float(np.mean(x1)), float(np.mean(x2))
    ss1 = math.fsum((x1 - m1) ** 2)
    ss2 = math.fsum((x2 - m2) ** 2)
    return TwoSampleSummary(len(x1), len(x2), m1, m2, ss1, ss2)


def ks_normal_test(s: Series, method: str = "exact") -> KSResult:
    """Kolmogorov-Smirnov distance to the normal fitted by mean and sd (n-1).

    ``method="exact"`` uses the finite-``n`` null distribution of ``D``;
    ``"asymptotic"`` uses ``1 - K(sqrt(n) D)``.
    """
    if method not in KS_NOTES:
        raise ValueError(f"unknown KS method {method!r}")
    x = np.sort(s.as_array())
    n = len(x)
    if n < 3:
        raise DomainError("KS test needs at least 3 values")
    sd = float(np.std(x, ddof=1))
    if not sd > 0:
        raise DomainError("KS test needs a non-constant series")
    z = (x - np.mean(x)) / sd
    cdf = special.ndtr(z)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))
    if method == "exact":
        p = float(stats.kstwo.sf(d, n))
    else:
        p = 1.0 - kolmogorov_cdf(math.sqrt(n) * d)
    return KSResult(d, min(max(p, 0.0), 1.0), n, method)


@dataclass(frozen=True)
class TableCell:
    loss: str
    variant: str
    value: float | None
    note: str = ""


@dataclass
class EstimatorTable:
    component: int
    k: float
    losses: list
    variants: list
    cells: list = field(default_factory=list)

    def cell(self, loss_name: str, variant) -> TableCell:
        v = Variant.parse(variant).value
        for c in self.cells:
            if c.loss == loss_name and c.variant == v:
                return c
        raise KeyError((loss_name, v))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# ordvar {__version__} component={self.component} k={self.k:g}\n")
            w = csv.writer(fh)
            w.writerow(["component", "k", "loss", "variant", "value", "note"])
            for c in self.cells:
                val = "" if c.value is None else f"{c.value:.15g}"
                w.writerow([self.component, f"{self.k:g}", c.loss, c.variant, val, c.note])


def estimator_table(s: TwoSampleSummary, k: float, losses, variants, component: int = 1) -> EstimatorTable:
    """Point estimates of ``sigma_component^k`` for each (loss, variant) pair.

    Cells that cannot be computed are kept with ``value=None`` and a note.
    """
    t = Target(component, k)
    variants = [Variant.parse(v) for v in variants]
    table = EstimatorTable(component, float(k), [l.name for l in losses], [v.value for v in variants])
    for loss in losses:
        for v in variants:
            if v is Variant.GEN_BAYES and loss.kind not in ("quadratic", "entropy", "symmetric"):
                table.cells.append(TableCell(loss.name, v.value, None, "unavailable for this loss"))
                continue
            try:
                val = estimate(s, t, loss, v)
                table.cells.append(TableCell(loss.name, v.value, float(val)))
            except (OrdvarError, ValueError, ArithmeticError) as exc:
                table.cells.append(TableCell(loss.name, v.value, None, f"error: {exc}"))
    return table
