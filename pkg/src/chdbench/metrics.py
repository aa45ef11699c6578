"""Confusion counts and the seven-metric classification performance matrix."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

METRICS = ("acc", "tpr", "tnr", "pprec", "nprec", "oprev", "eprev")
COUNTS = ("tp", "fp", "fn", "tn")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: float
    fp: float
    fn: float
    tn: float

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> float:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def positives(self) -> float:
        return self.tp + self.fn

    @property
    def negatives(self) -> float:
        return self.fp + self.tn


@dataclass(frozen=True)
class PerformanceMatrix:
    """Counts plus derived rates. A rate is ``None`` when its denominator is 0.

    For aggregated matrices ``n`` is the number of matrices averaged and
    ``excluded`` counts, per metric, how many had that metric undefined.
    """

    counts: ConfusionCounts
    acc: float | None
    tpr: float | None
    tnr: float | None
    pprec: float | None
    nprec: float | None
    oprev: float | None
    eprev: float | None
    n: int = 1
    excluded: dict[str, int] = field(default_factory=dict)

    def metric(self, name: str) -> float | None:
        if name not in METRICS:
            raise KeyError(f"unknown metric {name!r}")
        return getattr(self, name)

    def as_row(self) -> dict[str, float | int | None]:
        row = {k: getattr(self.counts, k) for k in COUNTS}
        row["total"] = self.counts.total
        row.update({m: getattr(self, m) for m in METRICS})
        row["n"] = self.n
        return row


def _ratio(num: float, den: float) -> float | None:
    return num / den if den > 0 else None


def confusion(actual: Sequence[int] | np.ndarray, predicted: Sequence[int] | np.ndarray) -> ConfusionCounts:
    a = np.asarray(actual)
    p = np.asarray(predicted)
    if a.shape != p.shape or a.ndim != 1:
        raise ValueError(f"length mismatch: {a.shape} vs {p.shape}")
    if a.size == 0:
        raise ValueError("need at least one tested case")
    if not (np.isin(a, (0, 1)).all() and np.isin(p, (0, 1)).all()):
        raise ValueError("labels must be binary 0/1")
    a = a.astype(bool)
    p = p.astype(bool)
    tp = int(np.count_nonzero(a & p))
    fn = int(np.count_nonzero(a & ~p))
    fp = int(np.count_nonzero(~a & p))
    tn = int(a.size - tp - fn - fp)
    return ConfusionCounts(tp, fp, fn, tn)


def performance(c: ConfusionCounts) -> PerformanceMatrix:
    total = c.total
    if total <= 0:
        raise ValueError("grand total must be positive")
    return PerformanceMatrix(
        counts=c,
        acc=(c.tp + c.tn) / total,
        tpr=_ratio(c.tp, c.tp + c.fn),
        tnr=_ratio(c.tn, c.fp + c.tn),
        pprec=_ratio(c.tp, c.tp + c.fp),
        nprec=_ratio(c.tn, c.fn + c.tn),
        oprev=(c.tp + c.fn) / total,
        eprev=(c.tp + c.fp) / total,
    )


def evaluate(actual, predicted) -> PerformanceMatrix:
    return performance(confusion(actual, predicted))


def aggregate(matrices: Sequence[PerformanceMatrix]) -> PerformanceMatrix:
    """Macro average: mean counts and mean of each defined per-matrix rate."""
    if not matrices:
        raise ValueError("cannot aggregate an empty list")
    totals = {round(m.counts.total, 9) for m in matrices}
    if len(totals) > 1:
        raise ValueError(f"matrices have different grand totals: {sorted(totals)}")
    counts = ConfusionCounts(
        *(float(np.mean([getattr(m.counts, k) for m in matrices])) for k in COUNTS)
    )
    means: dict[str, float | None] = {}
    excluded: dict[str, int] = {}
    for name in METRICS:
        vals = [getattr(m, name) for m in matrices]
        defined = [v for v in vals if v is not None]
        missing = len(vals) - len(defined)
        if missing:
            excluded[name] = missing
        means[name] = float(np.mean(defined)) if defined else None
    return PerformanceMatrix(counts=counts, **means, n=len(matrices), excluded=excluded)


def _pct(v: float | None) -> str:
    return "undef" if v is None else f"{100 * v:.2f}"


def render_table(m: PerformanceMatrix, title: str | None = None) -> str:
    """Aligned text layout: Actual rows x Predicted columns with the rate margins."""
    c = m.counts

    def num(v: float) -> str:
        return f"{v:.2f}" if v != int(v) else f"{int(v)}"

    rows = [
        ("", "Pred. Positive", "Pred. Negative", "Total", "True Rate %"),
        ("Actual Positive", num(c.tp), num(c.fn), num(c.positives), _pct(m.tpr)),
        ("Actual Negative", num(c.fp), num(c.tn), num(c.negatives), _pct(m.tnr)),
        ("Total", num(c.tp + c.fp), num(c.fn + c.tn), num(c.total), _pct(m.oprev)),
        ("Precision %", _pct(m.pprec), _pct(m.nprec), _pct(m.eprev), _pct(m.acc)),
    ]
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    lines = [title] if title else []
    for r in rows:
        lines.append("  ".join(cell.rjust(w) if i else cell.ljust(w) for i, (cell, w) in enumerate(zip(r, widths))))
    return "\n".join(lines) + "\n"


def matrix_csv(m: PerformanceMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["", "predicted_positive", "predicted_negative", "total", "true_rate"])
    c = m.counts
    fmt = lambda v: "" if v is None else repr(float(v))  # noqa: E731
    writer.writerow(["actual_positive", fmt(c.tp), fmt(c.fn), fmt(c.positives), fmt(m.tpr)])
    writer.writerow(["actual_negative", fmt(c.fp), fmt(c.tn), fmt(c.negatives), fmt(m.tnr)])
    writer.writerow(["total", fmt(c.tp + c.fp), fmt(c.fn + c.tn), fmt(c.total), fmt(m.oprev)])
    writer.writerow(["precision", fmt(m.pprec), fmt(m.nprec), fmt(m.eprev), fmt(m.acc)])
    return buf.getvalue()


def to_dict(m: PerformanceMatrix) -> dict:
    d = asdict(m)
    d["counts"]["total"] = m.counts.total
    return d
