"""First- and total-order Sobol indices from Saltelli-design outputs."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .designs import format_number


@dataclass
class SobolEstimate:
    first_order: np.ndarray
    total_order: np.ndarray
    variance: float
    degenerate: bool


def _estimate(y_a, y_b, y_ab):
    """Vectorised over a leading bootstrap axis: y_a, y_b (..., N), y_ab (..., N, k)."""
    n = y_a.shape[-1]
    pooled = np.concatenate([y_a, y_b], axis=-1)
    var = pooled.var(axis=-1, ddof=1)
    diff = y_ab - y_a[..., None]
    v_first = (y_b[..., None] * diff).sum(axis=-2) / n
    e_total = (diff * diff).sum(axis=-2) / (2.0 * n)
    return v_first, e_total, var


def sobol_indices(y_a, y_b, y_ab) -> SobolEstimate:
    """Saltelli first-order and Jansen total-order estimators.

    ``S_i = mean(f(B) (f(A_B^i) - f(A))) / V`` and
    ``T_i = mean((f(A) - f(A_B^i))^2) / (2 V)``, with V the sample variance of
    the pooled A and B outputs. Zero variance gives all-zero indices and
    ``degenerate=True``.
    """
    y_a = np.asarray(y_a, dtype=np.float64)
    y_b = np.asarray(y_b, dtype=np.float64)
    y_ab = np.asarray(y_ab, dtype=np.float64)
    if y_ab.ndim != 2 or y_ab.shape[0] != y_a.shape[0] or y_b.shape != y_a.shape:
        raise ValueError("expected y_a, y_b of shape (N,) and y_ab of shape (N, k)")
    if y_a.shape[0] < 2:
        raise ValueError("need N >= 2")
    v_first, e_total, var = _estimate(y_a, y_b, y_ab)
    k = y_ab.shape[1]
    if not var > 0.0:
        return SobolEstimate(np.zeros(k), np.zeros(k), 0.0, True)
    return SobolEstimate(v_first / var, e_total / var, float(var), False)


@dataclass
class IndexRow:
    indicator: str
    parameter: str
    first_order: float
    first_ci: float
    total_order: float
    total_ci: float
    significant: bool
    raw_first: float
    raw_total: float
    degenerate: bool = False


CSV_COLUMNS = ("indicator", "parameter", "first_order", "first_ci", "total_order", "total_ci", "significant")


def bootstrap_significance(
    y_a,
    y_b,
    y_ab,
    names,
    indicator: str = "y",
    n_boot: int = 200,
    level: float = 0.95,
    seed: int = 0,
    chunk: int = 50,
) -> list[IndexRow]:
    """Percentile bootstrap over design rows; indices whose interval contains 0 become 0.

    ``first_ci`` / ``total_ci`` are half-widths of the percentile intervals.
    ``significant`` is true when at least one of the two indices survives.
    """
    if n_boot < 100:
        raise ValueError("n_boot must be >= 100")
    y_a = np.asarray(y_a, dtype=np.float64)
    y_b = np.asarray(y_b, dtype=np.float64)
    y_ab = np.asarray(y_ab, dtype=np.float64)
    point = sobol_indices(y_a, y_b, y_ab)
    k = y_ab.shape[1]
    if point.degenerate:
        return [
            IndexRow(indicator, names[i], 0.0, 0.0, 0.0, 0.0, False, 0.0, 0.0, True) for i in range(k)
        ]
    n = y_a.shape[0]
    rng = np.random.default_rng(seed)
    firsts, totals = [], []
    done = 0
    while done < n_boot:
        m = min(chunk, n_boot - done)
        idx = rng.integers(0, n, size=(m, n))
        v_first, e_total, var = _estimate(y_a[idx], y_b[idx], y_ab[idx])
        safe = np.where(var > 0.0, var, np.nan)[:, None]
        firsts.append(v_first / safe)
        totals.append(e_total / safe)
        done += m
    firsts = np.vstack(firsts)
    totals = np.vstack(totals)
    alpha = (1.0 - level) / 2.0
    qs = [100 * alpha, 100 * (1 - alpha)]
    f_lo, f_hi = np.nanpercentile(firsts, qs, axis=0)
    t_lo, t_hi = np.nanpercentile(totals, qs, axis=0)
    rows = []
    for i in range(k):
        f_sig = not (f_lo[i] <= 0.0 <= f_hi[i])
        t_sig = not (t_lo[i] <= 0.0 <= t_hi[i])
        rows.append(
            IndexRow(
                indicator=indicator,
                parameter=names[i],
                first_order=float(point.first_order[i]) if f_sig else 0.0,
                first_ci=float((f_hi[i] - f_lo[i]) / 2.0),
                total_order=float(point.total_order[i]) if t_sig else 0.0,
                total_ci=float((t_hi[i] - t_lo[i]) / 2.0),
                significant=bool(f_sig or t_sig),
                raw_first=float(point.first_order[i]),
                raw_total=float(point.total_order[i]),
            )
        )
    return rows


def split_outputs(y, n_base: int, k: int):
    """Split outputs of a ``[A; B; A_B^(1..k)]`` design into (y_A, y_B, y_AB)."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] != n_base * (k + 2):
        raise ValueError(f"expected {n_base * (k + 2)} outputs, got {y.shape[0]}")
    y_a = y[:n_base]
    y_b = y[n_base : 2 * n_base]
    y_ab = y[2 * n_base :].reshape(k, n_base).T
    return y_a, y_b, y_ab


def index_table_csv(rows: list[IndexRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow(
            [
                r.indicator,
                r.parameter,
                format_number(r.first_order),
                format_number(r.first_ci),
                format_number(r.total_order),
                format_number(r.total_ci),
                format_number(r.significant),
            ]
        )
    return buf.getvalue()
