"""Convergence tables: order fitting, CSV round trip and an SVG log-log plot."""
from dataclasses import dataclass, field
import csv
import math
import warnings

import numpy as np

COLUMNS = ("h", "n_e", "dofs", "l2", "energy", "energy_tilde", "iters", "seconds")
ERROR_COLUMNS = ("l2", "energy", "energy_tilde")


def fit_order(hs, errs):
    """Least-squares slope of ``log(err)`` against ``log(h)``.

    Nonpositive or non-finite errors are dropped with a warning.
    """
    hs = np.asarray(hs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    keep = (errs > 0) & np.isfinite(errs) & (hs > 0)
    if not keep.all():
        warnings.warn(f"fit_order: {int((~keep).sum())} nonpositive entries excluded")
    if keep.sum() < 2:
        raise ValueError("fit_order needs at least two positive (h, error) pairs")
    slope, _ = np.polyfit(np.log(hs[keep]), np.log(errs[keep]), 1)
    return float(slope)


@dataclass
class ConvergenceRow:
    h: float
    n_e: int
    dofs: int
    l2: float
    energy: float
    energy_tilde: float
    iters: int = 0
    seconds: float = 0.0

    def as_tuple(self):
        return tuple(getattr(self, c) for c in COLUMNS)


@dataclass
class ConvergenceReport:
    label: str = ""
    m: int = None
    rows: list = field(default_factory=list)

    def add(self, **kw):
        row = ConvergenceRow(**kw)
        for c in ERROR_COLUMNS:
            if not getattr(row, c) >= 0:
                raise ValueError(f"{c} error must be nonnegative")
        self.rows.append(row)
        return row

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def orders(self, last=3):
        """Fitted orders per error column over the finest ``last`` rows (needs >= 3 rows)."""
        if len(self.rows) < 3:
            return {}
        rows = sorted(self.rows, key=lambda r: -r.h)[-last:]
        hs = [r.h for r in rows]
        return {c: fit_order(hs, [getattr(r, c) for r in rows]) for c in ERROR_COLUMNS}


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v)) if math.isnan(v) or math.isinf(v) else f"{float(v):.17g}"


def write_csv(report, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in report.rows:
            w.writerow([_fmt(v) for v in r.as_tuple()])


def read_csv(path, label=""):
    rep = ConvergenceReport(label=label)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header is None or tuple(header) != COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        for rec in rd:
            vals = dict(zip(COLUMNS, rec))
            rep.rows.append(ConvergenceRow(
                h=float(vals["h"]), n_e=int(vals["n_e"]), dofs=int(vals["dofs"]),
                l2=float(vals["l2"]), energy=float(vals["energy"]),
                energy_tilde=float(vals["energy_tilde"]), iters=int(vals["iters"]),
                seconds=float(vals["seconds"])))
    return rep


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def write_svg(series, path, xlabel="degrees of freedom", ylabel="L2 error", title=""):
    """Log-log line plot; ``series`` maps a label to ``(x, y)`` arrays."""
    W, H, pad = 560, 420, 60
    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, float) for _, y in series.values()])
    pos = (xs > 0) & (ys > 0)
    lx0, lx1 = np.floor(np.log10(xs[pos].min())), np.ceil(np.log10(xs[pos].max()))
    ly0, ly1 = np.floor(np.log10(ys[pos].min())), np.ceil(np.log10(ys[pos].max()))
    lx1, ly1 = max(lx1, lx0 + 1), max(ly1, ly0 + 1)

    def px(v):
        return pad + (np.log10(v) - lx0) / (lx1 - lx0) * (W - 2 * pad)

    def py(v):
        return H - pad - (np.log10(v) - ly0) / (ly1 - ly0) * (H - 2 * pad)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect x="{pad}" y="{pad}" width="{W - 2 * pad}" height="{H - 2 * pad}" '
           f'fill="none" stroke="black"/>']
    for e in range(int(lx0), int(lx1) + 1):
        x = px(10.0 ** e)
        out.append(f'<text x="{x:.1f}" y="{H - pad + 16}" text-anchor="middle">1e{e}</text>')
    for e in range(int(ly0), int(ly1) + 1):
        y = py(10.0 ** e)
        out.append(f'<text x="{pad - 6}" y="{y + 4:.1f}" text-anchor="end">1e{e}</text>')
    out.append(f'<text x="{W / 2}" y="{H - 14}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="16" y="{H / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {H / 2})">{ylabel}</text>')
    if title:
        out.append(f'<text x="{W / 2}" y="{pad - 20}" text-anchor="middle">{title}</text>')
    for i, (name, (x, y)) in enumerate(series.items()):
        col = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(x, y) if a > 0 and b > 0)
        out.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1.5"/>')
        out.append(f'<text x="{W - pad - 90}" y="{pad + 16 * (i + 1)}" fill="{col}">{name}</text>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")
