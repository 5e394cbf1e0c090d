"""Run records and their CSV / SVG serializations.

CSV is the durable format: UTF-8, comma-separated, one row per
iteration, floats rendered in shortest round-trip decimal so that
parse(emit(records)) == records exactly.  SVG output is a small
self-contained log-scale line plot per selected metric, written without
any plotting dependency so identical inputs give identical bytes.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, fields
from typing import Optional

CSV_HEADER = ("k,objective_error,feasibility,consensus_residual,"
              "w_seminorm,delta_z_norm,env_a,env_b,env_c,env_d,env_e,env_f")

LOG_FLOOR = 1e-16  # plotted values are floored here to keep log10 finite


@dataclass(frozen=True)
class RunRecord:
    """One CSV row: iteration metrics plus envelope pass flags."""

    k: int
    objective_error: Optional[float]
    feasibility: Optional[float]
    consensus_residual: float
    w_seminorm: float
    delta_z_norm: Optional[float]
    env_a: Optional[bool] = None
    env_b: Optional[bool] = None
    env_c: Optional[bool] = None
    env_d: Optional[bool] = None
    env_e: Optional[bool] = None
    env_f: Optional[bool] = None


_FLOAT_FIELDS = ("objective_error", "feasibility", "consensus_residual",
                 "w_seminorm", "delta_z_norm")
_FLAG_FIELDS = ("env_a", "env_b", "env_c", "env_d", "env_e", "env_f")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def _atomic_write(path: str, data: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def records_from_metrics(metrics) -> list:
    """Convert metric rows (metrics.IterationMetrics) into RunRecords."""
    out = []
    for m in metrics:
        env = m.envelope_flags or {}
        out.append(RunRecord(
            k=m.k,
            objective_error=m.objective_error,
            feasibility=m.feasibility,
            consensus_residual=m.consensus_residual,
            w_seminorm=m.w_seminorm,
            delta_z_norm=m.delta_z_norm,
            env_a=env.get("a"), env_b=env.get("b"), env_c=env.get("c"),
            env_d=env.get("d"), env_e=env.get("e"), env_f=env.get("f"),
        ))
    return out


def emit_csv(records, path: str) -> None:
    """Write records atomically; header always present, even when empty."""
    lines = [CSV_HEADER]
    for rec in records:
        lines.append(",".join(
            _fmt(getattr(rec, f.name)) for f in fields(RunRecord)))
    _atomic_write(path, "\n".join(lines) + "\n")


def parse_csv(path: str) -> list:
    """Inverse of emit_csv (exact, thanks to round-trip float text)."""
    with open(path, encoding="utf-8") as handle:
        lines = [ln.rstrip("\n") for ln in handle if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"unexpected CSV header in {path!r}")
    out = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 12:
            raise ValueError(f"malformed CSV row: {ln!r}")
        kwargs = {"k": int(parts[0])}
        for name, raw in zip(_FLOAT_FIELDS, parts[1:6]):
            kwargs[name] = float(raw) if raw else None
        for name, raw in zip(_FLAG_FIELDS, parts[6:]):
            kwargs[name] = bool(int(raw)) if raw else None
        out.append(RunRecord(**kwargs))
    return out


# ---------------------------------------------------------------------------
# SVG plotting

_PLOT_W, _PLOT_H = 640, 420
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 16, 28, 44


def _svg_plot(ks, values, title: str) -> str:
    logs = [math.log10(max(abs(v), LOG_FLOOR)) for v in values]
    x_lo, x_hi = min(ks), max(ks)
    y_lo, y_hi = math.floor(min(logs)), math.ceil(max(logs))
    if x_hi == x_lo:
        x_hi = x_lo + 1
    if y_hi == y_lo:
        y_hi = y_lo + 1
    inner_w = _PLOT_W - _MARGIN_L - _MARGIN_R
    inner_h = _PLOT_H - _MARGIN_T - _MARGIN_B

    def sx(k):
        return _MARGIN_L + inner_w * (k - x_lo) / (x_hi - x_lo)

    def sy(v):
        return _MARGIN_T + inner_h * (y_hi - v) / (y_hi - y_lo)

    points = " ".join(f"{sx(k):.2f},{sy(v):.2f}" for k, v in zip(ks, logs))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_PLOT_W}" '
        f'height="{_PLOT_H}" viewBox="0 0 {_PLOT_W} {_PLOT_H}">',
        f'<rect width="{_PLOT_W}" height="{_PLOT_H}" fill="white"/>',
        f'<text x="{_PLOT_W / 2:.0f}" y="18" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{title}</text>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{inner_w}" '
        f'height="{inner_h}" fill="none" stroke="black"/>',
    ]
    y_step = max(1, (y_hi - y_lo) // 8)
    for tick in range(y_lo, y_hi + 1, y_step):
        yy = sy(tick)
        parts.append(
            f'<line x1="{_MARGIN_L - 4}" y1="{yy:.2f}" x2="{_MARGIN_L}" '
            f'y2="{yy:.2f}" stroke="black"/>')
        parts.append(
            f'<text x="{_MARGIN_L - 8}" y="{yy + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">1e{tick}</text>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        k = x_lo + frac * (x_hi - x_lo)
        xx = sx(k)
        parts.append(
            f'<line x1="{xx:.2f}" y1="{_MARGIN_T + inner_h}" x2="{xx:.2f}" '
            f'y2="{_MARGIN_T + inner_h + 4}" stroke="black"/>')
        parts.append(
            f'<text x="{xx:.2f}" y="{_MARGIN_T + inner_h + 18}" '
            f'text-anchor="middle" font-family="sans-serif" '
            f'font-size="11">{k:.0f}</text>')
    parts.append(
        f'<text x="{_MARGIN_L + inner_w / 2:.0f}" y="{_PLOT_H - 8}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="12">'
        'iteration k</text>')
    parts.append(
        f'<polyline points="{points}" fill="none" stroke="#1f77b4" '
        'stroke-width="1.5"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_svg(records, selections, base_path: str) -> list:
    """Write one self-contained log-scale plot per selected metric.

    `base_path` like "out.svg" yields "out.<metric>.svg" per metric.
    Metrics with no finite values are skipped.  Returns written paths.
    """
    root, ext = os.path.splitext(base_path)
    ext = ext or ".svg"
    written = []
    for metric in selections:
        series = [(rec.k, getattr(rec, metric)) for rec in records
                  if getattr(rec, metric) is not None]
        if not series:
            continue
        ks = [k for k, _ in series]
        vals = [v for _, v in series]
        path = f"{root}.{metric}{ext}"
        _atomic_write(path, _svg_plot(ks, vals, metric))
        written.append(path)
    return written
