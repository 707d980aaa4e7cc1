"""Deterministic report artifacts: results.csv, summary.json and two standalone SVG charts."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from ..errors import IoFailure
from .harness import NEGATIVE, EvalReport

CSV_COLUMNS = ("method", "image_id", "attack", "iteration", "r", "detected", "psnr_after_attack")
_PALETTE = ("#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666")


def _num(v, digits: int = 6) -> str:
    if v is None:
        return ""
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.{digits}f}"


def results_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for s in report.samples:
        w.writerow([s.method, s.image_id, s.attack, s.iteration, _num(s.r),
                    int(s.detected), _num(s.psnr_after_attack, 4)])
    return buf.getvalue()


def _clean(obj):
    """JSON-safe copy: non-finite floats become null, floats are rounded for stable bytes."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return round(v, 10) if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def summary_json(report: EvalReport) -> str:
    return json.dumps(_clean(report.to_dict()), indent=2, sort_keys=True) + "\n"


def _svg(width: int, height: int, body: list[str], title: str) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">')
    return "\n".join([head, f"<title>{escape(title)}</title>",
                      f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
                      *body, "</svg>"]) + "\n"


def bar_chart_svg(report: EvalReport) -> str:
    """Grouped bars of DR per attack (groups) and method (colours) with Wilson whiskers."""
    cells = [c for c in report.cells if c.attack != NEGATIVE]
    attacks = list(dict.fromkeys(c.attack for c in cells))
    methods = list(dict.fromkeys(c.method for c in cells))
    bw, gap, left, top, ph = 28, 24, 50, 30, 220
    width = left + max(1, len(attacks)) * (len(methods) * bw + gap) + 140
    height = top + ph + 60
    body = [f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="#000"/>',
            f'<line x1="{left}" y1="{top + ph}" x2="{width - 140}" y2="{top + ph}" stroke="#000"/>']
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = top + ph * (1 - tick)
        body.append(f'<text x="{left - 6}" y="{y + 4:.1f}" font-size="10" text-anchor="end">{tick:.2f}</text>')
    for ai, a in enumerate(attacks):
        gx = left + gap / 2 + ai * (len(methods) * bw + gap)
        for mi, m in enumerate(methods):
            c = next((c for c in cells if c.attack == a and c.method == m), None)
            if c is None:
                continue
            x = gx + mi * bw
            h = ph * c.dr
            colour = _PALETTE[mi % len(_PALETTE)]
            body.append(f'<rect class="bar" x="{x:.1f}" y="{top + ph - h:.3f}" width="{bw - 4}" '
                        f'height="{h:.3f}" fill="{colour}"><title>{escape(m)} / {escape(a)}: '
                        f'{c.dr:.3f}</title></rect>')
            lo, hi = c.ci
            cx = x + (bw - 4) / 2
            body.append(f'<line x1="{cx:.1f}" y1="{top + ph * (1 - lo):.3f}" x2="{cx:.1f}" '
                        f'y2="{top + ph * (1 - hi):.3f}" stroke="#000"/>')
        body.append(f'<text x="{gx + len(methods) * bw / 2:.1f}" y="{top + ph + 16}" font-size="11" '
                    f'text-anchor="middle">{escape(a)}</text>')
    for mi, m in enumerate(methods):
        y = top + 14 * mi
        body.append(f'<rect x="{width - 130}" y="{y}" width="10" height="10" fill="{_PALETTE[mi % len(_PALETTE)]}"/>')
        body.append(f'<text x="{width - 115}" y="{y + 9}" font-size="11">{escape(m)}</text>')
    body.append(f'<text x="{left}" y="18" font-size="13">Detection rate by attack</text>')
    return _svg(int(width), int(height), body, "Detection rate by attack")


def _quartiles(x):
    q1, med, q3 = np.percentile(x, [25, 50, 75])
    return float(np.min(x)), float(q1), float(med), float(q3), float(np.max(x))


def box_plot_svg(report: EvalReport) -> str:
    """Distribution of per-(image, attack) detection rates for each method."""
    methods = list(dict.fromkeys(c.method for c in report.cells if c.attack != NEGATIVE))
    left, top, ph, bw = 50, 30, 220, 60
    width = left + max(1, len(methods)) * (bw + 20) + 20
    height = top + ph + 50
    body = [f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="#000"/>']

    def Y(v):
        return top + ph * (1 - v)

    for i, m in enumerate(methods):
        rates = report.per_image_rates(m)
        if rates.size == 0:
            continue
        lo, q1, med, q3, hi = _quartiles(rates)
        x = left + 20 + i * (bw + 20)
        c = _PALETTE[i % len(_PALETTE)]
        body += [
            f'<line x1="{x + bw / 2:.1f}" y1="{Y(lo):.3f}" x2="{x + bw / 2:.1f}" y2="{Y(hi):.3f}" stroke="#000"/>',
            f'<rect class="box" x="{x}" y="{Y(q3):.3f}" width="{bw}" height="{max(Y(q1) - Y(q3), 0.5):.3f}" '
            f'fill="{c}" stroke="#000"/>',
            f'<line x1="{x}" y1="{Y(med):.3f}" x2="{x + bw}" y2="{Y(med):.3f}" stroke="#000" stroke-width="2"/>',
            f'<text x="{x + bw / 2:.1f}" y="{top + ph + 16}" font-size="11" text-anchor="middle">{escape(m)}</text>',
        ]
    body.append(f'<text x="{left}" y="18" font-size="13">Per-image detection rate</text>')
    return _svg(int(width), int(height), body, "Per-image detection rate")


def emit_report(report: EvalReport, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    files = {
        "results.csv": results_csv(report),
        "summary.json": summary_json(report),
        "detection_rates.svg": bar_chart_svg(report),
        "detection_boxplot.svg": box_plot_svg(report),
    }
    paths = {}
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            p = out / name
            p.write_text(text, encoding="utf-8", newline="\n")
            paths[name] = p
    except OSError as exc:
        raise IoFailure(f"cannot write report to {out}: {exc}") from exc
    return paths


def summary_table(report: EvalReport) -> str:
    """Plain-text table of DR per method and attack plus mean DR and FPR."""
    attacks = list(dict.fromkeys(c.attack for c in report.cells))
    methods = list(dict.fromkeys(c.method for c in report.cells))
    head = ["method", *attacks, "mean_dr", "fpr"]
    lines = ["  ".join(f"{h:>14}" for h in head)]
    for m in methods:
        row = [m]
        for a in attacks:
            try:
                row.append(f"{report.cell(m, a).dr:.3f}")
            except KeyError:
                row.append("-")
        row.append(f"{report.mean_dr.get(m, float('nan')):.3f}")
        fpr = report.fpr.get(m)
        row.append("-" if fpr is None else f"{fpr['fpr']:.3f}")
        lines.append("  ".join(f"{v:>14}" for v in row))
    return "\n".join(lines) + "\n"
