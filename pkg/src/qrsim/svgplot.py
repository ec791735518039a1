"""Plain-text SVG renderings of the experiment report.

Hand-rolled SVG keeps the toolchain free of plotting dependencies; the
output is deterministic text so reruns stay byte-identical.
"""

from __future__ import annotations

import numpy as np

from .ecg import LEAD_NAMES


def _color(v: float, vmax: float) -> str:
    """Blue -> teal -> yellow ramp on [0, vmax]."""
    t = 0.0 if vmax <= 0 else min(max(v / vmax, 0.0), 1.0)
    r = int(255 * min(1.0, max(0.0, 2.0 * t - 0.7) / 0.6 + 0.1 * t))
    g = int(255 * min(1.0, 0.15 + 0.85 * t))
    b = int(255 * max(0.0, 0.55 - 0.45 * t) + 90 * (1 - t))
    return f"rgb({min(r,255)},{min(g,255)},{min(b,255)})"


def _svg(width: int, height: int, body: list) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">')
    style = ('<style>text{font-family:monospace;font-size:11px;}'
             '.t{font-size:13px;font-weight:bold;}</style>')
    return "\n".join([head, style, *body, "</svg>"]) + "\n"


def heatmap_svg(row_names: list, col_names: list, values: np.ndarray,
                title: str) -> str:
    """Colored matrix with per-cell values (rows x columns)."""
    cell, left, top = 46, 210, 50
    w = left + cell * len(col_names) + 60
    h = top + cell * len(row_names) + 30
    body = [f'<text class="t" x="10" y="25">{title}</text>']
    vmax = float(values.max()) if values.size else 1.0
    for j, cn in enumerate(col_names):
        body.append(f'<text x="{left + j*cell + 6}" y="{top - 8}">{cn}</text>')
    for i, rn in enumerate(row_names):
        y = top + i * cell
        body.append(f'<text x="8" y="{y + cell/2 + 4}">{rn}</text>')
        for j in range(len(col_names)):
            v = float(values[i, j])
            x = left + j * cell
            body.append(f'<rect x="{x}" y="{y}" width="{cell-2}" height="{cell-2}" '
                        f'fill="{_color(v, vmax)}"/>')
            body.append(f'<text x="{x+3}" y="{y + cell/2 + 4}" '
                        f'fill="black">{v:.2f}</text>')
    return _svg(w, h, body)


def traces_svg(baseline_leads: dict, scenario_leads: dict, sample_period: float,
               title: str) -> str:
    """12-lead overlay, scenario (red) against baseline (grey), 3 x 4 grid."""
    pw, ph, pad = 260, 150, 14
    cols, rows = 4, 3
    w = cols * (pw + pad) + pad
    h = rows * (ph + pad) + pad + 30
    n = max(len(next(iter(baseline_leads.values()))),
            len(next(iter(scenario_leads.values()))))
    amp = max(1e-12, max(float(np.abs(np.asarray(tr)).max())
                         for d in (baseline_leads, scenario_leads) for tr in d.values()))
    body = [f'<text class="t" x="10" y="20">{title}</text>']

    def poly(trace, x0, y0, color):
        pts = []
        for k, v in enumerate(np.asarray(trace)):
            x = x0 + (k / max(1, n - 1)) * pw
            y = y0 + ph / 2 - (v / amp) * (ph / 2 - 6)
            pts.append(f"{x:.2f},{y:.2f}")
        return (f'<polyline fill="none" stroke="{color}" stroke-width="1.2" '
                f'points="{" ".join(pts)}"/>')

    for idx, name in enumerate(LEAD_NAMES):
        r, c = divmod(idx, cols)
        x0 = pad + c * (pw + pad)
        y0 = 30 + pad + r * (ph + pad)
        body.append(f'<rect x="{x0}" y="{y0}" width="{pw}" height="{ph}" '
                    f'fill="none" stroke="#bbb"/>')
        body.append(f'<line x1="{x0}" y1="{y0+ph/2}" x2="{x0+pw}" y2="{y0+ph/2}" '
                    f'stroke="#eee"/>')
        body.append(f'<text x="{x0+4}" y="{y0+14}">{name}</text>')
        body.append(poly(baseline_leads[name], x0, y0, "#888888"))
        body.append(poly(scenario_leads[name], x0, y0, "#cc2222"))
    return _svg(w, h, body)
