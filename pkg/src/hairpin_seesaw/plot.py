"""Dependency-free SVG line charts of fluorescence traces."""
from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

W, H = 800, 400
LEFT, RIGHT, TOP, BOTTOM = 60, 20, 30, 50


def _ticks(lo, hi, n=5):
    return np.linspace(lo, hi, n + 1)


def render_svg(times, values, markers=(), title="", ylabel="fluorescence_norm") -> str:
    """SVG text for ``values`` against ``times`` with vertical markers.

    ``markers`` is a sequence of ``(time, label)``.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if len(t) < 2 or t.max() <= t.min():
        raise ValueError("degenerate time range: need at least two distinct time points")
    y_lo, y_hi = min(0.0, float(y.min())), float(y.max())
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(v):
        return LEFT + (v - t.min()) / (t.max() - t.min()) * pw

    def py(v):
        return TOP + ph - (v - y_lo) / (y_hi - y_lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2:.1f}" y="18" text-anchor="middle" font-size="14">'
           f'{escape(title)}</text>',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for v in _ticks(t.min(), t.max()):
        out.append(f'<text x="{px(v):.1f}" y="{TOP + ph + 16}" text-anchor="middle" '
                   f'font-size="10">{v:g}</text>')
    for v in _ticks(y_lo, y_hi):
        out.append(f'<text x="{LEFT - 6}" y="{py(v) + 3:.1f}" text-anchor="end" '
                   f'font-size="10">{v:.3g}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{H - 10}" text-anchor="middle" '
               f'font-size="12">time (s)</text>')
    out.append(f'<text x="14" y="{TOP + ph / 2:.1f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 14 {TOP + ph / 2:.1f})">{escape(ylabel)}</text>')
    for tm, label in markers:
        x = px(tm)
        out.append(f'<g class="event-marker"><line x1="{x:.2f}" y1="{TOP}" x2="{x:.2f}" '
                   f'y2="{TOP + ph}" stroke="#c33" stroke-dasharray="4 3"/>'
                   f'<text x="{x + 3:.2f}" y="{TOP + 10}" font-size="9" fill="#c33">'
                   f'{escape(label)}</text></g>')
    pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(t, y))
    out.append(f'<polyline fill="none" stroke="#1f5fbf" stroke-width="1.5" points="{pts}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def event_markers(trace, marks=None) -> list[tuple[float, str]]:
    """One marker per injection time (simultaneous additions share one).

    Labelled ``marks`` from the schedule are used when available.
    """
    times = sorted({r.injection.time_s for r in trace.events})
    if marks:
        labelled = {t: lab for t, lab in marks if t > 0}
        extra = [(t, lab) for t, lab in labelled.items() if t not in times]
        return sorted([(t, labelled.get(t, "")) for t in times] + extra)
    groups: dict[float, list[str]] = {}
    for r in trace.events:
        groups.setdefault(r.injection.time_s, []).append(r.injection.species)
    return [(t, "+".join(groups[t])) for t in times]


def emit_plot(trace, path: str | Path, marks=None, title: str = "") -> Path:
    svg = render_svg(trace.times, trace.observable, event_markers(trace, marks), title)
    path = Path(path)
    try:
        path.write_text(svg)
    except OSError as e:
        raise OSError(f"cannot write plot to {path}: {e}") from e
    return path
