"""Self-contained SVG grouped bar chart of per-segment MAE."""

from __future__ import annotations

from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def grouped_bar_svg(categories, series: dict, title: str = "", y_label: str = "MAE (deg)",
                    metadata: dict | None = None, width: int = 960, height: int = 420) -> str:
    """``series`` maps a legend name to one value per category."""
    categories = list(categories)
    names = list(series)
    for n in names:
        if len(series[n]) != len(categories):
            raise ValueError(f"series {n!r} has {len(series[n])} values for {len(categories)} categories")
    left, right, top, bottom = 60, 20, 40, 110
    pw, ph = width - left - right, height - top - bottom
    vals = [float(v) for n in names for v in series[n] if v == v]
    vmax = max(vals + [1e-9]) * 1.1
    group_w = pw / max(len(categories), 1)
    bar_w = 0.8 * group_w / max(len(names), 1)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">']
    if metadata:
        out.append("<desc>" + escape("; ".join(f"{k}={v}" for k, v in metadata.items())) + "</desc>")
    out.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>')
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    # axes and ticks
    out.append(f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>')
    for k in range(6):
        v = vmax * k / 5
        y = top + ph - ph * k / 5
        out.append(f'<line x1="{left - 4}" y1="{y:.1f}" x2="{left}" y2="{y:.1f}" stroke="black"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end">{v:.1f}</text>')
    out.append(f'<text x="14" y="{top + ph / 2:.1f}" transform="rotate(-90 14 {top + ph / 2:.1f})" '
               f'text-anchor="middle">{escape(y_label)}</text>')
    for i, cat in enumerate(categories):
        gx = left + i * group_w + 0.1 * group_w
        for j, n in enumerate(names):
            v = float(series[n][i])
            if v != v:
                continue
            h = ph * v / vmax
            out.append(f'<rect x="{gx + j * bar_w:.1f}" y="{top + ph - h:.1f}" width="{bar_w:.1f}" '
                       f'height="{h:.1f}" fill="{PALETTE[j % len(PALETTE)]}"><title>{escape(n)} '
                       f'{escape(str(cat))}: {v:.3f}</title></rect>')
        cx = left + (i + 0.5) * group_w
        out.append(f'<text x="{cx:.1f}" y="{top + ph + 12}" text-anchor="end" '
                   f'transform="rotate(-40 {cx:.1f} {top + ph + 12})">{escape(str(cat))}</text>')
    for j, n in enumerate(names):
        x = left + pw - 120
        y = top + 14 * j
        out.append(f'<rect x="{x}" y="{y}" width="10" height="10" fill="{PALETTE[j % len(PALETTE)]}"/>')
        out.append(f'<text x="{x + 14}" y="{y + 9}">{escape(n)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
