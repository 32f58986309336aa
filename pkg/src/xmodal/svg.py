"""Minimal deterministic SVG line charts (ROC curves, dream channels)."""

from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(v):
    return f"{v:.2f}"


def line_chart(series, title="", xlabel="", ylabel="", width=480, height=320, xlim=None, ylim=None):
    """Render ``series`` (a list of ``(label, xs, ys)``) as an SVG document."""
    pad_l, pad_r, pad_t, pad_b = 56, 16, 28, 44
    xs_all = [float(x) for _, xs, _ in series for x in xs]
    ys_all = [float(y) for _, _, ys in series for y in ys]
    x0, x1 = xlim or (min(xs_all, default=0.0), max(xs_all, default=1.0))
    y0, y1 = ylim or (min(ys_all, default=0.0), max(ys_all, default=1.0))
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b

    def px(x):
        return pad_l + (float(x) - x0) / (x1 - x0) * pw

    def py(y):
        return pad_t + (1.0 - (float(y) - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<text x="{pad_l + pw / 2:.1f}" y="{height - 8}" text-anchor="middle" font-size="11">{escape(xlabel)}</text>',
        f'<text x="14" y="{pad_t + ph / 2:.1f}" text-anchor="middle" font-size="11" '
        f'transform="rotate(-90 14 {pad_t + ph / 2:.1f})">{escape(ylabel)}</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        xv, yv = x0 + frac * (x1 - x0), y0 + frac * (y1 - y0)
        out.append(f'<text x="{_fmt(px(xv))}" y="{pad_t + ph + 14}" text-anchor="middle" font-size="10">{xv:.3g}</text>')
        out.append(f'<text x="{pad_l - 4}" y="{_fmt(py(yv) + 3)}" text-anchor="end" font-size="10">{yv:.3g}</text>')
    for k, (label, xs, ys) in enumerate(series):
        colour = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{pad_l + 8}" y="{pad_t + 14 + 13 * k}" font-size="10" fill="{colour}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
