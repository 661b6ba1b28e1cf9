"""Self-contained SVG boxplots of replication estimates."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

METHOD_COLORS = {"iv": "#1f77b4", "baseline": "#d62728"}
METHOD_LABELS = {"iv": "IV-based", "baseline": "unadjusted"}


def box_stats(values) -> dict | None:
    """Median, quartiles and 1.5*IQR whiskers over the finite values."""
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    n_inf = int(np.sum(np.isinf(v)))
    v = v[np.isfinite(v)]
    if v.size == 0:
        return {"n": 0, "n_inf": n_inf}
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    return {
        "n": int(v.size),
        "n_inf": n_inf,
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "whisker_lo": float(inside.min()),
        "whisker_hi": float(inside.max()),
        "outliers": v[(v < lo_fence) | (v > hi_fence)],
    }


def _num(x):
    return f"{x:.2f}"


def boxplot_svg(groups, truth: float, title: str = "", width: int = 640, height: int = 400) -> str:
    """Render boxes for ``groups``: a list of (n, method, values) triples.

    Boxes are ordered as given and grouped by n along the x axis. The truth
    is drawn as a dashed horizontal line. Infinite estimates are not drawn;
    their count is printed above the corresponding box.
    """
    stats = [(n, m, box_stats(vals)) for n, m, vals in groups]
    left, right, top, bottom = 60, 20, 50, 50
    pw, ph = width - left - right, height - top - bottom

    ends = [truth] if np.isfinite(truth) else []
    for _, _, s in stats:
        if s["n"]:
            ends += [s["whisker_lo"], s["whisker_hi"]]
    ymin, ymax = (min(ends), max(ends)) if ends else (0.0, 1.0)
    if ymax - ymin < 1e-12:
        ymin, ymax = ymin - 1, ymax + 1
    pad = 0.05 * (ymax - ymin)
    ymin, ymax = ymin - pad, ymax + pad

    def ypix(v):
        return top + ph * (ymax - v) / (ymax - ymin)

    sizes = list(dict.fromkeys(n for n, _, _ in stats))
    methods = list(dict.fromkeys(m for _, m, _ in stats))
    slot = pw / max(len(sizes), 1)
    bw = min(40.0, 0.8 * slot / max(len(methods), 1))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in np.linspace(ymin, ymax, 6):
        y = ypix(t)
        out.append(f'<line x1="{left - 4}" y1="{_num(y)}" x2="{left}" y2="{_num(y)}" stroke="black"/>')
        out.append(f'<text x="{left - 6}" y="{_num(y + 4)}" text-anchor="end">{t:.3g}</text>')

    for n, m, s in stats:
        gi, mi = sizes.index(n), methods.index(m)
        cx = left + slot * (gi + 0.5) + (mi - (len(methods) - 1) / 2) * bw * 1.1
        color = METHOD_COLORS.get(m, "#555555")
        g = [f'<g class="box" data-n="{n}" data-method="{escape(str(m))}">']
        if s["n"]:
            x0 = cx - bw / 2
            g.append(f'<line x1="{_num(cx)}" y1="{_num(ypix(s["whisker_lo"]))}" x2="{_num(cx)}" '
                     f'y2="{_num(ypix(s["q1"]))}" stroke="{color}"/>')
            g.append(f'<line x1="{_num(cx)}" y1="{_num(ypix(s["q3"]))}" x2="{_num(cx)}" '
                     f'y2="{_num(ypix(s["whisker_hi"]))}" stroke="{color}"/>')
            g.append(f'<rect x="{_num(x0)}" y="{_num(ypix(s["q3"]))}" width="{_num(bw)}" '
                     f'height="{_num(max(ypix(s["q1"]) - ypix(s["q3"]), 0.5))}" '
                     f'fill="{color}" fill-opacity="0.35" stroke="{color}"/>')
            g.append(f'<line x1="{_num(x0)}" y1="{_num(ypix(s["median"]))}" x2="{_num(x0 + bw)}" '
                     f'y2="{_num(ypix(s["median"]))}" stroke="{color}" stroke-width="2"/>')
            for o in s["outliers"]:
                if ymin <= o <= ymax:
                    g.append(f'<circle cx="{_num(cx)}" cy="{_num(ypix(o))}" r="1.5" fill="{color}"/>')
        if s["n_inf"]:
            g.append(f'<text x="{_num(cx)}" y="{top - 6}" text-anchor="middle" fill="{color}">'
                     f'inf: {s["n_inf"]}</text>')
        g.append("</g>")
        out.extend(g)

    for gi, n in enumerate(sizes):
        x = left + slot * (gi + 0.5)
        out.append(f'<text x="{_num(x)}" y="{top + ph + 18}" text-anchor="middle">n = {n}</text>')

    if np.isfinite(truth) and ymin <= truth <= ymax:
        y = _num(ypix(truth))
        out.append(f'<line class="truth" x1="{left}" y1="{y}" x2="{left + pw}" y2="{y}" '
                   f'stroke="red" stroke-dasharray="6,4" stroke-width="1.5"/>')

    lx = left + 10
    for k, m in enumerate(methods):
        color = METHOD_COLORS.get(m, "#555555")
        ly = height - 14
        out.append(f'<rect x="{lx}" y="{ly - 9}" width="10" height="10" fill="{color}" fill-opacity="0.5"/>')
        out.append(f'<text x="{lx + 14}" y="{ly}">{escape(METHOD_LABELS.get(m, str(m)))}</text>')
        lx += 110
    out.append(f'<text x="{lx}" y="{height - 14}" fill="red">- - - truth</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def study_boxplots(summary) -> dict[str, str]:
    """One SVG per efficacy index from a StudySummary."""
    truths = {"ein": summary.truth.ein_true, "nne": summary.truth.nne_true, "nnt": summary.truth.nnt_true}
    figures = {}
    for index, truth in truths.items():
        groups = []
        for n in summary.config.sample_sizes:
            reps = [r for r in summary.replications if r.n == n]
            iv = [r.estimate[index] for r in reps if r.index_status[index] == "ok"]
            base = [r.baseline[index] for r in reps if r.status != "failed"]
            groups.append((n, "iv", iv))
            groups.append((n, "baseline", base))
        figures[index] = boxplot_svg(groups, truth, title=f"{index.upper()} (truth {truth:.3g})")
    return figures
