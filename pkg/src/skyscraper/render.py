"""Tower diagrams as ASCII text or SVG.

Towers are drawn as stacked rectangles whose horizontal extent is scaled by
base width.  Surgery cuts and newly formed towers are hatched; every diagram
records its hatched base measure exactly, so the picture can be checked
against the surgery log.  Floats appear only as drawing coordinates.

Output is deterministic: same input, same bytes.
"""
from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .distribution import HeightDistribution
from .exact import ExactNum

__all__ = [
    "Column",
    "Diagram",
    "absorb_diagram",
    "distribution_diagram",
    "match_diagrams",
    "rokhlin_diagram",
    "render_ascii",
    "render_svg",
    "surgery_diagrams",
    "transformation_diagram",
]

ZERO = ExactNum(0)
ASCII_WIDTH = 64
ASCII_ROWS = 24
MAX_COLUMNS = 40


@dataclass
class Column:
    height: int
    width: ExactNum
    hatched_width: ExactNum = ZERO  # hatched strip at the left of the column
    hatched_levels: int = 0         # hatched levels end here
    hatched_from: int = 0           # and start here


@dataclass
class Diagram:
    title: str
    columns: list
    hatched_mass: ExactNum = ZERO
    notes: list = field(default_factory=list)
    arrows: list = field(default_factory=list)  # (from column, to column, label)
    truncated: bool = False


def _layout_entries(dist: HeightDistribution, max_towers: int):
    entries = list(dist.explicit.items())
    tail = dist.tail
    if tail is not None:
        j = tail.start
        while len(entries) < max_towers:
            entries.append((tail.height(j), tail.width(j)))
            j += 1
    return entries, tail is not None


def distribution_diagram(dist: HeightDistribution, title: str, max_towers: int = 12) -> Diagram:
    entries, has_tail = _layout_entries(dist, max_towers)
    cols = [Column(h, w) for h, w in entries]
    notes = ["tail continues to the right"] if has_tail else []
    return Diagram(title, cols, notes=notes, truncated=has_tail)


def transformation_diagram(T, max_towers: int = 12) -> Diagram:
    cons = T.conservative
    if cons is None:
        d = Diagram("transformation", [])
    else:
        d = distribution_diagram(cons.heights, "transformation", max_towers)
        d.notes.insert(0, f"base measure {cons.base_measure}")
    dis = T.dissipative
    for label, w in dis.components:
        d.notes.append(f"shift component {label}: x -> x + {w}")
    if dis.infinite_tail is not None:
        d.notes.append(f"countably many shift components of width {dis.infinite_tail}")
    return d


def surgery_diagrams(before: HeightDistribution, after: HeightDistribution, steps, max_towers: int = 12):
    """Pre and post diagrams; cut strips (pre) and new towers (post) are hatched."""
    cut_width, cut_levels, pre_mass = {}, {}, ZERO
    new_width, post_mass = {}, ZERO
    for step in steps:
        for cut in step.cuts:
            cut_width[cut.k] = cut_width.get(cut.k, ZERO) + cut.width
            cut_levels[cut.k] = max(cut_levels.get(cut.k, 0), cut.q * step.n)
            pre_mass = pre_mass + cut.width * cut.q
        new_width[step.n] = new_width.get(step.n, ZERO) + step.added_mass
        post_mass = post_mass + step.added_mass
    heights = set(cut_width) | set(new_width)

    def entries(dist):
        rows, has_tail = _layout_entries(dist, max_towers)
        seen = {h for h, _ in rows}
        rows += [(h, dist.width(h)) for h in sorted(heights - seen) if dist.width(h)]
        return rows, has_tail

    pre_rows, pre_tail = entries(before)
    pre = Diagram("before surgery", [Column(h, w, cut_width.get(h, ZERO), cut_levels.get(h, 0)) for h, w in pre_rows],
                  pre_mass, truncated=pre_tail)
    post_rows, post_tail = entries(after)
    post = Diagram("after surgery", [Column(h, w, new_width.get(h, ZERO), h if h in new_width else 0) for h, w in post_rows],
                   post_mass, truncated=post_tail)
    for d in (pre, post):
        d.notes.append(f"hatched base measure {d.hatched_mass}")
    return pre, post


def match_diagrams(P1, P2, force_through: int):
    """Forced towers of two matched presentations; equal widths height by height."""
    out = []
    for name, P in (("side 1", P1), ("side 2", P2)):
        cols = [Column(h, P.distribution.width(h)) for h in range(1, force_through + 1) if P.distribution.width(h)]
        d = Diagram(f"{name}: towers of height <= {force_through}", cols, truncated=True)
        d.notes.append(f"base measure {P.limit_base_measure()} in the limit")
        out.append(d)
    return out


def rokhlin_diagram(N: int, heights: HeightDistribution | None, complement, notes=(), max_towers: int = 12) -> Diagram:
    """Towers of the Rokhlin presentation; the uncovered top levels are hatched."""
    cols = []
    truncated = False
    if heights is not None:
        entries, truncated = _layout_entries(heights, max_towers)
        cols = [Column(h, w, w, h, N * (h // N)) if h % N else Column(h, w) for h, w in entries]
    d = Diagram(f"Rokhlin set of order {N}", cols, complement, list(notes), truncated=truncated)
    d.notes.append(f"complement measure {complement} (hatched: levels above the last full block of {N})")
    return d


def absorb_diagram(m, max_towers: int = 12) -> Diagram:
    """Source towers with the patch arrow from the tower tops into the shift domain."""
    d = transformation_diagram(m.source, max_towers)
    d.title = "absorption"
    if d.columns:
        d.arrows.append((len(d.columns) - 1, None, "tops -> A + d"))
    d.notes.append(f"B measure {m.data.get('B_measure')}, certificate {m.certificate.bound}")
    return d


# ---------------------------------------------------------------------------
# ASCII


def _char_widths(cols):
    total = sum(float(c.width) for c in cols) or 1.0
    return [max(1, round(float(c.width) / total * ASCII_WIDTH)) for c in cols]


def render_ascii(diagrams) -> str:
    if isinstance(diagrams, Diagram):
        diagrams = [diagrams]
    lines = []
    for d in diagrams:
        lines.append(f"== {d.title} ==")
        if not d.columns:
            lines.append("(empty diagram: no towers)")
        elif len(d.columns) > MAX_COLUMNS:
            lines.append(f"(summary: {len(d.columns)} tower classes, too many to draw)")
            for c in d.columns:
                lines.append(f"  height {c.height}: width {c.width}")
        else:
            widths = _char_widths(d.columns)
            top = min(max(c.height for c in d.columns), ASCII_ROWS)
            for level in range(top - 1, -1, -1):
                row = []
                for c, cw in zip(d.columns, widths):
                    if level >= c.height:
                        row.append(" " * cw)
                        continue
                    hatch = round(float(c.hatched_width) / float(c.width) * cw) if c.hatched_width else 0
                    if c.hatched_width and hatch == 0:
                        hatch = 1
                    fill = "/" if c.hatched_from <= level < c.hatched_levels else "#"
                    body = fill * hatch + "#" * (cw - hatch)
                    if level == top - 1 and c.height > top:
                        body = "^" * cw
                    row.append(body)
                lines.append(" ".join(row).rstrip())
            lines.append(" ".join("-" * cw for cw in widths))
            # heights that do not fit their column are shown as "."
            labels = (str(c.height) if len(str(c.height)) <= cw else "." for c, cw in zip(d.columns, widths))
            lines.append(" ".join(t.ljust(cw) for t, cw in zip(labels, widths)).rstrip())
        for a, b, label in d.arrows:
            target = "shift domain" if b is None else f"column {b}"
            lines.append(f"arrow: column {a} -> {target} ({label})")
        if d.truncated:
            lines.append("...")
        for note in d.notes:
            lines.append(note)
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# SVG

_W, _H, _PAD = 600.0, 320.0, 20.0


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def render_svg(diagrams) -> str:
    if isinstance(diagrams, Diagram):
        diagrams = [diagrams]
    panel = _H + 3 * _PAD + 14 * 4
    svg = ET.Element("svg", {
        "xmlns": "http://www.w3.org/2000/svg",
        "width": _fmt(_W + 2 * _PAD),
        "height": _fmt(panel * max(1, len(diagrams))),
    })
    defs = ET.SubElement(svg, "defs")
    pat = ET.SubElement(defs, "pattern", {"id": "hatch", "width": "6", "height": "6",
                                          "patternUnits": "userSpaceOnUse", "patternTransform": "rotate(45)"})
    ET.SubElement(pat, "line", {"x1": "0", "y1": "0", "x2": "0", "y2": "6", "stroke": "black", "stroke-width": "2"})
    marker = ET.SubElement(defs, "marker", {"id": "arrow", "markerWidth": "8", "markerHeight": "8",
                                            "refX": "6", "refY": "3", "orient": "auto"})
    ET.SubElement(marker, "path", {"d": "M0,0 L6,3 L0,6 z"})
    for i, d in enumerate(diagrams):
        g = ET.SubElement(svg, "g", {"transform": f"translate(0,{_fmt(i * panel)})",
                                     "data-hatched-mass": str(d.hatched_mass)})
        ET.SubElement(g, "text", {"x": _fmt(_PAD), "y": _fmt(_PAD), "font-size": "14"}).text = d.title
        if not d.columns:
            ET.SubElement(g, "text", {"x": _fmt(_PAD), "y": _fmt(3 * _PAD), "font-size": "12"}).text = \
                "empty diagram: no towers"
            continue
        cols = d.columns[:MAX_COLUMNS]
        total = sum(float(c.width) for c in cols) or 1.0
        gap = 4.0
        scale_x = (_W - gap * (len(cols) - 1)) / total
        top = max(c.height for c in cols)
        level_h = min(20.0, _H / min(top, 64))
        base_y = 2 * _PAD + _H
        x = _PAD
        centers = []
        for c in cols:
            w = float(c.width) * scale_x
            shown = min(c.height, 64)
            y = base_y - shown * level_h
            ET.SubElement(g, "rect", {"x": _fmt(x), "y": _fmt(y), "width": _fmt(w), "height": _fmt(shown * level_h),
                                      "fill": "#dddddd", "stroke": "black", "stroke-width": "0.5",
                                      "data-height": str(c.height), "data-width": str(c.width)})
            for level in range(1, shown):
                ly = base_y - level * level_h
                ET.SubElement(g, "line", {"x1": _fmt(x), "y1": _fmt(ly), "x2": _fmt(x + w), "y2": _fmt(ly),
                                          "stroke": "#888888", "stroke-width": "0.3"})
            if c.hatched_width:
                hw = float(c.hatched_width) * scale_x
                hl = min(c.hatched_levels, shown)
                hf = min(c.hatched_from, hl)
                ET.SubElement(g, "rect", {"x": _fmt(x), "y": _fmt(base_y - hl * level_h), "width": _fmt(hw),
                                          "height": _fmt((hl - hf) * level_h), "fill": "url(#hatch)", "stroke": "black",
                                          "stroke-width": "0.5", "data-hatched-width": str(c.hatched_width)})
            ET.SubElement(g, "text", {"x": _fmt(x), "y": _fmt(base_y + 12), "font-size": "9"}).text = str(c.height)
            centers.append((x + w / 2, y))
            x += w + gap
        for a, b, label in d.arrows:
            x1, y1 = centers[a]
            x2, y2 = (centers[b] if b is not None else (_W + _PAD, base_y))
            ET.SubElement(g, "line", {"x1": _fmt(x1), "y1": _fmt(y1), "x2": _fmt(x2), "y2": _fmt(y2),
                                      "stroke": "red", "marker-end": "url(#arrow)"})
            ET.SubElement(g, "text", {"x": _fmt((x1 + x2) / 2), "y": _fmt(min(y1, y2) - 4), "font-size": "10",
                                      "fill": "red"}).text = label
        y = base_y + 28
        for note in d.notes + (["tail continues to the right"] if d.truncated and "tail continues to the right" not in d.notes else []):
            ET.SubElement(g, "text", {"x": _fmt(_PAD), "y": _fmt(y), "font-size": "11"}).text = note
            y += 14
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(svg, encoding="unicode") + "\n"
