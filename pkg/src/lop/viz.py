"""Ternary diagrams of aggregated posteriors, written as standalone SVG.

Two classes ``a`` and ``b`` are shown against the summed posterior of all
remaining classes. Whether ``a`` or ``b`` wins is decidable from the three
parts; a remaining class wins for certain only if even an even split of
the remainder over the ``G - 2`` other classes beats both ``a`` and ``b``.
Compositions where neither is decidable form the grey uncertain region.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .exceptions import DataError

SQRT3_2 = np.sqrt(3.0) / 2.0
WIDTH, HEIGHT = 600, 560
SIDE = 480.0
ORIGIN = (60.0, 500.0)
GRID_STEP = 0.2
PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#000000", "#ff7f0e",
    "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22",
)
REGIONS = ("a", "b", "rest", "uncertain")


@dataclass(frozen=True)
class TernaryPoint:
    composition: tuple
    true_class: object = None

    @property
    def uv(self):
        return to_planar(self.composition)


@dataclass
class TernaryDiagram:
    pair: tuple
    n_classes: int
    points: list = field(default_factory=list)
    class_names: tuple = ()
    regions: dict = field(default_factory=dict)
    segments: list = field(default_factory=list)

    def __post_init__(self):
        if not self.class_names:
            self.class_names = tuple(str(g) for g in range(1, self.n_classes + 1))
        if not self.regions:
            self.regions = region_polygons(self.n_classes)
        if not self.segments:
            self.segments = decision_segments(self.n_classes)


def to_planar(comp):
    """Barycentric ``(p_a, p_b, p_rest)`` to the unit-triangle frame.

    ``a`` sits at (0, 0), ``b`` at (1, 0) and the remainder at the apex.
    """
    c = np.asarray(comp, dtype=float)
    u = c[..., 1] + 0.5 * c[..., 2]
    v = SQRT3_2 * c[..., 2]
    return u, v


def ternary_compose(posteriors, a, b, true_class=None) -> TernaryPoint:
    """Collapse a posterior vector to ``(p_a, p_b, sum of the others)``; ``a, b`` are 1-based."""
    p = np.asarray(posteriors, dtype=float)
    if a == b:
        raise DataError("the two classes of a ternary diagram must differ")
    if not (1 <= a <= p.size and 1 <= b <= p.size):
        raise DataError(f"classes {a}, {b} outside 1..{p.size}")
    if abs(p.sum() - 1.0) > 1e-9:
        raise DataError(f"posterior sums to {p.sum()!r}, not 1")
    pa, pb = float(p[a - 1]), float(p[b - 1])
    rest = np.delete(p, [a - 1, b - 1])
    return TernaryPoint((pa, pb, float(rest.sum())), true_class)


def rest_max_range(p_rest, n_classes):
    """Smallest and largest possible top posterior among the ``G - 2`` other classes."""
    return p_rest / (n_classes - 2), p_rest


def classify_regions(comps, n_classes) -> np.ndarray:
    """Region name for each composition row.

    The three certain regions are open; everything else, including their
    shared boundaries, is uncertain.
    """
    if n_classes < 3:
        raise DataError("ternary diagrams need at least three classes")
    c = np.atleast_2d(np.asarray(comps, dtype=float))
    pa, pb, pr = c[:, 0], c[:, 1], c[:, 2]
    out = np.full(len(c), "uncertain", dtype=object)
    out[(pa > pb) & (pa > pr)] = "a"
    out[(pb > pa) & (pb > pr)] = "b"
    out[np.maximum(pa, pb) < pr / (n_classes - 2)] = "rest"
    return out


def region_polygons(n_classes) -> dict:
    """Barycentric vertex lists of the four regions (uncertain is empty for ``G = 3``)."""
    if n_classes < 3:
        raise DataError("ternary diagrams need at least three classes")
    m = n_classes - 2
    third = (1 / 3, 1 / 3, 1 / 3)
    mid_ab, mid_ac, mid_bc = (0.5, 0.5, 0.0), (0.5, 0.0, 0.5), (0.0, 0.5, 0.5)
    rest_a = (1 / (m + 1), 0.0, m / (m + 1))
    rest_b = (0.0, 1 / (m + 1), m / (m + 1))
    rest_mid = (1 / (m + 2), 1 / (m + 2), m / (m + 2))
    regions = {
        "a": [(1.0, 0.0, 0.0), mid_ab, third, mid_ac],
        "b": [(0.0, 1.0, 0.0), mid_bc, third, mid_ab],
        "rest": [(0.0, 0.0, 1.0), rest_a, rest_mid, rest_b],
        "uncertain": [mid_ac, third, mid_bc, rest_b, rest_mid, rest_a],
    }
    if m == 1:
        regions["uncertain"] = []
    return regions


def uncertainty_region(n_classes) -> list:
    return region_polygons(n_classes)["uncertain"]


def decision_segments(n_classes) -> list:
    """Boundary segments (pairs of barycentric points) drawn dashed."""
    m = n_classes - 2
    third = (1 / 3, 1 / 3, 1 / 3)
    rest_mid = (1 / (m + 2), 1 / (m + 2), m / (m + 2))
    segs = [((0.5, 0.5, 0.0), rest_mid), (third, (0.5, 0.0, 0.5)), (third, (0.0, 0.5, 0.5))]
    if m > 1:
        segs += [((1 / (m + 1), 0.0, m / (m + 1)), rest_mid), ((0.0, 1 / (m + 1), m / (m + 1)), rest_mid)]
    return segs


def polygon_area(vertices) -> float:
    """Planar area of a barycentric polygon (the full simplex has area sqrt(3)/4)."""
    if len(vertices) < 3:
        return 0.0
    u, v = to_planar(np.asarray(vertices, dtype=float))
    return 0.5 * abs(float(np.dot(u, np.roll(v, -1)) - np.dot(v, np.roll(u, -1))))


def make_diagram(posteriors, true_classes, a, b, class_names=None) -> TernaryDiagram:
    """Diagram for classes ``a`` and ``b`` (1-based columns of ``posteriors``)."""
    P = np.atleast_2d(np.asarray(posteriors, dtype=float))
    G = P.shape[1]
    if G < 3:
        raise DataError("ternary diagrams need at least three classes")
    names = tuple(class_names) if class_names is not None else tuple(str(g) for g in range(1, G + 1))
    points = [ternary_compose(p, a, b, t) for p, t in zip(P, true_classes)]
    return TernaryDiagram((a, b), G, points, names)


# --- SVG -------------------------------------------------------------------


def _xy(comp):
    u, v = to_planar(comp)
    return ORIGIN[0] + SIDE * float(u), ORIGIN[1] - SIDE * float(v)


def _fmt(x):
    return f"{x:.3f}"


def _attrs(attrs):
    # trailing underscore escapes keywords such as class_
    return "".join(f' {k.rstrip("_").replace("_", "-")}="{v}"' for k, v in attrs.items())


def _poly(vertices, **attrs):
    pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in map(_xy, vertices))
    extra = _attrs(attrs)
    return f'<polygon points="{pts}"{extra}/>'


def _line(p, q, **attrs):
    (x1, y1), (x2, y2) = _xy(p), _xy(q)
    extra = _attrs(attrs)
    return f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}"{extra}/>'


def _text(x, y, s, **attrs):
    extra = _attrs(attrs)
    return f'<text x="{_fmt(x)}" y="{_fmt(y)}"{extra}>{escape(str(s))}</text>'


def _legend_classes(diagram):
    present = {str(p.true_class) for p in diagram.points}
    return [n for n in diagram.class_names if n in present] or list(diagram.class_names)


def diagram_elements(diagram: TernaryDiagram) -> list[str]:
    """SVG elements of one diagram in a 600x560 frame (no enclosing ``<svg>``)."""
    a, b = diagram.pair
    name_a, name_b = diagram.class_names[a - 1], diagram.class_names[b - 1]
    els = []
    for key in ("a", "b", "rest"):
        els.append(_poly(diagram.regions[key], fill="#ffffff", stroke="none", class_=f"region-{key}"))
    if diagram.regions["uncertain"]:
        els.append(_poly(diagram.regions["uncertain"], fill="#c8c8c8", stroke="none", class_="uncertain"))
    for i in range(1, int(round(1 / GRID_STEP))):
        t = i * GRID_STEP
        els.append(_line((t, 1 - t, 0.0), (t, 0.0, 1 - t), stroke="#999999", stroke_width="0.8",
                         stroke_dasharray="3,3", class_="gridline"))
        x, y = _xy((t, 0.0, 1 - t))
        els.append(_text(x - 8, y + 4, f"{t:.1f}", font_size="11", text_anchor="end", class_="gridlabel"))
    for p, q in diagram.segments:
        els.append(_line(p, q, stroke="#333333", stroke_width="1.2", stroke_dasharray="6,4", class_="decision"))
    els.append(_poly([(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)], fill="none",
                     stroke="#000000", stroke_width="1.5", class_="frame"))
    (xa, ya), (xb, yb), (xc, yc) = _xy((1, 0, 0)), _xy((0, 1, 0)), _xy((0, 0, 1))
    els.append(_text(xa, ya + 24, name_a, font_size="14", text_anchor="middle", class_="vertex-label"))
    els.append(_text(xb, yb + 24, name_b, font_size="14", text_anchor="middle", class_="vertex-label"))
    rest_label = "rest" if diagram.n_classes > 3 else next(
        n for g, n in enumerate(diagram.class_names, 1) if g not in (a, b))
    els.append(_text(xc, yc - 10, rest_label, font_size="14", text_anchor="middle", class_="vertex-label"))
    colors = {n: PALETTE[i % len(PALETTE)] for i, n in enumerate(diagram.class_names)}
    for p in diagram.points:
        x, y = _xy(p.composition)
        color = colors.get(str(p.true_class), "#777777")
        els.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3" fill="{color}" '
                   f'fill-opacity="0.8" class="point"/>')
    for i, name in enumerate(_legend_classes(diagram)):
        y = 24 + 18 * i
        els.append(f'<circle cx="20" cy="{y}" r="5" fill="{colors[name]}" class="legend"/>')
        els.append(_text(32, y + 4, name, font_size="12", class_="legend"))
    return els


def _svg(width, height, body):
    head = ('<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">\n')
    return head + "\n".join(body) + "\n</svg>\n"


def ternary_svg(diagram: TernaryDiagram) -> str:
    return _svg(WIDTH, HEIGHT, diagram_elements(diagram))


def render_ternary(diagram: TernaryDiagram, out) -> str:
    """Write the diagram as SVG to ``out`` and return the document."""
    doc = ternary_svg(diagram)
    Path(out).write_text(doc, encoding="utf-8")
    return doc


def matrix_layout(n_classes):
    """``(row, col, a, b)`` for each class pair: column class ``a`` at the left vertex, row class ``b`` right."""
    return [(b - 2, a - 1, a, b) for b in range(2, n_classes + 1) for a in range(1, b)]


def matrix_svg(posteriors, true_classes, class_names=None) -> str:
    P = np.atleast_2d(np.asarray(posteriors, dtype=float))
    G = P.shape[1]
    if G < 3:
        raise DataError("ternary diagrams need at least three classes")
    names = tuple(class_names) if class_names is not None else tuple(str(g) for g in range(1, G + 1))
    margin = 40
    body = []
    for row, col, a, b in matrix_layout(G):
        d = make_diagram(P, true_classes, a, b, names)
        body.append(f'<g transform="translate({margin + col * WIDTH},{row * HEIGHT})" class="cell-{a}-{b}">')
        body.extend(diagram_elements(d))
        body.append("</g>")
    n = G - 1
    for col in range(n):
        body.append(_text(margin + col * WIDTH + WIDTH / 2, n * HEIGHT + 28, names[col],
                          font_size="18", text_anchor="middle", class_="pair-label"))
    for row in range(n):
        body.append(_text(margin / 2, row * HEIGHT + HEIGHT / 2, names[row + 1],
                          font_size="18", text_anchor="middle", class_="pair-label"))
    return _svg(margin + n * WIDTH, n * HEIGHT + margin, body)


def render_matrix(posteriors, true_classes, out, class_names=None) -> str:
    doc = matrix_svg(posteriors, true_classes, class_names)
    Path(out).write_text(doc, encoding="utf-8")
    return doc


def read_posterior_dump(path, role=None):
    """Read a posterior dump CSV; returns ``(posteriors, true_classes, roles)``."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = [c for c in (reader.fieldnames or []) if c.startswith("p_")]
        if not cols or "true_class" not in reader.fieldnames:
            raise DataError(f"{path}: expected columns true_class and p_1..p_G")
        cols.sort(key=lambda c: int(c[2:]))
        P, labels, roles = [], [], []
        for rec in reader:
            if role is not None and rec.get("role") != role:
                continue
            try:
                P.append([float(rec[c]) for c in cols])
            except ValueError:
                raise DataError(f"{path}: non-numeric posterior in row {reader.line_num}") from None
            labels.append(rec["true_class"])
            roles.append(rec.get("role", ""))
    if not P:
        raise DataError(f"{path}: no rows")
    return np.array(P), labels, roles
