"""Deterministic SVG rendering and table re-extraction.

Every datum element carries provenance attributes (data-row, data-col,
data-value, and a JSON data-cells payload with the full row) so the encoded
table can be recovered exactly from the document. Rendering is a pure
function of the spec: same spec, same bytes.
"""

from __future__ import annotations

import json
import math
import re
import xml.etree.ElementTree as ET
from typing import Optional

from .charts import ChartSpec, ChartType, Grouping, Layout, histogram_bins
from .errors import ParseError
from .records import SCHEMA_VERSION
from .tables import Column, ColumnKind, DataTable, fmt_num

WIDTH, HEIGHT = 640, 400
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 64, 24, 44, 52
LEGEND_WIDTH = 132
BACKGROUND = "#ffffff"
AXIS_COLOR = "#333333"
GRID_COLOR = "#dddddd"


def _f(x: float) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


def _esc(s: str) -> str:
    return (
        s.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _tag(name: str, attrs: list[tuple[str, str]], text: Optional[str] = None) -> str:
    inner = " ".join(f'{k}="{_esc(str(v))}"' for k, v in attrs)
    if text is None:
        return f"<{name} {inner}/>"
    return f"<{name} {inner}>{_esc(text)}</{name}>"


def _serialize_cell(cell, kind: ColumnKind) -> str:
    return fmt_num(cell) if kind is ColumnKind.NUMERIC else str(cell)


class _Scale:
    """Linear value -> pixel mapping, optionally inverted."""

    def __init__(self, d0: float, d1: float, r0: float, r1: float):
        self.d0, self.d1, self.r0, self.r1 = d0, d1, r0, r1

    def __call__(self, v: float) -> float:
        span = self.d1 - self.d0
        t = 0.5 if span == 0 else (v - self.d0) / span
        return self.r0 + t * (self.r1 - self.r0)


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    """Tick values using 1/2/5 x 10^m steps, aiming for 4 to 8 ticks."""
    span = hi - lo
    if span <= 0:
        span = abs(hi) if hi != 0 else 1.0
        lo, hi = lo - span / 2, lo + span / 2
    best = None
    m0 = math.floor(math.log10(span / 8)) if span > 0 else 0
    for m in (m0, m0 + 1, m0 + 2):
        for f in (1.0, 2.0, 5.0):
            step = f * 10.0 ** m
            t0 = math.ceil(lo / step - 1e-9)
            t1 = math.floor(hi / step + 1e-9)
            count = t1 - t0 + 1
            if count < 2:
                continue
            score = abs(count - target) + (0 if 4 <= count <= 8 else 100)
            if best is None or score < best[0]:
                best = (score, step, t0, t1)
    _, step, t0, t1 = best
    return [k * step for k in range(t0, t1 + 1)]


def _tick_label(v: float) -> str:
    return f"{v:.6g}"


class _Frame:
    """Shared plot geometry plus element accumulation."""

    def __init__(self, spec: ChartSpec, legend: bool):
        self.spec = spec
        self.elements: list[str] = []
        right = MARGIN_RIGHT + (LEGEND_WIDTH if legend else 0)
        self.x0 = MARGIN_LEFT
        self.x1 = WIDTH - right
        self.y0 = MARGIN_TOP
        self.y1 = HEIGHT - MARGIN_BOTTOM

    def add(self, name: str, attrs: list[tuple[str, str]], text: Optional[str] = None):
        self.elements.append(_tag(name, attrs, text))

    def datum_attrs(self, row_idx: int, col_idx: int) -> list[tuple[str, str]]:
        table = self.spec.table
        cells = [
            _serialize_cell(c, col.kind)
            for c, col in zip(table.rows[row_idx], table.columns)
        ]
        return [
            ("data-row", str(row_idx)),
            ("data-col", str(col_idx)),
            ("data-value", cells[col_idx]),
            ("data-cells", json.dumps(cells, separators=(",", ":"))),
        ]

    def title_and_labels(self, skip_axis_labels: bool = False):
        spec = self.spec
        if spec.title:
            self.add(
                "text",
                [
                    ("x", _f(WIDTH / 2)),
                    ("y", "24"),
                    ("text-anchor", "middle"),
                    ("font-family", "sans-serif"),
                    ("font-size", "16"),
                    ("fill", AXIS_COLOR),
                    ("data-role", "title"),
                ],
                spec.title,
            )
        if skip_axis_labels:
            return
        if spec.x_label:
            self.add(
                "text",
                [
                    ("x", _f((self.x0 + self.x1) / 2)),
                    ("y", _f(HEIGHT - 12)),
                    ("text-anchor", "middle"),
                    ("font-family", "sans-serif"),
                    ("font-size", "12"),
                    ("fill", AXIS_COLOR),
                    ("data-role", "x-label"),
                ],
                spec.x_label,
            )
        if spec.y_label:
            self.add(
                "text",
                [
                    ("x", "16"),
                    ("y", _f((self.y0 + self.y1) / 2)),
                    ("text-anchor", "middle"),
                    ("font-family", "sans-serif"),
                    ("font-size", "12"),
                    ("fill", AXIS_COLOR),
                    ("transform", f"rotate(-90 16 {_f((self.y0 + self.y1) / 2)})"),
                    ("data-role", "y-label"),
                ],
                spec.y_label,
            )

    def value_axis(self, scale: _Scale, ticks: list[float], axis: str):
        """Ticks plus gridlines on the value axis ('y' vertical, 'x' horizontal)."""
        for v in ticks:
            p = scale(v)
            if axis == "y":
                self.add(
                    "line",
                    [
                        ("x1", _f(self.x0)),
                        ("y1", _f(p)),
                        ("x2", _f(self.x1)),
                        ("y2", _f(p)),
                        ("stroke", GRID_COLOR),
                        ("stroke-width", "1"),
                    ],
                )
                self.add(
                    "text",
                    [
                        ("x", _f(self.x0 - 6)),
                        ("y", _f(p + 4)),
                        ("text-anchor", "end"),
                        ("font-family", "sans-serif"),
                        ("font-size", "11"),
                        ("fill", AXIS_COLOR),
                        ("data-role", "tick"),
                        ("data-axis", "y"),
                        ("data-tick-value", _tick_label(v)),
                        ("data-pos", _f(p)),
                    ],
                    _tick_label(v),
                )
            else:
                self.add(
                    "line",
                    [
                        ("x1", _f(p)),
                        ("y1", _f(self.y0)),
                        ("x2", _f(p)),
                        ("y2", _f(self.y1)),
                        ("stroke", GRID_COLOR),
                        ("stroke-width", "1"),
                    ],
                )
                self.add(
                    "text",
                    [
                        ("x", _f(p)),
                        ("y", _f(self.y1 + 16)),
                        ("text-anchor", "middle"),
                        ("font-family", "sans-serif"),
                        ("font-size", "11"),
                        ("fill", AXIS_COLOR),
                        ("data-role", "tick"),
                        ("data-axis", "x"),
                        ("data-tick-value", _tick_label(v)),
                        ("data-pos", _f(p)),
                    ],
                    _tick_label(v),
                )

    def band_axis(self, labels: list[str], axis: str):
        n = max(1, len(labels))
        if axis == "x":
            bw = (self.x1 - self.x0) / n
            for i, lab in enumerate(labels):
                self.add(
                    "text",
                    [
                        ("x", _f(self.x0 + (i + 0.5) * bw)),
                        ("y", _f(self.y1 + 16)),
                        ("text-anchor", "middle"),
                        ("font-family", "sans-serif"),
                        ("font-size", "11"),
                        ("fill", AXIS_COLOR),
                        ("data-role", "band"),
                        ("data-axis", "x"),
                    ],
                    lab,
                )
        else:
            bh = (self.y1 - self.y0) / n
            for i, lab in enumerate(labels):
                self.add(
                    "text",
                    [
                        ("x", _f(self.x0 - 6)),
                        ("y", _f(self.y0 + (i + 0.5) * bh + 4)),
                        ("text-anchor", "end"),
                        ("font-family", "sans-serif"),
                        ("font-size", "11"),
                        ("fill", AXIS_COLOR),
                        ("data-role", "band"),
                        ("data-axis", "y"),
                    ],
                    lab,
                )

    def axis_lines(self):
        self.add(
            "line",
            [
                ("x1", _f(self.x0)), ("y1", _f(self.y1)),
                ("x2", _f(self.x1)), ("y2", _f(self.y1)),
                ("stroke", AXIS_COLOR), ("stroke-width", "1.5"),
            ],
        )
        self.add(
            "line",
            [
                ("x1", _f(self.x0)), ("y1", _f(self.y0)),
                ("x2", _f(self.x0)), ("y2", _f(self.y1)),
                ("stroke", AXIS_COLOR), ("stroke-width", "1.5"),
            ],
        )

    def legend(self, entries: list[tuple[str, str]]):
        lx = self.x1 + 16
        ly = self.y0 + 6
        for i, (label, color) in enumerate(entries):
            y = ly + i * 18
            self.add(
                "rect",
                [
                    ("x", _f(lx)), ("y", _f(y)), ("width", "10"), ("height", "10"),
                    ("fill", color), ("data-role", "legend-swatch"),
                ],
            )
            self.add(
                "text",
                [
                    ("x", _f(lx + 16)), ("y", _f(y + 9)),
                    ("font-family", "sans-serif"), ("font-size", "11"),
                    ("fill", AXIS_COLOR), ("data-role", "legend-label"),
                ],
                label,
            )

    def annotation(self, x: float, y: float, text: str, row_idx: int, anchor="middle"):
        self.add(
            "text",
            [
                ("x", _f(x)), ("y", _f(y)),
                ("text-anchor", anchor),
                ("font-family", "sans-serif"), ("font-size", "10"),
                ("fill", AXIS_COLOR),
                ("data-role", "value"),
                ("data-row", str(row_idx)),
            ],
            text,
        )


def _value_scale(
    spec: ChartSpec,
    values: list[float],
    lo_pix: float,
    hi_pix: float,
    base_zero: bool,
    pad_frac: float = 0.06,
) -> tuple[_Scale, list[float], float]:
    """Scale + ticks + baseline for the value axis, honoring truncation and inversion.

    lo_pix/hi_pix are the pixel positions of the domain minimum/maximum in
    the non-inverted orientation.
    """
    vmin, vmax = min(values), max(values)
    if base_zero:
        lo = min(0.0, vmin)
    else:
        span0 = (vmax - vmin) or max(abs(vmax), 1.0)
        lo = vmin - pad_frac * span0
    if spec.axis_truncation_min is not None:
        lo = spec.axis_truncation_min
    span = (vmax - lo) or max(abs(vmax), 1.0)
    hi = vmax + pad_frac * span
    baseline = lo if spec.axis_truncation_min is not None else max(lo, 0.0) if base_zero else lo
    if spec.axis_inverted:
        scale = _Scale(lo, hi, hi_pix, lo_pix)
    else:
        scale = _Scale(lo, hi, lo_pix, hi_pix)
    ticks = [t for t in nice_ticks(lo, hi) if lo - 1e-9 <= t <= hi + 1e-9]
    return scale, ticks, baseline


def _group_order(values: list[str]) -> list[str]:
    seen: dict[str, None] = {}
    for v in values:
        if v not in seen:
            seen[v] = None
    return list(seen)


def _color(spec: ChartSpec, i: int) -> str:
    pal = spec.palette()
    return pal[i % len(pal)]


# ---------------------------------------------------------------------------
# chart family renderers
# ---------------------------------------------------------------------------


def _render_bars(fr: _Frame):
    spec = fr.spec
    table = spec.table
    xs = [str(v) for v in table.column_values(spec.x_field)]
    ys = table.column_values(spec.y_field)
    y_col = table.column_index(spec.y_field)
    cats = _group_order(xs)
    grouped = spec.grouping is Grouping.MULTIPLE and spec.chart_type is ChartType.BAR
    stacked = spec.chart_type in (ChartType.STACKED_BAR, ChartType.PCT_STACKED_BAR)
    pct = spec.chart_type is ChartType.PCT_STACKED_BAR
    horizontal = spec.layout is Layout.HORIZONTAL
    groups = _group_order(table.column_values(spec.group_field)) if spec.group_field else []

    totals: dict[str, float] = {}
    if stacked:
        totals = {c: 0.0 for c in cats}
        for x, y in zip(xs, ys):
            totals[x] += y
        plot_vals = [100.0] if pct else list(totals.values())
    else:
        plot_vals = ys
    if horizontal:
        scale, ticks, baseline = _value_scale(spec, plot_vals, fr.x0, fr.x1, base_zero=True)
    else:
        scale, ticks, baseline = _value_scale(spec, plot_vals, fr.y1, fr.y0, base_zero=True)

    band_extent = (fr.y1 - fr.y0) if horizontal else (fr.x1 - fr.x0)
    bw = band_extent / len(cats)
    bar_w = bw * spec.bar_width_frac

    cum = {c: baseline for c in cats}
    for i, (x, y) in enumerate(zip(xs, ys)):
        ci = cats.index(x)
        center = (fr.y0 if horizontal else fr.x0) + (ci + 0.5) * bw
        if grouped:
            gi = groups.index(table.rows[i][table.column_index(spec.group_field)])
            sub_w = bar_w / len(groups)
            pos = center - bar_w / 2 + gi * sub_w
            v0, v1 = baseline, y
            color = _color(spec, gi)
            thickness = sub_w
        elif stacked:
            gi = groups.index(table.rows[i][table.column_index(spec.group_field)])
            seg = (y / totals[x] * 100.0) if pct else y
            v0 = cum[x]
            v1 = v0 + seg
            cum[x] = v1
            pos = center - bar_w / 2
            color = _color(spec, gi)
            thickness = bar_w
        else:
            pos = center - bar_w / 2
            v0, v1 = baseline, y
            color = _color(spec, 0)
            thickness = bar_w
        p0, p1 = scale(v0), scale(v1)
        lo_p, hi_p = min(p0, p1), max(p0, p1)
        if horizontal:
            rect = [("x", _f(lo_p)), ("y", _f(pos)), ("width", _f(hi_p - lo_p)), ("height", _f(thickness))]
        else:
            rect = [("x", _f(pos)), ("y", _f(lo_p)), ("width", _f(thickness)), ("height", _f(hi_p - lo_p))]
        fr.add("rect", rect + [("fill", color), ("stroke", BACKGROUND), ("stroke-width", "0.5")] + fr.datum_attrs(i, y_col))
        if spec.number_annotations:
            if stacked:
                if pct:
                    label = fmt_num(float(f"{(y / totals[x] * 100.0):.4g}")) + "%"
                else:
                    label = fmt_num(y)
                mid = (p0 + p1) / 2
                if horizontal:
                    fr.annotation(mid, pos + thickness / 2 + 3, label, i)
                else:
                    fr.annotation(pos + thickness / 2, mid + 3, label, i)
            else:
                if horizontal:
                    ax = p1 + 4 if p1 >= p0 else p1 - 4
                    anchor = "start" if p1 >= p0 else "end"
                    fr.annotation(ax, pos + thickness / 2 + 3, fmt_num(y), i, anchor=anchor)
                else:
                    ay = p1 - 4 if p1 <= p0 else p1 + 10
                    cx = pos + thickness / 2
                    fr.annotation(cx, ay, fmt_num(y), i)

    if horizontal:
        fr.value_axis(scale, ticks, "x")
        fr.band_axis(cats, "y")
    else:
        fr.value_axis(scale, ticks, "y")
        fr.band_axis(cats, "x")
    fr.axis_lines()
    if groups:
        fr.legend([(g, _color(spec, gi)) for gi, g in enumerate(groups)])


def _x_positions(fr: _Frame, xs: list) -> tuple[list[float], Optional[list[str]], Optional[_Scale]]:
    """Positions along x for line/area families: linear for numeric, bands otherwise."""
    kind = fr.spec.table.column_kind(fr.spec.x_field)
    if kind is ColumnKind.NUMERIC:
        vmin, vmax = min(xs), max(xs)
        span = (vmax - vmin) or max(abs(vmax), 1.0)
        scale = _Scale(vmin - 0.05 * span, vmax + 0.05 * span, fr.x0, fr.x1)
        return [scale(v) for v in xs], None, scale
    labels = _group_order([str(v) for v in xs])
    bw = (fr.x1 - fr.x0) / len(labels)
    centers = {lab: fr.x0 + (i + 0.5) * bw for i, lab in enumerate(labels)}
    return [centers[str(v)] for v in xs], labels, None


def _render_line_area(fr: _Frame):
    spec = fr.spec
    table = spec.table
    xs = table.column_values(spec.x_field)
    ys = table.column_values(spec.y_field)
    y_col = table.column_index(spec.y_field)
    area = spec.chart_type is ChartType.AREA
    px, band_labels, x_scale = _x_positions(fr, xs)
    scale, ticks, baseline = _value_scale(
        spec, ys, fr.y1, fr.y0, base_zero=area, pad_frac=0.08
    )
    group_vals = table.column_values(spec.group_field) if spec.group_field else None
    groups = _group_order(group_vals) if group_vals else [None]

    for gi, g in enumerate(groups):
        idxs = [i for i in range(table.n_rows) if group_vals is None or group_vals[i] == g]
        pts = [(px[i], scale(ys[i])) for i in idxs]
        color = _color(spec, gi)
        if area:
            base_p = scale(baseline)
            poly = (
                [(pts[0][0], base_p)] + pts + [(pts[-1][0], base_p)]
            )
            fr.add(
                "polygon",
                [
                    ("points", " ".join(f"{_f(x)},{_f(y)}" for x, y in poly)),
                    ("fill", color),
                    ("stroke", "none"),
                    ("data-role", "series-area"),
                ],
            )
        fr.add(
            "polyline",
            [
                ("points", " ".join(f"{_f(x)},{_f(y)}" for x, y in pts)),
                ("fill", "none"),
                ("stroke", color if not area else AXIS_COLOR),
                ("stroke-width", "2"),
                ("data-role", "series-line"),
            ],
        )
        for i in idxs:
            fr.add(
                "circle",
                [
                    ("cx", _f(px[i])), ("cy", _f(scale(ys[i]))), ("r", "3"),
                    ("fill", color if not area else AXIS_COLOR),
                ]
                + fr.datum_attrs(i, y_col),
            )
            if spec.number_annotations:
                fr.annotation(px[i], scale(ys[i]) - 7, fmt_num(ys[i]), i)

    fr.value_axis(scale, ticks, "y")
    if band_labels is not None:
        fr.band_axis(band_labels, "x")
    else:
        x_ticks = [t for t in nice_ticks(min(xs), max(xs)) if min(xs) <= t <= max(xs)]
        fr.value_axis(x_scale, x_ticks, "x")
    fr.axis_lines()
    if group_vals:
        fr.legend([(str(g), _color(spec, gi)) for gi, g in enumerate(groups)])


def _render_stacked_area(fr: _Frame):
    spec = fr.spec
    table = spec.table
    xs = table.column_values(spec.x_field)
    ys = table.column_values(spec.y_field)
    y_col = table.column_index(spec.y_field)
    gvals = table.column_values(spec.group_field)
    groups = _group_order(gvals)
    x_order = _group_order([str(v) for v in xs])
    totals = {x: 0.0 for x in x_order}
    for x, y in zip(xs, ys):
        totals[str(x)] += y
    px, band_labels, x_scale = _x_positions(fr, xs)
    x_pos = {}
    for i, x in enumerate(xs):
        x_pos[str(x)] = px[i]
    scale, ticks, _ = _value_scale(spec, list(totals.values()), fr.y1, fr.y0, base_zero=True)

    cum = {x: 0.0 for x in x_order}
    row_lookup = {}
    for i, (x, g) in enumerate(zip(xs, gvals)):
        row_lookup[(str(x), g)] = i
    prev_tops = {x: scale(0.0) for x in x_order}
    for gi, g in enumerate(groups):
        tops = {}
        for x in x_order:
            i = row_lookup.get((x, g))
            v = ys[i] if i is not None else 0.0
            cum[x] += v
            tops[x] = scale(cum[x])
        upper = [(x_pos[x], tops[x]) for x in x_order]
        lower = [(x_pos[x], prev_tops[x]) for x in reversed(x_order)]
        fr.add(
            "polygon",
            [
                ("points", " ".join(f"{_f(a)},{_f(b)}" for a, b in upper + lower)),
                ("fill", _color(spec, gi)),
                ("stroke", "none"),
                ("data-role", "series-area"),
            ],
        )
        for x in x_order:
            i = row_lookup.get((x, g))
            if i is None:
                continue
            fr.add(
                "circle",
                [
                    ("cx", _f(x_pos[x])), ("cy", _f(tops[x])), ("r", "3"),
                    ("fill", AXIS_COLOR),
                ]
                + fr.datum_attrs(i, y_col),
            )
            if spec.number_annotations:
                fr.annotation(x_pos[x], tops[x] - 7, fmt_num(ys[i]), i)
        prev_tops = dict(tops)

    fr.value_axis(scale, ticks, "y")
    if band_labels is not None:
        fr.band_axis(band_labels, "x")
    else:
        x_ticks = [t for t in nice_ticks(min(xs), max(xs)) if min(xs) <= t <= max(xs)]
        fr.value_axis(x_scale, x_ticks, "x")
    fr.axis_lines()
    fr.legend([(str(g), _color(spec, gi)) for gi, g in enumerate(groups)])


def _render_points(fr: _Frame):
    spec = fr.spec
    table = spec.table
    xs = table.column_values(spec.x_field)
    ys = table.column_values(spec.y_field)
    y_col = table.column_index(spec.y_field)
    label_cols = table.columns_of_kind(ColumnKind.CATEGORICAL)
    labels = table.column_values(label_cols[0]) if label_cols else None

    xmin, xmax = min(xs), max(xs)
    xspan = (xmax - xmin) or max(abs(xmax), 1.0)
    x_scale = _Scale(xmin - 0.08 * xspan, xmax + 0.08 * xspan, fr.x0, fr.x1)
    y_scale, y_ticks, _ = _value_scale(spec, ys, fr.y1, fr.y0, base_zero=False, pad_frac=0.08)

    if spec.chart_type is ChartType.BUBBLE:
        sizes = table.column_values(spec.size_field)
        smax = max(abs(s) for s in sizes) or 1.0
        r_max = 22.0
    for i in range(table.n_rows):
        if spec.chart_type is ChartType.BUBBLE:
            # Area-proportional size encoding.
            r = max(3.0, r_max * math.sqrt(abs(sizes[i]) / smax))
        else:
            r = 4.0
        fr.add(
            "circle",
            [
                ("cx", _f(x_scale(xs[i]))), ("cy", _f(y_scale(ys[i]))), ("r", _f(r)),
                ("fill", _color(spec, 0)),
                ("fill-opacity", "0.85"),
            ]
            + fr.datum_attrs(i, y_col),
        )
        if labels is not None:
            fr.add(
                "text",
                [
                    ("x", _f(x_scale(xs[i]) + r + 2)),
                    ("y", _f(y_scale(ys[i]) - 3)),
                    ("font-family", "sans-serif"),
                    ("font-size", "9"),
                    ("fill", AXIS_COLOR),
                    ("data-role", "point-label"),
                    ("data-row", str(i)),
                ],
                str(labels[i]),
            )
        if spec.number_annotations:
            target = sizes[i] if spec.chart_type is ChartType.BUBBLE else ys[i]
            fr.annotation(x_scale(xs[i]), y_scale(ys[i]) + r + 10, fmt_num(target), i)

    x_ticks = [t for t in nice_ticks(xmin, xmax) if xmin <= t <= xmax]
    fr.value_axis(y_scale, y_ticks, "y")
    fr.value_axis(x_scale, x_ticks, "x")
    fr.axis_lines()


def _render_pie(fr: _Frame):
    spec = fr.spec
    table = spec.table
    labels = [str(v) for v in table.column_values(spec.x_field)]
    ys = table.column_values(spec.y_field)
    y_col = table.column_index(spec.y_field)
    total = sum(ys)
    cx = (fr.x0 + fr.x1) / 2
    cy = (fr.y0 + fr.y1) / 2
    radius = min(fr.x1 - fr.x0, fr.y1 - fr.y0) / 2 - 8

    angle = -math.pi / 2  # start at 12 o'clock, sweep clockwise
    for i, v in enumerate(ys):
        frac = v / total
        a0 = angle
        a1 = angle + frac * 2 * math.pi
        angle = a1
        color = _color(spec, i)
        datum = fr.datum_attrs(i, y_col)
        if frac >= 0.999999:
            fr.add("circle", [("cx", _f(cx)), ("cy", _f(cy)), ("r", _f(radius)), ("fill", color)] + datum)
        else:
            x0, y0 = cx + radius * math.cos(a0), cy + radius * math.sin(a0)
            x1, y1 = cx + radius * math.cos(a1), cy + radius * math.sin(a1)
            laf = 1 if (a1 - a0) > math.pi else 0
            d = (
                f"M {_f(cx)} {_f(cy)} L {_f(x0)} {_f(y0)} "
                f"A {_f(radius)} {_f(radius)} 0 {laf} 1 {_f(x1)} {_f(y1)} Z"
            )
            fr.add("path", [("d", d), ("fill", color), ("stroke", BACKGROUND), ("stroke-width", "1")] + datum)
        if spec.number_annotations:
            mid = (a0 + a1) / 2
            share = v / total * 100.0
            fr.annotation(
                cx + radius * 0.65 * math.cos(mid),
                cy + radius * 0.65 * math.sin(mid) + 3,
                fmt_num(float(f"{share:.4g}")) + "%",
                i,
            )
    fr.legend([(lab, _color(spec, i)) for i, lab in enumerate(labels)])


def _render_histogram(fr: _Frame):
    spec = fr.spec
    table = spec.table
    values = table.column_values(spec.x_field)
    x_col = table.column_index(spec.x_field)
    edges, counts = histogram_bins(values)
    lo, hi = edges[0], edges[-1]
    xspan = (hi - lo) or max(abs(hi), 1.0)
    x_scale = _Scale(lo - 0.03 * xspan, hi + 0.03 * xspan, fr.x0, fr.x1)
    y_vals = [float(c) for c in counts] or [1.0]
    y_scale, y_ticks, baseline = _value_scale(spec, y_vals + [0.0], fr.y1, fr.y0, base_zero=True)

    for b, count in enumerate(counts):
        e0, e1 = edges[b], edges[b + 1]
        p0, p1 = x_scale(e0), x_scale(e1)
        w = (p1 - p0) * spec.bar_width_frac
        pad = ((p1 - p0) - w) / 2
        top = y_scale(float(count))
        base_p = y_scale(baseline)
        y_top, h = min(top, base_p), abs(base_p - top)
        fr.add(
            "rect",
            [
                ("x", _f(p0 + pad)), ("y", _f(y_top)), ("width", _f(w)), ("height", _f(h)),
                ("fill", _color(spec, 0)),
                ("stroke", BACKGROUND), ("stroke-width", "0.5"),
                ("data-role", "bin"),
                ("data-bin", str(b)),
                ("data-count", str(count)),
            ],
        )
        if spec.number_annotations:
            off = -4 if not spec.axis_inverted else 10
            fr.add(
                "text",
                [
                    ("x", _f((p0 + p1) / 2)), ("y", _f(top + off)),
                    ("text-anchor", "middle"),
                    ("font-family", "sans-serif"), ("font-size", "10"),
                    ("fill", AXIS_COLOR),
                    ("data-role", "value"),
                    ("data-bin", str(b)),
                ],
                str(count),
            )

    # One rug tick per observation carries the row provenance.
    rug_y = fr.y1 + 2
    for i, v in enumerate(values):
        p = x_scale(v)
        fr.add(
            "line",
            [
                ("x1", _f(p)), ("y1", _f(rug_y)), ("x2", _f(p)), ("y2", _f(rug_y + 6)),
                ("stroke", AXIS_COLOR), ("stroke-width", "1"),
                ("data-role", "rug"),
            ]
            + fr.datum_attrs(i, x_col),
        )

    x_ticks = [t for t in nice_ticks(lo, hi) if lo <= t <= hi]
    fr.value_axis(y_scale, y_ticks, "y")
    fr.value_axis(x_scale, x_ticks, "x")
    fr.axis_lines()


def _squarify(values: list[float], x: float, y: float, w: float, h: float) -> list[tuple[float, float, float, float]]:
    """Squarified treemap layout; returns one rect per value, input order.

    Values are laid out largest-first (ties keep input order) and the rects
    are returned re-mapped to the original order.
    """
    order = sorted(range(len(values)), key=lambda i: (-values[i], i))
    rects: dict[int, tuple[float, float, float, float]] = {}
    total = sum(values)
    scale = (w * h) / total if total > 0 else 0.0
    areas = [values[i] * scale for i in order]

    def worst(row: list[float], side: float) -> float:
        s = sum(row)
        if s <= 0 or side <= 0:
            return float("inf")
        mx, mn = max(row), min(row)
        return max(side * side * mx / (s * s), s * s / (side * side * mn))

    i = 0
    cx, cy, cw, ch = x, y, w, h
    while i < len(areas):
        side = min(cw, ch)
        row = [areas[i]]
        j = i + 1
        while j < len(areas) and worst(row + [areas[j]], side) <= worst(row, side):
            row.append(areas[j])
            j += 1
        s = sum(row)
        if cw >= ch:
            rw = s / ch if ch > 0 else 0.0
            off = cy
            for k, a in enumerate(row):
                rh = a / rw if rw > 0 else 0.0
                rects[order[i + k]] = (cx, off, rw, rh)
                off += rh
            cx += rw
            cw -= rw
        else:
            rh = s / cw if cw > 0 else 0.0
            off = cx
            for k, a in enumerate(row):
                rw = a / rh if rh > 0 else 0.0
                rects[order[i + k]] = (off, cy, rw, rh)
                off += rw
            cy += rh
            ch -= rh
        i += len(row)
    return [rects[i] for i in range(len(values))]


def _render_treemap(fr: _Frame):
    spec = fr.spec
    table = spec.table
    parents = [str(v) for v in table.column_values(spec.group_field)]
    children = [str(v) for v in table.column_values(spec.x_field)]
    ys = table.column_values(spec.y_field)
    y_col = table.column_index(spec.y_field)

    parent_order = _group_order(parents)
    parent_totals = [sum(y for p, y in zip(parents, ys) if p == po) for po in parent_order]
    parent_rects = _squarify(parent_totals, fr.x0, fr.y0, fr.x1 - fr.x0, fr.y1 - fr.y0)

    for pi, parent in enumerate(parent_order):
        px, py, pw, ph = parent_rects[pi]
        fr.add(
            "rect",
            [
                ("x", _f(px)), ("y", _f(py)), ("width", _f(pw)), ("height", _f(ph)),
                ("fill", "none"),
                ("stroke", AXIS_COLOR), ("stroke-width", "2"),
                ("data-role", "treemap-parent"),
                ("data-parent", parent),
            ],
        )
        idxs = [i for i, p in enumerate(parents) if p == parent]
        inner = (px + 2, py + 16, max(pw - 4, 1.0), max(ph - 18, 1.0))
        child_rects = _squarify([ys[i] for i in idxs], *inner)
        for k, i in enumerate(idxs):
            rx, ry, rw, rh = child_rects[k]
            fr.add(
                "rect",
                [
                    ("x", _f(rx)), ("y", _f(ry)), ("width", _f(rw)), ("height", _f(rh)),
                    ("fill", _color(spec, pi)),
                    ("stroke", BACKGROUND), ("stroke-width", "1"),
                ]
                + fr.datum_attrs(i, y_col),
            )
            if rw * rh >= 900:
                fr.add(
                    "text",
                    [
                        ("x", _f(rx + 4)), ("y", _f(ry + 12)),
                        ("font-family", "sans-serif"), ("font-size", "9"),
                        ("fill", BACKGROUND),
                        ("data-role", "cell-label"),
                        ("data-row", str(i)),
                    ],
                    children[i],
                )
                if spec.number_annotations:
                    fr.annotation(rx + 4, ry + 22, fmt_num(ys[i]), i, anchor="start")
        fr.add(
            "text",
            [
                ("x", _f(px + 4)), ("y", _f(py + 12)),
                ("font-family", "sans-serif"), ("font-size", "10"),
                ("font-weight", "bold"),
                ("fill", AXIS_COLOR),
                ("data-role", "parent-label"),
            ],
            parent,
        )


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

_RENDERERS = {
    ChartType.BAR: _render_bars,
    ChartType.STACKED_BAR: _render_bars,
    ChartType.PCT_STACKED_BAR: _render_bars,
    ChartType.LINE: _render_line_area,
    ChartType.AREA: _render_line_area,
    ChartType.STACKED_AREA: _render_stacked_area,
    ChartType.SCATTERPLOT: _render_points,
    ChartType.BUBBLE: _render_points,
    ChartType.PIE: _render_pie,
    ChartType.HISTOGRAM: _render_histogram,
    ChartType.TREEMAP: _render_treemap,
}

_LEGEND_TYPES = {
    ChartType.PIE,
    ChartType.STACKED_BAR,
    ChartType.PCT_STACKED_BAR,
    ChartType.STACKED_AREA,
}


def render_svg(spec: ChartSpec) -> str:
    """Render a chart spec to a standalone SVG document string."""
    legend = spec.chart_type in _LEGEND_TYPES or (
        spec.group_field is not None and spec.chart_type is not ChartType.TREEMAP
    )
    fr = _Frame(spec, legend=legend)
    table = spec.table
    meta = {
        "schema": SCHEMA_VERSION,
        "chart_id": spec.id,
        "chart_type": spec.chart_type.value,
        "name": table.name,
        "columns": [{"name": c.name, "kind": c.kind.value} for c in table.columns],
        "rows": table.n_rows,
    }
    head = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f"<metadata id=\"civ-table\">{_esc(json.dumps(meta, separators=(',', ':')))}</metadata>",
        _tag("rect", [("x", "0"), ("y", "0"), ("width", str(WIDTH)), ("height", str(HEIGHT)), ("fill", BACKGROUND)]),
    ]
    fr.title_and_labels(skip_axis_labels=spec.chart_type in (ChartType.PIE, ChartType.TREEMAP))
    _RENDERERS[spec.chart_type](fr)
    return "\n".join(head + fr.elements + ["</svg>"]) + "\n"


def extract_table_from_svg(svg: str) -> DataTable:
    """Reconstruct the encoded table from a rendered document."""
    try:
        root = ET.fromstring(svg)
    except ET.ParseError as e:
        raise ParseError(f"not well-formed SVG: {e}") from None
    meta_text = None
    for el in root.iter():
        if el.tag.endswith("metadata"):
            meta_text = el.text
            break
    if meta_text is None:
        raise ParseError("missing table metadata element")
    try:
        meta = json.loads(meta_text)
    except json.JSONDecodeError as e:
        raise ParseError(f"bad metadata JSON: {e}") from None
    columns = tuple(Column(c["name"], ColumnKind(c["kind"])) for c in meta["columns"])
    n_rows = int(meta["rows"])

    rows: dict[int, tuple] = {}
    for el in root.iter():
        raw_cells = el.get("data-cells")
        raw_row = el.get("data-row")
        if raw_cells is None or raw_row is None:
            continue
        i = int(raw_row)
        cells = json.loads(raw_cells)
        if len(cells) != len(columns):
            raise ParseError(f"row {i} carries {len(cells)} cells, expected {len(columns)}")
        parsed = tuple(
            float(c) if col.kind is ColumnKind.NUMERIC else c
            for c, col in zip(cells, columns)
        )
        if i in rows and rows[i] != parsed:
            raise ParseError(f"conflicting provenance payloads for row {i}")
        rows[i] = parsed
    missing = [i for i in range(n_rows) if i not in rows]
    if missing:
        raise ParseError(f"rows missing from document: {missing}")
    return DataTable(
        name=meta["name"], columns=columns, rows=tuple(rows[i] for i in range(n_rows))
    )


def extract_table_from_spec(spec: ChartSpec) -> DataTable:
    """Round-trip oracle: render the spec and read the table back out."""
    return extract_table_from_svg(render_svg(spec))


# ---------------------------------------------------------------------------
# software rasterizer (for the color histogram feature)
# ---------------------------------------------------------------------------

_WEDGE_RE = re.compile(
    r"M\s+(-?[\d.]+)\s+(-?[\d.]+)\s+L\s+(-?[\d.]+)\s+(-?[\d.]+)\s+"
    r"A\s+(-?[\d.]+)\s+(-?[\d.]+)\s+0\s+([01])\s+1\s+(-?[\d.]+)\s+(-?[\d.]+)\s+Z"
)


def _hex_rgb(color: str):
    if not color or color == "none":
        return None
    if color.startswith("#") and len(color) == 7:
        return tuple(int(color[i : i + 2], 16) for i in (1, 3, 5))
    return None


def rasterize_svg(svg: str, size: int = 256):
    """Paint the SVG subset this renderer emits onto a size x size RGB grid.

    Supports rect/circle/polygon/polyline/line and pie-wedge paths; text is
    skipped. Returns a (size, size, 3) uint8 array.
    """
    import numpy as np

    root = ET.fromstring(svg)
    img = np.full((size, size, 3), 255, dtype=np.uint8)
    xs = (np.arange(size) + 0.5) / size * WIDTH
    ys = (np.arange(size) + 0.5) / size * HEIGHT
    gx, gy = np.meshgrid(xs, ys)

    def paint(mask, rgb):
        img[mask] = rgb

    for el in root.iter():
        tag = el.tag.rsplit("}", 1)[-1]
        fill = _hex_rgb(el.get("fill", ""))
        stroke = _hex_rgb(el.get("stroke", ""))
        if tag == "rect" and fill is not None:
            x = float(el.get("x", 0)); y = float(el.get("y", 0))
            w = float(el.get("width", 0)); h = float(el.get("height", 0))
            paint((gx >= x) & (gx <= x + w) & (gy >= y) & (gy <= y + h), fill)
        elif tag == "circle" and fill is not None:
            cx = float(el.get("cx", 0)); cy = float(el.get("cy", 0))
            r = float(el.get("r", 0))
            paint((gx - cx) ** 2 + (gy - cy) ** 2 <= r * r, fill)
        elif tag == "polygon" and fill is not None:
            pts = [tuple(map(float, p.split(","))) for p in el.get("points", "").split()]
            if len(pts) >= 3:
                paint(_polygon_mask(gx, gy, pts), fill)
        elif tag in ("polyline", "line") and stroke is not None:
            w = float(el.get("stroke-width", 1.0))
            if tag == "line":
                pts = [
                    (float(el.get("x1", 0)), float(el.get("y1", 0))),
                    (float(el.get("x2", 0)), float(el.get("y2", 0))),
                ]
            else:
                pts = [tuple(map(float, p.split(","))) for p in el.get("points", "").split()]
            mask = np.zeros(gx.shape, dtype=bool)
            half = max(w / 2, 0.5)
            for (x1, y1), (x2, y2) in zip(pts, pts[1:]):
                mask |= _segment_mask(gx, gy, x1, y1, x2, y2, half)
            paint(mask, stroke)
        elif tag == "path" and fill is not None:
            m = _WEDGE_RE.match(el.get("d", ""))
            if not m:
                continue
            cx, cy, x0, y0, r, _, laf, x1, y1 = (float(m.group(i)) for i in range(1, 10))
            a0 = math.atan2(y0 - cy, x0 - cx)
            a1 = math.atan2(y1 - cy, x1 - cx)
            span = (a1 - a0) % (2 * math.pi)
            ang = (np.arctan2(gy - cy, gx - cx) - a0) % (2 * math.pi)
            inside = (gx - cx) ** 2 + (gy - cy) ** 2 <= r * r
            paint(inside & (ang <= span), fill)
    return img


def _polygon_mask(gx, gy, pts):
    import numpy as np

    inside = np.zeros(gx.shape, dtype=bool)
    n = len(pts)
    j = n - 1
    for i in range(n):
        xi, yi = pts[i]
        xj, yj = pts[j]
        cond = (yi > gy) != (yj > gy)
        denom = (yj - yi)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_int = xi + (gy - yi) * (xj - xi) / np.where(denom == 0, 1e-12, denom)
        inside ^= cond & (gx < x_int)
        j = i
    return inside


def _segment_mask(gx, gy, x1, y1, x2, y2, half):
    import numpy as np

    dx, dy = x2 - x1, y2 - y1
    L2 = dx * dx + dy * dy
    if L2 == 0:
        return (gx - x1) ** 2 + (gy - y1) ** 2 <= half * half
    t = ((gx - x1) * dx + (gy - y1) * dy) / L2
    t = np.clip(t, 0.0, 1.0)
    px = x1 + t * dx
    py = y1 + t * dy
    return (gx - px) ** 2 + (gy - py) ** 2 <= half * half
