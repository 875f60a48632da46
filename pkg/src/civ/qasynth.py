"""QA synthesis: oracle-computed answers over the chart-task grid.

Statistical tasks (distribution shape, anomalies, clusters) answer from
planted ground truth injected at table-generation time; everything else is
computed exactly from the encoded table. Reasoning chains are attached only
where the oracle did arithmetic or the answer leans on a visual encoding.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np

from .charts import ChartSpec, ChartType, Grouping, bin_label, histogram_bins
from .errors import AmbiguousExtremum, MissingTruth, ValidationError
from .records import Answer, AnswerKind, DatasetRecord, QAPair, QAStyle
from .tables import canon_num, fmt_num
from .tasks import TaskCategory, TaskName, ValueMode, is_legal

# ---------------------------------------------------------------------------
# planted truth
# ---------------------------------------------------------------------------


class PlantedKind(str, Enum):
    ANOMALY = "anomaly"
    CLUSTERS = "clusters"
    DISTRIBUTION_SHAPE = "distribution_shape"
    CORRELATION = "correlation"


SHAPE_LABELS = ("uniform", "normal", "left_skewed", "right_skewed", "bimodal")


@dataclass(frozen=True)
class PlantedTruth:
    kind: PlantedKind
    payload: dict

    def __post_init__(self):
        object.__setattr__(self, "kind", PlantedKind(self.kind))
        p = self.payload
        if self.kind is PlantedKind.ANOMALY and "entity" not in p:
            raise ValidationError("bad_planted", "anomaly needs an entity")
        if self.kind is PlantedKind.CLUSTERS and "count" not in p:
            raise ValidationError("bad_planted", "clusters needs a count")
        if self.kind is PlantedKind.DISTRIBUTION_SHAPE and p.get("label") not in SHAPE_LABELS:
            raise ValidationError("bad_planted", f"unknown shape {p.get('label')!r}")
        if self.kind is PlantedKind.CORRELATION and "r" not in p:
            raise ValidationError("bad_planted", "correlation needs a target r")

    def to_json_dict(self) -> dict:
        return {"kind": self.kind.value, "payload": self.payload}

    @classmethod
    def from_json_dict(cls, d: dict) -> "PlantedTruth":
        return cls(kind=PlantedKind(d["kind"]), payload=dict(d["payload"]))


# ---------------------------------------------------------------------------
# numeric oracles (pure, independently testable)
# ---------------------------------------------------------------------------


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation with compensated summation."""
    n = len(xs)
    if n != len(ys):
        raise ValidationError("length_mismatch", "x and y differ in length")
    if n < 2:
        return 0.0
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    syy = math.fsum((y - my) ** 2 for y in ys)
    if sxx == 0 or syy == 0:
        return 0.0
    return sxy / math.sqrt(sxx * syy)


def correlation_label(r: float, threshold: float = 0.5) -> str:
    if r >= threshold:
        return "positive"
    if r <= -threshold:
        return "negative"
    return "none"


def trend_label(values: Sequence[float], threshold: float = 0.1) -> str:
    """Sign of the least-squares slope, normalized by the value range."""
    ys = [float(v) for v in values]
    n = len(ys)
    if n < 2:
        return "stable"
    yr = max(ys) - min(ys)
    if yr == 0:
        return "stable"
    mx = (n - 1) / 2
    my = math.fsum(ys) / n
    sxx = math.fsum((i - mx) ** 2 for i in range(n))
    sxy = math.fsum((i - mx) * (y - my) for i, y in enumerate(ys))
    norm = (sxy / sxx) * (n - 1) / yr
    if norm >= threshold:
        return "increasing"
    if norm <= -threshold:
        return "decreasing"
    return "stable"


def relative_shares(values: Sequence[float]) -> list[float]:
    """Unrounded percentage shares; sums to 100 up to float error."""
    total = math.fsum(values)
    if total <= 0:
        raise ValidationError("nonpositive_total", "shares need a positive total")
    return [v / total * 100.0 for v in values]


def anomaly_zscore(table_rows: Sequence[Sequence[float]], entity_idx: int) -> float:
    """Max per-axis z-score of one point against all remaining points."""
    rows = [list(map(float, r)) for r in table_rows]
    rest = [r for i, r in enumerate(rows) if i != entity_idx]
    target = rows[entity_idx]
    worst = 0.0
    for axis in range(len(target)):
        vals = [r[axis] for r in rest]
        mean = math.fsum(vals) / len(vals)
        var = math.fsum((v - mean) ** 2 for v in vals) / len(vals)
        std = math.sqrt(var)
        diff = abs(target[axis] - mean)
        if std == 0:
            z = math.inf if diff > 0 else 0.0
        else:
            z = diff / std
        worst = max(worst, z)
    return worst


def check_shape(values: Sequence[float]) -> str:
    """Recover a distribution-shape label from moments plus a valley test.

    Order: deep two-peak valley -> bimodal; |skew| >= 0.5 -> skewed; then a
    quantile flatness ratio separates uniform from normal (the kurtosis
    estimator is too noisy at realistic sample sizes).
    """
    arr = np.asarray(values, dtype=np.float64)
    n = len(arr)
    std = float(arr.std())
    if n < 8 or std == 0:
        return "uniform"
    z = (arr - arr.mean()) / std
    skew = float((z ** 3).mean())
    counts, _ = np.histogram(arr, bins=8)
    if _valley_split(counts):
        return "bimodal"
    if skew >= 0.5:
        return "right_skewed"
    if skew <= -0.5:
        return "left_skewed"
    q05, q20, q80, q95 = np.quantile(arr, [0.05, 0.20, 0.80, 0.95])
    flatness = (q80 - q20) / (q95 - q05) if q95 > q05 else 1.0
    # uniform ~= 0.667, normal ~= 0.512
    return "uniform" if flatness >= 0.59 else "normal"


def _valley_split(counts) -> bool:
    """True when two substantial peaks sandwich a near-empty valley."""
    counts = list(map(int, counts))
    top = max(counts)
    for v in range(1, len(counts) - 1):
        left_peak = max(counts[:v])
        right_peak = max(counts[v + 1 :])
        lesser = min(left_peak, right_peak)
        if lesser < 0.35 * top:
            continue
        if counts[v] <= 0.25 * lesser:
            return True
    return False


# ---------------------------------------------------------------------------
# oracle traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleTrace:
    steps: tuple[str, ...]
    arithmetic: bool
    targets_size: bool = False


def _shape_text(label: str) -> str:
    return label.replace("_", "-")


def oracle_lookup(labels: Sequence[str], values: Sequence[float], entity: str):
    hits = [v for l, v in zip(labels, values) if l == entity]
    if len(hits) != 1:
        raise AmbiguousExtremum(f"{entity!r} matches {len(hits)} rows")
    v = hits[0]
    return v, OracleTrace((f"{entity} has value {fmt_num(v)}.",), arithmetic=False)


def oracle_share(labels: Sequence[str], values: Sequence[float], entity: str):
    hits = [v for l, v in zip(labels, values) if l == entity]
    if len(hits) != 1:
        raise AmbiguousExtremum(f"{entity!r} matches {len(hits)} rows")
    total = math.fsum(values)
    share = hits[0] / total * 100.0
    steps = (
        f"{entity} has value {fmt_num(hits[0])}.",
        f"The total is {fmt_num(canon_num(total))}.",
        f"{fmt_num(hits[0])} / {fmt_num(canon_num(total))} x 100 = {fmt_num(canon_num(share))}%.",
    )
    return share, OracleTrace(steps, arithmetic=True)


def oracle_extremum(labels: Sequence[str], values: Sequence[float], find_max: bool):
    best = max(values) if find_max else min(values)
    winners = [l for l, v in zip(labels, values) if v == best]
    if len(winners) != 1:
        raise AmbiguousExtremum(f"{len(winners)} entries tie at {best}")
    word = "largest" if find_max else "smallest"
    return (
        winners[0],
        best,
        OracleTrace((f"The {word} value is {fmt_num(best)} ({winners[0]}).",), arithmetic=False),
    )


def oracle_range(labels: Sequence[str], values: Sequence[float]):
    vmax, vmin = max(values), min(values)
    amax = labels[values.index(vmax)]
    amin = labels[values.index(vmin)]
    diff = canon_num(vmax - vmin)
    steps = (
        f"The maximum is {fmt_num(vmax)} ({amax}).",
        f"The minimum is {fmt_num(vmin)} ({amin}).",
        f"{fmt_num(vmax)} - {fmt_num(vmin)} = {fmt_num(diff)}.",
    )
    return diff, OracleTrace(steps, arithmetic=True)


def oracle_difference(a: str, va: float, b: str, vb: float):
    diff = canon_num(abs(va - vb))
    hi, lo = (a, b) if va >= vb else (b, a)
    vhi, vlo = max(va, vb), min(va, vb)
    steps = (
        f"{hi} has value {fmt_num(vhi)}.",
        f"{lo} has value {fmt_num(vlo)}.",
        f"{fmt_num(vhi)} - {fmt_num(vlo)} = {fmt_num(diff)}.",
    )
    return diff, OracleTrace(steps, arithmetic=True)


def oracle_ratio(a: str, va: float, b: str, vb: float):
    if vb == 0:
        raise ValidationError("zero_division", f"{b} has value 0")
    ratio = canon_num(va / vb)
    steps = (
        f"{a} has value {fmt_num(va)}.",
        f"{b} has value {fmt_num(vb)}.",
        f"{fmt_num(va)} / {fmt_num(vb)} = {fmt_num(ratio)}.",
    )
    return ratio, OracleTrace(steps, arithmetic=True)


def oracle_which_larger(a: str, va: float, b: str, vb: float):
    if va == vb:
        raise AmbiguousExtremum(f"{a} and {b} are equal")
    winner = a if va > vb else b
    steps = (
        f"{a} has value {fmt_num(va)} and {b} has value {fmt_num(vb)}.",
        f"{winner} is larger.",
    )
    return winner, OracleTrace(steps, arithmetic=False)


# ---------------------------------------------------------------------------
# question templates (>= 5 paraphrases per flavor)
# ---------------------------------------------------------------------------

PARAPHRASES: dict[str, list[str]] = {
    "dr_abs": [
        "What is the {metric} of {entity}?",
        "What value does {entity} have for {metric}?",
        "How much {metric} does {entity} show?",
        "Find the {metric} recorded for {entity}.",
        "What is the value of {entity}?",
    ],
    "dr_group": [
        "What is the {metric} of {group} at {x}?",
        "What value does {group} reach at {x}?",
        "How much {metric} does {group} contribute at {x}?",
        "For {x}, what is the {metric} of {group}?",
        "Read the {metric} of the {group} series at {x}.",
    ],
    "dr_rel": [
        "What percentage of the total does {entity} account for?",
        "What share of the whole belongs to {entity}?",
        "How many percent of the total is {entity}?",
        "What fraction of the total, in percent, does {entity} represent?",
        "What is the percentage share of {entity}?",
    ],
    "dr_rel_stack": [
        "What percentage of {x} does {group} account for?",
        "Within {x}, what share belongs to {group}?",
        "How many percent of the {x} total is {group}?",
        "What is the percentage of {group} inside {x}?",
        "What proportion of {x}, in percent, comes from {group}?",
    ],
    "dr_bin": [
        "How many observations fall in the interval {lo} to {hi}?",
        "How many values lie between {lo} and {hi}?",
        "What is the count of observations between {lo} and {hi}?",
        "How many data points land in the {lo} to {hi} interval?",
        "How many records are in the bin from {lo} to {hi}?",
    ],
    "ex_max": [
        "Which {unit} has the highest {metric}?",
        "Which {unit} shows the largest {metric}?",
        "Identify the {unit} with the maximum {metric}.",
        "Which {unit} reaches the greatest {metric}?",
        "Which {unit} is the largest in terms of {metric}?",
    ],
    "ex_min": [
        "Which {unit} has the lowest {metric}?",
        "Which {unit} shows the smallest {metric}?",
        "Identify the {unit} with the minimum {metric}.",
        "Which {unit} records the least {metric}?",
        "Which {unit} is the smallest in terms of {metric}?",
    ],
    "ex_total_max": [
        "Which {unit} has the highest total {metric}?",
        "Which {unit} shows the largest combined {metric}?",
        "Identify the {unit} whose total {metric} is the greatest.",
        "Which {unit} accumulates the most {metric} overall?",
        "Which {unit} has the tallest overall {metric}?",
    ],
    "ex_total_min": [
        "Which {unit} has the lowest total {metric}?",
        "Which {unit} shows the smallest combined {metric}?",
        "Identify the {unit} whose total {metric} is the least.",
        "Which {unit} accumulates the least {metric} overall?",
        "Which {unit} has the shortest overall {metric}?",
    ],
    "ex_rel": [
        "Which {unit} holds the largest share?",
        "Which {unit} accounts for the biggest percentage?",
        "Identify the {unit} with the greatest proportion of the total.",
        "Which {unit} takes up the largest portion?",
        "Which {unit} represents the highest share of the whole?",
    ],
    "ex_rel_stack": [
        "Within {x}, which {unit} holds the largest share?",
        "Which {unit} accounts for the biggest percentage of {x}?",
        "For {x}, identify the {unit} with the greatest proportion.",
        "Which {unit} takes up the largest portion of {x}?",
        "In {x}, which {unit} has the highest share?",
    ],
    "ex_bin": [
        "What is the highest count of observations in any single interval?",
        "How many observations are in the fullest bin?",
        "What is the largest number of values any interval holds?",
        "At most, how many observations does one interval contain?",
        "What is the peak bin count?",
    ],
    "range": [
        "What is the range of {metric} (maximum minus minimum)?",
        "By how much does the largest {metric} exceed the smallest?",
        "What is the difference between the highest and lowest {metric}?",
        "Compute the spread between the maximum and minimum {metric}.",
        "How wide is the range of {metric} values?",
    ],
    "range_total": [
        "What is the range of total {metric} across {unit}s (maximum minus minimum)?",
        "By how much does the largest total {metric} exceed the smallest?",
        "What is the difference between the highest and lowest total {metric}?",
        "Compute the spread between the maximum and minimum total {metric}.",
        "How wide is the range of combined {metric} values?",
    ],
    "cd": [
        "How would you characterize the distribution of {metric}?",
        "What is the overall shape of the {metric} distribution?",
        "Which distribution shape best describes {metric}?",
        "Describe the shape of the distribution of {metric}.",
        "What kind of distribution does {metric} follow?",
    ],
    "fa": [
        "Which {unit} is an outlier?",
        "Which {unit} stands apart from the rest?",
        "Identify the anomalous {unit}.",
        "Which {unit} does not follow the overall pattern?",
        "Spot the {unit} that deviates most from the others.",
    ],
    "fc": [
        "How many clusters of points does the chart show?",
        "How many distinct groups do the points form?",
        "Count the clusters visible in the chart.",
        "Into how many clusters do the points separate?",
        "How many groupings of points are there?",
    ],
    "fct_corr": [
        "What is the correlation between {xcol} and {ycol}?",
        "How are {xcol} and {ycol} related?",
        "Is there a positive correlation, negative correlation, or none between {xcol} and {ycol}?",
        "Describe the relationship between {xcol} and {ycol}.",
        "What kind of correlation holds between {xcol} and {ycol}?",
    ],
    "fct_trend": [
        "What is the overall trend of {metric}?",
        "Is {metric} increasing, decreasing, or stable overall?",
        "How does {metric} develop across the chart?",
        "Describe the general direction of {metric}.",
        "What trend does {metric} follow?",
    ],
    "mc_which": [
        "Which is larger, {a} or {b}?",
        "Between {a} and {b}, which has the higher value?",
        "Compare {a} and {b}: which one is greater?",
        "Does {a} or {b} show the larger value?",
        "Which of {a} and {b} is bigger?",
    ],
    "mc_diff": [
        "What is the difference between {a} and {b}?",
        "By how much do {a} and {b} differ?",
        "How much larger is the bigger of {a} and {b}?",
        "Compute the gap between {a} and {b}.",
        "What is the absolute difference between {a} and {b}?",
    ],
    "mc_ratio": [
        "How many times larger is {a} than {b}?",
        "What is the ratio of {a} to {b}?",
        "How does {a} compare to {b} as a multiple?",
        "By what factor does {a} exceed {b}?",
        "{a} is how many times {b}?",
    ],
    "mc_bin_more": [
        "Are there more observations between {lo1} and {hi1} than between {lo2} and {hi2}?",
        "Does the interval {lo1} to {hi1} hold more values than {lo2} to {hi2}?",
        "Is the bin {lo1}-{hi1} fuller than the bin {lo2}-{hi2}?",
        "Compared with {lo2} to {hi2}, does {lo1} to {hi1} contain more observations?",
        "Is the count in {lo1} to {hi1} higher than in {lo2} to {hi2}?",
    ],
    "etc_hist": [
        "Which interval contains the most observations?",
        "Which bin holds the largest number of values?",
        "Identify the interval with the highest count.",
        "Where is the fullest bin located?",
        "Which value interval is the most populated?",
    ],
    "etc_parent": [
        "Which {parent_col} does {child} belong to?",
        "Under which {parent_col} is {child} grouped?",
        "{child} is part of which {parent_col}?",
        "Identify the {parent_col} containing {child}.",
        "To which {parent_col} is {child} assigned?",
    ],
    "etc_children": [
        "How many {child_col}s does {parent} contain?",
        "How many {child_col} entries belong to {parent}?",
        "Count the {child_col}s grouped under {parent}.",
        "How many {child_col}s fall within {parent}?",
        "What is the number of {child_col}s inside {parent}?",
    ],
}


def stable_seed(*parts) -> int:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


# ---------------------------------------------------------------------------
# reasoning rule
# ---------------------------------------------------------------------------


def visual_reference(category: TaskCategory, spec: ChartSpec, targets_size: bool) -> bool:
    """Does answering lean on a visual encoding that needs calling out?"""
    if spec.axis_inverted or spec.axis_truncation_min is not None:
        return True
    if spec.chart_type is ChartType.BUBBLE and targets_size:
        return True
    if spec.chart_type is ChartType.STACKED_AREA and category.name in (
        TaskName.DATA_RETRIEVAL,
        TaskName.MAKE_COMPARISONS,
    ):
        return True
    return False


def reasoning_required(category: TaskCategory, arithmetic: bool, spec: ChartSpec, targets_size: bool = False) -> bool:
    return arithmetic or visual_reference(category, spec, targets_size)


def _visual_notes(spec: ChartSpec, targets_size: bool) -> list[str]:
    notes = []
    if spec.axis_inverted:
        notes.append("Note: the value axis is inverted, so larger values sit lower.")
    if spec.axis_truncation_min is not None:
        notes.append(
            f"Note: the value axis starts at {fmt_num(spec.axis_truncation_min)}, not zero."
        )
    if spec.chart_type is ChartType.BUBBLE and targets_size:
        notes.append(f"Note: the bubble area encodes {spec.size_field}.")
    if spec.chart_type is ChartType.STACKED_AREA:
        notes.append("Note: each band's value is the gap between adjacent boundaries, not the top line.")
    return notes


def attach_reasoning(qa: QAPair, spec: ChartSpec, trace: OracleTrace) -> QAPair:
    """Apply the attachment rule; the returned QA carries steps or none."""
    if not reasoning_required(qa.category, trace.arithmetic, spec, trace.targets_size):
        return qa.with_reasoning(None)
    steps = list(_visual_notes(spec, trace.targets_size)) + list(trace.steps)
    return qa.with_reasoning(tuple(steps))


def _style(category: TaskCategory, arithmetic: bool, spec: ChartSpec, targets_size: bool) -> QAStyle:
    visual = visual_reference(category, spec, targets_size)
    if arithmetic and visual:
        return QAStyle.VISUAL_COMPOSITIONAL
    if arithmetic:
        return QAStyle.COMPOSITIONAL
    if visual:
        return QAStyle.VISUAL
    return QAStyle.DATA_RETRIEVAL


# ---------------------------------------------------------------------------
# synthesis
# ---------------------------------------------------------------------------


@dataclass
class _Ctx:
    record: DatasetRecord
    spec: ChartSpec
    rng: random.Random
    metric: str
    unit: str


def _series(ctx: _Ctx) -> tuple[list[str], list[float]]:
    """Entity labels and values for single-series charts."""
    spec = ctx.spec
    table = spec.table
    if spec.chart_type in (ChartType.SCATTERPLOT, ChartType.BUBBLE):
        from .tables import ColumnKind

        cats = table.columns_of_kind(ColumnKind.CATEGORICAL)
        labels = [str(v) for v in table.column_values(cats[0])]
        values = table.column_values(spec.y_field)
    else:
        labels = [str(v) for v in table.column_values(spec.x_field)]
        values = table.column_values(spec.y_field)
    return labels, values


def _group_rows(ctx: _Ctx) -> tuple[list[str], list[str], list[float]]:
    spec = ctx.spec
    t = spec.table
    return (
        [str(v) for v in t.column_values(spec.x_field)],
        [str(v) for v in t.column_values(spec.group_field)],
        t.column_values(spec.y_field),
    )


def _totals(xs: list[str], ys: list[float]) -> tuple[list[str], list[float]]:
    order: list[str] = []
    sums: dict[str, float] = {}
    for x, y in zip(xs, ys):
        if x not in sums:
            sums[x] = 0.0
            order.append(x)
        sums[x] += y
    return order, [canon_num(sums[x]) for x in order]


def _pick_pair(rng: random.Random, labels: list[str], values: list[float], need_distinct: bool):
    idxs = list(range(len(labels)))
    rng.shuffle(idxs)
    for i in idxs:
        for j in idxs:
            if i == j:
                continue
            if not need_distinct or values[i] != values[j]:
                return labels[i], values[i], labels[j], values[j]
    raise AmbiguousExtremum("no usable comparison pair")


def synthesize_qa(
    record: DatasetRecord,
    task: TaskCategory,
    planted: Optional[PlantedTruth] = None,
    rng_seed: int = 0,
    ordinal: int = 0,
) -> QAPair:
    """One QA pair for (record, task); deterministic given the seed."""
    spec = record.spec
    if not is_legal(spec.chart_type, task.name, task.value_mode):
        raise ValidationError(
            "illegal_cell",
            f"{task.name.value}/{task.value_mode.value} illegal for {spec.chart_type.value}",
        )
    rng = random.Random(
        stable_seed(record.chart_id, task.name.value, task.value_mode.value, rng_seed, ordinal)
    )
    metric = spec.y_label or spec.y_field or spec.x_field or "value"
    unit = spec.x_label or spec.x_field or "entry"
    ctx = _Ctx(record=record, spec=spec, rng=rng, metric=metric, unit=unit)

    handler = _TASK_HANDLERS[task.name]
    flavor, params, answer, trace = handler(ctx, task, planted)
    question = rng.choice(PARAPHRASES[flavor]).format(**params)
    qa = QAPair(
        id=f"{record.chart_id}-q{ordinal}-{task.name.value}-{task.value_mode.value}",
        chart_id=record.chart_id,
        question=question,
        answer=answer,
        category=task,
        qa_style=_style(task, trace.arithmetic, spec, trace.targets_size),
        reasoning=None,
        provenance="generated",
    )
    return attach_reasoning(qa, spec, trace)


def _need_planted(planted: Optional[PlantedTruth], kind: PlantedKind) -> PlantedTruth:
    if planted is None or planted.kind is not kind:
        raise MissingTruth(f"task needs planted {kind.value}")
    return planted


def _handle_data_retrieval(ctx: _Ctx, task, planted):
    spec = ctx.spec
    if task.value_mode is ValueMode.DERIVED:
        values = spec.table.column_values(spec.x_field)
        edges, counts = histogram_bins(values)
        b = ctx.rng.randrange(len(counts))
        lo, hi = bin_label(edges[b], edges[b + 1]).split(" to ")
        trace = OracleTrace(
            (f"The interval {lo} to {hi} holds {counts[b]} observations.",),
            arithmetic=True,
        )
        return (
            "dr_bin",
            {"lo": lo, "hi": hi},
            Answer(AnswerKind.NUMBER, float(counts[b])),
            trace,
        )
    if task.value_mode is ValueMode.RELATIVE:
        if spec.chart_type in (ChartType.STACKED_BAR, ChartType.PCT_STACKED_BAR, ChartType.STACKED_AREA):
            xs, gs, ys = _group_rows(ctx)
            x = ctx.rng.choice(sorted(set(xs)))
            rows = [(g, y) for xv, g, y in zip(xs, gs, ys) if xv == x]
            labels = [g for g, _ in rows]
            vals = [y for _, y in rows]
            g = ctx.rng.choice(labels)
            share, trace = oracle_share(labels, vals, g)
            return (
                "dr_rel_stack",
                {"x": x, "group": g},
                Answer(AnswerKind.NUMBER, share),
                trace,
            )
        if spec.group_field is not None:
            # Grouped bar: share of one segment against the chart total.
            xs, gs, ys = _group_rows(ctx)
            labels = [f"{g} at {x}" for x, g in zip(xs, gs)]
            entity = ctx.rng.choice(labels)
            share, trace = oracle_share(labels, ys, entity)
            return ("dr_rel", {"entity": entity}, Answer(AnswerKind.NUMBER, share), trace)
        labels, values = _series(ctx)
        entity = ctx.rng.choice(labels)
        share, trace = oracle_share(labels, values, entity)
        return ("dr_rel", {"entity": entity}, Answer(AnswerKind.NUMBER, share), trace)
    # absolute
    if spec.group_field is not None and spec.chart_type is not ChartType.TREEMAP:
        xs, gs, ys = _group_rows(ctx)
        i = ctx.rng.randrange(len(xs))
        key = f"{gs[i]} at {xs[i]}"
        v = ys[i]
        trace = OracleTrace((f"{key} has value {fmt_num(v)}.",), arithmetic=False)
        return (
            "dr_group",
            {"metric": ctx.metric, "group": gs[i], "x": xs[i]},
            Answer(AnswerKind.NUMBER, v),
            trace,
        )
    if spec.chart_type is ChartType.BUBBLE:
        from .tables import ColumnKind

        cats = spec.table.columns_of_kind(ColumnKind.CATEGORICAL)
        labels = [str(v) for v in spec.table.column_values(cats[0])]
        sizes = spec.table.column_values(spec.size_field)
        entity = ctx.rng.choice(labels)
        v, trace = oracle_lookup(labels, sizes, entity)
        trace = OracleTrace(trace.steps, trace.arithmetic, targets_size=True)
        return (
            "dr_abs",
            {"metric": spec.size_field, "entity": entity},
            Answer(AnswerKind.NUMBER, v),
            trace,
        )
    labels, values = _series(ctx)
    entity = ctx.rng.choice(labels)
    v, trace = oracle_lookup(labels, values, entity)
    return ("dr_abs", {"metric": ctx.metric, "entity": entity}, Answer(AnswerKind.NUMBER, v), trace)


def _handle_find_extremum(ctx: _Ctx, task, planted):
    spec = ctx.spec
    find_max = ctx.rng.random() < 0.5
    if task.value_mode is ValueMode.DERIVED:
        values = spec.table.column_values(spec.x_field)
        _, counts = histogram_bins(values)
        peak = max(counts)
        trace = OracleTrace((f"The fullest interval holds {peak} observations.",), arithmetic=True)
        return ("ex_bin", {}, Answer(AnswerKind.NUMBER, float(peak)), trace)
    if task.value_mode is ValueMode.RELATIVE:
        if spec.chart_type is ChartType.PCT_STACKED_BAR:
            xs, gs, ys = _group_rows(ctx)
            x = ctx.rng.choice(sorted(set(xs)))
            rows = [(g, y) for xv, g, y in zip(xs, gs, ys) if xv == x]
            label, _, trace = oracle_extremum([g for g, _ in rows], [y for _, y in rows], True)
            return ("ex_rel_stack", {"x": x, "unit": spec.group_field}, Answer(AnswerKind.TEXT, label), trace)
        labels, values = _series(ctx)
        label, _, trace = oracle_extremum(labels, values, True)
        return ("ex_rel", {"unit": ctx.unit}, Answer(AnswerKind.TEXT, label), trace)
    # absolute
    if spec.chart_type in (ChartType.STACKED_BAR, ChartType.STACKED_AREA) or (
        spec.chart_type is ChartType.BAR and spec.grouping is Grouping.MULTIPLE
    ):
        xs, _, ys = _group_rows(ctx)
        order, totals = _totals(xs, ys)
        label, _, trace = oracle_extremum(order, totals, find_max)
        flavor = "ex_total_max" if find_max else "ex_total_min"
        return (flavor, {"unit": ctx.unit, "metric": ctx.metric}, Answer(AnswerKind.TEXT, label), trace)
    if spec.group_field is not None:
        xs, gs, ys = _group_rows(ctx)
        g = ctx.rng.choice(sorted(set(gs)))
        rows = [(x, y) for x, gv, y in zip(xs, gs, ys) if gv == g]
        label, _, trace = oracle_extremum([x for x, _ in rows], [y for _, y in rows], find_max)
        flavor = "ex_max" if find_max else "ex_min"
        return (flavor, {"unit": ctx.unit, "metric": f"{ctx.metric} of {g}"}, Answer(AnswerKind.TEXT, label), trace)
    labels, values = _series(ctx)
    label, _, trace = oracle_extremum(labels, values, find_max)
    flavor = "ex_max" if find_max else "ex_min"
    unit = spec.x_field if spec.chart_type is ChartType.TREEMAP else ctx.unit
    return (flavor, {"unit": unit, "metric": ctx.metric}, Answer(AnswerKind.TEXT, label), trace)


def _handle_determine_range(ctx: _Ctx, task, planted):
    spec = ctx.spec
    if spec.chart_type in (ChartType.STACKED_BAR, ChartType.STACKED_AREA):
        xs, _, ys = _group_rows(ctx)
        order, totals = _totals(xs, ys)
        diff, trace = oracle_range(order, totals)
        return (
            "range_total",
            {"unit": ctx.unit, "metric": ctx.metric},
            Answer(AnswerKind.NUMBER, diff),
            trace,
        )
    if spec.group_field is not None:
        xs, gs, ys = _group_rows(ctx)
        g = ctx.rng.choice(sorted(set(gs)))
        rows = [(x, y) for x, gv, y in zip(xs, gs, ys) if gv == g]
        diff, trace = oracle_range([x for x, _ in rows], [y for _, y in rows])
        return ("range", {"metric": f"{ctx.metric} of {g}"}, Answer(AnswerKind.NUMBER, diff), trace)
    labels, values = _series(ctx)
    diff, trace = oracle_range(labels, values)
    return ("range", {"metric": ctx.metric}, Answer(AnswerKind.NUMBER, diff), trace)


def _handle_characterize_distribution(ctx: _Ctx, task, planted):
    spec = ctx.spec
    truth = _need_planted(planted, PlantedKind.DISTRIBUTION_SHAPE)
    label = truth.payload["label"]
    metric = spec.x_field if spec.chart_type is ChartType.HISTOGRAM else (spec.y_field or ctx.metric)
    trace = OracleTrace(
        (f"The values of {metric} form a {_shape_text(label)} distribution.",),
        arithmetic=False,
    )
    return ("cd", {"metric": metric}, Answer(AnswerKind.TEXT, _shape_text(label)), trace)


def _handle_find_anomalies(ctx: _Ctx, task, planted):
    spec = ctx.spec
    truth = _need_planted(planted, PlantedKind.ANOMALY)
    entity = truth.payload["entity"]
    from .tables import ColumnKind

    cats = spec.table.columns_of_kind(ColumnKind.CATEGORICAL)
    labels = [str(v) for v in spec.table.column_values(cats[0])]
    # Position anomaly: judged on the x/y channels the viewer sees.
    rows = list(
        zip(spec.table.column_values(spec.x_field), spec.table.column_values(spec.y_field))
    )
    idx = labels.index(entity)
    z = anomaly_zscore(rows, idx)
    if z < 3.0:
        raise MissingTruth(f"planted anomaly {entity!r} has z={z:.2f} < 3")
    trace = OracleTrace(
        (f"{entity} sits about {z:.1f} standard deviations from the remaining points.",),
        arithmetic=False,
    )
    return ("fa", {"unit": cats[0]}, Answer(AnswerKind.TEXT, entity), trace)


def _handle_find_clusters(ctx: _Ctx, task, planted):
    truth = _need_planted(planted, PlantedKind.CLUSTERS)
    count = int(truth.payload["count"])
    trace = OracleTrace((f"The points form {count} separated groups.",), arithmetic=False)
    return ("fc", {}, Answer(AnswerKind.NUMBER, float(count)), trace)


def _handle_correlations_trends(ctx: _Ctx, task, planted):
    spec = ctx.spec
    if spec.chart_type in (ChartType.SCATTERPLOT, ChartType.BUBBLE):
        xs = spec.table.column_values(spec.x_field)
        ys = spec.table.column_values(spec.y_field)
        r = pearson(xs, ys)
        label = correlation_label(r)
        trace = OracleTrace(
            (f"The correlation between {spec.x_field} and {spec.y_field} is about {r:.2f}.",),
            arithmetic=False,
        )
        return (
            "fct_corr",
            {"xcol": spec.x_field, "ycol": spec.y_field},
            Answer(AnswerKind.TEXT, label),
            trace,
        )
    if spec.chart_type is ChartType.STACKED_AREA:
        xs, _, ys = _group_rows(ctx)
        _, totals = _totals(xs, ys)
        label = trend_label(totals)
        trace = OracleTrace((f"The totals follow a {label} trend.",), arithmetic=False)
        return ("fct_trend", {"metric": f"total {ctx.metric}"}, Answer(AnswerKind.TEXT, label), trace)
    if spec.group_field is not None:
        xs, gs, ys = _group_rows(ctx)
        g = ctx.rng.choice(sorted(set(gs)))
        series = [y for gv, y in zip(gs, ys) if gv == g]
        label = trend_label(series)
        trace = OracleTrace((f"{g} follows a {label} trend.",), arithmetic=False)
        return ("fct_trend", {"metric": f"{ctx.metric} of {g}"}, Answer(AnswerKind.TEXT, label), trace)
    _, values = _series(ctx)
    label = trend_label(values)
    trace = OracleTrace((f"The series follows a {label} trend.",), arithmetic=False)
    return ("fct_trend", {"metric": ctx.metric}, Answer(AnswerKind.TEXT, label), trace)


def _handle_make_comparisons(ctx: _Ctx, task, planted):
    spec = ctx.spec
    rng = ctx.rng
    if task.value_mode is ValueMode.DERIVED:
        values = spec.table.column_values(spec.x_field)
        edges, counts = histogram_bins(values)
        if len(counts) < 2:
            raise AmbiguousExtremum("need at least two bins to compare")
        b1, b2 = rng.sample(range(len(counts)), 2)
        lo1, hi1 = bin_label(edges[b1], edges[b1 + 1]).split(" to ")
        lo2, hi2 = bin_label(edges[b2], edges[b2 + 1]).split(" to ")
        more = counts[b1] > counts[b2]
        trace = OracleTrace(
            (
                f"The interval {lo1} to {hi1} holds {counts[b1]} observations.",
                f"The interval {lo2} to {hi2} holds {counts[b2]} observations.",
                f"{counts[b1]} {'>' if more else '<='} {counts[b2]}.",
            ),
            arithmetic=True,
        )
        return (
            "mc_bin_more",
            {"lo1": lo1, "hi1": hi1, "lo2": lo2, "hi2": hi2},
            Answer(AnswerKind.BOOLEAN, more),
            trace,
        )
    if task.value_mode is ValueMode.RELATIVE:
        if spec.chart_type in (ChartType.STACKED_BAR, ChartType.PCT_STACKED_BAR, ChartType.STACKED_AREA):
            xs, gs, ys = _group_rows(ctx)
            x = rng.choice(sorted(set(xs)))
            rows = [(g, y) for xv, g, y in zip(xs, gs, ys) if xv == x]
            a, va, b, vb = _pick_pair(rng, [g for g, _ in rows], [y for _, y in rows], need_distinct=False)
            ratio, trace = oracle_ratio(f"{a} in {x}", va, f"{b} in {x}", vb)
            return (
                "mc_ratio",
                {"a": f"{a} in {x}", "b": f"{b} in {x}"},
                Answer(AnswerKind.NUMBER, ratio),
                trace,
            )
        labels, values = _series(ctx)
        a, va, b, vb = _pick_pair(rng, labels, values, need_distinct=False)
        ratio, trace = oracle_ratio(a, va, b, vb)
        return ("mc_ratio", {"a": a, "b": b}, Answer(AnswerKind.NUMBER, ratio), trace)
    # absolute
    if spec.chart_type in (ChartType.STACKED_BAR, ChartType.STACKED_AREA) or (
        spec.group_field is not None and spec.chart_type in (ChartType.BAR,)
    ):
        xs, _, ys = _group_rows(ctx)
        order, totals = _totals(xs, ys)
        labels, values = order, totals
        suffix = " (total)"
    elif spec.group_field is not None:
        xs, gs, ys = _group_rows(ctx)
        g = rng.choice(sorted(set(gs)))
        rows = [(x, y) for x, gv, y in zip(xs, gs, ys) if gv == g]
        labels = [f"{x} ({g})" for x, _ in rows]
        values = [y for _, y in rows]
        suffix = ""
    else:
        labels, values = _series(ctx)
        suffix = ""
    if rng.random() < 0.5:
        a, va, b, vb = _pick_pair(rng, labels, values, need_distinct=True)
        winner, trace = oracle_which_larger(a, va, b, vb)
        return ("mc_which", {"a": a, "b": b}, Answer(AnswerKind.TEXT, winner), trace)
    a, va, b, vb = _pick_pair(rng, labels, values, need_distinct=False)
    diff, trace = oracle_difference(a, va, b, vb)
    return ("mc_diff", {"a": a, "b": b}, Answer(AnswerKind.NUMBER, diff), trace)


def _handle_etc(ctx: _Ctx, task, planted):
    spec = ctx.spec
    if spec.chart_type is ChartType.HISTOGRAM:
        values = spec.table.column_values(spec.x_field)
        edges, counts = histogram_bins(values)
        peak = max(counts)
        winners = [b for b, c in enumerate(counts) if c == peak]
        if len(winners) != 1:
            raise AmbiguousExtremum(f"{len(winners)} bins tie at {peak}")
        b = winners[0]
        lo, hi = canon_num(edges[b]), canon_num(edges[b + 1])
        trace = OracleTrace(
            (f"The interval {fmt_num(lo)} to {fmt_num(hi)} holds {peak} observations, more than any other.",),
            arithmetic=True,
        )
        return ("etc_hist", {}, Answer(AnswerKind.RANGE, (lo, hi)), trace)
    # treemap hierarchy
    parents = [str(v) for v in spec.table.column_values(spec.group_field)]
    children = [str(v) for v in spec.table.column_values(spec.x_field)]
    if ctx.rng.random() < 0.5:
        child = ctx.rng.choice(children)
        parent = parents[children.index(child)]
        trace = OracleTrace((f"{child} is nested inside {parent}.",), arithmetic=False)
        return (
            "etc_parent",
            {"parent_col": spec.group_field, "child": child},
            Answer(AnswerKind.TEXT, parent),
            trace,
        )
    parent = ctx.rng.choice(sorted(set(parents)))
    count = sum(1 for p in parents if p == parent)
    trace = OracleTrace((f"{parent} contains {count} entries.",), arithmetic=True)
    return (
        "etc_children",
        {"child_col": spec.x_field, "parent": parent},
        Answer(AnswerKind.NUMBER, float(count)),
        trace,
    )


_TASK_HANDLERS = {
    TaskName.DATA_RETRIEVAL: _handle_data_retrieval,
    TaskName.FIND_EXTREMUM: _handle_find_extremum,
    TaskName.DETERMINE_RANGE: _handle_determine_range,
    TaskName.CHARACTERIZE_DISTRIBUTION: _handle_characterize_distribution,
    TaskName.FIND_ANOMALIES: _handle_find_anomalies,
    TaskName.FIND_CLUSTERS: _handle_find_clusters,
    TaskName.FIND_CORRELATIONS_TRENDS: _handle_correlations_trends,
    TaskName.MAKE_COMPARISONS: _handle_make_comparisons,
    TaskName.ETC_TASK: _handle_etc,
}


# ---------------------------------------------------------------------------
# balancing
# ---------------------------------------------------------------------------


def cell_key(chart_type: ChartType, name: TaskName, mode: ValueMode) -> str:
    return f"{ChartType(chart_type).value}|{TaskName(name).value}|{ValueMode(mode).value}"


@dataclass(frozen=True)
class QuotaPolicy:
    """Per-cell [min, max] counts over (chart_type, task, value_mode)."""

    cells: Mapping[str, tuple[int, int]]
    rng_seed: int = 0

    def __post_init__(self):
        from .tasks import all_legal_triples

        legal = {cell_key(*t) for t in all_legal_triples()}
        for key, (mn, mx) in self.cells.items():
            if key not in legal:
                raise ValidationError("illegal_cell", f"{key} is not a legal cell")
            if mn > mx or mn < 0:
                raise ValidationError("bad_quota", f"{key}: min {mn} > max {mx}")

    @classmethod
    def uniform(cls, minimum: int, maximum: int, rng_seed: int = 0) -> "QuotaPolicy":
        from .tasks import all_legal_triples

        return cls(
            cells={cell_key(*t): (minimum, maximum) for t in all_legal_triples()},
            rng_seed=rng_seed,
        )


@dataclass(frozen=True)
class BalanceReport:
    kept: tuple[str, ...]              # qa ids kept
    trimmed: tuple[str, ...]           # qa ids dropped for exceeding max
    shortfalls: tuple[tuple[str, int], ...]  # (cell, missing) pairs


def balance_tasks(
    qas: Sequence[QAPair],
    chart_types: Mapping[str, ChartType],
    policy: QuotaPolicy,
) -> tuple[list[QAPair], BalanceReport]:
    """Trim overfull cells deterministically; report shortfalls, never pad."""
    rng = random.Random(policy.rng_seed)
    by_cell: dict[str, list[QAPair]] = {}
    for qa in qas:
        ct = chart_types[qa.chart_id]
        key = cell_key(ct, qa.category.name, qa.category.value_mode)
        by_cell.setdefault(key, []).append(qa)

    kept: list[QAPair] = []
    trimmed: list[str] = []
    shortfalls: list[tuple[str, int]] = []
    for key in sorted(set(by_cell) | set(policy.cells)):
        pool = sorted(by_cell.get(key, []), key=lambda q: q.id)
        mn, mx = policy.cells.get(key, (0, len(pool)))
        if len(pool) > mx:
            rng.shuffle(pool)
            keep, drop = pool[:mx], pool[mx:]
            kept.extend(sorted(keep, key=lambda q: q.id))
            trimmed.extend(sorted(q.id for q in drop))
        else:
            kept.extend(pool)
        if len(pool) < mn:
            shortfalls.append((key, mn - len(pool)))
    kept.sort(key=lambda q: q.id)
    return kept, BalanceReport(
        kept=tuple(q.id for q in kept),
        trimmed=tuple(trimmed),
        shortfalls=tuple(shortfalls),
    )
