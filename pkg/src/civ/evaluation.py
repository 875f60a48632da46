"""Benchmark evaluation: response collection, per-item verdicts, reports."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import ParseError, TransportError, UnknownItem
from .metrics import JudgeVerdict, judge_evaluate
from .records import DatasetRecord, QAPair
from .tasks import TaskName

SHORT_ANSWER_SUFFIX = "Please answer with a single word or phrase."


@dataclass(frozen=True)
class ModelResponse:
    qa_id: str
    raw_text: str
    missing: bool = False


def benchmark_items(records: Sequence[DatasetRecord]) -> list[QAPair]:
    return [qa for r in records for qa in r.qa_pairs]


def read_responses(path) -> list[ModelResponse]:
    """Response file: JSONL of {"qa_id", "raw_text"}."""
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
                out.append(ModelResponse(qa_id=str(d["qa_id"]), raw_text=str(d["raw_text"])))
            except (json.JSONDecodeError, KeyError) as e:
                raise ParseError(f"bad response line: {e}", line=lineno) from None
    return out


def write_responses(path, responses: Sequence[ModelResponse]):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for r in responses:
            f.write(json.dumps({"qa_id": r.qa_id, "raw_text": r.raw_text}, sort_keys=True))
            f.write("\n")


def collect_responses(
    records: Sequence[DatasetRecord],
    model=None,
    response_file=None,
) -> list[ModelResponse]:
    """One response per benchmark item, from a file or a live client.

    Transport failures never abort the run; those items come back flagged
    missing and score as incorrect.
    """
    items = benchmark_items(records)
    if response_file is not None:
        by_id = {r.qa_id: r for r in read_responses(response_file)}
        return [
            by_id.get(qa.id, ModelResponse(qa_id=qa.id, raw_text="", missing=True))
            for qa in items
        ]
    if model is None:
        raise ValueError("need a model client or a response file")
    out = []
    for qa in items:
        prompt = f"{qa.question} {SHORT_ANSWER_SUFFIX}"
        try:
            text = model.complete([{"role": "user", "content": prompt}])
            out.append(ModelResponse(qa_id=qa.id, raw_text=text))
        except TransportError:
            out.append(ModelResponse(qa_id=qa.id, raw_text="", missing=True))
    return out


@dataclass(frozen=True)
class EvalItem:
    qa_id: str
    correct: bool
    mode: str  # judge mode or "missing"


@dataclass(frozen=True)
class EvalResult:
    items: tuple[EvalItem, ...]
    accuracy_by_category: dict[str, Optional[float]]
    accuracy_by_style: dict[str, Optional[float]]
    counts_by_category: dict[str, int]
    counts_by_style: dict[str, int]
    overall: float
    table_f1_mean: Optional[float] = None

    def to_json_dict(self) -> dict:
        return {
            "overall_accuracy": self.overall,
            "accuracy_by_category": self.accuracy_by_category,
            "accuracy_by_style": self.accuracy_by_style,
            "counts_by_category": self.counts_by_category,
            "counts_by_style": self.counts_by_style,
            "table_f1_mean": self.table_f1_mean,
            "items": [
                {"qa_id": it.qa_id, "correct": it.correct, "mode": it.mode}
                for it in self.items
            ],
        }


CATEGORY_ORDER = [t.value for t in TaskName]
STYLE_ORDER = ["data_retrieval", "compositional", "visual", "visual_compositional"]


def evaluate_responses(
    records: Sequence[DatasetRecord],
    responses: Sequence[ModelResponse],
    judge=None,
) -> EvalResult:
    """Score responses and aggregate per task category and question style."""
    items = benchmark_items(records)
    by_qa = {qa.id: qa for qa in items}
    unknown = [r.qa_id for r in responses if r.qa_id not in by_qa]
    if unknown:
        raise UnknownItem(unknown)
    by_resp = {r.qa_id: r for r in responses}

    evals: list[EvalItem] = []
    cat_hits: dict[str, list[bool]] = {}
    style_hits: dict[str, list[bool]] = {}
    for qa in items:
        resp = by_resp.get(qa.id)
        if resp is None or resp.missing:
            correct, mode = False, "missing"
        else:
            verdict: JudgeVerdict = judge_evaluate(qa, resp.raw_text, judge=judge)
            correct, mode = verdict.equivalent, verdict.mode
        evals.append(EvalItem(qa_id=qa.id, correct=correct, mode=mode))
        cat_hits.setdefault(qa.category.name.value, []).append(correct)
        style_hits.setdefault(qa.qa_style.value, []).append(correct)

    def agg(hits: dict[str, list[bool]], order: list[str]):
        acc: dict[str, Optional[float]] = {}
        counts: dict[str, int] = {}
        for key in order:
            group = hits.get(key, [])
            counts[key] = len(group)
            acc[key] = (sum(group) / len(group)) if group else None
        return acc, counts

    acc_cat, n_cat = agg(cat_hits, CATEGORY_ORDER)
    acc_style, n_style = agg(style_hits, STYLE_ORDER)
    overall = sum(e.correct for e in evals) / len(evals) if evals else 0.0
    return EvalResult(
        items=tuple(evals),
        accuracy_by_category=acc_cat,
        accuracy_by_style=acc_style,
        counts_by_category=n_cat,
        counts_by_style=n_style,
        overall=overall,
    )


_HEADINGS = {
    "data_retrieval": "Data Retrieval",
    "find_extremum": "Find Extremum",
    "determine_range": "Determine Range",
    "characterize_distribution": "Characterize Distribution",
    "find_anomalies": "Find Anomalies",
    "find_clusters": "Find Clusters",
    "find_correlations_trends": "Find Correlations/Trends",
    "make_comparisons": "Make Comparisons",
    "etc_task": "ETC",
    "compositional": "Compositional",
    "visual": "Visual",
    "visual_compositional": "Visual-Compositional",
}


def _fmt_cell(v: Optional[float]) -> str:
    return "n/a" if v is None else f"{v * 100:.2f}%"


def render_report(result: EvalResult, title: str = "Benchmark results") -> str:
    """Aligned text report: task-category columns, then question-style columns."""
    lines = [title, "=" * len(title), ""]

    def block(name: str, acc: dict, counts: dict, order: list[str]):
        lines.append(name)
        rows = [
            (_HEADINGS.get(k, k), _fmt_cell(acc[k]), str(counts[k]))
            for k in order
        ]
        w0 = max(len(r[0]) for r in rows)
        w1 = max(max(len(r[1]) for r in rows), 8)
        lines.append(f"  {'category'.ljust(w0)}  {'accuracy'.rjust(w1)}  items")
        for label, cell, n in rows:
            lines.append(f"  {label.ljust(w0)}  {cell.rjust(w1)}  {n}")
        lines.append("")

    block("By task category", result.accuracy_by_category, result.counts_by_category, CATEGORY_ORDER)
    block("By question style", result.accuracy_by_style, result.counts_by_style, STYLE_ORDER)
    lines.append(f"Overall accuracy: {result.overall * 100:.2f}% over {len(result.items)} items")
    if result.table_f1_mean is not None:
        lines.append(f"Chart-to-table mean F1: {result.table_f1_mean:.4f}")
    lines.append("")
    return "\n".join(lines)
