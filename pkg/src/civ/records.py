"""QA pairs and dataset records: the unit everything else produces or consumes."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

from .charts import ChartAttributes, ChartSpec
from .errors import ValidationError
from .tables import DataTable, canon_num, fmt_num
from .tasks import TaskCategory, is_legal

SCHEMA_VERSION = "civ-1"


class AnswerKind(str, Enum):
    NUMBER = "number"
    TEXT = "text"
    RANGE = "range"
    BOOLEAN = "boolean"
    LIST = "list"


class QAStyle(str, Enum):
    DATA_RETRIEVAL = "data_retrieval"
    VISUAL = "visual"
    COMPOSITIONAL = "compositional"
    VISUAL_COMPOSITIONAL = "visual_compositional"


@dataclass(frozen=True)
class Answer:
    """Typed oracle answer. Numbers are canonicalized like table cells."""

    kind: AnswerKind
    value: object

    def __post_init__(self):
        object.__setattr__(self, "kind", AnswerKind(self.kind))
        k, v = self.kind, self.value
        if k is AnswerKind.NUMBER:
            object.__setattr__(self, "value", canon_num(v))
        elif k is AnswerKind.TEXT:
            if not isinstance(v, str) or not v:
                raise ValidationError("bad_answer", f"text answer {v!r}")
        elif k is AnswerKind.RANGE:
            lo, hi = v
            lo, hi = canon_num(lo), canon_num(hi)
            if lo > hi:
                raise ValidationError("bad_answer", f"range lo {lo} > hi {hi}")
            object.__setattr__(self, "value", (lo, hi))
        elif k is AnswerKind.BOOLEAN:
            if not isinstance(v, bool):
                raise ValidationError("bad_answer", f"boolean answer {v!r}")
        elif k is AnswerKind.LIST:
            items = tuple(v)
            if not items or not all(isinstance(s, str) and s for s in items):
                raise ValidationError("bad_answer", f"list answer {v!r}")
            object.__setattr__(self, "value", items)

    def as_text(self) -> str:
        """Canonical short-answer rendering (what a perfect model would say)."""
        if self.kind is AnswerKind.NUMBER:
            return fmt_num(self.value)
        if self.kind is AnswerKind.TEXT:
            return self.value
        if self.kind is AnswerKind.RANGE:
            lo, hi = self.value
            return f"{fmt_num(lo)} to {fmt_num(hi)}"
        if self.kind is AnswerKind.BOOLEAN:
            return "yes" if self.value else "no"
        return ", ".join(self.value)

    def to_json_dict(self) -> dict:
        if self.kind is AnswerKind.NUMBER:
            value = fmt_num(self.value)
        elif self.kind is AnswerKind.RANGE:
            value = [fmt_num(self.value[0]), fmt_num(self.value[1])]
        elif self.kind is AnswerKind.LIST:
            value = list(self.value)
        else:
            value = self.value
        return {"kind": self.kind.value, "value": value}

    @classmethod
    def from_json_dict(cls, d: dict) -> "Answer":
        kind = AnswerKind(d["kind"])
        value = d["value"]
        if kind is AnswerKind.NUMBER:
            value = float(value)
        elif kind is AnswerKind.RANGE:
            value = (float(value[0]), float(value[1]))
        elif kind is AnswerKind.LIST:
            value = tuple(value)
        return cls(kind=kind, value=value)


@dataclass(frozen=True)
class QAPair:
    id: str
    chart_id: str
    question: str
    answer: Answer
    category: TaskCategory
    qa_style: QAStyle
    reasoning: Optional[tuple[str, ...]] = None
    provenance: str = "generated"

    def __post_init__(self):
        object.__setattr__(self, "qa_style", QAStyle(self.qa_style))
        if not self.id or not self.chart_id or not self.question:
            raise ValidationError("bad_qa", "id, chart_id, and question are required")
        if self.provenance not in ("generated", "filtered"):
            raise ValidationError("bad_qa", f"provenance {self.provenance!r}")
        if self.reasoning is not None:
            steps = tuple(self.reasoning)
            if not steps or not all(isinstance(s, str) and s for s in steps):
                raise ValidationError("bad_qa", "reasoning must be non-empty steps")
            object.__setattr__(self, "reasoning", steps)

    def with_reasoning(self, steps: Optional[tuple[str, ...]]) -> "QAPair":
        return replace(self, reasoning=steps)

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "chart_id": self.chart_id,
            "question": self.question,
            "answer": self.answer.to_json_dict(),
            "category": self.category.to_json_dict(),
            "qa_style": self.qa_style.value,
            "reasoning": list(self.reasoning) if self.reasoning else None,
            "provenance": self.provenance,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "QAPair":
        reasoning = d.get("reasoning")
        return cls(
            id=d["id"],
            chart_id=d["chart_id"],
            question=d["question"],
            answer=Answer.from_json_dict(d["answer"]),
            category=TaskCategory.from_json_dict(d["category"]),
            qa_style=QAStyle(d["qa_style"]),
            reasoning=tuple(reasoning) if reasoning else None,
            provenance=d.get("provenance", "generated"),
        )


@dataclass(frozen=True)
class DatasetRecord:
    """One chart with its encoded table, attributes, and attached QA pairs."""

    chart_id: str
    spec: ChartSpec
    svg_path: str
    table: DataTable
    qa_pairs: tuple[QAPair, ...]
    attributes: ChartAttributes
    source_kind: str = "generated"   # generated | filtered
    source_name: str = "civ"

    def __post_init__(self):
        object.__setattr__(self, "qa_pairs", tuple(self.qa_pairs))
        if self.source_kind not in ("generated", "filtered"):
            raise ValidationError("bad_source", f"source_kind {self.source_kind!r}")
        if self.chart_id != self.spec.id:
            raise ValidationError(
                "id_mismatch", f"record {self.chart_id!r} vs spec {self.spec.id!r}"
            )
        if self.table != self.spec.table:
            raise ValidationError(
                "table_mismatch", "record table must equal the table the spec encodes"
            )
        if self.attributes.chart_type is not self.spec.chart_type:
            raise ValidationError("attr_mismatch", "attributes chart_type differs from spec")
        for qa in self.qa_pairs:
            if qa.chart_id != self.chart_id:
                raise ValidationError(
                    "qa_chart_mismatch", f"qa {qa.id} points at {qa.chart_id!r}"
                )
            if not is_legal(self.spec.chart_type, qa.category.name, qa.category.value_mode):
                raise ValidationError(
                    "illegal_cell",
                    f"qa {qa.id}: {qa.category.name.value}/{qa.category.value_mode.value} "
                    f"illegal for {self.spec.chart_type.value}",
                )

    def with_qa_pairs(self, qa_pairs) -> "DatasetRecord":
        return replace(self, qa_pairs=tuple(qa_pairs))

    def to_json_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "chart_id": self.chart_id,
            "spec": self.spec.to_json_dict(),
            "svg_path": self.svg_path,
            "table": self.table.to_json_dict(),
            "qa_pairs": [qa.to_json_dict() for qa in self.qa_pairs],
            "attributes": self.attributes.to_json_dict(),
            "source": {"kind": self.source_kind, "name": self.source_name},
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "DatasetRecord":
        if d.get("schema") != SCHEMA_VERSION:
            raise ValidationError("schema_version", f"expected {SCHEMA_VERSION}, got {d.get('schema')!r}")
        return cls(
            chart_id=d["chart_id"],
            spec=ChartSpec.from_json_dict(d["spec"]),
            svg_path=d["svg_path"],
            table=DataTable.from_json_dict(d["table"]),
            qa_pairs=tuple(QAPair.from_json_dict(q) for q in d["qa_pairs"]),
            attributes=ChartAttributes.from_json_dict(d["attributes"]),
            source_kind=d["source"]["kind"],
            source_name=d["source"]["name"],
        )
