"""Retrieval-augmented chart generation: seed bank, prompts, gated LLM path.

The optional LLM lane is render-and-validate gated: generated specs are
accepted only when they parse, validate, and re-encode the prompt's table
exactly, so model instability cannot leak bad charts into the corpus.
"""

from __future__ import annotations

import json
import os
import re
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Callable, Optional, Protocol, Sequence

from .charts import ChartSpec, ChartType
from .errors import EmptyBank, ParseRejected, TransportError, ValidationError
from .features import FeatureVector, nearest_neighbors, table_feature_vector
from .render import extract_table_from_spec
from .tables import ColumnKind, DataTable

ENV_ENDPOINT = "CIV_LLM_ENDPOINT"
ENV_KEY = "CIV_LLM_KEY"

#: Visual mappings each chart type may use, spelled out for the prompt.
ALLOWED_MAPPINGS: dict[ChartType, tuple[str, ...]] = {
    ChartType.LINE: ("x: ordered field", "y: numeric value", "color: optional series"),
    ChartType.BAR: ("x: category", "y: numeric value (bar length)", "color: optional group", "bar width"),
    ChartType.STACKED_BAR: ("x: category", "y: numeric value (segment length)", "color: segment"),
    ChartType.PCT_STACKED_BAR: ("x: category", "y: share of bar total", "color: segment"),
    ChartType.PIE: ("angle: share of total", "color: category"),
    ChartType.HISTOGRAM: ("x: binned numeric value", "y: bin count"),
    ChartType.SCATTERPLOT: ("x: numeric value", "y: numeric value", "label: entity name"),
    ChartType.AREA: ("x: ordered field", "y: numeric value (filled)",),
    ChartType.STACKED_AREA: ("x: ordered field", "y: numeric value (stacked band)", "color: series"),
    ChartType.BUBBLE: ("x: numeric value", "y: numeric value", "area: numeric size", "label: entity name"),
    ChartType.TREEMAP: ("area: numeric value", "nesting: parent group", "label: leaf name"),
}


@dataclass(frozen=True)
class SeedEntry:
    table: DataTable
    code_or_spec: str
    library_tag: str
    feature: FeatureVector


@dataclass(frozen=True)
class SeedBank:
    entries: tuple[SeedEntry, ...]

    @classmethod
    def from_pairs(
        cls, pairs: Sequence[tuple[DataTable, str, str]]
    ) -> "SeedBank":
        """Build from (table, code_or_spec, library_tag) triples."""
        entries = []
        for i, (table, code, tag) in enumerate(pairs):
            entries.append(
                SeedEntry(
                    table=table,
                    code_or_spec=code,
                    library_tag=tag,
                    feature=table_feature_vector(table, source_id=f"seed-{i:05d}"),
                )
            )
        return cls(entries=tuple(entries))

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for e in self.entries:
                f.write(
                    json.dumps(
                        {
                            "table": e.table.to_json_dict(),
                            "code_or_spec": e.code_or_spec,
                            "library_tag": e.library_tag,
                        },
                        sort_keys=True,
                        separators=(",", ":"),
                    )
                    + "\n"
                )

    @classmethod
    def load(cls, path) -> "SeedBank":
        pairs = []
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                d = json.loads(line)
                pairs.append(
                    (DataTable.from_json_dict(d["table"]), d["code_or_spec"], d["library_tag"])
                )
        return cls.from_pairs(pairs)


@dataclass(frozen=True)
class GenerationPrompt:
    instruction: str
    few_shot_examples: tuple[tuple[DataTable, str], ...]  # ordered by similarity desc
    target_table: DataTable
    allowed_mappings: tuple[str, ...]

    def render(self) -> str:
        parts = [self.instruction, ""]
        for i, (table, code) in enumerate(self.few_shot_examples, start=1):
            parts.append(f"Example {i}:")
            parts.append("Table:")
            parts.append(_table_text(table))
            parts.append("Spec:")
            parts.append(code)
            parts.append("")
        parts.append("Allowed visual mappings for the target chart:")
        for m in self.allowed_mappings:
            parts.append(f"- {m}")
        parts.append("")
        parts.append("Target table:")
        parts.append(_table_text(self.target_table))
        parts.append("Respond with one JSON chart spec only.")
        return "\n".join(parts)


def _table_text(table: DataTable) -> str:
    from .tables import fmt_num

    header = "\t".join(c.name for c in table.columns)
    lines = [header]
    for row in table.rows:
        cells = [
            fmt_num(v) if c.kind is ColumnKind.NUMERIC else str(v)
            for c, v in zip(table.columns, row)
        ]
        lines.append("\t".join(cells))
    return "\n".join(lines)


def build_generation_prompt(
    table: DataTable,
    seed_bank: SeedBank,
    shots: int,
    chart_type: Optional[ChartType] = None,
) -> GenerationPrompt:
    """Few-shot prompt from the nearest seed examples by table similarity."""
    if not seed_bank.entries:
        raise EmptyBank("seed bank has no entries")
    if shots < 1:
        raise ValidationError("bad_shots", "shots must be >= 1")
    query = table_feature_vector(table, source_id="query")
    ranked = nearest_neighbors(query, [e.feature for e in seed_bank.entries], shots)
    by_id = {e.feature.source_id: e for e in seed_bank.entries}
    examples = tuple((by_id[i].table, by_id[i].code_or_spec) for i, _ in ranked)
    if chart_type is None:
        mappings = tuple(
            f"{ct.value}: " + "; ".join(ALLOWED_MAPPINGS[ct]) for ct in ChartType
        )
    else:
        mappings = ALLOWED_MAPPINGS[ChartType(chart_type)]
    instruction = (
        "You design charts. Given a data table, produce a declarative JSON "
        "chart spec that encodes the table faithfully."
    )
    return GenerationPrompt(
        instruction=instruction,
        few_shot_examples=examples,
        target_table=table,
        allowed_mappings=mappings,
    )


# ---------------------------------------------------------------------------
# text-generation clients
# ---------------------------------------------------------------------------


class TextGenClient(Protocol):
    def complete(self, messages: list[dict], temperature: float = 0.0) -> str: ...


@dataclass
class StubClient:
    """Deterministic stand-in used in tests and offline runs."""

    reply: str | Callable[[list[dict]], str]

    def complete(self, messages: list[dict], temperature: float = 0.0) -> str:
        if callable(self.reply):
            return self.reply(messages)
        return self.reply


@dataclass
class HttpChatClient:
    """Minimal chat-completions-style HTTP client: {model, messages, temperature} -> {text}."""

    endpoint: str
    api_key: str = ""
    model: str = "default"
    timeout: float = 30.0
    max_attempts: int = 3
    sleep: Callable[[float], None] = time.sleep

    @classmethod
    def from_env(cls) -> Optional["HttpChatClient"]:
        endpoint = os.environ.get(ENV_ENDPOINT)
        if not endpoint:
            return None
        return cls(endpoint=endpoint, api_key=os.environ.get(ENV_KEY, ""))

    def complete(self, messages: list[dict], temperature: float = 0.0) -> str:
        payload = json.dumps(
            {"model": self.model, "messages": messages, "temperature": temperature}
        ).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                self.sleep(0.5 * 2 ** (attempt - 1))
            try:
                req = urllib.request.Request(self.endpoint, data=payload, headers=headers)
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    body = json.loads(resp.read().decode("utf-8"))
                return str(body["text"])
            except (urllib.error.URLError, OSError, KeyError, json.JSONDecodeError) as e:
                last_error = e
        raise TransportError(f"request failed after {self.max_attempts} attempts: {last_error}")


# ---------------------------------------------------------------------------
# gated generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GenerationOutcome:
    accepted: bool
    spec: Optional[ChartSpec]
    reason: str = ""


_JSON_BLOCK = re.compile(r"\{.*\}", re.DOTALL)


def llm_generate_chart(
    prompt: GenerationPrompt,
    client: TextGenClient,
    temperature: float = 0.0,
    numeric_tolerance: float = 1e-9,
) -> GenerationOutcome:
    """Ask the client for a spec; accept only if it re-encodes the table exactly."""
    text = client.complete(
        [{"role": "user", "content": prompt.render()}], temperature=temperature
    )
    match = _JSON_BLOCK.search(text)
    if not match:
        raise ParseRejected("no JSON object in model output")
    try:
        payload = json.loads(match.group(0))
    except json.JSONDecodeError as e:
        raise ParseRejected(f"bad JSON in model output: {e}") from None
    try:
        spec = ChartSpec.from_json_dict(payload)
    except (ValidationError, KeyError, TypeError, ValueError) as e:
        return GenerationOutcome(False, None, reason=f"invalid_spec: {e}")
    mismatch = _table_mismatch(spec, prompt.target_table, numeric_tolerance)
    if mismatch:
        return GenerationOutcome(False, None, reason=f"table_mismatch: {mismatch}")
    extracted = extract_table_from_spec(spec)
    mismatch = _table_mismatch_tables(extracted, spec.table, numeric_tolerance)
    if mismatch:
        return GenerationOutcome(False, None, reason=f"render_mismatch: {mismatch}")
    return GenerationOutcome(True, spec, reason="accepted")


def _table_mismatch(spec: ChartSpec, target: DataTable, tol: float) -> str:
    return _table_mismatch_tables(spec.table, target, tol)


def _table_mismatch_tables(got: DataTable, want: DataTable, tol: float) -> str:
    if [c.name for c in got.columns] != [c.name for c in want.columns]:
        return "column names differ"
    if got.n_rows != want.n_rows:
        return f"{got.n_rows} rows vs {want.n_rows}"
    for i, (ra, rb) in enumerate(zip(got.rows, want.rows)):
        for col, a, b in zip(got.columns, ra, rb):
            if col.kind is ColumnKind.NUMERIC:
                if abs(float(a) - float(b)) > tol * max(1.0, abs(float(b))):
                    return f"cell ({i}, {col.name}): {a} != {b}"
            elif str(a) != str(b):
                return f"cell ({i}, {col.name}): {a!r} != {b!r}"
    return ""
