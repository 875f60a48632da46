"""Scoring: relaxed correctness, judge equivalence, chart-to-table F1, style tags.

Relaxed correctness demands exact matches for text and allows 5% relative
error (inclusive) for numbers. The judge layer adds semantic normalization
plus a carve-out: years and counted quantities must match exactly.
"""

from __future__ import annotations

import difflib
import hashlib
import re
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import TransportError
from .records import Answer, AnswerKind, QAPair, QAStyle
from .tables import ColumnKind, DataTable

NUMERIC_TOLERANCE = 0.05  # inclusive
ZERO_TOLERANCE = 1e-9
DETECTOR_VERSION = "jd-1"

_NUMBER_RE = re.compile(r"[-+]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?(?:[eE][-+]?\d+)?|[-+]?\.\d+")
_CURRENCY = "$€£¥"

_YES_TOKENS = {"yes", "true", "y"}
_NO_TOKENS = {"no", "false", "n"}


def parse_numbers(text: str, limit: int = 2) -> list[float]:
    """Leading numbers in the text, with %, commas, and currency stripped."""
    cleaned = text.strip()
    for ch in _CURRENCY:
        cleaned = cleaned.replace(ch, "")
    cleaned = cleaned.replace("%", "")
    out = []
    for m in _NUMBER_RE.finditer(cleaned):
        out.append(float(m.group(0).replace(",", "")))
        if len(out) >= limit:
            break
    return out


def parse_number(text: str) -> Optional[float]:
    nums = parse_numbers(text, limit=1)
    return nums[0] if nums else None


def _norm_text(s: str) -> str:
    return " ".join(s.strip().lower().split())


def _number_close(pred: float, gold: float) -> bool:
    if gold == 0:
        return abs(pred) <= ZERO_TOLERANCE
    return abs(pred - gold) / abs(gold) <= NUMERIC_TOLERANCE


def relaxed_correctness(pred: str, gold: Answer) -> bool:
    """Exact text match, 5% (inclusive) numeric tolerance, per answer kind."""
    pred = pred if isinstance(pred, str) else str(pred)
    kind = gold.kind
    if kind is AnswerKind.NUMBER:
        p = parse_number(pred)
        return p is not None and _number_close(p, float(gold.value))
    if kind is AnswerKind.TEXT:
        return _norm_text(pred) == _norm_text(gold.value)
    if kind is AnswerKind.RANGE:
        nums = sorted(parse_numbers(pred, limit=2))
        lo, hi = sorted(gold.value)
        return len(nums) == 2 and _number_close(nums[0], lo) and _number_close(nums[1], hi)
    if kind is AnswerKind.BOOLEAN:
        token = _norm_text(pred)
        if token in _YES_TOKENS:
            return bool(gold.value)
        if token in _NO_TOKENS:
            return not gold.value
        return False
    # list: order-insensitive, each element by the scalar rule
    parts = [p for chunk in pred.split(",") for p in re.split(r"\band\b", chunk)]
    parts = [p.strip() for p in parts if p.strip()]
    golds = list(gold.value)
    if len(parts) != len(golds):
        return False
    remaining = parts[:]
    for g in golds:
        g_num = _full_number(g)
        hit = None
        for cand in remaining:
            if g_num is not None:
                c_num = parse_number(cand)
                ok = c_num is not None and _number_close(c_num, g_num)
            else:
                ok = _norm_text(cand) == _norm_text(g)
            if ok:
                hit = cand
                break
        if hit is None:
            return False
        remaining.remove(hit)
    return True


def _full_number(text: str) -> Optional[float]:
    try:
        return float(text.strip().replace(",", "").rstrip("%"))
    except ValueError:
        return None


# ---------------------------------------------------------------------------
# judge
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JudgeVerdict:
    equivalent: bool
    rationale: str
    mode: str  # remote_judge | deterministic_fallback


_YEAR_RE = re.compile(r"^(19\d\d|20\d\d|2100)$")
_COUNT_QUESTION_RE = re.compile(r"\bhow many\b", re.IGNORECASE)


def is_year_answer(gold: Answer) -> bool:
    if gold.kind is not AnswerKind.NUMBER:
        return False
    v = float(gold.value)
    return v.is_integer() and bool(_YEAR_RE.match(str(int(v))))


def is_count_question(question: str) -> bool:
    return bool(_COUNT_QUESTION_RE.search(question))


JUDGE_PROMPT = (
    "You compare a model answer with the expected answer for a chart question.\n"
    "Rules: textual answers must match semantically; numeric answers may differ "
    "by at most 5%; years and counted quantities must match exactly, with no "
    "error margin.\n"
    "Question: {question}\n"
    "Expected answer: {gold}\n"
    "Model answer: {pred}\n"
    "Reply with 'yes' or 'no' and a short reason."
)


def _fallback_verdict(qa: QAPair, pred: str) -> JudgeVerdict:
    gold = qa.answer
    exact_required = is_year_answer(gold) or (
        is_count_question(qa.question) and gold.kind is AnswerKind.NUMBER
    )
    if exact_required:
        p = parse_number(pred)
        ok = p is not None and abs(p - float(gold.value)) <= ZERO_TOLERANCE
        why = "exact match demanded for years/counts"
        return JudgeVerdict(ok, why, "deterministic_fallback")
    if gold.kind is AnswerKind.TEXT and not relaxed_correctness(pred, gold):
        # Count normalization: "3 clusters" vs "3".
        g_num, g_rest = _split_number_words(gold.value)
        p_num, p_rest = _split_number_words(pred)
        if g_num is not None and p_num is not None and g_num == p_num:
            if not p_rest or not g_rest or p_rest <= g_rest or g_rest <= p_rest:
                return JudgeVerdict(True, "numeric token matches after unit stripping", "deterministic_fallback")
    ok = relaxed_correctness(pred, gold)
    return JudgeVerdict(ok, "relaxed correctness", "deterministic_fallback")


def _split_number_words(text: str) -> tuple[Optional[float], set[str]]:
    num = parse_number(text)
    words = {w for w in re.split(r"[^a-z]+", text.lower()) if w}
    return num, words


def judge_evaluate(qa: QAPair, pred: str, judge=None) -> JudgeVerdict:
    """Semantic-equivalence verdict; remote judge when given, else deterministic."""
    if judge is None:
        return _fallback_verdict(qa, pred)
    prompt = JUDGE_PROMPT.format(question=qa.question, gold=qa.answer.as_text(), pred=pred)
    try:
        reply = judge.complete([{"role": "user", "content": prompt}])
    except TransportError:
        verdict = _fallback_verdict(qa, pred)
        return JudgeVerdict(verdict.equivalent, verdict.rationale + " (judge unreachable)", "deterministic_fallback")
    token = reply.strip().lower()
    equivalent = token.startswith("yes")
    return JudgeVerdict(equivalent, reply.strip(), "remote_judge")


# ---------------------------------------------------------------------------
# chart-to-table F1
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TableF1:
    precision: float
    recall: float
    f1: float


def _row_key(table: DataTable, row: tuple) -> str:
    for j, col in enumerate(table.columns):
        if col.kind is ColumnKind.CATEGORICAL:
            return str(row[j])
    payload = sorted(f"{c.name}={v}" for c, v in zip(table.columns, row))
    return hashlib.sha1("|".join(payload).encode("utf-8")).hexdigest()[:12]


def _cells(table: DataTable) -> list[tuple[str, str, object]]:
    out = []
    for row in table.rows:
        key = _row_key(table, row)
        for col, v in zip(table.columns, row):
            out.append((key, _norm_text(col.name), v))
    return sorted(out, key=lambda t: (t[0], t[1], str(t[2])))


def _key_similarity(a: str, b: str) -> float:
    return difflib.SequenceMatcher(None, _norm_text(a), _norm_text(b)).ratio()


def _cell_match(pred_v, gold_v) -> bool:
    if isinstance(gold_v, float) or isinstance(gold_v, int):
        try:
            return _number_close(float(pred_v), float(gold_v))
        except (TypeError, ValueError):
            return False
    return _norm_text(str(pred_v)) == _norm_text(str(gold_v))


def table_f1(pred_table: DataTable, gold_table: DataTable) -> TableF1:
    """Permutation-invariant cell-level precision/recall/F1.

    Cells are (row key, column name, value) triples; matching is greedy over
    the canonically sorted triples, with fuzzy row keys (similarity >= 0.9)
    and the relaxed value rule.
    """
    pred = _cells(pred_table)
    gold = _cells(gold_table)
    used = [False] * len(gold)
    matched = 0
    for key_p, col_p, v_p in pred:
        candidates = []
        for gi, (key_g, col_g, v_g) in enumerate(gold):
            if used[gi] or col_p != col_g:
                continue
            sim = 1.0 if key_p == key_g else _key_similarity(key_p, key_g)
            if sim >= 0.9 and _cell_match(v_p, v_g):
                candidates.append((-sim, key_g, gi))
        if candidates:
            candidates.sort()
            used[candidates[0][2]] = True
            matched += 1
    precision = matched / len(pred) if pred else 0.0
    recall = matched / len(gold) if gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return TableF1(precision=precision, recall=recall, f1=f1)


# ---------------------------------------------------------------------------
# question style tagging
# ---------------------------------------------------------------------------

_ARITH_KEYWORDS = (
    "sum", "difference", "average", "mean", "ratio", "total", "more than by",
    "combined", "how many times", "times larger", "by what factor", "gap between",
    "spread", "minus", "percentage", "percent", "share", "proportion",
)
_VISUAL_KEYWORDS = (
    "color", "colour", "rightmost", "leftmost", "highest bar", "tallest",
    "largest slice", "largest bubble", "biggest bubble", "topmost", "darkest",
    "largest area", "longest bar", "shortest bar",
)


def tag_question_style(question: str) -> QAStyle:
    """Keyword heuristic used for corpus statistics and sampling only."""
    q = _norm_text(question)
    arith = any(k in q for k in _ARITH_KEYWORDS)
    visual = any(k in q for k in _VISUAL_KEYWORDS)
    if arith and visual:
        return QAStyle.VISUAL_COMPOSITIONAL
    if arith:
        return QAStyle.COMPOSITIONAL
    if visual:
        return QAStyle.VISUAL
    return QAStyle.DATA_RETRIEVAL
