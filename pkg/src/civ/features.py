"""Table feature extraction and cosine-similarity retrieval.

Catalog cf-1: 81 single-column features and 30 cross-column features. The
catalogs are explicit ordered lists so their size and member names are part
of the tested contract; extraction is pure (same table, same vector).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimError, EmptyInput, ValidationError, ZeroVector
from .tables import ColumnKind, DataTable

CATALOG_VERSION = "cf-1"
COLOR_HISTOGRAM_DIM = 64

_MONTHS = {
    "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct",
    "nov", "dec", "january", "february", "march", "april", "june", "july",
    "august", "september", "october", "november", "december",
}
_DATE_RE = re.compile(r"^\d{4}[-/]\d{1,2}([-/]\d{1,2})?$")
_NUMERIC_STR_RE = re.compile(r"^-?\d+(\.\d+)?$")


@dataclass(frozen=True)
class FeatureVector:
    source_id: str
    values: tuple[float, ...]
    dim: int
    catalog_version: str = CATALOG_VERSION

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) != self.dim:
            raise ValidationError("dim_mismatch", f"{len(vals)} values but dim={self.dim}")
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError("nonfinite_feature", "feature values must be finite")

    @classmethod
    def of(cls, source_id: str, values: Sequence[float], catalog_version: str = CATALOG_VERSION):
        vals = tuple(float(v) for v in values)
        return cls(source_id=source_id, values=vals, dim=len(vals), catalog_version=catalog_version)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


# ---------------------------------------------------------------------------
# column statistics shared by the catalog entries
# ---------------------------------------------------------------------------


class _ColumnStats:
    """Precomputed per-column quantities the catalog entries read from."""

    def __init__(self, values: Sequence, kind: ColumnKind):
        self.kind = kind
        self.raw = list(values)
        self.n = len(self.raw)
        self.strs = ["" if v is None else str(v) for v in self.raw]
        self.missing = sum(1 for s in self.strs if s == "")
        counts: dict[str, int] = {}
        for s in self.strs:
            counts[s] = counts.get(s, 0) + 1
        self.counts = counts
        self.is_numeric = kind is ColumnKind.NUMERIC
        self.nums = [float(v) for v in self.raw] if self.is_numeric else []
        if self.nums:
            arr = np.asarray(self.nums)
            self.mean = float(arr.mean())
            self.std = float(arr.std())
            self.vmin = float(arr.min())
            self.vmax = float(arr.max())
            self.arr = arr
        else:
            self.mean = self.std = self.vmin = self.vmax = 0.0
            self.arr = np.zeros(0)
        self.diffs = list(np.diff(self.arr)) if len(self.nums) > 1 else []

    def moment(self, k: int) -> float:
        if not self.nums or self.std == 0:
            return 0.0
        z = (self.arr - self.mean) / self.std
        return float((z ** k).mean())

    def quantile(self, q: float) -> float:
        if not self.nums:
            return 0.0
        return float(np.quantile(self.arr, q))

    def entropy_bits(self) -> float:
        n = self.n
        h = 0.0
        for c in self.counts.values():
            p = c / n
            h -= p * math.log2(p)
        return h


def _frac(pred: Callable, xs: Sequence) -> float:
    return sum(1 for x in xs if pred(x)) / len(xs) if xs else 0.0


def _safe_div(a: float, b: float) -> float:
    return a / b if b else 0.0


def _autocorr1(s: _ColumnStats) -> float:
    if len(s.nums) < 2 or s.std == 0:
        return 0.0
    z = (s.arr - s.mean)
    num = float((z[:-1] * z[1:]).sum())
    den = float((z * z).sum())
    return _safe_div(num, den)


def _linfit_r2(s: _ColumnStats) -> float:
    if len(s.nums) < 2 or s.std == 0:
        return 0.0
    x = np.arange(s.n, dtype=np.float64)
    r = np.corrcoef(x, s.arr)[0, 1]
    return float(r * r) if math.isfinite(r) else 0.0


def _max_run(s: _ColumnStats) -> float:
    best = run = 1
    for a, b in zip(s.strs, s.strs[1:]):
        run = run + 1 if a == b else 1
        best = max(best, run)
    return best / s.n


def _decimal_places(x: float) -> int:
    s = repr(float(x))
    if "e" in s or "E" in s or "." not in s:
        return 0
    return min(6, len(s.split(".")[1].rstrip("0")))


#: name -> fn(_ColumnStats) -> float. Order defines vector layout.
SINGLE_COLUMN_CATALOG: list[tuple[str, Callable[[_ColumnStats], float]]] = [
    # kind one-hots
    ("kind_numeric", lambda s: float(s.kind is ColumnKind.NUMERIC)),
    ("kind_categorical", lambda s: float(s.kind is ColumnKind.CATEGORICAL)),
    ("kind_temporal", lambda s: float(s.kind is ColumnKind.TEMPORAL)),
    # length
    ("length", lambda s: float(s.n)),
    ("log_length", lambda s: math.log1p(s.n)),
    # distinct / missing / mode
    ("distinct_count", lambda s: float(len(s.counts))),
    ("distinct_ratio", lambda s: len(s.counts) / s.n),
    ("missing_count", lambda s: float(s.missing)),
    ("missing_ratio", lambda s: s.missing / s.n),
    ("mode_count", lambda s: float(max(s.counts.values()))),
    ("mode_ratio", lambda s: max(s.counts.values()) / s.n),
    # moments and spread (0 for non-numeric)
    ("mean", lambda s: s.mean),
    ("std", lambda s: s.std),
    ("variance", lambda s: s.std ** 2),
    ("skewness", lambda s: s.moment(3)),
    ("kurtosis_excess", lambda s: s.moment(4) - 3.0 if s.nums and s.std else 0.0),
    ("min", lambda s: s.vmin),
    ("max", lambda s: s.vmax),
    ("value_range", lambda s: s.vmax - s.vmin),
    ("sum", lambda s: float(s.arr.sum()) if s.nums else 0.0),
    ("abs_mean", lambda s: float(np.abs(s.arr).mean()) if s.nums else 0.0),
    ("coeff_variation", lambda s: _safe_div(s.std, abs(s.mean))),
    ("median", lambda s: s.quantile(0.5)),
    # quantiles
    ("q05", lambda s: s.quantile(0.05)),
    ("q10", lambda s: s.quantile(0.10)),
    ("q25", lambda s: s.quantile(0.25)),
    ("q75", lambda s: s.quantile(0.75)),
    ("q90", lambda s: s.quantile(0.90)),
    ("q95", lambda s: s.quantile(0.95)),
    ("iqr", lambda s: s.quantile(0.75) - s.quantile(0.25)),
    # entropy / impurity over value counts
    ("entropy_bits", lambda s: s.entropy_bits()),
    ("entropy_normalized", lambda s: _safe_div(s.entropy_bits(), math.log2(len(s.counts))) if len(s.counts) > 1 else 0.0),
    ("gini_impurity", lambda s: 1.0 - sum((c / s.n) ** 2 for c in s.counts.values())),
    # order statistics
    ("monotonic_increasing", lambda s: float(bool(s.diffs) and all(d > 0 for d in s.diffs))),
    ("monotonic_decreasing", lambda s: float(bool(s.diffs) and all(d < 0 for d in s.diffs))),
    ("nondecreasing", lambda s: float(bool(s.diffs) and all(d >= 0 for d in s.diffs))),
    ("nonincreasing", lambda s: float(bool(s.diffs) and all(d <= 0 for d in s.diffs))),
    ("frac_adjacent_increasing", lambda s: _frac(lambda d: d > 0, s.diffs)),
    ("frac_adjacent_equal", lambda s: _frac(lambda d: d == 0, s.diffs)),
    ("sorted_lexical", lambda s: float(s.strs == sorted(s.strs))),
    # outliers
    ("z2_count", lambda s: float(np.count_nonzero(np.abs(s.arr - s.mean) > 2 * s.std)) if s.nums and s.std else 0.0),
    ("z3_count", lambda s: float(np.count_nonzero(np.abs(s.arr - s.mean) > 3 * s.std)) if s.nums and s.std else 0.0),
    ("z3_frac", lambda s: float(np.count_nonzero(np.abs(s.arr - s.mean) > 3 * s.std)) / s.n if s.nums and s.std else 0.0),
    ("iqr_outlier_count", lambda s: _iqr_outliers(s)),
    ("iqr_outlier_frac", lambda s: _iqr_outliers(s) / s.n),
    # sign / integrality
    ("frac_zero", lambda s: _frac(lambda v: v == 0, s.nums)),
    ("frac_negative", lambda s: _frac(lambda v: v < 0, s.nums)),
    ("frac_positive", lambda s: _frac(lambda v: v > 0, s.nums)),
    ("all_integer", lambda s: float(bool(s.nums) and all(float(v).is_integer() for v in s.nums))),
    ("frac_integer", lambda s: _frac(lambda v: float(v).is_integer(), s.nums)),
    # sequential deltas
    ("diff_abs_mean", lambda s: float(np.abs(s.diffs).mean()) if s.diffs else 0.0),
    ("diff_std", lambda s: float(np.std(s.diffs)) if s.diffs else 0.0),
    ("diff_abs_max", lambda s: float(np.abs(s.diffs).max()) if s.diffs else 0.0),
    ("frac_diff_positive", lambda s: _frac(lambda d: d > 0, s.diffs)),
    ("frac_diff_negative", lambda s: _frac(lambda d: d < 0, s.diffs)),
    ("lag1_autocorrelation", _autocorr1),
    # magnitude
    ("log_abs_max", lambda s: math.log10(max(abs(s.vmin), abs(s.vmax))) if s.nums and max(abs(s.vmin), abs(s.vmax)) > 0 else 0.0),
    ("log_abs_mean", lambda s: math.log10(float(np.abs(s.arr).mean())) if s.nums and float(np.abs(s.arr).mean()) > 0 else 0.0),
    ("max_decimal_places", lambda s: float(max((_decimal_places(v) for v in s.nums), default=0))),
    ("frac_below_one", lambda s: _frac(lambda v: abs(v) < 1, s.nums)),
    ("frac_above_thousand", lambda s: _frac(lambda v: abs(v) > 1000, s.nums)),
    # string shape of rendered values
    ("str_len_mean", lambda s: float(np.mean([len(t) for t in s.strs]))),
    ("str_len_std", lambda s: float(np.std([len(t) for t in s.strs]))),
    ("str_len_min", lambda s: float(min(len(t) for t in s.strs))),
    ("str_len_max", lambda s: float(max(len(t) for t in s.strs))),
    ("frac_alpha_only", lambda s: _frac(lambda t: t.replace(" ", "").isalpha(), s.strs)),
    ("frac_numeric_string", lambda s: _frac(lambda t: bool(_NUMERIC_STR_RE.match(t)), s.strs)),
    ("frac_contains_digit", lambda s: _frac(lambda t: any(ch.isdigit() for ch in t), s.strs)),
    ("frac_upper_initial", lambda s: _frac(lambda t: bool(t) and t[0].isupper(), s.strs)),
    ("word_count_mean", lambda s: float(np.mean([len(t.split()) for t in s.strs]))),
    # temporal-likeness
    ("frac_year_like", lambda s: _frac(_year_like, s.strs)),
    ("frac_month_name", lambda s: _frac(lambda t: t.strip().lower() in _MONTHS, s.strs)),
    ("frac_date_like", lambda s: _frac(lambda t: bool(_DATE_RE.match(t.strip())), s.strs)),
    # head / tail
    ("first_numeric", lambda s: s.nums[0] if s.nums else 0.0),
    ("last_numeric", lambda s: s.nums[-1] if s.nums else 0.0),
    ("first_is_min", lambda s: float(bool(s.nums) and s.nums[0] == s.vmin)),
    ("last_is_max", lambda s: float(bool(s.nums) and s.nums[-1] == s.vmax)),
    # digit / run / fit diagnostics
    ("leading_digit_one_frac", lambda s: _frac(lambda v: _leading_digit(v) == 1, s.nums)),
    ("rounded_distinct_ratio", lambda s: len({round(v) for v in s.nums}) / s.n if s.nums else 0.0),
    ("max_equal_run_frac", _max_run),
    ("index_fit_r2", _linfit_r2),
]


def _iqr_outliers(s: _ColumnStats) -> float:
    if not s.nums:
        return 0.0
    q1, q3 = s.quantile(0.25), s.quantile(0.75)
    iqr = q3 - q1
    lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    return float(np.count_nonzero((s.arr < lo) | (s.arr > hi)))


def _year_like(t: str) -> bool:
    t = t.strip()
    return len(t) == 4 and t.isdigit() and 1900 <= int(t) <= 2100


def _leading_digit(v: float) -> int:
    v = abs(v)
    if v == 0:
        return 0
    while v < 1:
        v *= 10
    while v >= 10:
        v /= 10
    return int(v)


def single_column_feature_names() -> list[str]:
    return [name for name, _ in SINGLE_COLUMN_CATALOG]


def single_column_features(values: Sequence, kind: ColumnKind | str, source_id: str = "") -> FeatureVector:
    """81 per-column features quantifying the column's properties."""
    values = list(values)
    if not values:
        raise EmptyInput("column has no values")
    stats = _ColumnStats(values, ColumnKind(kind))
    vec = [float(fn(stats)) for _, fn in SINGLE_COLUMN_CATALOG]
    return FeatureVector.of(source_id, vec)


# ---------------------------------------------------------------------------
# cross-column features
# ---------------------------------------------------------------------------


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    if a.std() == 0 or b.std() == 0:
        return 0.0
    r = float(np.corrcoef(a, b)[0, 1])
    return r if math.isfinite(r) else 0.0


def _spearman(a: np.ndarray, b: np.ndarray) -> float:
    def rank(x):
        order = np.argsort(x, kind="stable")
        ranks = np.empty_like(order, dtype=np.float64)
        ranks[order] = np.arange(len(x), dtype=np.float64)
        # average ties
        vals, inv, counts = np.unique(x, return_inverse=True, return_counts=True)
        sums = np.zeros(len(vals))
        np.add.at(sums, inv, ranks)
        return sums[inv] / counts[inv]

    return _pearson(rank(a), rank(b))


def _shared_prefix(a: str, b: str) -> int:
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


class _TableStats:
    def __init__(self, table: DataTable):
        self.table = table
        self.kinds = [c.kind for c in table.columns]
        self.names = [c.name for c in table.columns]
        self.n_rows = table.n_rows
        self.numeric_cols = [
            np.asarray(table.column_values(c.name), dtype=np.float64)
            for c in table.columns
            if c.kind is ColumnKind.NUMERIC
        ]
        self.pearsons: list[float] = []
        self.spearmans: list[float] = []
        for i in range(len(self.numeric_cols)):
            for j in range(i + 1, len(self.numeric_cols)):
                self.pearsons.append(_pearson(self.numeric_cols[i], self.numeric_cols[j]))
                self.spearmans.append(_spearman(self.numeric_cols[i], self.numeric_cols[j]))
        self.name_prefixes = [
            _shared_prefix(a.lower(), b.lower())
            for i, a in enumerate(self.names)
            for b in self.names[i + 1 :]
        ]
        self.cat_distincts = [
            len(set(table.column_values(c.name)))
            for c in table.columns
            if c.kind is ColumnKind.CATEGORICAL
        ]

    def kind_count(self, kind: ColumnKind) -> int:
        return sum(1 for k in self.kinds if k is kind)


def _agg(values: list[float], fn, default: float = 0.0) -> float:
    return float(fn(values)) if values else default


CROSS_COLUMN_CATALOG: list[tuple[str, Callable[[_TableStats], float]]] = [
    ("n_cols", lambda t: float(len(t.kinds))),
    ("n_numeric", lambda t: float(t.kind_count(ColumnKind.NUMERIC))),
    ("n_categorical", lambda t: float(t.kind_count(ColumnKind.CATEGORICAL))),
    ("n_temporal", lambda t: float(t.kind_count(ColumnKind.TEMPORAL))),
    ("numeric_ratio", lambda t: t.kind_count(ColumnKind.NUMERIC) / len(t.kinds)),
    ("categorical_ratio", lambda t: t.kind_count(ColumnKind.CATEGORICAL) / len(t.kinds)),
    ("temporal_ratio", lambda t: t.kind_count(ColumnKind.TEMPORAL) / len(t.kinds)),
    ("n_rows", lambda t: float(t.n_rows)),
    ("log_rows", lambda t: math.log1p(t.n_rows)),
    ("rows_per_col", lambda t: t.n_rows / len(t.kinds)),
    ("pearson_min", lambda t: _agg(t.pearsons, min)),
    ("pearson_mean", lambda t: _agg(t.pearsons, lambda v: sum(v) / len(v))),
    ("pearson_max", lambda t: _agg(t.pearsons, max)),
    ("abs_pearson_min", lambda t: _agg([abs(p) for p in t.pearsons], min)),
    ("abs_pearson_mean", lambda t: _agg([abs(p) for p in t.pearsons], lambda v: sum(v) / len(v))),
    ("abs_pearson_max", lambda t: _agg([abs(p) for p in t.pearsons], max)),
    ("spearman_min", lambda t: _agg(t.spearmans, min)),
    ("spearman_mean", lambda t: _agg(t.spearmans, lambda v: sum(v) / len(v))),
    ("spearman_max", lambda t: _agg(t.spearmans, max)),
    ("name_prefix_mean", lambda t: _agg([float(p) for p in t.name_prefixes], lambda v: sum(v) / len(v))),
    ("name_prefix_max", lambda t: _agg([float(p) for p in t.name_prefixes], max)),
    ("name_prefix3_frac", lambda t: _agg([float(p >= 3) for p in t.name_prefixes], lambda v: sum(v) / len(v))),
    ("name_len_mean", lambda t: float(np.mean([len(n) for n in t.names]))),
    ("name_len_std", lambda t: float(np.std([len(n) for n in t.names]))),
    ("cat_distinct_max_ratio", lambda t: _agg([d / t.n_rows for d in t.cat_distincts], max)),
    ("cat_distinct_min_ratio", lambda t: _agg([d / t.n_rows for d in t.cat_distincts], min)),
    ("cat_distinct_mean", lambda t: _agg([float(d) for d in t.cat_distincts], lambda v: sum(v) / len(v))),
    ("frac_pairs_high_corr", lambda t: _agg([float(abs(p) > 0.9) for p in t.pearsons], lambda v: sum(v) / len(v))),
    ("frac_pairs_low_corr", lambda t: _agg([float(abs(p) < 0.1) for p in t.pearsons], lambda v: sum(v) / len(v))),
    ("first_col_categorical", lambda t: float(t.kinds[0] is ColumnKind.CATEGORICAL)),
]


def cross_column_feature_names() -> list[str]:
    return [name for name, _ in CROSS_COLUMN_CATALOG]


def cross_column_features(table: DataTable, source_id: str = "") -> FeatureVector:
    """30 whole-table features capturing inter-column relationships."""
    stats = _TableStats(table)
    vec = [float(fn(stats)) for _, fn in CROSS_COLUMN_CATALOG]
    return FeatureVector.of(source_id, vec)


def table_feature_vector(table: DataTable, source_id: str = "") -> FeatureVector:
    """Joint table descriptor: cross features + mean/max of column features, unit norm."""
    cross = cross_column_features(table).values
    col_vecs = np.asarray(
        [
            single_column_features(table.column_values(c.name), c.kind).values
            for c in table.columns
        ]
    )
    vec = np.concatenate([np.asarray(cross), col_vecs.mean(axis=0), col_vecs.max(axis=0)])
    norm = float(np.linalg.norm(vec))
    if norm > 0:
        vec = vec / norm
    return FeatureVector.of(source_id, vec.tolist())


# ---------------------------------------------------------------------------
# similarity and retrieval
# ---------------------------------------------------------------------------


def cosine_similarity(a: FeatureVector, b: FeatureVector) -> float:
    if a.catalog_version != b.catalog_version:
        raise ValidationError(
            "catalog_mismatch", f"{a.catalog_version} vs {b.catalog_version}"
        )
    if a.dim != b.dim:
        raise DimError(f"dim {a.dim} vs {b.dim}")
    va, vb = a.as_array(), b.as_array()
    na, nb = float(np.linalg.norm(va)), float(np.linalg.norm(vb))
    if na == 0 or nb == 0:
        raise ZeroVector("cosine similarity undefined for a zero vector")
    return float(np.dot(va, vb) / (na * nb))


def nearest_neighbors(
    query: FeatureVector, corpus: Sequence[FeatureVector], k: int
) -> list[tuple[str, float]]:
    """Exact top-k by cosine similarity, ties broken by ascending source id."""
    if k < 1:
        raise ValidationError("bad_k", "k must be >= 1")
    if not corpus:
        raise EmptyInput("corpus is empty")
    scored = [(v.source_id, cosine_similarity(query, v)) for v in corpus]
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[: min(k, len(scored))]


# ---------------------------------------------------------------------------
# joint embeddings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingRecord:
    """Backbone embedding + color histogram, concatenated and L2-normalized."""

    source_id: str
    backbone_embedding: FeatureVector
    color_histogram: FeatureVector
    joint: FeatureVector

    def __post_init__(self):
        if self.color_histogram.dim != COLOR_HISTOGRAM_DIM:
            raise ValidationError(
                "histogram_dim", f"expected {COLOR_HISTOGRAM_DIM} color bins"
            )
        if self.joint.dim != self.backbone_embedding.dim + COLOR_HISTOGRAM_DIM:
            raise ValidationError("joint_dim", "joint must concatenate both parts")
        norm = float(np.linalg.norm(self.joint.as_array()))
        if abs(norm - 1.0) > 1e-9:
            raise ValidationError("joint_norm", f"joint norm {norm} != 1")

    @classmethod
    def build(
        cls, source_id: str, backbone: FeatureVector, color_histogram: FeatureVector
    ) -> "EmbeddingRecord":
        joint = np.concatenate([backbone.as_array(), color_histogram.as_array()])
        norm = float(np.linalg.norm(joint))
        if norm == 0:
            raise ZeroVector("cannot normalize an all-zero joint embedding")
        joint = joint / norm
        return cls(
            source_id=source_id,
            backbone_embedding=backbone,
            color_histogram=color_histogram,
            joint=FeatureVector.of(source_id, joint.tolist(), backbone.catalog_version),
        )


def color_histogram_from_svg(svg: str, source_id: str = "") -> FeatureVector:
    """4x4x4 RGB histogram over the rendered 256x256 pixel grid, L1-normalized."""
    from .render import rasterize_svg

    img = rasterize_svg(svg, size=256)
    bins = (img.astype(np.int64) // 64)
    idx = bins[..., 0] * 16 + bins[..., 1] * 4 + bins[..., 2]
    hist = np.bincount(idx.ravel(), minlength=COLOR_HISTOGRAM_DIM).astype(np.float64)
    hist /= hist.sum()
    return FeatureVector.of(source_id, hist.tolist())


def read_embeddings(path) -> list[FeatureVector]:
    """Ingest backbone embeddings: a JSONL header {"dim": D} then {"id", "embedding"} lines."""
    import json

    from .errors import ParseError

    vectors: list[FeatureVector] = []
    dim: Optional[int] = None
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"bad JSON: {e.msg}", line=lineno) from None
            if dim is None:
                if "dim" not in d:
                    raise ParseError("first line must declare the embedding dim", line=lineno)
                dim = int(d["dim"])
                continue
            emb = d.get("embedding")
            if emb is None or len(emb) != dim:
                raise ParseError(f"embedding missing or not {dim}-dimensional", line=lineno)
            vectors.append(FeatureVector.of(str(d["id"]), [float(v) for v in emb]))
    if dim is None:
        raise ParseError("empty embeddings file")
    return vectors


def write_embeddings(path, vectors: Sequence[FeatureVector]):
    import json

    with open(path, "w", encoding="utf-8", newline="\n") as f:
        if vectors:
            f.write(json.dumps({"dim": vectors[0].dim}) + "\n")
            for v in vectors:
                f.write(
                    json.dumps(
                        {"id": v.source_id, "embedding": list(v.values)},
                        separators=(",", ":"),
                    )
                    + "\n"
                )
