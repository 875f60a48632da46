"""Corpus filtering: clustering, stratification, semantic dedup, size tuning.

The dedup graph connects items whose joint-embedding cosine similarity
exceeds epsilon; each connected component keeps exactly one member. Epsilon
is auto-tuned by bisection toward a target corpus size.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .charts import ChartAttributes
from .errors import (
    EmptyInput,
    KTooLarge,
    MissingAttributes,
    TargetUnreachable,
    ValidationError,
)
from .features import EmbeddingRecord
from .records import DatasetRecord, QAStyle


@dataclass(frozen=True)
class ClusterAssignment:
    k: int
    centroids: tuple[tuple[float, ...], ...]
    assignment: dict[str, int]
    inertia: float
    n_iter: int
    inertia_history: tuple[float, ...]


def _embedding_matrix(embeddings: Sequence[EmbeddingRecord]):
    ids = [e.source_id for e in embeddings]
    mat = np.asarray([e.joint.values for e in embeddings], dtype=np.float64)
    return ids, mat


def kmeans(
    embeddings: Sequence[EmbeddingRecord],
    k: int,
    seed: int = 0,
    max_iter: int = 100,
) -> ClusterAssignment:
    """Lloyd iterations with seeded farthest-point initialization."""
    if not embeddings:
        raise EmptyInput("no embeddings to cluster")
    ids, x = _embedding_matrix(embeddings)
    distinct = len({tuple(row) for row in x.tolist()})
    if k < 1:
        raise ValidationError("bad_k", "k must be >= 1")
    if k > distinct:
        raise KTooLarge(f"k={k} exceeds {distinct} distinct points")

    rng = random.Random(seed)
    n = len(ids)
    first = rng.randrange(n)
    centroid_idx = [first]
    d2 = ((x - x[first]) ** 2).sum(axis=1)
    while len(centroid_idx) < k:
        nxt = int(np.argmax(d2))  # ties resolve to the lowest index
        centroid_idx.append(nxt)
        d2 = np.minimum(d2, ((x - x[nxt]) ** 2).sum(axis=1))
    centroids = x[centroid_idx].copy()

    assign = np.zeros(n, dtype=np.int64)
    history: list[float] = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assign = np.argmin(d, axis=1)
        dist = d[np.arange(n), new_assign]
        inertia = float(dist.sum())
        # Re-home empty clusters onto the farthest point; that point's
        # distance drops to zero so inertia stays monotone.
        for c in range(k):
            if not np.any(new_assign == c):
                far = int(np.argmax(dist))
                inertia -= float(dist[far])
                dist[far] = 0.0
                new_assign[far] = c
                centroids[c] = x[far]
        history.append(inertia)
        converged = n_iter > 1 and np.array_equal(new_assign, assign)
        assign = new_assign
        for c in range(k):
            members = x[assign == c]
            if len(members):
                centroids[c] = members.mean(axis=0)
        if converged:
            break

    d = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    assign = np.argmin(d, axis=1)
    inertia = float(d[np.arange(n), assign].sum())
    return ClusterAssignment(
        k=k,
        centroids=tuple(tuple(c) for c in centroids.tolist()),
        assignment={ids[i]: int(assign[i]) for i in range(n)},
        inertia=inertia,
        n_iter=n_iter,
        inertia_history=tuple(history),
    )


def default_k(n: int) -> int:
    return max(1, int(round(math.sqrt(n / 2))))


@dataclass(frozen=True)
class Stratum:
    cluster_index: int
    key: tuple
    member_ids: tuple[str, ...]
    centroid: tuple[float, ...]


def stratify(
    cluster_index: int,
    member_ids: Sequence[str],
    attributes: Mapping[str, ChartAttributes],
    embeddings: Mapping[str, EmbeddingRecord],
) -> list[Stratum]:
    """Split one cluster into strata keyed by the full attribute tuple."""
    buckets: dict[tuple, list[str]] = {}
    for mid in member_ids:
        attr = attributes.get(mid)
        if attr is None:
            raise MissingAttributes(mid)
        buckets.setdefault(attr.key(), []).append(mid)
    strata = []
    for key in sorted(buckets):
        members = sorted(buckets[key])
        mat = np.asarray([embeddings[m].joint.values for m in members])
        strata.append(
            Stratum(
                cluster_index=cluster_index,
                key=key,
                member_ids=tuple(members),
                centroid=tuple(mat.mean(axis=0).tolist()),
            )
        )
    return strata


@dataclass(frozen=True)
class DedupDecision:
    epsilon: float
    retained_ids: tuple[str, ...]
    removed_ids: tuple[str, ...]
    duplicate_components: tuple[tuple[str, ...], ...]


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def dedup_stratum(
    stratum: Stratum,
    embeddings: Mapping[str, EmbeddingRecord],
    epsilon: float,
    keep_most_typical: bool = False,
) -> DedupDecision:
    """Collapse duplicate components, keeping one representative each.

    Edges connect pairs with cosine similarity strictly above epsilon. By
    default the survivor is the member with the lowest cosine similarity to
    the stratum centroid (``keep_most_typical=True`` inverts the rule); ties
    break by ascending id.
    """
    if not (0.0 < epsilon < 1.0):
        raise ValidationError("epsilon_range", f"epsilon {epsilon} not in (0,1)")
    if not stratum.member_ids:
        raise EmptyInput("empty stratum")
    ids = list(stratum.member_ids)
    mat = np.asarray([embeddings[m].joint.values for m in ids], dtype=np.float64)
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    unit = mat / np.where(norms == 0, 1.0, norms)
    sims = unit @ unit.T

    n = len(ids)
    uf = _UnionFind(n)
    ii, jj = np.nonzero(np.triu(sims > epsilon, k=1))
    for a, b in zip(ii.tolist(), jj.tolist()):
        uf.union(a, b)

    centroid = np.asarray(stratum.centroid)
    c_norm = float(np.linalg.norm(centroid))
    c_unit = centroid / c_norm if c_norm else centroid
    centroid_sims = unit @ c_unit

    components: dict[int, list[int]] = {}
    for i in range(n):
        components.setdefault(uf.find(i), []).append(i)

    retained: list[str] = []
    removed: list[str] = []
    dup_components: list[tuple[str, ...]] = []
    for root in sorted(components):
        members = components[root]
        if len(members) == 1:
            retained.append(ids[members[0]])
            continue
        sign = -1.0 if keep_most_typical else 1.0
        keeper = min(members, key=lambda i: (sign * centroid_sims[i], ids[i]))
        retained.append(ids[keeper])
        removed.extend(ids[i] for i in members if i != keeper)
        dup_components.append(tuple(sorted(ids[i] for i in members)))
    return DedupDecision(
        epsilon=epsilon,
        retained_ids=tuple(sorted(retained)),
        removed_ids=tuple(sorted(removed)),
        duplicate_components=tuple(sorted(dup_components)),
    )


@dataclass(frozen=True)
class EpsilonTuning:
    epsilon: float
    decisions: tuple[DedupDecision, ...]
    retained_count: int
    trace: tuple[tuple[float, int], ...]  # (epsilon, retained) in evaluation order


def tune_epsilon(
    strata: Sequence[Stratum],
    embeddings: Mapping[str, EmbeddingRecord],
    target_count: int,
    tolerance_frac: float,
    max_iter: int = 40,
    keep_most_typical: bool = False,
) -> EpsilonTuning:
    """Bisection on epsilon until the retained count lands near the target."""
    if not (0.0 < tolerance_frac < 0.5):
        raise ValidationError("tolerance_range", "tolerance_frac must be in (0, 0.5)")
    corpus_size = sum(len(s.member_ids) for s in strata)
    if target_count > corpus_size:
        raise ValidationError("target_range", "target exceeds corpus size")

    def run(eps: float) -> tuple[int, list[DedupDecision]]:
        decisions = [
            dedup_stratum(s, embeddings, eps, keep_most_typical) for s in strata
        ]
        return sum(len(d.retained_ids) for d in decisions), decisions

    lo_tol = int(math.ceil(target_count * (1 - tolerance_frac)))
    hi_tol = int(math.floor(target_count * (1 + tolerance_frac)))
    trace: list[tuple[float, int]] = []

    hi_eps = 1.0 - 1e-9
    hi_count, hi_decisions = run(hi_eps)
    trace.append((hi_eps, hi_count))
    lo_eps = 1e-9
    lo_count, lo_decisions = run(lo_eps)
    trace.append((lo_eps, lo_count))
    if hi_count < lo_tol:
        raise TargetUnreachable(target_count, lo_count, hi_count)

    best = (abs(hi_count - target_count), hi_eps, hi_count, hi_decisions)
    if abs(lo_count - target_count) < best[0]:
        best = (abs(lo_count - target_count), lo_eps, lo_count, lo_decisions)

    lo, hi = lo_eps, hi_eps
    for _ in range(max_iter):
        if lo_tol <= best[2] <= hi_tol:
            break
        mid = (lo + hi) / 2
        count, decisions = run(mid)
        trace.append((mid, count))
        if abs(count - target_count) < best[0]:
            best = (abs(count - target_count), mid, count, decisions)
        if count < target_count:
            lo = mid
        else:
            hi = mid

    # Retained count must be monotone non-decreasing in epsilon.
    by_eps = sorted(trace)
    for (e1, c1), (e2, c2) in zip(by_eps, by_eps[1:]):
        if c2 < c1:
            raise AssertionError(
                f"retained count regressed: eps {e1}->{e2} count {c1}->{c2}"
            )

    _, eps, count, decisions = best
    return EpsilonTuning(
        epsilon=eps,
        decisions=tuple(decisions),
        retained_count=count,
        trace=tuple(trace),
    )


# ---------------------------------------------------------------------------
# instruction sampling
# ---------------------------------------------------------------------------

CHART2TABLE_INSTRUCTION = "Please extract the underlying data table from the given chart"

#: Styles filled first when sampling reasoning-oriented instructions.
STYLE_PRIORITY = (
    QAStyle.COMPOSITIONAL,
    QAStyle.VISUAL_COMPOSITIONAL,
    QAStyle.VISUAL,
    QAStyle.DATA_RETRIEVAL,
)


@dataclass(frozen=True)
class Chart2TableTask:
    chart_id: str
    instruction: str
    table_json: dict


@dataclass(frozen=True)
class InstructionSample:
    qa_ids: tuple[str, ...]
    chart2table: tuple[Chart2TableTask, ...]
    shortfalls: dict[str, int] = field(default_factory=dict)


def sample_instructions(
    records: Sequence[DatasetRecord],
    keep_all_tables: bool = True,
    qa_quota_per_style: Optional[Mapping[str, int]] = None,
    seed: int = 0,
) -> InstructionSample:
    """Chart2Table tasks for every chart plus style-prioritized QA sampling."""
    from .metrics import tag_question_style

    chart2table = []
    if keep_all_tables:
        for r in records:
            chart2table.append(
                Chart2TableTask(
                    chart_id=r.chart_id,
                    instruction=CHART2TABLE_INSTRUCTION,
                    table_json=r.table.to_json_dict(),
                )
            )

    by_style: dict[QAStyle, list[str]] = {s: [] for s in QAStyle}
    for r in records:
        for qa in r.qa_pairs:
            style = qa.qa_style if qa.qa_style else tag_question_style(qa.question)
            by_style[QAStyle(style)].append(qa.id)

    rng = random.Random(seed)
    sampled: list[str] = []
    shortfalls: dict[str, int] = {}
    quotas = dict(qa_quota_per_style or {})
    for style in STYLE_PRIORITY:
        quota = quotas.get(style.value)
        pool = sorted(by_style[style])
        if quota is None:
            continue
        rng.shuffle(pool)
        take = pool[:quota]
        sampled.extend(take)
        if len(take) < quota:
            shortfalls[style.value] = quota - len(take)
    return InstructionSample(
        qa_ids=tuple(sampled),
        chart2table=tuple(chart2table),
        shortfalls=shortfalls,
    )
