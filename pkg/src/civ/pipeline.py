"""Stage orchestration: linear pipeline with manifests and idempotent outputs.

Each stage writes its artifacts plus a manifest recording the config hash,
seed, input/output content hashes, counts, and duration. Outputs are
byte-identical across reruns with the same config and inputs; the duration
field is the one value that varies.
"""

from __future__ import annotations

import hashlib
import json
import random
import time
from pathlib import Path
from typing import Optional, Sequence

from .charts import ChartAttributes, ChartType
from .classifier import (
    FocalLossConfig,
    MLPClassifier,
    TrainHyper,
    inverse_class_frequency_alphas,
    macro_f1,
    predict,
    train_classifier,
    write_training_report,
)
from .config import PipelineConfig
from .errors import AmbiguousExtremum, ConfigError, MissingDependency, MissingTruth
from .evaluation import (
    collect_responses,
    evaluate_responses,
    render_report,
)
from .features import (
    EmbeddingRecord,
    FeatureVector,
    color_histogram_from_svg,
    read_embeddings,
    table_feature_vector,
)
from .filtering import default_k, dedup_stratum, kmeans, stratify, tune_epsilon
from .generate import GeneratedChart, generate_corpus
from .qasynth import PlantedKind, PlantedTruth, QuotaPolicy, balance_tasks, synthesize_qa
from .records import DatasetRecord
from .storage import read_dataset, read_manifest, write_dataset
from .tasks import TaskName, all_legal_triples, enumerate_tasks

STAGES = (
    "extract-features",
    "train-classifier",
    "label",
    "filter",
    "generate",
    "qa",
    "assemble-benchmark",
    "evaluate",
    "report",
    "stats",
)

PLANTED_FILE = "planted.jsonl"

#: Which planted kind each statistical task requires.
TASK_TRUTH = {
    TaskName.CHARACTERIZE_DISTRIBUTION: PlantedKind.DISTRIBUTION_SHAPE,
    TaskName.FIND_ANOMALIES: PlantedKind.ANOMALY,
    TaskName.FIND_CLUSTERS: PlantedKind.CLUSTERS,
}


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _hash_tree(root: Path) -> dict[str, str]:
    out = {}
    for p in sorted(root.rglob("*")):
        if p.is_file() and p.name != "manifest.stage.json":
            out[str(p.relative_to(root))] = _sha256_file(p)
    return out


class StageRunner:
    """Runs pipeline stages against one output root."""

    def __init__(self, config: PipelineConfig, out_dir, llm_client=None, judge_client=None):
        self.config = config
        self.out = Path(out_dir)
        self.llm_client = llm_client
        self.judge_client = judge_client

    # -- helpers -----------------------------------------------------------

    def stage_dir(self, stage: str) -> Path:
        return self.out / stage

    def _require(self, stage: str) -> Path:
        d = self.stage_dir(stage)
        if not (d / "manifest.stage.json").exists():
            raise MissingDependency(stage)
        return d

    def _dataset_dir(self, stage: str) -> Path:
        return self._require(stage) / "dataset"

    def _finish(self, stage: str, started: float, counts: dict, inputs: dict[str, str]) -> dict:
        d = self.stage_dir(stage)
        manifest = {
            "stage": stage,
            "config_hash": self.config.config_hash(),
            "seed": self.config.global_seed,
            "inputs": inputs,
            "outputs": _hash_tree(d),
            "counts": counts,
            "duration_s": round(time.time() - started, 3),
        }
        with open(d / "manifest.stage.json", "w", encoding="utf-8", newline="\n") as f:
            json.dump(manifest, f, sort_keys=True, indent=2)
            f.write("\n")
        return manifest

    def _write_json(self, path: Path, payload):
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(payload, f, sort_keys=True, indent=2)
            f.write("\n")

    # -- stages ------------------------------------------------------------

    def run_stage(self, stage: str) -> dict:
        if stage not in STAGES:
            raise ConfigError("stage", f"unknown stage {stage!r}")
        started = time.time()
        d = self.stage_dir(stage)
        d.mkdir(parents=True, exist_ok=True)
        fn = getattr(self, "_stage_" + stage.replace("-", "_"))
        counts, inputs = fn(d)
        return self._finish(stage, started, counts, inputs)

    # generate -------------------------------------------------------------

    def _stage_generate(self, d: Path):
        cfg = self.config
        corpus: list[GeneratedChart] = generate_corpus(
            charts_per_type=cfg.generation.charts_per_type,
            seed=cfg.global_seed,
            augmentations_per_chart=cfg.generation.augmentations_per_chart,
        )
        llm_counts = {}
        if cfg.generation.llm_enabled:
            corpus, llm_counts = self._extend_with_llm_lane(corpus)
        records = [g.record for g in corpus]
        write_dataset(records, d / "dataset", extra_meta={"config_hash": cfg.config_hash()})
        with open(d / PLANTED_FILE, "w", encoding="utf-8", newline="\n") as f:
            for g in corpus:
                f.write(
                    json.dumps(
                        {
                            "chart_id": g.record.chart_id,
                            "planted": g.planted.to_json_dict() if g.planted else None,
                        },
                        sort_keys=True,
                        separators=(",", ":"),
                    )
                    + "\n"
                )
        counts = {"records": len(records)}
        return counts, {}

    def _read_planted(self) -> dict[str, Optional[PlantedTruth]]:
        path = self._require("generate") / PLANTED_FILE
        out: dict[str, Optional[PlantedTruth]] = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                d = json.loads(line)
                p = d["planted"]
                out[d["chart_id"]] = PlantedTruth.from_json_dict(p) if p else None
        return out

    # qa ---------------------------------------------------------------------

    def _stage_qa(self, d: Path):
        cfg = self.config
        gen_dir = self._dataset_dir("generate")
        records = read_dataset(gen_dir)
        planted = self._read_planted()
        inputs = {"generate": _sha256_file(gen_dir / "records.jsonl")}

        qa_records: list[DatasetRecord] = []
        all_qas = []
        chart_types = {}
        skipped: dict[str, int] = {}
        for record in records:
            truth = planted.get(record.chart_id)
            qas = []
            for task in enumerate_tasks(record.spec.chart_type):
                need = TASK_TRUTH.get(task.name)
                if need is not None and record.spec.chart_type in (
                    ChartType.SCATTERPLOT,
                    ChartType.BUBBLE,
                ):
                    if truth is None or truth.kind is not need:
                        continue
                qa = None
                for attempt in range(cfg.qa.qa_attempts):
                    try:
                        qa = synthesize_qa(
                            record, task, truth, rng_seed=cfg.global_seed, ordinal=attempt
                        )
                        break
                    except (AmbiguousExtremum, MissingTruth):
                        continue
                if qa is None:
                    key = f"{record.spec.chart_type.value}|{task.name.value}|{task.value_mode.value}"
                    skipped[key] = skipped.get(key, 0) + 1
                    continue
                qas.append(qa)
            qa_records.append(record.with_qa_pairs(qas))
            all_qas.extend(qas)
            chart_types[record.chart_id] = record.spec.chart_type

        policy = QuotaPolicy.uniform(
            cfg.qa.per_cell_min, cfg.qa.per_cell_max, rng_seed=cfg.global_seed
        )
        kept, report = balance_tasks(all_qas, chart_types, policy)
        kept_ids = set(q.id for q in kept)
        qa_records = [
            r.with_qa_pairs([q for q in r.qa_pairs if q.id in kept_ids])
            for r in qa_records
        ]
        write_dataset(qa_records, d / "dataset", extra_meta={"config_hash": cfg.config_hash()})
        self._write_json(
            d / "balance_report.json",
            {
                "kept": len(report.kept),
                "trimmed": list(report.trimmed),
                "shortfalls": [{"cell": c, "missing": m} for c, m in report.shortfalls],
                "skipped_cells": skipped,
            },
        )
        counts = {"records": len(qa_records), "qa_pairs": len(kept)}
        return counts, inputs

    # assemble-benchmark -----------------------------------------------------

    def _stage_assemble_benchmark(self, d: Path):
        cfg = self.config
        qa_dir = self._dataset_dir("qa")
        records = read_dataset(qa_dir)
        inputs = {"qa": _sha256_file(qa_dir / "records.jsonl")}
        target_charts = cfg.benchmark.charts
        per_chart = cfg.benchmark.qa_per_chart

        eligible: dict[ChartType, list[DatasetRecord]] = {ct: [] for ct in ChartType}
        for r in records:
            if len(r.qa_pairs) >= per_chart:
                eligible[r.spec.chart_type].append(r)
        for ct in eligible:
            eligible[ct].sort(key=lambda r: r.chart_id)

        types = list(ChartType)
        base, extra = divmod(target_charts, len(types))
        want = {ct: base + (1 if i < extra else 0) for i, ct in enumerate(types)}
        rng = random.Random(cfg.global_seed + 101)
        chosen: list[DatasetRecord] = []
        shortfall = 0
        leftovers: list[DatasetRecord] = []
        for ct in types:
            pool = eligible[ct][:]
            rng.shuffle(pool)
            take = pool[: want[ct]]
            leftovers.extend(pool[want[ct] :])
            shortfall += max(0, want[ct] - len(take))
            chosen.extend(take)
        if shortfall:
            leftovers.sort(key=lambda r: r.chart_id)
            rng.shuffle(leftovers)
            chosen.extend(leftovers[:shortfall])
        chosen.sort(key=lambda r: r.chart_id)

        bench_records = []
        for r in chosen:
            qas = sorted(r.qa_pairs, key=lambda q: q.id)
            rng2 = random.Random(cfg.global_seed ^ hash_id(r.chart_id))
            rng2.shuffle(qas)
            picked = []
            seen_cats = set()
            for qa in qas:  # favor distinct task categories per chart
                if len(picked) == per_chart:
                    break
                if qa.category.name in seen_cats:
                    continue
                picked.append(qa)
                seen_cats.add(qa.category.name)
            for qa in qas:
                if len(picked) == per_chart:
                    break
                if qa not in picked:
                    picked.append(qa)
            bench_records.append(r.with_qa_pairs(sorted(picked, key=lambda q: q.id)))
        write_dataset(
            bench_records, d / "dataset", extra_meta={"config_hash": cfg.config_hash()}
        )
        counts = {
            "charts": len(bench_records),
            "qa_pairs": sum(len(r.qa_pairs) for r in bench_records),
            "shortfall": max(0, target_charts - len(bench_records)),
        }
        return counts, inputs

    # evaluate ----------------------------------------------------------------

    def _stage_evaluate(self, d: Path):
        cfg = self.config
        bench_dir = self._dataset_dir("assemble-benchmark")
        records = read_dataset(bench_dir)
        inputs = {"assemble-benchmark": _sha256_file(bench_dir / "records.jsonl")}
        if cfg.paths.responses is None and self.llm_client is None:
            raise ConfigError("paths.responses", "evaluate needs a responses file or a model client")
        if cfg.paths.responses is not None:
            responses = collect_responses(records, response_file=cfg.paths.responses)
            inputs["responses"] = _sha256_file(Path(cfg.paths.responses))
        else:
            responses = collect_responses(records, model=self.llm_client)
        judge = self.judge_client if cfg.eval.judge_enabled else None
        result = evaluate_responses(records, responses, judge=judge)
        self._write_json(d / "eval.json", result.to_json_dict())
        with open(d / "report.txt", "w", encoding="utf-8", newline="\n") as f:
            f.write(render_report(result))
        counts = {
            "items": len(result.items),
            "correct": sum(1 for it in result.items if it.correct),
        }
        return counts, inputs

    # report -------------------------------------------------------------------

    def _stage_report(self, d: Path):
        eval_dir = self._require("evaluate")
        with open(eval_dir / "eval.json", encoding="utf-8") as f:
            eval_payload = json.load(f)
        inputs = {"evaluate": _sha256_file(eval_dir / "eval.json")}
        stats_payload = None
        stats_path = self.stage_dir("stats") / "stats.json"
        if stats_path.exists():
            with open(stats_path, encoding="utf-8") as f:
                stats_payload = json.load(f)
            inputs["stats"] = _sha256_file(stats_path)
        parts = [(eval_dir / "report.txt").read_text(encoding="utf-8")]
        if stats_payload:
            parts.append("Dataset distribution flags")
            parts.append(f"  empty legal cells: {len(stats_payload['empty_cells'])}")
            parts.append(f"  style imbalance ratio: {stats_payload['style_imbalance_ratio']:.3f}")
            parts.append("")
        text = "\n".join(parts)
        with open(d / "report.txt", "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        self._write_json(d / "report.json", {"eval": eval_payload, "stats": stats_payload})
        return {"sections": len(parts)}, inputs

    # stats ---------------------------------------------------------------------

    def _stage_stats(self, d: Path):
        dataset = self._resolve_dataset()
        records = read_dataset(dataset)
        inputs = {"dataset": _sha256_file(Path(dataset) / "records.jsonl")}
        payload = dataset_stats(records)
        self._write_json(d / "stats.json", payload)
        return {"records": len(records)}, inputs

    def _resolve_dataset(self) -> Path:
        if self.config.paths.input_dataset:
            p = Path(self.config.paths.input_dataset)
            if not (p / "manifest.json").exists():
                raise MissingDependency("dataset", str(p))
            return p
        for stage in ("qa", "generate"):
            candidate = self.stage_dir(stage) / "dataset"
            if (candidate / "manifest.json").exists():
                return candidate
        raise MissingDependency("generate", "no dataset to analyze")

    # extract-features ------------------------------------------------------------

    def _stage_extract_features(self, d: Path):
        dataset = self._resolve_dataset()
        records = read_dataset(dataset)
        inputs = {"dataset": _sha256_file(Path(dataset) / "records.jsonl")}
        backbone: dict[str, FeatureVector] = {}
        source = "table_features"
        if self.config.paths.embeddings:
            source = "file"
            for v in read_embeddings(self.config.paths.embeddings):
                backbone[v.source_id] = v
            inputs["embeddings"] = _sha256_file(Path(self.config.paths.embeddings))
        rows = []
        for r in records:
            table_vec = table_feature_vector(r.table, source_id=r.chart_id)
            svg_text = (Path(dataset) / r.svg_path).read_text(encoding="utf-8")
            color = color_histogram_from_svg(svg_text, source_id=r.chart_id)
            bb = backbone.get(r.chart_id, table_vec)
            joint = EmbeddingRecord.build(r.chart_id, bb, color)
            rows.append(
                {
                    "id": r.chart_id,
                    "table_features": list(table_vec.values),
                    "backbone": list(bb.values),
                    "color_histogram": list(color.values),
                    "joint": list(joint.joint.values),
                }
            )
        with open(d / "features.jsonl", "w", encoding="utf-8", newline="\n") as f:
            header = {
                "backbone_source": source,
                "dims": {
                    "table": len(rows[0]["table_features"]) if rows else 0,
                    "color": 64,
                    "joint": len(rows[0]["joint"]) if rows else 0,
                },
            }
            f.write(json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
            for row in rows:
                f.write(json.dumps(row, sort_keys=True, separators=(",", ":")) + "\n")
        return {"records": len(rows)}, inputs

    def _read_features(self) -> dict[str, dict]:
        path = self._require("extract-features") / "features.jsonl"
        out = {}
        with open(path, encoding="utf-8") as f:
            next(f)  # header
            for line in f:
                d = json.loads(line)
                out[d["id"]] = d
        return out

    # train-classifier ---------------------------------------------------------

    ATTRIBUTES = ("chart_type", "number_annotation", "data_grouping", "trend", "layout")

    def _attribute_value(self, attrs: ChartAttributes, name: str) -> Optional[str]:
        if name == "chart_type":
            return attrs.chart_type.value
        return getattr(attrs, name)

    def _stage_train_classifier(self, d: Path):
        cfg = self.config
        dataset = self._resolve_dataset()
        records = read_dataset(dataset)
        feats = self._read_features()
        inputs = {
            "dataset": _sha256_file(Path(dataset) / "records.jsonl"),
            "features": _sha256_file(self._require("extract-features") / "features.jsonl"),
        }
        summary = {}
        for attr in self.ATTRIBUTES:
            pairs = []
            for r in records:
                label = self._attribute_value(r.attributes, attr)
                if label is None:
                    continue  # trend never applies to pie/treemap
                pairs.append((feats[r.chart_id]["joint"], label))
            classes = sorted({lab for _, lab in pairs})
            if len(classes) < 2:
                summary[attr] = {"skipped": f"only {len(classes)} class present"}
                continue
            rng = random.Random(cfg.global_seed + 7)
            rng.shuffle(pairs)
            split = max(1, int(0.8 * len(pairs)))
            train, held = pairs[:split], pairs[split:]
            idx = {c: i for i, c in enumerate(classes)}
            y_train = [idx[lab] for _, lab in train]
            alphas = inverse_class_frequency_alphas(y_train, len(classes))
            loss_cfg = FocalLossConfig(gamma=2.0, alphas=alphas, num_classes=len(classes))
            clf, history = train_classifier(
                [x for x, _ in train],
                y_train,
                classes,
                loss_cfg,
                TrainHyper(hidden_dim=32, lr=0.3, epochs=120, seed=cfg.global_seed),
            )
            clf.save(d / f"classifier_{attr}.json")
            write_training_report(d / f"training_{attr}.tsv", attr, history)
            if held:
                preds = [predict(clf, x)[0] for x, _ in held]
                golds = [lab for _, lab in held]
                summary[attr] = {
                    "classes": classes,
                    "train_size": len(train),
                    "held_size": len(held),
                    "held_macro_f1": macro_f1(preds, golds, classes),
                }
            else:
                summary[attr] = {"classes": classes, "train_size": len(train), "held_size": 0}
        self._write_json(d / "summary.json", summary)
        return {"attributes": len(summary)}, inputs

    # label -------------------------------------------------------------------

    def _stage_label(self, d: Path):
        feats = self._read_features()
        train_dir = self._require("train-classifier")
        inputs = {"features": _sha256_file(self._require("extract-features") / "features.jsonl")}
        classifiers = {}
        for attr in self.ATTRIBUTES:
            path = train_dir / f"classifier_{attr}.json"
            if path.exists():
                classifiers[attr] = MLPClassifier.load(path)
                inputs[f"classifier_{attr}"] = _sha256_file(path)
        with open(d / "labels.jsonl", "w", encoding="utf-8", newline="\n") as f:
            for cid in sorted(feats):
                joint = feats[cid]["joint"]
                labels = {}
                for attr, clf in classifiers.items():
                    labels[attr] = predict(clf, joint)[0]
                if labels.get("chart_type") in ("pie", "treemap"):
                    labels["trend"] = None
                    labels["layout"] = "radial"
                f.write(
                    json.dumps({"id": cid, "attributes": labels}, sort_keys=True, separators=(",", ":"))
                    + "\n"
                )
        return {"records": len(feats)}, inputs

    def _read_labels(self) -> dict[str, ChartAttributes]:
        path = self._require("label") / "labels.jsonl"
        out = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                d = json.loads(line)
                a = d["attributes"]
                out[d["id"]] = ChartAttributes(
                    chart_type=ChartType(a["chart_type"]),
                    number_annotation=a.get("number_annotation", "absent"),
                    data_grouping=a.get("data_grouping", "single"),
                    trend=a.get("trend"),
                    layout=a.get("layout", "vertical"),
                )
        return out

    # filter -------------------------------------------------------------------

    def _stage_filter(self, d: Path):
        cfg = self.config
        feats = self._read_features()
        attributes = self._read_labels()
        inputs = {
            "features": _sha256_file(self._require("extract-features") / "features.jsonl"),
            "labels": _sha256_file(self._require("label") / "labels.jsonl"),
        }
        embeddings = {}
        for cid in sorted(feats):
            joint = FeatureVector.of(cid, feats[cid]["joint"])
            color = FeatureVector.of(cid, feats[cid]["color_histogram"])
            backbone = FeatureVector.of(cid, feats[cid]["backbone"])
            embeddings[cid] = EmbeddingRecord(
                source_id=cid, backbone_embedding=backbone, color_histogram=color, joint=joint
            )
        ids = sorted(embeddings)
        k = cfg.filter.k or default_k(len(ids))
        assignment = kmeans([embeddings[i] for i in ids], k=k, seed=cfg.global_seed)
        clusters: dict[int, list[str]] = {}
        for cid, c in assignment.assignment.items():
            clusters.setdefault(c, []).append(cid)
        strata = []
        for c in sorted(clusters):
            strata.extend(stratify(c, clusters[c], attributes, embeddings))

        trace = []
        if cfg.filter.epsilon is not None:
            eps = cfg.filter.epsilon
            decisions = [
                dedup_stratum(s, embeddings, eps, cfg.filter.keep_most_typical) for s in strata
            ]
        else:
            if cfg.filter.target_count is None:
                raise ConfigError("filter.target_count", "needed when epsilon is not fixed")
            tuning = tune_epsilon(
                strata,
                embeddings,
                target_count=cfg.filter.target_count,
                tolerance_frac=cfg.filter.tolerance_frac,
                keep_most_typical=cfg.filter.keep_most_typical,
            )
            eps = tuning.epsilon
            decisions = list(tuning.decisions)
            trace = [{"epsilon": e, "retained": c} for e, c in tuning.trace]

        retained = sorted(i for dec in decisions for i in dec.retained_ids)
        removed = sorted(i for dec in decisions for i in dec.removed_ids)
        report = {
            "k": k,
            "epsilon": eps,
            "epsilon_trace": trace,
            "clusters": {str(c): len(members) for c, members in sorted(clusters.items())},
            "strata": [
                {
                    "cluster": s.cluster_index,
                    "key": list(s.key),
                    "size": len(s.member_ids),
                }
                for s in strata
            ],
            "retained_count": len(retained),
            "removed_count": len(removed),
        }
        self._write_json(d / "filter_report.json", report)
        self._write_json(d / "retained_ids.json", retained)
        dataset = self._resolve_dataset_optional()
        if dataset is not None:
            records = [r for r in read_dataset(dataset) if r.chart_id in set(retained)]
            write_dataset(records, d / "dataset", extra_meta={"config_hash": cfg.config_hash()})
        return {"retained": len(retained), "removed": len(removed)}, inputs

    def _resolve_dataset_optional(self) -> Optional[Path]:
        try:
            return self._resolve_dataset()
        except MissingDependency:
            return None


def hash_id(s: str) -> int:
    return int.from_bytes(hashlib.sha256(s.encode("utf-8")).digest()[:8], "big")


def dataset_stats(records: Sequence[DatasetRecord]) -> dict:
    """Distribution report: counts, empty legal cells, style imbalance."""
    by_type: dict[str, int] = {}
    by_attr: dict[str, dict[str, int]] = {
        "number_annotation": {},
        "data_grouping": {},
        "trend": {},
        "layout": {},
    }
    by_cell: dict[str, int] = {}
    by_style: dict[str, int] = {}
    by_category: dict[str, int] = {}
    total_qa = 0
    for r in records:
        by_type[r.spec.chart_type.value] = by_type.get(r.spec.chart_type.value, 0) + 1
        attrs = r.attributes
        for name in by_attr:
            v = getattr(attrs, name)
            key = "none" if v is None else str(v)
            by_attr[name][key] = by_attr[name].get(key, 0) + 1
        for qa in r.qa_pairs:
            total_qa += 1
            cell = f"{r.spec.chart_type.value}|{qa.category.name.value}|{qa.category.value_mode.value}"
            by_cell[cell] = by_cell.get(cell, 0) + 1
            by_style[qa.qa_style.value] = by_style.get(qa.qa_style.value, 0) + 1
            by_category[qa.category.name.value] = by_category.get(qa.category.name.value, 0) + 1
    legal = [f"{ct.value}|{name.value}|{mode.value}" for ct, name, mode in all_legal_triples()]
    empty = [cell for cell in legal if by_cell.get(cell, 0) == 0]
    imbalance = max(by_style.values()) / total_qa if total_qa else 0.0
    return {
        "records": len(records),
        "qa_pairs": total_qa,
        "counts_by_chart_type": dict(sorted(by_type.items())),
        "counts_by_attribute": {k: dict(sorted(v.items())) for k, v in by_attr.items()},
        "counts_by_category": dict(sorted(by_category.items())),
        "counts_by_style": dict(sorted(by_style.items())),
        "counts_by_cell": dict(sorted(by_cell.items())),
        "empty_cells": sorted(empty),
        "style_imbalance_ratio": imbalance,
        "style_imbalance_flag": imbalance > 0.5,
    }
