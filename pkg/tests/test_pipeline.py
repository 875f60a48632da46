import json
import subprocess
import sys

import pytest

from civ.config import PipelineConfig, config_from_dict, load_config
from civ.errors import ConfigError, MissingDependency
from civ.evaluation import ModelResponse, write_responses
from civ.pipeline import StageRunner, dataset_stats
from civ.storage import read_dataset


def desk_config(**over):
    raw = {
        "global_seed": 33,
        "generation": {"charts_per_type": 2, "augmentations_per_chart": 1},
        "qa": {"per_cell_max": 30},
        "benchmark": {"charts": 12, "qa_per_chart": 2},
    }
    for key, value in over.items():
        raw.setdefault(key, {}).update(value) if isinstance(value, dict) else raw.update({key: value})
    return config_from_dict(raw)


def test_config_parsing_and_hash(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"global_seed": 5, "filter": {"epsilon": 0.9}}))
    cfg = load_config(path)
    assert cfg.global_seed == 5 and cfg.filter.epsilon == 0.9
    assert cfg.config_hash() != PipelineConfig().config_hash()
    assert len(cfg.config_hash()) == 16


@pytest.mark.parametrize(
    "raw, field",
    [
        ({"global_seed": "nope"}, "global_seed"),
        ({"filter": {"epsilon": 1.5}}, "filter.epsilon"),
        ({"filter": {"tolerance_frac": 0.9}}, "filter.tolerance_frac"),
        ({"generation": {"charts_per_type": 0}}, "generation.charts_per_type"),
        ({"qa": {"per_cell_min": 5, "per_cell_max": 2}}, "qa.per_cell_min"),
        ({"benchmark": {"charts": -1}}, "benchmark.charts"),
    ],
)
def test_config_rejections(raw, field):
    with pytest.raises(ConfigError) as e:
        config_from_dict(raw)
    assert e.value.field == field


def test_missing_config_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/config.json")


def test_stage_dependencies_enforced(tmp_path):
    runner = StageRunner(desk_config(), tmp_path / "out")
    with pytest.raises(MissingDependency):
        runner.run_stage("qa")
    with pytest.raises(MissingDependency):
        runner.run_stage("evaluate")
    with pytest.raises(MissingDependency):
        runner.run_stage("stats")


@pytest.fixture(scope="module")
def pipeline_run(tmp_path_factory):
    """One full pipeline run shared by the assertions below."""
    root = tmp_path_factory.mktemp("pipe")
    cfg = desk_config()
    runner = StageRunner(cfg, root / "out")
    manifests = {}
    manifests["generate"] = runner.run_stage("generate")
    manifests["qa"] = runner.run_stage("qa")
    manifests["assemble-benchmark"] = runner.run_stage("assemble-benchmark")
    bench = read_dataset(root / "out/assemble-benchmark/dataset")
    responses = [
        ModelResponse(qa.id, qa.answer.as_text()) for r in bench for qa in r.qa_pairs
    ]
    write_responses(root / "responses.jsonl", responses)
    import dataclasses

    cfg_eval = dataclasses.replace(
        cfg, paths=dataclasses.replace(cfg.paths, responses=str(root / "responses.jsonl"))
    )
    runner_eval = StageRunner(cfg_eval, root / "out")
    manifests["evaluate"] = runner_eval.run_stage("evaluate")
    manifests["stats"] = runner_eval.run_stage("stats")
    manifests["report"] = runner_eval.run_stage("report")
    manifests["extract-features"] = runner.run_stage("extract-features")
    manifests["train-classifier"] = runner.run_stage("train-classifier")
    manifests["label"] = runner.run_stage("label")
    import dataclasses as dc

    cfg_filter = dc.replace(
        cfg, filter=dc.replace(cfg.filter, epsilon=0.999)
    )
    manifests["filter"] = StageRunner(cfg_filter, root / "out").run_stage("filter")
    return root, cfg, manifests


def test_generate_stage_outputs(pipeline_run):
    root, cfg, manifests = pipeline_run
    assert manifests["generate"]["counts"]["records"] == 2 * 11 * 2
    assert (root / "out/generate/dataset/manifest.json").exists()
    assert (root / "out/generate/planted.jsonl").exists()
    dataset_manifest = json.loads((root / "out/generate/dataset/manifest.json").read_text())
    assert dataset_manifest["config_hash"] == cfg.config_hash()


def test_qa_stage_covers_cells(pipeline_run):
    root, _, manifests = pipeline_run
    assert manifests["qa"]["counts"]["qa_pairs"] > 100
    records = read_dataset(root / "out/qa/dataset")
    assert all(len(r.qa_pairs) >= 2 for r in records)


def test_benchmark_stage_shape(pipeline_run):
    root, _, manifests = pipeline_run
    assert manifests["assemble-benchmark"]["counts"]["charts"] == 12
    assert manifests["assemble-benchmark"]["counts"]["qa_pairs"] == 24
    bench = read_dataset(root / "out/assemble-benchmark/dataset")
    types = {r.spec.chart_type for r in bench}
    assert len(types) == 11  # near-even allocation hits every type


def test_evaluate_stage_all_correct(pipeline_run):
    root, _, manifests = pipeline_run
    assert manifests["evaluate"]["counts"]["correct"] == manifests["evaluate"]["counts"]["items"]
    payload = json.loads((root / "out/evaluate/eval.json").read_text())
    assert payload["overall_accuracy"] == 1.0


def test_stats_stage_flags(pipeline_run):
    root, _, _ = pipeline_run
    payload = json.loads((root / "out/stats/stats.json").read_text())
    assert payload["records"] == 44
    assert payload["qa_pairs"] > 0
    assert isinstance(payload["empty_cells"], list)
    assert payload["style_imbalance_ratio"] <= 1.0


def test_feature_stage_and_probe_training(pipeline_run):
    root, _, manifests = pipeline_run
    assert manifests["extract-features"]["counts"]["records"] == 44
    lines = (root / "out/extract-features/features.jsonl").read_text().splitlines()
    header = json.loads(lines[0])
    assert header["dims"]["color"] == 64
    assert len(lines) == 45
    summary = json.loads((root / "out/train-classifier/summary.json").read_text())
    assert "chart_type" in summary
    labels = (root / "out/label/labels.jsonl").read_text().splitlines()
    assert len(labels) == 44
    first = json.loads(labels[0])
    assert "chart_type" in first["attributes"]


def test_filter_stage_report(pipeline_run):
    root, _, manifests = pipeline_run
    report = json.loads((root / "out/filter/filter_report.json").read_text())
    assert report["retained_count"] + report["removed_count"] == 44
    assert report["k"] >= 1
    retained = json.loads((root / "out/filter/retained_ids.json").read_text())
    assert len(retained) == report["retained_count"]
    filtered = read_dataset(root / "out/filter/dataset")
    assert {r.chart_id for r in filtered} == set(retained)


def test_identical_rerun_is_byte_identical(tmp_path):
    cfg = desk_config()
    r1 = StageRunner(cfg, tmp_path / "a")
    r2 = StageRunner(cfg, tmp_path / "b")
    m1 = [r1.run_stage(s) for s in ("generate", "qa")]
    m2 = [r2.run_stage(s) for s in ("generate", "qa")]
    for a, b in zip(m1, m2):
        assert a["outputs"] == b["outputs"]  # same artifact hashes
    a_records = (tmp_path / "a/qa/dataset/records.jsonl").read_bytes()
    b_records = (tmp_path / "b/qa/dataset/records.jsonl").read_bytes()
    assert a_records == b_records


def test_dataset_stats_flags_retrieval_skew(bar_spec):
    from civ.charts import attributes_from_spec
    from civ.records import Answer, AnswerKind, DatasetRecord, QAPair, QAStyle
    from civ.tasks import TaskCategory, TaskName, ValueMode

    # mimic a machine-generated split where retrieval dominates 1035/1250
    qas = []
    for i in range(1250):
        style = QAStyle.DATA_RETRIEVAL if i < 1035 else QAStyle.VISUAL
        qas.append(
            QAPair(
                id=f"q{i}", chart_id=bar_spec.id, question="What is the value of A?",
                answer=Answer(AnswerKind.NUMBER, 1.0),
                category=TaskCategory(TaskName.DATA_RETRIEVAL, ValueMode.ABSOLUTE),
                qa_style=style,
            )
        )
    record = DatasetRecord(
        chart_id=bar_spec.id, spec=bar_spec, svg_path="charts/bar-1.svg",
        table=bar_spec.table, qa_pairs=tuple(qas),
        attributes=attributes_from_spec(bar_spec),
    )
    stats = dataset_stats([record])
    assert abs(stats["style_imbalance_ratio"] - 0.828) < 1e-3
    assert stats["style_imbalance_flag"]


def _run_cli(args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "civ.cli", *args],
        capture_output=True, text=True, cwd=cwd,
    )


def test_cli_exit_codes(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "global_seed": 2,
        "generation": {"charts_per_type": 1, "augmentations_per_chart": 0},
    }))
    out = tmp_path / "out"
    ok = _run_cli(["generate", "--config", str(config), "--out", str(out)], tmp_path)
    assert ok.returncode == 0, ok.stderr
    assert json.loads(ok.stdout)["stage"] == "generate"

    bad_config = tmp_path / "bad.json"
    bad_config.write_text(json.dumps({"filter": {"epsilon": 2.0}}))
    bad = _run_cli(["generate", "--config", str(bad_config), "--out", str(out)], tmp_path)
    assert bad.returncode == 2

    dep = _run_cli(["evaluate", "--config", str(config), "--out", str(tmp_path / "fresh")], tmp_path)
    assert dep.returncode == 3


def test_cli_stats_with_dataset_override(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "global_seed": 2,
        "generation": {"charts_per_type": 1, "augmentations_per_chart": 0},
    }))
    out = tmp_path / "out"
    assert _run_cli(["generate", "--config", str(config), "--out", str(out)], tmp_path).returncode == 0
    res = _run_cli(
        ["stats", "--config", str(config), "--out", str(out),
         "--dataset", str(out / "generate/dataset")],
        tmp_path,
    )
    assert res.returncode == 0, res.stderr
    payload = json.loads((out / "stats/stats.json").read_text())
    assert payload["records"] == 11
