"""Dataset persistence: JSONL records, sidecar SVGs, and a counts manifest."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Iterable, Optional

from .errors import DuplicateId, IntegrityError, ParseError, ValidationError
from .records import SCHEMA_VERSION, DatasetRecord
from .render import render_svg

RECORDS_FILE = "records.jsonl"
MANIFEST_FILE = "manifest.json"
CHARTS_DIR = "charts"


def _record_line(record: DatasetRecord) -> str:
    return json.dumps(record.to_json_dict(), sort_keys=True, separators=(",", ":"))


def build_manifest(records: Iterable[DatasetRecord], extra: Optional[dict] = None) -> dict:
    by_type: dict[str, int] = {}
    by_category: dict[str, int] = {}
    by_mode: dict[str, int] = {}
    total_qa = 0
    n = 0
    for r in records:
        n += 1
        by_type[r.spec.chart_type.value] = by_type.get(r.spec.chart_type.value, 0) + 1
        for qa in r.qa_pairs:
            total_qa += 1
            name = qa.category.name.value
            by_category[name] = by_category.get(name, 0) + 1
            mode = qa.category.value_mode.value
            by_mode[mode] = by_mode.get(mode, 0) + 1
    manifest = {
        "schema": SCHEMA_VERSION,
        "total_records": n,
        "total_qa_pairs": total_qa,
        "counts_by_chart_type": dict(sorted(by_type.items())),
        "counts_by_category": dict(sorted(by_category.items())),
        "counts_by_value_mode": dict(sorted(by_mode.items())),
    }
    if extra:
        manifest.update(extra)
    return manifest


def write_dataset(
    records: list[DatasetRecord], path: str | Path, extra_meta: Optional[dict] = None
) -> dict:
    """Write records.jsonl, charts/*.svg, and manifest.json under ``path``.

    Re-running with the same input produces byte-identical files. Returns the
    manifest dict.
    """
    seen: set[str] = set()
    for r in records:
        if r.chart_id in seen:
            raise DuplicateId(f"duplicate chart id {r.chart_id!r}")
        seen.add(r.chart_id)

    path = Path(path)
    (path / CHARTS_DIR).mkdir(parents=True, exist_ok=True)
    with open(path / RECORDS_FILE, "w", encoding="utf-8", newline="\n") as f:
        for r in records:
            f.write(_record_line(r))
            f.write("\n")
    for r in records:
        svg_file = path / r.svg_path
        svg_file.parent.mkdir(parents=True, exist_ok=True)
        with open(svg_file, "w", encoding="utf-8", newline="\n") as f:
            f.write(render_svg(r.spec))
    manifest = build_manifest(records, extra_meta)
    with open(path / MANIFEST_FILE, "w", encoding="utf-8", newline="\n") as f:
        json.dump(manifest, f, sort_keys=True, indent=2)
        f.write("\n")
    return manifest


def read_dataset(path: str | Path) -> list[DatasetRecord]:
    """Load a dataset directory back into records, verifying manifest counts."""
    path = Path(path)
    manifest_path = path / MANIFEST_FILE
    if not manifest_path.exists():
        raise ParseError(f"no manifest at {os.fspath(manifest_path)}")
    with open(manifest_path, encoding="utf-8") as f:
        manifest = json.load(f)
    records: list[DatasetRecord] = []
    with open(path / RECORDS_FILE, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"bad JSON: {e.msg}", line=lineno) from None
            try:
                records.append(DatasetRecord.from_json_dict(d))
            except (KeyError, TypeError, ValueError, ValidationError) as e:
                raise ParseError(f"bad record: {e}", line=lineno) from None
    if manifest.get("total_records") != len(records):
        raise IntegrityError(
            f"manifest says {manifest.get('total_records')} records, found {len(records)}"
        )
    total_qa = sum(len(r.qa_pairs) for r in records)
    if manifest.get("total_qa_pairs") != total_qa:
        raise IntegrityError(
            f"manifest says {manifest.get('total_qa_pairs')} qa pairs, found {total_qa}"
        )
    return records


def read_manifest(path: str | Path) -> dict:
    with open(Path(path) / MANIFEST_FILE, encoding="utf-8") as f:
        return json.load(f)
