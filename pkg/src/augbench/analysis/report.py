"""Markdown + JSON report mirroring the composition, performance and similarity tables.

Numbers in the JSON are rounded exactly as printed in the Markdown so the two
documents always agree.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Mapping, Sequence

from ..corpus import Label, Source
from ..eval import EvalReport
from .similarity import SimilarityRow

COMPOSITION_TITLE = "Dataset Composition"
PERFORMANCE_TITLE = "Model Performance"
SIMILARITY_TITLE = "Semantic Similarity"
FIGURES_TITLE = "Figures"


def _composition_rows(composition: Mapping) -> list[dict]:
    rows = []
    for src in Source:
        rows.append({
            "source": src.display,
            "negative": int(composition.get((src, Label.NEGATIVE), 0)),
            "positive": int(composition.get((src, Label.POSITIVE), 0)),
        })
    return rows


def _performance_rows(report: EvalReport) -> list[dict]:
    rows = []
    for e in report.entries:
        acc, acc_sd = e.accuracy
        f1, f1_sd = e.f1_macro
        rows.append({
            "dataset": e.config,
            "model": e.model,
            "accuracy": round(acc, 3),
            "accuracy_std": round(acc_sd, 3),
            "f1": round(f1, 3),
            "f1_std": round(f1_sd, 3),
        })
    return rows


def _md_composition(rows) -> str:
    out = ["| Source | Non-gender-based HS | Gender-based HS |", "|---|---|---|"]
    out += [f"| {r['source']} | {r['negative']} | {r['positive']} |" for r in rows]
    return "\n".join(out)


def _md_performance(rows) -> str:
    out = ["| Dataset | Model | Accuracy | Accuracy Std | F1-Score | F1-Score Std |",
           "|---|---|---|---|---|---|"]
    previous = None
    for r in rows:
        name = r["dataset"] if r["dataset"] != previous else ""
        previous = r["dataset"]
        out.append(f"| {name} | {r['model']} | {r['accuracy']:.3f} | {r['accuracy_std']:.3f} "
                   f"| {r['f1']:.3f} | {r['f1_std']:.3f} |")
    return "\n".join(out)


def _md_similarity(rows) -> str:
    out = ["| Augmentation Method | Similarity to Original |", "|---|---|"]
    out += [f"| {r['method']} | {r['similarity']:.4f} |" for r in rows]
    return "\n".join(out)


def _figure_entries(paths, base: Path | None) -> list[dict]:
    items = paths.items() if isinstance(paths, Mapping) else ((Path(p).stem, p) for p in paths)
    out = []
    for name, p in items:
        p = Path(p)
        shown = Path(os.path.relpath(p, base)) if base is not None else p
        out.append({"name": str(name), "path": shown.as_posix()})
    return out


def assemble_report(
    composition: Mapping | None = None,
    eval_report: EvalReport | None = None,
    similarity_rows: Sequence[SimilarityRow] | None = None,
    projection_paths: Mapping | Sequence | None = None,
    out_dir=None,
) -> tuple[str, dict]:
    """Build the report; with ``out_dir`` also write report.md and report.json there.

    Sections appear only for the inputs given, in a fixed order.
    """
    if composition is None and eval_report is None and not similarity_rows and not projection_paths:
        raise ValueError("assemble_report needs at least one section")
    base = Path(out_dir) if out_dir is not None else None
    data: dict = {"sections": []}
    md = ["# Augmentation Benchmark Report", ""]

    if composition is not None:
        rows = _composition_rows(composition)
        data["composition"] = rows
        data["sections"].append(COMPOSITION_TITLE)
        md += [f"## {COMPOSITION_TITLE}", "", _md_composition(rows), ""]
    if eval_report is not None:
        rows = _performance_rows(eval_report)
        data["performance"] = rows
        data["sections"].append(PERFORMANCE_TITLE)
        md += [f"## {PERFORMANCE_TITLE}", "", _md_performance(rows), ""]
    if similarity_rows:
        rows = [{"method": r.method, "similarity": round(r.similarity, 4)} for r in similarity_rows]
        data["similarity"] = rows
        data["sections"].append(SIMILARITY_TITLE)
        md += [f"## {SIMILARITY_TITLE}", "", _md_similarity(rows), ""]
    if projection_paths:
        figs = _figure_entries(projection_paths, base)
        data["figures"] = figs
        data["sections"].append(FIGURES_TITLE)
        md += [f"## {FIGURES_TITLE}", ""]
        md += [f"![{f['name']}]({f['path']})" for f in figs]
        md.append("")

    markdown = "\n".join(md)
    if base is not None:
        base.mkdir(parents=True, exist_ok=True)
        (base / "report.md").write_text(markdown, encoding="utf-8")
        (base / "report.json").write_text(
            json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return markdown, data
