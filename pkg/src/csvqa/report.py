"""Evaluation reports: per-category statistics as JSON + TSV, plus figures."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from . import plotting
from .evaluation import MIN_FIT_ITEMS, codeword, fit_logistic, histograms, summarize

log = logging.getLogger(__name__)

PRIMARY = "CSV"
OVERALL = "overall"
SUMMARY_COLUMNS = ("metric", "category", "n", "plcc", "scc", "kcc", "raw_plcc",
                   "emd", "kl", "js", "hi", "l2")


def _groups(ids, manifest):
    by_id = {e.pair_id: e for e in manifest}
    groups = {OVERALL: [i for i in ids if i in by_id]}
    for cat in manifest.categories():
        groups[cat] = [i for i in groups[OVERALL] if by_id[i].category == cat]
    return groups, by_id


def _evaluate_metric(scores: dict, manifest, per_category_fit: bool, form: str, bins: int):
    groups, by_id = _groups(list(scores), manifest)
    stats_by_cat, skipped, mapped = {}, [], {}
    global_fit = None
    for cat, ids in groups.items():
        if len(ids) < MIN_FIT_ITEMS:
            skipped.append({"category": cat, "n": len(ids),
                            "reason": f"fewer than {MIN_FIT_ITEMS} pairs"})
            continue
        x = np.array([scores[i] for i in ids])
        y = np.array([by_id[i].mos for i in ids])
        reg = fit_logistic(x, y, form=form) if per_category_fit or cat == OVERALL else global_fit
        if cat == OVERALL:
            global_fit = reg
        res = summarize(x, y, reg, bins)
        mapped[cat] = (x, y, reg)
        stats_by_cat[cat] = res
    return stats_by_cat, skipped, mapped


def build_report(objective: dict, manifest, external: dict | None = None,
                 per_category_fit: bool = True, form: str = "standard", bins: int = 10):
    """Statistics for CSV and any external metrics, plus significance codewords.

    Returns ``(report, plot_data)``; ``report`` is JSON-serializable.
    """
    metrics = {PRIMARY: objective, **(external or {})}
    manifest_ids = {e.pair_id for e in manifest}
    report = {
        "fit": "per-category" if per_category_fit else "global",
        "logistic_form": form,
        "bins": bins,
        "metrics": {},
        "skipped": [],
        "unmatched": {},
        "significance": {},
    }
    plot_data = {}
    for name, scores in metrics.items():
        unmatched = sorted(set(scores) ^ manifest_ids)
        if unmatched:
            log.warning("%s: %d ids unmatched between scores and manifest", name, len(unmatched))
        report["unmatched"][name] = unmatched
        stats_by_cat, skipped, mapped = _evaluate_metric(scores, manifest, per_category_fit, form, bins)
        report["metrics"][name] = stats_by_cat
        report["skipped"] += [{"metric": name, **s} for s in skipped]
        plot_data[name] = mapped

    primary = report["metrics"][PRIMARY]
    for name in metrics:
        if name == PRIMARY:
            continue
        other = report["metrics"][name]
        cats = [c for c in primary if c in other]
        codes = {c: codeword(primary[c], other[c], primary[c]["n"], other[c]["n"]) for c in cats}
        report["significance"][name] = {"categories": cats, "codes": codes,
                                        "codeword": "".join(codes[c] for c in cats)}
    return report, plot_data


def write_summary(report: dict, path) -> None:
    with open(path, "w") as fh:
        fh.write("\t".join(SUMMARY_COLUMNS) + "\n")
        for name, cats in report["metrics"].items():
            for cat, r in cats.items():
                row = [name, cat, str(r["n"])]
                row += [f"{r[k]:.6f}" for k in ("plcc", "scc", "kcc", "raw_plcc")]
                row += [f"{r['hist'][k]:.6f}" for k in ("emd", "kl", "js", "hi", "l2")]
                fh.write("\t".join(row) + "\n")


def _plot(plot_data, bins, fig_dir: Path):
    fig_dir.mkdir(parents=True, exist_ok=True)
    for name, cats in plot_data.items():
        for cat, (x, y, reg) in cats.items():
            mapped = reg(x)
            stem = f"{name}_{cat}".replace("/", "_").replace(" ", "_")
            plotting.scatter_fit(x, y, reg, fig_dir / f"{stem}_scatter.png",
                                 title=f"{name} / {cat}")
            _, _, edges = histograms(y, mapped, bins)
            plotting.histogram_pair(y, mapped, edges, fig_dir / f"{stem}_hist.png",
                                    title=f"{name} / {cat}")


def emit_report(objective: dict, manifest, out_dir, external: dict | None = None,
                per_category_fit: bool = True, form: str = "standard", bins: int = 10,
                figures: bool = True) -> dict:
    """Write ``report.json``, ``summary.tsv`` and (optionally) ``figures/`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report, plot_data = build_report(objective, manifest, external, per_category_fit, form, bins)
    for s in report["skipped"]:
        log.warning("skipped %s/%s: %s (n=%d)", s["metric"], s["category"], s["reason"], s["n"])
    (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    write_summary(report, out_dir / "summary.tsv")
    if figures:
        _plot(plot_data, bins, out_dir / "figures")
    return report

