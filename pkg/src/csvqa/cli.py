"""Command line entry point: ``csvqa score | batch | evaluate``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .datasets import (
    ManifestError,
    ResultStore,
    parse_manifest,
    read_scores,
    run_batch,
    write_results,
)
from .imaging import load_rgb, save_gray
from .metric import CONFIG_SCHEMA_VERSION, ConfigError, CsvConfig, compute_csv, load_config, resources
from .report import emit_report

EXIT_IO = 2
EXIT_CONFIG = 3


def _config(args) -> CsvConfig:
    cfg = load_config(args.config) if args.config else CsvConfig()
    if args.variant:
        cfg = cfg.variant(args.variant)
    resources(cfg)
    return cfg


def cmd_score(args) -> int:
    cfg = _config(args)
    try:
        ref, dist = load_rgb(args.ref), load_rgb(args.dist)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if ref.shape != dist.shape:
        print(f"error: image sizes differ: {ref.shape[:2]} vs {dist.shape[:2]}", file=sys.stderr)
        return EXIT_IO
    result = compute_csv(ref, dist, cfg, keep_maps=args.maps_out is not None)
    if args.maps_out:
        out = Path(args.maps_out)
        out.mkdir(parents=True, exist_ok=True)
        for name, plane in result.maps.items():
            save_gray(plane, out / f"{name}.png")
    print(f"{result.value:.6f}")
    return 0


def cmd_batch(args) -> int:
    cfg = _config(args)
    try:
        manifest = parse_manifest(args.manifest)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    store = ResultStore(args.store) if args.store else None
    results = run_batch(manifest, cfg, store, jobs=args.jobs)
    write_results(results, args.out)
    counts = {s: sum(r.status == s for r in results) for s in ("ok", "cached", "failed")}
    print(
        f"scored {counts['ok']}, cached {counts['cached']}, failed {counts['failed']}, "
        f"missing {len(manifest.missing)}",
        file=sys.stderr,
    )
    return 0


def cmd_evaluate(args) -> int:
    try:
        manifest = parse_manifest(args.manifest, check_files=False)
        scores = read_scores(args.results)
        external = {}
        for item in args.external or []:
            name, sep, path = item.partition("=")
            if not sep or not name:
                raise ValueError(f"--external expects NAME=path, got {item!r}")
            external[name] = read_scores(path)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    report = emit_report(
        scores, manifest, args.report, external,
        per_category_fit=not args.global_fit,
        form="printed" if args.printed_logistic else "standard",
        bins=args.bins,
        figures=not args.no_figures,
    )
    overall = report["metrics"]["CSV"].get("overall")
    if overall:
        print(f"PLCC {overall['plcc']:.4f}  SCC {overall['scc']:.4f}  KCC {overall['kcc']:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csvqa", description="Full-reference color image quality (CSV).")
    parser.add_argument(
        "--version", action="version",
        version=f"csvqa {__version__} (config hash schema {CONFIG_SCHEMA_VERSION})",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def metric_opts(p):
        p.add_argument("--config", help="JSON file of CsvConfig fields")
        p.add_argument("--variant", choices=("b", "n", "e"),
                       help="b: bilinear, n: nearest upsampling, e: Euclidean color term")

    p = sub.add_parser("score", help="score one reference/distorted pair")
    p.add_argument("ref")
    p.add_argument("dist")
    p.add_argument("--maps-out", help="directory for 8-bit feature map images")
    metric_opts(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("batch", help="score every pair in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="output score file (TSV)")
    p.add_argument("--store", help="result cache directory")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: CPU count)")
    metric_opts(p)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("evaluate", help="correlation report against subjective scores")
    p.add_argument("results", help="objective score file (id, score)")
    p.add_argument("--manifest", required=True)
    p.add_argument("--external", action="append", metavar="NAME=scores.tsv",
                   help="another metric's scores for side-by-side significance")
    p.add_argument("--report", required=True, help="output directory")
    p.add_argument("--global-fit", action="store_true", help="fit the mapping once on all pairs")
    p.add_argument("--printed-logistic", action="store_true",
                   help="use the 1 - 1/(2 + exp) logistic variant")
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
