"""Dataset manifests, the on-disk result journal, and batch scoring."""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from .imaging import load_rgb
from .metric import CsvConfig, compute_csv, resources

log = logging.getLogger(__name__)

MANIFEST_COLUMNS = ("id", "reference", "distorted", "mos", "category")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    pair_id: str
    reference: Path
    distorted: Path
    mos: float
    category: str


@dataclass
class Manifest:
    entries: list = field(default_factory=list)
    missing: list = field(default_factory=list)  # ids whose image files were not found

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def categories(self) -> list:
        return sorted({e.category for e in self.entries})


def parse_manifest(path, check_files: bool = True) -> Manifest:
    """Read a 5-column TSV manifest with a header row.

    Relative image paths resolve against the manifest's directory. Rows
    whose files are missing are excluded and listed in ``Manifest.missing``.
    """
    path = Path(path)
    base = path.parent
    manifest = Manifest()
    seen = set()
    with open(path, newline="") as fh:
        rows = csv.reader(fh, delimiter="\t")
        header = next(rows, None)
        if header is None:
            raise ManifestError(f"{path}: empty file (header row required)")
        if tuple(h.strip().lower() for h in header) != MANIFEST_COLUMNS:
            raise ManifestError(f"{path}:1: header must be {' '.join(MANIFEST_COLUMNS)}")
        for lineno, row in enumerate(rows, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 5:
                raise ManifestError(f"{path}:{lineno}: expected 5 columns, got {len(row)}")
            pair_id, ref, dist, mos, category = (c.strip() for c in row)
            if not pair_id:
                raise ManifestError(f"{path}:{lineno}: empty id")
            if pair_id in seen:
                raise ManifestError(f"{path}:{lineno}: duplicate id {pair_id!r}")
            seen.add(pair_id)
            try:
                mos_value = float(mos)
            except ValueError:
                raise ManifestError(f"{path}:{lineno}: bad subjective score {mos!r}") from None
            entry = ManifestEntry(pair_id, base / ref, base / dist, mos_value, category)
            if check_files and not (entry.reference.is_file() and entry.distorted.is_file()):
                log.warning("%s:%d: image file missing for %s", path, lineno, pair_id)
                manifest.missing.append(pair_id)
                continue
            manifest.entries.append(entry)
    return manifest


def write_manifest(entries, path) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, delimiter="\t", lineterminator="\n")
        out.writerow(MANIFEST_COLUMNS)
        for e in entries:
            out.writerow([e.pair_id, _rel(e.reference, path.parent), _rel(e.distorted, path.parent),
                          repr(float(e.mos)), e.category])


def _rel(p: Path, base: Path) -> str:
    try:
        return str(Path(p).relative_to(base))
    except ValueError:
        return str(p)


# -- result store ----------------------------------------------------------


class ResultStore:
    """Append-only TSV journal of ``(pair id, config hash, score)``.

    Timestamps go to a sidecar file so the journal itself is reproducible.
    A torn final line from an interrupted run is discarded on open.
    """

    JOURNAL = "results.tsv"
    SIDECAR = "timestamps.tsv"

    def __init__(self, directory):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.journal = self.dir / self.JOURNAL
        self.sidecar = self.dir / self.SIDECAR
        self._index: dict[tuple[str, str], float] = {}
        self._load()

    def _load(self):
        if not self.journal.exists():
            return
        data = self.journal.read_bytes()
        complete = data[: data.rfind(b"\n") + 1]
        if len(complete) != len(data):
            log.warning("discarding torn record at end of %s", self.journal)
            with open(self.journal, "r+b") as fh:
                fh.truncate(len(complete))
        for line in complete.decode().splitlines():
            pair_id, chash, score = line.split("\t")
            self._index[(pair_id, chash)] = float(score)

    def __len__(self):
        return len(self._index)

    def get(self, pair_id: str, chash: str) -> Optional[float]:
        return self._index.get((pair_id, chash))

    def put(self, pair_id: str, chash: str, score: float) -> None:
        if (pair_id, chash) in self._index:
            return
        with open(self.journal, "a") as fh:
            fh.write(f"{pair_id}\t{chash}\t{score!r}\n")
            fh.flush()
            os.fsync(fh.fileno())
        with open(self.sidecar, "a") as fh:
            fh.write(f"{pair_id}\t{chash}\t{datetime.now(timezone.utc).isoformat()}\n")
        self._index[(pair_id, chash)] = score


# -- batch scoring ---------------------------------------------------------


@dataclass
class BatchResult:
    pair_id: str
    score: Optional[float]
    status: str  # "ok", "cached" or "failed"
    reason: str = ""


def score_pair(ref_path, dist_path, cfg: CsvConfig) -> float:
    return compute_csv(load_rgb(ref_path), load_rgb(dist_path), cfg).value


def _score_job(args):
    pair_id, ref, dist, cfg = args
    try:
        return pair_id, score_pair(ref, dist, cfg), ""
    except (OSError, ValueError) as exc:
        return pair_id, None, f"{type(exc).__name__}: {exc}"


def run_batch(manifest: Manifest, cfg: CsvConfig, store: Optional[ResultStore] = None,
              jobs: Optional[int] = None) -> list:
    """Score every manifest entry, reusing cached scores for the same config.

    Results come back in manifest order whatever the completion order.
    """
    resources(cfg)  # fail fast on a bad table before spawning workers
    chash = cfg.config_hash()
    results: dict[str, BatchResult] = {}
    todo = []
    for e in manifest:
        cached = store.get(e.pair_id, chash) if store is not None else None
        if cached is not None:
            results[e.pair_id] = BatchResult(e.pair_id, cached, "cached")
        else:
            todo.append((e.pair_id, e.reference, e.distorted, cfg))

    jobs = jobs or os.cpu_count() or 1
    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(todo))) as pool:
            outcomes = pool.map(_score_job, todo)
            _collect(outcomes, results, store, chash)
    else:
        _collect(map(_score_job, todo), results, store, chash)
    return [results[e.pair_id] for e in manifest]


def _collect(outcomes, results, store, chash):
    for pair_id, score, reason in outcomes:
        if score is None:
            log.warning("failed to score %s: %s", pair_id, reason)
            results[pair_id] = BatchResult(pair_id, None, "failed", reason)
            continue
        if store is not None:
            store.put(pair_id, chash, score)
        results[pair_id] = BatchResult(pair_id, score, "ok")


# -- score files -----------------------------------------------------------


def write_results(results, path) -> None:
    """Write ``id<TAB>objective_score`` for scored entries; failures go to a sibling file."""
    path = Path(path)
    failed = [r for r in results if r.score is None]
    with open(path, "w") as fh:
        fh.write("id\tobjective_score\n")
        for r in results:
            if r.score is not None:
                fh.write(f"{r.pair_id}\t{r.score!r}\n")
    fail_path = path.with_name(path.stem + ".failures.tsv")
    if failed:
        with open(fail_path, "w") as fh:
            fh.write("id\treason\n")
            for r in failed:
                fh.write(f"{r.pair_id}\t{r.reason}\n")
    elif fail_path.exists():
        fail_path.unlink()


def _read_tsv(path, min_cols: int):
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t"), start=1):
            if not row or not row[0].strip():
                continue
            if len(row) < min_cols:
                raise ValueError(f"{path}:{lineno}: expected at least {min_cols} columns")
            rows.append((lineno, [c.strip() for c in row]))
    # optional header: first row whose second column is not numeric
    if rows:
        try:
            float(rows[0][1][1])
        except ValueError:
            rows = rows[1:]
    return rows


def read_scores(path) -> dict:
    """Objective score file: ``id<TAB>score`` with an optional header."""
    out = {}
    for lineno, (pair_id, score, *_) in _read_tsv(path, 2):
        try:
            out[pair_id] = float(score)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: bad score {score!r}") from None
    return out


def read_subjective(path) -> dict:
    """Subjective file: ``id<TAB>mos[<TAB>mos_std]``; returns id -> (mos, std or None)."""
    out = {}
    for lineno, row in _read_tsv(path, 2):
        try:
            std = float(row[2]) if len(row) > 2 and row[2] else None
            out[row[0]] = (float(row[1]), std)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: bad subjective row") from None
    return out


def join_scores(objective: dict, subjective: dict):
    """Inner join on id. Returns ``(ids, objective, subjective, unmatched_ids)``."""
    ids = [k for k in objective if k in subjective]
    unmatched = sorted(set(objective) ^ set(subjective))
    subj = [subjective[k][0] if isinstance(subjective[k], tuple) else subjective[k] for k in ids]
    return ids, [objective[k] for k in ids], subj, unmatched
