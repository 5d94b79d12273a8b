"""Streaming document pipeline: config, stage assembly, execution, reporting.

A run streams JSONL shards through a configured stage list and writes the
survivors. Stateful stages (the dedup pair) always run in stream order so
first-occurrence-wins semantics hold; per-record stages run through an
ordered worker map, which makes the survivor set independent of the worker
count by construction.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from . import dedup as dedup_mod
from . import heuristics as heur_mod
from . import ngram as ngram_mod
from . import quality as quality_mod
from .errors import ConfigError, DataError
from .records import (
    DEFAULT_LANGUAGES,
    Document,
    FilterVerdict,
    Phase,
    Reason,
    UND,
    read_documents,
    word_segment,
    write_documents,
)

log = logging.getLogger("corpus_forge.pipeline")

#: Reading/validation is reported as its own stage; duplicate ids are
#: rejected here so the id-uniqueness invariant holds downstream.
INTAKE_STAGE = "intake"


@dataclass
class StageCount:
    name: str
    n_in: int = 0
    passed: int = 0
    rejected: dict[str, int] = field(default_factory=dict)

    def record(self, verdict: FilterVerdict) -> None:
        self.n_in += 1
        if verdict.passed:
            self.passed += 1
        else:
            reason = verdict.reason.value
            self.rejected[reason] = self.rejected.get(reason, 0) + 1

    def total_rejected(self) -> int:
        return sum(self.rejected.values())


@dataclass
class RunReport:
    stages: list[StageCount]
    language_tallies: dict[str, dict[str, int]]
    survivors: int
    wall_time_s: float
    docs_per_s: float
    bytes_per_s: float
    config_digest: str

    def to_json(self) -> str:
        return json.dumps({
            "stages": [
                {"name": s.name, "in": s.n_in, "passed": s.passed, "rejected": s.rejected}
                for s in self.stages
            ],
            "language_tallies": self.language_tallies,
            "survivors": self.survivors,
            "wall_time_s": round(self.wall_time_s, 3),
            "docs_per_s": round(self.docs_per_s, 1),
            "bytes_per_s": round(self.bytes_per_s, 1),
            "config_digest": self.config_digest,
        }, indent=2)

    def accounting_ok(self) -> bool:
        return all(s.n_in == s.passed + s.total_rejected() for s in self.stages)


class Stage:
    """One pipeline stage: a verdict function plus bookkeeping.

    Stateful stages must see the stream in order; pure ones may be mapped
    across workers. A stage may supply batch_fn, a chunk-at-a-time variant
    with identical semantics, used to amortize per-record overhead.
    """

    def __init__(self, name: str, fn: Callable[[Document], tuple[FilterVerdict, Document]],
                 stateful: bool = False,
                 batch_fn: Callable[[list[Document]], list[tuple[FilterVerdict, Document]]] | None = None,
                 ) -> None:
        self.name = name
        self.fn = fn
        self.stateful = stateful
        self.batch_fn = batch_fn


@dataclass
class PipelineConfig:
    input: str
    output: str
    stages: list[dict]
    workers: int = 1
    seed: int = 0
    phase: Phase = Phase.P1
    languages: frozenset[str] = DEFAULT_LANGUAGES
    stable_order: bool = True
    resume: bool = False

    def __post_init__(self) -> None:
        if not self.input or not self.output:
            raise ConfigError("input and output paths must be nonempty")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        self.phase = Phase(self.phase)
        self.languages = frozenset(self.languages)
        known = set(_STAGE_BUILDERS)
        for stage in self.stages:
            if "name" not in stage:
                raise ConfigError("every stage needs a 'name'")
            if stage["name"] not in known:
                raise ConfigError(
                    f"unknown stage {stage['name']!r}; known: {sorted(known)}")

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "PipelineConfig":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        obj.update({k: v for k, v in overrides.items() if v is not None})
        phase = obj.get("phase", "P1")
        if isinstance(phase, int) or phase in ("1", "2", "3"):
            phase = f"P{phase}"
        return cls(
            input=obj.get("input", ""),
            output=obj.get("output", ""),
            stages=obj.get("stages", []),
            workers=int(obj.get("workers", 1)),
            seed=int(obj.get("seed", 0)),
            phase=Phase(phase),
            languages=frozenset(obj.get("languages", DEFAULT_LANGUAGES)),
            stable_order=bool(obj.get("stable_order", True)),
            resume=bool(obj.get("resume", False)),
        )

    def digest(self) -> str:
        payload = json.dumps({
            "input": self.input, "output": self.output, "stages": self.stages,
            "seed": self.seed, "phase": self.phase.value,
            "languages": sorted(self.languages),
        }, sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Stage builders


def _build_dedup(options: dict, config: PipelineConfig) -> Stage:
    store = dedup_mod.DedupKeyStore()
    store_path = options.get("store")
    if store_path and Path(store_path).exists():
        store = dedup_mod.DedupKeyStore.load(store_path)

    def fn(doc: Document) -> tuple[FilterVerdict, Document]:
        key = dedup_mod.document_key(doc)
        if key in store:
            return FilterVerdict.reject(Reason.DUPLICATE), doc
        store.add(key)
        return FilterVerdict.ok(), doc

    stage = Stage("dedup", fn, stateful=True)
    stage.store = store  # type: ignore[attr-defined]
    stage.store_path = store_path  # type: ignore[attr-defined]
    return stage


def _build_near_dup(options: dict, config: PipelineConfig) -> Stage:
    threshold = float(options.get("threshold", 0.8))
    if not 0.0 < threshold <= 1.0:
        raise ConfigError(f"near_dup threshold must be in (0, 1], got {threshold}")
    index = dedup_mod.LshIndex(dedup_mod.LSH_BANDS, dedup_mod.LSH_ROWS)
    survivors: list[dedup_mod.MinHashSignature] = []

    def fn(doc: Document) -> tuple[FilterVerdict, Document]:
        sig = dedup_mod.minhash_signature(doc.text, seed=config.seed)
        for idx in index.candidates(sig):
            est = dedup_mod.estimated_jaccard(sig, survivors[idx])
            if est >= threshold:
                return FilterVerdict.reject(Reason.DUPLICATE, est), doc
        index.insert(sig, len(survivors))
        survivors.append(sig)
        return FilterVerdict.ok(), doc

    return Stage("near_dup", fn, stateful=True)


def _build_langid(options: dict, config: PipelineConfig) -> Stage:
    profiles_path = options.get("profiles")
    if not profiles_path:
        raise ConfigError("langid stage needs a 'profiles' file")
    profiles = ngram_mod.load_profiles(profiles_path)

    def fn(doc: Document) -> tuple[FilterVerdict, Document]:
        identified, margin = ngram_mod.identify_language(profiles, doc.text)
        if identified != UND and identified != doc.language:
            return FilterVerdict.reject(Reason.LANG_MISMATCH, margin), doc
        return FilterVerdict.ok(), doc

    return Stage("langid", fn)


def _build_perplexity(options: dict, config: PipelineConfig) -> Stage:
    model_paths = options.get("models")
    bands_spec = options.get("bands")
    if not model_paths or not bands_spec:
        raise ConfigError("perplexity stage needs 'models' and 'bands' maps")
    models = {lang: ngram_mod.NgramModel.load(path) for lang, path in model_paths.items()}
    bands = ngram_mod.PerplexityBands(keep_below={k: float(v) for k, v in bands_spec.items()})

    def fn(doc: Document) -> tuple[FilterVerdict, Document]:
        if doc.language not in models:
            raise ngram_mod.NoBandsError(
                f"no perplexity model for language {doc.language!r}")
        return ngram_mod.perplexity_gate(doc, models[doc.language], bands), doc

    return Stage("perplexity", fn)


def _build_heuristics(options: dict, config: PipelineConfig) -> Stage:
    known = {f.name for f in heur_mod.HeuristicConfig.__dataclass_fields__.values()}
    unknown = set(options) - known
    if unknown:
        raise ConfigError(f"unknown heuristics options: {sorted(unknown)}")
    cfg = heur_mod.HeuristicConfig(**options)

    def fn(doc: Document) -> tuple[FilterVerdict, Document]:
        return heur_mod.apply_heuristics(doc, cfg)

    def batch_fn(docs: list[Document]) -> list[tuple[FilterVerdict, Document]]:
        return heur_mod.apply_heuristics_batch(docs, cfg)

    return Stage("heuristics", fn, batch_fn=batch_fn)


def _build_edu(options: dict, config: PipelineConfig) -> Stage:
    thresholds = quality_mod.QualityThresholds(
        edu_min_phase1=float(options.get("edu_min_phase1", 2.0)),
        edu_min_phase23=float(options.get("edu_min_phase23", 3.0)),
    )

    def fn(doc: Document) -> tuple[FilterVerdict, Document]:
        return quality_mod.edu_score_gate(doc, thresholds, config.phase), doc

    return Stage("edu", fn)


_STAGE_BUILDERS: dict[str, Callable[[dict, PipelineConfig], Stage]] = {
    "dedup": _build_dedup,
    "near_dup": _build_near_dup,
    "langid": _build_langid,
    "perplexity": _build_perplexity,
    "heuristics": _build_heuristics,
    "edu": _build_edu,
}


def build_stages(config: PipelineConfig) -> list[Stage]:
    stages = []
    for spec in config.stages:
        options = {k: v for k, v in spec.items() if k != "name"}
        stages.append(_STAGE_BUILDERS[spec["name"]](options, config))
    return stages


# ---------------------------------------------------------------------------
# Execution


def _input_shards(config: PipelineConfig) -> list[Path]:
    path = Path(config.input)
    if path.is_dir():
        shards = sorted(path.glob("*.jsonl"))
        if not shards:
            raise DataError(f"{path}: no *.jsonl shards found")
        return shards
    if not path.exists():
        raise DataError(f"{path}: input not found")
    return [path]


_BATCH_SIZE = 256


def _run_stage(stage: Stage, docs: list[Document], count: StageCount,
               pool: ThreadPoolExecutor | None) -> list[Document]:
    if stage.stateful:
        results = map(stage.fn, docs)
    elif stage.batch_fn is not None:
        chunks = [docs[i:i + _BATCH_SIZE] for i in range(0, len(docs), _BATCH_SIZE)]
        mapped = pool.map(stage.batch_fn, chunks) if pool else map(stage.batch_fn, chunks)
        results = (item for chunk in mapped for item in chunk)
    elif pool is not None:
        results = pool.map(stage.fn, docs)
    else:
        results = map(stage.fn, docs)
    survivors = []
    for verdict, doc in results:
        count.record(verdict)
        if verdict.passed:
            survivors.append(doc)
    return survivors


def run_pipeline(config: PipelineConfig) -> RunReport:
    """Stream all shards through the stage list; returns the accounting report."""
    started = time.perf_counter()
    stages = build_stages(config)
    counts = [StageCount(INTAKE_STAGE)] + [StageCount(s.name) for s in stages]
    tallies: dict[str, dict[str, int]] = {}
    seen_ids: set[str] = set()
    bytes_read = 0
    survivors_total = 0

    shards = _input_shards(config)
    dir_mode = Path(config.input).is_dir()
    out_root = Path(config.output)
    if dir_mode:
        out_root.mkdir(parents=True, exist_ok=True)
    else:
        out_root.parent.mkdir(parents=True, exist_ok=True)
    marker = (out_root if dir_mode else out_root.parent) / ".corpus_forge_incomplete"
    marker.write_text("run in progress\n")

    dedup_stage = next((s for s in stages if s.name == "dedup"), None)
    pool = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    try:
        for shard in shards:
            out_path = out_root / shard.name if dir_mode else out_root
            done_marker = out_path.with_suffix(out_path.suffix + ".done")
            if config.resume and done_marker.exists():
                log.info("resume: skipping completed shard %s", shard.name)
                continue
            docs = []
            with open(shard, encoding="utf-8") as fp:
                for doc in read_documents(fp, config.languages):
                    bytes_read += len(doc.text.encode("utf-8"))
                    if doc.id in seen_ids:
                        counts[0].record(FilterVerdict.reject(Reason.DUPLICATE))
                        continue
                    seen_ids.add(doc.id)
                    counts[0].record(FilterVerdict.ok())
                    docs.append(doc)
            for stage, count in zip(stages, counts[1:]):
                docs = _run_stage(stage, docs, count, pool)
            tmp_path = out_path.with_suffix(out_path.suffix + ".part")
            with open(tmp_path, "w", encoding="utf-8", newline="\n") as fp:
                write_documents(fp, docs)
            tmp_path.replace(out_path)
            done_marker.write_text("ok\n")
            survivors_total += len(docs)
            for doc in docs:
                tally = tallies.setdefault(doc.language, {"documents": 0, "words": 0, "bytes": 0})
                tally["documents"] += 1
                tally["words"] += len(word_segment(doc.text))
                tally["bytes"] += len(doc.text.encode("utf-8"))
            if dedup_stage is not None and getattr(dedup_stage, "store_path", None):
                dedup_stage.store.save(dedup_stage.store_path)  # type: ignore[attr-defined]
    finally:
        if pool is not None:
            pool.shutdown()
    marker.unlink(missing_ok=True)

    wall = time.perf_counter() - started
    n_docs = counts[0].n_in
    return RunReport(
        stages=counts,
        language_tallies=dict(sorted(tallies.items())),
        survivors=survivors_total,
        wall_time_s=wall,
        docs_per_s=n_docs / wall if wall > 0 else 0.0,
        bytes_per_s=bytes_read / wall if wall > 0 else 0.0,
        config_digest=config.digest(),
    )


# ---------------------------------------------------------------------------
# Corpus statistics


def stats_report(docs: Iterable[Document]) -> dict[str, dict[str, int]]:
    """Per-language document/word/byte tallies plus a totals row."""
    rows: dict[str, dict[str, int]] = {}
    total = {"documents": 0, "words": 0, "bytes": 0}
    for doc in docs:
        row = rows.setdefault(doc.language, {"documents": 0, "words": 0, "bytes": 0})
        n_words = len(word_segment(doc.text))
        n_bytes = len(doc.text.encode("utf-8"))
        row["documents"] += 1
        row["words"] += n_words
        row["bytes"] += n_bytes
        total["documents"] += 1
        total["words"] += n_words
        total["bytes"] += n_bytes
    out = dict(sorted(rows.items()))
    out["TOTAL"] = total
    return out


def stats_tsv(report: dict[str, dict[str, int]]) -> str:
    lines = ["language\tdocuments\twords\tbytes"]
    lines += [
        f"{lang}\t{row['documents']}\t{row['words']}\t{row['bytes']}"
        for lang, row in report.items()
    ]
    return "\n".join(lines) + "\n"
