"""Command-line entry point.

Subcommands: filter, bitext, fertility, plan, schedule, sft render|parse,
stats. Exit codes: 0 success, 2 config error, 3 I/O or data error. The
CORPUS_FORGE_LOG environment variable sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .bpe import BpeVocab, fertility_report
from .dedup import exact_dedup
from .errors import ConfigError, CorpusForgeError, DataError
from .mixture import MixtureSpec, phase_presets, plan_phase
from .pipeline import PipelineConfig, run_pipeline, stats_report, stats_tsv
from .quality import QualityThresholds, bitext_gate, pair_dedup_key
from .records import (
    Document,
    read_documents,
    read_sentence_pairs,
    write_sentence_pairs,
)
from .schedule import ScheduleConfig, emit_schedule, schedule_tsv
from .sft import (
    InstructionPromptInput,
    parse_instruction_response,
    render_answer_prompt,
    render_instruction_prompt,
)

log = logging.getLogger("corpus_forge.cli")


def _open_in(path: str):
    return sys.stdin if path == "-" else open(path, encoding="utf-8")


def _open_out(path: str):
    return sys.stdout if path == "-" else open(path, "w", encoding="utf-8", newline="\n")


def _cmd_filter(args: argparse.Namespace) -> int:
    config = PipelineConfig.from_file(
        args.config,
        workers=args.workers,
        seed=args.seed,
        phase=args.phase,
        stable_order=True if args.stable_order else None,
        resume=True if args.resume else None,
    )
    report = run_pipeline(config)
    print(report.to_json())
    if not report.accounting_ok():
        log.error("stage accounting identity violated")
        return 1
    return 0


def _cmd_bitext(args: argparse.Namespace) -> int:
    obj = json.loads(Path(args.config).read_text(encoding="utf-8"))
    thresholds = QualityThresholds(
        bicleaner_default=float(obj.get("bicleaner_default", 0.5)),
        bicleaner_overrides={k: float(v) for k, v in
                             obj.get("bicleaner_overrides", {"pt": 0.6}).items()},
        cometkiwi_min=float(obj.get("cometkiwi_min", 0.7)),
    )
    strict = bool(obj.get("strict", False)) or args.strict
    run_dedup = bool(obj.get("dedup", True))
    counts = {"in": 0, "duplicates": 0, "rejected": {}, "passed": 0}

    with _open_in(obj["input"]) as fin:
        pairs = list(read_sentence_pairs(fin))
    counts["in"] = len(pairs)
    if run_dedup:
        survivors = list(exact_dedup(pairs, key_fn=pair_dedup_key))
        counts["duplicates"] = len(pairs) - len(survivors)
        pairs = survivors
    kept = []
    for pair in pairs:
        verdict = bitext_gate(pair, thresholds, strict=strict)
        if verdict.passed:
            kept.append(pair)
        else:
            per_lang = counts["rejected"].setdefault(verdict.reason.value, {})
            lang = pair.non_english_lang
            per_lang[lang] = per_lang.get(lang, 0) + 1
    counts["passed"] = len(kept)
    with _open_out(obj["output"]) as fout:
        write_sentence_pairs(fout, kept)
    print(json.dumps(counts, indent=2))
    return 0


def _parse_kv(pairs: list[str], what: str) -> dict[str, str]:
    out = {}
    for item in pairs:
        if "=" not in item:
            raise ConfigError(f"{what} must look like NAME=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        out[key] = value
    return out


def _cmd_fertility(args: argparse.Namespace) -> int:
    vocabs = {}
    for name, spec in _parse_kv(args.vocab, "--vocab").items():
        if ":" not in spec:
            raise ConfigError(f"--vocab value must be PIECES_FILE:MERGES_FILE, got {spec!r}")
        pieces_path, merges_path = spec.split(":", 1)
        vocabs[name] = BpeVocab.load(pieces_path, merges_path)
    corpora = {}
    for lang, path in _parse_kv(args.corpus, "--corpus").items():
        with open(path, encoding="utf-8") as fp:
            if path.endswith(".jsonl"):
                corpora[lang] = list(read_documents(fp))
            else:
                corpora[lang] = [Document(id=f"{lang}-0", text=fp.read(), language=lang)]
    report = fertility_report(vocabs, corpora)
    if args.tsv:
        Path(args.tsv).write_text(report.to_tsv(), encoding="utf-8")
    print(report.to_table(), end="")
    for lang in sorted(corpora):
        print(f"ranking[{lang}]: {' < '.join(report.ranking(lang))}")
    return 0


def _cmd_plan(args: argparse.Namespace) -> int:
    presets = phase_presets()
    if args.preset:
        if args.preset not in presets:
            raise ConfigError(f"unknown preset {args.preset!r}; known: {sorted(presets)}")
        base = presets[args.preset]
    else:
        base = presets[f"P{args.phase}"]
    availability = {}
    if args.availability:
        availability = {k: float(v) for k, v in
                        json.loads(Path(args.availability).read_text(encoding="utf-8")).items()}
    spec = MixtureSpec(
        phase=base.phase,
        english_share=args.english if args.english is not None else base.english_share,
        codemath_share=args.codemath if args.codemath is not None else base.codemath_share,
        parallel_share=args.parallel if args.parallel is not None else base.parallel_share,
        language_availability=availability,
        max_repetition=args.max_repetition,
    )
    plan = plan_phase(spec, args.total_tokens)
    if args.tsv:
        Path(args.tsv).write_text(plan.to_tsv(), encoding="utf-8")
    if args.json:
        Path(args.json).write_text(plan.to_json() + "\n", encoding="utf-8")
    print(plan.to_tsv(), end="")
    for warning in plan.warnings:
        log.warning("%s", warning)
    return 0


def _cmd_schedule(args: argparse.Namespace) -> int:
    cfg = ScheduleConfig(
        main_steps=args.main_steps,
        peak_lr=args.peak_lr,
        warmup_frac=args.warmup_frac,
        decay_frac=args.decay_frac,
        decay_floor_ratio=args.decay_floor_ratio,
        final_anneal_steps=args.final_anneal_steps,
        tokens_per_step=args.tokens_per_step,
    )
    points = emit_schedule(cfg, args.sample_every)
    with _open_out(args.out) as fp:
        fp.writelines(schedule_tsv(points))
    return 0


def _cmd_sft_render(args: argparse.Namespace) -> int:
    with _open_in(args.infile) as fin, _open_out(args.out) as fout:
        for line in fin:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if args.kind == "instruction":
                prompt = render_instruction_prompt(InstructionPromptInput(
                    language=obj["language"], text=obj["text"], category=obj["category"]))
            else:
                prompt = render_answer_prompt(
                    obj["language"], obj["document"], obj["instruction"])
            fout.write(json.dumps(
                {"document_id": obj.get("document_id", obj.get("id", "")),
                 "language": obj["language"], "prompt": prompt},
                ensure_ascii=False) + "\n")
    return 0


def _cmd_sft_parse(args: argparse.Namespace) -> int:
    n_bad = 0
    with _open_in(args.infile) as fin, _open_out(args.out) as fout:
        for line in fin:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            try:
                parsed = parse_instruction_response(obj["response"])
            except CorpusForgeError as exc:
                n_bad += 1
                log.warning("document %s: %s", obj.get("document_id", "?"), exc)
                continue
            record = {
                "language": obj.get("language", ""),
                "document_id": obj.get("document_id", ""),
                "summary": parsed.summary,
                "instruction": parsed.instruction,
                "category": parsed.category,
            }
            if "answer" in obj:
                record["answer"] = obj["answer"]
            fout.write(json.dumps(record, ensure_ascii=False) + "\n")
    if n_bad:
        log.warning("%d responses failed to parse", n_bad)
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    with _open_in(args.input) as fp:
        report = stats_report(read_documents(fp))
    text = stats_tsv(report)
    if args.tsv:
        Path(args.tsv).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corpus-forge",
        description="Corpus curation and training-schedule toolkit.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="run the web-document filter pipeline")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--phase", choices=["1", "2", "3"], default=None)
    p.add_argument("--stable-order", action="store_true",
                   help="keep input order in the output (always on; accepted for compatibility)")
    p.add_argument("--resume", action="store_true", help="skip shards with a .done marker")
    p.set_defaults(fn=_cmd_filter)

    p = sub.add_parser("bitext", help="dedup and gate sentence pairs")
    p.add_argument("--config", required=True)
    p.add_argument("--strict", action="store_true",
                   help="treat missing quality scores as errors")
    p.set_defaults(fn=_cmd_bitext)

    p = sub.add_parser("fertility", help="tokens-per-word comparison report")
    p.add_argument("--vocab", action="append", required=True,
                   metavar="NAME=PIECES:MERGES")
    p.add_argument("--corpus", action="append", required=True, metavar="LANG=PATH")
    p.add_argument("--tsv", default=None, help="also write the report as TSV")
    p.set_defaults(fn=_cmd_fertility)

    p = sub.add_parser("plan", help="phase data-mixture plan")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--preset", help="named preset (P1, P2, P3, P2-v1, ...)")
    group.add_argument("--phase", choices=["1", "2", "3"])
    p.add_argument("--availability", help="JSON file: language -> available tokens")
    p.add_argument("--total-tokens", type=int, required=True)
    p.add_argument("--english", type=float, default=None)
    p.add_argument("--codemath", type=float, default=None)
    p.add_argument("--parallel", type=float, default=None)
    p.add_argument("--max-repetition", type=float, default=4.0)
    p.add_argument("--tsv", default=None)
    p.add_argument("--json", default=None)
    p.set_defaults(fn=_cmd_plan)

    p = sub.add_parser("schedule", help="emit the learning-rate schedule as TSV")
    p.add_argument("--main-steps", type=int, required=True)
    p.add_argument("--peak-lr", type=float, default=3e-4)
    p.add_argument("--warmup-frac", type=float, default=0.10)
    p.add_argument("--decay-frac", type=float, default=0.10)
    p.add_argument("--decay-floor-ratio", type=float, default=0.10)
    p.add_argument("--final-anneal-steps", type=int, default=None)
    p.add_argument("--tokens-per-step", type=int, default=12_000_000)
    p.add_argument("--sample-every", type=int, default=1)
    p.add_argument("--out", default="-")
    p.set_defaults(fn=_cmd_schedule)

    p = sub.add_parser("sft", help="render prompts / parse responses")
    sft_sub = p.add_subparsers(dest="sft_command", required=True)
    pr = sft_sub.add_parser("render")
    pr.add_argument("--kind", choices=["instruction", "answer"], required=True)
    pr.add_argument("--in", dest="infile", default="-")
    pr.add_argument("--out", default="-")
    pr.set_defaults(fn=_cmd_sft_render)
    pp = sft_sub.add_parser("parse")
    pp.add_argument("--in", dest="infile", default="-")
    pp.add_argument("--out", default="-")
    pp.set_defaults(fn=_cmd_sft_parse)

    p = sub.add_parser("stats", help="per-language corpus statistics")
    p.add_argument("--input", required=True)
    p.add_argument("--tsv", default=None)
    p.set_defaults(fn=_cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("CORPUS_FORGE_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    except (DataError, OSError, json.JSONDecodeError) as exc:
        log.error("I/O error: %s", exc)
        return 3
    except CorpusForgeError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
