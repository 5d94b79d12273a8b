from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from corpus_forge.records import Document

# The lazy Unicode class table makes first calls slow; wall-time deadlines
# would flag that one-off cost as a flaky failure.
settings.register_profile(
    "corpus_forge",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("corpus_forge")

# One status line per acceptance criterion, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

DATA_DIR = Path(__file__).parent / "data"
FIXTURE_LANGUAGES = ("de", "el", "en", "fi", "ru")


def load_language_text(lang: str) -> str:
    return (DATA_DIR / f"{lang}.txt").read_text(encoding="utf-8")


def split_train_heldout(text: str, train_frac: float = 0.7) -> tuple[str, str]:
    """Split on a line boundary so sentences stay intact."""
    lines = text.splitlines()
    cut = max(1, int(len(lines) * train_frac))
    return "\n".join(lines[:cut]), "\n".join(lines[cut:])


@pytest.fixture(scope="session")
def language_texts() -> dict[str, str]:
    return {lang: load_language_text(lang) for lang in FIXTURE_LANGUAGES}


@pytest.fixture(scope="session")
def language_splits(language_texts) -> dict[str, tuple[str, str]]:
    return {lang: split_train_heldout(text) for lang, text in language_texts.items()}


@pytest.fixture(scope="session")
def language_corpora(language_texts) -> dict[str, list[Document]]:
    """One document per fixture paragraph, per language."""
    corpora: dict[str, list[Document]] = {}
    for lang, text in language_texts.items():
        corpora[lang] = [
            Document(id=f"{lang}-{i}", text=par, language=lang, source="fixture")
            for i, par in enumerate(text.split("\n"))
            if par.strip()
        ]
    return corpora


# ---------------------------------------------------------------------------
# Filter-pipeline fixture: trained assets plus a hand-labeled corpus, shared
# by the pipeline tests and the acceptance suite.

PPL_CUTOFF = 50.0  # in-domain fixture docs score ~1-3; shuffled text ~900


def paragraph_docs(text: str, lang: str) -> list[Document]:
    return [Document(id=f"{lang}-{i}", text=p, language=lang)
            for i, p in enumerate(text.split("\n")) if p.strip()]


@pytest.fixture(scope="session")
def pipeline_assets(tmp_path_factory, language_splits):
    """Trained langid profiles + per-language LMs saved to disk."""
    from corpus_forge.ngram import save_profiles, train_langid, train_lm

    root = tmp_path_factory.mktemp("assets")
    profiles = train_langid({lang: language_splits[lang][0] for lang in FIXTURE_LANGUAGES})
    profiles_path = root / "profiles.json"
    save_profiles(profiles, profiles_path)
    model_paths = {}
    for lang in ("de", "el", "en"):
        model = train_lm(paragraph_docs(language_splits[lang][0], lang), order=3)
        path = root / f"lm_{lang}.json"
        model.save(path)
        model_paths[lang] = str(path)
    return {"profiles": str(profiles_path), "models": model_paths}


def labeled_pipeline_fixture(language_splits) -> list[tuple[Document, str]]:
    """(document, expected outcome) pairs for the default stack
    dedup -> langid -> perplexity -> heuristics.

    Outcomes name the rejecting rule, or "pass"/"pass_cleaned".
    """
    import random

    de_paras = [p for p in language_splits["de"][0].split("\n") if p.strip()]
    el_paras = [p for p in language_splits["el"][0].split("\n") if p.strip()]
    en_paras = [p for p in language_splits["en"][0].split("\n") if p.strip()]

    rng = random.Random(1234)
    de_words = language_splits["de"][0].split()
    rng.shuffle(de_words)
    gibberish_de = " ".join(de_words[:80])

    caps_paragraph = "ACHTUNG BITTE SOFORT LESEN"

    def d(doc_id, text, lang):
        return Document(id=doc_id, text=text, language=lang, source="fixture")

    return [
        (d("p01_pass_de", de_paras[0], "de"), "pass"),
        (d("p02_dup_de", "  " + de_paras[0].replace(" ", "  ") + " 2024", "de"), "DUPLICATE"),
        (d("p03_pass_el", el_paras[0], "el"), "pass"),
        (d("p04_mislabeled", de_paras[1], "el"), "LANG_MISMATCH"),
        (d("p05_gibberish_de", gibberish_de, "de"), "PERPLEXITY"),
        (d("p06_dup_el", el_paras[0].upper() + " 99", "el"), "DUPLICATE"),
        (d("p07_pass_en", en_paras[0], "en"), "pass"),
        (d("p08_banned_de", de_paras[2] + " {code}", "de"), "BANNED_PHRASE"),
        (d("p09_short_de", de_paras[3][:150], "de"), "TOO_SHORT"),
        (d("p10_symbols_de", de_paras[4] + " " + "# " * 12, "de"), "SYMBOL_RATIO"),
        (d("p11_cleanable_de", de_paras[1] + "\n\n" + caps_paragraph, "de"), "pass_cleaned"),
        (d("p12_short_el", el_paras[1][:120], "el"), "TOO_SHORT"),
    ]


def write_pipeline_config(path: Path, input_path: Path, output_path: Path, assets,
                          workers: int = 1, stages=None) -> Path:
    import json

    config = {
        "input": str(input_path),
        "output": str(output_path),
        "workers": workers,
        "seed": 0,
        "phase": "P1",
        "stages": stages if stages is not None else [
            {"name": "dedup"},
            {"name": "langid", "profiles": assets["profiles"]},
            {"name": "perplexity",
             "models": assets["models"],
             "bands": {lang: PPL_CUTOFF for lang in assets["models"]}},
            {"name": "heuristics"},
        ],
    }
    path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    return path
