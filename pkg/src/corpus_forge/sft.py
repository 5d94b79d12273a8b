"""Synthetic-instruction prompt rendering and response parsing.

Prompts are rendered from checked-in template files by plain placeholder
substitution (no model calls happen here); responses come back as plain
strings and are parsed into labeled fields. An external generator can sit
between the two halves via the JSONL record protocol in the CLI.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from importlib import resources

from .errors import EmptyInstructionError, InvalidCategoryError, TemplateParseError

CATEGORIES = (
    "Problem Solving",
    "Creative Tasks",
    "Information Processing",
    "Question Answering",
    "Text Transformation",
    "Roleplay and Simulation",
    "Advisory",
    "Domain-Specific Knowledge",
    "General / Miscellaneous",
)

# Sub-items listed under each category in the template; models frequently
# answer with these instead of the parent name.
_SUBCATEGORY_PARENT = {
    "coding": "Problem Solving",
    "mathematical reasoning": "Problem Solving",
    "knowledge and reasoning": "Problem Solving",
    "creative writing": "Creative Tasks",
    "brainstorming": "Creative Tasks",
    "summarization": "Information Processing",
    "extraction": "Information Processing",
    "classification": "Information Processing",
    "translation": "Information Processing",
    "open-ended": "Question Answering",
    "closed-ended": "Question Answering",
    "multiple choice": "Question Answering",
    "rewriting": "Text Transformation",
    "inhabiting a character/persona": "Roleplay and Simulation",
    "asking for advice": "Advisory",
    "humanity, history, and social studies": "Domain-Specific Knowledge",
    "other": "Domain-Specific Knowledge",
    "general": "General / Miscellaneous",
    "miscellaneous": "General / Miscellaneous",
}

_CANONICAL = {name.casefold(): name for name in CATEGORIES}


def _load_template(name: str) -> str:
    return resources.files("corpus_forge").joinpath("templates", name).read_text(encoding="utf-8")


INSTRUCTION_TEMPLATE = _load_template("instruction_prompt.txt")
ANSWER_TEMPLATE = _load_template("answer_prompt.txt")


def template_digests() -> dict[str, str]:
    """SHA-256 of the template bytes, for drift detection."""
    return {
        "instruction_prompt.txt": hashlib.sha256(INSTRUCTION_TEMPLATE.encode("utf-8")).hexdigest(),
        "answer_prompt.txt": hashlib.sha256(ANSWER_TEMPLATE.encode("utf-8")).hexdigest(),
    }


def normalize_category(raw: str) -> str:
    """Map a category answer (possibly a sub-item, any casing) to its canonical name."""
    cleaned = raw.strip().rstrip(".").strip().casefold()
    if cleaned in _CANONICAL:
        return _CANONICAL[cleaned]
    if cleaned in _SUBCATEGORY_PARENT:
        return _SUBCATEGORY_PARENT[cleaned]
    raise InvalidCategoryError(f"unknown category {raw!r}")


@dataclass(frozen=True)
class InstructionPromptInput:
    language: str
    text: str
    category: str

    def __post_init__(self) -> None:
        if not self.language:
            raise InvalidCategoryError("language display name must be nonempty")
        object.__setattr__(self, "category", normalize_category(self.category))


@dataclass(frozen=True)
class ParsedInstruction:
    summary: str
    instruction: str
    category: str


def render_instruction_prompt(prompt_input: InstructionPromptInput) -> str:
    return (
        INSTRUCTION_TEMPLATE
        .replace("{language}", prompt_input.language)
        .replace("{text}", prompt_input.text)
        .replace("{category}", prompt_input.category)
    )


def render_answer_prompt(language: str, document: str, instruction: str) -> str:
    if not instruction.strip():
        raise EmptyInstructionError("instruction must be nonempty")
    return (
        ANSWER_TEMPLATE
        .replace("{language}", language)
        .replace("{document}", document)
        .replace("{instruction}", instruction)
    )


_LABELS = ("Summary:", "Instruction:", "Category:")
_LABEL_RES = {label: re.compile(rf"^[ \t]*{label}", re.MULTILINE) for label in _LABELS}


def parse_instruction_response(raw: str) -> ParsedInstruction:
    """Extract the Summary / Instruction / Category fields from a response.

    Field bodies may span lines; each runs until the next label or the end of
    the text and is stripped of surrounding whitespace. Labels are the exact
    English keywords the template demands.
    """
    positions: list[tuple[int, int, str]] = []
    for label in _LABELS:
        match = _LABEL_RES[label].search(raw)
        if match is None:
            raise TemplateParseError(f"missing {label!r} label")
        positions.append((match.start(), match.end(), label))
    positions.sort()
    fields: dict[str, str] = {}
    for i, (_, body_start, label) in enumerate(positions):
        body_end = positions[i + 1][0] if i + 1 < len(positions) else len(raw)
        fields[label] = raw[body_start:body_end].strip()
    instruction = fields["Instruction:"]
    if not instruction:
        raise TemplateParseError("empty instruction field")
    return ParsedInstruction(
        summary=fields["Summary:"],
        instruction=instruction,
        category=normalize_category(fields["Category:"]),
    )
