"""Catalog of text perturbation functions.

Each function is registered with the :func:`perturbation` decorator as a
*unit edit* ``(text, rng) -> text``. :func:`apply` runs the unit edit
``intensity`` times, each time with its own forked generator.

Edits that find no applicable site return the text unchanged. Deletion-style
edits on texts too short to survive the edit raise
:class:`~mrforge.errors.EmptyResultError` instead of producing empty text.

"""

import functools
import json
import re
import string
from dataclasses import dataclass
from ._compat import StrEnum
from importlib import resources
from typing import Callable

from pydantic import BaseModel, ConfigDict

from .errors import (
    EmptyInput,
    EmptyResultError,
    IntensityOutOfRange,
    UnknownPerturbation,
)
from .rng import SeededRng

MAX_INTENSITY = 8

L33T = {"a": "4", "e": "3", "i": "1", "o": "0", "t": "7", "s": "5"}
HOMOGLYPHS = {
    "a": "а",
    "c": "с",
    "e": "е",
    "i": "і",
    "o": "о",
    "p": "р",
    "x": "х",
    "y": "у",
}
FILLER_WORDS = (
    "actually",
    "really",
    "basically",
    "literally",
    "honestly",
    "quite",
    "very",
    "just",
    "simply",
    "totally",
    "maybe",
    "still",
)

_TOKEN_RE = re.compile(r"\S+")
_SENTENCE_RE = re.compile(r"[^\s.!?][^.!?]*(?:[.!?]+|$)")
_AFFIX_RE = re.compile(r"^(\W*)(.*?)(\W*)$", flags=re.DOTALL)


class Level(StrEnum):
    CHARACTER = "character"
    WORD = "word"
    SENTENCE = "sentence"
    GRAPHICAL = "graphical"


class ContextType(StrEnum):
    PRESERVING = "preserving"
    ALTERING = "altering"


class PerturbationDescriptor(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    level: Level
    context_type: ContextType
    display_name: str
    max_intensity: int = MAX_INTENSITY


UnitEdit = Callable[[str, SeededRng], str]

_REGISTRY: dict[str, tuple[PerturbationDescriptor, UnitEdit]] = {}


def perturbation(
    id: str,
    level: Level,
    context_type: ContextType = ContextType.PRESERVING,
    display_name: str = "",
):
    def _register(edit: UnitEdit) -> UnitEdit:
        assert id not in _REGISTRY, f"duplicate perturbation {id}"
        _REGISTRY[id] = (
            PerturbationDescriptor(
                id=id,
                level=level,
                context_type=context_type,
                display_name=display_name or id.replace("_", " ").title(),
            ),
            edit,
        )
        return edit

    return _register


def catalog() -> list[PerturbationDescriptor]:
    return [d for d, _ in _REGISTRY.values()]


def descriptor(descriptor_id: str) -> PerturbationDescriptor:
    try:
        return _REGISTRY[descriptor_id][0]
    except KeyError:
        raise UnknownPerturbation(f"unknown perturbation '{descriptor_id}'")


def catalog_json() -> str:
    return json.dumps([d.model_dump(mode="json") for d in catalog()], indent=2)


def apply(
    descriptor_id: str, text: str, intensity: int, rng: SeededRng
) -> str:
    """Apply ``intensity`` independent unit edits of a perturbation."""
    try:
        desc, edit = _REGISTRY[descriptor_id]
    except KeyError:
        raise UnknownPerturbation(f"unknown perturbation '{descriptor_id}'")
    if not text or not text.strip():
        raise EmptyInput(f"{descriptor_id}: input text is empty")
    if not 1 <= intensity <= desc.max_intensity:
        raise IntensityOutOfRange(
            f"{descriptor_id}: intensity {intensity} not in "
            f"[1, {desc.max_intensity}]"
        )
    original = text
    for i in range(intensity):
        text = edit(text, rng.fork(descriptor_id, i))
    if text == original and intensity > 1:
        # repeated edits cancelled each other out
        text = edit(text, rng.fork(descriptor_id, intensity))
    return text


# Lexicon


@dataclass(frozen=True)
class Lexicon:
    synonyms: dict[str, tuple[str, ...]]
    antonyms: dict[str, tuple[str, ...]]


def parse_lexicon(text: str) -> Lexicon:
    synonyms, antonyms = {}, {}
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        word = fields[0].strip().lower()
        syns = _split_words(fields[1] if len(fields) > 1 else "")
        ants = _split_words(fields[2] if len(fields) > 2 else "")
        if syns:
            synonyms[word] = syns
        if ants:
            antonyms[word] = ants
    return Lexicon(synonyms, antonyms)


def _split_words(field: str) -> tuple[str, ...]:
    return tuple(w.strip() for w in field.split(",") if w.strip())


@functools.cache
def load_lexicon() -> Lexicon:
    data = resources.files("mrforge") / "data" / "lexicon.tsv"
    return parse_lexicon(data.read_text(encoding="utf-8"))


# Helpers


def _splice(text: str, start: int, end: int, new: str) -> str:
    return text[:start] + new + text[end:]


def _match_case(template: str, word: str) -> str:
    if template.isupper() and len(template) > 1:
        return word.upper()
    if template[:1].isupper():
        return word[:1].upper() + word[1:]
    return word


def _remove_span(text: str, start: int, end: int) -> str:
    """Remove a span together with the whitespace that separated it."""
    tail = len(text[end:]) - len(text[end:].lstrip())
    if end + tail < len(text):
        return text[:start] + text[end + tail :]
    head = len(text[:start]) - len(text[:start].rstrip())
    return text[: start - head] + text[end:]


def _lexicon_swap(text: str, rng: SeededRng, table: dict) -> str:
    sites = []
    for m in _TOKEN_RE.finditer(text):
        lead, core, trail = _AFFIX_RE.match(m.group()).groups()
        if core.lower() in table:
            sites.append((m, lead, core, trail))
    if not sites:
        return text
    m, lead, core, trail = rng.choice(sites)
    replacement = _match_case(core, rng.choice(table[core.lower()]))
    return _splice(text, m.start(), m.end(), lead + replacement + trail)


def _swap_neighbours(text: str, spans: list[tuple[int, int]], rng) -> str:
    sites = [
        k
        for k in range(len(spans) - 1)
        if text[slice(*spans[k])] != text[slice(*spans[k + 1])]
    ]
    if not sites:
        return text
    k = rng.choice(sites)
    (a0, a1), (b0, b1) = spans[k], spans[k + 1]
    return text[:a0] + text[b0:b1] + text[a1:b0] + text[a0:a1] + text[b1:]


def _sentence_spans(text: str) -> list[tuple[int, int]]:
    spans = []
    for m in _SENTENCE_RE.finditer(text):
        trailing = len(m.group()) - len(m.group().rstrip())
        spans.append((m.start(), m.end() - trailing))
    return spans


def _token_spans(text: str) -> list[tuple[int, int]]:
    return [m.span() for m in _TOKEN_RE.finditer(text)]


# Character level


@perturbation("delete_character", Level.CHARACTER)
def delete_character(text: str, rng: SeededRng) -> str:
    sites = [i for i, c in enumerate(text) if not c.isspace()]
    if len(sites) < 2:
        raise EmptyResultError("delete_character: text too short")
    i = rng.choice(sites)
    return _splice(text, i, i + 1, "")


@perturbation("swap_character", Level.CHARACTER)
def swap_character(text: str, rng: SeededRng) -> str:
    sites = [
        i
        for i in range(len(text) - 1)
        if text[i] != text[i + 1]
        and not text[i].isspace()
        and not text[i + 1].isspace()
    ]
    if not sites:
        return text
    i = rng.choice(sites)
    return _splice(text, i, i + 2, text[i + 1] + text[i])


@perturbation("replace_character", Level.CHARACTER)
def replace_character(text: str, rng: SeededRng) -> str:
    sites = [i for i, c in enumerate(text) if c.isalpha()]
    if not sites:
        return text
    i = rng.choice(sites)
    letters = [c for c in string.ascii_lowercase if c != text[i].lower()]
    return _splice(text, i, i + 1, _match_case(text[i], rng.choice(letters)))


@perturbation("insert_character", Level.CHARACTER)
def insert_character(text: str, rng: SeededRng) -> str:
    sites = [i for i in range(1, len(text) + 1) if text[i - 1].isalnum()]
    if not sites:
        return text
    i = rng.choice(sites)
    return _splice(text, i, i, rng.choice(string.ascii_lowercase))


@perturbation("add_whitespace", Level.CHARACTER)
def add_whitespace(text: str, rng: SeededRng) -> str:
    sites = [
        i
        for i in range(1, len(text))
        if not text[i - 1].isspace() and not text[i].isspace()
    ]
    if not sites:
        return text
    i = rng.choice(sites)
    return _splice(text, i, i, " ")


# Graphical


@perturbation("l33t_transform", Level.GRAPHICAL, display_name="L33T Changing")
def l33t_transform(text: str, rng: SeededRng) -> str:
    """Replace one l33t-able letter throughout one word (meet -> m33t)."""
    sites = [
        m
        for m in _TOKEN_RE.finditer(text)
        if any(c.lower() in L33T for c in m.group())
    ]
    if not sites:
        return text
    m = rng.choice(sites)
    word = m.group()
    letters = list(dict.fromkeys(c.lower() for c in word if c.lower() in L33T))
    letter = rng.choice(letters)
    new = "".join(L33T[letter] if c.lower() == letter else c for c in word)
    return _splice(text, m.start(), m.end(), new)


@perturbation("homoglyph_replace", Level.GRAPHICAL)
def homoglyph_replace(text: str, rng: SeededRng) -> str:
    sites = [i for i, c in enumerate(text) if c in HOMOGLYPHS]
    if not sites:
        return text
    i = rng.choice(sites)
    return _splice(text, i, i + 1, HOMOGLYPHS[text[i]])


# Word level


@perturbation("add_random_word", Level.WORD)
def add_random_word(text: str, rng: SeededRng) -> str:
    spans = _token_spans(text)
    k = rng.integers(0, len(spans) + 1)
    word = rng.choice(FILLER_WORDS)
    if k < len(spans):
        return _splice(text, spans[k][0], spans[k][0], word + " ")
    return text + " " + word


@perturbation("delete_word", Level.WORD)
def delete_word(text: str, rng: SeededRng) -> str:
    spans = _token_spans(text)
    if len(spans) < 2:
        raise EmptyResultError("delete_word: text too short")
    return _remove_span(text, *rng.choice(spans))


@perturbation("synonym_replace", Level.WORD, display_name="Synonym Replacement")
def synonym_replace(text: str, rng: SeededRng) -> str:
    return _lexicon_swap(text, rng, load_lexicon().synonyms)


@perturbation("shuffle_word", Level.WORD)
def shuffle_word(text: str, rng: SeededRng) -> str:
    return _swap_neighbours(text, _token_spans(text), rng)


@perturbation(
    "antonym_replace",
    Level.WORD,
    ContextType.ALTERING,
    display_name="Replacing Antonym",
)
def antonym_replace(text: str, rng: SeededRng) -> str:
    return _lexicon_swap(text, rng, load_lexicon().antonyms)


# Sentence level


@perturbation("remove_sentence", Level.SENTENCE, ContextType.ALTERING)
def remove_sentence(text: str, rng: SeededRng) -> str:
    spans = _sentence_spans(text)
    if len(spans) < 2:
        raise EmptyResultError("remove_sentence: needs two sentences")
    return _remove_span(text, *rng.choice(spans))


@perturbation("duplicate_sentence", Level.SENTENCE)
def duplicate_sentence(text: str, rng: SeededRng) -> str:
    spans = _sentence_spans(text)
    if not spans:
        return text
    start, end = rng.choice(spans)
    return _splice(text, end, end, " " + text[start:end])


@perturbation("shuffle_sentence", Level.SENTENCE)
def shuffle_sentence(text: str, rng: SeededRng) -> str:
    return _swap_neighbours(text, _sentence_spans(text), rng)
