"""Line-delimited JSON corpora of ``{input_id, text}`` records."""

import json
import logging
from collections import defaultdict
from importlib import resources
from pathlib import Path

from pydantic import BaseModel, ConfigDict, ValidationError

from .errors import CorpusError

log = logging.getLogger(__name__)

BUILTIN_PREFIX = "builtin:"


class CorpusRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    input_id: str
    text: str

    @property
    def pair(self) -> tuple[str, str]:
        return (self.input_id, self.text)


class CorpusSummary(BaseModel):
    path: str
    records: int = 0
    valid: int = 0
    invalid_lines: list[int] = []
    empty_text_lines: list[int] = []
    # input_id -> line numbers
    duplicates: dict[str, list[int]] = {}

    @property
    def violations(self) -> int:
        return (
            len(self.invalid_lines)
            + len(self.empty_text_lines)
            + sum(len(lines) - 1 for lines in self.duplicates.values())
        )

    @property
    def violation_lines(self) -> list[int]:
        lines = self.invalid_lines + self.empty_text_lines
        for dup in self.duplicates.values():
            lines += dup[1:]
        return sorted(lines)


def resolve_corpus(location: str | Path):
    """Path of a corpus file; ``builtin:<name>`` names a bundled corpus."""
    location = str(location)
    if location.startswith(BUILTIN_PREFIX):
        name = location.removeprefix(BUILTIN_PREFIX)
        resource = resources.files("mrforge") / "data" / f"{name}.jsonl"
        if not resource.is_file():
            raise CorpusError(f"no bundled corpus named '{name}'")
        return resource
    return Path(location)


def scan_corpus(
    location: str | Path,
) -> tuple[list[CorpusRecord], CorpusSummary]:
    source = resolve_corpus(location)
    try:
        content = source.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise CorpusError(f"cannot read corpus '{location}': {e}")
    if not content.strip():
        raise CorpusError(f"corpus '{location}' is empty")

    summary = CorpusSummary(path=str(location))
    records = []
    seen = defaultdict(list)
    for lineno, line in enumerate(content.splitlines(), start=1):
        if not line.strip():
            continue
        summary.records += 1
        try:
            record = CorpusRecord.model_validate(json.loads(line))
        except (ValueError, ValidationError):
            summary.invalid_lines.append(lineno)
            continue
        if not record.text.strip():
            summary.empty_text_lines.append(lineno)
            continue
        seen[record.input_id].append(lineno)
        if len(seen[record.input_id]) > 1:
            continue
        records.append(record)
    summary.duplicates = {k: v for k, v in seen.items() if len(v) > 1}
    summary.valid = len(records)
    return records, summary


def validate_corpus(location: str | Path) -> CorpusSummary:
    _, summary = scan_corpus(location)
    return summary


def load_corpus(location: str | Path) -> list[CorpusRecord]:
    records, summary = scan_corpus(location)
    if summary.violations:
        details = []
        if summary.invalid_lines:
            details.append(f"invalid records: {summary.invalid_lines}")
        if summary.empty_text_lines:
            details.append(f"empty texts: {summary.empty_text_lines}")
        for input_id, lines in summary.duplicates.items():
            details.append(f"duplicate id '{input_id}' on lines {lines}")
        raise CorpusError(
            f"corpus '{location}' has {summary.violations} violations; "
            + "; ".join(details),
            lines=summary.violation_lines,
        )
    log.debug(f"Loaded {len(records)} records from {location}.")
    return records
