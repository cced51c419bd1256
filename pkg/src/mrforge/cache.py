"""Persistent execution cache.

The cache file is an append-only log of JSON lines, one record per
(model, task, CmbMR, input) key with a checksum over its payload. The
in-memory index is rebuilt when the file is opened; records that fail to
parse or whose checksum does not match are skipped.

"""

import dataclasses
import hashlib
import json
import logging
import threading
from dataclasses import dataclass
from pathlib import Path

from .errors import CacheConflict, CacheCorruption
from .executor import ExecRecord

log = logging.getLogger(__name__)


def cache_key(
    model_id: str, task_id: str, cmb_id: str, input_id: str, namespace=0
) -> str:
    h = hashlib.sha256()
    for part in (model_id, task_id, cmb_id, input_id, str(namespace)):
        h.update(part.encode("utf-8"))
        h.update(b"\x1f")
    return h.hexdigest()


@dataclass(frozen=True)
class CacheEntry:
    key: str
    output_text: str
    eval_result: float
    input_tokens: int
    output_tokens: int
    # None for clean executions
    satisfied: bool | None = None
    pq: float | None = None

    @property
    def exec(self) -> ExecRecord:
        return ExecRecord(
            self.input_tokens, self.output_tokens, self.output_text
        )

    def checksum(self) -> str:
        payload = json.dumps(dataclasses.asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def to_json(self) -> str:
        record = dataclasses.asdict(self)
        record["checksum"] = self.checksum()
        return json.dumps(record, ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "CacheEntry":
        record = json.loads(line)
        checksum = record.pop("checksum")
        entry = cls(**record)
        if entry.checksum() != checksum:
            raise CacheCorruption(f"checksum mismatch for {entry.key}")
        return entry


class ExecutionCache:
    def __init__(self, path: Path | None = None):
        self.path = Path(path) if path else None
        self.hits = 0
        self.misses = 0
        self.corrupt = 0
        self._entries: dict[str, CacheEntry] = {}
        self._lock = threading.Lock()
        self._file = None
        if self.path and self.path.exists():
            self._load()

    def _load(self):
        with self.path.open(encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                if not line.strip():
                    continue
                try:
                    entry = CacheEntry.from_json(line)
                except (ValueError, KeyError, TypeError, CacheCorruption) as e:
                    self.corrupt += 1
                    log.warning(
                        f"Skipping corrupt cache record {self.path}:{lineno}"
                        f" ({e})"
                    )
                    continue
                self._entries.setdefault(entry.key, entry)
        log.debug(
            f"Loaded {len(self._entries)} cache entries from {self.path}."
        )

    def __len__(self):
        return len(self._entries)

    def __contains__(self, key: str):
        return key in self._entries

    def peek(self, key: str) -> CacheEntry | None:
        """Lookup without touching the hit/miss counters."""
        return self._entries.get(key)

    def get(self, key: str) -> CacheEntry | None:
        with self._lock:
            entry = self._entries.get(key)
            if entry is None:
                self.misses += 1
            else:
                self.hits += 1
            return entry

    def put(self, entry: CacheEntry):
        with self._lock:
            existing = self._entries.get(entry.key)
            if existing is not None:
                if existing != entry:
                    raise CacheConflict(
                        f"cache key {entry.key} already holds another payload"
                    )
                return
            self._entries[entry.key] = entry
            if self.path:
                if self._file is None:
                    self.path.parent.mkdir(parents=True, exist_ok=True)
                    self._file = self.path.open("a", encoding="utf-8")
                self._file.write(entry.to_json() + "\n")
                self._file.flush()

    def close(self):
        with self._lock:
            if self._file is not None:
                self._file.close()
                self._file = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def stats(self) -> dict:
        return {
            "path": str(self.path) if self.path else None,
            "entries": len(self._entries),
            "corrupt": self.corrupt,
            "hits": self.hits,
            "misses": self.misses,
        }
