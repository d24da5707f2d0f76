"""Content-addressed cache for expensive backend calls.

Entries are keyed by the backend identity, the operation name, the ordered
input content hashes, and the prompt hash when one applies; the payload is
opaque bytes. A checksum header detects corruption, which is repaired by
recomputing, never surfaced to callers.
"""

from __future__ import annotations

import hashlib
import os
import threading
from pathlib import Path
from typing import Callable, Sequence

from .base import BackendId

_MAGIC = b"fedcache1"


def cache_key(
    backend: BackendId,
    op_name: str,
    input_hashes: Sequence[str],
    prompt_hash: str | None = None,
) -> str:
    parts = [backend.kind, backend.name, backend.version, op_name, *input_hashes]
    if prompt_hash is not None:
        parts.append(prompt_hash)
    digest = hashlib.sha256()
    for part in parts:
        digest.update(part.encode("utf-8"))
        digest.update(b"\x00")
    return digest.hexdigest()


class CallCache:
    """Disk cache under ``root/<backend-kind>/<key-prefix>/<key>``.

    Per-key locks make concurrent identical calls compute at most once in
    this process; writes are atomic (tmp + rename) so readers never see a
    torn entry.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0
        self.corruptions = 0
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _entry_path(self, backend_kind: str, key: str) -> Path:
        return self.root / backend_kind / key[:2] / key

    def _lock_for(self, key: str) -> threading.Lock:
        with self._registry_lock:
            lock = self._locks.get(key)
            if lock is None:
                lock = self._locks[key] = threading.Lock()
            return lock

    def _read(self, path: Path) -> bytes | None:
        try:
            raw = path.read_bytes()
        except FileNotFoundError:
            return None
        header, _, payload = raw.partition(b"\n")
        fields = header.split(b" ")
        if len(fields) != 2 or fields[0] != _MAGIC:
            self.corruptions += 1
            path.unlink(missing_ok=True)
            return None
        if hashlib.sha256(payload).hexdigest().encode("ascii") != fields[1]:
            self.corruptions += 1
            path.unlink(missing_ok=True)
            return None
        return payload

    def _write(self, path: Path, payload: bytes) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        checksum = hashlib.sha256(payload).hexdigest().encode("ascii")
        tmp = path.with_name(path.name + f".tmp{os.getpid()}")
        tmp.write_bytes(_MAGIC + b" " + checksum + b"\n" + payload)
        os.replace(tmp, path)

    def get_or_compute(
        self,
        backend: BackendId,
        op_name: str,
        input_hashes: Sequence[str],
        compute: Callable[[], bytes],
        prompt_hash: str | None = None,
        refresh: bool = False,
    ) -> bytes:
        """Return the cached payload for this call, computing it on miss.

        ``refresh`` skips the read and overwrites the entry; retry loops use
        it so a cached-but-unusable response does not short-circuit them.
        """
        key = cache_key(backend, op_name, input_hashes, prompt_hash)
        path = self._entry_path(backend.kind, key)
        with self._lock_for(key):
            if not refresh:
                cached = self._read(path)
                if cached is not None:
                    self.hits += 1
                    return cached
            self.misses += 1
            payload = compute()
            if not isinstance(payload, bytes):
                raise TypeError("compute() must return bytes")
            self._write(path, payload)
            return payload


class NullCache(CallCache):
    """Cache that never stores anything; every call recomputes."""

    def __init__(self):  # no directory needed
        self.hits = 0
        self.misses = 0
        self.corruptions = 0

    def get_or_compute(self, backend, op_name, input_hashes, compute,
                       prompt_hash=None, refresh=False):
        self.misses += 1
        return compute()
