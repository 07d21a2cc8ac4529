"""
Shared plumbing for the on-disk caches: key hashing, slot probing, metadata
sidecars, quarantine and lookup outcomes.

An entry lives under a slot stem ``<hash>`` (or ``<hash>-1``, ``<hash>-2``...
after a collision). Its ``.meta`` sidecar holds the full key text and is
always written last, so an entry is visible only once it is complete.
"""

import hashlib
import logging
import os
import time
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any
from typing import Iterable
from typing import List
from typing import Optional
from typing import Tuple
from typing import Type
from typing import TypeVar

from pydantic import ValidationError

from factorstore.core.exceptions import CorruptEntry
from factorstore.core.models import CacheEntryMeta
from factorstore.data.series import write_atomic


logger = logging.getLogger(__name__)

EXPR_DIR = "expr"
DATASET_DIR = "dataset"
QUARANTINE_DIR = "quarantine"
META_SUFFIX = ".meta"

MetaT = TypeVar("MetaT", bound=CacheEntryMeta)


@dataclass(frozen=True)
class Hit:
    """The entry covers the requested range."""

    value: Any


@dataclass(frozen=True)
class PartialTail:
    """The entry starts at or before the range but ends at ``covered_hi`` < hi."""

    covered_hi: int


@dataclass(frozen=True)
class Miss:
    """No usable entry."""


def hash_key(text: str) -> str:
    """64-bit stable hash of key text, hex-encoded."""
    return hashlib.blake2b(text.encode("utf-8"), digest_size=8).hexdigest()


def read_meta(path: Path, model: Type[MetaT]) -> MetaT:
    """
    Load a metadata sidecar.

    Raises:
        FileNotFoundError: If the sidecar does not exist
        CorruptEntry: If the sidecar cannot be parsed
    """
    raw = path.read_bytes()
    try:
        return model.model_validate_json(raw)
    except (ValidationError, ValueError) as exc:
        raise CorruptEntry(f"unreadable cache metadata {path.name}: {exc}") from exc


def write_meta(path: Path, meta: CacheEntryMeta) -> None:
    write_atomic(path, meta.model_dump_json().encode("utf-8"))


def quarantine(cache_dir: Path, paths: Iterable[Path], reason: str) -> None:
    """Move an entry's files aside so they are never read again."""
    target = cache_dir / QUARANTINE_DIR
    target.mkdir(parents=True, exist_ok=True)
    stamp = int(time.time() * 1000)
    for path in paths:
        if path.exists():
            os.replace(path, target / f"{path.name}.{stamp}")
    logger.warning(f"Quarantined cache entry: {reason}")


def entry_files(directory: Path, stem: str) -> List[Path]:
    """Every file of the entry at ``stem``, sidecar last."""
    meta_path = directory / f"{stem}{META_SUFFIX}"
    payload = sorted(p for p in directory.glob(f"{stem}.*") if p != meta_path)
    return payload + [meta_path]


def find_slot(
    directory: Path, key: str, model: Type[MetaT], cache_dir: Path
) -> Tuple[str, Optional[MetaT]]:
    """
    Locate the slot holding ``key``.

    Tries ``<hash>``, ``<hash>-1``, ... comparing the full key text stored in
    each sidecar. Slots with unreadable sidecars are quarantined and reused.

    Returns:
        (stem, meta) for an existing entry, or (free stem, None)
    """
    base = hash_key(key)
    attempt = 0
    while True:
        stem = base if attempt == 0 else f"{base}-{attempt}"
        meta_path = directory / f"{stem}{META_SUFFIX}"
        try:
            meta = read_meta(meta_path, model)
        except FileNotFoundError:
            return stem, None
        except CorruptEntry as exc:
            quarantine(cache_dir, entry_files(directory, stem), str(exc))
            return stem, None
        if meta.key == key:
            return stem, meta
        attempt += 1


def refresh_visit(meta_path: Path, meta: CacheEntryMeta, min_interval: float) -> None:
    """Rewrite ``last_visit`` once the stored stamp is ``min_interval`` seconds old."""
    now = datetime.now()
    if (now - meta.last_visit).total_seconds() < min_interval:
        return
    write_meta(meta_path, meta.model_copy(update={"last_visit": now}))
