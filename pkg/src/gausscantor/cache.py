"""On-disk cache for reduced Markov matrices and float transfer matrices.

Each entry is an ``.npz`` archive holding the arrays plus a JSON header with a
format version, the input key and a SHA-256 of the array contents.  Entries
whose header or content hash do not match are ignored and rebuilt.
"""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Optional

import numpy as np
from filelock import FileLock

from .subshift import AllowedWords, ReducedMarkov
from .transfer import ReducedBt

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


def content_hash(arrays: dict) -> str:
    h = hashlib.sha256()
    for name in sorted(arrays):
        a = np.ascontiguousarray(arrays[name])
        h.update(f"{name}:{a.dtype.str}:{a.shape};".encode())
        h.update(a.tobytes())
    return h.hexdigest()


class ArtifactCache:
    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.lock = FileLock(str(self.directory / ".lock"))

    def _path(self, kind: str, key: str) -> Path:
        return self.directory / f"{kind}-{key}.npz"

    def store(self, kind: str, key: str, arrays: dict, meta: dict) -> Path:
        header = {"version": FORMAT_VERSION, "kind": kind, "key": key, "hash": content_hash(arrays), "meta": meta}
        path = self._path(kind, key)
        tmp = path.with_suffix(".tmp.npz")
        with self.lock:
            np.savez(tmp, __header__=np.array(json.dumps(header, sort_keys=True)), **arrays)
            tmp.replace(path)
        return path

    def load(self, kind: str, key: str) -> Optional[tuple[dict, dict]]:
        path = self._path(kind, key)
        if not path.exists():
            return None
        with self.lock:
            try:
                with np.load(path, allow_pickle=False) as data:
                    header = json.loads(str(data["__header__"]))
                    arrays = {k: data[k] for k in data.files if k != "__header__"}
            except (OSError, ValueError, KeyError) as exc:
                log.warning("unreadable cache entry %s: %s", path, exc)
                return None
        if header.get("version") != FORMAT_VERSION or header.get("kind") != kind or header.get("key") != key:
            log.warning("stale cache entry %s ignored", path)
            return None
        if header.get("hash") != content_hash(arrays):
            log.warning("cache entry %s fails its content hash; rebuilding", path)
            return None
        return arrays, header["meta"]


_RM_ARRAYS = ("matrix", "row_map", "col_map", "row_representatives", "col_representatives")
_RM_META = ("n", "alphabet_max", "forbidden_digest", "word_count", "prefix_class_count", "suffix_class_count", "n_override", "warnings")


def store_markov(cache: ArtifactCache, rm: ReducedMarkov, A: AllowedWords) -> None:
    arrays = {name: getattr(rm, name) for name in _RM_ARRAYS}
    arrays["codes"] = A.codes
    meta = {name: getattr(rm, name) for name in _RM_META}
    cache.store("markov", rm.digest(), arrays, meta)


def load_markov(cache: ArtifactCache, key: str) -> Optional[tuple[ReducedMarkov, AllowedWords]]:
    found = cache.load("markov", key)
    if found is None:
        return None
    arrays, meta = found
    rm = ReducedMarkov(**{name: arrays[name] for name in _RM_ARRAYS}, **meta)
    A = AllowedWords(
        n=meta["n"],
        alphabet_max=meta["alphabet_max"],
        codes=arrays["codes"],
        forbidden_digest=meta["forbidden_digest"],
        n_override=meta["n_override"],
    )
    return rm, A


def markov_key(forbidden_digest: str, n: int, alphabet_max: int) -> str:
    """Same key ``ReducedMarkov.digest`` produces for these inputs."""
    h = hashlib.sha256()
    h.update(f"{forbidden_digest};n={n};A={alphabet_max}".encode())
    return h.hexdigest()[:16]


def bt_key_for(provenance: str, t, precision_bits: int) -> str:
    return hashlib.sha256(f"{provenance};t={t};prec={precision_bits}".encode()).hexdigest()[:16]


def bt_key(B: ReducedBt) -> str:
    return bt_key_for(B.provenance, B.t, B.precision_bits)


def store_bt(cache: ArtifactCache, B: ReducedBt) -> None:
    if not isinstance(B.matrix, np.ndarray):
        raise TypeError("only float64 transfer matrices are cached")
    meta = {"t": f"{B.t.numerator}/{B.t.denominator}", "precision_bits": B.precision_bits, "provenance": B.provenance, "K": B.K, "m": B.m}
    cache.store("bt", bt_key(B), {"matrix": B.matrix}, meta)


def load_bt(cache: ArtifactCache, key: str) -> Optional[ReducedBt]:
    from fractions import Fraction

    found = cache.load("bt", key)
    if found is None:
        return None
    arrays, meta = found
    return ReducedBt(
        t=Fraction(meta["t"]),
        matrix=arrays["matrix"],
        precision_bits=meta["precision_bits"],
        provenance=meta["provenance"],
        K=meta["K"],
        m=meta["m"],
    )
