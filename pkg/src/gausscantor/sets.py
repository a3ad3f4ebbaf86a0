"""Built-in forbidden-word sets shipped as text files under ``data/sets``."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .subshift import ForbiddenSet

BUILTIN = ("B1", "B2", "X", "Y", "E2")


def _set_text(name: str) -> str:
    return resources.files("gausscantor").joinpath("data", "sets", f"{name}.txt").read_text()


def parse_set_text(text: str, loader=_set_text) -> tuple[list[str], int, bool]:
    """Parse the set file format: directives, ``include NAME`` lines and digit words."""
    words: list[str] = []
    alphabet_max, include_reverses = 2, True
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        if key == "alphabet_max":
            alphabet_max = int(rest[0])
        elif key == "include_reverses":
            include_reverses = rest[0].lower() in ("true", "yes", "1")
        elif key == "include":
            words += parse_set_text(loader(rest[0]), loader)[0]
        elif key.isdigit() and not rest:
            words.append(key)
        else:
            raise ValueError(f"line {lineno}: cannot parse {raw!r}")
    return words, alphabet_max, include_reverses


def load_set(name: str) -> ForbiddenSet:
    words, alphabet_max, rev = parse_set_text(_set_text(name))
    return ForbiddenSet.build(words, alphabet_max=alphabet_max, include_reverses=rev)


def load_set_file(path: str | Path) -> ForbiddenSet:
    words, alphabet_max, rev = parse_set_text(Path(path).read_text())
    return ForbiddenSet.build(words, alphabet_max=alphabet_max, include_reverses=rev)


def base_words(name: str) -> list[str]:
    return parse_set_text(_set_text(name))[0]
