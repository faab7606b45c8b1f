"""Deterministic token counting.

The default counter approximates transformer tokenization as ceil(bytes / 4),
which keeps corpus builds hermetic. When fidelity to a specific model matters,
an exact greedy counter over a user-supplied tokenizer vocabulary file can be
plugged in instead.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Callable

TokenCounter = Callable[[str], int]

COUNTER_NAMES = ("approx", "vocab")


class CounterError(Exception):
    pass


def approx_count(text: str) -> int:
    return math.ceil(len(text.encode("utf-8")) / 4)


class VocabCounter:
    """Greedy longest-match count against a tokenizer vocabulary.

    Accepts either a JSON object file (token -> id, e.g. a HuggingFace
    vocab.json) or a plain text file with one token per line. Characters not
    covered by any vocabulary entry count as one token each.
    """

    def __init__(self, vocab_path: str | Path):
        path = Path(vocab_path)
        if not path.is_file():
            raise CounterError(
                f"vocabulary file not found: {path} "
                "(pass --vocab <file> with a tokenizer vocab.json or a "
                "one-token-per-line text file, or use --counter approx)"
            )
        text = path.read_text(encoding="utf-8")
        if path.suffix == ".json":
            entries = list(json.loads(text).keys())
        else:
            entries = [line for line in text.splitlines() if line]
        self._by_first: dict[str, list[str]] = {}
        for tok in entries:
            self._by_first.setdefault(tok[0], []).append(tok)
        for bucket in self._by_first.values():
            bucket.sort(key=len, reverse=True)
        self._max_len = max((len(t) for t in entries), default=1)

    def __call__(self, text: str) -> int:
        count = 0
        i = 0
        n = len(text)
        while i < n:
            matched = 1
            for tok in self._by_first.get(text[i], ()):
                if text.startswith(tok, i):
                    matched = len(tok)
                    break
            count += 1
            i += matched
        return count


def make_counter(kind: str, vocab_path: str | Path | None = None) -> TokenCounter:
    if kind == "approx":
        return approx_count
    if kind in ("vocab", "external-vocab"):
        if vocab_path is None:
            raise CounterError(
                "counter 'vocab' needs a vocabulary file: pass --vocab <file> "
                "or use --counter approx"
            )
        return VocabCounter(vocab_path)
    raise CounterError(f"unknown counter {kind!r} (choose from {', '.join(COUNTER_NAMES)})")
