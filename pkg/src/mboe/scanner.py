"""Multi-pattern string matching over normalized text.

Builds a trie with failure links (Aho-Corasick) from the dictionary's
normalized mentions, flattens it into contiguous arrays, and scans text
through one of two interchangeable kernels: a compiled extension when
available, otherwise a pure-Python walker.  Set MBOE_PURE_PYTHON=1 to
force the fallback.  `benchmarks/bench_scan.py` compares the two.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _scan_py

if os.environ.get("MBOE_PURE_PYTHON") == "1":
    _kernel = _scan_py
else:
    try:
        from . import _scan_cy as _kernel  # type: ignore[no-redef]
    except ImportError:
        _kernel = _scan_py

COMPILED_KERNEL = bool(getattr(_kernel, "COMPILED", False))


def kernel_name() -> str:
    return "compiled" if COMPILED_KERNEL else "pure-python"


@dataclass
class FlatAutomaton:
    """Automaton flattened into arrays shared by both kernels.

    Transitions are CSR-style: state s owns the slice
    trans_offsets[s]:trans_offsets[s+1] of (trans_chars, trans_targets),
    with trans_chars sorted within each slice.  Outputs are merged across
    failure links at build time, so outputs[s] lists every pattern ending
    at state s.
    """

    trans_offsets: np.ndarray
    trans_chars: np.ndarray
    trans_targets: np.ndarray
    fail: np.ndarray
    out_offsets: np.ndarray
    out_pids: np.ndarray
    pattern_lengths: np.ndarray


class Automaton:
    """Matcher for a fixed set of patterns (normalized mention strings)."""

    def __init__(self, patterns: Sequence[str], kernel=None):
        if any(not p for p in patterns):
            raise ValueError("empty patterns are not allowed")
        self.patterns = list(patterns)
        self._flat = _build(self.patterns)
        self._kernel = kernel if kernel is not None else _kernel
        self._state = self._kernel.prepare(self._flat)

    def scan_codes(self, codes: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Match against an array of code points; returns (starts, ends, pattern_ids)."""
        return self._kernel.scan(self._state, codes)

    def scan(self, text: str) -> list[tuple[int, int, int]]:
        """All pattern occurrences in `text` as (start, end, pattern_id),
        sorted by (start, end)."""
        starts, ends, pids = self.scan_codes(encode_codepoints(text))
        matches = sorted(zip(starts.tolist(), ends.tolist(), pids.tolist()))
        return matches


def encode_codepoints(text: str) -> np.ndarray:
    return np.frombuffer(text.encode("utf-32-le"), dtype=np.uint32)


def _build(patterns: Sequence[str]) -> FlatAutomaton:
    # trie construction
    goto: list[dict[int, int]] = [{}]
    ends: list[list[int]] = [[]]
    for pid, pattern in enumerate(patterns):
        s = 0
        for ch in pattern:
            code = ord(ch)
            nxt = goto[s].get(code)
            if nxt is None:
                nxt = len(goto)
                goto[s][code] = nxt
                goto.append({})
                ends.append([])
            s = nxt
        ends[s].append(pid)

    # failure links by BFS; outputs merged so matching never chases links
    n = len(goto)
    fail = [0] * n
    outputs: list[list[int]] = [list(e) for e in ends]
    queue = deque()
    for code, child in goto[0].items():
        fail[child] = 0
        queue.append(child)
    while queue:
        s = queue.popleft()
        for code, child in goto[s].items():
            queue.append(child)
            f = fail[s]
            while f and code not in goto[f]:
                f = fail[f]
            fail[child] = goto[f].get(code, 0)
            outputs[child] = outputs[child] + outputs[fail[child]]

    trans_offsets = np.zeros(n + 1, dtype=np.int64)
    chars: list[int] = []
    targets: list[int] = []
    for s in range(n):
        items = sorted(goto[s].items())
        trans_offsets[s + 1] = trans_offsets[s] + len(items)
        chars.extend(c for c, _ in items)
        targets.extend(t for _, t in items)
    out_offsets = np.zeros(n + 1, dtype=np.int64)
    out_pids: list[int] = []
    for s in range(n):
        out_offsets[s + 1] = out_offsets[s] + len(outputs[s])
        out_pids.extend(outputs[s])
    return FlatAutomaton(
        trans_offsets=trans_offsets,
        trans_chars=np.asarray(chars, dtype=np.uint32),
        trans_targets=np.asarray(targets, dtype=np.int64),
        fail=np.asarray(fail, dtype=np.int64),
        out_offsets=out_offsets,
        out_pids=np.asarray(out_pids, dtype=np.int64),
        pattern_lengths=np.asarray([len(p) for p in patterns], dtype=np.int64),
    )


def naive_scan(patterns: Sequence[str], text: str) -> list[tuple[int, int, int]]:
    """Reference O(n^2) matcher: tests every substring against the pattern
    set.  Kept deliberately independent of the automaton for oracle tests."""
    lookup = {}
    for pid, p in enumerate(patterns):
        lookup.setdefault(p, []).append(pid)
    lengths = sorted({len(p) for p in patterns})
    matches = []
    n = len(text)
    for start in range(n):
        for length in lengths:
            end = start + length
            if end > n:
                break
            for pid in lookup.get(text[start:end], ()):
                matches.append((start, end, pid))
    return sorted(matches)
