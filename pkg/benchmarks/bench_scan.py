#!/usr/bin/env python3
"""Benchmark: compiled scan kernel vs the pure-Python fallback.

Builds one automaton from a synthetic mention dictionary, scans a
synthetic corpus through both kernels, verifies they emit identical
matches, and reports throughput.  Also times end-to-end detection
(normalization + scan + candidate resolution) with whichever kernel the
package selected at import.

Usage: python benchmarks/bench_scan.py [--mentions N] [--chars N]
"""

import argparse
import time

import numpy as np

from mboe import _scan_py
from mboe.corpus import Document
from mboe.detection import Detector
from mboe.dictionary import build_interlanguage_map, build_mention_dictionary
from mboe.scanner import Automaton, encode_codepoints, kernel_name

try:
    from mboe import _scan_cy
except ImportError:
    _scan_cy = None


def build_inputs(n_mentions: int, n_chars: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    syllables = ["ta", "ko", "ra", "mi", "su", "en", "wa", "do", "ix", "an", "東", "京", "ж"]
    mentions = set()
    while len(mentions) < n_mentions:
        word = "".join(rng.choice(syllables, size=rng.integers(2, 5)))
        mentions.add(word)
    mentions = sorted(mentions)
    # text interleaves dictionary words with noise so matches are frequent
    parts = []
    total = 0
    while total < n_chars:
        if rng.random() < 0.3:
            token = mentions[int(rng.integers(len(mentions)))]
        else:
            token = "".join(rng.choice(syllables, size=rng.integers(1, 4)))
        parts.append(token)
        total += len(token) + 1
    text = " ".join(parts)
    return mentions, text


def time_kernel(automaton: Automaton, codes: np.ndarray, repeats: int) -> tuple[float, int]:
    best = float("inf")
    matches = 0
    for _ in range(repeats):
        start = time.perf_counter()
        starts, _, _ = automaton.scan_codes(codes)
        best = min(best, time.perf_counter() - start)
        matches = len(starts)
    return best, matches


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--mentions", type=int, default=20_000)
    parser.add_argument("--chars", type=int, default=400_000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    print(f"selected kernel: {kernel_name()}")
    mentions, text = build_inputs(args.mentions, args.chars)
    codes = encode_codepoints(text)
    print(f"{len(mentions)} patterns, {len(text):,} characters of text")

    pure = Automaton(mentions, kernel=_scan_py)
    pure_time, pure_matches = time_kernel(pure, codes, args.repeats)
    rows = [("pure-python", pure_time, pure_matches)]

    if _scan_cy is not None:
        compiled = Automaton(mentions, kernel=_scan_cy)
        compiled_time, compiled_matches = time_kernel(compiled, codes, args.repeats)
        assert compiled.scan(text) == pure.scan(text), "kernel outputs diverge"
        rows.append(("compiled", compiled_time, compiled_matches))
    else:
        print("compiled kernel unavailable; run `pip install -e .` to build it")

    print(f"\n{'kernel':<12} {'time':>9} {'Mchars/s':>10} {'matches':>9}")
    for name, seconds, matches in rows:
        print(f"{name:<12} {seconds:>8.3f}s {len(text) / seconds / 1e6:>10.2f} {matches:>9}")
    if len(rows) == 2:
        print(f"\nspeedup: {rows[0][1] / rows[1][1]:.1f}x")

    # end-to-end detection with the selected kernel
    records = [(m, f"T{i}", 1) for i, m in enumerate(mentions)]
    links = [("xx", f"T{i}", f"Q{i + 1}") for i in range(len(mentions))]
    detector = Detector(
        build_mention_dictionary(records, "xx"), build_interlanguage_map(links)
    )
    doc = Document(id="bench", language="xx", text=text)
    start = time.perf_counter()
    bag = detector.detect(doc)
    elapsed = time.perf_counter() - start
    print(
        f"\nend-to-end detect(): {elapsed:.3f}s "
        f"({len(text) / elapsed / 1e6:.2f} Mchars/s, {len(bag)} items)"
    )


if __name__ == "__main__":
    main()
