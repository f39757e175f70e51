"""Pure-Python scan kernel.

Walks a flattened multi-pattern automaton over a sequence of code points.
Drop-in fallback for the compiled kernel in _scan_cy; both consume the
same flattened automaton arrays and must emit identical match arrays.
"""

from __future__ import annotations

import numpy as np

COMPILED = False


class _KernelState:
    __slots__ = ("goto", "fail", "outputs", "pattern_lengths")

    def __init__(self, goto, fail, outputs, pattern_lengths):
        self.goto = goto
        self.fail = fail
        self.outputs = outputs
        self.pattern_lengths = pattern_lengths


def prepare(flat) -> _KernelState:
    """Expand flattened automaton arrays into per-state dicts (fast to walk
    in interpreted code)."""
    n_states = len(flat.fail)
    goto: list[dict[int, int]] = []
    for state in range(n_states):
        lo, hi = flat.trans_offsets[state], flat.trans_offsets[state + 1]
        goto.append(
            {int(flat.trans_chars[i]): int(flat.trans_targets[i]) for i in range(lo, hi)}
        )
    outputs: list[tuple[int, ...]] = []
    for state in range(n_states):
        lo, hi = flat.out_offsets[state], flat.out_offsets[state + 1]
        outputs.append(tuple(int(p) for p in flat.out_pids[lo:hi]))
    return _KernelState(goto, flat.fail.tolist(), outputs, flat.pattern_lengths.tolist())


def scan(state: _KernelState, codes: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (starts, ends, pattern_ids) for every pattern occurrence.

    Positions are scan-character indices; ends are exclusive.
    """
    goto = state.goto
    fail = state.fail
    outputs = state.outputs
    plen = state.pattern_lengths
    starts: list[int] = []
    ends: list[int] = []
    pids: list[int] = []
    s = 0
    for pos, code in enumerate(codes.tolist()):
        while True:
            nxt = goto[s].get(code)
            if nxt is not None:
                s = nxt
                break
            if s == 0:
                break
            s = fail[s]
        if outputs[s]:
            end = pos + 1
            for pid in outputs[s]:
                starts.append(end - plen[pid])
                ends.append(end)
                pids.append(pid)
    return (
        np.asarray(starts, dtype=np.int64),
        np.asarray(ends, dtype=np.int64),
        np.asarray(pids, dtype=np.int64),
    )
