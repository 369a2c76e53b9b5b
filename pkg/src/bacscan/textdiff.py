"""Edit distance and alignment over response bodies.

The production distance is Hyyro's bit-parallel formulation of the Myers
algorithm: exact unit-cost Levenshtein (insert, delete, substitute) computed
in O(ceil(m/w) * n) word operations with memory linear in the shorter input.
Python's unbounded integers stand in for the machine words, which keeps the
implementation short and still fast enough for bodies near the auto-compare
cap. Works on str (Unicode scalar values) and bytes alike.

Alignment spans for diff rendering come from a Hirschberg divide-and-conquer
over the same cost model, so highlighted regions are always consistent with
the distance the classifier used.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import isqrt
from typing import Sequence

__all__ = ["edit_distance", "normalized_dissimilarity", "align_spans", "DiffSpan"]


# ---------------------------------------------------------------------------
# Distance
# ---------------------------------------------------------------------------

def edit_distance(a: Sequence, b: Sequence) -> int:
    """Exact Levenshtein distance between two sequences.

    Bit-parallel over the shorter sequence: the pattern is encoded as per
    symbol bitmasks, then the longer sequence is streamed through the
    vertical delta vectors. Only the final score is kept.
    """
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) > len(b):
        a, b = b, a

    m = len(a)
    full = (1 << m) - 1
    high = 1 << (m - 1)

    peq: dict = {}
    bit = 1
    for ch in a:
        peq[ch] = peq.get(ch, 0) | bit
        bit <<= 1

    vp = full
    vn = 0
    dist = m
    get = peq.get
    for ch in b:
        eq = get(ch, 0)
        d0 = ((((eq & vp) + vp) & full) ^ vp) | eq | vn
        hp = vn | (full & ~(d0 | vp))
        hn = vp & d0
        if hp & high:
            dist += 1
        elif hn & high:
            dist -= 1
        hp = ((hp << 1) | 1) & full
        hn = (hn << 1) & full
        vp = hn | (full & ~(d0 | hp))
        vn = hp & d0
    return dist


def normalized_dissimilarity(a: Sequence, b: Sequence) -> float:
    """Edit distance scaled by the longer length, in [0, 1].

    Two empty inputs are identical, hence 0.0. The classic pair
    ("kitten", "sitting") scores 3/7.
    """
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return edit_distance(a, b) / longest


# ---------------------------------------------------------------------------
# Alignment spans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiffSpan:
    """One maximal differing region of an optimal alignment.

    ``a_start:a_end`` indexes the baseline side, ``b_start:b_end`` the mutated
    side; both are half-open. ``kind`` is "replace" when both sides are
    non-empty, "delete" when only the baseline side is, "insert" when only
    the mutated side is.
    """

    kind: str
    a_start: int
    a_end: int
    b_start: int
    b_end: int


# Per-character ops: ("match"|"sub", ai, bj), ("del", ai, bj), ("ins", ai, bj).
# ai/bj are positions *consumed so far*, which keeps merging trivial.

def _small_ops(a: Sequence, b: Sequence, a_off: int, b_off: int, out: list) -> None:
    """Full-matrix traceback for small blocks (Hirschberg leaves)."""
    la, lb = len(a), len(b)
    rows = [[0] * (lb + 1) for _ in range(la + 1)]
    for j in range(lb + 1):
        rows[0][j] = j
    for i in range(1, la + 1):
        rows[i][0] = i
        prev_row = rows[i - 1]
        row = rows[i]
        ca = a[i - 1]
        for j in range(1, lb + 1):
            row[j] = min(prev_row[j] + 1, row[j - 1] + 1,
                         prev_row[j - 1] + (ca != b[j - 1]))
    ops = []
    i, j = la, lb
    while i > 0 or j > 0:
        here = rows[i][j]
        if i > 0 and j > 0 and rows[i - 1][j - 1] + (a[i - 1] != b[j - 1]) == here:
            ops.append(("match" if a[i - 1] == b[j - 1] else "sub", a_off + i, b_off + j))
            i -= 1
            j -= 1
        elif i > 0 and rows[i - 1][j] + 1 == here:
            ops.append(("del", a_off + i, b_off + j))
            i -= 1
        else:
            ops.append(("ins", a_off + i, b_off + j))
            j -= 1
    out.extend(reversed(ops))


def _last_row(a: Sequence, b: Sequence) -> list[int]:
    """Distances between all of ``a`` and every prefix of ``b`` (two rows)."""
    prev = list(range(len(b) + 1))
    for i in range(1, len(a) + 1):
        ca = a[i - 1]
        cur = [i]
        append = cur.append
        left = i
        pj = prev[0]
        for j in range(1, len(prev)):
            cj = prev[j]
            best = pj if ca == b[j - 1] else pj + 1
            up = cj + 1
            if up < best:
                best = up
            if left + 1 < best:
                best = left + 1
            append(best)
            left = best
            pj = cj
        prev = cur
    return prev


_LEAF_CELLS = 2048


def _hirschberg(a: Sequence, b: Sequence, a_off: int, b_off: int, out: list) -> None:
    la, lb = len(a), len(b)
    if la == 0:
        for j in range(lb):
            out.append(("ins", a_off, b_off + j + 1))
        return
    if lb == 0:
        for i in range(la):
            out.append(("del", a_off + i + 1, b_off))
        return
    if la * lb <= _LEAF_CELLS or la == 1 or lb == 1:
        _small_ops(a, b, a_off, b_off, out)
        return
    mid = la // 2
    left = _last_row(a[:mid], b)
    right = _last_row(a[mid:][::-1], b[::-1])
    best_j, best = 0, left[0] + right[lb]
    for j in range(1, lb + 1):
        s = left[j] + right[lb - j]
        if s < best:
            best, best_j = s, j
    _hirschberg(a[:mid], b[:best_j], a_off, b_off, out)
    _hirschberg(a[mid:], b[best_j:], a_off + mid, b_off + best_j, out)


def alignment_ops(a: Sequence, b: Sequence) -> list[tuple[str, int, int]]:
    """Per-symbol ops of one optimal alignment, in order. Exposed mainly so
    tests can check the op count against the distance."""
    out: list = []
    _hirschberg(a, b, 0, 0, out)
    return out


def _trim_common(a: Sequence, b: Sequence) -> tuple[int, int]:
    """Lengths of the common prefix and suffix (suffix disjoint from prefix)."""
    pre = 0
    limit = min(len(a), len(b))
    while pre < limit and a[pre] == b[pre]:
        pre += 1
    suf = 0
    while suf < limit - pre and a[len(a) - 1 - suf] == b[len(b) - 1 - suf]:
        suf += 1
    return pre, suf


def align_spans(a: Sequence, b: Sequence, max_cells: int = 4_000_000) -> list[DiffSpan]:
    """Merged differing regions of an optimal alignment of ``a`` and ``b``.

    Common prefix and suffix are trimmed in linear time first, which makes
    the usual near-identical response pair cheap. If the remaining cores
    would exceed ``max_cells`` DP cells, only a proportional head of each
    core is aligned exactly and the rest is reported as a single replace
    span; bodies that large are beyond useful character-level diffing.
    """
    if a == b:
        return []
    pre, suf = _trim_common(a, b)
    core_a = a[pre:len(a) - suf]
    core_b = b[pre:len(b) - suf]

    tail_span = None
    if len(core_a) * len(core_b) > max_cells:
        scale = (max_cells / (len(core_a) * len(core_b))) ** 0.5
        ha = max(1, min(len(core_a), int(len(core_a) * scale)))
        hb = max(1, min(len(core_b), int(len(core_b) * scale)))
        while ha * hb > max_cells:
            ha = max(1, ha - 1)
            hb = max(1, hb - 1)
        tail_span = DiffSpan("replace", pre + ha, pre + len(core_a),
                             pre + hb, pre + len(core_b))
        core_a = core_a[:ha]
        core_b = core_b[:hb]

    ops = alignment_ops(core_a, core_b)
    spans: list[DiffSpan] = []
    run_a_start = run_b_start = None
    a_pos = b_pos = 0
    for kind, ai, bj in ops:
        if kind == "match":
            if run_a_start is not None:
                spans.append(_make_span(pre, run_a_start, a_pos, run_b_start, b_pos))
                run_a_start = run_b_start = None
            a_pos, b_pos = ai, bj
            continue
        if run_a_start is None:
            run_a_start, run_b_start = a_pos, b_pos
        a_pos, b_pos = ai, bj
    if run_a_start is not None:
        spans.append(_make_span(pre, run_a_start, a_pos, run_b_start, b_pos))

    if tail_span is not None:
        if spans and spans[-1].a_end == tail_span.a_start and spans[-1].b_end == tail_span.b_start:
            last = spans.pop()
            tail_span = DiffSpan("replace", last.a_start, tail_span.a_end,
                                 last.b_start, tail_span.b_end)
        spans.append(tail_span)
    return spans


def _make_span(offset: int, a0: int, a1: int, b0: int, b1: int) -> DiffSpan:
    if a1 > a0 and b1 > b0:
        kind = "replace"
    elif a1 > a0:
        kind = "delete"
    else:
        kind = "insert"
    return DiffSpan(kind, offset + a0, offset + a1, offset + b0, offset + b1)
