"""Finite partitions of unity.

A partition of unity is a k x n nonnegative matrix whose columns sum to one.
Index partitions (indicator rows of a set partition) are the special case
the t-entropy search actually runs over.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .dynsys import FiniteDynSystem, ValidationError

COLUMN_TOL = 1e-12


@dataclass(frozen=True)
class PartitionOfUnity:
    rows: np.ndarray
    is_index: bool = False

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float, ndmin=2)
        if rows.size == 0:
            raise ValidationError("partition has no rows")
        if not np.all(np.isfinite(rows)) or np.any(rows < 0):
            raise ValidationError("partition rows must be finite and nonnegative")
        if np.max(np.abs(rows.sum(axis=0) - 1.0)) > COLUMN_TOL:
            raise ValidationError("partition columns must sum to 1")
        if self.is_index and not np.all((rows == 0) | (rows == 1)):
            raise ValidationError("index partition rows must be 0/1 indicators")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def k(self) -> int:
        return self.rows.shape[0]

    @property
    def n(self) -> int:
        return self.rows.shape[1]

    @classmethod
    def from_blocks(cls, blocks, n: int) -> "PartitionOfUnity":
        rows = np.zeros((len(blocks), n))
        seen = np.zeros(n, dtype=int)
        for r, block in enumerate(blocks):
            for i in block:
                if not 0 <= i < n:
                    raise ValidationError(f"block index {i} out of range [0, {n})")
                rows[r, i] = 1.0
                seen[i] += 1
        if np.any(seen != 1):
            raise ValidationError("blocks must cover every point exactly once")
        return cls(rows, is_index=True)

    @classmethod
    def from_labels(cls, labels) -> "PartitionOfUnity":
        labels = np.asarray(labels, dtype=np.int64)
        k = int(labels.max()) + 1
        rows = np.zeros((k, len(labels)))
        rows[labels, np.arange(len(labels))] = 1.0
        return cls(rows, is_index=True)

    def blocks(self) -> list:
        if not self.is_index:
            raise ValueError("only index partitions have blocks")
        return [np.flatnonzero(r).tolist() for r in self.rows]


def singleton_partition(sys: FiniteDynSystem) -> PartitionOfUnity:
    return PartitionOfUnity(np.eye(sys.n), is_index=True)


def trivial_partition(sys: FiniteDynSystem) -> PartitionOfUnity:
    return PartitionOfUnity(np.ones((1, sys.n)), is_index=True)


def bell_number(n: int) -> int:
    """Bell numbers by the triangle recurrence."""
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def restricted_growth_strings(n: int) -> Iterator[tuple]:
    """All a with a[0] = 0 and a[i] <= 1 + max(a[:i]), in lexicographic order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    a = [0] * n
    peak = [0] * n  # peak[i] = max(a[:i+1])
    while True:
        yield tuple(a)
        i = n - 1
        while i > 0 and a[i] > peak[i - 1]:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        peak[i] = max(peak[i - 1], a[i])
        for j in range(i + 1, n):
            a[j] = 0
            peak[j] = peak[i]


class IndexPartitionIterator:
    """Set partitions of {0..n-1} in restricted-growth order, up to ``budget``.

    After exhaustion ``truncated`` tells whether the budget cut the run short.
    """

    def __init__(self, n: int, budget: int | None = None):
        self.n = n
        self.budget = budget
        self.count = 0
        self.truncated = False
        self._gen = restricted_growth_strings(n)

    def __iter__(self):
        return self

    def __next__(self) -> PartitionOfUnity:
        labels = self.next_labels()
        return PartitionOfUnity.from_labels(labels)

    def next_labels(self) -> tuple:
        if self.budget is not None and self.count >= self.budget:
            self.truncated = next(self._gen, None) is not None
            raise StopIteration
        labels = next(self._gen)
        self.count += 1
        return labels


def enumerate_index_partitions(n: int, budget: int | None = None) -> IndexPartitionIterator:
    return IndexPartitionIterator(n, budget)


def oscillation_on(g, support) -> float:
    vals = np.asarray(g)[support]
    return float(vals.max() - vals.min()) if vals.size else 0.0


def is_refinement_of(E: PartitionOfUnity, D: PartitionOfUnity, eps: float) -> bool:
    """Membership of E in W(D, eps): every row of D oscillates by at most
    eps on the support of every row of E."""
    if E.n != D.n:
        raise ValueError("partitions live on different point sets")
    for h in E.rows:
        support = h > 0
        for g in D.rows:
            if oscillation_on(g, support) > eps:
                return False
    return True


def merge_blocks(blocks: list, a: int, b: int) -> list:
    merged = sorted(blocks[a] + blocks[b])
    out = [blk for i, blk in enumerate(blocks) if i not in (a, b)]
    out.append(merged)
    return sorted(out, key=lambda blk: blk[0])


def greedy_partition_search(
    sys: FiniteDynSystem,
    mu,
    n_steps: int,
    inner_solver: Callable,
    max_rounds: int = 100,
    min_gain: float = 1e-10,
):
    """Merge blocks of the singleton partition while that lowers the value.

    ``inner_solver(partition) -> float`` evaluates tau_n(mu, partition).
    Each round tries every block pair (lexicographic order, ties to the
    first pair) and applies the best merge if it lowers the value by more
    than ``min_gain``.  The returned value is an upper bound on tau_n(mu).
    """
    blocks = [[i] for i in range(sys.n)]
    best = inner_solver(PartitionOfUnity.from_blocks(blocks, sys.n))
    for _ in range(max_rounds):
        if len(blocks) < 2:
            break
        choice = None
        choice_val = np.inf
        for a in range(len(blocks)):
            for b in range(a + 1, len(blocks)):
                cand = merge_blocks(blocks, a, b)
                val = inner_solver(PartitionOfUnity.from_blocks(cand, sys.n))
                if choice is None or val < choice_val:
                    choice, choice_val = cand, val
        if not choice_val < best - min_gain:
            break
        blocks, best = choice, choice_val
    return PartitionOfUnity.from_blocks(blocks, sys.n), best
