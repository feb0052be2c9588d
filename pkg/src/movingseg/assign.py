"""Optimal bipartite assignment over rectangular benefit matrices.

`solve_max_assignment` maximizes the summed benefit of a one-to-one matching
between rows and columns.  Ties between equally scoring matchings are broken
deterministically: pairs are pinned in ascending (row, col) order, so repeated
runs over identical inputs always produce the identical matching.  Negative
entries are never matched; zero-benefit pairs may appear in the result and
callers treat them the same as unmatched items.

`brute_force_assignment` is the independent exhaustive oracle used by the test
suite; it shares nothing with the solver beyond the input contract.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

_INF = float("inf")


@dataclass(frozen=True)
class Matching:
    """One-to-one row/col pairs plus the summed benefit of the matched entries."""

    pairs: tuple[tuple[int, int], ...]
    total_score: float

    def pair_dict(self) -> dict[int, int]:
        return dict(self.pairs)


def _validated(scores) -> np.ndarray:
    b = np.asarray(scores, dtype=float)
    if b.ndim != 2:
        raise ValueError(f"score matrix must be 2-D, got shape {b.shape}")
    if b.size and not np.isfinite(b).all():
        raise ValueError("score matrix contains non-finite entries")
    return b


def _hungarian_min(cost: list[list[float]]) -> tuple[list[int], list[float], list[float]]:
    """Min-cost perfect-on-rows assignment for an n x m cost table, n <= m.

    Returns (col_to_row, u, v), 1-based with index 0 unused; col_to_row[j] == 0
    means column j is unmatched.  The potentials satisfy u[i] + v[j] <= cost
    everywhere with equality on matched pairs.
    """
    n = len(cost)
    m = len(cost[0]) if n else 0
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    col_to_row = [0] * (m + 1)
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        col_to_row[0] = i
        j0 = 0
        minv = [_INF] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = col_to_row[j0]
            row = cost[i0 - 1]
            delta = _INF
            j1 = 0
            u_i0 = u[i0]
            for j in range(1, m + 1):
                if not used[j]:
                    cur = row[j - 1] - u_i0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[col_to_row[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if col_to_row[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            col_to_row[j0] = col_to_row[j1]
            j0 = j1
    return col_to_row, u, v


class _LexRefiner:
    """Pin matched pairs in (row, col) order without leaving the optimum.

    Works on the tight-edge graph certified by the dual potentials: a matching
    is optimal exactly when it uses tight edges only, matches every vertex of
    the smaller side, and covers every vertex whose dual value is positive.
    """

    def __init__(self, tight_rows, tight_cols, required_left, required_right,
                 left_match, right_match):
        self.tight_rows = tight_rows          # row -> ascending tight cols
        self.tight_cols = tight_cols          # col -> ascending tight rows
        self.required_left = required_left
        self.required_right = required_right
        self.left = left_match                # row -> col
        self.right = right_match              # col -> row
        self.pinned_rows: set[int] = set()
        self.pinned_cols: set[int] = set()

    def run(self) -> list[tuple[int, int]]:
        for r in range(len(self.tight_rows)):
            current = self.left.get(r)
            for c in self.tight_rows[r]:
                if c in self.pinned_cols:
                    continue
                if c == current or self._try_repin(r, c):
                    self.pinned_rows.add(r)
                    self.pinned_cols.add(c)
                    break
        return sorted(self.left.items())

    def _try_repin(self, r: int, c: int) -> bool:
        saved = (dict(self.left), dict(self.right))
        displaced = self.right.get(c)
        freed = self.left.get(r)
        if freed is not None:
            del self.right[freed]
        if displaced is not None:
            del self.left[displaced]
        self.left[r] = c
        self.right[c] = r
        self.pinned_rows.add(r)
        self.pinned_cols.add(c)
        need_row = displaced if displaced in self.required_left else None
        need_col = freed if freed in self.required_right else None
        ok = self._restore(need_row, need_col)
        if not ok:
            # the two augmentations can interfere; retry in the other order
            self.left, self.right = dict(saved[0]), dict(saved[1])
            if freed is not None:
                del self.right[freed]
            if displaced is not None:
                del self.left[displaced]
            self.left[r] = c
            self.right[c] = r
            ok = self._restore(need_row, need_col, col_first=True)
        self.pinned_rows.discard(r)
        self.pinned_cols.discard(c)
        if not ok:
            self.left, self.right = saved
        return ok

    def _restore(self, need_row, need_col, col_first: bool = False) -> bool:
        steps = [("col", need_col), ("row", need_row)] if col_first else \
                [("row", need_row), ("col", need_col)]
        for kind, vertex in steps:
            if vertex is None:
                continue
            if kind == "row":
                if self.left.get(vertex) is None and not self._augment_row(vertex, set()):
                    return False
            else:
                if self.right.get(vertex) is None and not self._augment_col(vertex, set()):
                    return False
        return True

    def _augment_row(self, row: int, seen: set[int]) -> bool:
        for c in self.tight_rows[row]:
            if c in self.pinned_cols or c in seen:
                continue
            seen.add(c)
            owner = self.right.get(c)
            if owner is None:
                self.left[row] = c
                self.right[c] = row
                return True
            if owner in self.pinned_rows:
                continue
            if owner in self.required_left:
                if not self._augment_row(owner, seen):
                    continue
            else:
                del self.left[owner]
            self.left[row] = c
            self.right[c] = row
            return True
        return False

    def _augment_col(self, col: int, seen: set[int]) -> bool:
        for r in self.tight_cols[col]:
            if r in self.pinned_rows or r in seen:
                continue
            seen.add(r)
            cur = self.left.get(r)
            if cur is None:
                self.left[r] = col
                self.right[col] = r
                return True
            if cur in self.pinned_cols:
                continue
            if cur in self.required_right:
                if not self._augment_col(cur, seen):
                    continue
            else:
                del self.right[cur]
            self.left[r] = col
            self.right[col] = r
            return True
        return False


def solve_max_assignment(scores) -> Matching:
    """Maximum-benefit one-to-one matching of a (possibly rectangular) matrix.

    Raises ValueError on non-finite entries.  Zero-degenerate shapes produce
    the empty matching.
    """
    b = _validated(scores)
    n_rows, n_cols = b.shape
    if n_rows == 0 or n_cols == 0:
        return Matching((), 0.0)
    bc = np.maximum(b, 0.0)
    scale = float(bc.max())
    eps = 1e-12 * max(1.0, scale)

    transposed = n_rows > n_cols
    solved = bc.T if transposed else bc
    cost = (scale - solved).tolist()
    col_to_row, u, v = _hungarian_min(cost)

    # duals in benefit form: a_i for solved rows, b_j for solved cols
    a_dual = [scale - u[i + 1] for i in range(solved.shape[0])]
    b_dual = [-v[j + 1] for j in range(solved.shape[1])]

    left_match: dict[int, int] = {}
    right_match: dict[int, int] = {}
    for j in range(1, solved.shape[1] + 1):
        if col_to_row[j]:
            si, sj = col_to_row[j] - 1, j - 1
            r, c = (sj, si) if transposed else (si, sj)
            left_match[r] = c
            right_match[c] = r

    if transposed:
        row_dual = {r: b_dual[r] for r in range(n_rows)}
        col_dual = {c: a_dual[c] for c in range(n_cols)}
        required_left = {r for r in range(n_rows) if row_dual[r] > eps}
        required_right = set(range(n_cols))
    else:
        row_dual = {r: a_dual[r] for r in range(n_rows)}
        col_dual = {c: b_dual[c] for c in range(n_cols)}
        required_left = set(range(n_rows))
        required_right = {c for c in range(n_cols) if col_dual[c] > eps}

    tight_rows: list[list[int]] = []
    tight_cols: list[list[int]] = [[] for _ in range(n_cols)]
    for r in range(n_rows):
        rd = row_dual[r]
        cols = [c for c in range(n_cols) if rd + col_dual[c] - bc[r, c] <= eps]
        tight_rows.append(cols)
        for c in cols:
            tight_cols[c].append(r)

    pairs = _LexRefiner(tight_rows, tight_cols, required_left, required_right,
                        left_match, right_match).run()
    kept = tuple((r, c) for r, c in pairs if b[r, c] >= 0.0)
    total = float(sum(b[r, c] for r, c in kept))
    return Matching(kept, total)


def brute_force_assignment(scores) -> Matching:
    """Exhaustive maximum over all one-to-one matchings; min(rows, cols) <= 8.

    Test oracle: enumerates every injection of the smaller side into the
    larger and keeps the best total.  Negative entries are never matched.
    """
    b = _validated(scores)
    n_rows, n_cols = b.shape
    if n_rows == 0 or n_cols == 0:
        return Matching((), 0.0)
    if min(n_rows, n_cols) > 8:
        raise ValueError(f"brute force limited to min dimension 8, got {min(n_rows, n_cols)}")
    bc = np.maximum(b, 0.0)
    best_total = -_INF
    best: tuple[tuple[int, int], ...] = ()
    if n_rows <= n_cols:
        rows = bc.tolist()
        for perm in itertools.permutations(range(n_cols), n_rows):
            total = 0.0
            for i, c in enumerate(perm):
                total += rows[i][c]
            if total > best_total:
                best_total = total
                best = tuple((i, c) for i, c in enumerate(perm))
    else:
        cols = bc.T.tolist()
        for perm in itertools.permutations(range(n_rows), n_cols):
            total = 0.0
            for j, r in enumerate(perm):
                total += cols[j][r]
            if total > best_total:
                best_total = total
                best = tuple(sorted((r, j) for j, r in enumerate(perm)))
    kept = tuple((r, c) for r, c in best if b[r, c] >= 0.0)
    return Matching(kept, float(sum(b[r, c] for r, c in kept)))
