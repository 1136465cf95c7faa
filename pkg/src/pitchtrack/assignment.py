"""Minimum-cost bipartite assignment via shortest augmenting paths.

This is the dual-potential formulation of the Jonker-Volgenant algorithm,
O(n^2 m) for an n x m matrix with n <= m. It is implemented here rather
than borrowed so the tie-break is pinned down: rows are augmented in
ascending index order, and when reduced costs tie the lowest column index
wins. Same input, same output, on every platform.
"""
from __future__ import annotations

import numpy as np

from .errors import NumericError, ValidationError

INF = float("inf")


def solve_assignment(cost) -> list[tuple[int, int]]:
    """Assign rows to columns minimizing total cost.

    Accepts any rectangular matrix; returns min(n_rows, n_cols) pairs
    (row, col) sorted by row. All entries must be finite; use a large
    sentinel, not infinity, for pairs that should never match.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2:
        raise ValidationError("cost", f"expected a 2-d matrix, got shape {cost.shape}")
    if cost.size == 0:
        return []
    if not np.all(np.isfinite(cost)):
        raise NumericError("assignment cost matrix contains non-finite entries")

    n, m = cost.shape
    if n > m:
        # solve the transpose, then swap the pair order back
        return sorted((r, c) for c, r in solve_assignment(cost.T))
    rows = cost.tolist()  # python-list indexing beats numpy scalars here

    # 1-based working arrays; index 0 is the virtual "unmatched" column.
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    match = [0] * (m + 1)  # match[j] = row occupying column j, 0 if free
    way = [0] * (m + 1)

    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [INF] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = INF
            j1 = 0
            row = rows[i0 - 1]
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        # walk the augmenting path backwards, flipping matches
        while j0 != 0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1

    return sorted((match[j] - 1, j - 1) for j in range(1, m + 1) if match[j] != 0)
