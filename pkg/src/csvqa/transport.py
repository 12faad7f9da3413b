"""Exact Earth Mover's Distance via the transportation simplex (MODI) method."""

from __future__ import annotations

from collections import deque

import numpy as np

_MASS_TOL = 1e-6
_REDUCED_COST_TOL = 1e-12
_MAX_PIVOTS = 10_000


def _northwest_corner(supply, demand):
    """Initial basic feasible solution; always yields m + n - 1 basic cells."""
    m, n = len(supply), len(demand)
    s, d = list(supply), list(demand)
    flow = {}
    i = j = 0
    while True:
        q = min(s[i], d[j])
        flow[(i, j)] = q
        s[i] -= q
        d[j] -= q
        if i == m - 1 and j == n - 1:
            break
        # advance exactly one index per step so degenerate zeros stay basic
        if j == n - 1 or (i < m - 1 and s[i] <= d[j]):
            i += 1
        else:
            j += 1
    return flow


def _potentials(basis, m, n, cost):
    adj = [[] for _ in range(m + n)]
    for i, j in basis:
        adj[i].append(m + j)
        adj[m + j].append(i)
    pot = [None] * (m + n)
    pot[0] = 0.0
    queue = deque([0])
    while queue:
        node = queue.popleft()
        for nb in adj[node]:
            if pot[nb] is None:
                i, j = (node, nb - m) if node < m else (nb, node - m)
                c = cost[i][j]
                pot[nb] = c - pot[node]
                queue.append(nb)
    return pot[:m], pot[m:], adj


def _cycle(adj, m, enter):
    """Cells of the unique tree path closing the loop through ``enter``."""
    i0, j0 = enter
    start, goal = m + j0, i0
    prev = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for nb in adj[node]:
            if nb not in prev:
                prev[nb] = node
                queue.append(nb)
    path = [goal]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    # path runs row i0 -> ... -> column j0; each hop is one basic cell
    cells = []
    for a, b in zip(path, path[1:]):
        cells.append((a, b - m) if a < m else (b, a - m))
    return cells


def transport(supply, demand, cost):
    """Solve the balanced transportation problem exactly.

    Returns ``(total_cost, flow)`` where ``flow`` is a dense array.
    Zero-mass rows and columns are dropped before pivoting.
    """
    supply = np.asarray(supply, dtype=np.float64)
    demand = np.asarray(demand, dtype=np.float64)
    cost = np.asarray(cost, dtype=np.float64)
    if cost.shape != (supply.size, demand.size):
        raise ValueError("cost matrix shape does not match marginals")
    if np.any(supply < 0) or np.any(demand < 0):
        raise ValueError("marginals must be non-negative")
    total_s, total_d = supply.sum(), demand.sum()
    if abs(total_s - total_d) > _MASS_TOL:
        raise ValueError(f"infeasible marginals: supply {total_s!r} != demand {total_d!r}")

    rows = np.flatnonzero(supply > 0)
    cols = np.flatnonzero(demand > 0)
    full_flow = np.zeros(cost.shape)
    if rows.size == 0 or cols.size == 0:
        return 0.0, full_flow
    s = supply[rows]
    d = demand[cols] * (s.sum() / demand[cols].sum())
    c = cost[np.ix_(rows, cols)].tolist()
    m, n = len(s), len(d)

    flow = _northwest_corner(s.tolist(), d.tolist())
    degenerate_run = 0
    for _ in range(_MAX_PIVOTS):
        u, v, adj = _potentials(flow, m, n, c)
        enter, best = None, -_REDUCED_COST_TOL
        for i in range(m):
            ci, ui = c[i], u[i]
            for j in range(n):
                if (i, j) in flow:
                    continue
                r = ci[j] - ui - v[j]
                if r < best:
                    enter, best = (i, j), r
                    # Bland's rule after a run of degenerate pivots avoids cycling
                    if degenerate_run > 50:
                        break
            if enter is not None and degenerate_run > 50:
                break
        if enter is None:
            break
        loop = _cycle(adj, m, enter)
        # loop[k] alternates: even positions lose flow, odd positions gain
        minus = loop[0::2]
        theta = min(flow[cell] for cell in minus)
        leave = next(cell for cell in minus if flow[cell] == theta)
        for k, cell in enumerate(loop):
            flow[cell] += -theta if k % 2 == 0 else theta
        flow[enter] = theta
        del flow[leave]
        degenerate_run = degenerate_run + 1 if theta == 0 else 0
    else:
        raise RuntimeError("transportation simplex did not converge")

    total = 0.0
    for (i, j), f in flow.items():
        full_flow[rows[i], cols[j]] = f
        total += c[i][j] * f
    return total, full_flow


def emd(a, b, ground) -> float:
    """Earth Mover's Distance between two unit-mass histograms."""
    return transport(a, b, ground)[0]
