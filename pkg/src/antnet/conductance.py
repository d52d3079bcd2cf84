"""Exact electrical-network computations.

Edge weights are interpreted as conductances between the nest N and the
food F.  Series-parallel graphs reduce exactly via the harmonic combinator
``phi``; general graphs go through a dense weighted-Laplacian solve.  The
same linear-algebra machinery also provides absorbing-chain hitting and
edge-crossing probabilities for the weighted random walk.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .graphs import Graph, SpExpression, Base, Series, Parallel, GraphError


def phi(x, y):
    """Harmonic series combination 1/(1/x + 1/y).

    Accepts scalars or numpy arrays; all inputs must be strictly positive.
    Superadditive in (x, y) jointly, and phi(x+1, y+1) <= phi(x, y) + 1.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("phi requires strictly positive arguments")
    out = (x * y) / (x + y)
    return out if out.ndim else float(out)


def sp_conductance(expr: SpExpression, weights):
    """Effective conductance of an SP term, one weight per Base leaf.

    Leaf order is left-to-right, matching the edge ids of sp_to_graph.
    ``weights`` may be a 1-D sequence (one scalar per leaf) or a 2-D array
    of shape (n_leaves, T) evaluating T weight configurations at once.
    """
    w = np.asarray(weights, dtype=np.float64)
    n = expr.n_leaves()
    if w.shape[0] != n:
        raise ValueError(f"expected {n} leaf weights, got {w.shape[0]}")
    if np.any(w <= 0):
        raise ValueError("leaf weights must be strictly positive")
    pos = 0

    def reduce(e):
        nonlocal pos
        if isinstance(e, Base):
            v = w[pos]
            pos += 1
            return v
        a = reduce(e.left)
        b = reduce(e.right)
        if isinstance(e, Series):
            return (a * b) / (a + b)
        return a + b

    out = reduce(expr)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ConductanceReport:
    value: float
    method: str           # "sp-reduction" | "laplacian"
    residual: float


def _edge_weights(graph: Graph, weights) -> np.ndarray:
    w = np.asarray(getattr(weights, "weights", weights), dtype=np.float64)
    if w.shape != (graph.n_edges,):
        raise ValueError(f"expected {graph.n_edges} edge weights")
    if np.any(w <= 0):
        raise ValueError("edge weights must be strictly positive")
    return w


def laplacian_conductance(graph: Graph, weights) -> ConductanceReport:
    """Effective conductance N->F by a dense harmonic-voltage solve.

    Voltage pinned to 1 at N and 0 at F; the conductance is the net
    current out of N.  The report carries the residual of the interior
    linear system.
    """
    w = _edge_weights(graph, weights)
    V = graph.n_vertices
    L = np.zeros((V, V))
    for eid, (u, v) in enumerate(graph.edges):
        L[u, u] += w[eid]
        L[v, v] += w[eid]
        L[u, v] -= w[eid]
        L[v, u] -= w[eid]
    interior = [v for v in range(V) if v not in (graph.nest, graph.food)]
    volt = np.zeros(V)
    volt[graph.nest] = 1.0
    if interior:
        A = L[np.ix_(interior, interior)]
        b = -L[np.ix_(interior, [graph.nest])].ravel()
        try:
            x = np.linalg.solve(A, b)
        except np.linalg.LinAlgError as e:
            raise GraphError(f"singular Laplacian system: {e}") from None
        volt[interior] = x
        residual = float(np.linalg.norm(A @ x - b))
    else:
        residual = 0.0
    current = 0.0
    for eid, (u, v) in enumerate(graph.edges):
        if u == graph.nest:
            current += w[eid] * (volt[u] - volt[v])
        elif v == graph.nest:
            current += w[eid] * (volt[v] - volt[u])
    return ConductanceReport(value=float(current), method="laplacian",
                             residual=residual)


def conductance_increment_bounds(expr: SpExpression, weights, path_leaves):
    """Conductance change from a +1 update along a self-avoiding path.

    ``path_leaves`` are the leaf indices of the reinforced path (length L).
    Returns (delta, 1/L, 1.0); the increment is guaranteed to lie within
    these bounds, which callers assert.
    """
    w0 = np.asarray(weights, dtype=np.float64).copy()
    w1 = w0.copy()
    for leaf in path_leaves:
        w1[leaf] += 1.0
    L = len(path_leaves)
    delta = sp_conductance(expr, w1) - sp_conductance(expr, w0)
    return delta, 1.0 / L, 1.0


# ---------------------------------------------------------------------------
# absorbing-chain probabilities
# ---------------------------------------------------------------------------

def _reaches(graph: Graph, start: int, stops: set) -> bool:
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        if u in stops:
            return True
        for _, v in graph.incident(u):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return False


def hitting_probability(graph: Graph, weights, start: int,
                        target: Iterable[int], avoid: Iterable[int]) -> float:
    """P(weighted walk from ``start`` hits ``target`` before ``avoid``).

    Exact dense absorbing-chain solve, no Monte Carlo.  Parallel edges
    contribute their summed weight to the transition rate.
    """
    w = _edge_weights(graph, weights)
    target = set(int(t) for t in target)
    avoid = set(int(a) for a in avoid)
    if target & avoid:
        raise ValueError("target and avoid must be disjoint")
    if start in target or start in avoid:
        raise ValueError("start must not be absorbing")
    absorbing = target | avoid
    if not _reaches(graph, start, absorbing):
        raise GraphError("start cannot reach target or avoid set")
    free = [v for v in range(graph.n_vertices) if v not in absorbing]
    idx = {v: i for i, v in enumerate(free)}
    n = len(free)
    A = np.eye(n)
    b = np.zeros(n)
    for v in free:
        tot = sum(w[eid] for eid, _ in graph.incident(v))
        for eid, u in graph.incident(v):
            p = w[eid] / tot
            if u in target:
                b[idx[v]] += p
            elif u in avoid:
                pass
            else:
                A[idx[v], idx[u]] -= p
    h = np.linalg.solve(A, b)
    return float(h[idx[start]])


def edge_crossing_probability(graph: Graph, weights, start: int,
                              success_edges: Iterable[int],
                              failure_edges: Iterable[int]) -> float:
    """P(the walk crosses a success edge before any failure edge).

    Both edge sets absorb the walk on first crossing (from either
    endpoint); all other edges are walked normally.  This is the building
    block for first-crossing decompositions on small graphs.
    """
    w = np.asarray(getattr(weights, "weights", weights), dtype=np.float64)
    if w.shape != (graph.n_edges,):
        raise ValueError(f"expected {graph.n_edges} edge weights")
    if np.any(w < 0):
        raise ValueError("edge weights must be nonnegative")
    succ = frozenset(int(e) for e in success_edges)
    fail = frozenset(int(e) for e in failure_edges)
    if succ & fail:
        raise ValueError("success and failure edges must be disjoint")
    n = graph.n_vertices
    # zero-weight edges are never crossed; restrict the system to vertices
    # reachable from start through positive, non-absorbing edges
    reach = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for eid, u in graph.incident(v):
            if w[eid] > 0 and eid not in succ and eid not in fail and u not in reach:
                reach.add(u)
                stack.append(u)
    A = np.eye(n)
    b = np.zeros(n)
    for v in reach:
        tot = sum(w[eid] for eid, _ in graph.incident(v))
        if tot <= 0:
            raise GraphError(f"vertex {v} has zero total weight")
        for eid, u in graph.incident(v):
            if w[eid] == 0:
                continue
            p = w[eid] / tot
            if eid in succ:
                b[v] += p
            elif eid in fail:
                pass
            else:
                A[v, u] -= p
    # vertices from which no absorbing edge is reachable would make the
    # system singular; the small graphs used here always absorb
    try:
        h = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        raise GraphError("walk is not almost-surely absorbed") from None
    return float(h[start])
