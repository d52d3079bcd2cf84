"""Finite weighted multigraphs, series-parallel grammar, geodesic structure.

Vertices are dense integers ``0..n_vertices-1`` and edges are identified by
dense integer ids ``0..|E|-1`` (edge ids, not endpoint pairs, carry the
weights, so parallel edges are first-class).  Two vertices are
distinguished: the nest N and the food F.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from collections import deque
from typing import Iterable, Optional, Sequence

import numpy as np


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    """Finite connected multigraph with nest/food marks.

    edges[i] is the endpoint pair (u, v) of edge id i.  Self-loops are
    rejected; parallel edges are allowed.
    """

    n_vertices: int
    edges: tuple
    nest: int
    food: int

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        if self.nest == self.food:
            raise GraphError("nest and food must differ")
        for x in (self.nest, self.food):
            if not (0 <= x < self.n_vertices):
                raise GraphError(f"marked vertex {x} out of range")
        for eid, (u, v) in enumerate(self.edges):
            if u == v:
                raise GraphError(f"edge {eid} is a self-loop")
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise GraphError(f"edge {eid} endpoint out of range")
        inc = [[] for _ in range(self.n_vertices)]
        for eid, (u, v) in enumerate(self.edges):
            inc[u].append((eid, v))
            inc[v].append((eid, u))
        object.__setattr__(self, "_incident", tuple(tuple(l) for l in inc))
        # connectivity
        seen = [False] * self.n_vertices
        seen[0] = True
        stack = [0]
        while stack:
            u = stack.pop()
            for _, w in inc[u]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        if not all(seen):
            raise GraphError("graph is not connected")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def incident(self, v: int):
        """Incident (edge_id, other_endpoint) pairs of vertex v."""
        return self._incident[v]

    def csr(self):
        """Flat incidence arrays for the compiled kernels.

        Returns (inc_ptr, inc_edge, inc_other, edge_u, edge_v), all int64.
        inc_edge[inc_ptr[v]:inc_ptr[v+1]] are the edge ids incident to v and
        inc_other the matching far endpoints.
        """
        deg = np.zeros(self.n_vertices + 1, dtype=np.int64)
        for u, v in self.edges:
            deg[u + 1] += 1
            deg[v + 1] += 1
        inc_ptr = np.cumsum(deg).astype(np.int64)
        inc_edge = np.empty(inc_ptr[-1], dtype=np.int64)
        inc_other = np.empty(inc_ptr[-1], dtype=np.int64)
        fill = inc_ptr[:-1].copy()
        for eid, (u, v) in enumerate(self.edges):
            inc_edge[fill[u]] = eid
            inc_other[fill[u]] = v
            fill[u] += 1
            inc_edge[fill[v]] = eid
            inc_other[fill[v]] = u
            fill[v] += 1
        edge_u = np.array([u for u, _ in self.edges], dtype=np.int64)
        edge_v = np.array([v for _, v in self.edges], dtype=np.int64)
        return inc_ptr, inc_edge, inc_other, edge_u, edge_v


# ---------------------------------------------------------------------------
# series-parallel grammar
# ---------------------------------------------------------------------------

class SpExpression:
    """Base class of the SP term algebra (Base | Series | Parallel)."""

    __slots__ = ()

    def n_leaves(self) -> int:
        raise NotImplementedError


@dataclass(frozen=True)
class Base(SpExpression):
    __slots__ = ()

    def n_leaves(self):
        return 1


@dataclass(frozen=True)
class Series(SpExpression):
    left: SpExpression
    right: SpExpression

    def n_leaves(self):
        return self.left.n_leaves() + self.right.n_leaves()


@dataclass(frozen=True)
class Parallel(SpExpression):
    left: SpExpression
    right: SpExpression

    def n_leaves(self):
        return self.left.n_leaves() + self.right.n_leaves()


class SpSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


def parse_sp(text: str) -> SpExpression:
    """Parse the grammar  expr := "e" | "S(expr,expr)" | "P(expr,expr)".

    Whitespace-insensitive.  Raises SpSyntaxError with the byte offset of
    the first offending character.
    """
    s = text
    pos = 0

    def skip_ws():
        nonlocal pos
        while pos < len(s) and s[pos].isspace():
            pos += 1

    def expect(ch: str):
        nonlocal pos
        skip_ws()
        if pos >= len(s) or s[pos] != ch:
            raise SpSyntaxError(f"expected {ch!r}", pos)
        pos += 1

    def expr() -> SpExpression:
        nonlocal pos
        skip_ws()
        if pos >= len(s):
            raise SpSyntaxError("unexpected end of input", pos)
        c = s[pos]
        if c == "e":
            pos += 1
            return Base()
        if c in "SP":
            kind = Series if c == "S" else Parallel
            pos += 1
            expect("(")
            a = expr()
            expect(",")
            b = expr()
            expect(")")
            return kind(a, b)
        raise SpSyntaxError(f"unexpected character {c!r}", pos)

    result = expr()
    skip_ws()
    if pos != len(s):
        raise SpSyntaxError("trailing input", pos)
    return result


def render_sp(expr: SpExpression) -> str:
    if isinstance(expr, Base):
        return "e"
    if isinstance(expr, Series):
        return f"S({render_sp(expr.left)},{render_sp(expr.right)})"
    if isinstance(expr, Parallel):
        return f"P({render_sp(expr.left)},{render_sp(expr.right)})"
    raise TypeError(f"not an SpExpression: {expr!r}")


def sp_to_graph(expr: SpExpression) -> Graph:
    """Flatten an SP term to a Graph.

    Edge ids follow the left-to-right order of the Base leaves, so leaf k of
    the expression is edge id k of the graph.  The overall source becomes
    the nest and the overall sink the food.
    """
    edges: list = []

    class _Uf:
        # tiny union-find over provisional vertex ids
        def __init__(self):
            self.parent = []

        def make(self):
            self.parent.append(len(self.parent))
            return len(self.parent) - 1

        def find(self, x):
            while self.parent[x] != x:
                self.parent[x] = self.parent[self.parent[x]]
                x = self.parent[x]
            return x

        def union(self, a, b):
            self.parent[self.find(a)] = self.find(b)

    uf = _Uf()

    def build(e) -> tuple:
        if isinstance(e, Base):
            s, t = uf.make(), uf.make()
            edges.append((s, t))
            return s, t
        s1, t1 = build(e.left)
        s2, t2 = build(e.right)
        if isinstance(e, Series):
            uf.union(t1, s2)
            return s1, t2
        if isinstance(e, Parallel):
            uf.union(s1, s2)
            uf.union(t1, t2)
            return s1, t1
        raise TypeError(f"not an SpExpression: {e!r}")

    source, sink = build(expr)
    roots = sorted({uf.find(i) for i in range(len(uf.parent))})
    remap = {r: i for i, r in enumerate(roots)}
    final_edges = [(remap[uf.find(u)], remap[uf.find(v)]) for u, v in edges]
    return Graph(
        n_vertices=len(roots),
        edges=tuple(final_edges),
        nest=remap[uf.find(source)],
        food=remap[uf.find(sink)],
    )


# ---------------------------------------------------------------------------
# distances and geodesic structure
# ---------------------------------------------------------------------------

def _bfs_dist(graph: Graph, start: int, allowed: Optional[frozenset]) -> list:
    dist = [-1] * graph.n_vertices
    dist[start] = 0
    q = deque([start])
    while q:
        u = q.popleft()
        for eid, w in graph.incident(u):
            if allowed is not None and eid not in allowed:
                continue
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                q.append(w)
    return dist


def h_min(graph: Graph) -> int:
    """Graph distance from nest to food."""
    d = _bfs_dist(graph, graph.nest, None)[graph.food]
    assert d >= 0  # graph is connected
    return d


def h_max(graph: Graph) -> int:
    """Length of the longest self-avoiding nest->food path.

    Exhaustive DFS with a visited set; exponential in the worst case, only
    meant for desk-scale graphs.
    """
    best = 0
    visited = [False] * graph.n_vertices
    visited[graph.nest] = True

    def dfs(u: int, length: int):
        nonlocal best
        if u == graph.food:
            best = max(best, length)
            return
        for _, w in graph.incident(u):
            if not visited[w]:
                visited[w] = True
                dfs(w, length + 1)
                visited[w] = False

    dfs(graph.nest, 0)
    if best == 0:
        raise GraphError("no nest->food path")
    return best


@dataclass(frozen=True)
class GeodesicDag:
    """Shortest-path structure from N to F within an edge subset.

    Counts are exact Python integers (they grow exponentially with graph
    size, and uniform sampling needs them exact).
    """

    reachable: bool
    length: Optional[int]
    dist_from_nest: tuple          # -1 where unreachable
    dist_from_food: tuple
    count_from_nest: tuple         # shortest paths N -> v, per vertex
    count_from_food: tuple
    total_geodesics: int

    def count_through(self, v: int) -> int:
        """Number of geodesics passing through vertex v."""
        if not self.reachable:
            return 0
        dn, df = self.dist_from_nest[v], self.dist_from_food[v]
        if dn < 0 or df < 0 or dn + df != self.length:
            return 0
        return self.count_from_nest[v] * self.count_from_food[v]


def geodesic_dag(graph: Graph, restrict_to: Optional[Iterable[int]] = None) -> GeodesicDag:
    """Shortest-path DAG and exact geodesic counts, optionally restricted.

    Parallel edges count as distinct paths.  If F is unreachable from N
    within the allowed edges the result has reachable=False.
    """
    allowed = None if restrict_to is None else frozenset(int(e) for e in restrict_to)
    dist_n = _bfs_dist(graph, graph.nest, allowed)
    dist_f = _bfs_dist(graph, graph.food, allowed)
    h = dist_n[graph.food]
    if h < 0:
        return GeodesicDag(False, None, tuple(dist_n), tuple(dist_f),
                           (0,) * graph.n_vertices, (0,) * graph.n_vertices, 0)

    def counts(dist: list) -> list:
        cnt = [0] * graph.n_vertices
        start = dist.index(0)
        cnt[start] = 1
        order = sorted((d, v) for v, d in enumerate(dist) if d > 0)
        for _, v in order:
            c = 0
            for eid, w in graph.incident(v):
                if allowed is not None and eid not in allowed:
                    continue
                if dist[w] == dist[v] - 1:
                    c += cnt[w]
            cnt[v] = c
        return cnt

    cn = counts(dist_n)
    cf = counts(dist_f)
    return GeodesicDag(True, h, tuple(dist_n), tuple(dist_f),
                       tuple(cn), tuple(cf), cn[graph.food])


def sample_geodesic(graph: Graph, dag: GeodesicDag, stream,
                    allowed: Optional[frozenset] = None) -> list:
    """Uniform geodesic as an edge-id list N->F, by backward count sampling.

    Consumes exactly ``dag.length`` uniforms from the stream (one per
    backward level, even when the choice is forced, so the draw protocol
    matches the compiled engine).
    """
    if not dag.reachable:
        raise GraphError("no geodesic to sample")
    dist_n = dag.dist_from_nest
    cn = dag.count_from_nest
    path = []
    v = graph.food
    while v != graph.nest:
        options = []  # (eid, u, count)
        total = 0
        for eid, u in graph.incident(v):
            if allowed is not None and eid not in allowed:
                continue
            if dist_n[u] == dist_n[v] - 1 and cn[u] > 0:
                options.append((eid, u, cn[u]))
                total += cn[u]
        # float threshold selection; counts are validated to stay below
        # 2^53 by callers that need bit-parity with the compiled kernel
        r = stream.uniform() * total
        acc = 0.0
        chosen = options[-1]
        for opt in options:
            acc += opt[2]
            if r < acc:
                chosen = opt
                break
        path.append(chosen[0])
        v = chosen[1]
    path.reverse()
    return path


# ---------------------------------------------------------------------------
# named graphs
# ---------------------------------------------------------------------------

def losange() -> Graph:
    """The 4-vertex, 5-edge diamond with a middle rung.

    Vertices: 0 = N, 1 = left, 2 = right, 3 = F.  Edge ids 0..4 correspond
    to the conventional labels 1..5: 1 = N-left, 2 = left-F, 3 =
    left-right (the middle edge), 4 = N-right, 5 = right-F.
    """
    return Graph(4, ((0, 1), (1, 3), (1, 2), (0, 2), (2, 3)), nest=0, food=3)


def counterexample(L: int) -> Graph:
    """Two disjoint length-L paths from N to a hub P, plus one edge P-F.

    Every nest->food path has length L+1 and is a geodesic.  Vertices:
    0 = N, then L-1 interior vertices per side, then P, then F.  Edge ids
    0..L-1 run along the left side (N first), L..2L-1 along the right
    side, and 2L is the P-F edge.
    """
    if L < 1:
        raise GraphError("L must be >= 1")
    n = 2 * L + 1
    P = 2 * L - 1
    F = 2 * L
    edges = []
    for side in range(2):
        prev = 0
        for i in range(1, L):
            v = side * (L - 1) + i
            edges.append((prev, v))
            prev = v
        edges.append((prev, P))
    edges.append((P, F))
    return Graph(n, tuple(edges), nest=0, food=F)


def sublinear_demo() -> Graph:
    """Theta graph used for the sub/super-linear exponent discussion.

    A direct N-F edge (id 0) in parallel with a two-edge path through a
    middle vertex (ids 1, 2); that is, P(e, S(e, e)).  The exact wiring of
    this demonstration graph is a convention of this package.
    """
    return sp_to_graph(Parallel(Base(), Series(Base(), Base())))


def double_sierpinski(depth: int) -> Graph:
    """Two depth-``depth`` Sierpinski gaskets glued along their bases.

    Convention (the source description fixes only "two gaskets of the same
    fractal depth whose bases have been merged"): the shared base is the
    full bottom side of each gasket, identified vertex-by-vertex and
    edge-by-edge; N is the top apex and F the bottom apex.
    """
    if depth < 1:
        raise GraphError("depth must be >= 1")
    scale = 2 ** depth
    # integer coordinates: base from (0,0) to (2*scale,0), apex at (scale, scale)
    tri_edges = set()

    def subdivide(a, b, c, d):
        # a,b,c are corner points (x,y); base corners a,b then apex c
        if d == 0:
            for p, q in ((a, b), (b, c), (a, c)):
                tri_edges.add((min(p, q), max(p, q)))
            return
        ab = ((a[0] + b[0]) // 2, (a[1] + b[1]) // 2)
        bc = ((b[0] + c[0]) // 2, (b[1] + c[1]) // 2)
        ac = ((a[0] + c[0]) // 2, (a[1] + c[1]) // 2)
        subdivide(a, ab, ac, d - 1)
        subdivide(ab, b, bc, d - 1)
        subdivide(ac, bc, c, d - 1)

    top_apex = (scale, scale)
    subdivide((0, 0), (2 * scale, 0), top_apex, depth)
    # mirror below the base; base-line points (y=0) coincide and merge
    for (p, q) in list(tri_edges):
        mp = (p[0], -p[1])
        mq = (q[0], -q[1])
        tri_edges.add((min(mp, mq), max(mp, mq)))
    points = sorted({p for e in tri_edges for p in e})
    index = {p: i for i, p in enumerate(points)}
    edges = tuple(sorted((index[p], index[q]) for p, q in tri_edges))
    return Graph(len(points), edges,
                 nest=index[top_apex], food=index[(scale, -scale)])


# ---------------------------------------------------------------------------
# graph file format
# ---------------------------------------------------------------------------

def write_graph(graph: Graph, path) -> None:
    lines = []
    for v in range(graph.n_vertices):
        lines.append(f"vertex {v}")
    for eid, (u, v) in enumerate(graph.edges):
        lines.append(f"edge {eid} {u} {v}")
    lines.append(f"nest {graph.nest}")
    lines.append(f"food {graph.food}")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def read_graph(path) -> Graph:
    """Line-oriented format: vertex/edge/nest/food records, '#' comments.

    Vertex ids may be arbitrary tokens; they are mapped to dense integers
    in order of declaration.  Edge ids must be dense 0..|E|-1.
    """
    vmap: dict = {}
    edges: dict = {}
    nest = food = None

    def vid(token: str) -> int:
        if token not in vmap:
            raise GraphError(f"undeclared vertex {token!r}")
        return vmap[token]

    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "vertex" and len(parts) == 2:
                    if parts[1] in vmap:
                        raise GraphError(f"duplicate vertex {parts[1]!r}")
                    vmap[parts[1]] = len(vmap)
                elif parts[0] == "edge" and len(parts) == 4:
                    eid = int(parts[1])
                    if eid in edges:
                        raise GraphError(f"duplicate edge id {eid}")
                    edges[eid] = (vid(parts[2]), vid(parts[3]))
                elif parts[0] == "nest" and len(parts) == 2:
                    nest = vid(parts[1])
                elif parts[0] == "food" and len(parts) == 2:
                    food = vid(parts[1])
                else:
                    raise GraphError(f"unrecognized record {parts[0]!r}")
            except GraphError as e:
                raise GraphError(f"{path}:{lineno}: {e}") from None
    if nest is None or food is None:
        raise GraphError(f"{path}: nest/food not declared")
    if sorted(edges) != list(range(len(edges))):
        raise GraphError(f"{path}: edge ids must be dense 0..{len(edges) - 1}")
    return Graph(len(vmap), tuple(edges[i] for i in range(len(edges))),
                 nest=nest, food=food)
