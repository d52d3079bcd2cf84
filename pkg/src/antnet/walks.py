"""Killed weighted random walks and the ant-process driver.

One process step is: sample a walk from N killed at F, extract a
reinforced edge set from its trace according to the rule, add +1 (or the
crossing multiplicity) to the chosen edges.  Two engines implement this:

* a compiled kernel (``antnet._fastwalk``), used by default;
* a pure-Python reference in this module, kept deliberately simple.

Both consume uniforms from the same counter-based stream in the same
order — one per walk step, plus one per backward level when sampling a
uniform geodesic — so their weight trajectories are bit-identical; the
tests rely on this to validate the kernel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .graphs import Graph, GraphError, geodesic_dag, sample_geodesic, h_min
from .rng import PhiloxStream, derive_key
from . import _fastwalk

VARIANTS = ("LoopErased", "UniformGeodesic", "FullTrace",
            "FullTraceMultiplicity", "EarliestGeodesic")
_VARIANT_CODE = {name: i for i, name in enumerate(VARIANTS)}

DEFAULT_STEP_CAP = 10 ** 7


class CapExceeded(RuntimeError):
    """A single walk exceeded the step cap; the replica must be aborted.

    Walks are almost surely finite but have unbounded length, so a cap
    with a loud failure is the only unbiased way to bound runtime.
    """

    def __init__(self, step_index: int, step_cap: int):
        super().__init__(
            f"walk at process step {step_index} exceeded step cap {step_cap}")
        self.step_index = step_index
        self.step_cap = step_cap


class GeodesicCountOverflow(RuntimeError):
    """A trace had more than 2^53 geodesics; exact sampling impossible."""


@dataclass(frozen=True)
class ReinforcementRule:
    variant: str = "UniformGeodesic"
    alpha: float = 1.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; "
                             f"expected one of {VARIANTS}")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    @property
    def code(self) -> int:
        return _VARIANT_CODE[self.variant]


@dataclass(frozen=True)
class WeightState:
    """Exact integer edge weights after n reinforcements."""

    weights: np.ndarray
    n: int

    @classmethod
    def initial(cls, graph: Graph) -> "WeightState":
        return cls(np.ones(graph.n_edges, dtype=np.int64), 0)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.int64)
        object.__setattr__(self, "weights", w)
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")


@dataclass(frozen=True)
class WalkTrace:
    """Vertex and edge sequences of one killed walk."""

    vertices: tuple   # X_0 = N, ..., X_K = F
    edges: tuple      # crossed edge ids, length K

    def edge_set(self) -> frozenset:
        return frozenset(self.edges)

    def multiplicities(self) -> dict:
        out: dict = {}
        for e in self.edges:
            out[e] = out.get(e, 0) + 1
        return out


@dataclass(frozen=True)
class ReinforcedPath:
    """Edge ids to reinforce; ordered N->F for the path-valued rules."""

    edges: tuple
    increments: tuple  # +1 per edge, or crossing counts for multiplicity

    @classmethod
    def unit(cls, edges) -> "ReinforcedPath":
        edges = tuple(edges)
        return cls(edges, (1,) * len(edges))


def _float_weights(weights: np.ndarray, alpha: float) -> np.ndarray:
    w = weights.astype(np.float64)
    return w if alpha == 1.0 else w ** alpha


def sample_walk(graph: Graph, weights: WeightState, alpha: float,
                stream: PhiloxStream,
                step_cap: int = DEFAULT_STEP_CAP) -> WalkTrace:
    """One killed walk N->F; steps choose incident edges ~ weight^alpha."""
    if np.any(weights.weights <= 0):
        raise ValueError("sample_walk needs strictly positive weights")
    wpow = _float_weights(weights.weights, alpha)
    verts = [graph.nest]
    edges = []
    v = graph.nest
    k = 0
    while v != graph.food:
        if k >= step_cap:
            raise CapExceeded(0, step_cap)
        inc = graph.incident(v)
        tot = 0.0
        for eid, _ in inc:
            tot += wpow[eid]
        r = stream.uniform() * tot
        acc = 0.0
        ce, cu = inc[-1]
        for eid, u in inc:
            acc += wpow[eid]
            if r < acc:
                ce, cu = eid, u
                break
        edges.append(ce)
        verts.append(cu)
        v = cu
        k += 1
    return WalkTrace(tuple(verts), tuple(edges))


def loop_erased_backward(trace: WalkTrace) -> ReinforcedPath:
    """Loop-erasure of the time-reversed trajectory.

    Implemented by the first-visit observation: walking back from F and
    always taking the edge by which the walker *first* arrived at the
    current vertex reproduces the latest-occurrence index recursion on the
    reversed walk.  Output is ordered N->F.
    """
    first = {}
    for i, v in enumerate(trace.vertices):
        if v not in first:
            first[v] = i
    nest = trace.vertices[0]
    path = []
    v = trace.vertices[-1]
    while v != nest:
        j = first[v]
        path.append(trace.edges[j - 1])
        v = trace.vertices[j - 1]
    path.reverse()
    return ReinforcedPath.unit(path)


def geodesic_in_trace(graph: Graph, trace: WalkTrace,
                      stream: PhiloxStream) -> ReinforcedPath:
    """Uniform sample among all geodesics of the trace subgraph."""
    allowed = trace.edge_set()
    dag = geodesic_dag(graph, allowed)
    if not dag.reachable:
        raise GraphError("food not reachable inside trace")  # impossible
    edges = sample_geodesic(graph, dag, stream, allowed)
    return ReinforcedPath.unit(edges)


def earliest_geodesic_backward(graph: Graph, trace: WalkTrace) -> ReinforcedPath:
    """Backward walk on the union of trace geodesics, earliest edge first.

    At each backward level, among the trace edges that lie on some
    shortest N->F path of the trace and step one level toward N, the one
    the walker crossed first is taken.  Deterministic given the trace.
    """
    allowed = trace.edge_set()
    dag = geodesic_dag(graph, allowed)
    if not dag.reachable:
        raise GraphError("food not reachable inside trace")
    efirst = {}
    for i, e in enumerate(trace.edges):
        if e not in efirst:
            efirst[e] = i
    h = dag.length
    dn, df = dag.dist_from_nest, dag.dist_from_food
    path = []
    v = graph.food
    while v != graph.nest:
        best = None
        for eid, y in graph.incident(v):
            if eid not in allowed:
                continue
            if dn[y] >= 0 and dn[y] + 1 == dn[v] and df[v] >= 0 \
                    and dn[y] + 1 + df[v] == h:
                if best is None or efirst[eid] < efirst[best[0]]:
                    best = (eid, y)
        path.append(best[0])
        v = best[1]
    path.reverse()
    return ReinforcedPath.unit(path)


def extract_path(graph: Graph, trace: WalkTrace, rule: ReinforcementRule,
                 stream: PhiloxStream) -> ReinforcedPath:
    if rule.variant == "LoopErased":
        return loop_erased_backward(trace)
    if rule.variant == "UniformGeodesic":
        return geodesic_in_trace(graph, trace, stream)
    if rule.variant == "EarliestGeodesic":
        return earliest_geodesic_backward(graph, trace)
    mult = trace.multiplicities()
    edges = []
    seen = set()
    for e in trace.edges:  # first-crossing order, matching the kernel
        if e not in seen:
            seen.add(e)
            edges.append(e)
    if rule.variant == "FullTrace":
        return ReinforcedPath.unit(edges)
    return ReinforcedPath(tuple(edges), tuple(mult[e] for e in edges))


def apply_reinforcement(weights: WeightState, path: ReinforcedPath,
                        rule: ReinforcementRule) -> WeightState:
    """+1 per distinct chosen edge (+k for the multiplicity rule)."""
    w = weights.weights.copy()
    for e, inc in zip(path.edges, path.increments):
        w[e] += inc
    return WeightState(w, weights.n + 1)


# ---------------------------------------------------------------------------
# recording schedules and the process driver
# ---------------------------------------------------------------------------

def geometric_schedule(n_steps: int, ratio: float = 1.1) -> np.ndarray:
    """Record steps ceil(ratio^k), deduplicated, always including n_steps."""
    if ratio <= 1.0:
        raise ValueError("ratio must exceed 1")
    pts = set()
    x = 1.0
    while True:
        v = int(np.ceil(x))
        if v >= n_steps:
            break
        pts.add(v)
        x *= ratio
    pts.add(n_steps)
    return np.array(sorted(pts), dtype=np.int64)


def linear_schedule(n_steps: int, stride: int = 1) -> np.ndarray:
    out = np.arange(stride, n_steps + 1, stride, dtype=np.int64)
    if out.size == 0 or out[-1] != n_steps:
        out = np.append(out, n_steps).astype(np.int64)
    return out


@dataclass
class RunResult:
    """Trajectory record of one replica."""

    graph: Graph
    rule: ReinforcementRule
    n_steps: int
    master_seed: int
    replica: int
    record_steps: np.ndarray       # step indices of the weight snapshots
    recorded_weights: np.ndarray   # shape (len(record_steps), n_edges), int64
    final_weights: np.ndarray
    path_lengths: np.ndarray       # per step: reinforced-path length
    geodesic_flags: np.ndarray     # per step: reinforced set is a G-geodesic
    masks: Optional[np.ndarray]    # per step: reinforced-edge bitmask (E<=64)

    def normalized(self) -> np.ndarray:
        """Recorded weights divided by n+2 (losange normalization)."""
        return self.recorded_weights / (self.record_steps[:, None] + 2.0)


def run_process(graph: Graph, rule: ReinforcementRule, n_steps: int,
                master_seed: int, replica: int = 0,
                record_steps: Optional[Sequence[int]] = None,
                step_cap: int = DEFAULT_STEP_CAP,
                reinforce: bool = True,
                engine: str = "fast",
                initial_weights: Optional[np.ndarray] = None) -> RunResult:
    """Run n_steps of the ant process on one replica's private stream.

    ``record_steps`` defaults to the geometric schedule.  ``reinforce=False``
    keeps the weights frozen (i.i.d. walk sampling at fixed weights, used
    by the Monte-Carlo cross-checks); the per-step outputs are still
    recorded.  ``initial_weights`` overrides the all-ones start (integer,
    strictly positive).  ``engine`` selects "fast" (compiled) or
    "reference".
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if initial_weights is None:
        w0 = np.ones(graph.n_edges, dtype=np.int64)
    else:
        w0 = np.asarray(initial_weights, dtype=np.int64).copy()
        if w0.shape != (graph.n_edges,) or np.any(w0 <= 0):
            raise ValueError("initial_weights must be positive, one per edge")
    if record_steps is None:
        record_steps = geometric_schedule(n_steps)
    rec = np.asarray(record_steps, dtype=np.int64)
    if rec.size and (np.any(np.diff(rec) <= 0) or rec[0] < 1 or rec[-1] > n_steps):
        raise ValueError("record_steps must be strictly increasing in [1, n_steps]")
    hmin = h_min(graph)

    if engine == "fast":
        inc_ptr, inc_edge, inc_other, _, _ = graph.csr()
        weights = w0
        rec_weights = np.empty((rec.size, graph.n_edges), dtype=np.int64)
        path_len = np.empty(n_steps, dtype=np.int64)
        geo_flag = np.empty(n_steps, dtype=np.uint8)
        masks = np.empty(n_steps, dtype=np.uint64)
        key0, key1 = derive_key(master_seed, replica)
        status, steps_done, _ = _fastwalk.run_kernel(
            inc_ptr, inc_edge, inc_other,
            np.int64(graph.nest), np.int64(graph.food), np.int64(hmin),
            weights, np.float64(rule.alpha), np.int64(rule.code),
            np.int64(n_steps), np.int64(step_cap),
            np.uint32(key0), np.uint32(key1), np.uint64(0),
            rec, rec_weights, path_len, geo_flag, masks,
            np.uint8(1 if reinforce else 0))
        if status == 1:
            raise CapExceeded(int(steps_done), step_cap)
        if status == 2:
            raise GeodesicCountOverflow(
                f"geodesic count exceeded 2^53 at step {int(steps_done)}")
        if graph.n_edges > 64:
            masks = None
    elif engine == "reference":
        stream = PhiloxStream(master_seed, replica)
        state = WeightState(w0, 0)
        rec_weights = np.empty((rec.size, graph.n_edges), dtype=np.int64)
        path_len = np.empty(n_steps, dtype=np.int64)
        geo_flag = np.empty(n_steps, dtype=np.uint8)
        masks = np.empty(n_steps, dtype=np.uint64) if graph.n_edges <= 64 else None
        rec_idx = 0
        for s in range(n_steps):
            try:
                trace = sample_walk(graph, state, rule.alpha, stream, step_cap)
            except CapExceeded:
                raise CapExceeded(s, step_cap) from None
            path = extract_path(graph, trace, rule, stream)
            if rule.variant == "FullTraceMultiplicity":
                path_len[s] = len(trace.edges)
            else:
                path_len[s] = len(path.edges)
            if rule.variant in ("FullTrace", "FullTraceMultiplicity"):
                dag = geodesic_dag(graph, trace.edge_set())
                geo_flag[s] = 1 if dag.reachable and dag.length == hmin else 0
            else:
                geo_flag[s] = 1 if len(path.edges) == hmin else 0
            if masks is not None:
                m = 0
                for e in path.edges:
                    m |= 1 << e
                masks[s] = m
            if reinforce:
                state = apply_reinforcement(state, path, rule)
            if rec_idx < rec.size and rec[rec_idx] == s + 1:
                rec_weights[rec_idx] = state.weights
                rec_idx += 1
        weights = state.weights
    else:
        raise ValueError(f"unknown engine {engine!r}")

    return RunResult(graph=graph, rule=rule, n_steps=n_steps,
                     master_seed=master_seed, replica=replica,
                     record_steps=rec, recorded_weights=rec_weights,
                     final_weights=weights, path_lengths=path_len,
                     geodesic_flags=geo_flag, masks=masks)
