"""Exact drift and fast simulation for the two-geodesic ladder graph.

The graph (``graphs.counterexample``) consists of two disjoint N->P paths
of L edges each, plus a single edge P->F.  Under the uniform-geodesic
rule every reinforcement hits either the whole left path or the whole
right path (plus the P->F edge), so the process collapses to a
one-dimensional urn on the left-side weight N1(n).  The increment
probability p(x), with x = N1(n)/(n+2), is computed exactly here by a
sparse absorbing-chain solve, and the urn is simulated with a compiled
kernel using a spline interpolant of p.

The key reduction: within either side all edges share one weight, so a
walk restricted to a side is a simple symmetric gambler's ruin, and the
only state that matters for covering a side is which hub (N or P) the
walk sits at plus how deep its excursions have reached into that side
from each end.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from numba import njit, uint64
from scipy import sparse
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import spsolve

from .rng import derive_key, philox_uniform


def excursion_law(L: int) -> np.ndarray:
    """Max-depth law of a side excursion that returns to its entry hub.

    A walk entering a length-L path at depth 1 is a symmetric gambler's
    ruin.  Entry m of the returned array (m = 1..L-1) is the probability
    that the walk returns to depth 0 with maximal depth exactly m; the
    remaining mass 1/L is the probability of crossing to the far end.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    q = np.zeros(L, dtype=np.float64)  # q[m], m = 1..L-1 used
    for m in range(1, L):
        q[m] = (1.0 / m) * (L - m) / L - (1.0 / (m + 1)) * (L - m - 1) / L
    return q


@dataclass(frozen=True)
class _ChainStructure:
    """Index arrays of the uncovered-left absorbing chain, reusable
    across weight values x (only the data vector depends on x)."""

    L: int
    n_states: int
    rows: np.ndarray
    cols: np.ndarray
    base: np.ndarray   # x-independent factor (excursion/crossing mass)
    kind: np.ndarray   # 0: N-left, 1: N-right, 2: P-left, 3: P-right
    b_rows: np.ndarray  # states with a direct P->F exit


_structure_cache: dict = {}


def _chain_structure(L: int) -> _ChainStructure:
    if L in _structure_cache:
        return _structure_cache[L]
    q = excursion_law(L)
    stay = (L - 1) / L
    cross = 1.0 / L
    # states (hub, i, d) with i + d < L; i = max depth reached from N
    # into the left path, d = max depth reached from P
    index = {}
    for h in (0, 1):
        for i in range(L):
            for d in range(L - i):
                index[(h, i, d)] = len(index)
    rows, cols, base, kind = [], [], [], []

    def add(s, t, mass, k):
        rows.append(index[s])
        cols.append(index[t])
        base.append(mass)
        kind.append(k)

    for (h, i, d), sid in index.items():
        if h == 0:  # at N
            # right-side excursion: stays internal to the right path
            add((0, i, d), (0, i, d), stay, 1)
            add((0, i, d), (1, i, d), cross, 1)
            # left-side excursion returning with max depth m
            for m in range(1, L):
                ii = max(i, m)
                if ii + d < L:
                    add((0, i, d), (0, ii, d), q[m], 0)
            # crossing N->P on the left covers the whole side: sink
        else:  # at P
            add((1, i, d), (1, i, d), stay, 3)
            add((1, i, d), (0, i, d), cross, 3)
            for m in range(1, L):
                dd = max(d, m)
                if i + dd < L:
                    add((1, i, d), (1, i, dd), q[m], 2)
    b_rows = np.array([sid for (h, _, _), sid in index.items() if h == 1],
                      dtype=np.int64)
    st = _ChainStructure(L=L, n_states=len(index),
                         rows=np.array(rows, dtype=np.int64),
                         cols=np.array(cols, dtype=np.int64),
                         base=np.array(base, dtype=np.float64),
                         kind=np.array(kind, dtype=np.int64),
                         b_rows=b_rows)
    _structure_cache[L] = st
    return st


def left_uncovered_probability(L: int, x: float, c: float = 1.0) -> float:
    """P(the walk reaches F without ever covering the whole left path).

    ``x`` is the per-edge weight of the left path, 1-x of the right
    path, and ``c`` of the P->F edge.  Exact up to the sparse solve.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if c <= 0:
        raise ValueError("c must be positive")
    if x == 0.0:
        return 1.0  # the left side is never entered
    if x == 1.0:
        return 0.0  # the first N->P passage uses the left side
    st = _chain_structure(L)
    hub_total = 1.0 + c  # at P: left x + right (1-x) + food edge c
    factors = np.array([x, 1.0 - x, x / hub_total, (1.0 - x) / hub_total])
    data = st.base * factors[st.kind]
    T = sparse.coo_matrix((data, (st.rows, st.cols)),
                          shape=(st.n_states, st.n_states)).tocsr()
    b = np.zeros(st.n_states)
    b[st.b_rows] = c / hub_total
    u = spsolve(sparse.eye(st.n_states, format="csr") - T, b)
    start = 0  # (hub=N, i=0, d=0) is the first state inserted
    return float(u[start])


def p_exact(L: int, x: float, c: float = 1.0) -> float:
    """Probability that one walk reinforces the left geodesic.

    Every walk covers at least one side (its first N->P passage runs
    along one of them), so with U_s the probability of finishing with
    side s uncovered,
        p = P(only left covered) + (1/2) P(both covered)
          = (1 - U_left + U_right) / 2,
    and by the left/right relabeling U_right(x) = U_left(1-x).
    """
    u_left = left_uncovered_probability(L, x, c)
    u_right = left_uncovered_probability(L, 1.0 - x, c)
    return 0.5 * (1.0 - u_left + u_right)


def drift_exact(L: int, x: float, c: float = 1.0) -> float:
    """One-step drift F(x) = p(x) - x of the normalized left weight."""
    return p_exact(L, x, c) - x


def drift_table(L: int, xs: Sequence[float], c: float = 1.0) -> np.ndarray:
    """F(x) on a grid, as an array of rows (x, p(x), F(x))."""
    out = np.empty((len(xs), 3))
    for k, x in enumerate(xs):
        p = p_exact(L, x, c)
        out[k] = (x, p, p - x)
    return out


# ---------------------------------------------------------------------------
# urn-level simulation
# ---------------------------------------------------------------------------

DEFAULT_GRID_SIZE = 41


def p_interpolator(L: int, n_grid: int = DEFAULT_GRID_SIZE,
                   c: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """Dense tabulation of p on [0, 1] for spline evaluation.

    The grid is symmetric under x -> 1-x; only half the absorbing-chain
    solves are needed because p(1-x) = 1 - p(x).
    """
    if n_grid < 5 or n_grid % 2 == 0:
        raise ValueError("n_grid must be odd and >= 5")
    grid = np.linspace(0.0, 1.0, n_grid)
    vals = np.empty(n_grid)
    half = n_grid // 2
    for k in range(half + 1):
        vals[k] = p_exact(L, float(grid[k]), c)
    vals[half + 1:] = 1.0 - vals[:half][::-1]
    return grid, vals


@njit(cache=False)
def _urn_sim_kernel(n_steps, n1_0, fine_x, fine_p, key0, key1, counter,
                    record_steps, rec_out):
    n1 = n1_0
    ctr = uint64(counter)
    rec_idx = 0
    n_rec = record_steps.shape[0]
    for n in range(n_steps):
        x = n1 / (n + 2.0)
        p = np.interp(x, fine_x, fine_p)
        u = philox_uniform(ctr, key0, key1)
        ctr = ctr + uint64(1)
        if u < p:
            n1 += 1
        if rec_idx < n_rec and record_steps[rec_idx] == n + 1:
            rec_out[rec_idx] = n1
            rec_idx += 1
    return n1


_table_cache: dict = {}


def _fine_table(L: int, n_grid: int, c: float) -> Tuple[np.ndarray, np.ndarray]:
    """Cubic-spline resampling of the p tabulation, cached per (L, n_grid, c).

    The absorbing-chain solves dominate the cost, so replicas of the
    same experiment share one table.
    """
    key = (L, n_grid, c)
    if key not in _table_cache:
        grid, vals = p_interpolator(L, n_grid, c)
        spline = CubicSpline(grid, vals)
        fine_x = np.linspace(0.0, 1.0, 2 ** 14 + 1)
        fine_p = np.clip(spline(fine_x), 0.0, 1.0)
        _table_cache[key] = (fine_x, fine_p)
    return _table_cache[key]


@dataclass(frozen=True)
class CounterexampleRun:
    """Urn-level trajectory of the left-side weight N1(n)."""

    L: int
    n_steps: int
    master_seed: int
    replica: int
    record_steps: np.ndarray
    recorded_n1: np.ndarray
    final_n1: int

    @property
    def terminal_fraction(self) -> float:
        return self.final_n1 / self.n_steps


def simulate_left_fraction(L: int, n_steps: int, master_seed: int,
                           replica: int = 0,
                           record_steps: Optional[Sequence[int]] = None,
                           n_grid: int = 201) -> CounterexampleRun:
    """Simulate N1(n) through the exact one-dimensional reduction.

    Because each walk reinforces a full side, the pair (N1, N2) is a
    Markov chain and N1 increments with probability p(N1/(n+2)): the
    urn below has exactly the law of the left-side weight in the full
    walk process.  p is evaluated through a dense cubic-spline
    tabulation (absorbing-chain values on ``n_grid`` points, resampled
    to 2^14 points for linear interpolation inside the kernel).
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    fine_x, fine_p = _fine_table(L, n_grid if n_grid % 2 == 1 else n_grid + 1,
                                 1.0)
    if record_steps is None:
        rec = np.empty(0, dtype=np.int64)
    else:
        rec = np.unique(np.asarray(record_steps, dtype=np.int64))
        if rec.size and (rec[0] < 1 or rec[-1] > n_steps):
            raise ValueError("record steps must lie in [1, n_steps]")
    out = np.empty(rec.shape[0], dtype=np.int64)
    k0, k1 = derive_key(master_seed, replica)
    final = _urn_sim_kernel(np.int64(n_steps), np.int64(1), fine_x, fine_p,
                            np.uint32(k0), np.uint32(k1), np.uint64(0),
                            rec, out)
    return CounterexampleRun(L=L, n_steps=n_steps, master_seed=master_seed,
                             replica=replica, record_steps=rec,
                             recorded_n1=out, final_n1=int(final))
