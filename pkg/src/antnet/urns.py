"""Urn processes with exact oracles.

Four single-urn dynamics are provided behind one ``UrnSpec`` interface:
the classical Pólya urn, a Friedman-like urn whose increment probability
is a rational function of the current fraction, a generalized urn driven
by a pair of rate functions (phi, psi), and a slowly growing urn whose
count increases like n^(1/5).

Three independent ways of looking at the same laws keep each other
honest: direct Bernoulli stepping from a counter-based uniform stream,
an exact dynamic-programming distribution oracle for small horizons, and
Rubin's competing-exponential embedding, which reproduces the discrete
law through continuous-time clocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from numba import njit, uint64

from .rng import PhiloxStream, derive_key, philox_uniform

KINDS = ("Polya", "FriedmanLike", "Generalized", "JansonFifth")

_KIND_CODE = {name: i for i, name in enumerate(KINDS)}


class UrnError(ValueError):
    """Invalid urn specification or state."""


@dataclass(frozen=True)
class UrnSpec:
    """One-parameter-family description of a single urn process.

    ``state`` is the integer count R_n of reinforced draws; ``n`` is the
    step index.  The transition probability must lie in [0, 1] for every
    reachable state, which ``transition_probability`` enforces.
    """

    kind: str
    initial_state: int = 1
    # Generalized parameters
    b: float = 1.0
    c0: float = 5.0
    h: float = 1.0
    alpha: float = 2.0 / 3.0
    c2: float = 1.0
    # JansonFifth parameter
    n0: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UrnError(f"unknown urn kind {self.kind!r}")
        if self.initial_state < 0:
            raise UrnError("initial state must be nonnegative")
        if self.kind in ("Polya", "FriedmanLike") and self.initial_state > 1:
            raise UrnError(f"{self.kind} starts from at most one reinforced draw")
        if self.kind == "Generalized":
            if self.c0 <= 0 or self.h <= 0 or self.c2 <= 0:
                raise UrnError("Generalized urn needs positive c0, h, c2")
            if not 0.0 < self.alpha < 1.0:
                raise UrnError("Generalized urn needs alpha in (0, 1)")
        if self.kind == "JansonFifth" and self.n0 < 0:
            raise UrnError("JansonFifth needs n0 >= 0")

    # -- convenience constructors ------------------------------------
    @staticmethod
    def polya() -> "UrnSpec":
        return UrnSpec("Polya", initial_state=1)

    @staticmethod
    def friedman_like() -> "UrnSpec":
        return UrnSpec("FriedmanLike", initial_state=1)

    @staticmethod
    def generalized(b: float = 1.0, c0: float = 5.0, h: float = 1.0,
                    alpha: float = 2.0 / 3.0, c2: float = 1.0) -> "UrnSpec":
        return UrnSpec("Generalized", initial_state=0,
                       b=b, c0=c0, h=h, alpha=alpha, c2=c2)

    @staticmethod
    def janson_fifth(n0: int = 0) -> "UrnSpec":
        return UrnSpec("JansonFifth", initial_state=1, n0=n0)

    def phi(self, i: float) -> float:
        """Rate of the reinforced clock (Generalized kind)."""
        return max(self.c0, (i - self.b * i ** self.alpha) / self.h)

    def psi(self, i: float) -> float:
        """Rate of the competing clock (Generalized kind)."""
        return self.alpha * (i + self.c2) / self.h

    def transition_probability(self, state: int, n: int) -> float:
        """P(R_{n+1} = state + 1 | R_n = state)."""
        if state < 0 or state > self.initial_state + n:
            raise UrnError(f"state {state} unreachable at step {n}")
        if self.kind == "Polya":
            p = state / (n + 2)
        elif self.kind == "FriedmanLike":
            z = state / (n + 2)
            p = z * (z * z + 0.5) / (z + 0.5)
        elif self.kind == "Generalized":
            a = self.phi(state)
            c = self.psi(n - state) if n - state > 0 else self.psi(0)
            p = a / (a + c)
        else:  # JansonFifth
            u = state
            denom = n + self.n0 + 2 - u + u / 5.0
            if denom <= 0:
                raise UrnError(f"invalid JansonFifth state {u} at step {n}")
            p = (u / 5.0) / denom
        if not 0.0 <= p <= 1.0:
            raise UrnError(f"transition probability {p} outside [0, 1]")
        return p

    def _params(self) -> np.ndarray:
        return np.array([self.b, self.c0, self.h, self.alpha, self.c2,
                         float(self.n0)], dtype=np.float64)


@dataclass(frozen=True)
class UrnTrajectory:
    """States R_0 .. R_n of one urn run."""

    states: np.ndarray

    def __post_init__(self):
        inc = np.diff(self.states)
        if inc.size and not np.all((inc == 0) | (inc == 1)):
            raise UrnError("urn increments must be 0 or 1")

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.states)

    @property
    def final(self) -> int:
        return int(self.states[-1])


def urn_step(spec: UrnSpec, state: int, n: int, stream: PhiloxStream) -> int:
    """One Bernoulli transition, consuming exactly one uniform."""
    p = spec.transition_probability(state, n)
    return state + 1 if stream.uniform() < p else state


def urn_trajectory(spec: UrnSpec, n_steps: int,
                   stream: PhiloxStream) -> UrnTrajectory:
    """Full state path by repeated urn_step; intended for small n."""
    states = np.empty(n_steps + 1, dtype=np.int64)
    states[0] = spec.initial_state
    r = spec.initial_state
    for n in range(n_steps):
        r = urn_step(spec, r, n, stream)
        states[n + 1] = r
    return UrnTrajectory(states)


def coupled_run(spec_a: UrnSpec, spec_b: UrnSpec, n_steps: int,
                stream: PhiloxStream) -> Tuple[UrnTrajectory, UrnTrajectory]:
    """Run two urns off one shared uniform stream.

    At each step a single uniform u is drawn and each urn increments iff
    u < (its own transition probability).  When the first urn's
    probability is pointwise dominated by the second's, this coupling
    keeps the first state below the second at every step.
    """
    sa = np.empty(n_steps + 1, dtype=np.int64)
    sb = np.empty(n_steps + 1, dtype=np.int64)
    ra, rb = spec_a.initial_state, spec_b.initial_state
    sa[0], sb[0] = ra, rb
    for n in range(n_steps):
        pa = spec_a.transition_probability(ra, n)
        pb = spec_b.transition_probability(rb, n)
        u = stream.uniform()
        if u < pa:
            ra += 1
        if u < pb:
            rb += 1
        sa[n + 1] = ra
        sb[n + 1] = rb
    return UrnTrajectory(sa), UrnTrajectory(sb)


# ---------------------------------------------------------------------------
# compiled stepping for long runs
# ---------------------------------------------------------------------------

@njit(cache=False)
def _urn_kernel(kind, params, state0, n_steps, key0, key1, counter,
                record_steps, rec_out):
    b = params[0]
    c0 = params[1]
    h = params[2]
    alpha = params[3]
    c2 = params[4]
    n0 = params[5]
    r = state0
    ctr = uint64(counter)
    rec_idx = 0
    n_rec = record_steps.shape[0]
    for n in range(n_steps):
        if kind == 0:
            p = r / (n + 2.0)
        elif kind == 1:
            z = r / (n + 2.0)
            p = z * (z * z + 0.5) / (z + 0.5)
        elif kind == 2:
            fa = (r - b * r ** alpha) / h
            if fa < c0:
                fa = c0
            i = n - r
            if i < 0:
                i = 0
            fb = alpha * (i + c2) / h
            p = fa / (fa + fb)
        else:
            denom = n + n0 + 2.0 - r + r / 5.0
            p = (r / 5.0) / denom
        u = philox_uniform(ctr, key0, key1)
        ctr = ctr + uint64(1)
        if u < p:
            r += 1
        if rec_idx < n_rec and record_steps[rec_idx] == n + 1:
            rec_out[rec_idx] = r
            rec_idx += 1
    return r, ctr


@dataclass(frozen=True)
class UrnRun:
    """Recorded long urn run from the compiled kernel."""

    spec: UrnSpec
    n_steps: int
    master_seed: int
    replica: int
    record_steps: np.ndarray
    recorded_states: np.ndarray
    final_state: int


def run_urn(spec: UrnSpec, n_steps: int, master_seed: int, replica: int = 0,
            record_steps: Optional[Sequence[int]] = None) -> UrnRun:
    """Simulate ``n_steps`` urn transitions with the compiled kernel.

    Draw-compatible with urn_step: one uniform per step, Philox keyed by
    (master_seed, replica), so short runs agree bit for bit with the
    Python path.
    """
    if n_steps < 0:
        raise UrnError("n_steps must be nonnegative")
    if record_steps is None:
        rec = np.empty(0, dtype=np.int64)
    else:
        rec = np.unique(np.asarray(record_steps, dtype=np.int64))
        if rec.size and (rec[0] < 1 or rec[-1] > n_steps):
            raise UrnError("record steps must lie in [1, n_steps]")
    out = np.empty(rec.shape[0], dtype=np.int64)
    k0, k1 = derive_key(master_seed, replica)
    final, _ = _urn_kernel(np.int64(_KIND_CODE[spec.kind]), spec._params(),
                           np.int64(spec.initial_state), np.int64(n_steps),
                           np.uint32(k0), np.uint32(k1), np.uint64(0),
                           rec, out)
    return UrnRun(spec=spec, n_steps=n_steps, master_seed=master_seed,
                  replica=replica, record_steps=rec, recorded_states=out,
                  final_state=int(final))


# ---------------------------------------------------------------------------
# exact distribution oracle
# ---------------------------------------------------------------------------

MAX_DP_STEPS = 40


def exact_urn_distribution(spec: UrnSpec, n: int) -> Dict[int, float]:
    """Exact law of R_n by forward dynamic programming (n <= 40).

    Returns {state: probability}; the masses sum to 1 within 1e-12,
    which callers may assert.
    """
    if not 0 <= n <= MAX_DP_STEPS:
        raise UrnError(f"exact DP limited to n <= {MAX_DP_STEPS}")
    dist = {spec.initial_state: 1.0}
    for step in range(n):
        nxt: Dict[int, float] = {}
        for state, mass in dist.items():
            p = spec.transition_probability(state, step)
            if p > 0.0:
                nxt[state + 1] = nxt.get(state + 1, 0.0) + mass * p
            if p < 1.0:
                nxt[state] = nxt.get(state, 0.0) + mass * (1.0 - p)
        dist = nxt
    return dict(sorted(dist.items()))


# ---------------------------------------------------------------------------
# Rubin's exponential embedding
# ---------------------------------------------------------------------------

def rubin_sampler(rates_a: Callable[[int], float],
                  rates_b: Callable[[int], float],
                  n: int, stream: PhiloxStream) -> UrnTrajectory:
    """Competing-exponential embedding of a generalized urn.

    Two clocks fire after exponential waits with per-event rates
    rates_a(k_a) and rates_b(k_b); the loser keeps its scheduled firing
    time, so at each of the ``n`` discrete events exactly one new
    exponential is drawn.  By memorylessness the jump chain increments
    the A-count with probability rates_a(k_a)/(rates_a(k_a)+rates_b(k_b)),
    i.e. it has the generalized-urn law.
    """
    ra0 = float(rates_a(0))
    rb0 = float(rates_b(0))
    if ra0 <= 0 or rb0 <= 0:
        raise UrnError("rate functions must be strictly positive")
    ka = kb = 0
    ta = stream.exponential(ra0)
    tb = stream.exponential(rb0)
    states = np.empty(n + 1, dtype=np.int64)
    states[0] = 0
    for i in range(n):
        if ta < tb:
            ka += 1
            rate = float(rates_a(ka))
            if rate <= 0:
                raise UrnError("rate functions must be strictly positive")
            ta += stream.exponential(rate)
        else:
            kb += 1
            rate = float(rates_b(kb))
            if rate <= 0:
                raise UrnError("rate functions must be strictly positive")
            tb += stream.exponential(rate)
        states[i + 1] = ka
    return UrnTrajectory(states)


def rubin_empirical_distribution(rates_a: Callable[[int], float],
                                 rates_b: Callable[[int], float],
                                 n: int, n_samples: int, master_seed: int,
                                 replica: int = 0) -> Dict[int, float]:
    """Empirical law of the A-count after ``n`` events, vectorized.

    Rate functions are tabulated on 0..n once; all samples advance in
    lockstep, drawing one batch of uniforms per event (plus two to
    initialize the clocks).
    """
    ra = np.array([float(rates_a(k)) for k in range(n + 1)])
    rb = np.array([float(rates_b(k)) for k in range(n + 1)])
    if np.any(ra <= 0) or np.any(rb <= 0):
        raise UrnError("rate functions must be strictly positive")
    stream = PhiloxStream(master_seed, replica)
    ta = -np.log1p(-stream.uniforms(n_samples)) / ra[0]
    tb = -np.log1p(-stream.uniforms(n_samples)) / rb[0]
    ka = np.zeros(n_samples, dtype=np.int64)
    kb = np.zeros(n_samples, dtype=np.int64)
    for _ in range(n):
        u = stream.uniforms(n_samples)
        a_wins = ta < tb
        ka[a_wins] += 1
        kb[~a_wins] += 1
        wait_a = -np.log1p(-u[a_wins]) / ra[ka[a_wins]]
        wait_b = -np.log1p(-u[~a_wins]) / rb[kb[~a_wins]]
        ta[a_wins] += wait_a
        tb[~a_wins] += wait_b
    values, counts = np.unique(ka, return_counts=True)
    return {int(v): c / n_samples for v, c in zip(values, counts)}


def total_variation(p: Dict[int, float], q: Dict[int, float]) -> float:
    """TV distance between two finite pmfs given as dicts."""
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


# ---------------------------------------------------------------------------
# log-log slope fitting
# ---------------------------------------------------------------------------

def decay_exponent_fit(ns, values, window: Optional[Tuple[float, float]] = None):
    """Least-squares slope of log(value) against log(n).

    Returns (slope, stderr).  Points outside ``window`` (inclusive n
    range) are dropped first; at least 10 points with positive n and
    value must remain.
    """
    ns = np.asarray(ns, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if ns.shape != values.shape:
        raise ValueError("ns and values must have the same shape")
    keep = ns > 0
    if window is not None:
        keep &= (ns >= window[0]) & (ns <= window[1])
    ns, values = ns[keep], values[keep]
    if np.any(values <= 0):
        raise ValueError("values must be strictly positive on the window")
    if ns.size < 10:
        raise ValueError("need at least 10 points for a slope fit")
    from scipy import stats

    res = stats.linregress(np.log(ns), np.log(values))
    return float(res.slope), float(res.stderr)
