"""Walk engine: sampling, extraction rules, parity, determinism."""

import numpy as np
import pytest

from antnet.graphs import (counterexample, geodesic_dag, h_min, losange,
                           parse_sp, sp_to_graph, sublinear_demo)
from antnet.rng import PhiloxStream
from antnet.walks import (VARIANTS, CapExceeded, ReinforcementRule,
                          ReinforcedPath, RunResult, WalkTrace, WeightState,
                          apply_reinforcement, extract_path,
                          geodesic_in_trace, geometric_schedule,
                          linear_schedule, loop_erased_backward, run_process,
                          sample_walk)


def recursion_loop_erasure(trace: WalkTrace):
    """Independent oracle: latest-occurrence index recursion on the
    time-reversed trajectory, j_{i+1} = max{j+1 : Xbar_j = Xbar_{j_i}}."""
    rv = list(trace.vertices[::-1])
    re_ = list(trace.edges[::-1])
    nest = rv[-1]
    j = 0
    out = []
    while rv[j] != nest:
        v = rv[j]
        nxt = max(k for k, u in enumerate(rv) if u == v) + 1
        out.append(re_[nxt - 1])
        j = nxt
    return out[::-1]


def _trace(vertices, edges):
    return WalkTrace(vertices=tuple(vertices), edges=tuple(edges))


# losange vertices: N=0, left=1, right=2, F=3; edge ids 0..4 = labels 1..5
def test_loop_erasure_frozen_examples():
    t = _trace([0, 1, 2, 3], [0, 2, 4])
    assert loop_erased_backward(t).edges == (0, 2, 4)

    t = _trace([0, 1, 0, 2, 3], [0, 0, 3, 4])
    assert loop_erased_backward(t).edges == (3, 4)

    # N -> r -> l -> N -> l -> F: the reversal keeps the r-l-N tail,
    # so labels {2,3,4} (ids {1,2,3}) survive
    t = _trace([0, 2, 1, 0, 1, 3], [3, 2, 0, 0, 1])
    assert sorted(loop_erased_backward(t).edges) == [1, 2, 3]


def test_loop_erasure_matches_recursion_oracle():
    g = losange()
    stream = PhiloxStream(300, 0)
    state = WeightState.initial(g)
    for _ in range(500):
        trace = sample_walk(g, state, 1.0, stream, 10 ** 6)
        path = loop_erased_backward(trace)
        assert list(path.edges) == recursion_loop_erasure(trace)
        # self-avoiding subset of the trace
        assert len(set(path.edges)) == len(path.edges)
        assert set(path.edges) <= trace.edge_set()


def test_loop_erasure_scenario_set_on_losange():
    g = losange()
    stream = PhiloxStream(301, 0)
    state = WeightState.initial(g)
    scenarios = {(0, 1), (3, 4), (0, 2, 4), (1, 2, 3)}
    for _ in range(300):
        trace = sample_walk(g, state, 1.0, stream, 10 ** 6)
        path = tuple(sorted(loop_erased_backward(trace).edges))
        assert path in scenarios


def test_walk_trace_invariants():
    g = counterexample(3)
    stream = PhiloxStream(302, 0)
    state = WeightState.initial(g)
    for _ in range(50):
        t = sample_walk(g, state, 1.0, stream, 10 ** 6)
        assert t.vertices[0] == g.nest and t.vertices[-1] == g.food
        assert g.food not in t.vertices[:-1]
        for k, e in enumerate(t.edges):
            u, v = g.edges[e]
            assert {t.vertices[k], t.vertices[k + 1]} == {u, v}


def test_geodesic_in_trace_cases():
    g = losange()
    stream = PhiloxStream(303, 0)
    t = _trace([0, 1, 3], [0, 1])
    assert sorted(geodesic_in_trace(g, t, stream).edges) == [0, 1]
    t = _trace([0, 1, 2, 3], [0, 2, 4])
    assert sorted(geodesic_in_trace(g, t, stream).edges) == [0, 2, 4]
    # two-geodesic trace on S(P(e,e),e): the walk bounced across both
    # parallel edges before exiting, so the rule picks one uniformly
    g2 = sp_to_graph(parse_sp("S(P(e,e),e)"))
    m = next(v for e in g2.edges for v in e if v not in (g2.nest, g2.food))
    full = _trace([g2.nest, m, g2.nest, m, g2.food], [0, 0, 1, 2])
    seen = {(0, 2): 0, (1, 2): 0}
    n = 20_000
    for _ in range(n):
        seen[tuple(sorted(geodesic_in_trace(g2, full, stream).edges))] += 1
    sigma = (n * 0.25) ** 0.5
    assert abs(seen[(0, 2)] - n / 2) < 4 * sigma


def test_apply_reinforcement_rules():
    g = losange()
    w = WeightState.initial(g)
    w1 = apply_reinforcement(w, ReinforcedPath(edges=(0, 1), increments=(1, 1)),
                             ReinforcementRule("UniformGeodesic"))
    assert list(w1.weights) == [2, 2, 1, 1, 1] and w1.n == 1
    # multiplicity: +k per crossing
    w2 = apply_reinforcement(w, ReinforcedPath(edges=(0,), increments=(3,)),
                             ReinforcementRule("FullTraceMultiplicity"))
    assert list(w2.weights) == [4, 1, 1, 1, 1]


def test_sum_identity_over_steps():
    g = sp_to_graph(parse_sp("P(S(e,e),e)"))
    res = run_process(g, ReinforcementRule("LoopErased"), 200, 7, 0,
                      record_steps=[200])
    assert (res.final_weights - 1).sum() == res.path_lengths.sum()


def test_losange_weight_identities_both_rules():
    for rule in ("UniformGeodesic", "LoopErased"):
        res = run_process(losange(), ReinforcementRule(rule), 500, 11, 2)
        for k, n in enumerate(res.record_steps):
            w = res.recorded_weights[k]
            assert w[0] + w[3] == n + 2
            assert w[1] + w[4] == n + 2


# ---------------------------------------------------------------------------
# engine parity and determinism
# ---------------------------------------------------------------------------

PARITY_GRAPHS = [losange(), sp_to_graph(parse_sp("P(S(e,e),S(e,S(e,e)))"))]


@pytest.mark.parametrize("variant", VARIANTS)
@pytest.mark.parametrize("alpha", [1.0, 2.0, 0.5])
def test_fast_reference_parity(variant, alpha):
    rule = ReinforcementRule(variant, alpha=alpha)
    cap = 200_000
    for g in PARITY_GRAPHS:
        try:
            fast = run_process(g, rule, 300, 123, 1, engine="fast",
                               step_cap=cap)
        except CapExceeded as exc:
            # superlinear combinations can trap the walk; the reference
            # engine must then fail at the very same process step
            with pytest.raises(CapExceeded) as ref_exc:
                run_process(g, rule, 300, 123, 1, engine="reference",
                            step_cap=cap)
            assert ref_exc.value.args[0] == exc.args[0]
            continue
        ref = run_process(g, rule, 300, 123, 1, engine="reference",
                          step_cap=cap)
        assert np.array_equal(fast.final_weights, ref.final_weights)
        assert np.array_equal(fast.recorded_weights, ref.recorded_weights)
        assert np.array_equal(fast.path_lengths, ref.path_lengths)
        assert np.array_equal(fast.geodesic_flags, ref.geodesic_flags)
        assert np.array_equal(fast.masks, ref.masks)


def test_determinism_regression():
    # frozen trajectory endpoint for a fixed configuration
    res = run_process(losange(), ReinforcementRule("LoopErased"), 300, 123, 1)
    assert list(res.final_weights) == [170, 170, 1, 132, 132]
    rerun = run_process(losange(), ReinforcementRule("LoopErased"), 300, 123, 1)
    assert np.array_equal(res.final_weights, rerun.final_weights)
    assert np.array_equal(res.masks, rerun.masks)


def test_replica_streams_differ():
    a = run_process(losange(), ReinforcementRule("UniformGeodesic"), 200, 5, 0)
    b = run_process(losange(), ReinforcementRule("UniformGeodesic"), 200, 5, 1)
    assert not np.array_equal(a.masks, b.masks)


def test_initial_weights_override():
    w0 = np.array([5, 1, 1, 1, 1], dtype=np.int64)
    res = run_process(losange(), ReinforcementRule("UniformGeodesic"), 50, 9, 0,
                      record_steps=[50], initial_weights=w0, reinforce=False)
    assert list(res.final_weights) == list(w0)
    with pytest.raises(ValueError):
        run_process(losange(), ReinforcementRule("UniformGeodesic"), 10, 9, 0,
                    initial_weights=np.zeros(5, dtype=np.int64))


def test_step_cap():
    with pytest.raises(CapExceeded):
        run_process(losange(), ReinforcementRule("LoopErased"), 100, 3, 0,
                    step_cap=1)
    stream = PhiloxStream(3, 0)
    with pytest.raises(CapExceeded):
        sample_walk(losange(), WeightState.initial(losange()), 1.0, stream, 1)


def test_schedules():
    rec = geometric_schedule(1000, 1.1)
    assert rec[0] >= 1 and rec[-1] == 1000
    assert np.all(np.diff(rec) > 0)
    assert rec.size < 100
    lin = linear_schedule(10)
    assert list(lin) == list(range(1, 11))


def test_full_trace_rules_record_trace_stats():
    g = losange()
    # frozen weights: both rules then see the identical walk sequence
    res = run_process(g, ReinforcementRule("FullTrace"), 100, 21, 0,
                      record_steps=[100], reinforce=False)
    res_m = run_process(g, ReinforcementRule("FullTraceMultiplicity"), 100, 21, 0,
                        record_steps=[100], reinforce=False)
    # multiplicity counts each crossing, full trace counts distinct edges
    assert np.all(res_m.path_lengths >= res.path_lengths)
    assert np.all(res.path_lengths <= g.n_edges)
    # with reinforcement, total added weight equals total steps walked
    live = run_process(g, ReinforcementRule("FullTraceMultiplicity"), 100, 22, 0,
                       record_steps=[100])
    assert (live.final_weights - 1).sum() == live.path_lengths.sum()


# ---------------------------------------------------------------------------
# Monte-Carlo agreement with the analytic oracles
# ---------------------------------------------------------------------------

def test_uniform_geodesic_mc_vs_closed_form():
    # all-ones weights: p135 = 1/13
    res = run_process(losange(), ReinforcementRule("UniformGeodesic"),
                      200_000, 77, 0, record_steps=[200_000], reinforce=False)
    f = np.mean(res.masks == (1 | 4 | 16))
    p = 1 / 13
    assert abs(f - p) < 4 * np.sqrt(p * (1 - p) / 200_000)


def test_loop_erased_mc_vs_closed_form():
    # the loop-erased scenario law differs from the uniform-geodesic one:
    # at the all-half point p135 = w1w3w5/(w3 + w1w4 + w2w5) = 1/8
    res = run_process(losange(), ReinforcementRule("LoopErased"),
                      200_000, 78, 0, record_steps=[200_000], reinforce=False)
    f = np.mean(res.masks == (1 | 4 | 16))
    p = 1 / 8
    assert abs(f - p) < 4 * np.sqrt(p * (1 - p) / 200_000)


def test_first_step_law():
    # weights (3,1,1,1,1): first step uses edge 1 with prob 3/4
    g = losange()
    stream = PhiloxStream(80, 0)
    w = WeightState(np.array([3, 1, 1, 1, 1]), 0)
    hits = sum(sample_walk(g, w, 1.0, stream, 10 ** 6).edges[0] == 0
               for _ in range(20_000))
    assert abs(hits / 20_000 - 0.75) < 4 * np.sqrt(0.75 * 0.25 / 20_000)


def test_masks_none_for_wide_graphs():
    from antnet.graphs import double_sierpinski
    g = double_sierpinski(3)  # 154 edges > 64
    res = run_process(g, ReinforcementRule("LoopErased"), 5, 13, 0,
                      record_steps=[5])
    assert res.masks is None
    assert np.all(res.path_lengths >= h_min(g))
