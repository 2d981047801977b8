import math

import numpy as np
import pytest
from conftest import brute_force_marginals, random_tree_code
from hypothesis import given, settings
from hypothesis import strategies as st

from iddsim.decoder import (LLR_MAX, SCHEDULES, MessageState, ScheduleError, check_metric,
                            check_metrics, check_rule, check_update, decode, edge_update_cost,
                            residual, residual_queue, variable_update)
from iddsim.ldpc import TannerGraph, encode


# --- check rule ------------------------------------------------------------

def test_check_rule_certain_parity_saturates():
    out = check_rule([LLR_MAX, LLR_MAX, 0.3])
    assert out[2] == LLR_MAX
    out = check_rule([LLR_MAX, -LLR_MAX, 0.3])
    assert out[2] == -LLR_MAX


def test_check_rule_zero_annihilates():
    out = check_rule([0.0, 2.0, -3.0, 1.5])
    assert np.all(out[1:] == 0.0)
    assert out[0] != 0.0


def test_check_rule_scalar_value():
    out = check_rule([1.0, 2.0, 0.7])
    assert out[2] == pytest.approx(2 * math.atanh(math.tanh(0.5) * math.tanh(1.0)), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-20, 20), min_size=2, max_size=8))
def test_check_rule_matches_direct_formula(values):
    out = check_rule(values)
    for i in range(len(values)):
        prod = np.prod([math.tanh(v / 2) for j, v in enumerate(values) if j != i])
        prod = min(max(prod, -(1 - 1e-12)), 1 - 1e-12)
        expect = float(np.clip(2 * math.atanh(prod), -LLR_MAX, LLR_MAX))
        if abs(prod) < 1 - 1e-9:
            assert out[i] == pytest.approx(expect, abs=1e-7)
        else:
            assert np.sign(out[i]) == np.sign(expect) or expect == 0


# --- variable update and state ----------------------------------------------

def _two_check_graph():
    # var 0 sits on checks 0 and 1; edges: c0 -> (0, 1) ids 0,1; c1 -> (0, 2) ids 2,3
    return TannerGraph([[0, 1], [0, 2]], 3, k=1)


def test_variable_update_excludes_target_check():
    g = _two_check_graph()
    st_ = MessageState.initial(g, [1.0, 0.0, 0.0])
    st_.to_var[0], st_.to_var[2] = 2.0, -3.0
    variable_update(g, st_, 0)
    assert st_.to_check[0] == pytest.approx(-2.0)
    assert st_.to_check[2] == pytest.approx(3.0)
    assert st_.posterior[0] == pytest.approx(0.0)


def test_variable_update_degree_one_passes_channel():
    g = TannerGraph([[0, 1]], 2, k=1)
    st_ = MessageState.initial(g, [0.8, -1.1])
    out = variable_update(g, st_, 1)
    assert out.tolist() == [pytest.approx(-1.1)]


def test_posterior_consistency_after_updates(std_half):
    rng = np.random.default_rng(2)
    st_ = MessageState.initial(std_half, rng.normal(0, 3, 1024))
    for c in rng.integers(0, std_half.n_check, 200):
        q = st_.posterior[std_half.edge_var] - st_.to_var
        st_.to_check[:] = q
        check_update(std_half, st_, int(c))
    recomputed = st_.channel_llr + np.bincount(std_half.edge_var, weights=st_.to_var,
                                               minlength=1024)
    assert np.allclose(recomputed, st_.posterior, atol=1e-9)


# --- residuals and metrics ---------------------------------------------------

def test_residual_examples():
    assert residual(3.0, 3.0) == 0.0
    assert residual(1.0, -2.0) == 3.0


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_residual_symmetric(a, b):
    assert residual(a, b) == residual(b, a) >= 0


def test_check_metric_is_max_residual():
    # degree-1 variables: inputs to the check equal the channel LLRs
    g = TannerGraph([[0, 1, 2]], 3, k=1)
    ch = np.array([1.2, -0.4, 2.5])
    new = check_rule(ch)
    st_ = MessageState.initial(g, ch, to_var=new - np.array([0.5, 2.0, 0.1]))
    assert check_metric(g, st_, 0) == pytest.approx(2.0)
    st_ = MessageState.initial(g, ch, to_var=new)
    assert check_metric(g, st_, 0) == pytest.approx(0.0, abs=1e-12)


def test_check_metrics_vectorised_matches_scalar(rc_half):
    rng = np.random.default_rng(4)
    res = decode(rc_half, rng.normal(1, 2, 1024), "lbp", 2, early_stop=False)
    phi = check_metrics(rc_half, res.state)
    for c in rng.integers(0, rc_half.n_check, 30):
        assert phi[c] == pytest.approx(check_metric(rc_half, res.state, int(c)), abs=1e-9)


def test_erasure_example_metric_split(rc_half):
    """Intact-block root checks start idle; erased-block root checks carry the residual."""
    rng = np.random.default_rng(0)
    llr = np.where(rc_half.block_of == 0, 4 + rng.normal(0, 2.8, 1024), 0.0)
    phi = check_metrics(rc_half, MessageState.initial(rc_half, llr))
    roots = np.arange(rc_half.k)
    intact = roots[rc_half.block_of[roots] == 0]
    erased = roots[rc_half.block_of[roots] == 1]
    assert np.all(phi[intact] == 0.0)
    assert np.mean(phi[erased] > 0.1) > 0.8
    # ROLBP starts with the informative checks
    q = residual_queue(phi)
    assert set(q[:len(erased) // 2]) <= set(erased)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from([0.0, 0.5, 1.0, 2.0, 3.5]), min_size=1, max_size=30))
def test_residual_queue_descending_and_stable(phi):
    q = residual_queue(phi)
    assert sorted(q.tolist()) == list(range(len(phi)))
    vals = np.asarray(phi)[q]
    assert np.all(np.diff(vals) <= 0)
    for a, b in zip(q[:-1], q[1:]):
        if phi[a] == phi[b]:
            assert a < b


# --- decoding ----------------------------------------------------------------

@pytest.mark.parametrize("schedule", SCHEDULES)
def test_noiseless_converges_in_one_iteration(schedule, rc_half, std_quarter):
    rng = np.random.default_rng(1)
    for g in (rc_half, std_quarter):
        cw = encode(g, rng.integers(0, 2, g.k, dtype=np.uint8))
        res = decode(g, LLR_MAX * (1 - 2.0 * cw), schedule, 20)
        assert res.converged and res.inner_iters == 1
        assert np.array_equal(res.hard_bits, cw)


@pytest.mark.parametrize("schedule", SCHEDULES)
def test_all_zero_input_stays_zero(schedule, std_half):
    res = decode(std_half, np.zeros(1024), schedule, 5, early_stop=False)
    assert not res.posterior_llr.any()
    assert res.converged
    assert not res.hard_bits.any()


@pytest.mark.parametrize("schedule", SCHEDULES)
def test_converged_implies_zero_syndrome(schedule, rc_half):
    rng = np.random.default_rng(7)
    for _ in range(3):
        cw = encode(rc_half, rng.integers(0, 2, 512, dtype=np.uint8))
        llr = 2.4 * (1 - 2.0 * cw) + rng.normal(0, math.sqrt(4.8), 1024)
        res = decode(rc_half, llr, schedule, 20)
        assert (res.hard_bits == (res.posterior_llr < 0)).all()
        if res.converged:
            assert rc_half.is_codeword(res.hard_bits)


def test_unknown_schedule():
    g = TannerGraph([[0, 1]], 2, k=1)
    with pytest.raises(ScheduleError):
        decode(g, np.zeros(2), "min-sum")
    with pytest.raises(ScheduleError):
        edge_update_cost("foo", g)


def test_rolbp_alternates_queue_and_natural_order(std_half):
    rng = np.random.default_rng(3)
    llr = 1.0 + rng.normal(0, math.sqrt(2.0), 1024)
    res = decode(std_half, llr, "rolbp", 6, early_stop=False, trace=True)
    natural = np.arange(std_half.n_check)
    first_q = residual_queue(check_metrics(std_half, MessageState.initial(std_half, llr)))
    assert np.array_equal(res.check_order[0], first_q)
    for it, order in enumerate(res.check_order, start=1):
        assert sorted(order.tolist()) == natural.tolist()
        if it % 2 == 0:
            assert np.array_equal(order, natural)
        else:
            assert not np.array_equal(order, natural)


def test_rlbp_reorders_every_iteration(std_half):
    rng = np.random.default_rng(3)
    llr = 1.0 + rng.normal(0, math.sqrt(2.0), 1024)
    res = decode(std_half, llr, "rlbp", 4, early_stop=False, trace=True)
    for order in res.check_order:
        assert not np.array_equal(order, np.arange(std_half.n_check))
    lbp = decode(std_half, llr, "lbp", 2, early_stop=False, trace=True)
    assert all(np.array_equal(o, np.arange(std_half.n_check)) for o in lbp.check_order)


def test_persisted_messages_resume(std_half):
    rng = np.random.default_rng(9)
    llr = 1.2 + rng.normal(0, math.sqrt(2.4), 1024)
    first = decode(std_half, llr, "bp", 3, early_stop=False)
    resumed = decode(std_half, llr, "bp", 3, early_stop=False, init_to_var=first.state.to_var)
    straight = decode(std_half, llr, "bp", 6, early_stop=False)
    assert np.allclose(resumed.posterior_llr, straight.posterior_llr, atol=1e-9)


# --- tree oracle -------------------------------------------------------------

@pytest.mark.parametrize("schedule", ["bp", "lbp", "rolbp", "rlbp"])
def test_tree_codes_match_brute_force_marginals(schedule):
    rng = np.random.default_rng(11)
    for _ in range(12):
        g = random_tree_code(rng)
        llr = rng.normal(0.5, 1.5, g.n_var)
        res = decode(g, llr, schedule, max_iters=g.n_var, early_stop=False)
        assert np.allclose(res.posterior_llr, brute_force_marginals(g, llr), atol=1e-6)


# --- complexity --------------------------------------------------------------

def test_edge_update_cost_formulas(std_half, std_quarter):
    assert edge_update_cost("bp", std_half) == 768
    assert edge_update_cost("lbp", std_half) == 768
    assert edge_update_cost("nwbp", std_half) == 6 * 512 * (1 + 2 * 5) / 4
    assert edge_update_cost("rlbp", std_half) == 6 * 512 / 2
    assert edge_update_cost("rolbp", std_half) == 1.5 * 6 * 512 / 2
    # (3,4)-regular: dc = 4, N_CN = 768
    assert edge_update_cost("bp", std_quarter) == 4 * 768 / 4
    assert edge_update_cost("nwbp", std_quarter) == 4 * 768 * (1 + 2 * 3) / 4
    assert edge_update_cost("rlbp", std_quarter) == 4 * 768 / 2
    assert edge_update_cost("rolbp", std_quarter) == 1.5 * 4 * 768 / 2


def test_cost_model_ordering(std_half):
    # the printed ROLBP figure (1.5 dc N_CN / 2) exceeds RLBP's dc N_CN / 2, so
    # the RLBP > ROLBP ranking is checked on measured counts instead
    c = {s: edge_update_cost(s, std_half) for s in SCHEDULES}
    assert c["nwbp"] > max(c["rlbp"], c["rolbp"])
    assert min(c["rlbp"], c["rolbp"]) > c["bp"] == c["lbp"]
    assert c["rbp"] == c["nwbp"]


def test_measured_message_counts_ordering(std_half):
    rng = np.random.default_rng(5)
    llr = 0.6 + rng.normal(0, math.sqrt(1.2), 1024)
    per_iter = {}
    for s in ("bp", "lbp", "nwbp", "rlbp", "rolbp"):
        res = decode(std_half, llr, s, 4, early_stop=False)
        per_iter[s] = res.messages_computed / res.inner_iters
    e = std_half.n_edges
    assert per_iter["bp"] == per_iter["lbp"] == e
    assert per_iter["rlbp"] == 2 * e
    assert per_iter["nwbp"] > per_iter["rlbp"] > per_iter["rolbp"] > per_iter["bp"]
