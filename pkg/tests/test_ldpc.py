import io
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iddsim.ldpc import (ROOTCHECK, STANDARD, CodeSpec, ConstructionError, EncodingError,
                         TannerGraph, UnsupportedRateError, build_code, build_rootcheck_code,
                         build_standard_code, encode, has_four_cycle, has_rootcheck_property,
                         read_alist, write_alist)


def test_codespec_validation():
    spec = CodeSpec.from_rate(1024, Fraction(1, 4), 2, ROOTCHECK)
    assert (spec.k, spec.m, spec.rate) == (256, 768, Fraction(1, 4))
    with pytest.raises(ValueError):
        CodeSpec(8, 8)
    with pytest.raises(ValueError):
        CodeSpec(10, 5, 2)  # K not divisible by F
    with pytest.raises(ValueError):
        CodeSpec(8, 4, kind="turbo")


def test_block_map_is_even_and_tx_order_contiguous(rc_half):
    blocks = rc_half.block_of
    assert np.bincount(blocks[:512]).tolist() == [256, 256]
    assert np.bincount(blocks[512:]).tolist() == [256, 256]
    tx = blocks[rc_half.tx_order]
    assert np.all(np.diff(tx) >= 0)


def test_small_standard_code_degree_accounting():
    g = build_standard_code(CodeSpec(8, 4, 1), seed=1, dv=2)
    assert g.n_edges == 16
    assert g.check_degrees.tolist() == [4, 4, 4, 4]


def test_repeated_edge_rejected():
    with pytest.raises(ConstructionError):
        TannerGraph([[0, 1, 1]], 3)


@pytest.mark.parametrize("kind,seed", [(STANDARD, 7), (ROOTCHECK, 3)])
def test_construction_deterministic(kind, seed):
    spec = CodeSpec(1024, 512, 2, kind)
    assert build_code(spec, seed=seed) == build_code(spec, seed=seed)


def test_graph_invariants(n1024_codes):
    for name, g in n1024_codes.items():
        assert g.n_edges == g.check_degrees.sum() == g.var_degrees.sum(), name
        assert g.n_var == 1024 and g.n_check == 1024 - g.k
        assert np.all(g.var_degrees == 3), name
        assert not has_four_cycle(g), name


def test_standard_baselines_are_regular(std_half, std_quarter):
    assert np.all(std_half.check_degrees == 6)
    assert np.all(std_quarter.check_degrees == 4)


def test_small_rootcheck_property():
    g = build_rootcheck_code(CodeSpec(8, 4, 2, ROOTCHECK), seed=1, dv=2)
    assert has_rootcheck_property(g)
    blocks = g.block_of
    for v in range(4):
        assert any(np.all(blocks[np.setdiff1d(g.check_adj[c], [v])] != blocks[v])
                   for c in g.var_adj[v])


def test_rootcheck_property_n1024(rc_half, rc_quarter):
    assert has_rootcheck_property(rc_half)
    assert has_rootcheck_property(rc_quarter)


def test_standard_code_lacks_rootcheck_property(std_half):
    assert not has_rootcheck_property(std_half)


@pytest.mark.parametrize("n,k,f", [(1024, 512, 4), (1024, 384, 2), (1024, 512, 1)])
def test_rootcheck_unsupported_rates(n, k, f):
    with pytest.raises(UnsupportedRateError):
        build_rootcheck_code(CodeSpec(n, k, f, ROOTCHECK))


def test_erased_block_recovery_small():
    from iddsim.decoder import LLR_MAX, decode
    g = build_rootcheck_code(CodeSpec(64, 32, 2, ROOTCHECK), seed=2)
    rng = np.random.default_rng(5)
    for erased in (0, 1):
        msg = rng.integers(0, 2, 32, dtype=np.uint8)
        cw = encode(g, msg)
        llr = np.where(g.block_of == erased, 0.0, LLR_MAX * (1 - 2.0 * cw))
        res = decode(g, llr, "bp", 20)
        assert np.array_equal(res.hard_bits[:32], msg)


def test_encode_zero_and_syndrome(n1024_codes):
    rng = np.random.default_rng(0)
    for g in n1024_codes.values():
        assert not encode(g, np.zeros(g.k, np.uint8)).any()
        msgs = rng.integers(0, 2, size=(4, g.k), dtype=np.uint8)
        cws = encode(g, msgs)
        assert np.array_equal(cws[:, :g.k], msgs)
        assert not g.syndrome(cws).any()


def test_encode_matches_exhaustive_parity_search():
    g = build_standard_code(CodeSpec(32, 16, 2), seed=1)
    H = g.to_matrix().astype(np.int64)
    cands = ((np.arange(2 ** 16)[:, None] >> np.arange(16)) & 1).astype(np.int64)
    rng = np.random.default_rng(3)
    for _ in range(3):
        msg = rng.integers(0, 2, 16)
        target = (H[:, :16] @ msg) % 2
        ok = np.flatnonzero(~(((cands @ H[:, 16:].T) % 2) ^ target).any(axis=1))
        assert ok.size == 1
        assert np.array_equal(encode(g, msg)[16:], cands[ok[0]])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_encode_linear(seed):
    g = build_standard_code(CodeSpec(32, 16, 2), seed=1)
    rng = np.random.default_rng(seed)
    a, b = rng.integers(0, 2, size=(2, 16), dtype=np.uint8)
    assert np.array_equal(encode(g, a ^ b), encode(g, a) ^ encode(g, b))


def test_encode_errors():
    g = build_standard_code(CodeSpec(8, 4, 1), seed=1, dv=2)
    with pytest.raises(EncodingError):
        encode(g, np.zeros(4, np.uint8))  # even column weight: singular parity part
    g = build_standard_code(CodeSpec(32, 16, 2), seed=1)
    with pytest.raises(EncodingError):
        encode(g, np.zeros(15, np.uint8))


def test_alist_round_trip(rc_half):
    buf = io.StringIO()
    write_alist(rc_half, buf)
    buf.seek(0)
    back = read_alist(buf, k=rc_half.k)
    assert back == rc_half
