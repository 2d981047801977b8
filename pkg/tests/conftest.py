import numpy as np
import pytest

from iddsim.harness import cached_code
from iddsim.ldpc import ROOTCHECK, STANDARD, CodeSpec, TannerGraph


@pytest.fixture(scope="session")
def rc_half():
    return cached_code(CodeSpec(1024, 512, 2, ROOTCHECK))


@pytest.fixture(scope="session")
def std_half():
    return cached_code(CodeSpec(1024, 512, 2, STANDARD))


@pytest.fixture(scope="session")
def rc_quarter():
    return cached_code(CodeSpec(1024, 256, 2, ROOTCHECK))


@pytest.fixture(scope="session")
def std_quarter():
    return cached_code(CodeSpec(1024, 256, 2, STANDARD))


@pytest.fixture(scope="session")
def n1024_codes(rc_half, std_half, rc_quarter, std_quarter):
    return {"rootcheck-1/2": rc_half, "standard-1/2": std_half,
            "rootcheck-1/4": rc_quarter, "standard-1/4": std_quarter}


def random_tree_code(rng: np.random.Generator, n_var_max: int = 16) -> TannerGraph:
    """Random cycle-free Tanner graph: each new check joins one existing variable to fresh ones."""
    checks = []
    n_var = 1
    while True:
        fresh = int(rng.integers(1, 3))
        if n_var + fresh > n_var_max:
            break
        anchor = int(rng.integers(0, n_var))
        checks.append([anchor] + list(range(n_var, n_var + fresh)))
        n_var += fresh
    return TannerGraph(checks, n_var)


def brute_force_marginals(graph: TannerGraph, llr: np.ndarray) -> np.ndarray:
    """Exact bitwise posterior LLRs by enumerating every codeword."""
    n = graph.n_var
    words = ((np.arange(2 ** n)[:, None] >> np.arange(n)) & 1).astype(np.uint8)
    words = words[~graph.syndrome(words).any(axis=1)]
    # log P(word | llr) up to a constant
    logp = -(words * llr).sum(axis=1)
    logp -= logp.max()
    p = np.exp(logp)
    p0 = ((1 - words) * p[:, None]).sum(axis=0)
    p1 = (words * p[:, None]).sum(axis=0)
    return np.log(p0) - np.log(p1)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
