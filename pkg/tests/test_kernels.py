import os
import random
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from policylens import _kernels as k
from oracles import closure_floyd_warshall, lcs_bruteforce, lcs_dp, random_dag

needs_numba = pytest.mark.skipif(not k.HAS_NUMBA, reason="numba not installed")

text = st.text(alphabet="abcde ", max_size=40)


@given(text, text)
@settings(max_examples=300, deadline=None)
def test_numpy_lcs_matches_dp(a, b):
    assert k.lcs_length_numpy(k.encode(a), k.encode(b)) == lcs_dp(a, b)


@needs_numba
@given(text, text)
@settings(max_examples=300, deadline=None)
def test_numba_lcs_matches_numpy(a, b):
    ea, eb = k.encode(a), k.encode(b)
    assert k.lcs_length_jit(ea, eb) == k.lcs_length_numpy(ea, eb)


def test_dp_oracle_agrees_with_bruteforce():
    rng = random.Random(7)
    for _ in range(300):
        a = "".join(rng.choice("ab") for _ in range(rng.randint(0, 12)))
        b = "".join(rng.choice("ab") for _ in range(rng.randint(0, 12)))
        assert lcs_dp(a, b) == lcs_bruteforce(a, b)


def test_encode_handles_non_bmp():
    assert k.encode("a\U0001F600b").tolist() == [97, 0x1F600, 98]
    assert k.lcs_length_numpy(k.encode("x\U0001F600"), k.encode("\U0001F600y")) == 1


def _adj(dag):
    nodes = sorted(dag)
    idx = {n: i for i, n in enumerate(nodes)}
    adj = np.zeros((len(nodes), len(nodes)), dtype=np.bool_)
    for child, parents in dag.items():
        for p in parents:
            adj[idx[child], idx[p]] = True
    return nodes, adj


@pytest.mark.parametrize("seed", range(20))
def test_closure_kernels_match_oracle(seed):
    rng = random.Random(seed)
    dag = random_dag(rng, rng.randint(1, 20))
    nodes, adj = _adj(dag)
    expected = closure_floyd_warshall(dag)
    want = np.array([[expected[(a, b)] for b in nodes] for a in nodes])
    np.testing.assert_array_equal(k.transitive_closure_numpy(adj), want)
    if k.HAS_NUMBA:
        np.testing.assert_array_equal(k.transitive_closure_jit(adj), want)


def test_closure_empty():
    assert k.transitive_closure(np.zeros((0, 0), dtype=np.bool_)).shape == (0, 0)


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, POLICYLENS_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from policylens import _kernels; print(_kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"
