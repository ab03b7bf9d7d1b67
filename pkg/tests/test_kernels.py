"""The compiled and the numpy kernels must agree, and the env flag must
select the numpy path."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hmmsnn import kernels

pytestmark = pytest.mark.skipif(not kernels.HAS_NUMBA, reason="numba not installed")


def _inputs(seed, events, n_in, n_out, density):
    rng = np.random.default_rng(seed)
    w = rng.uniform(-1, 1, size=(n_out, n_in))
    b = rng.uniform(-1, 1, size=n_out)
    c = rng.integers(1, 5, size=n_out).astype(np.int64)
    epsp = (rng.random((events, n_in)) < density).astype(np.uint8)
    return w, b, c, epsp, rng.random(events)


@given(
    st.integers(0, 2**32 - 1),
    st.integers(1, 60),
    st.integers(1, 12),
    st.integers(1, 6),
    st.floats(0.0, 1.0),
    st.floats(0.1, 3.0),
)
def test_train_kernels_agree(seed, events, n_in, n_out, density, eta0):
    w, b, c, epsp, u = _inputs(seed, events, n_in, n_out, density)
    a = (w.copy(), b.copy(), c.copy())
    z = (w.copy(), b.copy(), c.copy())
    kernels._train_events_nb(*a, eta0, epsp, u)
    kernels._train_events_py(*z, eta0, epsp, u)
    np.testing.assert_array_equal(a[2], z[2])
    np.testing.assert_allclose(a[0], z[0], rtol=0, atol=1e-12)
    np.testing.assert_allclose(a[1], z[1], rtol=0, atol=1e-12)


@given(st.integers(0, 2**32 - 1), st.integers(1, 50), st.integers(1, 90), st.integers(1, 9))
def test_emission_kernels_agree(seed, events, n_in, n_out):
    w, b, _, epsp, _ = _inputs(seed, events, n_in, n_out, 0.4)
    for x, y in zip(kernels._emission_terms_nb(w, b, epsp), kernels._emission_terms_py(w, b, epsp)):
        np.testing.assert_allclose(x, y, rtol=0, atol=1e-12)


def test_emission_terms_empty():
    peak, lse = kernels.emission_terms(np.zeros((2, 3)), np.zeros(2), np.zeros((0, 3), dtype=np.uint8))
    assert peak.shape == lse.shape == (0,)


@pytest.mark.parametrize("flag, backend", [("0", "numpy"), ("off", "numpy"), ("1", "numba")])
def test_env_flag_selects_backend(flag, backend):
    env = {**os.environ, "HMMSNN_NUMBA": flag}
    out = subprocess.run(
        [sys.executable, "-c", "from hmmsnn import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == backend


def test_numpy_backend_trains_identical_model():
    code = (
        "import numpy as np\n"
        "from hmmsnn.synthetic import make_sequence\n"
        "from hmmsnn.training import TrainConfig, train_models\n"
        "from hmmsnn.persistence import dumps_models\n"
        "cfg = TrainConfig.synthetic(iterations=2)\n"
        "data = {'ABCD': [make_sequence('ABCD', s) for s in range(2)]}\n"
        "print(dumps_models(train_models(data, cfg), cfg, 'synthetic'))\n"
    )
    runs = {}
    for flag in ("0", "1"):
        env = {**os.environ, "HMMSNN_NUMBA": flag}
        runs[flag] = subprocess.run(
            [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
        ).stdout
    import json

    a, b = json.loads(runs["0"]), json.loads(runs["1"])
    for sa, sb in zip(a["models"][0]["states"], b["models"][0]["states"]):
        assert sa["fire_counts"] == sb["fire_counts"]
        np.testing.assert_allclose(sa["weights"], sb["weights"], rtol=0, atol=1e-9)
