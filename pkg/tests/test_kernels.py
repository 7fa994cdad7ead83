"""Backend parity: the compiled kernels and the pure-Python fallback must
produce bit-identical float64 results, not merely close ones."""

import os
import subprocess
import sys

import numpy as np
import pytest

from quantrank import _kernels as K

needs_native = pytest.mark.skipif(
    "native" not in K.available_backends(), reason="compiled kernels not built"
)


def _random_pairs(rng, n):
    # positive magnitudes, negatives and zeros all exercised
    vx = rng.uniform(-1000, 1000, size=n)
    vi = rng.uniform(-1000, 1000, size=n)
    sprinkle = rng.integers(0, n, size=n // 20)
    vx[sprinkle] = 0.0
    return vx, vi


class TestPureKernels:
    def test_phi_scalar_conditions(self):
        assert K.pure.phi_scalar(K.COND_EQ, 100.0, 100.0) == 1.0
        assert K.pure.phi_scalar(K.COND_LT, 200.0, 132.0) == 132.0 / 200.0
        assert K.pure.phi_scalar(K.COND_LT, 200.0, 236.5) == 0.0
        assert K.pure.phi_scalar(K.COND_GT, 500.0, 600.0) == 500.0 / 600.0
        assert K.pure.phi_scalar(K.COND_GT, 500.0, 400.0) == 0.0

    def test_qs_batch_two_sentences(self):
        values = np.array([236.5, 132.0, 850.0], dtype=np.float64)
        units = np.array([0, 0, 1], dtype=np.int32)
        offsets = np.array([0, 2, 3], dtype=np.int64)
        out = np.zeros(2)
        K.pure.qs_batch(K.COND_LT, 200.0, 0, values, units, offsets, out)
        assert out[0] == (0.0 + 132.0 / 200.0) / 2.0
        assert out[1] == 0.0

    def test_qs_batch_empty_slice(self):
        out = np.zeros(1)
        K.pure.qs_batch(
            K.COND_EQ,
            5.0,
            0,
            np.zeros(0),
            np.zeros(0, dtype=np.int32),
            np.array([0, 0], dtype=np.int64),
            out,
        )
        assert out[0] == 0.0

    def test_bm25_accumulate(self):
        ords = np.array([0, 2], dtype=np.int32)
        tfs = np.array([2.0, 1.0], dtype=np.float64)
        norms = np.array([0.5, 0.5, 0.25], dtype=np.float64)
        scores = np.zeros(3)
        K.pure.bm25_accumulate(1.5, 1.5, ords, tfs, norms, scores)
        assert scores[0] == 1.5 * 2.0 * 1.5 / 2.5
        assert scores[1] == 0.0
        assert scores[2] == 1.5 * 1.0 * 1.5 / 1.25


@needs_native
class TestBackendParity:
    def test_phi_scalar_identical(self):
        native = K.get_backend("native")
        pure = K.get_backend("pure")
        rng = np.random.default_rng(7)
        vx, vi = _random_pairs(rng, 3000)
        for cond in (K.COND_EQ, K.COND_LT, K.COND_GT):
            for x, i in zip(vx, vi):
                assert native.phi_scalar(cond, x, i) == pure.phi_scalar(cond, x, i)

    def test_phi_batch_identical(self):
        native = K.get_backend("native")
        pure = K.get_backend("pure")
        rng = np.random.default_rng(11)
        values = rng.uniform(-500, 1500, size=5000)
        for cond in (K.COND_EQ, K.COND_LT, K.COND_GT):
            for vx in (0.0, 0.25, 137.5, -3.0):
                a = np.zeros_like(values)
                b = np.zeros_like(values)
                native.phi_batch(cond, vx, values, a)
                pure.phi_batch(cond, vx, values, b)
                assert np.array_equal(a, b)

    def test_qs_batch_identical(self):
        native = K.get_backend("native")
        pure = K.get_backend("pure")
        rng = np.random.default_rng(13)
        n_sentences = 400
        counts = rng.integers(0, 5, size=n_sentences)
        offsets = np.zeros(n_sentences + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        total = int(offsets[-1])
        values = rng.uniform(0.001, 10000, size=total)
        units = rng.integers(0, 3, size=total).astype(np.int32)
        for cond in (K.COND_EQ, K.COND_LT, K.COND_GT):
            a = np.zeros(n_sentences)
            b = np.zeros(n_sentences)
            native.qs_batch(cond, 250.0, 1, values, units, offsets, a)
            pure.qs_batch(cond, 250.0, 1, values, units, offsets, b)
            assert np.array_equal(a, b)

    def test_bm25_accumulate_identical(self):
        native = K.get_backend("native")
        pure = K.get_backend("pure")
        rng = np.random.default_rng(17)
        n_docs = 1000
        norms = rng.uniform(0.25, 1.5, size=n_docs)
        a = np.zeros(n_docs)
        b = np.zeros(n_docs)
        for _ in range(20):
            n_post = int(rng.integers(1, 200))
            ords = np.sort(rng.choice(n_docs, size=n_post, replace=False)).astype(
                np.int32
            )
            tfs = rng.integers(1, 6, size=n_post).astype(np.float64)
            idf = float(rng.uniform(0.01, 3.0))
            native.bm25_accumulate(idf, 1.5, ords, tfs, norms, a)
            pure.bm25_accumulate(idf, 1.5, ords, tfs, norms, b)
        assert np.array_equal(a, b)


class TestBackendSelection:
    def test_available_backends_contains_pure(self):
        assert "pure" in K.available_backends()

    def test_get_backend_unknown(self):
        with pytest.raises(ValueError):
            K.get_backend("turbo")

    def _backend_in_subprocess(self, env_value):
        env = dict(os.environ)
        env["QUANTRANK_KERNELS"] = env_value
        return subprocess.run(
            [sys.executable, "-c", "import quantrank; print(quantrank.KERNEL_BACKEND)"],
            capture_output=True,
            text=True,
            env=env,
        )

    def test_env_forces_pure(self):
        proc = self._backend_in_subprocess("pure")
        assert proc.returncode == 0
        assert proc.stdout.strip() == "pure"

    @needs_native
    def test_env_forces_native(self):
        proc = self._backend_in_subprocess("native")
        assert proc.returncode == 0
        assert proc.stdout.strip() == "native"

    def test_env_rejects_unknown(self):
        proc = self._backend_in_subprocess("turbo")
        assert proc.returncode != 0
        assert "turbo" in proc.stderr
