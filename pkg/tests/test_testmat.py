import numpy as np
import pytest

from randskel import (
    ExplicitSpectrum,
    FastDecay,
    SlowDecay,
    SnnParams,
    StepSpectrum,
    gen_gaussian_spectrum,
    gen_snn,
    gen_snn_operator,
    load_csv,
    save_csv,
    snn_weights,
    spectrum_values,
    svd_thin,
)
from randskel.errors import BadShape, NonNumericCell, RaggedRows, ShapeMismatch


class TestSnn:
    def test_rank_one_dense(self):
        params = SnnParams(m=6, n=5, r=1, s=np.array([1.0]), density=1.0, seed=0)
        A = gen_snn(params)
        f = svd_thin(A)
        assert f.rank == 1
        # singular value equals the product of the factor norms
        op = gen_snn_operator(params)
        x = op.x_factors.toarray()[:, 0]
        y = op.y_factors.toarray()[:, 0]
        assert abs(f.sigma[0] - np.linalg.norm(x) * np.linalg.norm(y)) < 1e-12

    def test_weights_profile(self):
        s = snn_weights(2, 100, 300)
        assert s[0] == 2.0
        assert s[99] == 2.0 / 100
        assert s[100] == 1.0 / 101
        assert (np.diff(s) <= 0).all()

    def test_nonnegative_over_seeds(self):
        for seed in range(50):
            params = SnnParams(m=20, n=25, r=5, s=snn_weights(2, 3, 5),
                               density=0.2, seed=seed)
            assert gen_snn(params).min() >= 0.0

    def test_deterministic(self):
        params = SnnParams(m=12, n=10, r=4, s=snn_weights(2, 2, 4),
                           density=0.3, seed=5)
        assert np.array_equal(gen_snn(params), gen_snn(params))

    def test_param_validation(self):
        with pytest.raises(BadShape):
            SnnParams(m=5, n=5, r=8, s=np.ones(8))
        with pytest.raises(BadShape):
            SnnParams(m=5, n=5, r=2, s=np.array([1.0, 2.0]))  # increasing


class TestImplicitOperator:
    params = SnnParams(m=256, n=256, r=40, s=snn_weights(2, 10, 40),
                       density=0.05, seed=3)

    def test_matvec_zero(self):
        op = gen_snn_operator(self.params)
        assert np.array_equal(op.matvec(np.zeros(256)), np.zeros(256))

    def test_matvec_matches_densified(self):
        op = gen_snn_operator(self.params)
        A = op.to_dense()
        rng = np.random.default_rng(0)
        v = rng.standard_normal(256)
        assert np.linalg.norm(op.matvec(v) - A @ v) < 1e-12 * np.linalg.norm(A @ v)
        w = rng.standard_normal(256)
        assert np.linalg.norm(op.matvec_adjoint(w) - A.T @ w) < 1e-12 * np.linalg.norm(A.T @ w)

    def test_adjoint_identity(self):
        op = gen_snn_operator(self.params)
        rng = np.random.default_rng(1)
        v = rng.standard_normal(256)
        w = rng.standard_normal(256)
        assert abs(op.matvec(v) @ w - v @ op.matvec_adjoint(w)) < 1e-12 * (
            np.linalg.norm(v) * np.linalg.norm(w))

    def test_row_column_extraction(self):
        op = gen_snn_operator(self.params)
        A = op.to_dense()
        J = np.array([3, 100, 7])
        I = np.array([0, 200, 11, 45])
        assert np.allclose(op.columns(J), A[:, J])
        assert np.allclose(op.rows(I), A[I, :])

    def test_shape_mismatch(self):
        op = gen_snn_operator(self.params)
        with pytest.raises(ShapeMismatch):
            op.matvec(np.zeros(10))


class TestSpectrumProfiles:
    def test_slow_decay_values(self):
        s = spectrum_values(SlowDecay(r1=20), 100)
        assert s[19] == 1.0
        assert abs(s[20] - 1 / np.sqrt(2)) < 1e-15

    def test_fast_decay_floor(self):
        s = spectrum_values(FastDecay(r1=20), 1500)
        assert s[19] == 1.0
        assert abs(s[20] - 0.99) < 1e-15
        assert s[-1] == 1e-3

    def test_step(self):
        s = spectrum_values(StepSpectrum(k=10, sigma1=1.5), 330)
        assert (s[:10] == 1.5).all()
        assert (s[10:] == 1.0).all()

    def test_explicit_checks_monotone(self):
        with pytest.raises(BadShape):
            spectrum_values(ExplicitSpectrum(values=np.array([1.0, 2.0])), 2)


class TestGaussianSpectrum:
    def test_spectrum_realized_exactly(self):
        A, U, sigma, V = gen_gaussian_spectrum(60, 40, SlowDecay(r1=5), seed=2, r=30)
        f = svd_thin(A)
        assert np.allclose(f.sigma[:30], sigma, atol=1e-10)
        assert np.linalg.norm(U.T @ U - np.eye(30), 2) < 1e-12
        assert np.linalg.norm((U * sigma) @ V.T - A) < 1e-12

    def test_step_sizing(self):
        # r = (1+beta) k with beta=32, k=10 -> 330; head/tail ratio is the gap
        k, beta = 10, 32
        r = (1 + beta) * k
        A, U, sigma, V = gen_gaussian_spectrum(r, r, StepSpectrum(k=k, sigma1=1.5),
                                               seed=3, r=r)
        assert sigma.size == 330
        assert sigma[0] / sigma[k] == 1.5


class TestCsv:
    def test_basic(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("1,2\n3,4\n")
        assert np.array_equal(load_csv(p), [[1.0, 2.0], [3.0, 4.0]])

    def test_header_detected(self, tmp_path):
        p = tmp_path / "b.csv"
        p.write_text("a,b\n1,2\n")
        A = load_csv(p)
        assert A.shape == (1, 2)

    def test_round_trip_lossless(self, tmp_path):
        rng = np.random.default_rng(4)
        A = rng.standard_normal((10, 7)) * np.exp(rng.standard_normal((10, 7)) * 5)
        p = tmp_path / "c.csv"
        save_csv(p, A)
        assert np.array_equal(load_csv(p), A)

    def test_ragged(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("1,2\n3\n")
        with pytest.raises(RaggedRows):
            load_csv(p)

    def test_non_numeric_cell(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("1,2\n3,oops\n")
        with pytest.raises(NonNumericCell) as exc:
            load_csv(p)
        assert "(1, 1)" in str(exc.value)
