import numpy as np
import pytest

from randskel import (
    SrttSketch,
    gen_snn_operator,
    make_embedding,
    make_gaussian,
    make_sparse_sign,
    make_srtt,
    sketch_rows,
    SnnParams,
    snn_weights,
)
from randskel.errors import BadShape, ShapeMismatch
from oracles import dht_matrix


class TestGaussian:
    def test_deterministic_per_seed(self):
        a = make_gaussian(2, 5, seed=7)
        b = make_gaussian(2, 5, seed=7)
        assert np.array_equal(a.matrix, b.matrix)
        assert not np.array_equal(a.matrix, make_gaussian(2, 5, seed=8).matrix)

    def test_moments(self):
        # >= 1e5 entries: mean within 3 standard errors, variance within 5%
        l, m = 100, 1200
        g = make_gaussian(l, m, seed=0).matrix
        n_entries = g.size
        se = (1 / np.sqrt(l)) / np.sqrt(n_entries)
        assert abs(g.mean()) < 3 * se
        assert abs(g.var() - 1 / l) < 0.05 / l

    def test_basis_extraction(self):
        op = make_gaussian(3, 6, seed=1)
        e4 = np.zeros(6)
        e4[3] = 1.0
        assert np.array_equal(op.apply(e4), op.matrix[:, 3])

    def test_bad_shapes(self):
        with pytest.raises(BadShape):
            make_gaussian(0, 5)
        with pytest.raises(BadShape):
            make_gaussian(6, 5)


class TestSrtt:
    def test_full_sampling_is_isometry(self):
        m = 32
        op = make_srtt(m, m, seed=3)
        rng = np.random.default_rng(0)
        for _ in range(5):
            x = rng.standard_normal(m)
            assert abs(np.linalg.norm(op.apply(x)) - np.linalg.norm(x)) < 1e-10

    def test_transform_orthonormal_materialized(self):
        m = 128
        H = dht_matrix(m)
        assert np.linalg.norm(H.T @ H - np.eye(m), 2) < 1e-10
        # operator with trivial permutation/signs applies exactly H
        op = SrttSketch(out_dim=m, in_dim=m, seed=None,
                        rows=np.arange(m), signs=np.ones(m),
                        perm_in=np.arange(m))
        X = op.to_dense()
        assert np.abs(X - H).max() < 1e-12

    def test_constant_vector_concentrates(self):
        # with signs and permutation forced trivial the transform piles the
        # energy of a constant vector onto the first coefficient
        m = 64
        op = SrttSketch(out_dim=m, in_dim=m, seed=None,
                        rows=np.arange(m), signs=np.ones(m),
                        perm_in=np.arange(m))
        y = op.apply(np.ones(m))
        assert abs(y[0] - np.sqrt(m)) < 1e-10
        assert np.abs(y[1:]).max() < 1e-10

    def test_isotropy_monte_carlo(self):
        m, l = 64, 16
        rng = np.random.default_rng(4)
        x = rng.standard_normal(m)
        acc = 0.0
        n_ops = 2000
        for seed in range(n_ops):
            acc += np.linalg.norm(make_srtt(l, m, seed=seed).apply(x)) ** 2
        assert abs(acc / n_ops - np.linalg.norm(x) ** 2) < 0.05 * np.linalg.norm(x) ** 2


class TestSparseSign:
    def test_column_sparsity_exact(self):
        op = make_sparse_sign(10, 30, zeta=4, seed=2)
        dense = op.to_dense()
        assert ((dense != 0).sum(axis=0) == 4).all()
        vals = np.abs(dense[dense != 0])
        assert np.allclose(vals, 1 / np.sqrt(4))

    def test_default_zeta(self):
        assert make_sparse_sign(20, 40, seed=0).zeta == 8
        assert make_sparse_sign(5, 40, seed=0).zeta == 5

    def test_zeta_bounds(self):
        with pytest.raises(BadShape):
            make_sparse_sign(10, 20, zeta=1)
        with pytest.raises(BadShape):
            make_sparse_sign(10, 20, zeta=11)

    def test_isotropy_monte_carlo(self):
        m, l = 64, 16
        rng = np.random.default_rng(5)
        x = rng.standard_normal(m)
        acc = 0.0
        n_ops = 2000
        for seed in range(n_ops):
            acc += np.linalg.norm(make_sparse_sign(l, m, zeta=8, seed=seed).apply(x)) ** 2
        assert abs(acc / n_ops - np.linalg.norm(x) ** 2) < 0.05 * np.linalg.norm(x) ** 2

    def test_matches_densified_matmul(self):
        rng = np.random.default_rng(6)
        A = rng.standard_normal((30, 12))
        op = make_sparse_sign(7, 30, zeta=3, seed=9)
        assert np.abs(op.apply(A) - op.to_dense() @ A).max() < 1e-13


class TestSketchRows:
    def test_identity_returns_operator(self):
        op = make_gaussian(4, 9, seed=1)
        assert np.allclose(sketch_rows(op, np.eye(9)), op.to_dense())

    def test_shape_mismatch(self):
        op = make_gaussian(4, 9, seed=1)
        with pytest.raises(ShapeMismatch):
            sketch_rows(op, np.ones((8, 3)))

    def test_full_row_rank_on_lowrank_input(self):
        # l=10 sketch of a rank-20 matrix keeps full row rank in every trial
        rng = np.random.default_rng(7)
        A = rng.standard_normal((100, 20)) @ rng.standard_normal((20, 50))
        for seed in range(1000):
            X = sketch_rows(make_gaussian(10, 100, seed=seed), A)
            s = np.linalg.svd(X, compute_uv=False)
            assert s[-1] > 1e-10

    def test_pivot_invariance_under_operator_scaling(self):
        from randskel import cpqr, lupp
        rng = np.random.default_rng(8)
        A = rng.standard_normal((40, 25))
        X = sketch_rows(make_gaussian(6, 40, seed=3), A)
        for c in (2.0, 8.0, 0.25):
            assert np.array_equal(lupp(X.T).perm, lupp((c * X).T).perm)
            assert np.array_equal(cpqr(X).perm, cpqr(c * X).perm)

    @pytest.mark.parametrize("kind", ["gaussian", "srtt", "sparse_sign"])
    def test_implicit_operator_agrees_with_dense(self, kind):
        params = SnnParams(m=96, n=80, r=30, s=snn_weights(2, 10, 30),
                           density=0.1, seed=11)
        op_mat = gen_snn_operator(params)
        dense = op_mat.to_dense()
        emb = make_embedding(kind, 12, 96, seed=5)
        got = sketch_rows(emb, op_mat)
        want = emb.to_dense() @ dense
        denom = np.linalg.norm(want)
        assert np.linalg.norm(got - want) < 1e-12 * max(denom, 1.0)


def test_reproducible_sketch_output():
    rng = np.random.default_rng(9)
    A = rng.standard_normal((50, 20))
    for kind in ("gaussian", "srtt", "sparse_sign"):
        a = make_embedding(kind, 8, 50, seed=123).apply(A)
        b = make_embedding(kind, 8, 50, seed=123).apply(A)
        assert np.array_equal(a, b)
