import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freedeconv.eigenmatrix import (
    ContourSamples,
    EigenmatrixConfig,
    SparseMeasure,
    build_eigenmatrix,
    build_krylov,
    cauchy_kernel,
    chebyshev_nodes,
    esprit_locations,
    recover_measure,
    solve_weights,
)
from freedeconv.errors import DomainError, RecoveryError
from freedeconv.transforms import ContourConfig, sample_contour

EX1 = SparseMeasure([-1.0, 0.2, 1.0], [0.25, 0.5, 0.25])
UNIT = EigenmatrixConfig((-1.0, 1.0))


def exact_samples(measure, interval=(-1.0, 1.0), contour=ContourConfig()):
    pts = sample_contour(interval, contour)
    return ContourSamples(pts, measure.stieltjes(pts))


def krylov_for(measure, config=UNIT, n=None):
    s = exact_samples(measure, config.interval)
    op = build_eigenmatrix(s.points, config)
    n = measure.n if n is None else n
    return build_krylov(op, s.values, config.resolve_n_l(n, len(s)), n=n)


# measures with n <= 5 atoms in [-1, 1], gaps >= 0.1, weights >= 0.05
@st.composite
def sparse_measures(draw):
    n = draw(st.integers(1, 5))
    gaps = draw(st.lists(st.floats(0.0, 1.0), min_size=n + 1, max_size=n + 1))
    slack = 2.0 - 0.1 * (n - 1)
    g = np.array(gaps) + 1e-3
    g = g / g.sum() * slack
    atoms = -1.0 + np.cumsum(g[:n]) + 0.1 * np.arange(n)
    raw = np.array(draw(st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n))) + 1e-3
    weights = 0.05 + (1 - 0.05 * n) * raw / raw.sum()
    return SparseMeasure(atoms, weights / weights.sum())


class TestSparseMeasure:
    def test_rejects_unsorted_atoms(self):
        with pytest.raises(ValueError, match="increasing"):
            SparseMeasure([0.2, -1.0], [0.5, 0.5])

    def test_rejects_bad_mass(self):
        with pytest.raises(ValueError, match="sum"):
            SparseMeasure([0.0, 1.0], [0.5, 0.6])

    def test_rejects_negative_weight(self):
        with pytest.raises(ValueError):
            SparseMeasure([0.0, 1.0], [1.5, -0.5])

    def test_dict_round_trip(self):
        back = SparseMeasure.from_dict(EX1.to_dict())
        np.testing.assert_array_equal(back.atoms, EX1.atoms)
        np.testing.assert_array_equal(back.weights, EX1.weights)

    def test_normalized_sorts(self):
        m = SparseMeasure.normalized([1.0, -1.0], [1.0, 3.0])
        np.testing.assert_array_equal(m.atoms, [-1.0, 1.0])
        np.testing.assert_allclose(m.weights, [0.75, 0.25])


class TestContourSamples:
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            ContourSamples([1j, -1j], [1.0])

    def test_conjugate_symmetry_detected(self):
        s = exact_samples(EX1)
        assert s.is_conjugate_symmetric()
        broken = ContourSamples(s.points, s.values + 1e-3j)
        assert not broken.is_conjugate_symmetric()


class TestCauchyKernel:
    @pytest.mark.parametrize("z, x, expected", [(2, 1, 1), (1j, 0, -1j), (0.5 + 0.5j, 0.5, -2j)])
    def test_values(self, z, x, expected):
        assert cauchy_kernel(z, x) == pytest.approx(expected, abs=1e-15)

    def test_pole(self):
        with pytest.raises(DomainError):
            cauchy_kernel(0.3, 0.3)


def test_chebyshev_nodes_increasing_inside():
    x = chebyshev_nodes(-2.0, 3.0, 17)
    assert np.all(np.diff(x) > 0)
    assert x[0] > -2.0 and x[-1] < 3.0
    with pytest.raises(ValueError):
        chebyshev_nodes(-1, 1, 1)


class TestBuildEigenmatrix:
    def test_sixteen_point_residual(self):
        pts = sample_contour((-1, 1), ContourConfig(16))
        op = build_eigenmatrix(pts, EigenmatrixConfig((-1, 1), n_c=32))
        assert np.isfinite(op.eigen_residual)
        # calibrated once: 3.4e-6 on this geometry
        assert op.eigen_residual <= 1e-3
        assert op.operator_norm <= 10.0

    def test_point_on_interval_rejected(self):
        pts = np.array([0.5 + 0j, 2 + 1j])
        with pytest.raises(DomainError):
            build_eigenmatrix(pts, UNIT)

    def test_single_node_rejected(self):
        with pytest.raises(ValueError):
            EigenmatrixConfig((-1, 1), n_c=1)

    @pytest.mark.parametrize("n_z", [4, 8, 16, 32, 64])
    @pytest.mark.parametrize("cap", [1.5, 2.0, 10.0, 100.0])
    @pytest.mark.parametrize("aspect", [0.1, 0.5, 1.0])
    def test_norm_cap_and_eigen_relation(self, n_z, cap, aspect):
        pts = sample_contour((-1, 1), ContourConfig(n_z, 0.5, aspect))
        config = EigenmatrixConfig((-1, 1), norm_cap=cap)
        op = build_eigenmatrix(pts, config)
        assert op.operator_norm <= cap
        assert np.linalg.norm(op.matrix, 2) <= cap * (1 + 1e-12)
        assert op.eigen_residual <= 10 * op.truncation_level * cap

    def test_recorded_residual_matches_direct(self):
        pts = sample_contour((-1, 1), ContourConfig(16))
        config = EigenmatrixConfig((-1, 1))
        op = build_eigenmatrix(pts, config)
        nodes = op.to_unit(op.chebyshev_nodes)
        unit = op.to_unit(pts)
        B = 1.0 / (unit[:, None] - nodes)
        B /= np.linalg.norm(B, axis=0)
        direct = np.max(np.linalg.norm(op.matrix @ B - B * nodes, axis=0))
        assert op.eigen_residual == pytest.approx(direct, rel=1e-12)


class TestKrylov:
    def test_columns_are_matrix_powers(self):
        pts = sample_contour((-1, 1), ContourConfig(16))
        op = build_eigenmatrix(pts, UNIT)
        u = EX1.stieltjes(pts)
        for n_l in range(1, 5):
            T, diag = build_krylov(op, u, n_l)
            assert T.shape == (16, n_l + 1)
            for k in range(n_l + 1):
                direct = np.linalg.matrix_power(op.matrix, k) @ u
                np.testing.assert_allclose(T[:, k], direct, rtol=1e-12, atol=1e-14)
            assert diag.singular_values.size == min(16, n_l + 1)
            assert np.all(np.diff(diag.singular_values) <= 0)

    def test_single_spike_rank_one(self):
        _, diag = krylov_for(SparseMeasure([0.3], [1.0]))
        s = diag.singular_values
        assert s[1] / s[0] <= 1e-6

    def test_zero_input(self):
        op = build_eigenmatrix(sample_contour((-1, 1)), UNIT)
        _, diag = build_krylov(op, np.zeros(64), 3)
        assert np.all(diag.singular_values == 0)


class TestEsprit:
    def test_point_mass(self):
        T, _ = krylov_for(SparseMeasure([0.3], [1.0]))
        np.testing.assert_allclose(esprit_locations(T, 1, (-1, 1)), [0.3], atol=1e-8)

    def test_example_measure(self):
        T, _ = krylov_for(EX1)
        np.testing.assert_allclose(esprit_locations(T, 3, (-1, 1)), EX1.atoms, atol=1e-6)

    def test_zero_rank(self):
        op = build_eigenmatrix(sample_contour((-1, 1)), UNIT)
        T, _ = build_krylov(op, np.zeros(64), 8)
        with pytest.raises(RecoveryError, match="rank"):
            esprit_locations(T, 1, (-1, 1))


class TestWeights:
    def test_point_mass(self):
        s = exact_samples(SparseMeasure([0.3], [1.0]))
        w, res = solve_weights(s, [0.3])
        assert w[0] == pytest.approx(1.0, abs=1e-10)
        assert res < 1e-12

    def test_example_weights(self):
        w, _ = solve_weights(exact_samples(EX1), EX1.atoms)
        np.testing.assert_allclose(w, EX1.weights, atol=1e-8)

    def test_conjugate_symmetric_gives_real_solution(self):
        s = exact_samples(EX1)
        rng = np.random.default_rng(3)
        half = s.points.size // 2
        noise = rng.normal(size=half) + 1j * rng.normal(size=half)
        values = s.values + 1e-3 * np.concatenate([noise, noise[::-1].conj()])
        design = 1.0 / (s.points[:, None] - EX1.atoms)
        coef, *_ = np.linalg.lstsq(design, values, rcond=None)
        assert np.max(np.abs(coef.imag)) < 1e-12
        assert ContourSamples(s.points, values).is_conjugate_symmetric()


class TestRecoverMeasure:
    def test_point_mass(self):
        m, diag = recover_measure(exact_samples(SparseMeasure([0.3], [1.0])), 1, UNIT)
        np.testing.assert_allclose(m.atoms, [0.3], atol=1e-8)
        np.testing.assert_allclose(m.weights, [1.0], atol=1e-8)
        assert diag.n_used == 1

    def test_zero_samples_fail_in_esprit(self):
        pts = sample_contour((-1, 1))
        with pytest.raises(RecoveryError) as err:
            recover_measure(ContourSamples(pts, np.zeros(64)), 2, UNIT)
        assert err.value.stage == "esprit"

    @settings(max_examples=120, deadline=None)
    @given(sparse_measures())
    def test_exact_recovery(self, measure):
        got, diag = recover_measure(exact_samples(measure), measure.n, UNIT)
        np.testing.assert_allclose(got.atoms, measure.atoms, atol=1e-6)
        np.testing.assert_allclose(got.weights, measure.weights, atol=1e-6)

    @settings(max_examples=30, deadline=None)
    @given(sparse_measures(), st.randoms(use_true_random=False))
    def test_permutation_invariance(self, measure, rnd):
        s = exact_samples(measure)
        order = list(range(len(s)))
        rnd.shuffle(order)
        a, _ = recover_measure(s, measure.n, UNIT)
        b, _ = recover_measure(s.permuted(order), measure.n, UNIT)
        np.testing.assert_allclose(b.atoms, a.atoms, atol=1e-10)
        np.testing.assert_allclose(b.weights, a.weights, atol=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(sparse_measures())
    def test_conjugation_invariance(self, measure):
        s = exact_samples(measure)
        a, _ = recover_measure(s, measure.n, UNIT)
        b, _ = recover_measure(s.conjugated(), measure.n, UNIT)
        np.testing.assert_allclose(b.atoms, a.atoms, atol=1e-10)
        np.testing.assert_allclose(b.weights, a.weights, atol=1e-10)
