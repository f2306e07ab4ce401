import math

import numpy as np
import pytest

from wepinn import geometry as geo
from wepinn.errors import ConfigError, ContractError


def domain_1d(x_lo=-1.0, x_hi=1.0, t_end=1.0):
    return geo.SpaceTimeDomain(np.array([x_lo]), np.array([x_hi]), t_end)


class TestGaussLegendre:
    def test_q1_midpoint(self):
        r = geo.gauss_legendre(1)
        assert np.array_equal(r.nodes, [0.0])
        assert np.array_equal(r.weights, [2.0])

    def test_q2_closed_form(self):
        r = geo.gauss_legendre(2)
        assert r.nodes == pytest.approx([-1 / math.sqrt(3), 1 / math.sqrt(3)], abs=1e-15)
        assert r.weights == pytest.approx([1.0, 1.0], abs=1e-15)

    @pytest.mark.parametrize("q", [1, 2, 3, 4, 6, 8, 12, 20, 32])
    def test_exactness_to_degree_2q_minus_1(self, q):
        r = geo.gauss_legendre(q)
        assert abs(float(r.weights.sum()) - 2.0) < 1e-14
        for k in range(2 * q):
            exact = 0.0 if k % 2 else 2.0 / (k + 1)
            assert abs(float(np.sum(r.weights * r.nodes**k)) - exact) < 1e-12

    def test_q6_degree_11(self):
        r = geo.gauss_legendre(6)
        for k in range(12):
            exact = 0.0 if k % 2 else 2.0 / (k + 1)
            assert abs(float(np.sum(r.weights * r.nodes**k)) - exact) < 1e-13

    def test_symmetry(self):
        for q in (5, 6, 9, 16):
            r = geo.gauss_legendre(q)
            assert np.array_equal(r.nodes, -r.nodes[::-1])
            assert np.array_equal(r.weights, r.weights[::-1])

    @pytest.mark.parametrize("q", [0, 33, -1])
    def test_out_of_range(self, q):
        with pytest.raises(ConfigError):
            geo.gauss_legendre(q)

    def test_matches_numpy_reference(self):
        x_ref, w_ref = np.polynomial.legendre.leggauss(10)
        r = geo.gauss_legendre(10)
        assert np.max(np.abs(r.nodes - x_ref)) < 1e-14
        assert np.max(np.abs(r.weights - w_ref)) < 1e-14


class TestIntegrateInterval:
    def test_constant(self):
        r = geo.gauss_legendre(3)
        assert geo.integrate_interval(r, -2.0, 5.0, lambda x: 3.0 * np.ones_like(x)) \
            == pytest.approx(21.0, abs=1e-13)

    def test_x_squared_q2(self):
        r = geo.gauss_legendre(2)
        got = geo.integrate_interval(r, 0.0, 1.0, lambda x: x**2)
        assert got == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_sin_q6(self):
        r = geo.gauss_legendre(6)
        got = geo.integrate_interval(r, 0.0, math.pi, np.sin)
        assert got == pytest.approx(2.0, abs=1e-9)

    def test_bad_bounds(self):
        with pytest.raises(ContractError):
            geo.integrate_interval(geo.gauss_legendre(2), 1.0, 1.0, lambda x: x)


class TestIntegrateFace2d:
    def test_unit_constant(self):
        r = geo.gauss_legendre(2)
        got = geo.integrate_face_2d(r, r, (0, 1, 0, 1), lambda x, y: np.ones_like(x * y))
        assert got == pytest.approx(1.0, abs=1e-14)

    def test_xy(self):
        r = geo.gauss_legendre(2)
        got = geo.integrate_face_2d(r, r, (0, 1, 0, 1), lambda x, y: x * y)
        assert got == pytest.approx(0.25, abs=1e-15)

    def test_x3y5_exact(self):
        r = geo.gauss_legendre(3)
        got = geo.integrate_face_2d(r, r, (0, 1, 0, 1), lambda x, y: x**3 * y**5)
        assert got == pytest.approx(1.0 / 24.0, abs=1e-15)

    def test_degenerate(self):
        r = geo.gauss_legendre(2)
        with pytest.raises(ContractError):
            geo.integrate_face_2d(r, r, (0, 0, 0, 1), lambda x, y: x)


class TestCompositeRule:
    def test_is_valid_rule_and_more_accurate(self):
        base = geo.gauss_legendre(6)
        fine = geo.composite_rule(base, 16)
        assert abs(float(fine.weights.sum()) - 2.0) < 1e-12
        step = lambda x: np.where(x > 0.123, 1.0, 0.0)
        exact = 1.0 - 0.123
        err_base = abs(float(np.sum(base.weights * step(base.nodes))) - exact)
        err_fine = abs(float(np.sum(fine.weights * step(fine.nodes))) - exact)
        assert err_fine < err_base / 8.0


class TestSampleVolumes:
    def test_empty(self, rng):
        cfg = geo.SamplerConfig(0, 0.1, 0.5, 0.1, 0.5)
        assert geo.sample_volumes(domain_1d(), cfg, rng) == []

    def test_forced_whole_domain(self, rng):
        dom = domain_1d()
        cfg = geo.SamplerConfig(10, 2.0, 2.0, 1.0, 1.0)
        for v in geo.sample_volumes(dom, cfg, rng):
            assert v.x_lo[0] == pytest.approx(-1.0, abs=1e-12)
            assert v.x_hi[0] == pytest.approx(1.0, abs=1e-12)
            assert v.t_lo == pytest.approx(0.0, abs=1e-12)
            assert v.t_hi == pytest.approx(1.0, abs=1e-12)

    def test_inside_domain_positive_measure_multiscale(self):
        dom = domain_1d()
        cfg = geo.SamplerConfig(5000, 0.02 * 2, 0.5 * 2, 0.02, 0.5)
        vols = geo.sample_volumes(dom, cfg, np.random.default_rng(0))
        assert len(vols) == 5000
        lx = np.array([v.x_hi[0] - v.x_lo[0] for v in vols])
        for v in vols[::100]:
            assert v.x_lo[0] >= -1.0 - 1e-12 and v.x_hi[0] <= 1.0 + 1e-12
            assert 0.0 - 1e-12 <= v.t_lo < v.t_hi <= 1.0 + 1e-12
            assert v.measure > 0.0
        assert lx.max() / lx.min() >= 10.0  # sizes span at least a decade

    def test_deterministic_given_seed(self):
        dom = domain_1d()
        cfg = geo.SamplerConfig(50, 0.1, 0.9, 0.1, 0.5)
        a = geo.sample_volume_set(dom, cfg, np.random.default_rng(9))
        b = geo.sample_volume_set(dom, cfg, np.random.default_rng(9))
        assert np.array_equal(a.x_lo, b.x_lo) and np.array_equal(a.t_hi, b.t_hi)

    def test_infeasible_bounds(self, rng):
        with pytest.raises(ConfigError):
            geo.sample_volumes(domain_1d(), geo.SamplerConfig(5, 0.1, 3.0, 0.1, 0.5), rng)


class TestFaces:
    def test_1d_count_and_normals(self):
        v = geo.ControlVolume(np.array([0.0]), np.array([1.0]), 0.0, 1.0)
        fs = geo.faces(v)
        assert len(fs) == 4
        normals = {tuple(f.normal) for f in fs}
        assert normals == {(0.0, -1.0), (0.0, 1.0), (-1.0, 0.0), (1.0, 0.0)}
        bottom = fs[0]
        assert bottom.normal[1] == -1.0 and bottom.value == 0.0
        right = [f for f in fs if f.normal[0] == 1.0][0]
        assert right.value == 1.0

    def test_2d_count(self):
        v = geo.ControlVolume(np.array([0.0, 0.0]), np.array([1.0, 2.0]), 0.0, 1.0)
        assert len(geo.faces(v)) == 6

    def test_face_measures_sum(self):
        v = geo.ControlVolume(np.array([0.0]), np.array([1.0]), 0.0, 1.0)
        assert sum(f.measure for f in geo.faces(v)) == pytest.approx(4.0)

    def test_quadrature_weights_sum_to_measure(self):
        rule = geo.gauss_legendre(4)
        v = geo.ControlVolume(np.array([0.0, -1.0]), np.array([2.0, 1.0]), 0.0, 0.5)
        for f in geo.faces(v):
            fq = geo.face_quadrature(f, rule)
            assert float(fq.weights.sum()) == pytest.approx(f.measure, abs=1e-12)
            assert np.linalg.norm(f.normal) == 1.0

    @pytest.mark.parametrize("d", [1, 2])
    def test_divergence_free_constants(self, d, rng):
        # sum over faces of int (c . n) dS == 0 for any constant vector c
        rule = geo.gauss_legendre(3)
        for _ in range(10):
            lo = rng.uniform(-1, 0, size=d)
            hi = lo + rng.uniform(0.1, 1.0, size=d)
            v = geo.ControlVolume(lo, hi, 0.0, float(rng.uniform(0.1, 1.0)))
            c = rng.normal(size=d + 1)
            total = 0.0
            for f in geo.faces(v):
                fq = geo.face_quadrature(f, rule)
                total += float(fq.weights.sum() * np.dot(c, f.normal))
            assert abs(total) < 1e-12


class TestTvdCloud:
    def test_inside_and_sorted_and_deterministic(self):
        dom = domain_1d()
        t1, x1 = geo.sample_tvd_cloud(dom, 8, 64, np.random.default_rng(4))
        t2, x2 = geo.sample_tvd_cloud(dom, 8, 64, np.random.default_rng(4))
        assert np.array_equal(x1, x2) and np.array_equal(t1, t2)
        assert np.all((t1 >= 0) & (t1 <= 1))
        assert np.all((x1 >= -1) & (x1 <= 1))
        assert np.all(np.diff(x1, axis=1) >= 0)

    def test_counts_validated(self, rng):
        with pytest.raises(ConfigError):
            geo.sample_tvd_cloud(domain_1d(), 1, 64, rng)
        with pytest.raises(ConfigError):
            geo.sample_tvd_cloud(domain_1d(), 4, 1, rng)


class TestVolumeBatch:
    def test_batch_matches_face_quadrature(self, rng):
        rule = geo.gauss_legendre(5)
        vols = [geo.ControlVolume(np.array([rng.uniform(-1, 0)]),
                                  np.array([rng.uniform(0.1, 1)]),
                                  0.1, 0.7) for _ in range(3)]
        batch = geo.volume_batch_quadrature(vols, rule)
        f = lambda x, t: np.sin(3 * x) + t**2
        for i, v in enumerate(vols):
            via_faces = 0.0
            for face in geo.faces(v):
                fq = geo.face_quadrature(face, rule)
                vals = f(fq.points[:, 0], fq.points[:, 1])
                via_faces += float(fq.weights @ (vals * (face.normal[1] + face.normal[0])))
            pts = batch.points[i]
            vals = f(pts[:, 0], pts[:, 1])
            via_batch = float(np.sum(batch.weights[i] * vals
                                     * (batch.n_t[i] + batch.n_x[i])))
            assert via_batch == pytest.approx(via_faces, abs=1e-12)

    def test_boundary_side_flags(self):
        dom = domain_1d(0.0, 1.0, 1.0)
        rule = geo.gauss_legendre(2)
        vols = [geo.ControlVolume(np.array([0.0]), np.array([0.5]), 0.1, 0.2),
                geo.ControlVolume(np.array([0.3]), np.array([1.0]), 0.1, 0.2),
                geo.ControlVolume(np.array([0.3]), np.array([0.6]), 0.1, 0.2)]
        batch = geo.volume_batch_quadrature(vols, rule, dom)
        q = 2
        assert np.all(batch.boundary_side[0, 2 * q:3 * q] == -1)
        assert np.all(batch.boundary_side[0, 3 * q:] == 0)
        assert np.all(batch.boundary_side[1, 3 * q:] == +1)
        assert not batch.boundary_side[2].any()

    def test_volume_set_interop(self, rng):
        dom = domain_1d()
        cfg = geo.SamplerConfig(20, 0.1, 0.5, 0.1, 0.5)
        vs = geo.sample_volume_set(dom, cfg, np.random.default_rng(3))
        as_list = [vs[i] for i in range(len(vs))]
        b1 = geo.volume_batch_quadrature(vs, geo.gauss_legendre(3), dom)
        b2 = geo.volume_batch_quadrature(as_list, geo.gauss_legendre(3), dom)
        assert np.array_equal(b1.points, b2.points)
        assert np.array_equal(b1.measures, b2.measures)
        assert np.array_equal(b1.boundary_side, b2.boundary_side)


class TestControlVolume:
    def test_measure(self):
        v = geo.ControlVolume(np.array([0.0, 1.0]), np.array([2.0, 3.0]), 1.0, 1.5)
        assert v.measure == pytest.approx(2.0)

    def test_invalid(self):
        with pytest.raises(ConfigError):
            geo.ControlVolume(np.array([1.0]), np.array([0.0]), 0.0, 1.0)
        with pytest.raises(ConfigError):
            geo.ControlVolume(np.array([0.0]), np.array([1.0]), 1.0, 1.0)
