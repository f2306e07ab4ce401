import numpy as np
import pytest

from wepinn import models
from wepinn.errors import AdmissibilityError, ConfigError

GAMMA = 1.4


def random_states(law_name, rng, n=1000):
    if law_name == "burgers":
        return rng.uniform(-3.0, 3.0, size=(n, 1))
    if law_name == "euler":
        rho = rng.uniform(0.05, 4.0, n)
        u = rng.uniform(-3.0, 3.0, n)
        p = rng.uniform(0.05, 4.0, n)
        return np.stack([rho, rho * u, 0.5 * rho * u**2 + p / (GAMMA - 1.0)], axis=-1)
    h = rng.uniform(0.05, 6.0, n)
    u = rng.uniform(-4.0, 4.0, n)
    return np.stack([h, h * u], axis=-1)


def make_law(name):
    if name == "euler":
        return models.euler_law(models.EulerParams(GAMMA))
    if name == "swe":
        return models.swe_law(models.SweParams(9.81))
    return models.burgers_law()


class TestBurgersValues:
    def test_zero_state(self):
        law = models.burgers_law()
        z = np.array([0.0])
        assert law.flux(z)[0, 0] == 0.0
        assert law.entropy(z) == 0.0
        assert law.entropy_flux(z)[0] == 0.0

    def test_direct_substitution(self):
        law = models.burgers_law()
        u = np.array([2.0])
        assert law.flux(u)[0, 0] == 2.0
        assert law.entropy(u) == 2.0
        assert law.entropy_flux(u)[0] == pytest.approx(8.0 / 3.0)

    def test_compatibility_identity(self, rng):
        # q'(u) = eta'(u) F'(u) reduces to u^2 = u * u
        law = models.burgers_law()
        u = rng.uniform(-5, 5, size=(200, 1))
        lhs = law.entropy_flux_grad(u)[..., 0, 0]
        rhs = law.entropy_grad(u)[..., 0] * law.flux_jac(u)[..., 0, 0, 0]
        assert np.allclose(lhs, rhs, atol=0.0)


class TestEulerValues:
    def test_sod_left_state(self):
        law = make_law("euler")
        U = models.primitive_to_conservative(law, np.array([1.0, 0.0, 1.0]))
        assert np.allclose(U, [1.0, 0.0, 2.5], rtol=0, atol=1e-12)
        assert np.allclose(law.flux(U)[..., 0], [0.0, 1.0, 0.0], atol=1e-12)

    def test_still_gas_entropy_flux(self):
        law = make_law("euler")
        U = np.array([1.0, 0.0, 2.5])
        assert law.entropy_flux(U)[0] == 0.0

    def test_inadmissible_raises(self):
        law = make_law("euler")
        with pytest.raises(AdmissibilityError):
            law.entropy(np.array([1.0, 0.0, -1.0]))
        with pytest.raises(AdmissibilityError):
            law.flux(np.array([-1.0, 0.0, 2.5]))

    def test_clamp_counts_and_floors(self):
        law = make_law("euler")
        U = np.array([[1.0, 0.0, 2.5], [-1.0, 0.0, 2.5], [1.0, 3.0, 1.0]])
        Uc, count = law.clamp(U)
        assert count == 2  # negative density and negative pressure rows
        assert np.all(law.admissible(Uc))
        assert np.array_equal(Uc[0], U[0])

    def test_gamma_validation(self):
        with pytest.raises(ConfigError):
            models.EulerParams(1.0)


class TestSweValues:
    def test_lake_at_rest_flux(self):
        law = make_law("swe")
        F = law.flux(np.array([2.0, 0.0]))[..., 0]
        assert np.allclose(F, [0.0, 0.5 * 9.81 * 4.0], atol=1e-15)

    def test_zero_velocity_entropy_flux(self):
        law = make_law("swe")
        assert law.entropy_flux(np.array([1.0, 0.0]))[0] == 0.0

    def test_dry_state_raises(self):
        law = make_law("swe")
        with pytest.raises(AdmissibilityError):
            law.flux(np.array([0.0, 0.0]))

    def test_g_validation(self):
        with pytest.raises(ConfigError):
            models.SweParams(0.0)

    def test_appendix_style_entropy_flux_is_incompatible(self, rng):
        # q = eta * u fails the compatibility relation the implemented flux obeys
        law = make_law("swe")
        U = random_states("swe", rng, 200)
        deta = law.entropy_grad(U)
        A = law.flux_jac(U)[..., 0, :, :]
        rhs = np.einsum("...i,...ij->...j", deta, A)
        h = 1e-7
        dq_naive = np.empty_like(U)
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            up, um = U + e, U - e
            qp = law.entropy(up) * up[..., 1] / up[..., 0]
            qm = law.entropy(um) * um[..., 1] / um[..., 0]
            dq_naive[..., j] = (qp - qm) / (2.0 * h)
        assert np.max(np.abs(dq_naive - rhs)) > 1.0


@pytest.mark.parametrize("name", ["burgers", "euler", "swe"])
class TestLawProperties:
    def test_compatibility_relation(self, name, rng):
        law = make_law(name)
        U = random_states(name, rng)
        lhs = law.entropy_flux_grad(U)[..., 0, :]
        rhs = np.einsum("...i,...ij->...j", law.entropy_grad(U),
                        law.flux_jac(U)[..., 0, :, :])
        assert np.max(np.abs(lhs - rhs) / (1.0 + np.abs(rhs))) < 1e-6

    def test_gradients_match_finite_differences(self, name, rng):
        law = make_law(name)
        U = random_states(name, rng, 300)
        h = 1e-7
        for j in range(law.m):
            e = np.zeros(law.m)
            e[j] = h
            for fn, grad in ((law.entropy, law.entropy_grad(U)[..., j]),
                             (lambda V: law.entropy_flux(V)[..., 0],
                              law.entropy_flux_grad(U)[..., 0, j])):
                fd = (fn(U + e) - fn(U - e)) / (2.0 * h)
                assert np.max(np.abs(fd - grad) / (1.0 + np.abs(grad))) < 1e-6
            fd = (law.flux(U + e)[..., 0] - law.flux(U - e)[..., 0]) / (2.0 * h)
            jac = law.flux_jac(U)[..., 0, :, j]
            assert np.max(np.abs(fd - jac) / (1.0 + np.abs(jac))) < 1e-6

    def test_flux_hessian_matches_finite_differences(self, name, rng):
        law = make_law(name)
        U = random_states(name, rng, 100)
        H2 = law.flux_hess(U)[..., 0, :, :, :]
        h = 1e-6
        for j in range(law.m):
            e = np.zeros(law.m)
            e[j] = h
            fd = (law.flux_jac(U + e) - law.flux_jac(U - e))[..., 0, :, :] / (2.0 * h)
            assert np.max(np.abs(fd - H2[..., j]) / (1.0 + np.abs(H2[..., j]))) < 1e-4

    def test_midpoint_convexity(self, name, rng):
        law = make_law(name)
        Ua = random_states(name, rng)
        Ub = random_states(name, rng)
        gap = 0.5 * (law.entropy(Ua) + law.entropy(Ub)) - law.entropy(0.5 * (Ua + Ub))
        assert np.min(gap) >= -1e-12

    def test_primitive_round_trip(self, name, rng):
        law = make_law(name)
        U = random_states(name, rng, 500)
        w = models.conservative_to_primitive(law, U)
        back = models.primitive_to_conservative(law, w)
        assert np.max(np.abs(back - U)) < 1e-12


class TestConversions:
    def test_euler_sod_left(self):
        law = make_law("euler")
        U = models.primitive_to_conservative(law, np.array([1.0, 0.0, 1.0]))
        assert np.allclose(U, [1.0, 0.0, 2.5], rtol=0, atol=1e-12)
        w = models.conservative_to_primitive(law, U)
        assert np.allclose(w, [1.0, 0.0, 1.0], rtol=0, atol=1e-12)

    def test_euler_sod_right_energy(self):
        law = make_law("euler")
        U = models.primitive_to_conservative(law, np.array([0.125, 0.0, 0.1]))
        assert U[2] == pytest.approx(0.25)

    def test_swe_trivial(self):
        law = make_law("swe")
        assert np.array_equal(
            models.primitive_to_conservative(law, np.array([5.0, 0.0])), [5.0, 0.0])

    def test_inadmissible_primitive(self):
        law = make_law("euler")
        with pytest.raises(AdmissibilityError):
            models.primitive_to_conservative(law, np.array([1.0, 0.0, -0.5]))

    def test_law_by_name(self):
        assert models.law_by_name("burgers").m == 1
        with pytest.raises(ConfigError):
            models.law_by_name("maxwell")
