import mpmath
import numpy as np
import pytest
from scipy.linalg import expm

from bottleflow.cascade import (
    PositiveLinearSystem,
    cascade_periodic_orbit,
    chain_system,
    dc_gain,
    load_system,
    random_positive_system,
    save_system,
    validate_positive_system,
    verify_average_response,
)
from bottleflow.core import ArcLevel, BottleneckParams, periodic_fixed_point, periodic_gain
from bottleflow.exceptions import DomainError
from bottleflow.signals import build_signal, constant_signal, random_signal

from oracles import rk4_cascade_periodic

P, M = ArcLevel.PLUS, ArcLevel.MINUS

# frozen from rk4_cascade_periodic with h = 5e-4
RK4_Z0 = 0.47142736892820897
RK4_AVE_Y = 0.4924944018755056


@pytest.fixture
def unit():
    return BottleneckParams(1.0, 1.0, 0.5)


@pytest.fixture
def scalar_sys():
    return PositiveLinearSystem([[-1.0]], [1.0], [1.0])


class TestValidation:
    def test_scalar_valid(self):
        assert validate_positive_system([[-1.0]], [1.0], [1.0]).valid

    def test_metzler_violation(self):
        rep = validate_positive_system([[-2.0, -0.5], [0.3, -2.0]], [1, 1], [1, 1])
        assert not rep.metzler and rep.hurwitz and not rep.valid

    def test_hurwitz_violation(self):
        rep = validate_positive_system([[0.0]], [1.0], [1.0])
        assert not rep.hurwitz
        assert rep.spectral_abscissa == 0.0

    def test_near_axis_rejected(self):
        assert not validate_positive_system([[-1e-11]], [1.0], [1.0]).hurwitz

    def test_signs(self):
        rep = validate_positive_system([[-1.0]], [-1.0], [1.0])
        assert not rep.b_nonnegative and rep.c_nonnegative

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            validate_positive_system([[-1.0, 0.0], [0.0, -1.0]], [1.0], [1.0, 1.0])
        with pytest.raises(DomainError):
            validate_positive_system(np.zeros((2, 3)), [1, 1], [1, 1])

    def test_constructor_raises(self):
        with pytest.raises(DomainError):
            PositiveLinearSystem([[0.0]], [1.0], [1.0])

    def test_relaxed_positivity(self):
        sys = PositiveLinearSystem([[-1.0, -0.5], [0.5, -1.0]], [1.0, -1.0], [1.0, 0.0],
                                   require_positive=False)
        assert sys.n == 2
        with pytest.raises(DomainError):
            PositiveLinearSystem([[1.0]], [1.0], [1.0], require_positive=False)

    def test_json_roundtrip(self, tmp_path):
        sys = random_positive_system(3, 1)
        save_system(sys, tmp_path / "s.json")
        back = load_system(tmp_path / "s.json")
        np.testing.assert_array_equal(back.A, sys.A)
        np.testing.assert_array_equal(back.c, sys.c)


class TestDcGain:
    def test_scalar(self, scalar_sys):
        assert dc_gain(scalar_sys) == 1.0

    def test_chain_two_sites(self):
        # z1' = w - l1 z1, z2' = l1 z1 - l2 z2, y = l2 z2: -A^{-1} b = (1/l1, 1/l2)
        sys = chain_system([2.0, 3.0])
        z_ss = -np.linalg.solve(sys.A, sys.b)
        np.testing.assert_allclose(z_ss, [0.5, 1 / 3], rtol=1e-15)
        assert dc_gain(sys) == pytest.approx(1.0, rel=1e-15)

    def test_chain_long(self):
        assert dc_gain(chain_system([5.0, 0.3, 7.0, 1.1])) == pytest.approx(1.0, rel=1e-14)

    def test_random_nonnegative(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            assert dc_gain(random_positive_system(5, rng)) >= 0


class TestCascadeOrbit:
    def test_constant_equilibrium(self, unit):
        sys = random_positive_system(3, 4)
        orbit = cascade_periodic_orbit(constant_signal(2.0), unit, sys)
        w_bar = unit.constant_outflow
        np.testing.assert_allclose(orbit.z0, -np.linalg.solve(sys.A, sys.b) * w_bar, rtol=1e-12)
        assert orbit.average_output == pytest.approx(dc_gain(sys) * w_bar, rel=1e-14)
        assert abs(orbit.margin) <= 1e-12 * orbit.bound

    def test_two_arc_rk4(self, unit, scalar_sys):
        sig = build_signal([(P, 1.0), (M, 1.0)])
        orbit = cascade_periodic_orbit(sig, unit, scalar_sys)
        assert orbit.z0[0] == pytest.approx(RK4_Z0, abs=1e-7)
        assert orbit.average_output == pytest.approx(RK4_AVE_Y, abs=1e-7)

    def test_rk4_random(self, unit):
        sys = random_positive_system(2, 7)
        sig = random_signal(unit, 3.0, 2, 3)
        x0, z0, ave_y = rk4_cascade_periodic(sig, unit, sys.A, sys.b, sys.c, 2e-3)
        orbit = cascade_periodic_orbit(sig, unit, sys)
        assert orbit.x0 == pytest.approx(x0, abs=1e-7)
        np.testing.assert_allclose(orbit.z0, z0, atol=1e-7)
        assert orbit.average_output == pytest.approx(ave_y, rel=1e-7)

    def test_routes_agree(self, unit):
        rng = np.random.default_rng(3)
        for _ in range(20):
            sys = random_positive_system(int(rng.integers(1, 6)), rng)
            sig = random_signal(unit, rng.uniform(1, 10), int(rng.integers(1, 5)), rng)
            orbit = cascade_periodic_orbit(sig, unit, sys)
            ave_x = periodic_fixed_point(sig, unit).average_occupancy
            assert orbit.average_output == pytest.approx(orbit.dc_gain * unit.lam * ave_x, rel=1e-12)
            assert orbit.trajectory_average_output == pytest.approx(orbit.average_output, rel=1e-10)

    def test_periodic_and_positive(self, unit):
        sys = random_positive_system(4, 11)
        sig = random_signal(unit, 6.0, 3, 2)
        orbit = cascade_periodic_orbit(sig, unit, sys, samples_per_segment=30)
        assert np.all(orbit.z >= -1e-14)
        np.testing.assert_allclose(orbit.z[-1], orbit.z[0], atol=1e-12)
        assert orbit.x[-1] == pytest.approx(orbit.x[0], abs=1e-12)
        np.testing.assert_allclose(orbit.y, orbit.z @ sys.c)

    def test_output_below_bound(self, unit):
        rng = np.random.default_rng(8)
        for _ in range(50):
            sys = random_positive_system(int(rng.integers(1, 5)), rng)
            sig = random_signal(unit, rng.uniform(0.5, 10), int(rng.integers(1, 5)), rng)
            orbit = cascade_periodic_orbit(sig, unit, sys, samples_per_segment=2)
            assert orbit.average_output < orbit.bound * (1 - 1e-12)


class TestAverageResponse:
    def _sys(self, seed=0, n=3):
        return random_positive_system(n, seed)

    def test_constant(self):
        sys = self._sys()
        t = np.linspace(0, 3.0, 11)
        chk = verify_average_response(sys, t, np.full_like(t, 2.5))
        assert chk.average_output == pytest.approx(dc_gain(sys) * 2.5, rel=1e-12)
        assert chk.relative_residual <= 1e-12

    def test_sinusoid(self):
        sys = self._sys(1, 4)
        T = 4.0
        t = np.linspace(0, T, 801)
        w = 1.3 + 0.9 * np.sin(2 * np.pi * t / T) + 0.2 * np.cos(6 * np.pi * t / T)
        chk = verify_average_response(sys, t, w)
        assert chk.dc_gain_times_average_input == pytest.approx(dc_gain(sys) * 1.3, rel=1e-12)
        assert chk.relative_residual <= 1e-8

    def test_bottleneck_outflow(self, unit):
        sys = self._sys(2, 2)
        sig = random_signal(unit, 5.0, 3, 6)
        # a fast unit-gain filter samples the bottleneck orbit on a fine grid
        casc = cascade_periodic_orbit(sig, unit, PositiveLinearSystem([[-50.0]], [50.0], [1.0]),
                                      samples_per_segment=200)
        chk = verify_average_response(sys, casc.times, unit.lam * casc.x)
        assert chk.relative_residual <= 1e-8

    def test_non_positive_hurwitz(self):
        sys = PositiveLinearSystem([[-1.0, 2.0], [-2.0, -1.0]], [1.0, -0.5], [0.3, 1.0],
                                   require_positive=False)
        t = np.linspace(0, 2.0, 401)
        chk = verify_average_response(sys, t, np.sin(np.pi * t) + 0.1)
        assert abs(chk.residual) <= 1e-8 * max(1.0, abs(chk.average_output))

    def test_bad_grid(self):
        sys = self._sys()
        with pytest.raises(DomainError):
            verify_average_response(sys, [0.0, 1.0, 1.0], [1, 1, 1])
        with pytest.raises(DomainError):
            verify_average_response(sys, [0.5, 1.0], [1, 1])


def test_exponential_accuracy_on_cascade_generators():
    # arc generator for state [z, x, 1, int z]; contract: relative error <= 1e-12
    mpmath.mp.dps = 40
    rng = np.random.default_rng(12)
    for _ in range(40):
        n = int(rng.integers(1, 6))
        sys = random_positive_system(n, rng)
        lam, a, dt = rng.choice([0.2, 1.0, 5.0, 100.0]), rng.uniform(0.1, 3.0), rng.uniform(1e-3, 20.0)
        G = np.zeros((2 * n + 2, 2 * n + 2))
        G[:n, :n] = sys.A
        G[:n, n] = sys.b * lam
        G[n, n], G[n, n + 1] = -(a + lam), a
        G[n + 2:, :n] = np.eye(n)
        G *= dt
        ref = np.array(mpmath.expm(mpmath.matrix(G.tolist())).tolist(), dtype=float)
        assert np.linalg.norm(expm(G) - ref) / np.linalg.norm(ref) <= 1e-12
