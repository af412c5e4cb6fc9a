import numpy as np
import pytest
from scipy.linalg import expm

from hystrl.errors import NotHurwitz
from hystrl.integrator import PCScheme, integrate
from hystrl.kernels import RidgeFunction
from hystrl.mesh import TriDomain, project_analytic
from hystrl.plants import (
    AeroChannel,
    FirstOrderPlant,
    LinearCore,
    RoboticPlant,
    WingParams,
    contraction_horizon,
    regulator_transform,
    tracking_transform,
    wing_model,
)


def smooth_mu(level=4, scale=1.0, domain=TriDomain(-1.0, 1.0)):
    fn = lambda s1, s2: scale * (0.8 + 0.5 * np.sin(1.3 * s1 + 0.4) + 0.4 * np.cos(0.9 * s2))
    return project_analytic(domain, fn, level)


def wing_aero(level=4, scale=1.0):
    return AeroChannel(
        gamma=RidgeFunction.saturation(),
        mu=smooth_mu(level, scale),
        scalar_index=1,
        force_matrix=np.array([[1.0], [0.0]]),
    )


class TestWingModel:
    def test_simplified_mass_matrix(self):
        p = WingParams(mass=2.0, x_theta=0.3, inertia_theta=0.5)
        form = wing_model(p, "simplified")
        M = form.mass(np.zeros(2))
        assert np.allclose(M, [[2.0, 0.6], [0.6, 2.0 * 0.09 + 0.5]])
        assert np.all(np.linalg.eigvalsh(M) > 0)

    def test_full_reduces_to_simplified_at_zero_pitch(self):
        p = WingParams()
        a = wing_model(p, "simplified").mass(np.zeros(2))
        b = wing_model(p, "full").mass(np.zeros(2))
        assert np.allclose(a, b)

    def test_coriolis_skew_identity(self):
        """dM/dt - 2C restricted to the quadratic-velocity part is skew,
        the structural fact behind energy conservation."""
        p = WingParams(c_h=0.0, c_theta=0.0)
        form = wing_model(p, "full")
        rng = np.random.default_rng(31)
        for _ in range(10):
            q = rng.normal(size=2)
            qd = rng.normal(size=2)
            sth, thd = np.sin(q[1]), qd[1]
            Mdot = np.array([[0.0, -p.mass * p.x_theta * sth * thd],
                             [-p.mass * p.x_theta * sth * thd, 0.0]])
            S = Mdot - 2.0 * form.coriolis(q, qd)
            assert np.allclose(S, -S.T, atol=1e-13)

    def test_grad_potential_matches_potential(self):
        rng = np.random.default_rng(32)
        for mode in ("simplified", "full"):
            for grav in (False, True):
                form = wing_model(WingParams(), mode, include_gravity=grav)
                for _ in range(5):
                    q = rng.normal(scale=0.4, size=2)
                    num = np.zeros(2)
                    eps = 1e-6
                    for i in range(2):
                        dq = np.zeros(2)
                        dq[i] = eps
                        num[i] = (form.potential(q + dq) - form.potential(q - dq)) / (2 * eps)
                    assert np.allclose(form.grad_potential(q), num, atol=1e-6)

    def test_gravity_only_in_full_mode_flag(self):
        form = wing_model(WingParams(), "full", include_gravity=True)
        g0 = form.grad_potential(np.zeros(2))
        assert g0[0] == pytest.approx(9.81)

    def test_flap_forces(self):
        p = WingParams(flap_matrix=((2.0, 0.5), (0.0, 1.5)))
        assert np.allclose(p.flap_forces([1.0, 2.0]), [3.0, 3.0])

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            wing_model(WingParams(), "reduced")

    def test_equilibrium_is_stationary(self):
        form = wing_model(WingParams(), "full")
        plant = RoboticPlant(form, lambda t, q, qd: np.zeros(2))
        traj = integrate(plant, np.zeros(4), 1e-2, 50, PCScheme(2))
        assert np.max(np.abs(traj.states)) == 0.0


class TestTransforms:
    def test_regulator_companion_eigs(self):
        form = wing_model(WingParams(), "simplified")
        lin = regulator_transform(form, np.eye(2), np.eye(2))
        eigs = np.linalg.eigvals(lin.core.A)
        expected = np.roots([1.0, 1.0, 1.0])
        assert np.allclose(np.sort_complex(eigs), np.sort_complex(np.tile(expected, 2)), atol=1e-9)

    def test_unstable_gains_rejected(self):
        form = wing_model(WingParams(), "simplified")
        with pytest.raises(NotHurwitz):
            regulator_transform(form, -np.eye(2), np.eye(2))

    def test_algebraic_soundness_along_random_states(self):
        """Substituting the reconstructed torque into the robotic equations
        reproduces the first-order field pointwise."""
        rng = np.random.default_rng(33)
        G0, G1 = np.diag([25.0, 25.0]), np.diag([10.0, 10.0])
        for mode in ("simplified", "full"):
            form = wing_model(WingParams(), mode)
            lin = regulator_transform(form, G0, G1)
            for _ in range(20):
                q, qd = rng.normal(size=2), rng.normal(size=2)
                u = rng.normal(size=2)
                tau = lin.tau(0.0, q, qd, u)
                qdd = np.linalg.solve(
                    form.mass(q), tau - form.coriolis(q, qd) @ qd - form.grad_potential(q)
                )
                X = np.concatenate([q, qd])
                ref = lin.core.A @ X + lin.core.B @ u
                assert np.max(np.abs(np.concatenate([qd, qdd]) - ref)) <= 1e-10

    @pytest.mark.parametrize("mode", ["simplified", "full"])
    def test_simulation_equivalence_with_aero(self, mode):
        """Robotic integration under the reconstructed torque tracks the
        transformed first-order integration within roundoff-level error."""
        aero = wing_aero(level=3, scale=1.0)
        form = wing_model(WingParams(), mode, aero=aero)
        G0, G1 = np.diag([25.0, 25.0]), np.diag([10.0, 10.0])
        lin = regulator_transform(form, G0, G1)
        u = lambda t: np.array([0.8 * np.sin(1.7 * t), 0.5 * np.cos(2.3 * t)])
        X0 = np.array([0.3, 0.25, 0.0, 0.0])

        first = FirstOrderPlant(lin.core, form, u)
        ta = integrate(first, X0, 1e-3, 1000, PCScheme(4))

        robotic = RoboticPlant(form, lambda t, q, qd: lin.tau(t, q, qd, u(t)))
        tb = integrate(robotic, X0, 1e-3, 1000, PCScheme(4))
        assert np.max(np.abs(ta.states - tb.states)) <= 1e-6

    def test_tracking_equivalence(self):
        form = wing_model(WingParams(), "full")
        G0, G1 = np.diag([16.0, 16.0]), np.diag([8.0, 8.0])

        def reference(t):
            q_d = np.array([0.2 * np.sin(t), 0.1 * np.cos(2.0 * t)])
            qd_d = np.array([0.2 * np.cos(t), -0.2 * np.sin(2.0 * t)])
            qdd_d = np.array([-0.2 * np.sin(t), -0.4 * np.cos(2.0 * t)])
            return q_d, qd_d, qdd_d

        lin = tracking_transform(form, G0, G1, reference)
        q0, qd0 = np.array([0.4, 0.0]), np.zeros(2)
        e0 = np.concatenate([q0 - reference(0.0)[0], qd0 - reference(0.0)[1]])

        err_traj = integrate(FirstOrderPlant(lin.core), e0, 1e-3, 2000, PCScheme(4))
        rob = RoboticPlant(form, lambda t, q, qd: lin.tau(t, q, qd, np.zeros(2)))
        rob_traj = integrate(rob, np.concatenate([q0, qd0]), 1e-3, 2000, PCScheme(4))

        refs = np.array([np.concatenate(reference(t)[:2]) for t in rob_traj.times])
        assert np.max(np.abs(rob_traj.states - (refs + err_traj.states))) <= 1e-6


class TestEnergy:
    def test_undamped_full_wing_conserves_energy(self):
        form = wing_model(WingParams(c_h=0.0, c_theta=0.0), "full")
        plant = RoboticPlant(form, lambda t, q, qd: np.zeros(2))
        X0 = np.array([0.05, 0.3, 0.0, 0.0])
        traj = integrate(plant, X0, 5e-4, 4000, PCScheme(4))
        E = np.array([form.energy(s[:2], s[2:]) for s in traj.states])
        assert np.max(np.abs(E - E[0])) / abs(E[0]) <= 1e-7

    def test_damping_dissipates(self):
        form = wing_model(WingParams(c_h=2.0, c_theta=1.0), "full")
        plant = RoboticPlant(form, lambda t, q, qd: np.zeros(2))
        X0 = np.array([0.05, 0.3, 0.0, 0.0])
        traj = integrate(plant, X0, 1e-3, 3000, PCScheme(2))
        E = np.array([form.energy(s[:2], s[2:]) for s in traj.states])
        assert E[-1] < 0.05 * E[0]
        assert np.all(np.diff(E) <= 1e-10)


class TestFirstOrderPlant:
    def test_linear_decay_matches_expm(self):
        core = LinearCore(np.array([[0.0, 1.0], [-9.0, -2.0]]), np.array([[0.0], [1.0]]))
        plant = FirstOrderPlant(core)
        X0 = np.array([1.0, -0.5])
        traj = integrate(plant, X0, 1e-3, 2000, PCScheme(4))
        assert np.max(np.abs(traj.final - expm(core.A * 2.0) @ X0)) <= 1e-9

    def test_constant_forcing_closed_form(self):
        core = LinearCore(np.array([[0.0, 1.0], [-4.0, -1.0]]), np.array([[0.0], [1.0]]))
        c = np.array([2.0])
        plant = FirstOrderPlant(core, u=lambda t: c)
        X0 = np.array([0.5, 0.0])
        T = 1.5
        traj = integrate(plant, X0, 1e-3, 1500, PCScheme(4))
        M = expm(core.A * T)
        exact = M @ X0 + np.linalg.solve(core.A, (M - np.eye(2))) @ (core.B @ c)
        assert np.max(np.abs(traj.final - exact)) <= 1e-9


class TestContractionHorizon:
    def core(self):
        return LinearCore(np.array([[0.0, 1.0], [-2.0, -3.0]]), np.array([[0.0], [1.0]]))

    def test_candidate_arithmetic(self):
        core = self.core()
        est = contraction_horizon(core, 1.0, 2.0, 1.0, 0.5, 1.0, 3.0)
        nA = np.linalg.norm(core.A, 2)
        rate = nA + 0.5
        conf = 2.0 / (rate * 2.0 + 1.0 + 3.0)
        assert est.growth_rate == pytest.approx(rate)
        assert est.delta == pytest.approx(0.99 * min(1.0, conf, 1.0 / rate))

    def test_window_binds_when_small(self):
        est = contraction_horizon(self.core(), 1e-4, 10.0, 0.1, 0.1, 0.1, 0.1)
        assert est.delta == pytest.approx(0.99e-4)

    def test_monotone_in_bounds(self):
        core = self.core()
        base = contraction_horizon(core, 1.0, 2.0, 1.0, 0.5, 1.0, 3.0).delta
        for kwargs in (
            dict(kernel_lipschitz=2.0, mu_norm=0.5, drift_bound=1.0, forcing_bound=3.0),
            dict(kernel_lipschitz=1.0, mu_norm=1.5, drift_bound=1.0, forcing_bound=3.0),
            dict(kernel_lipschitz=1.0, mu_norm=0.5, drift_bound=4.0, forcing_bound=3.0),
            dict(kernel_lipschitz=1.0, mu_norm=0.5, drift_bound=1.0, forcing_bound=9.0),
        ):
            assert contraction_horizon(core, 1.0, 2.0, **kwargs).delta <= base + 1e-15

    def test_positivity_and_validation(self):
        assert contraction_horizon(self.core(), 0.5, 1.0, 0.0, 0.0, 0.0, 0.0).delta > 0
        with pytest.raises(ValueError):
            contraction_horizon(self.core(), -1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
