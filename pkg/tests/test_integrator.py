import numpy as np
import pytest

from hystrl.benchmarks import (
    decay_problem,
    gregory_integral,
    harmonic_problem,
    integro_problem,
    order_check,
)
from hystrl.errors import NaNDetected, StartupUnderflow
from hystrl.integrator import (
    HistoryRHS,
    PCScheme,
    PCStepper,
    Trajectory,
    integrate,
)

_AB = {p: PCScheme(4).predictor_weights(p) for p in (1, 2, 3, 4)}
_AM = {p + 1: PCScheme(4).corrector_weights(p) for p in (0, 1, 2, 3)}


class TestCoefficients:
    def test_predictor_order_conditions(self):
        """AB weights integrate t^d exactly over [0, 1] from nodes 0,-1,..."""
        for p, w in _AB.items():
            for d in range(p):
                lhs = sum(wi * (-i) ** d for i, wi in enumerate(w))
                assert lhs == pytest.approx(1.0 / (d + 1), rel=1e-12)

    def test_corrector_order_conditions(self):
        """AM weights integrate t^d exactly over [0, 1] from nodes 1,0,-1,..."""
        for p, w in _AM.items():
            for d in range(p):
                lhs = sum(wi * (1 - i) ** d for i, wi in enumerate(w))
                assert lhs == pytest.approx(1.0 / (d + 1), rel=1e-12)

    def test_scheme_orders_limited(self):
        with pytest.raises(ValueError):
            PCScheme(3)


class TestGregoryQuadrature:
    def test_cubic_exactness_all_lengths(self):
        h = 0.37
        for n in range(1, 15):
            x = h * np.arange(n + 1)
            for coeffs in ([1.0], [0.0, 1.0], [1.0, -2.0, 3.0], [0.5, 1.0, -1.0, 2.0]):
                if n == 1 and len(coeffs) > 2:
                    continue  # trapezoid window is only linear-exact
                p = np.polynomial.Polynomial(coeffs)
                exact = p.integ()(x[-1]) - p.integ()(0.0)
                assert gregory_integral(p(x), h) == pytest.approx(exact, rel=1e-12, abs=1e-12)

    def test_fourth_order_convergence(self):
        errs = []
        for n in (32, 64, 128):
            x = np.linspace(0.0, 2.0, n + 1)
            errs.append(abs(gregory_integral(np.sin(3 * x), x[1]) - (1 - np.cos(6.0)) / 3.0))
        assert errs[0] / errs[1] > 12.0
        assert errs[1] / errs[2] > 12.0


class TestTrajectory:
    def test_views_share_committed_nodes(self):
        traj = Trajectory(0.0, 0.1, np.array([1.0, 2.0]))
        traj.append(np.array([3.0, 4.0]))
        v = traj.view()
        assert v.n_nodes == 2 and v.t_final == pytest.approx(0.1)
        ext = traj.view_extended(np.array([5.0, 6.0]))
        assert ext.n_nodes == 3 and np.array_equal(ext.final, [5.0, 6.0])
        assert np.array_equal(ext.states()[:2], traj.states)
        assert np.allclose(ext.times(), [0.0, 0.1, 0.2])

    def test_growth_preserves_history(self):
        traj = Trajectory(0.0, 1.0, np.zeros(3))
        for i in range(100):
            traj.append(np.full(3, float(i)))
        assert traj.n_nodes == 101
        assert np.array_equal(traj.states[1], np.zeros(3))
        assert np.array_equal(traj.states[-1], np.full(3, 99.0))

    def test_csv_layout(self, tmp_path):
        traj = Trajectory(0.0, 0.5, np.array([1.0]))
        traj.append(np.array([2.0]))
        path = tmp_path / "traj.csv"
        traj.to_csv(path, extra={"u1": np.array([0.1, 0.2])})
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "t,x1,u1"
        assert len(lines) == 3


class TestAccuracy:
    def test_decay_endpoint_error_small(self):
        check = order_check(decay_problem(-1.0, 1.0), PCScheme(2), [0.01])
        assert check.errors[0] <= 1e-4

    def test_linear_in_time_derivative_exact(self):
        def rhs(t, view):
            return np.array([2.0 * t - 1.0])

        prob = decay_problem()
        poly = type(prob)("poly", lambda: rhs, np.array([0.5]), 1.0,
                          lambda t: np.array([t**2 - t + 0.5]))
        for order in (2, 4):
            assert order_check(poly, PCScheme(order), [0.1, 0.05]).is_exact

    def test_cubic_solution_fourth_order(self):
        """Cubics are not reproduced exactly (the bootstrap runs a lower
        order scheme on a refined grid) but the error must stay O(h^4)."""

        def rhs(t, view):
            return np.array([3.0 * t**2 - 2.0 * t])

        prob = decay_problem()
        poly = type(prob)("poly", lambda: rhs, np.array([0.5]), 1.0,
                          lambda t: np.array([t**3 - t**2 + 0.5]))
        check = order_check(poly, PCScheme(4), [0.1, 0.05, 0.025])
        assert check.slope == pytest.approx(4.0, abs=0.3)

    def test_matches_independent_rk4(self):
        """PECE order 4 against a classical RK4 reference on a linear
        system; both are well below 1e-8 from each other at this step."""
        A = np.array([[0.0, 1.0], [-4.0, -0.5]])

        def rhs(t, view):
            return A @ view.final

        h, n = 1e-3, 1000
        traj = integrate(rhs, np.array([1.0, 0.0]), h, n, PCScheme(4))

        X = np.array([1.0, 0.0])
        for _ in range(n):
            k1 = A @ X
            k2 = A @ (X + 0.5 * h * k1)
            k3 = A @ (X + 0.5 * h * k2)
            k4 = A @ (X + h * k3)
            X = X + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        assert np.max(np.abs(traj.final - X)) <= 1e-8

    def test_integro_benchmark_order2(self):
        check = order_check(integro_problem(), PCScheme(2), [8e-3, 4e-3, 2e-3])
        assert check.slope == pytest.approx(2.0, abs=0.3)

    def test_integro_benchmark_order4(self):
        check = order_check(integro_problem(), PCScheme(4), [8e-3, 4e-3, 2e-3])
        assert check.slope == pytest.approx(4.0, abs=0.5)

    def test_harmonic_energy_drift(self):
        prob = harmonic_problem(10.0)
        traj = integrate(prob.make_rhs(), prob.X0, 1e-3, 10000, PCScheme(4))
        energy = np.sum(traj.states**2, axis=1)
        assert np.max(np.abs(energy - energy[0])) <= 1e-6


class TestProtocol:
    def test_checkpoint_restore_called_every_step(self):
        class Counting(HistoryRHS):
            def __init__(self):
                self.checkpoints = 0
                self.restores = 0

            def __call__(self, t, view):
                return -view.final

            def checkpoint(self):
                self.checkpoints += 1
                return self.checkpoints

            def restore(self, token):
                self.restores += 1

        rhs = Counting()
        integrate(rhs, np.array([1.0]), 0.1, 10, PCScheme(2))
        assert rhs.checkpoints == 10
        assert rhs.restores == 10

    def test_committed_nodes_never_change(self):
        seen = {}

        def rhs(t, view):
            # committed evaluations only: no provisional tip beyond history
            if view.n_nodes - 1 == round((t - view.t0) / view.dt):
                for i in range(view.n_nodes - 1):
                    key = i
                    val = view.states()[i].copy()
                    if key in seen:
                        assert np.array_equal(seen[key], val)
                    seen[key] = val
            return -view.final

        integrate(rhs, np.array([1.0]), 0.05, 20, PCScheme(2))
        assert len(seen) == 20

    def test_nan_detection(self):
        def rhs(t, view):
            return np.array([np.inf])

        with pytest.raises(NaNDetected):
            integrate(rhs, np.array([1.0]), 0.1, 5, PCScheme(2))

    def test_startup_underflow(self):
        def rhs(t, view):
            return -view.final

        with pytest.raises(StartupUnderflow):
            integrate(rhs, np.array([1.0]), 0.1, 2, PCScheme(4))

    def test_determinism(self):
        prob = integro_problem()
        a = integrate(prob.make_rhs(), prob.X0, 1e-2, 200, PCScheme(4))
        b = integrate(prob.make_rhs(), prob.X0, 1e-2, 200, PCScheme(4))
        assert np.array_equal(a.states, b.states)


class TestStartupQuality:
    def test_refined_startup_beats_plain_ladder(self):
        """The first three nodes from the scratch-grid bootstrap carry
        much less error than one plain ramped multistep pass would."""
        prob = integro_problem()
        h = 4e-3
        traj = integrate(prob.make_rhs(), prob.X0, h, 3, PCScheme(4))
        for k in (1, 2, 3):
            err = abs(traj.states[k, 0] - prob.exact(k * h)[0])
            assert err <= 1e-10
