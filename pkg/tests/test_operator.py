import numpy as np
import pytest

from hystrl.errors import LevelMismatch, NonMonotoneTime
from hystrl.kernels import PiecewiseLinearInput, RidgeFunction, play_eval
from hystrl.mesh import DistributedParameter, TriDomain, p_dot, project_analytic, refine
from hystrl.operator import Mixer, OperatorBank, Scalarizer, rate_experiment


def scalar_bank(levels=(3,), domain=TriDomain(-1.0, 1.0), f0=0.0, n_out=1):
    return OperatorBank(
        domain,
        levels,
        RidgeFunction.saturation(),
        Scalarizer.coordinate(0),
        Mixer.constant(np.ones((n_out, len(levels)))),
        np.array([f0]),
    )


def drive_path(rng, n=25, amp=1.4):
    times = np.linspace(0.0, 5.0, n + 1)
    vals = rng.uniform(-amp, amp, n + 1)
    vals[0] = 0.0
    return times, vals


class TestBankAdvance:
    def test_states_match_direct_kernel_replay(self):
        rng = np.random.default_rng(21)
        times, vals = drive_path(rng)
        bank = scalar_bank((2,))
        for t, v in zip(times[1:], vals[1:]):
            bank.advance(np.array([v]), t)
        f = PiecewiseLinearInput(times, vals)
        mesh = refine(TriDomain(-1.0, 1.0), 2)
        expected = play_eval(
            RidgeFunction.saturation(), mesh.centroids[:, 0], mesh.centroids[:, 1], f, times[-1]
        )
        assert np.array_equal(bank.kappas[0], expected)

    def test_monotone_time_enforced(self):
        bank = scalar_bank()
        bank.advance(np.array([0.5]), 1.0)
        with pytest.raises(NonMonotoneTime):
            bank.advance(np.array([0.2]), 0.5)
        with pytest.raises(NonMonotoneTime):
            bank.advance(np.array([0.9]), 1.0)
        bank.advance(np.array([0.5]), 1.0)  # same time, same value: no-op

    def test_checkpoint_restore_roundtrip(self):
        rng = np.random.default_rng(22)
        bank = scalar_bank((3,))
        bank.advance(np.array([0.7]), 1.0)
        token = bank.checkpoint()
        kept = [k.copy() for k in bank.kappas]
        bank.advance(np.array([-1.2]), 2.0)
        bank.advance(np.array([0.3]), 3.0)
        bank.restore(token)
        assert bank.t == 1.0 and bank.f == 0.7
        assert np.array_equal(bank.kappas[0], kept[0])
        # a different future after restore is legal
        bank.advance(np.array([0.9]), 2.0)

    def test_causality(self):
        rng = np.random.default_rng(23)
        times, vals = drive_path(rng)
        other = vals.copy()
        other[10:] = rng.uniform(-1.4, 1.4, len(vals) - 10)
        a, b = scalar_bank(), scalar_bank()
        for t, va, vb in zip(times[1:10], vals[1:10], other[1:10]):
            a.advance(np.array([va]), t)
            b.advance(np.array([vb]), t)
        assert np.array_equal(a.kappas[0], b.kappas[0])


class TestBankOutput:
    def test_double_sum_oracle(self):
        """Vectorized pairing equals the naive per-cell loop."""
        rng = np.random.default_rng(24)
        domain = TriDomain(-1.0, 1.0)
        bank = scalar_bank((3,), domain)
        times, vals = drive_path(rng)
        for t, v in zip(times[1:], vals[1:]):
            bank.advance(np.array([v]), t)
        mu = DistributedParameter.from_values(domain, 3, rng.normal(size=64))
        mesh = refine(domain, 3)
        naive = sum(
            bank.kappas[0][k] * mu.channel_values[0][k] * mesh.areas[k] for k in range(64)
        )
        assert bank.output(mu)[0] == pytest.approx(naive, rel=1e-13)

    def test_linearity_in_parameter(self):
        rng = np.random.default_rng(25)
        domain = TriDomain(-1.0, 1.0)
        bank = scalar_bank((2, 4), domain, n_out=3)
        times, vals = drive_path(rng)
        for t, v in zip(times[1:], vals[1:]):
            bank.advance(np.array([v]), t)
        z = DistributedParameter.zeros(domain, (2, 4))
        m1 = z.with_flat(rng.normal(size=16 + 256))
        m2 = z.with_flat(rng.normal(size=16 + 256))
        combo = z.with_flat(2.0 * m1.flat() - 3.0 * m2.flat())
        lhs = bank.apply(combo)
        rhs = 2.0 * bank.apply(m1) - 3.0 * bank.apply(m2)
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-14)

    def test_cauchy_schwarz_bound(self):
        rng = np.random.default_rng(26)
        domain = TriDomain(-1.0, 1.0)
        bank = scalar_bank((3,), domain)
        times, vals = drive_path(rng)
        for t, v in zip(times[1:], vals[1:]):
            bank.advance(np.array([v]), t)
        for _ in range(10):
            mu = DistributedParameter.from_values(domain, 3, rng.normal(size=64))
            bound = RidgeFunction.saturation().bound * np.sqrt(domain.area)
            assert abs(bank.output(mu)[0]) <= bound * np.linalg.norm(
                mu.channel_values[0] * np.sqrt(refine(domain, 3).areas)
            ) + 1e-12

    def test_level_mismatch(self):
        bank = scalar_bank((3,))
        mu = DistributedParameter.zeros(TriDomain(-1.0, 1.0), (2,))
        with pytest.raises(LevelMismatch):
            bank.output(mu)

    def test_matrix_matches_apply(self):
        rng = np.random.default_rng(27)
        domain = TriDomain(-1.0, 1.0)
        bank = OperatorBank(
            domain,
            (2, 3),
            RidgeFunction.saturation(),
            Scalarizer.coordinate(0),
            Mixer.constant(rng.normal(size=(2, 2))),
            np.array([0.0]),
        )
        times, vals = drive_path(rng)
        for t, v in zip(times[1:], vals[1:]):
            bank.advance(np.array([v]), t)
        mu = DistributedParameter.zeros(domain, (2, 3)).with_flat(rng.normal(size=16 + 64))
        assert np.allclose(bank.matrix().apply(mu), bank.apply(mu), rtol=1e-13)


class TestAdjoint:
    def test_duality_identity(self):
        """<adjoint(z), dmu>_area == z . (W dmu) for random directions."""
        rng = np.random.default_rng(28)
        domain = TriDomain(-1.0, 1.0)
        bank = OperatorBank(
            domain,
            (3, 1),
            RidgeFunction.saturation(),
            Scalarizer.coordinate(0),
            Mixer.constant(rng.normal(size=(4, 2))),
            np.array([0.0]),
        )
        times, vals = drive_path(rng)
        for t, v in zip(times[1:], vals[1:]):
            bank.advance(np.array([v]), t)
        om = bank.matrix()
        for _ in range(20):
            z = rng.normal(size=4)
            dmu = DistributedParameter.zeros(domain, (3, 1)).with_flat(rng.normal(size=64 + 4))
            lhs = p_dot(om.adjoint(z), dmu)
            rhs = float(z @ om.apply(dmu))
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


class TestRateExperiment:
    def test_errors_decrease_with_level(self):
        rng = np.random.default_rng(29)
        domain = TriDomain(-1.0, 1.0)
        times = np.linspace(0.0, 10.0, 41)
        f = PiecewiseLinearInput(times, rng.uniform(-1.3, 1.3, 41))
        fn = lambda s1, s2: 1.0 + 0.5 * np.sin(1.3 * s1) + 0.4 * np.cos(0.9 * s2)
        table = rate_experiment(domain, RidgeFunction.saturation(), f, fn, 6, (1, 2, 3, 4))
        assert all(a > b for a, b in zip(table.errors, table.errors[1:]))
        assert -2.6 <= table.slope <= -1.4

    def test_rejects_level_at_or_above_fine(self):
        f = PiecewiseLinearInput([0.0, 1.0], [0.0, 1.0])
        with pytest.raises(LevelMismatch):
            rate_experiment(
                TriDomain(), RidgeFunction.saturation(), f, lambda a, b: a, 3, (1, 3)
            )

    def test_csv_has_summary_row(self, tmp_path):
        rng = np.random.default_rng(30)
        domain = TriDomain(-1.0, 1.0)
        times = np.linspace(0.0, 5.0, 21)
        f = PiecewiseLinearInput(times, rng.uniform(-1.2, 1.2, 21))
        table = rate_experiment(
            domain, RidgeFunction.saturation(), f, lambda a, b: 1.0 + 0.1 * a, 5, (1, 2)
        )
        path = tmp_path / "rate.csv"
        table.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "j,e_j,C_j"
        assert lines[-1].startswith("slope,")
        assert len(lines) == 2 + 2


class TestPieces:
    def test_scalarizer_kinds(self):
        X = np.array([1.0, -2.0, 3.0])
        assert Scalarizer.coordinate(1)(X) == -2.0
        assert Scalarizer.linear([1.0, 0.0, 2.0])(X) == 7.0

    def test_mixer_shape_checked(self):
        mix = Mixer(lambda X: np.zeros((2, 3)), (2, 2))
        with pytest.raises(ValueError):
            mix(np.zeros(1))
