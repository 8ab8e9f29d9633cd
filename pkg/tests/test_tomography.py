import numpy as np
import pytest

from vdpsim import hilbert as hb
from vdpsim import lindblad as lb
from vdpsim import tomography as tg
from vdpsim.errors import LayoutError, ReconstructionError

TWO_PI = 2 * np.pi
EXACT = tg.ReadoutSettings(shots=0)


def two_mode_vacuum(c=10):
    return hb.tensor_states(hb.vacuum_state(c), hb.vacuum_state(c))


class TestCharFunction:
    def test_two_mode_vacuum_gaussian(self):
        st0 = two_mode_vacuum()
        for b1, b2 in [(0.5, 0.0), (1.0 + 0.3j, -0.7j), (0.0, 0.0)]:
            want = np.exp(-(abs(b1) ** 2 + abs(b2) ** 2) / 2)
            assert tg.char_function(st0, b1, b2) == pytest.approx(want, abs=1e-10)

    def test_single_mode_fock1_analytic(self):
        st0 = hb.fock_state(1, 20)
        for b in (0.3, 1.1 - 0.2j):
            want = (1 - abs(b) ** 2) * np.exp(-abs(b) ** 2 / 2)
            assert tg.char_function(st0, b) == pytest.approx(want, abs=1e-10)

    def test_normalization_at_origin(self):
        st0 = hb.opposite_coherent_mixture(1.5, 16)
        assert tg.char_function(st0, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_qubit_traced_first(self):
        down = hb.QuantumState(hb.SpaceLayout((2,), qubit=0), np.diag([1.0, 0.0]))
        st0 = hb.tensor_states(down, hb.vacuum_state(6), hb.vacuum_state(6))
        assert tg.char_function(st0, 0.5, 0.5) == pytest.approx(
            np.exp(-0.25), abs=1e-10)


class TestSimulateReadout:
    def test_exact_matches_char_function(self):
        st0 = two_mode_vacuum(8)
        grid = tg.simulate_readout(st0, EXACT, seed=1)
        b = EXACT.beta_values()
        for i in (0, 7, 16):
            for j in (3, 16, 30):
                want = tg.char_function(st0, 1j * b[i], 1j * b[j])
                assert grid.values[i, j] == pytest.approx(want, abs=1e-12)

    def test_large_shot_convergence(self):
        st0 = two_mode_vacuum(8)
        settings = tg.ReadoutSettings(points=8, shots=10 ** 6)
        noisy = tg.simulate_readout(st0, settings, seed=2)
        exact = tg.simulate_readout(st0, tg.ReadoutSettings(points=8, shots=0), seed=2)
        err = np.abs(noisy.values - exact.values).max()
        assert err < 2 * 3 / np.sqrt(settings.shots)

    def test_binomial_standard_error(self):
        st0 = two_mode_vacuum(8)
        settings = tg.ReadoutSettings(points=16, shots=200)
        exact = tg.simulate_readout(st0, tg.ReadoutSettings(points=16, shots=0), seed=0)
        errs, preds = [], []
        for seed in range(40):
            noisy = tg.simulate_readout(st0, settings, seed=seed)
            errs.append((noisy.values - exact.values).real)
        errs = np.array(errs)
        chi = exact.values.real
        predicted = np.sqrt(np.clip(1 - chi ** 2, 0, None) / settings.shots)
        mask = predicted > 0.01
        ratio = errs.std(axis=0)[mask] / predicted[mask]
        assert abs(np.median(ratio) - 1.0) < 0.2

    def test_reproducible_per_point(self):
        st0 = two_mode_vacuum(8)
        settings = tg.ReadoutSettings(points=8, shots=50)
        g1 = tg.simulate_readout(st0, settings, seed=9)
        g2 = tg.simulate_readout(st0, settings, seed=9)
        assert np.array_equal(g1.values, g2.values)
        g3 = tg.simulate_readout(st0, settings, seed=10)
        assert not np.array_equal(g1.values, g3.values)


class TestSubtractOffset:
    def test_exact_decayed_samples_unchanged(self):
        st0 = hb.opposite_coherent_mixture(2.0, 25)
        settings = tg.ReadoutSettings(beta_max=4.0, shots=0)
        grid = tg.simulate_readout(st0, settings)
        fixed = tg.subtract_offset(grid)
        assert np.abs(fixed.values - grid.values).max() < 1e-3
        # constant injection is removed
        shifted = tg.Grid2D(grid.axis1, grid.axis2, grid.values + 0.05,
                            kind=grid.kind)
        recovered = tg.subtract_offset(shifted)
        assert np.abs(recovered.values - grid.values).max() < 2e-3

    def test_center_rescaled_to_one(self):
        st0 = hb.opposite_coherent_mixture(2.0, 25)
        grid = tg.simulate_readout(st0, tg.ReadoutSettings(beta_max=4.0, shots=120),
                                   seed=5)
        fixed = tg.subtract_offset(grid)
        i0 = np.argmin(np.abs(fixed.axis_values(1)))
        j0 = np.argmin(np.abs(fixed.axis_values(2)))
        assert fixed.values[i0, j0].real == pytest.approx(1.0, abs=1e-12)


class TestWigner:
    def test_vacuum_peak(self):
        grid = tg.wigner(hb.vacuum_state(30), EXACT)
        assert grid.values.max() == pytest.approx(2 / np.pi, rel=0.03)
        i, j = np.unravel_index(np.argmax(grid.values), grid.values.shape)
        assert abs(grid.axis_values(1)[i]) < 1e-9
        assert abs(grid.axis_values(2)[j]) < 1e-9
        assert grid.total_mass() == pytest.approx(1.0, abs=0.02)

    def test_fock1_negative_dip(self):
        settings = tg.ReadoutSettings(beta_max=4.0, shots=0)
        grid = tg.wigner(hb.fock_state(1, 30), settings)
        i0 = np.argmin(np.abs(grid.axis_values(1)))
        j0 = np.argmin(np.abs(grid.axis_values(2)))
        assert grid.values[i0, j0] == pytest.approx(-2 / np.pi, rel=0.05)

    def test_coherent_peak_location(self):
        grid = tg.wigner(hb.coherent_state(2.0, 30), EXACT)
        i, j = np.unravel_index(np.argmax(grid.values), grid.values.shape)
        cell = max(grid.steps)
        assert abs(grid.axis_values(1)[i] - 2.0) <= cell
        assert abs(grid.axis_values(2)[j] - 0.0) <= cell

    @pytest.mark.parametrize("state_fn", [
        lambda: hb.vacuum_state(12),
        lambda: hb.fock_state(1, 12),
        lambda: hb.coherent_state(1.2, 12),
        lambda: hb.opposite_coherent_mixture(1.5, 12),
    ])
    def test_roundtrip_against_direct_evaluation(self, state_fn):
        st0 = state_fn()
        settings = tg.ReadoutSettings(beta_max=4.0, shots=0)
        grid = tg.wigner(st0, settings)
        axis = grid.axis_values(1)
        sub = np.abs(axis) <= 2.5
        direct = tg.wigner_direct(st0, axis[sub])
        err = np.abs(grid.values[np.ix_(sub, sub)] - direct).max()
        assert err <= 0.02


class TestJointDistribution:
    def test_two_mode_vacuum_isotropic(self):
        # beta_max = 4 so the vacuum's slowly decaying chi is covered and the
        # clipped ringing tail cannot bias the second moment
        settings = tg.ReadoutSettings(beta_max=4.0, shots=0)
        grid = tg.joint_distribution(two_mode_vacuum(), settings)
        assert grid.total_mass() == pytest.approx(1.0, abs=1e-9)  # renormalized
        x = grid.axis_values(1)
        d1, _ = grid.steps
        marg = grid.values.sum(axis=1) * d1
        var = float((marg * x ** 2).sum() * d1)
        assert var == pytest.approx(0.5, abs=0.01)
        marg2 = grid.values.sum(axis=0) * d1
        var2 = float((marg2 * x ** 2).sum() * d1)
        assert var2 == pytest.approx(0.5, abs=0.01)
        analytic = (1 / np.pi) * np.exp(-(x[:, None] ** 2 + x[None, :] ** 2))
        assert np.abs(grid.values - analytic).max() < 5e-3

    def test_product_of_coherent_states(self):
        st0 = hb.tensor_states(hb.coherent_state(1.0, 12),
                               hb.coherent_state(-0.8, 12))
        grid = tg.joint_distribution(st0, EXACT)
        x = grid.axis_values(1)
        i, j = np.unravel_index(np.argmax(grid.values), grid.values.shape)
        # peak at (sqrt(2) Re alpha_1, sqrt(2) Re alpha_2)
        assert abs(x[i] - np.sqrt(2)) <= 2 * grid.steps[0]
        assert abs(x[j] + 0.8 * np.sqrt(2)) <= 2 * grid.steps[0]
        # product structure: P factorizes into its marginals
        d1, _ = grid.steps
        m1 = grid.values.sum(axis=1) * d1
        m2 = grid.values.sum(axis=0) * d1
        assert np.abs(grid.values - np.outer(m1, m2)).max() < 5e-3

    def test_nonnegative_after_clip(self):
        grid = tg.joint_distribution(two_mode_vacuum(), EXACT)
        assert grid.values.min() >= 0.0

    def test_needs_two_modes(self):
        with pytest.raises(LayoutError):
            tg.joint_distribution(hb.vacuum_state(8), EXACT)


class TestDonutRadius:
    def test_mixture_radius(self):
        st0 = hb.opposite_coherent_mixture(3.0, 30)
        grid = tg.wigner(st0, tg.ReadoutSettings(beta_max=4.0, shots=0))
        r = tg.donut_radius(grid)
        assert r == pytest.approx(3.0, abs=max(grid.steps))

    def test_near_classical_vdp_matches_mean_field(self):
        ratio = 0.14
        kp = TWO_PI * 110.0
        gen = lb.single_mode_generator(
            lb.EffectiveParams(kappa_plus=kp, kappa_minus=kp * ratio), 30)
        ss = lb.steady_state_direct(gen)
        grid = tg.wigner(ss, EXACT)
        want = np.sqrt(1 / (2 * ratio))
        assert tg.donut_radius(grid) == pytest.approx(want, rel=0.10)

    def test_deep_quantum_saturates_at_zero_point_scale(self):
        # in the deep quantum regime the peak radius stops tracking the
        # classical sqrt(kp/2km) curve and saturates near the zero-point scale
        radii = []
        for ratio in (2.0, 5.0):
            gen = lb.single_mode_generator(
                lb.EffectiveParams(kappa_plus=100.0, kappa_minus=100.0 * ratio), 20)
            ss = lb.steady_state_direct(gen)
            grid = tg.wigner(ss, EXACT)
            radii.append(tg.donut_radius(grid))
        mf = [np.sqrt(1 / (2 * r)) for r in (2.0, 5.0)]
        assert abs(radii[0] - radii[1]) < 0.15  # saturation
        assert abs(radii[0] - mf[0]) > 0.1      # clearly off the classical curve

    def test_peak_at_edge_raises(self):
        settings = tg.ReadoutSettings(beta_max=6.0, points=48, shots=0)
        grid = tg.wigner(hb.coherent_state(2.2, 24), settings)
        # shrink the grid artificially so the coherent peak sits at the edge
        axis = grid.axis_values(1)
        keep = np.flatnonzero(np.abs(axis) <= 1.2)
        if len(keep) % 2:
            keep = keep[:-1]
        small = tg.Grid2D(
            (axis[keep][0], axis[keep][-1] + grid.steps[0], len(keep)),
            (axis[keep][0], axis[keep][-1] + grid.steps[0], len(keep)),
            grid.values[np.ix_(keep, keep)])
        with pytest.raises(ReconstructionError):
            tg.donut_radius(small)


class TestInvariants:
    def test_marginal_consistency_with_single_mode(self):
        st1 = hb.coherent_state(0.9, 12)
        st2 = hb.fock_state(1, 12)
        joint = hb.tensor_states(st1, st2)
        grid = tg.joint_distribution(joint, tg.ReadoutSettings(beta_max=4.5, shots=0))
        d1, _ = grid.steps
        marg = grid.values.sum(axis=1) * d1
        # single-mode x distribution from the Wigner marginal of rho_1
        wg = tg.wigner(st1, tg.ReadoutSettings(beta_max=4.5, shots=0))
        x_of_alpha = np.sqrt(2.0) * wg.axis_values(1)
        wmarg = np.real(wg.values).sum(axis=1) * wg.steps[1] / np.sqrt(2.0)
        interp = np.interp(grid.axis_values(1), x_of_alpha, wmarg)
        assert np.abs(marg - interp).max() < 0.02

    def test_rotational_covariance_of_u1_state(self):
        st0 = hb.tensor_states(hb.fock_state(1, 10), hb.fock_state(2, 10))
        base = tg.joint_distribution(st0, tg.ReadoutSettings(beta_max=5.0, shots=0))
        rot = tg.joint_distribution(
            st0, tg.ReadoutSettings(beta_max=5.0, shots=0, phi1=0.7, phi2=0.7))
        assert np.abs(base.values - rot.values).max() < 1e-8

    def test_exact_reconstruction_deterministic(self):
        st0 = two_mode_vacuum(8)
        g1 = tg.joint_distribution(st0, EXACT)
        g2 = tg.joint_distribution(st0, EXACT)
        assert np.array_equal(g1.values, g2.values)


def test_grid_csv_roundtrip(tmp_path):
    st0 = hb.opposite_coherent_mixture(1.0, 12)
    grid = tg.simulate_readout(st0, tg.ReadoutSettings(points=16, shots=0))
    path = tmp_path / "chi.csv"
    grid.to_csv(path)
    back = tg.Grid2D.from_csv(path)
    assert back.axis1 == grid.axis1
    assert back.axis2 == grid.axis2
    assert back.kind == grid.kind
    assert np.abs(back.values - grid.values).max() < 1e-10

    wg = tg.wigner(st0, EXACT)
    path2 = tmp_path / "w.csv"
    wg.to_csv(path2)
    back2 = tg.Grid2D.from_csv(path2)
    assert np.abs(back2.values - wg.values).max() < 1e-10
