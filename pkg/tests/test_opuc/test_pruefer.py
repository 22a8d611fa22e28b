"""
Unit tests for the Pruefer variables.

Validates:
- R_n e^{i(n eta + theta_n)} reproduces Phi_n on the circle (with rotation beta)
- Phase steps, accumulator increments and the R_n ~ exp(-Re A) gap
- Grid evolution agrees with single trajectories, for any thread count
- Tail convergence of hat-alpha and the criterion profile
- Per-beta radius boundedness, default beta grid from settings
- log R_n + Re A_n stays bounded for alpha_j = 0.2 / (j + 1) up to n = 10^5

python -m pytest tests/test_opuc/test_pruefer.py
"""
import numpy as np
import pytest

from config.settings import settings
from opuc.errors import PreconditionError
from opuc.generators import coulomb_family
from opuc.models import VerblunskySequence
from opuc.pruefer import (
    alpha_tail,
    asymptotic_proxy,
    fsr_criterion,
    fsr_profile,
    orthonormal_log_radii,
    pruefer_evolve,
    pruefer_evolve_grid,
    radius_boundedness,
    tail_convergence,
)
from opuc.resource_manager import ResourceManager
from opuc.szego import evaluate_by_recursion


class TestPrueferEvolve:
    """pruefer_evolve."""

    def test_zero_sequence_is_trivial(self, zero_sequence):
        traj = pruefer_evolve(zero_sequence, 1.3, 0.0, 50)
        assert traj.length == 50
        assert np.all(traj.radii_log == 0.0)
        assert np.all(traj.phases == 0.0)
        assert np.all(traj.accumulator == 0.0)
        assert np.all(asymptotic_proxy(traj) == 1.0)

    @pytest.mark.parametrize("eta", [0.0, 0.4, 2.0, np.pi, 5.5])
    @pytest.mark.parametrize("beta", [0.0, 1.1])
    def test_reproduces_polynomial_values(self, coulomb_random, eta, beta):
        n = 200
        traj = pruefer_evolve(coulomb_random, eta, beta, n)
        phi, phi_star = evaluate_by_recursion(coulomb_random, [eta], n, beta=beta)
        R = np.exp(traj.radii_log[-1])
        theta = traj.phases[-1]
        assert R * np.exp(1j * (n * eta + theta)) == pytest.approx(phi[0], rel=1e-9)
        assert R * np.exp(-1j * theta) == pytest.approx(phi_star[0], rel=1e-9)

    def test_phase_steps_are_small(self, coulomb_random):
        traj = pruefer_evolve(coulomb_random, 0.9, 0.0, 300)
        steps = np.abs(np.diff(traj.phases))
        assert np.all(steps <= 0.5 * np.pi * np.abs(coulomb_random.values[:300]) + 1e-15)

    def test_accumulator_increments(self, coulomb_random):
        eta, beta, n = 2.2, 0.3, 100
        traj = pruefer_evolve(coulomb_random, eta, beta, n)
        j = np.arange(n)
        gamma = (j + 1) * eta + beta + 2.0 * traj.phases[:-1]
        expected = coulomb_random.values[:n] * np.exp(1j * gamma)
        assert np.allclose(np.diff(traj.accumulator), expected, atol=1e-14)

    def test_log_radius_tracks_accumulator(self, coulomb_random):
        """|log R_j + Re A(j)| <= sum |alpha_k|^2 when |alpha| <= 1/2."""
        n = 512
        traj = pruefer_evolve(coulomb_random, 0.05, 0.0, n)
        gap = np.abs(traj.radii_log + traj.accumulator.real)
        assert np.max(gap) <= np.sum(np.abs(coulomb_random.values[:n]) ** 2)

    def test_steps_beyond_length_keep_state(self):
        alpha = VerblunskySequence(np.array([0.5, 0.25j]))
        traj = pruefer_evolve(alpha, 0.7, 0.0, 6)
        assert np.all(traj.radii_log[2:] == traj.radii_log[2])
        assert np.all(traj.phases[2:] == traj.phases[2])

    def test_orthonormal_radii(self, random_sequence):
        n = 30
        traj = pruefer_evolve(random_sequence, 1.0, 0.0, n)
        phi, _ = evaluate_by_recursion(random_sequence, [1.0], n)
        norm_sq = np.prod(1.0 - np.abs(random_sequence.values[:n]) ** 2)
        expected = np.log(np.abs(phi[0]) / np.sqrt(norm_sq))
        assert orthonormal_log_radii(traj, random_sequence)[-1] == pytest.approx(expected, rel=1e-10)

    def test_negative_n(self, zero_sequence):
        with pytest.raises(PreconditionError):
            pruefer_evolve(zero_sequence, 0.0, 0.0, -1)


class TestPrueferGrid:
    """pruefer_evolve_grid."""

    def test_matches_single_trajectories(self, coulomb_random):
        etas = np.array([0.1, 1.7, 3.0, 4.4])
        state = pruefer_evolve_grid(coulomb_random, etas, 0.5, 256, ResourceManager(max_workers=1))
        for k, eta in enumerate(etas):
            traj = pruefer_evolve(coulomb_random, eta, 0.5, 256)
            assert state.radii_log[k] == pytest.approx(traj.radii_log[-1], abs=1e-12)
            assert state.phases[k] == pytest.approx(traj.phases[-1], abs=1e-12)
            assert state.accumulator[k] == pytest.approx(traj.accumulator[-1], abs=1e-12)
            assert state.sup_radii_log[k] == pytest.approx(np.max(traj.radii_log), abs=1e-12)

    def test_thread_count_does_not_change_results(self, coulomb_random):
        etas = 2.0 * np.pi * np.arange(1024) / 1024
        one = pruefer_evolve_grid(coulomb_random, etas, 0.0, 512, ResourceManager(max_workers=1))
        four = pruefer_evolve_grid(coulomb_random, etas, 0.0, 512, ResourceManager(max_workers=4))
        assert np.allclose(one.radii_log, four.radii_log, rtol=0.0, atol=1e-12)
        assert np.allclose(one.accumulator, four.accumulator, rtol=0.0, atol=1e-12)

    def test_defaults_to_full_length(self, coulomb_random, single_thread):
        state = pruefer_evolve_grid(coulomb_random, [1.0], resource_manager=single_thread)
        assert state.n == coulomb_random.length


class TestTails:
    """hat-alpha tails and the criterion."""

    @pytest.mark.slow
    def test_alternating_tail_converges(self):
        alpha = coulomb_family(0.9, 100_000)
        result = tail_convergence(alpha, np.pi)
        assert result.converged
        assert result.value.real == pytest.approx(0.9 * np.log(2.0), abs=1e-4)
        assert abs(result.value.imag) < 1e-8

    @pytest.mark.slow
    def test_resonant_tail_does_not_converge(self):
        alpha = coulomb_family(0.9, 100_000)
        result = tail_convergence(alpha, 0.0)
        assert not result.converged
        assert result.cauchy_variation == pytest.approx(0.9 * np.log(2.0), abs=1e-3)

    def test_alpha_tail(self):
        alpha = coulomb_family(0.5, 100)
        expected = sum(0.5 * (-1) ** j / (j + 1) for j in range(10, 51))
        assert alpha_tail(alpha, np.pi, 10, 50).real == pytest.approx(expected, abs=1e-12)

    def test_alpha_tail_beyond_length(self):
        with pytest.raises(PreconditionError):
            alpha_tail(coulomb_family(0.5, 100), 1.0, 0, 101)

    def test_criterion_zero_sequence(self, zero_sequence):
        assert fsr_criterion(zero_sequence, 1.0, 64) == 0.0

    def test_criterion_saturates_off_resonance(self):
        profile = fsr_profile(coulomb_family(0.5, 4096), np.pi)
        assert profile.dyadic_n[-1] == 4096
        assert np.all(np.diff(profile.partial_sums) >= 0.0)
        assert profile.growth_exponent < 1.0


class TestRadiusBoundedness:
    """radius_boundedness."""

    def test_records_per_beta(self, coulomb_random, single_thread):
        records = radius_boundedness(coulomb_random, 1.0, 512, beta_count=8, resource_manager=single_thread)
        assert [r.beta for r in records] == pytest.approx(2.0 * np.pi * np.arange(8) / 8)
        for r in records:
            assert r.sup_log_radius >= max(r.final_log_radius, 0.0)

    def test_rejects_empty_beta_grid(self, coulomb_random):
        with pytest.raises(PreconditionError):
            radius_boundedness(coulomb_random, 1.0, 10, beta_count=0)

    def test_default_beta_grid(self, coulomb_random, single_thread):
        records = radius_boundedness(coulomb_random, 1.0, 64, resource_manager=single_thread)
        assert len(records) == settings.scan.SCAN_BETA_SAMPLES

    @pytest.mark.slow
    def test_gap_stays_bounded_for_small_coulomb(self, single_thread):
        """|log|1 - w| + Re w| <= |w|^2 for |w| <= 0.2, so the gap is at most sum |alpha_j|^2."""
        alpha = coulomb_family(0.2, 100_000)
        etas = 2.0 * np.pi * np.arange(16) / 16
        state = pruefer_evolve_grid(alpha, etas, 0.0, 100_000, single_thread)
        bound = float(np.sum(np.abs(alpha.values) ** 2))
        assert np.all(state.sup_fs_gap <= bound)
        assert np.all(state.sup_fs_gap <= 2.0)
