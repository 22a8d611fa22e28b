"""
Unit tests for the singular-part diagnostics.

Validates:
- eps-energy: closed form for Lebesgue measure, atoms, monotonicity in eps
- Stopped exponential sums: constant and dyadic stopping, energy guard
- Local scaling around atoms and smooth points
- Christoffel atom detection: geometric contraction of the reciprocal, power-law and near-atom rejection
- Point-mass budget floor(4 A_est) on the Coulomb family below A = 1/4
- eps0 admissibility conditions
- Multiscale scan: empty scan, budget exhaustion, K_max from the counting check, report fields,
  tile location for a concentrated measure, no singular tiles for Coulomb c = 0.2

python -m pytest tests/test_opuc/test_singular_scan.py
"""
import numpy as np
import pytest
from unittest.mock import patch

from config.settings import settings
from opuc.bernstein_szego import bs_density
from opuc.errors import InfiniteEnergyError, PreconditionError
from opuc.generators import constant_family, coulomb_family, geometric_family
from opuc.models import TWO_PI, CircleMeasure, VerblunskySequence, circular_distance
from opuc.singular_scan import (
    atom_candidates,
    detect_atoms,
    dyadic_stopping_times,
    eps0_admissibility,
    epsilon_energy,
    local_scaling_exponent,
    pure_point_budget,
    salem_zygmund_test,
    singular_interval_scan,
    tail_energy_test,
)
from opuc.szego import verblunsky_from_measure


class TestEpsilonEnergy:
    """epsilon_energy."""

    @pytest.mark.parametrize("eps", [0.25, 0.5, 0.75])
    def test_lebesgue_closed_form(self, eps):
        """Normalized Lebesgue measure: 1 + pi^{-eps} / (1 - eps)."""
        energy = epsilon_energy(CircleMeasure.uniform(4096), eps)
        assert energy == pytest.approx(1.0 + np.pi ** (-eps) / (1.0 - eps), rel=1e-3)

    def test_eps_zero(self):
        assert epsilon_energy(CircleMeasure.uniform(1024), 0.0) == pytest.approx(2.0, rel=1e-9)

    def test_atoms_have_infinite_energy(self, atom_mixture):
        assert epsilon_energy(atom_mixture, 0.5) == float("inf")

    def test_increases_with_eps(self):
        density = np.zeros(2048)
        density[:256] = 1.0
        measure = CircleMeasure(density / (TWO_PI * density.mean()))
        energies = [epsilon_energy(measure, eps) for eps in (0.1, 0.3, 0.5, 0.7, 0.9)]
        assert np.all(np.diff(energies) > 0.0)

    def test_rejects_eps_one(self):
        with pytest.raises(PreconditionError):
            epsilon_energy(CircleMeasure.uniform(64), 1.0)


class TestStoppedSums:
    """salem_zygmund_test, dyadic_stopping_times, tail_energy_test."""

    def test_zero_sequence(self, zero_sequence):
        record = salem_zygmund_test(zero_sequence, CircleMeasure.uniform(1024), 0.5, 32)
        assert record.lhs == 0.0
        assert record.ratio == 0.0

    def test_lebesgue_ratio_at_most_one(self):
        """Under Lebesgue measure the squared L1 norm is below the l2 norm."""
        alpha = coulomb_family(0.5, 2048)
        nu = CircleMeasure.uniform(4096)
        for N in (16, 128, 1024):
            assert salem_zygmund_test(alpha, nu, 0.5, N).ratio <= 1.0

    def test_dyadic_stops_bounded_by_constant_case(self):
        alpha = coulomb_family(0.5, 2048)
        nu = CircleMeasure.uniform(4096)
        constant = max(salem_zygmund_test(alpha, nu, 0.5, N).ratio for N in (16, 128, 1024))
        stops = dyadic_stopping_times(alpha, nu, 1024)
        adversarial = salem_zygmund_test(alpha, nu, 0.5, stops).ratio
        assert adversarial <= 10.0 * constant

    def test_dyadic_stops_are_powers_of_two(self, coulomb_random):
        stops = dyadic_stopping_times(coulomb_random, CircleMeasure.uniform(512), 256)
        assert stops.shape == (512,)
        assert set(np.unique(stops)) <= {1, 2, 4, 8, 16, 32, 64, 128, 256}

    def test_stopped_sum_matches_direct(self):
        """A callable stop equal to 3 everywhere reproduces the first four terms."""
        alpha = VerblunskySequence(np.array([0.1, 0.2j, -0.3, 0.05, 0.4]))
        nu = CircleMeasure.uniform(64)
        record = salem_zygmund_test(alpha, nu, 0.0, lambda grid: np.full(grid.shape, 3))
        n = np.arange(4)
        sums = np.exp(-1j * np.outer(nu.grid, n)) @ alpha.values[:4]
        expected = (np.mean(np.abs(sums))) ** 2
        assert record.lhs == pytest.approx(expected, rel=1e-12)

    def test_atoms_rejected(self, atom_mixture, coulomb_random):
        with pytest.raises(InfiniteEnergyError):
            salem_zygmund_test(coulomb_random, atom_mixture, 0.5, 16)
        with pytest.raises(InfiniteEnergyError):
            tail_energy_test(coulomb_random, atom_mixture, 0.5)

    def test_tail_energy(self, zero_sequence, coulomb_random):
        nu = CircleMeasure.uniform(1024)
        assert tail_energy_test(zero_sequence, nu, 0.5).lhs == 0.0
        record = tail_energy_test(coulomb_random, nu, 0.5)
        assert np.isfinite(record.lhs) and record.lhs > 0.0
        assert record.rhs == pytest.approx(np.sqrt(epsilon_energy(nu, 0.5)))


class TestLocalScaling:
    """local_scaling_exponent."""

    def test_lebesgue_ratio_decays(self):
        deltas = np.array([0.5, 0.1, 0.02])
        ratios = local_scaling_exponent(CircleMeasure.uniform(4096), 1.0, deltas)
        assert np.allclose(ratios, (2.0 * deltas / TWO_PI) / np.sqrt(2.0 * deltas), rtol=1e-9)
        assert np.all(np.diff(ratios) < 0.0)

    def test_atom_ratio_diverges(self, atom_mixture):
        deltas = np.array([0.5, 0.1, 0.02])
        ratios = local_scaling_exponent(atom_mixture, 1.0, deltas)
        assert np.all(ratios >= 0.5 / np.sqrt(2.0 * deltas))
        assert np.all(np.diff(ratios) > 0.0)

    def test_requires_decreasing_deltas(self):
        with pytest.raises(PreconditionError):
            local_scaling_exponent(CircleMeasure.uniform(64), 0.0, [0.1, 0.2])


class TestDetectAtoms:
    """detect_atoms and pure_point_budget."""

    def test_zero_sequence_has_no_atoms(self, zero_sequence):
        atoms = detect_atoms(zero_sequence, 64, [0.5, 2.0])
        assert [a.mass for a in atoms] == [0.0, 0.0]

    def test_recovers_atom_mass(self, atom_mixture):
        alpha = verblunsky_from_measure(atom_mixture, 64)
        atoms = detect_atoms(alpha, 64, [1.0, 3.0])
        assert atoms[0].mass == pytest.approx(0.5, abs=0.05)
        assert atoms[0].stable
        assert atoms[1].mass == 0.0

    def test_nearby_duplicates_dropped(self, atom_mixture):
        alpha = verblunsky_from_measure(atom_mixture, 64)
        atoms = detect_atoms(alpha, 64, [1.0, 1.01])
        assert sum(a.mass > 0.0 for a in atoms) == 1
        assert sum(a.mass for a in atoms) <= 1.0

    def test_constant_coefficients_have_no_atom_at_pi(self):
        alpha = VerblunskySequence(np.full(128, 0.5 + 0j))
        assert detect_atoms(alpha, 128, [np.pi])[0].mass == 0.0

    def test_candidates_from_peaks(self, atom_mixture):
        alpha = verblunsky_from_measure(atom_mixture, 64)
        candidates = atom_candidates(bs_density(alpha, 64, 4096), 64)
        assert candidates
        assert circular_distance(candidates[0], 1.0) < TWO_PI / 64

    def test_needs_four_dyadic_levels(self, zero_sequence):
        with pytest.raises(PreconditionError):
            detect_atoms(zero_sequence, 7, [0.0])

    def test_pure_point_budget(self):
        alpha = coulomb_family(0.2, 1000)
        budget = pure_point_budget(alpha, [])
        assert budget.count == 0
        assert budget.holds

    def test_constant_coefficients_atom_at_zero(self):
        """alpha = 1/2: |phi_j(1)|^2 = 3^{-j}, so the point mass at eta = 0 is 2/3."""
        atom = detect_atoms(constant_family(0.5, 256), 256, [0.0])[0]
        assert atom.mass == pytest.approx(2.0 / 3.0, rel=1e-9)
        assert atom.stable
        assert atom.ratio == 0.0

    def test_coulomb_below_quarter_has_no_atom(self):
        """c = 0.4 gives A_est near 0.2: the Christoffel sum at eta = 0 grows like k^{0.2}."""
        alpha = coulomb_family(0.4, 1024)
        atoms = detect_atoms(alpha, 1024, [0.0])
        assert atoms[0].mass == 0.0
        assert not atoms[0].stable
        assert atoms[0].ratio > 0.6
        budget = pure_point_budget(alpha, atoms)
        assert budget.A_est < 0.25
        assert budget.budget == 0
        assert budget.count == 0
        assert budget.holds

    def test_near_atom_is_not_an_atom(self):
        """Geometric coefficients are summable, so the peak at eta = 0 is absolutely continuous."""
        atom = detect_atoms(geometric_family(0.9, 256), 256, [0.0])[0]
        assert atom.mass == 0.0
        assert not atom.stable
        assert atom.reciprocal > 0.1

    def test_ratio_in_dict(self, atom_mixture):
        alpha = verblunsky_from_measure(atom_mixture, 64)
        record = detect_atoms(alpha, 64, [1.0])[0].to_dict()
        assert {"angle", "mass", "reciprocal", "ratio", "stable"} <= set(record)
        assert 0.0 < record["ratio"] <= 0.6


class TestEps0Admissibility:
    """eps0_admissibility."""

    def test_level_condition(self):
        assert eps0_admissibility(1.0, 1, 0.05, n0=1000).level_condition
        assert not eps0_admissibility(1.0, 1, 0.2, n0=1000).level_condition

    def test_large_eps0_fails_tail_condition(self):
        result = eps0_admissibility(1.0, 1, 0.05)
        assert not result.tail_condition
        assert not result.union_bound_ok

    def test_largest_admissible_eps0(self):
        delta, k = 1.0, 2
        largest = eps0_admissibility(delta, k, 0.1).max_admissible_eps0
        inside = eps0_admissibility(delta, k, 0.5 * largest)
        assert inside.tail_condition
        assert inside.union_bound <= delta / 2.0
        assert inside.union_bound_ok
        boundary = eps0_admissibility(delta, k, largest * (1.0 - 1e-9))
        assert boundary.tail_condition

    def test_rejects_bad_eps0(self):
        with pytest.raises(PreconditionError):
            eps0_admissibility(1.0, 1, 1.0)


class TestSingularIntervalScan:
    """singular_interval_scan."""

    def test_zero_sequence_has_no_singular_tiles(self, single_thread):
        alpha = VerblunskySequence(np.zeros(200, dtype=np.complex128))
        report = singular_interval_scan(alpha, 0.3, 2, k_max=1, resource_manager=single_thread)
        assert report.K_max_source == "config"
        assert report.last_completed_scale == 2
        assert not report.budget_exhausted
        assert [s.level for s in report.scales] == [38, 200]
        assert [s.tile_count for s in report.scales] == [21, 70]
        for scale in report.scales:
            assert scale.singular_count == 0
            assert scale.cover_ok and scale.separated_ok and scale.bridge_ok
            assert scale.detected_atoms == []
        # n_1 = 38 lies below n0 = 1000, n_2 = 1372 does not
        assert report.scales[0].below_n0 and not report.scales[1].below_n0
        assert report.scales[1].level_capped

    def test_kmax_taken_from_counting_check(self, single_thread):
        alpha = VerblunskySequence(np.zeros(200, dtype=np.complex128))
        report = singular_interval_scan(alpha, 0.3, 1, resource_manager=single_thread)
        assert report.K_max_source == "kmax_check"
        assert report.K_max == 1

    def test_grid_budget_stops_scan(self, single_thread):
        alpha = VerblunskySequence(np.zeros(200, dtype=np.complex128))
        with patch.object(settings.scan, "SCAN_MAX_GRID", 512):
            report = singular_interval_scan(alpha, 0.3, 2, k_max=1, resource_manager=single_thread)
        assert report.budget_exhausted
        assert report.last_completed_scale == 0
        assert report.scales == []
        assert "SCAN_MAX_GRID" in report.exhaustion_reason

    @pytest.mark.slow
    def test_unresolvable_peak_stops_scan(self, single_thread):
        """a = 0.9: the peak at eta = 0 is about 1e-9 wide, so no grid up to SCAN_MAX_GRID holds its mass."""
        report = singular_interval_scan(geometric_family(0.9, 200), 0.3, 2, k_max=2, resource_manager=single_thread)
        assert report.budget_exhausted
        assert report.last_completed_scale == 0
        assert report.scales == []
        assert report.exhaustion_reason

    def test_concentrated_measure_stays_within_budgets(self, single_thread):
        alpha = geometric_family(0.8, 200)
        report = singular_interval_scan(alpha, 0.3, 2, k_max=2, resource_manager=single_thread)
        assert report.last_completed_scale == 2
        assert not report.budget_exhausted
        for scale in report.scales:
            assert scale.cover_ok
            assert scale.separated_ok

    def test_concentrated_tiles_sit_at_the_peak(self, single_thread):
        """a = 0.8: about 0.88 of the mass lies within 1e-3 of eta = 0."""
        alpha = geometric_family(0.8, 200)
        report = singular_interval_scan(alpha, 0.3, 2, k_max=2, resource_manager=single_thread)
        measure = bs_density(alpha, 200, resource_manager=single_thread)
        peak = float(measure.grid[np.argmax(measure.density)])
        scale = report.scales[1]
        assert scale.level == 200
        assert 1 <= scale.singular_count <= 2
        for center in scale.singular_centers:
            assert circular_distance(center, peak) <= 1.5 * scale.eps_m
        assert scale.detected_atoms == []
        assert len(scale.scaling_exponents) == scale.singular_count
        assert [t.center for t in scale.scaling_exponents] == scale.singular_centers

    def test_report_fields_with_configured_kmax(self, single_thread):
        alpha = VerblunskySequence(np.zeros(200, dtype=np.complex128))
        report = singular_interval_scan(alpha, 0.3, 1, k_max=1, resource_manager=single_thread)
        assert report.A_est == 0.0
        assert report.resonant_angles is None
        assert report.C_fit is None
        assert report.separation_ok is None
        assert {"A_est", "bound_392A", "C_fit", "resonance_level", "resonant_angles"} <= set(report.model_dump())

    def test_report_fields_from_counting_check(self, single_thread):
        alpha = VerblunskySequence(np.zeros(200, dtype=np.complex128))
        report = singular_interval_scan(alpha, 0.3, 1, resource_manager=single_thread)
        assert report.resonant_angles == []
        assert report.separation_ok
        assert report.resonance_level == 38
        assert report.C_fit is not None and report.C_fit < 1.0

    @pytest.mark.slow
    def test_coulomb_scan_has_no_singular_tiles(self, single_thread):
        alpha = coulomb_family(0.2, 2000)
        report = singular_interval_scan(alpha, 0.1, 2, resource_manager=single_thread)
        assert report.K_max_source == "kmax_check"
        assert report.resonant_angles is not None
        assert report.C_fit is not None
        # the ratio 0.04 H_N / log N is largest at N = 10
        assert report.A_est == pytest.approx(0.04 * np.sum(1.0 / np.arange(1, 11)) / np.log(10), rel=1e-9)
        assert report.last_completed_scale == 2
        for scale in report.scales:
            assert scale.singular_count == 0
            assert scale.cover_ok and scale.separated_ok

    def test_rejects_short_sequences(self):
        with pytest.raises(PreconditionError):
            singular_interval_scan(VerblunskySequence(np.zeros(5)), 0.3, 1, k_max=1)
