"""
Unit tests for the domain types.

Validates:
- VerblunskySequence: disk check, padding, rotation, immutability
- Angle normalization and circular distance
- IntervalOnCircle arithmetic and wrap-around membership
- CircleMeasure: validation, masses, moments, aliasing guard
- MonicPair / PrueferTrajectory invariants
- ErrorDetail

python -m pytest tests/test_opuc/test_models.py
"""
import numpy as np
import pytest

from opuc.errors import (
    AliasingError,
    CoefficientOutOfDiskError,
    ErrorType,
    InvariantViolationError,
    PreconditionError,
)
from opuc.models import (
    TWO_PI,
    CircleMeasure,
    ErrorDetail,
    IntervalOnCircle,
    MonicPair,
    PrueferTrajectory,
    VerblunskySequence,
    circular_distance,
    measure_interval_mass,
    measure_moment,
    measure_moments,
    normalize_angle,
)


class TestVerblunskySequence:
    """VerblunskySequence."""

    def test_rejects_coefficient_on_circle(self):
        with pytest.raises(CoefficientOutOfDiskError):
            VerblunskySequence(np.array([0.1, 1.0]))

    def test_rejects_nan(self):
        with pytest.raises(CoefficientOutOfDiskError):
            VerblunskySequence(np.array([0.1, np.nan]))

    def test_padded_zero_beyond_length(self):
        alpha = VerblunskySequence(np.array([0.5, 0.25j]))
        padded = alpha.padded(5)
        assert padded.tolist() == [0.5, 0.25j, 0, 0, 0]

    def test_padded_truncates(self):
        alpha = VerblunskySequence(np.array([0.5, 0.25, 0.125]))
        assert alpha.padded(2).tolist() == [0.5, 0.25]

    def test_rotated(self):
        alpha = VerblunskySequence(np.array([0.5, 0.25j]), generator_tag="pair")
        rotated = alpha.rotated(np.pi / 2)
        assert np.allclose(rotated.values, 1j * alpha.values)
        assert rotated.generator_tag.startswith("pair|beta=")

    def test_scaled_out_of_disk(self):
        alpha = VerblunskySequence(np.array([0.6]))
        with pytest.raises(CoefficientOutOfDiskError):
            alpha.scaled(2.0)

    def test_values_are_read_only(self):
        alpha = VerblunskySequence(np.array([0.5, 0.25]))
        with pytest.raises(ValueError):
            alpha.values[0] = 0.0

    def test_source_array_is_copied(self):
        source = np.array([0.5, 0.25], dtype=np.complex128)
        alpha = VerblunskySequence(source)
        source[0] = 0.9
        assert alpha.values[0] == 0.5


class TestAngles:
    """normalize_angle and circular_distance."""

    def test_normalize_scalar(self):
        assert normalize_angle(TWO_PI) == 0.0
        assert normalize_angle(-np.pi / 2) == pytest.approx(1.5 * np.pi)

    def test_normalize_tiny_negative(self):
        """Values that round up to 2pi map to 0."""
        assert normalize_angle(-1e-18) == 0.0

    def test_normalize_array(self):
        out = normalize_angle(np.array([-1e-18, 7.0, -1.0]))
        assert np.all((out >= 0.0) & (out < TWO_PI))

    def test_circular_distance_wraps(self):
        assert circular_distance(0.1, TWO_PI - 0.1) == pytest.approx(0.2)
        assert circular_distance(0.0, np.pi) == pytest.approx(np.pi)


class TestIntervalOnCircle:
    """IntervalOnCircle."""

    def test_rejects_empty(self):
        with pytest.raises(PreconditionError):
            IntervalOnCircle(0.0, 0.0)

    def test_contains_across_zero(self):
        interval = IntervalOnCircle(0.0, 0.5)
        assert interval.contains([0.2, TWO_PI - 0.2, 1.0]).tolist() == [True, True, False]

    def test_tripled_caps_at_full_circle(self):
        interval = IntervalOnCircle(1.0, 2.0)
        assert interval.tripled().half_width == pytest.approx(np.pi)
        assert interval.tripled().contains([4.0]).all()

    def test_width_and_doubled(self):
        interval = IntervalOnCircle(1.0, 0.1)
        assert interval.width == pytest.approx(0.2)
        assert interval.doubled().width == pytest.approx(0.4)
        assert interval.doubled().center == pytest.approx(1.0)

    def test_from_endpoints_wrapping(self):
        interval = IntervalOnCircle.from_endpoints(TWO_PI - 0.5, 0.5)
        assert circular_distance(interval.center, 0.0) < 1e-12
        assert interval.half_width == pytest.approx(0.5)


class TestCircleMeasure:
    """CircleMeasure and its operations."""

    def test_uniform_is_probability(self):
        m = CircleMeasure.uniform(1024)
        assert m.is_probability()
        assert not m.has_atoms

    def test_rejects_negative_density(self):
        with pytest.raises(PreconditionError):
            CircleMeasure(np.array([1.0, -0.1, 1.0]))

    def test_rejects_duplicate_atoms(self):
        with pytest.raises(PreconditionError):
            CircleMeasure(np.zeros(8), ((1.0, 0.5), (1.0, 0.25)))

    def test_atoms_sorted_and_normalized(self):
        m = CircleMeasure(np.zeros(8), ((7.0, 0.5), (0.5, 0.5)))
        assert [a for a, _ in m.atoms] == pytest.approx([0.5, 7.0 - TWO_PI])
        assert m.total_mass == pytest.approx(1.0)

    def test_interval_mass_uniform(self):
        m = CircleMeasure.uniform(1024)
        assert measure_interval_mass(m, IntervalOnCircle(2.0, 0.5)) == pytest.approx(1.0 / TWO_PI, abs=1e-12)

    def test_interval_mass_wraps(self):
        m = CircleMeasure.uniform(1024)
        assert measure_interval_mass(m, IntervalOnCircle(0.0, 0.5)) == pytest.approx(1.0 / TWO_PI, abs=1e-12)

    def test_interval_mass_includes_atoms(self, atom_mixture):
        inside = measure_interval_mass(atom_mixture, IntervalOnCircle(1.0, 0.1))
        outside = measure_interval_mass(atom_mixture, IntervalOnCircle(3.0, 0.1))
        assert inside == pytest.approx(0.5 + 0.5 * 0.2 / TWO_PI, abs=1e-12)
        assert outside == pytest.approx(0.5 * 0.2 / TWO_PI, abs=1e-12)

    def test_moments_of_uniform(self):
        m = CircleMeasure.uniform(256)
        assert measure_moment(m, 0) == pytest.approx(1.0)
        assert abs(measure_moment(m, 3)) < 1e-12

    def test_moments_fft_matches_direct(self):
        rng = np.random.default_rng(5)
        m = CircleMeasure(rng.uniform(0.0, 1.0, 512))
        moments = measure_moments(m, 40)
        direct = np.array([measure_moment(m, k) for k in range(41)])
        assert np.allclose(moments, direct, atol=1e-12)

    def test_point_mass_moments(self):
        m = CircleMeasure.point_mass(1.0)
        assert measure_moment(m, 2) == pytest.approx(np.exp(-2j))

    def test_moment_aliasing_guard(self):
        m = CircleMeasure.uniform(64)
        with pytest.raises(AliasingError):
            measure_moment(m, 17)
        with pytest.raises(AliasingError):
            measure_moments(m, 17)


class TestRecursionStates:
    """MonicPair and PrueferTrajectory invariants."""

    def test_initial_pair(self):
        pair = MonicPair.initial()
        assert pair.degree == 0
        assert pair.norm_sq == 1.0

    def test_pair_requires_monic(self):
        with pytest.raises(InvariantViolationError):
            MonicPair(np.array([0.0, 2.0]), np.array([2.0, 0.0]))

    def test_trajectory_requires_unit_start(self):
        with pytest.raises(InvariantViolationError):
            PrueferTrajectory(0.0, 0.0, np.array([0.1, 0.2]), np.zeros(2), np.zeros(2))

    def test_trajectory_normalizes_angles(self):
        traj = PrueferTrajectory(-1.0, TWO_PI, np.zeros(3), np.zeros(3), np.zeros(3))
        assert traj.eta == pytest.approx(TWO_PI - 1.0)
        assert traj.beta == 0.0
        assert traj.length == 2


class TestErrorDetail:
    """ErrorDetail."""

    def test_from_exception(self):
        detail = ErrorDetail.from_exception(
            ValueError("bad"), ErrorType.VALIDATION, "BAD_VALUE", subcommand="scan"
        )
        data = detail.to_dict()
        assert data["error_type"] == "VALIDATION"
        assert data["error_code"] == "BAD_VALUE"
        assert data["error_message"] == "bad"
        assert data["timestamp"].endswith("Z")
        assert data["stack_trace"] is None
        assert ErrorDetail.from_dict(data) == detail
