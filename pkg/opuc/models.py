"""
Domain types shared by every engine module.

All types are immutable after construction: arrays are copied and flagged
read-only, so any number of readers may share them.

Angles are normalized to [0, 2pi) at construction; Pruefer phase lifts are
the one exception and stay unnormalized.
"""

import traceback
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Optional, Sequence

import numpy as np

from opuc.errors import (
    AliasingError,
    ErrorType,
    CoefficientOutOfDiskError,
    InvariantViolationError,
    PreconditionError,
)

TWO_PI = 2.0 * np.pi


def normalize_angle(angle):
    """Map angles (scalar or array) into [0, 2pi)."""
    wrapped = np.mod(angle, TWO_PI)
    # np.mod(-1e-18, 2pi) rounds to 2pi
    if np.ndim(wrapped):
        return np.where(wrapped >= TWO_PI, 0.0, wrapped)
    return 0.0 if wrapped >= TWO_PI else float(wrapped)


def circular_distance(a, b):
    """Distance on the circle, in [0, pi]."""
    d = np.abs(np.mod(np.asarray(a) - np.asarray(b), TWO_PI))
    return np.minimum(d, TWO_PI - d)


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class VerblunskySequence:
    """
    Finite truncation alpha_0..alpha_{n-1} of a Verblunsky sequence.

    Entries beyond `length` are exactly zero (Bernstein-Szego convention).
    """

    values: np.ndarray
    generator_tag: Optional[str] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128).reshape(-1)
        if values.size and not np.all(np.isfinite(values)):
            raise CoefficientOutOfDiskError("Verblunsky coefficients must be finite")
        if values.size and np.max(np.abs(values)) >= 1.0:
            worst = int(np.argmax(np.abs(values)))
            raise CoefficientOutOfDiskError(
                f"|alpha_{worst}| = {abs(values[worst]):.17g} is not inside the unit disk"
            )
        object.__setattr__(self, "values", _frozen(values))

    @property
    def length(self) -> int:
        return int(self.values.size)

    def padded(self, n: int) -> np.ndarray:
        """First n coefficients, zero-padded past the stored length."""
        if n < 0:
            raise PreconditionError(f"n must be nonnegative, got {n}")
        out = np.zeros(n, dtype=np.complex128)
        k = min(n, self.length)
        out[:k] = self.values[:k]
        return out

    def rotated(self, beta: float) -> "VerblunskySequence":
        """The sequence e^{i beta} alpha_j."""
        tag = f"{self.generator_tag or 'sequence'}|beta={beta:.17g}"
        return VerblunskySequence(np.exp(1j * beta) * self.values, generator_tag=tag)

    def scaled(self, t: float) -> "VerblunskySequence":
        """The sequence t * alpha_j (|t| * max|alpha| must stay below 1)."""
        tag = f"{self.generator_tag or 'sequence'}|scale={t:.17g}"
        return VerblunskySequence(t * self.values, generator_tag=tag)

    def truncated(self, n: int) -> "VerblunskySequence":
        return VerblunskySequence(self.padded(n), generator_tag=self.generator_tag)

    def to_dict(self) -> dict:
        return {
            "generator_tag": self.generator_tag,
            "length": self.length,
            "max_abs": float(np.max(np.abs(self.values))) if self.length else 0.0,
        }


@dataclass(frozen=True)
class IntervalOnCircle:
    """Arc (center - half_width, center + half_width) taken modulo 2pi."""

    center: float
    half_width: float

    def __post_init__(self):
        if not (0.0 < self.half_width <= np.pi):
            raise PreconditionError(f"half_width must lie in (0, pi], got {self.half_width}")
        object.__setattr__(self, "center", normalize_angle(float(self.center)))

    @property
    def width(self) -> float:
        """Length delta of the arc."""
        return 2.0 * self.half_width

    @property
    def left(self) -> float:
        return normalize_angle(self.center - self.half_width)

    def scaled(self, factor: float) -> "IntervalOnCircle":
        """Same center, width multiplied by factor (capped at the full circle)."""
        return IntervalOnCircle(self.center, min(self.half_width * factor, np.pi))

    def tripled(self) -> "IntervalOnCircle":
        """3I: same center, triple width."""
        return self.scaled(3.0)

    def doubled(self) -> "IntervalOnCircle":
        """2I: same center, double width."""
        return self.scaled(2.0)

    def contains(self, angles) -> np.ndarray:
        """Membership modulo 2pi (open arc; the full circle contains everything)."""
        angles = np.asarray(angles, dtype=float)
        if self.half_width >= np.pi:
            return np.ones(angles.shape, dtype=bool)
        offset = np.mod(angles - self.left, TWO_PI)
        return (offset > 0.0) & (offset < self.width)

    @classmethod
    def from_endpoints(cls, a: float, b: float) -> "IntervalOnCircle":
        """Arc running counterclockwise from a to b."""
        length = float(np.mod(b - a, TWO_PI)) or TWO_PI
        return cls(a + length / 2.0, length / 2.0)


@dataclass(frozen=True)
class CircleMeasure:
    """
    Measure on [0, 2pi): density on the uniform grid eta_k = 2pi k / M plus
    finitely many atoms (angle, mass).
    """

    density: np.ndarray
    atoms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        density = np.asarray(self.density, dtype=float).reshape(-1)
        if density.size == 0:
            raise PreconditionError("grid_size must be positive")
        if not np.all(np.isfinite(density)):
            raise PreconditionError("density must be finite")
        if np.min(density) < 0.0:
            raise PreconditionError(f"density must be nonnegative (min {np.min(density):.3e})")
        atoms = []
        for angle, mass in self.atoms:
            if not mass > 0.0:
                raise PreconditionError(f"atom mass must be positive, got {mass}")
            atoms.append((normalize_angle(float(angle)), float(mass)))
        atoms.sort()
        for (a0, _), (a1, _) in zip(atoms, atoms[1:]):
            if a0 == a1:
                raise PreconditionError(f"duplicate atom at angle {a0}")
        object.__setattr__(self, "density", _frozen(density))
        object.__setattr__(self, "atoms", tuple(atoms))

    @property
    def grid_size(self) -> int:
        return int(self.density.size)

    @property
    def step(self) -> float:
        return TWO_PI / self.grid_size

    @property
    def grid(self) -> np.ndarray:
        return self.step * np.arange(self.grid_size)

    @property
    def ac_mass(self) -> float:
        return float(self.step * np.sum(self.density))

    @property
    def atom_mass(self) -> float:
        return float(sum(mass for _, mass in self.atoms))

    @property
    def total_mass(self) -> float:
        return self.ac_mass + self.atom_mass

    @property
    def has_atoms(self) -> bool:
        return len(self.atoms) > 0

    def is_probability(self, tol: float = 1e-8) -> bool:
        return abs(self.total_mass - 1.0) <= tol

    def cumulative(self, angles) -> np.ndarray:
        """
        Absolutely continuous mass of [0, x) for x in [0, 2pi], integrating the
        periodic piecewise-linear interpolant of the density (trapezoid rule).
        """
        x = np.clip(np.asarray(angles, dtype=float), 0.0, TWO_PI)
        rho = self.density
        rho_next = np.roll(rho, -1)
        h = self.step
        nodes = np.concatenate(([0.0], np.cumsum(0.5 * h * (rho + rho_next))))
        cell = np.minimum((x / h).astype(np.int64), self.grid_size - 1)
        t = x / h - cell
        partial = h * (rho[cell] * t + 0.5 * (rho_next[cell] - rho[cell]) * t * t)
        return nodes[cell] + partial

    def with_atoms(self, atoms: Sequence[tuple]) -> "CircleMeasure":
        return CircleMeasure(self.density, tuple(self.atoms) + tuple(atoms))

    def to_dict(self) -> dict:
        return {
            "grid_size": self.grid_size,
            "ac_mass": self.ac_mass,
            "atoms": [[angle, mass] for angle, mass in self.atoms],
            "total_mass": self.total_mass,
        }

    @classmethod
    def uniform(cls, grid_size: int, mass: float = 1.0) -> "CircleMeasure":
        """Normalized Lebesgue measure (times mass)."""
        return cls(np.full(grid_size, mass / TWO_PI))

    @classmethod
    def point_mass(cls, angle: float, mass: float = 1.0, grid_size: int = 64) -> "CircleMeasure":
        return cls(np.zeros(grid_size), ((angle, mass),))


@dataclass(frozen=True)
class MonicPair:
    """
    State of the Szego recursion: Phi_n and Phi_n^* as ascending coefficient
    arrays, with the norm product tracked in the log domain.
    """

    phi: np.ndarray
    phi_star: np.ndarray
    log_norm_sq: float = 0.0

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=np.complex128).reshape(-1)
        phi_star = np.asarray(self.phi_star, dtype=np.complex128).reshape(-1)
        if phi.size == 0 or phi.size != phi_star.size:
            raise InvariantViolationError("phi and phi_star must be nonempty and of equal length")
        if phi[-1] != 1.0:
            raise InvariantViolationError(f"leading coefficient of Phi_n is {phi[-1]}, expected 1")
        if self.log_norm_sq > 0.0:
            raise InvariantViolationError(f"norm_sq must lie in (0, 1], got exp({self.log_norm_sq})")
        object.__setattr__(self, "phi", _frozen(phi))
        object.__setattr__(self, "phi_star", _frozen(phi_star))
        object.__setattr__(self, "log_norm_sq", float(self.log_norm_sq))

    @property
    def degree(self) -> int:
        return int(self.phi.size - 1)

    @property
    def norm_sq(self) -> float:
        """prod_{j<n} (1 - |alpha_j|^2) = ||Phi_n||^2."""
        return float(np.exp(self.log_norm_sq))

    @classmethod
    def initial(cls) -> "MonicPair":
        """Phi_0 = Phi_0^* = 1."""
        return cls(np.ones(1, dtype=np.complex128), np.ones(1, dtype=np.complex128), 0.0)


@dataclass(frozen=True)
class PrueferTrajectory:
    """
    Pruefer radius/phase along one angle eta and rotation beta, with the
    running resonance accumulator A(j, eta, beta).
    """

    eta: float
    beta: float
    radii_log: np.ndarray
    phases: np.ndarray
    accumulator: np.ndarray

    def __post_init__(self):
        radii_log = np.asarray(self.radii_log, dtype=float)
        phases = np.asarray(self.phases, dtype=float)
        accumulator = np.asarray(self.accumulator, dtype=np.complex128)
        if not (radii_log.size == phases.size == accumulator.size) or radii_log.size == 0:
            raise InvariantViolationError("trajectory arrays must be nonempty and of equal length")
        if radii_log[0] != 0.0:
            raise InvariantViolationError("R_0 must equal 1")
        object.__setattr__(self, "eta", normalize_angle(float(self.eta)))
        object.__setattr__(self, "beta", normalize_angle(float(self.beta)))
        object.__setattr__(self, "radii_log", _frozen(radii_log))
        object.__setattr__(self, "phases", _frozen(phases))
        object.__setattr__(self, "accumulator", _frozen(accumulator))

    @property
    def length(self) -> int:
        """Number of steps n (arrays hold indices 0..n)."""
        return int(self.radii_log.size - 1)

    @property
    def radii(self) -> np.ndarray:
        return np.exp(self.radii_log)


# ---------------------------------------------------------------------------
# Measure operations


def measure_interval_mass(m: CircleMeasure, interval: IntervalOnCircle) -> float:
    """
    mu(I): trapezoid quadrature of the density over the arc plus the exact
    contribution of atoms inside it.
    """
    if interval.half_width >= np.pi:
        return m.total_mass
    a = interval.left
    b = a + interval.width
    if b <= TWO_PI:
        ac = m.cumulative(b) - m.cumulative(a)
    else:
        ac = (m.cumulative(TWO_PI) - m.cumulative(a)) + m.cumulative(b - TWO_PI)
    inside = [mass for angle, mass in m.atoms if interval.contains(angle)]
    mass = float(ac) + float(sum(inside))
    return min(max(mass, 0.0), m.total_mass)


def measure_moment(m: CircleMeasure, k: int) -> complex:
    """int e^{-ik eta} d mu(eta), guarded against aliasing (|k| <= M/4)."""
    k = int(k)
    if 4 * abs(k) > m.grid_size:
        raise AliasingError(
            f"moment order {k} exceeds grid_size/4 = {m.grid_size // 4}"
        )
    ac = m.step * np.dot(m.density, np.exp(-1j * k * m.grid))
    atoms = sum(mass * np.exp(-1j * k * angle) for angle, mass in m.atoms)
    return complex(ac + atoms)


def measure_moments(m: CircleMeasure, order: int) -> np.ndarray:
    """Moments c_0..c_order in one FFT pass (same guard as measure_moment)."""
    if 4 * order > m.grid_size:
        raise AliasingError(f"moment order {order} exceeds grid_size/4 = {m.grid_size // 4}")
    ks = np.arange(order + 1)
    moments = m.step * np.fft.fft(m.density)[: order + 1]
    for angle, mass in m.atoms:
        moments = moments + mass * np.exp(-1j * ks * angle)
    return moments


# ---------------------------------------------------------------------------
# Runner artifacts


@dataclass
class ErrorDetail:
    """Details of a failed run, written to error.json."""

    timestamp: str
    error_type: str  # VALIDATION | NUMERICAL_GUARD
    error_code: str
    error_message: str
    subcommand: Optional[str] = None
    stack_trace: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ErrorDetail":
        return cls(**data)

    @classmethod
    def from_exception(
        cls,
        exception: Exception,
        error_type: ErrorType,
        error_code: str,
        subcommand: Optional[str] = None,
        include_stack_trace: bool = False,
    ) -> "ErrorDetail":
        """
        Create ErrorDetail from an exception.

        Args:
            exception: The exception that ended the run
            error_type: Classified error type
            error_code: Error code identifier
            subcommand: Subcommand that was running
            include_stack_trace: Whether to include the full stack trace
        """
        return cls(
            timestamp=datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            error_type=error_type.value,
            error_code=error_code,
            error_message=str(exception),
            subcommand=subcommand,
            stack_trace=traceback.format_exc() if include_stack_trace else None,
        )
