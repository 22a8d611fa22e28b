"""
Bernstein-Szego approximations, Fejer smoothing and the interval comparison.

The level-n approximation of a Verblunsky sequence is the measure

    d mu_n = norm_sq_n / (2 pi |Phi_n(e^{i eta})|^2) d eta

whose first n coefficients coincide with the sequence (the rest vanish),
so two sequences sharing n coefficients give measures with equal moments
through order n. interval_comparison measures how far that moment match
goes in bounding mu(I) by nu(3I).
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from config.settings import settings
from opuc.errors import (
    InvariantViolationError,
    PreconditionError,
    ResolutionGuardError,
    ScaleGuardError,
)
from opuc.models import (
    TWO_PI,
    CircleMeasure,
    IntervalOnCircle,
    VerblunskySequence,
    measure_interval_mass,
    measure_moments,
)
from opuc.pruefer import pruefer_evolve_grid
from opuc.resource_manager import ResourceManager, get_resource_manager
from opuc.szego import monic_pair_from_sequence

logger = logging.getLogger(__name__)

# Gauss-Legendre nodes per panel of the Fejer convolution
_PANEL_NODES = 16
# Upper bound on quadrature nodes x angles evaluated at once
_BLOCK_ELEMENTS = 2 ** 22
# Dense coefficients are built only while sum log(1 + |alpha_j|), a bound on
# the log of their l1 norm, stays below this
_FFT_LOG_L1_LIMIT = 27.0
# eps * l1 / min |Phi_n| above which FFT values are replaced by the recursion
_FFT_RELATIVE_LIMIT = 1e-12
_EPS = float(np.finfo(float).eps)


@dataclass
class ComparisonRecord:
    """Outcome of mu(I) <= nu(3I) + C delta^kappa for one interval."""

    center: float
    delta: float
    mu_interval: float
    nu_tripled: float
    delta_kappa: float
    implied_constant: float
    moment_mismatch: float
    moment_warning: bool = False

    def to_dict(self) -> dict:
        return {
            "center": self.center,
            "delta": self.delta,
            "mu_I": self.mu_interval,
            "nu_3I": self.nu_tripled,
            "delta_kappa": self.delta_kappa,
            "C_impl": self.implied_constant,
            "moment_mismatch": self.moment_mismatch,
            "moment_warning": self.moment_warning,
        }


@dataclass
class LemmaSweep:
    """interval_comparison of levels 2n and n over a (delta, center) grid."""

    n: int
    kappa: float
    deltas: list[float]
    per_delta_constants: list[float]
    fitted_constant: float
    stability_ratio: float
    max_moment_mismatch: float
    records: list[ComparisonRecord] = field(default_factory=list)


def default_grid_size(n: int) -> int:
    """Smallest grid satisfying the resolution guard, floored at BS_MIN_GRID."""
    return max(settings.bernstein_szego.BS_RESOLUTION_FACTOR * n, settings.bernstein_szego.BS_MIN_GRID)


def _log_modulus_on_grid(
    alpha: VerblunskySequence,
    n: int,
    grid_size: int,
    rm: ResourceManager,
) -> np.ndarray:
    """
    log |Phi_n(e^{i eta_k})| on eta_k = 2 pi k / grid_size.

    One FFT of the dense coefficients when their l1 norm is small against
    min |Phi_n| on the grid; the Pruefer recursion otherwise.
    """
    moduli = np.abs(alpha.values[:n])
    if float(np.sum(np.log1p(moduli))) <= _FFT_LOG_L1_LIMIT:
        state = monic_pair_from_sequence(alpha, n)
        # Phi_n(e^{i eta_k}) = sum_j c_j e^{2 pi i jk/M} = M * ifft(c)[k]
        padded = np.zeros(grid_size, dtype=np.complex128)
        padded[: state.phi.size] = state.phi
        modulus = np.abs(grid_size * np.fft.ifft(padded))
        smallest = float(np.min(modulus))
        if smallest > 0.0 and _EPS * float(np.sum(np.abs(state.phi))) <= _FFT_RELATIVE_LIMIT * smallest:
            return np.log(modulus)
        logger.debug(f"bs_density: FFT values of level {n} too inaccurate near |Phi_n| = {smallest:.3e}")
    grid = TWO_PI * np.arange(grid_size) / grid_size
    return pruefer_evolve_grid(alpha, grid, 0.0, n, rm).radii_log


def _density_on_grid(
    alpha: VerblunskySequence,
    n: int,
    grid_size: int,
    rm: ResourceManager,
) -> np.ndarray:
    # complex values, FFT workspace and the density
    rm.require(grid_size * 16 * 4, label=f"bs_density level {n}")
    log_norm_sq = float(np.sum(np.log1p(-np.abs(alpha.values[:n]) ** 2)))
    with np.errstate(over="ignore"):
        density = np.exp(log_norm_sq - 2.0 * _log_modulus_on_grid(alpha, n, grid_size, rm)) / TWO_PI
    if not np.all(np.isfinite(density)):
        raise InvariantViolationError(f"bs_density: level-{n} density is not finite on {grid_size} points")
    return density


def bs_density(
    alpha: VerblunskySequence,
    n: int,
    grid_size: Optional[int] = None,
    max_grid: Optional[int] = None,
    extra_doublings: int = 0,
    resource_manager: Optional[ResourceManager] = None,
) -> CircleMeasure:
    """
    Level-n Bernstein-Szego measure of alpha on a uniform grid.

    The grid starts at grid_size and doubles until the total mass is within
    QUADRATURE_TOL of 1. Trapezoid aliasing of the density decays like
    r^M, with r the largest modulus of a zero of Phi_n, so each further
    doubling squares the error left in the moments.

    Args:
        alpha: Verblunsky coefficients, at least n of them
        n: Level (uses alpha_0..alpha_{n-1})
        grid_size: Starting grid M; must satisfy M >= 8n
        max_grid: Largest grid the refinement may reach (default BS_MAX_GRID)
        extra_doublings: Doublings after the mass check passes, within max_grid

    Returns:
        Absolutely continuous CircleMeasure, no atoms, total mass 1 within QUADRATURE_TOL

    Raises:
        PreconditionError: n > alpha.length
        ResolutionGuardError: grid_size below the resolution guard, or no grid
            up to max_grid resolves the density
        InvariantViolationError: the density is not finite
    """
    if n < 0 or n > alpha.length:
        raise PreconditionError(f"level n={n} outside [0, {alpha.length}]")
    grid_size = default_grid_size(n) if grid_size is None else int(grid_size)
    factor = settings.bernstein_szego.BS_RESOLUTION_FACTOR
    if grid_size < factor * n or grid_size < 1:
        raise ResolutionGuardError(f"grid_size={grid_size} < {factor}*n = {factor * n}")
    max_grid = settings.bernstein_szego.BS_MAX_GRID if max_grid is None else int(max_grid)
    tol = settings.numerics.QUADRATURE_TOL
    rm = resource_manager or get_resource_manager()

    measure = CircleMeasure(_density_on_grid(alpha, n, grid_size, rm))
    while not measure.is_probability(tol):
        if 2 * measure.grid_size > max_grid:
            raise ResolutionGuardError(
                f"bs_density: level {n} has mass {measure.ac_mass:.12f} on {measure.grid_size} points "
                f"and the grid may not exceed {max_grid}"
            )
        logger.debug(f"bs_density: level {n} mass {measure.ac_mass:.12f} on {measure.grid_size} points, refining")
        measure = CircleMeasure(_density_on_grid(alpha, n, 2 * measure.grid_size, rm))

    for _ in range(extra_doublings):
        if 2 * measure.grid_size > max_grid:
            break
        measure = CircleMeasure(_density_on_grid(alpha, n, 2 * measure.grid_size, rm))
    if measure.grid_size != grid_size:
        logger.info(f"bs_density: level {n} resolved on {measure.grid_size} points (asked {grid_size})")
    return measure


def fejer_kernel(n: int, etas) -> np.ndarray:
    """
    F_n(eta) = (1/(n+1)) (sin((n+1) eta / 2) / sin(eta / 2))^2, with F_n(0) = n + 1.
    """
    if n < 0:
        raise PreconditionError(f"n must be nonnegative, got {n}")
    etas = np.asarray(etas, dtype=float)
    half = np.sin(0.5 * etas)
    numerator = np.sin(0.5 * (n + 1) * etas)
    singular = np.abs(half) < 1e-12
    safe = np.where(singular, 1.0, half)
    return np.where(singular, float(n + 1), numerator ** 2 / ((n + 1) * safe ** 2))


def _panel_rule(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Composite Gauss-Legendre rule on [a, b] with panels no wider than the
    kernel's lobe pi / (n+1), at least FEJER_RESOLUTION_FACTOR (n+1) nodes.
    """
    width = b - a
    lobe = np.pi / (n + 1)
    min_nodes = settings.bernstein_szego.FEJER_RESOLUTION_FACTOR * (n + 1) * width / TWO_PI
    panels = max(int(np.ceil(width / lobe)), int(np.ceil(min_nodes / _PANEL_NODES)), 4)
    x, w = np.polynomial.legendre.leggauss(_PANEL_NODES)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mids[:, None] + half[:, None] * x[None, :]).reshape(-1)
    weights = (half[:, None] * w[None, :]).reshape(-1)
    return nodes, weights


def fejer_smooth_indicator(
    I: IntervalOnCircle,
    n: int,
    etas,
    resource_manager: Optional[ResourceManager] = None,
) -> np.ndarray:
    """
    sigma_n = F_n * chi_{2I}, i.e. (1/2pi) int_{2I} F_n(eta - s) ds, by quadrature.

    Args:
        I: Interval; the indicator is that of its concentric double 2I
        n: Kernel degree
        etas: Evaluation angles

    Returns:
        Real array with the shape of etas, in [0, 1] up to quadrature error
    """
    if n < 0:
        raise PreconditionError(f"n must be nonnegative, got {n}")
    etas = np.asarray(etas, dtype=float)
    doubled = I.doubled()
    if doubled.half_width >= np.pi:
        return np.ones(etas.shape)

    nodes, weights = _panel_rule(doubled.center - doubled.half_width, doubled.center + doubled.half_width, n)
    flat = etas.reshape(-1)
    rm = resource_manager or get_resource_manager()
    block = max(1, _BLOCK_ELEMENTS // nodes.size)
    pieces = [flat[i:i + block] for i in range(0, flat.size, block)] or [flat]

    def convolve(chunk: np.ndarray) -> np.ndarray:
        return fejer_kernel(n, chunk[:, None] - nodes[None, :]) @ weights / TWO_PI

    values = np.concatenate(rm.map_ordered(convolve, pieces))
    return values.reshape(etas.shape)


def fejer_deviation(n: int, delta: float, etas=None) -> float:
    """
    max |sigma_n - chi_{2I}| over ||eta| - delta| >= delta/2, with I centered
    at 0 and 2I = (-delta, delta).
    """
    if not 0.0 < delta < np.pi:
        raise PreconditionError(f"delta must lie in (0, pi), got {delta}")
    if etas is None:
        size = max(4096, settings.bernstein_szego.FEJER_RESOLUTION_FACTOR * (n + 1))
        etas = -np.pi + TWO_PI * (np.arange(size) + 0.5) / size
    etas = np.asarray(etas, dtype=float)
    wrapped = np.mod(etas + np.pi, TWO_PI) - np.pi
    admissible = np.abs(np.abs(wrapped) - delta) >= 0.5 * delta
    if not np.any(admissible):
        return 0.0
    interval = IntervalOnCircle(0.0, 0.5 * delta)
    sigma = fejer_smooth_indicator(interval, n, wrapped[admissible])
    indicator = (np.abs(wrapped[admissible]) < delta).astype(float)
    return float(np.max(np.abs(sigma - indicator)))


def interval_comparison(
    mu: CircleMeasure,
    nu: CircleMeasure,
    I: IntervalOnCircle,
    n: int,
    kappa: Optional[float] = None,
) -> ComparisonRecord:
    """
    Compare mu(I) with nu(3I) + C delta^kappa.

    Args:
        mu, nu: Measures expected to share their moments through order n
        I: Interval of length delta
        n: Moment order; fixes the admissible scale delta >= n^{-1/(2+kappa)}
        kappa: Smoothness exponent (default settings.bernstein_szego.LEMMA_KAPPA)

    Returns:
        ComparisonRecord; a moment mismatch above MOMENT_MISMATCH_WARN sets
        moment_warning instead of raising

    Raises:
        ScaleGuardError: delta below n^{-1/(2+kappa)}
    """
    kappa = settings.bernstein_szego.LEMMA_KAPPA if kappa is None else float(kappa)
    if n < 1:
        raise PreconditionError(f"n must be positive, got {n}")
    delta = I.width
    floor = n ** (-1.0 / (2.0 + kappa))
    if delta < floor:
        raise ScaleGuardError(f"|I| = {delta:.6g} below n^(-1/(2+kappa)) = {floor:.6g}")

    order = min(n, mu.grid_size // 4, nu.grid_size // 4)
    mismatch = float(np.max(np.abs(measure_moments(mu, order) - measure_moments(nu, order))))
    warn = mismatch > settings.numerics.MOMENT_MISMATCH_WARN or order < n
    if warn:
        logger.warning(f"[lemma] moment mismatch {mismatch:.3e} through order {order} (n={n})")

    mu_interval = measure_interval_mass(mu, I)
    nu_tripled = measure_interval_mass(nu, I.tripled())
    delta_kappa = delta ** kappa
    implied = max(0.0, mu_interval - nu_tripled) / delta_kappa
    return ComparisonRecord(
        center=I.center,
        delta=delta,
        mu_interval=mu_interval,
        nu_tripled=nu_tripled,
        delta_kappa=delta_kappa,
        implied_constant=implied,
        moment_mismatch=mismatch,
        moment_warning=warn,
    )


def lemma_sweep(
    alpha: VerblunskySequence,
    n: int,
    kappa: Optional[float] = None,
    deltas: Optional[Sequence[float]] = None,
    centers: Optional[Sequence[float]] = None,
    grid_size: Optional[int] = None,
    resource_manager: Optional[ResourceManager] = None,
) -> LemmaSweep:
    """
    interval_comparison of mu = bs_density(alpha, 2n) against nu = bs_density(alpha, n).

    Both levels share alpha_0..alpha_{n-1}, so their moments agree through
    order n. The per-delta constant is the max implied constant over the
    centers; the stability ratio is max/min of the positive per-delta
    constants (1.0 when none is positive).
    """
    kappa = settings.bernstein_szego.LEMMA_KAPPA if kappa is None else float(kappa)
    if 2 * n > alpha.length:
        raise PreconditionError(f"lemma_sweep needs 2n={2 * n} coefficients, have {alpha.length}")
    floor = n ** (-1.0 / (2.0 + kappa))
    if deltas is None:
        deltas = np.geomspace(floor, 0.5, 12) if floor < 0.5 else [floor]
    if centers is None:
        centers = TWO_PI * np.arange(16) / 16
    grid_size = grid_size or default_grid_size(2 * n)

    rm = resource_manager or get_resource_manager()
    mu = bs_density(alpha, 2 * n, grid_size, resource_manager=rm)
    nu = bs_density(alpha, n, grid_size, resource_manager=rm)

    def compare_delta(delta: float) -> list[ComparisonRecord]:
        return [interval_comparison(mu, nu, IntervalOnCircle(c, 0.5 * delta), n, kappa) for c in centers]

    per_delta = rm.map_ordered(compare_delta, [float(d) for d in deltas])
    constants = [max(r.implied_constant for r in rows) for rows in per_delta]
    positive = [c for c in constants if c > 0.0]
    ratio = max(positive) / min(positive) if positive else 1.0
    records = [r for rows in per_delta for r in rows]

    logger.info(
        f"[lemma] n={n} kappa={kappa}: fitted C={max(constants):.4g}, stability ratio={ratio:.3g}"
    )
    return LemmaSweep(
        n=n,
        kappa=kappa,
        deltas=[float(d) for d in deltas],
        per_delta_constants=constants,
        fitted_constant=max(constants),
        stability_ratio=ratio,
        max_moment_mismatch=max(r.moment_mismatch for r in records),
        records=records,
    )
