"""
Singular-part diagnostics: epsilon-energy, stopped exponential sums, local
scaling, atom detection and the multiscale singular-interval scan.

The scan cannot see the singular continuous part itself. It classifies
tiles of length eps_m = eps0^m with the Bernstein-Szego measure at level
n_m = ceil(eps_m^{-3}) (capped at the stored length) after subtracting
detected atoms; see SCAN_INTERPRETATION in opuc.schemas.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from config.settings import settings
from opuc.bernstein_szego import bs_density
from opuc.errors import (
    InfiniteEnergyError,
    PreconditionError,
    ResolutionGuardError,
    ResourceExhaustedError,
)
from opuc.generators import estimate_log_constant
from opuc.models import (
    TWO_PI,
    CircleMeasure,
    IntervalOnCircle,
    VerblunskySequence,
    circular_distance,
    measure_interval_mass,
    normalize_angle,
)
from opuc.resonance import kmax_check
from opuc.resource_manager import ResourceManager, get_resource_manager
from opuc.schemas import AtomCandidate, ScaleRecord, ScanReport, TileScaling
from opuc.szego import christoffel_sums

logger = logging.getLogger(__name__)

# Dyadic differences of the Christoffel reciprocal must contract at least this fast
_ATOM_CONTRACTION = 0.6
# and at a steady rate: the two contraction ratios differ by at most this
_ATOM_RATIO_SPREAD = 0.15
# Relative agreement of the two Aitken limits
_ATOM_AGREEMENT = 0.1
# Smallest share of the last reciprocal the extrapolated mass may keep
_ATOM_SHARE = 0.25
# Relative last difference below which the reciprocal has converged
_ATOM_CONVERGED = 1e-9
# Candidate peaks considered per scan scale
_MAX_ATOM_CANDIDATES = 64


@dataclass
class SalemZygmundRecord:
    """Squared nu-integral of the stopped sum against energy x weighted l2 norm."""

    lhs: float
    rhs: float
    ratio: float
    energy: float

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio, "energy": self.energy}


@dataclass
class TailEnergyRecord:
    lhs: float
    rhs: float
    ratio: float

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio}


@dataclass
class DetectedAtom:
    angle: float
    mass: float
    reciprocal: float
    # second contraction ratio of the dyadic differences; 0 once converged
    ratio: Optional[float]
    stable: bool

    def to_dict(self) -> dict:
        return {
            "angle": self.angle,
            "mass": self.mass,
            "reciprocal": self.reciprocal,
            "ratio": self.ratio,
            "stable": self.stable,
        }


@dataclass
class PurePointBudget:
    count: int
    budget: int
    A_est: float
    holds: bool

    def to_dict(self) -> dict:
        return {"count": self.count, "budget": self.budget, "A_est": self.A_est, "holds": self.holds}


@dataclass
class Eps0Admissibility:
    """Checks on eps0 from the multiscale argument, for a singular mass delta."""

    eps0: float
    delta: float
    k_max: int
    n0: int
    first_level: int
    level_condition: bool
    tail_condition: bool
    union_bound: float
    union_bound_ok: bool
    max_admissible_eps0: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


# ---------------------------------------------------------------------------
# Energy and exponential sums


def epsilon_energy(m: CircleMeasure, eps: float) -> float:
    """
    E_eps(m) = int int (1 + d(x, y)^{-eps}) dm(x) dm(y), d the circular distance.

    The density is taken piecewise constant per grid cell; each cell pair
    contributes h^{2-eps} J_r with J_r = G(r+1) - 2G(r) + G(r-1),
    G(x) = |x|^{2-eps} / ((1-eps)(2-eps)), the exact cell-pair integral.
    Any atom gives +inf.
    """
    if not 0.0 <= eps < 1.0:
        raise PreconditionError(f"eps must lie in [0, 1), got {eps}")
    if m.has_atoms:
        return float("inf")

    M = m.grid_size
    h = m.step
    r = np.arange(M)
    r = np.minimum(r, M - r).astype(float)

    def G(x):
        return np.abs(x) ** (2.0 - eps) / ((1.0 - eps) * (2.0 - eps))

    J = G(r + 1.0) - 2.0 * G(r) + G(r - 1.0)
    rho = m.density
    conv = np.fft.irfft(np.fft.rfft(rho) * np.fft.rfft(J), n=M)
    singular = h ** (2.0 - eps) * float(np.dot(rho, conv))
    return m.ac_mass ** 2 + singular


def _folded(coefficients: np.ndarray, M: int) -> np.ndarray:
    """Fold coefficients modulo M; exact for exponential sums on the M-point grid."""
    folded = np.zeros(M, dtype=np.complex128)
    np.add.at(folded, np.arange(coefficients.size) % M, coefficients)
    return folded


def _stopped_sums(coefficients: np.ndarray, stops: np.ndarray, M: int, sign: int) -> np.ndarray:
    """
    sum_{n=0}^{stops[k]} c_n e^{sign i n eta_k} at every grid angle eta_k = 2 pi k / M.
    """
    values = np.zeros(M, dtype=np.complex128)
    for stop in np.unique(stops):
        head = coefficients[: int(stop) + 1]
        folded = _folded(head, M)
        sums = np.fft.fft(folded) if sign < 0 else M * np.fft.ifft(folded)
        mask = stops == stop
        values[mask] = sums[mask]
    return values


def _stop_array(m_fn: Union[int, np.ndarray, Callable], grid: np.ndarray) -> np.ndarray:
    if callable(m_fn):
        stops = np.asarray(m_fn(grid))
    else:
        stops = np.broadcast_to(np.asarray(m_fn), grid.shape)
    stops = np.asarray(stops, dtype=np.int64)
    if stops.shape != grid.shape:
        raise PreconditionError(f"stopping times have shape {stops.shape}, grid has {grid.shape}")
    if np.any(stops < 0):
        raise PreconditionError("stopping times must be nonnegative")
    return stops


def dyadic_stopping_times(alpha: VerblunskySequence, nu: CircleMeasure, N: int) -> np.ndarray:
    """
    m(eta) in {1, 2, 4, ..., <= N} maximising |sum_{n=0}^{m} alpha_n e^{-in eta}| on nu's grid.
    Ties go to the smallest stop.
    """
    if N < 1:
        raise PreconditionError(f"N must be positive, got {N}")
    M = nu.grid_size
    coefficients = alpha.padded(N + 1)
    best_value = np.full(M, -1.0)
    best_stop = np.ones(M, dtype=np.int64)
    stop = 1
    while stop <= N:
        sums = np.abs(_stopped_sums(coefficients, np.full(M, stop), M, sign=-1))
        better = sums > best_value
        best_value[better] = sums[better]
        best_stop[better] = stop
        stop *= 2
    return best_stop


def salem_zygmund_test(
    alpha: VerblunskySequence,
    nu: CircleMeasure,
    eps: float,
    m_fn: Union[int, np.ndarray, Callable],
) -> SalemZygmundRecord:
    """
    lhs = (int |sum_{n=0}^{m(eta)} alpha_n e^{-in eta}| d nu)^2,
    rhs = E_eps(nu) sum_{n <= max m} (n+1)^{1-eps} |alpha_n|^2.

    Args:
        m_fn: Stopping time, as a constant, an array on nu's grid or a
            callable of the grid angles

    Raises:
        InfiniteEnergyError: nu has atoms
    """
    energy = epsilon_energy(nu, eps)
    if not np.isfinite(energy):
        raise InfiniteEnergyError("nu has atoms; its eps-energy is infinite")
    grid = nu.grid
    stops = _stop_array(m_fn, grid)
    top = int(np.max(stops)) if stops.size else 0
    coefficients = alpha.padded(top + 1)

    sums = _stopped_sums(coefficients, stops, nu.grid_size, sign=-1)
    integral = nu.step * float(np.dot(np.abs(sums), nu.density))
    lhs = integral ** 2
    weights = (np.arange(top + 1) + 1.0) ** (1.0 - eps)
    rhs = energy * float(np.sum(weights * np.abs(coefficients) ** 2))
    ratio = lhs / rhs if rhs > 0.0 else 0.0
    return SalemZygmundRecord(lhs, rhs, ratio, energy)


def tail_energy_test(
    alpha: VerblunskySequence,
    nu: CircleMeasure,
    eps: float,
    N: Optional[int] = None,
) -> TailEnergyRecord:
    """
    int m(eta)^{eps/4} |hat-alpha(eta, m(eta))| d nu against sqrt(E_eps(nu)),
    with m the dyadic stopping times up to N (default: stored length) and
    hat-alpha(eta, m) = sum_{m <= j < length} alpha_j e^{ij eta}.
    """
    energy = epsilon_energy(nu, eps)
    if not np.isfinite(energy):
        raise InfiniteEnergyError("nu has atoms; its eps-energy is infinite")
    N = N or max(alpha.length, 1)
    stops = dyadic_stopping_times(alpha, nu, N)
    M = nu.grid_size
    coefficients = alpha.values
    total = M * np.fft.ifft(_folded(coefficients, M)) if coefficients.size else np.zeros(M)
    heads = _stopped_sums(alpha.padded(N + 1), stops - 1, M, sign=+1)
    # stop - 1 >= 0; the head sum_{j<m} is subtracted from the full sum
    tails = total - heads
    integrand = stops.astype(float) ** (eps / 4.0) * np.abs(tails)
    lhs = nu.step * float(np.dot(integrand, nu.density))
    rhs = float(np.sqrt(energy))
    return TailEnergyRecord(lhs, rhs, lhs / rhs if rhs > 0.0 else 0.0)


# ---------------------------------------------------------------------------
# Local structure


def local_scaling_exponent(m: CircleMeasure, k: float, deltas: Sequence[float]) -> np.ndarray:
    """mu(k - delta, k + delta) / (2 delta)^{1/2} for each delta."""
    deltas = np.asarray(deltas, dtype=float)
    if deltas.size == 0 or np.any(deltas <= 0.0) or np.any(deltas > np.pi):
        raise PreconditionError("deltas must lie in (0, pi]")
    if np.any(np.diff(deltas) >= 0.0):
        raise PreconditionError("deltas must be strictly decreasing")
    masses = np.array([measure_interval_mass(m, IntervalOnCircle(k, d)) for d in deltas])
    return masses / np.sqrt(2.0 * deltas)


def _aitken(x0: float, x1: float, x2: float) -> float:
    denominator = (x2 - x1) - (x1 - x0)
    if abs(denominator) < 1e-300:
        return x2
    return x2 - (x2 - x1) ** 2 / denominator


def _classify_reciprocal(x: np.ndarray, threshold: float) -> tuple[float, Optional[float], bool]:
    """
    Extrapolated mass, contraction ratio and stability of the reciprocal read
    at four dyadic levels x[0..3].
    """
    if not np.all(np.isfinite(x)):
        return 0.0, None, False
    d = -np.diff(x)
    if abs(d[2]) <= _ATOM_CONVERGED * x[3]:
        return float(x[3]), 0.0, bool(x[3] >= threshold)
    if d[0] <= 0.0 or d[1] <= 0.0:
        return 0.0, None, False
    q1, q2 = d[1] / d[0], d[2] / d[1]
    contracting = 0.0 < q1 <= _ATOM_CONTRACTION and 0.0 < q2 <= _ATOM_CONTRACTION
    steady = abs(q1 - q2) <= _ATOM_RATIO_SPREAD
    early = max(_aitken(x[0], x[1], x[2]), 0.0)
    late = min(max(_aitken(x[1], x[2], x[3]), 0.0), float(x[3]))
    agree = abs(early - late) <= _ATOM_AGREEMENT * max(early, late)
    stable = contracting and steady and agree and late >= threshold and late >= _ATOM_SHARE * x[3]
    return late, float(q2), bool(stable)


def detect_atoms(
    alpha: VerblunskySequence,
    n: int,
    candidates: Sequence[float],
    threshold: Optional[float] = None,
) -> list[DetectedAtom]:
    """
    Christoffel-function atom detection at each candidate angle.

    The reciprocal m(eta, k) = 1 / sum_{j<k} |phi_j(e^{i eta})|^2 decreases to
    the point mass at eta. It is read at k = n/8, n/4, n/2, n. An atom leaves
    m = w + O(1/k), so successive differences contract by about 1/2; a
    power law m ~ k^{-p} with small p contracts by 2^{-p}, close to 1. A
    candidate keeps its mass when both contraction ratios are at most
    _ATOM_CONTRACTION and agree, the Aitken limits over the first and last
    three levels agree, and the limit is at least threshold and a quarter of
    m(eta, n). Candidates closer than 2 pi / n to a heavier accepted one are
    dropped, as is any mass that would push the total past 1. One entry per
    candidate, in input order.
    """
    if n < 8:
        raise PreconditionError(f"detect_atoms needs n >= 8, got {n}")
    threshold = settings.scan.ATOM_THRESHOLD if threshold is None else threshold
    candidates = [normalize_angle(float(c)) for c in candidates]
    if not candidates:
        return []

    sums = christoffel_sums(alpha, np.array(candidates), n)
    reciprocal = 1.0 / sums[[n // 8 - 1, n // 4 - 1, n // 2 - 1, n - 1]]

    proposals = []
    for index, angle in enumerate(candidates):
        mass, ratio, stable = _classify_reciprocal(reciprocal[:, index], threshold)
        proposals.append(DetectedAtom(angle, mass if stable else 0.0, float(reciprocal[3, index]), ratio, stable))

    order = sorted(range(len(proposals)), key=lambda i: (-proposals[i].mass, i))
    accepted: list[int] = []
    total = 0.0
    for i in order:
        atom = proposals[i]
        if atom.mass <= 0.0:
            continue
        near = any(circular_distance(atom.angle, proposals[j].angle) < TWO_PI / n for j in accepted)
        if near or total + atom.mass > 1.0 + 1e-12:
            proposals[i] = DetectedAtom(atom.angle, 0.0, atom.reciprocal, atom.ratio, False)
            continue
        accepted.append(i)
        total += atom.mass
    return proposals


def atom_candidates(measure: CircleMeasure, level: int, limit: int = _MAX_ATOM_CANDIDATES) -> list[float]:
    """
    Circular local maxima of the density whose 1/level-wide cell mass reaches
    ATOM_THRESHOLD, largest first.
    """
    rho = measure.density
    peaks = np.flatnonzero((rho >= np.roll(rho, 1)) & (rho > np.roll(rho, -1)))
    cell_mass = rho[peaks] * TWO_PI / max(level, 1)
    peaks = peaks[cell_mass >= settings.scan.ATOM_THRESHOLD]
    peaks = peaks[np.argsort(-rho[peaks], kind="stable")][:limit]
    return [float(a) for a in measure.grid[peaks]]


def pure_point_budget(alpha: VerblunskySequence, atoms: Sequence) -> PurePointBudget:
    """Detected atoms against floor(4 A_est)."""
    masses = [a.mass if isinstance(a, DetectedAtom) else float(a[1]) for a in atoms]
    count = sum(1 for mass in masses if mass > 0.0)
    A_est, _ = estimate_log_constant(alpha)
    budget = int(np.floor(4.0 * A_est))
    return PurePointBudget(count, budget, A_est, count <= budget)


def eps0_admissibility(delta: float, k_max: int, eps0: float, n0: Optional[int] = None) -> Eps0Admissibility:
    """
    Conditions on eps0 for a singular mass delta and resonance bound k_max:

        level:  ceil(eps0^{-3}) > n0
        tail:   sqrt(eps0) / (1 - sqrt(eps0)) <= delta / (32 k_max^3)

    and the resulting bound delta/4 + 8 k_max^3 sqrt(eps0)/(1 - sqrt(eps0))
    on the singular mass of the union of singular tiles over all scales.
    """
    if not 0.0 < eps0 < 1.0:
        raise PreconditionError(f"eps0 must lie in (0, 1), got {eps0}")
    if k_max < 1 or delta <= 0.0:
        raise PreconditionError("k_max must be >= 1 and delta positive")
    n0 = settings.scan.SCAN_N0 if n0 is None else n0
    first_level = int(np.ceil(eps0 ** -3))
    root = np.sqrt(eps0)
    geometric = root / (1.0 - root)
    target = delta / (32.0 * k_max ** 3)
    union = delta / 4.0 + 8.0 * k_max ** 3 * geometric
    largest = (target / (1.0 + target)) ** 2
    return Eps0Admissibility(
        eps0=eps0,
        delta=delta,
        k_max=k_max,
        n0=n0,
        first_level=first_level,
        level_condition=first_level > n0,
        tail_condition=geometric <= target,
        union_bound=float(union),
        union_bound_ok=bool(union <= delta / 2.0),
        max_admissible_eps0=float(largest),
    )


# ---------------------------------------------------------------------------
# Multiscale scan


def _arc_masses(measure: CircleMeasure, lefts: np.ndarray, widths: np.ndarray) -> np.ndarray:
    """Absolutely continuous mass of [left, left + width) for many arcs, width < 2 pi."""
    a = np.mod(lefts, TWO_PI)
    b = a + widths
    wrapped = b > TWO_PI
    upper = measure.cumulative(np.where(wrapped, TWO_PI, b))
    masses = upper - measure.cumulative(a)
    masses = masses + np.where(wrapped, measure.cumulative(np.where(wrapped, b - TWO_PI, 0.0)), 0.0)
    return np.maximum(masses, 0.0)


def _cover_count(centers: np.ndarray, length: float) -> int:
    """Fewest arcs of the given length covering all points (greedy from the widest gap)."""
    if centers.size == 0:
        return 0
    if length >= TWO_PI:
        return 1
    points = np.sort(np.mod(centers, TWO_PI))
    gaps = np.diff(np.concatenate((points, [points[0] + TWO_PI])))
    start = (int(np.argmax(gaps)) + 1) % points.size
    unrolled = np.concatenate((points[start:], points[:start] + TWO_PI))
    count = 0
    reach = -np.inf
    for p in unrolled:
        if p > reach:
            count += 1
            reach = p + length
    return count


def _separated(centers: np.ndarray, weights: np.ndarray, distance: float) -> list[float]:
    """Greedy family with pairwise center distance > distance, heaviest first."""
    chosen: list[float] = []
    for index in np.argsort(-weights, kind="stable"):
        c = float(centers[index])
        if all(circular_distance(c, other) > distance for other in chosen):
            chosen.append(c)
    return chosen


def _scan_grid(level: int, tiles: int) -> int:
    return max(
        settings.bernstein_szego.BS_RESOLUTION_FACTOR * level,
        settings.scan.SCAN_TILE_OVERSAMPLE * tiles,
        settings.bernstein_szego.BS_MIN_GRID,
    )


def _require_grid(rm: ResourceManager, grid: int, label: str) -> None:
    if grid > settings.scan.SCAN_MAX_GRID:
        raise ResourceExhaustedError(f"{label}: grid {grid} exceeds SCAN_MAX_GRID={settings.scan.SCAN_MAX_GRID}")
    # density, FFT workspace and cumulative sums
    rm.require(grid * 16 * 6, label=label)


def singular_interval_scan(
    alpha: VerblunskySequence,
    eps0: float,
    m_max: int,
    k_max: Optional[int] = None,
    resource_manager: Optional[ResourceManager] = None,
) -> ScanReport:
    """
    Multiscale scan for singular tiles.

    For each scale m = 1..m_max: tiles of length eps_m cover the circle; a
    tile is singular when its proxy mass (Bernstein-Szego at the effective
    level minus detected atoms) exceeds eps_m^{1/2}. The report holds the
    singular tiles, a maximal family with centers more than
    3 eps_m^{1/K^2} apart, the number of arcs of length eps_m^{1/K^2}
    covering them (budget 8K) and the bridge
    mu_level(3J) >= mu_ref(J) - LEMMA_CONSTANT eps_m with mu_ref at
    twice the level.

    Running out of grid budget (including a Bernstein-Szego density that needs
    a grid past SCAN_MAX_GRID to hold its mass) stops the scan and is reported
    with the last completed scale; it is not raised.
    """
    if not 0.0 < eps0 < 1.0:
        raise PreconditionError(f"eps0 must lie in (0, 1), got {eps0}")
    if m_max < 1:
        raise PreconditionError(f"m_max must be positive, got {m_max}")
    if alpha.length < 10:
        raise PreconditionError(f"scan needs at least 10 coefficients, got {alpha.length}")
    rm = resource_manager or get_resource_manager()
    n0 = settings.scan.SCAN_N0

    A_est, _ = estimate_log_constant(alpha)
    check = None
    if k_max is None:
        check_level = max(10, min(alpha.length, int(np.ceil(eps0 ** -3))))
        check = kmax_check(alpha, check_level, resource_manager=rm)
        k_max = max(1, check.K_found, int(np.ceil(max(check.C_fit, check.bound_392A))))
        source = "kmax_check"
    else:
        source = "config"
    logger.info(f"[scan] eps0={eps0} m_max={m_max} K_max={k_max} ({source}) A_est={A_est:.4g}")

    report = ScanReport(
        eps0=eps0, m_max=m_max, K_max=k_max, K_max_source=source, n0=n0, length=alpha.length, A_est=A_est
    )
    if check is not None:
        report.bound_392A = check.bound_392A
        report.C_fit = check.C_fit
        report.resonance_level = check.n
        report.resonant_angles = [a.to_dict() for a in check.angles]
        report.separation_ok = check.separation_ok
    for m in range(1, m_max + 1):
        eps_m = eps0 ** m
        n_m = int(np.ceil(eps_m ** -3))
        level = min(n_m, alpha.length)
        tiles = int(np.ceil(TWO_PI / eps_m))
        grid = _scan_grid(level, tiles)
        try:
            _require_grid(rm, grid, f"scan m={m}")
            record = _scan_scale(alpha, m, eps_m, n_m, level, tiles, grid, k_max, n0, rm)
        except (ResourceExhaustedError, ResolutionGuardError) as e:
            report.budget_exhausted = True
            report.exhaustion_reason = str(e)
            logger.warning(f"[scan] stopped at m={m}: {e}")
            break
        report.scales.append(record)
        report.last_completed_scale = m
    return report


def _tile_scaling(measure: CircleMeasure, center: float, eps_m: float) -> TileScaling:
    deltas = eps_m * np.array([0.5, 0.25, 0.125])
    ratios = local_scaling_exponent(measure, center, deltas)
    masses = ratios * np.sqrt(2.0 * deltas)
    exponent = None
    if np.all(masses > 0.0):
        exponent = float(np.polyfit(np.log(deltas), np.log(masses), 1)[0])
    return TileScaling(center=center, deltas=deltas.tolist(), ratios=ratios.tolist(), exponent=exponent)


def _scan_scale(
    alpha: VerblunskySequence,
    m: int,
    eps_m: float,
    n_m: int,
    level: int,
    tiles: int,
    grid: int,
    k_max: int,
    n0: int,
    rm: ResourceManager,
) -> ScaleRecord:
    max_grid = settings.scan.SCAN_MAX_GRID
    measure = bs_density(alpha, level, grid, max_grid=max_grid, resource_manager=rm)

    checked: list[DetectedAtom] = []
    if level >= 8:
        checked = detect_atoms(alpha, level, atom_candidates(measure, level))
    atoms = [(a.angle, a.mass) for a in checked if a.mass > 0.0]

    lefts = eps_m * np.arange(tiles)
    widths = np.minimum(eps_m, TWO_PI - lefts)
    centers = lefts + 0.5 * widths
    proxy = _arc_masses(measure, lefts, widths)
    for angle, mass in atoms:
        inside = (angle >= lefts) & (angle < lefts + widths)
        proxy = proxy - mass * inside
    proxy = np.maximum(proxy, 0.0)

    singular = np.flatnonzero(proxy > np.sqrt(eps_m))
    exponent = 1.0 / (k_max * k_max)
    scale_length = eps_m ** exponent
    separated = _separated(centers[singular], proxy[singular], 3.0 * scale_length)
    cover = _cover_count(centers[singular], scale_length)

    margin = None
    bridge_ok = True
    if singular.size:
        ref_level = min(2 * n_m, alpha.length)
        ref_grid = max(measure.grid_size, settings.bernstein_szego.BS_RESOLUTION_FACTOR * ref_level)
        _require_grid(rm, ref_grid, f"scan m={m} reference")
        reference = bs_density(alpha, ref_level, ref_grid, max_grid=max_grid, resource_manager=rm)
        tripled = np.minimum(3.0 * widths[singular], TWO_PI * (1.0 - 1e-12))
        lhs = _arc_masses(measure, centers[singular] - 0.5 * tripled, tripled)
        rhs = _arc_masses(reference, lefts[singular], widths[singular]) - settings.scan.LEMMA_CONSTANT * eps_m
        margin = float(np.min(lhs - rhs))
        bridge_ok = margin >= -settings.numerics.QUADRATURE_TOL

    budget = 8 * k_max
    record = ScaleRecord(
        m=m,
        eps_m=eps_m,
        n_m=n_m,
        level=level,
        level_capped=n_m > alpha.length,
        below_n0=n_m < n0,
        grid_size=measure.grid_size,
        tile_count=tiles,
        singular_count=int(singular.size),
        singular_centers=[float(c) for c in centers[singular]],
        separated_count=len(separated),
        separated_centers=separated,
        separated_ok=len(separated) <= k_max,
        cover_count=cover,
        cover_budget=budget,
        cover_ok=cover <= budget,
        bridge_min_margin=margin,
        bridge_ok=bridge_ok,
        detected_atoms=atoms,
        atom_candidates=[AtomCandidate(**a.to_dict()) for a in checked],
        scaling_exponents=[_tile_scaling(measure, float(c), eps_m) for c in centers[singular]],
    )
    logger.info(
        f"[scan] m={m} level={level} grid={measure.grid_size} tiles={tiles}: singular={record.singular_count} "
        f"separated={record.separated_count} cover={cover}/{budget}"
    )
    return record
