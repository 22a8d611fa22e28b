"""
Resonant angles of the Pruefer accumulator and the counting machinery.

Vectors live in the weighted space H_n with

    <f, g> = sum_{j<n} conj(f_j) g_j (1+j).

For an angle eta_l with beta = 0 phases theta_j, the unit vector

    e_l(j) = E_n^{-1/2} e^{-i gamma_j(eta_l)} / (1+j),   E_n = sum_{j<n} 1/(1+j)

pairs with g = (alpha_0..alpha_{n-1}) as <e_l, g> = E_n^{-1/2} A(n, eta_l).
Angles where |A(n, eta)| >= (log n)/14 are resonant; a separated family of
them is almost orthogonal, which bounds how many there can be.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import linregress

from config.settings import settings
from opuc.errors import InvariantViolationError, PreconditionError
from opuc.generators import estimate_log_constant
from opuc.models import TWO_PI, PrueferTrajectory, VerblunskySequence, circular_distance, normalize_angle
from opuc.pruefer import pruefer_evolve, pruefer_evolve_grid, pruefer_phase_history
from opuc.resource_manager import ResourceManager, get_resource_manager

logger = logging.getLogger(__name__)

# kmax_check fits the oscillatory-sum bound from at most this many found angles
_MAX_FIT_ANGLES = 4
# default_xi_grid needs 10 / n below its upper end 0.9
_MIN_FIT_LEVEL = 12


@dataclass(frozen=True)
class WeightedVector:
    """Element of H_n; the weight of entry j is 1+j."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", np.asarray(self.entries, dtype=np.complex128).reshape(-1))

    @property
    def length(self) -> int:
        return int(self.entries.size)

    @property
    def weights(self) -> np.ndarray:
        return np.arange(1, self.length + 1, dtype=float)

    def inner(self, other: "WeightedVector") -> complex:
        """<self, other>, conjugate-linear in self."""
        if other.length != self.length:
            raise PreconditionError(f"length mismatch: {self.length} vs {other.length}")
        return complex(np.sum(np.conj(self.entries) * other.entries * self.weights))

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.entries) ** 2 * self.weights))

    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq()))


@dataclass
class OrthogonalityRecord:
    """Almost-orthogonality check sum_l |<g, e_l>|^2 <= (1+Q) ||g||^2."""

    Q: float
    lhs: float
    rhs: float
    checked: bool

    def to_dict(self) -> dict:
        return {"Q": self.Q, "lhs": self.lhs, "rhs": self.rhs, "checked": self.checked}


@dataclass
class AbelBound:
    """Sup of the weighted oscillatory sum and the affine fit in log(1/xi)."""

    xi: float
    sup_partial: float
    fitted_C1: float
    fitted_C2: float
    abel_residual: float
    r_squared: float = 1.0
    xi_grid: list[float] = field(default_factory=list)
    sup_grid: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "xi": self.xi,
            "sup_partial": self.sup_partial,
            "C1": self.fitted_C1,
            "C2": self.fitted_C2,
            "abel_residual": self.abel_residual,
            "r_squared": self.r_squared,
        }


@dataclass
class ResonantAngle:
    eta: float
    magnitude: float

    def to_dict(self) -> dict:
        return {"eta": self.eta, "abs_A": self.magnitude}


@dataclass
class KmaxReport:
    """Counting check of resonant angles against the almost-orthogonality bound."""

    n: int
    K_found: int
    A_est: float
    bound_392A: float
    C_fit: float
    within_bound: bool
    E_n: float
    E_n_minus_log_n: float
    chain_bound: float
    C1: float = 0.0
    C2: float = 0.0
    fit_r_squared: Optional[float] = None
    # n^{-1/(3K^2)} and whether the found angles respect it
    separation: float = 0.0
    separation_ok: bool = True
    angles: list[ResonantAngle] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "K_found": self.K_found,
            "A_est": self.A_est,
            "bound_392A": self.bound_392A,
            "C_fit": self.C_fit,
            "within_bound": self.within_bound,
            "E_n": self.E_n,
            "E_n_minus_log_n": self.E_n_minus_log_n,
            "chain_bound": self.chain_bound,
            "C1": self.C1,
            "C2": self.C2,
            "fit_r_squared": self.fit_r_squared,
            "separation": self.separation,
            "separation_ok": self.separation_ok,
            "angles": [a.to_dict() for a in self.angles],
        }


def harmonic_number(n: int) -> float:
    """E_n = sum_{j<n} 1/(1+j)."""
    return float(np.sum(1.0 / np.arange(1, n + 1))) if n > 0 else 0.0


def resonance_vector(traj: PrueferTrajectory, n: int) -> WeightedVector:
    """Unit vector e_l of H_n built from a beta = 0 trajectory of length >= n."""
    if traj.length < n:
        raise PreconditionError(f"trajectory has {traj.length} steps, need {n}")
    j = np.arange(n)
    gamma = (j + 1) * traj.eta + traj.beta + 2.0 * traj.phases[:n]
    return WeightedVector(np.exp(-1j * gamma) / ((j + 1) * np.sqrt(harmonic_number(n))))


def resonance_vectors(alpha: VerblunskySequence, etas: Sequence[float], n: int) -> list[WeightedVector]:
    """e_l for every angle in etas (beta = 0)."""
    return [resonance_vector(pruefer_evolve(alpha, eta, 0.0, n), n) for eta in etas]


def almost_orthogonality_bound(vectors: Sequence[WeightedVector], g: WeightedVector) -> OrthogonalityRecord:
    """
    Q = K max_{k != l} |<e_k, e_l>|, lhs = sum_l |<g, e_l>|^2, rhs = (1+Q) ||g||^2.

    The inequality holds for any unit family; a violation while Q < 1 means a
    broken inner product and raises. Q >= 1 is reported with checked=False.
    """
    tol = settings.numerics.UNIT_NORM_TOL
    for index, e in enumerate(vectors):
        if abs(e.norm() - 1.0) > tol:
            raise PreconditionError(f"vector {index} has norm {e.norm():.12f}, expected 1")
        if e.length != g.length:
            raise PreconditionError(f"vector {index} has length {e.length}, g has {g.length}")
    K = len(vectors)
    if K == 0:
        return OrthogonalityRecord(0.0, 0.0, g.norm_sq(), True)

    matrix = np.stack([e.entries for e in vectors])
    weights = g.weights
    gram = np.conj(matrix) @ (matrix * weights).T
    off_diagonal = np.abs(gram - np.diag(np.diag(gram)))
    Q = float(K * np.max(off_diagonal)) if K > 1 else 0.0

    pairings = np.conj(matrix) @ (g.entries * weights)
    lhs = float(np.sum(np.abs(pairings) ** 2))
    rhs = (1.0 + Q) * g.norm_sq()
    checked = Q < 1.0
    if checked and lhs > rhs * (1.0 + 1e-12) + 1e-300:
        raise InvariantViolationError(f"almost-orthogonality violated: {lhs:.17g} > {rhs:.17g} with Q={Q:.6g}")
    return OrthogonalityRecord(Q, lhs, rhs, checked)


def abel_summation(a: np.ndarray, b: np.ndarray, m: int, n: int) -> complex:
    """
    Summation by parts:

        sum_{j=m}^{n} (a(j+1) - a(j)) b(j)
            = a(n+1) b(n) - a(m) b(m-1) - sum_{j=m}^{n} a(j) (b(j) - b(j-1))

    Returns the right-hand side. a must be indexable at m..n+1, b at m-1..n.
    """
    if not 1 <= m <= n:
        raise PreconditionError(f"need 1 <= m <= n, got m={m}, n={n}")
    a = np.asarray(a)
    b = np.asarray(b)
    j = np.arange(m, n + 1)
    return complex(a[n + 1] * b[n] - a[m] * b[m - 1] - np.sum(a[j] * (b[j] - b[j - 1])))


def phase_difference_sequence(traj_l: PrueferTrajectory, traj_k: PrueferTrajectory) -> np.ndarray:
    """g(j) = 2 theta_{j-1}(eta_l) - 2 theta_{j-1}(eta_k) for j = 1..n; entry j-1 holds g(j)."""
    if traj_l.length != traj_k.length:
        raise PreconditionError("trajectories must have equal length")
    return 2.0 * (traj_l.phases[:-1] - traj_k.phases[:-1])


def _partial_sums(xi: float, g: np.ndarray) -> np.ndarray:
    j = np.arange(1, g.size + 1)
    return np.cumsum(np.exp(1j * (j * xi + g)) / j)


def default_xi_grid(n_max: int) -> list[float]:
    """9 log-spaced frequencies in [max(10/n_max, 1e-3), 0.9]."""
    return [float(x) for x in np.geomspace(max(10.0 / n_max, 1e-3), 0.9, 9)]


def phase_difference_function(
    alpha: VerblunskySequence,
    eta_k: float,
    n: int,
    xis: Sequence[float] = (),
) -> Callable[[float], np.ndarray]:
    """
    xi' -> g with g(j) = 2 theta_{j-1}(eta_k + xi') - 2 theta_{j-1}(eta_k), j = 1..n.

    The phases of eta_k and of every eta_k + xi' in xis come from one
    vectorised Pruefer pass; other xi' run their own trajectory.
    """
    xis = [float(x) for x in xis]
    phases = pruefer_phase_history(alpha, [eta_k] + [eta_k + x for x in xis], n)
    base = phases[:-1, 0]
    table = {x: 2.0 * (phases[:-1, i + 1] - base) for i, x in enumerate(xis)}

    def g_of_xi(xi: float) -> np.ndarray:
        xi = float(xi)
        if xi not in table:
            table[xi] = 2.0 * (pruefer_evolve(alpha, eta_k + xi, 0.0, n).phases[:-1] - base)
        return table[xi]

    return g_of_xi


def abel_log_bound(
    xi: float,
    g_seq,
    n_max: int,
    xi_grid: Optional[Sequence[float]] = None,
    g_of_xi: Optional[Callable[[float], np.ndarray]] = None,
) -> AbelBound:
    """
    sup_{N <= n_max} |sum_{j=1}^{N} j^{-1} e^{i(j xi + g(j))}| and the fit
    sup ~ C1 log(1/xi') + C2 over a log-spaced grid of xi'.

    Args:
        xi: Frequency in (0, 2pi)
        g_seq: g(1..n_max) at xi as a sequence (entry j-1 holds g(j)); g(0) = 0
        n_max: Summation length
        xi_grid: Frequencies for the fit (default: default_xi_grid(n_max))
        g_of_xi: g as a function of the frequency, e.g. a Pruefer phase
            difference from phase_difference_function; without it every
            xi' of the grid reuses g_seq

    Returns:
        AbelBound; abel_residual compares the direct sum at n_max with the
        summation-by-parts form, r_squared is the coefficient of
        determination of the fit
    """
    if not 0.0 < xi < TWO_PI:
        raise PreconditionError(f"xi must lie in (0, 2pi), got {xi}")
    g = np.asarray(g_seq, dtype=float).reshape(-1)
    if g.size < n_max:
        raise PreconditionError(f"g_seq has {g.size} entries, need n_max={n_max}")
    g = g[:n_max]

    partial = _partial_sums(xi, g)
    sup_partial = float(np.max(np.abs(partial)))

    # a(j) = -sum_{k=j}^{n_max} k^{-1} e^{ik xi}, a(n_max+1) = 0; b(j) = e^{i g(j)}
    k = np.arange(1, n_max + 1)
    terms = np.exp(1j * k * xi) / k
    a = np.zeros(n_max + 2, dtype=np.complex128)
    a[1:n_max + 1] = -np.cumsum(terms[::-1])[::-1]
    b = np.exp(1j * np.concatenate(([0.0], g)))
    residual = abs(abel_summation(a, b, 1, n_max) - partial[-1])

    xi_grid = default_xi_grid(n_max) if xi_grid is None else [float(x) for x in xi_grid]
    sups = []
    for x in xi_grid:
        g_x = g if g_of_xi is None else np.asarray(g_of_xi(x), dtype=float).reshape(-1)[:n_max]
        sups.append(float(np.max(np.abs(_partial_sums(x, g_x)))))
    r_squared = 1.0
    if len(xi_grid) >= 2:
        fit = linregress(np.log(1.0 / np.array(xi_grid)), np.array(sups))
        C1, C2 = float(fit.slope), float(fit.intercept)
        r_squared = float(fit.rvalue ** 2)
    else:
        C1, C2 = 0.0, sups[0] if sups else 0.0

    return AbelBound(xi, sup_partial, C1, C2, float(residual), r_squared, xi_grid, sups)


def _abs_accumulator(alpha: VerblunskySequence, n: int, eta: float) -> float:
    state = pruefer_evolve_grid(alpha, [eta], 0.0, n, ResourceManager(max_workers=1))
    return float(np.abs(state.accumulator[0]))


def resonant_angles(
    alpha: VerblunskySequence,
    n: int,
    eta_grid_size: Optional[int] = None,
    resource_manager: Optional[ResourceManager] = None,
) -> list[ResonantAngle]:
    """
    Separated angles with |A(n, eta)| >= (log n) / RESONANCE_DIVISOR.

    Local maxima of |A(n, .)| on a uniform grid are refined by golden-section
    search, then thinned greedily (largest |A| first) so that the K-th
    accepted angle lies at distance >= n^{-1/(SEPARATION_POWER K^2)} from
    all earlier ones.
    """
    if n < 3:
        raise PreconditionError(f"resonant_angles needs n >= 3, got {n}")
    size = eta_grid_size or settings.resonance.RESONANCE_GRID_SIZE
    if size < 3:
        raise PreconditionError(f"eta_grid_size must be at least 3, got {size}")
    threshold = np.log(n) / settings.resonance.RESONANCE_DIVISOR

    grid = TWO_PI * np.arange(size) / size
    state = pruefer_evolve_grid(alpha, grid, 0.0, n, resource_manager or get_resource_manager())
    magnitude = np.abs(state.accumulator)
    peaks = np.flatnonzero(
        (magnitude >= threshold)
        & (magnitude >= np.roll(magnitude, 1))
        & (magnitude >= np.roll(magnitude, -1))
    )

    step = TWO_PI / size
    candidates: list[ResonantAngle] = []
    for index in peaks:
        eta0 = float(grid[index])
        best = ResonantAngle(eta0, float(magnitude[index]))
        try:
            result = minimize_scalar(
                lambda x: -_abs_accumulator(alpha, n, x),
                bracket=(eta0 - step, eta0, eta0 + step),
                method="golden",
                tol=1e-6,
                options={"maxiter": 60},
            )
            if -result.fun > best.magnitude:
                best = ResonantAngle(normalize_angle(float(result.x)), float(-result.fun))
        except ValueError:
            # plateau: the grid point is kept
            pass
        candidates.append(best)

    candidates.sort(key=lambda r: (-r.magnitude, r.eta))
    accepted: list[ResonantAngle] = []
    power = settings.resonance.SEPARATION_POWER
    for candidate in candidates:
        K = len(accepted) + 1
        separation = n ** (-1.0 / (power * K * K))
        if all(circular_distance(candidate.eta, a.eta) >= separation for a in accepted):
            accepted.append(candidate)

    logger.debug(f"[resonance] n={n}: {len(peaks)} peaks above {threshold:.4f}, {len(accepted)} kept")
    return accepted


def kmax_check(
    alpha: VerblunskySequence,
    n: int,
    eta_grid_size: Optional[int] = None,
    resource_manager: Optional[ResourceManager] = None,
) -> KmaxReport:
    """
    Count resonant angles at level n and compare with the counting bounds.

    C1, C2 are fitted by abel_log_bound with g the Pruefer phase difference
    of eta_k + xi' and eta_k, eta_k running over the found angles (0 when
    none is found); the largest C1 is kept. Separation xi >= n^{-1/(3K^2)}
    turns the fit into K^2 |<e_k, e_l>| <= C1 log n / (3 E_n) + K^2 C2 / E_n,
    whose K-free first term is C_fit. The chain bound is
    RESONANCE_CHAIN_FACTOR A_est E_n / log n.
    """
    angles = resonant_angles(alpha, n, eta_grid_size, resource_manager) if n >= 3 else []
    K = len(angles)

    sample = alpha.truncated(n) if alpha.length > n else alpha
    A_est, _ = estimate_log_constant(sample)
    factor = settings.resonance.RESONANCE_CHAIN_FACTOR
    bound = factor * A_est

    E_n = harmonic_number(n)
    log_n = float(np.log(n)) if n > 1 else 0.0
    power = settings.resonance.SEPARATION_POWER

    C1 = C2 = 0.0
    r_squared = None
    if n >= _MIN_FIT_LEVEL:
        xi_grid = default_xi_grid(n)
        best = None
        for eta_k in [a.eta for a in angles[:_MAX_FIT_ANGLES]] or [0.0]:
            g_of_xi = phase_difference_function(alpha, eta_k, n, xi_grid)
            fit = abel_log_bound(xi_grid[0], g_of_xi(xi_grid[0]), n, xi_grid, g_of_xi)
            if best is None or fit.fitted_C1 > best.fitted_C1:
                best = fit
        C1, C2, r_squared = best.fitted_C1, best.fitted_C2, best.r_squared
    C_fit = max(C1, 0.0) * log_n / (power * E_n) if E_n > 0 else 0.0

    separation = n ** (-1.0 / (power * K * K)) if K else 0.0
    separated = all(circular_distance(a.eta, b.eta) >= separation for a, b in combinations(angles, 2))

    within = K <= max(C_fit, bound)
    if not within:
        logger.warning(f"[kmax] n={n}: K_found={K} exceeds max(C_fit={C_fit:.3g}, 392A={bound:.3g})")
    return KmaxReport(
        n=n,
        K_found=K,
        A_est=A_est,
        bound_392A=bound,
        C_fit=C_fit,
        within_bound=within,
        E_n=E_n,
        E_n_minus_log_n=E_n - log_n,
        chain_bound=factor * A_est * E_n / log_n if log_n > 0 else float("inf"),
        C1=C1,
        C2=C2,
        fit_r_squared=r_squared,
        separation=separation,
        separation_ok=separated,
        angles=angles,
    )
