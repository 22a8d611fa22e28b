"""
Pruefer variables along the Szego recursion.

    Phi_n(e^{i eta}, beta) = R_n exp[i(n eta + theta_n)]

with coefficients e^{i beta} alpha_j, evolved as

    R_{n+1}^2 / R_n^2          = 1 + |alpha_n|^2 - 2 Re(alpha_n e^{i gamma_n})
    e^{-i(theta_{n+1}-theta_n)} = (1 - alpha_n e^{i gamma_n}) / |1 - alpha_n e^{i gamma_n}|
    gamma_n = (n+1) eta + beta + 2 theta_n

and the resonance accumulator A(n, eta, beta) = sum_{j<n} alpha_j e^{i gamma_j}.

R_0 = 1, theta_0 = 0. Phases are a continuous lift: Re(1 - alpha e^{i gamma}) > 0,
so the principal argument keeps |theta_{n+1} - theta_n| < pi/2.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config.settings import settings
from opuc.errors import InvariantViolationError, PreconditionError
from opuc.models import PrueferTrajectory, VerblunskySequence, normalize_angle
from opuc.resource_manager import ResourceManager, get_resource_manager

logger = logging.getLogger(__name__)


@dataclass
class GridState:
    """Final Pruefer state over many (eta, beta) pairs."""

    etas: np.ndarray
    betas: np.ndarray
    n: int
    radii_log: np.ndarray
    phases: np.ndarray
    accumulator: np.ndarray
    # sup over 0 <= j <= n
    sup_radii_log: np.ndarray
    sup_fs_gap: np.ndarray


@dataclass
class TailConvergence:
    """Partial tails of hat-alpha(eta, n) at dyadic N with a Cauchy check."""

    value: complex
    upper: int
    dyadic_n: list[int]
    dyadic_values: list[complex]
    cauchy_variation: float
    converged: bool

    def to_dict(self) -> dict:
        return {
            "value_re": self.value.real,
            "value_im": self.value.imag,
            "upper": self.upper,
            "cauchy_variation": self.cauchy_variation,
            "converged": self.converged,
        }


@dataclass
class FsrProfile:
    """Partial sums of sum_j |hat-alpha(eta, j) alpha_{j-1}| at dyadic N."""

    eta: float
    dyadic_n: list[int]
    partial_sums: list[float]
    growth_exponent: float


@dataclass
class BetaRadiusRecord:
    """Boundedness of R_j(eta, beta) for one sampled rotation."""

    beta: float
    sup_log_radius: float
    final_log_radius: float
    sup_fs_gap: float

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "sup_log_radius": self.sup_log_radius,
            "final_log_radius": self.final_log_radius,
            "sup_fs_gap": self.sup_fs_gap,
        }


def _evolve(
    coefficients: np.ndarray,
    etas: np.ndarray,
    betas: np.ndarray,
    n: int,
    record: bool = False,
):
    """
    Shared Pruefer loop, elementwise over broadcast (eta, beta).

    Coefficients past their stored length are zero and leave the state
    unchanged, so the loop stops at min(n, len(coefficients)).
    """
    etas, betas = np.broadcast_arrays(np.asarray(etas, dtype=float), np.asarray(betas, dtype=float))
    shape = etas.shape
    log_r = np.zeros(shape)
    theta = np.zeros(shape)
    acc = np.zeros(shape, dtype=np.complex128)
    sup_log_r = np.zeros(shape)
    sup_gap = np.zeros(shape)

    history = None
    if record:
        history = (
            np.zeros((n + 1,) + shape),
            np.zeros((n + 1,) + shape),
            np.zeros((n + 1,) + shape, dtype=np.complex128),
        )

    active = min(n, coefficients.size)
    for j in range(active):
        a = coefficients[j]
        if a != 0:
            gamma = (j + 1) * etas + betas + 2.0 * theta
            w = a * np.exp(1j * gamma)
            factor = 1.0 - w
            modulus = np.abs(factor)
            if np.any(modulus <= 0.0):
                raise InvariantViolationError(f"nonpositive radius factor at step {j}")
            acc = acc + w
            log_r = log_r + np.log(modulus)
            theta = theta - np.angle(factor)
            np.maximum(sup_log_r, log_r, out=sup_log_r)
            np.maximum(sup_gap, np.abs(log_r + acc.real), out=sup_gap)
        if record:
            history[0][j + 1] = log_r
            history[1][j + 1] = theta
            history[2][j + 1] = acc

    if record and active < n:
        history[0][active + 1:] = log_r
        history[1][active + 1:] = theta
        history[2][active + 1:] = acc

    return log_r, theta, acc, sup_log_r, sup_gap, history


def pruefer_evolve(alpha: VerblunskySequence, eta: float, beta: float, n: int) -> PrueferTrajectory:
    """
    Full Pruefer trajectory j = 0..n along one angle and rotation.

    Args:
        alpha: Verblunsky coefficients (zero-padded beyond length)
        eta: Angle on the circle
        beta: Rotation of the coefficients
        n: Number of steps

    Returns:
        PrueferTrajectory with radii_log, phases and accumulator of length n+1
    """
    if n < 0:
        raise PreconditionError(f"n must be nonnegative, got {n}")
    eta = normalize_angle(float(eta))
    beta = normalize_angle(float(beta))
    coefficients = alpha.values[:n]
    *_, history = _evolve(coefficients, np.array(eta), np.array(beta), n, record=True)
    return PrueferTrajectory(
        eta=eta,
        beta=beta,
        radii_log=history[0],
        phases=history[1],
        accumulator=history[2],
    )


def pruefer_evolve_grid(
    alpha: VerblunskySequence,
    etas,
    beta=0.0,
    n: Optional[int] = None,
    resource_manager: Optional[ResourceManager] = None,
) -> GridState:
    """
    Final Pruefer state at step n for every angle of etas (and beta, broadcast).

    The angle grid is partitioned across worker threads; every angle is an
    independent trajectory, so the result does not depend on the partition.
    """
    n = alpha.length if n is None else n
    if n < 0:
        raise PreconditionError(f"n must be nonnegative, got {n}")
    etas, betas = np.broadcast_arrays(
        normalize_angle(np.atleast_1d(np.asarray(etas, dtype=float))),
        normalize_angle(np.atleast_1d(np.asarray(beta, dtype=float))),
    )
    etas = etas.reshape(-1).copy()
    betas = betas.reshape(-1).copy()
    coefficients = alpha.values[:n]
    rm = resource_manager or get_resource_manager()

    index_chunks = rm.chunk(np.arange(etas.size))

    def run(idx):
        return _evolve(coefficients, etas[idx], betas[idx], n)

    parts = rm.map_ordered(run, index_chunks)
    fields = [np.concatenate([part[k] for part in parts]) for k in range(5)]
    return GridState(
        etas=etas,
        betas=betas,
        n=n,
        radii_log=fields[0],
        phases=fields[1],
        accumulator=fields[2],
        sup_radii_log=fields[3],
        sup_fs_gap=fields[4],
    )


def pruefer_phase_history(alpha: VerblunskySequence, etas, n: int, beta: float = 0.0) -> np.ndarray:
    """theta_j(eta, beta) for j = 0..n and every angle: shape (n+1, len(etas))."""
    if n < 0:
        raise PreconditionError(f"n must be nonnegative, got {n}")
    etas = normalize_angle(np.atleast_1d(np.asarray(etas, dtype=float)))
    betas = np.full(etas.shape, normalize_angle(float(beta)))
    *_, history = _evolve(alpha.values[:n], etas, betas, n, record=True)
    return history[1]


def asymptotic_proxy(traj: PrueferTrajectory) -> np.ndarray:
    """exp(-Re A(j, eta, beta)) for every j: the proxy R_j ~ exp(-Re A)."""
    return np.exp(-traj.accumulator.real)


def orthonormal_log_radii(traj: PrueferTrajectory, alpha: VerblunskySequence) -> np.ndarray:
    """log r_j = log |phi_j| = log R_j - (1/2) sum_{k<j} log(1 - |alpha_k|^2)."""
    moduli_sq = np.abs(alpha.padded(traj.length)) ** 2
    log_norm_sq = np.concatenate(([0.0], np.cumsum(np.log1p(-moduli_sq))))
    return traj.radii_log - 0.5 * log_norm_sq


def _tail_terms(alpha: VerblunskySequence, eta: float, upper: int) -> np.ndarray:
    coefficients = alpha.padded(upper + 1)
    return coefficients * np.exp(1j * eta * np.arange(upper + 1))


def alpha_tail(alpha: VerblunskySequence, eta: float, n: int, N: int) -> complex:
    """Partial tail sum_{j=n}^{N} alpha_j e^{i j eta}."""
    if not 0 <= n <= N:
        raise PreconditionError(f"need 0 <= n <= N, got n={n}, N={N}")
    if N > alpha.length:
        raise PreconditionError(f"N={N} exceeds the stored length {alpha.length}")
    terms = _tail_terms(alpha, eta, N)
    return complex(np.sum(terms[n:]))


def tail_convergence(
    alpha: VerblunskySequence,
    eta: float,
    n: int = 0,
    tol: float = 1e-3,
) -> TailConvergence:
    """
    Cauchy check of hat-alpha(eta, n) over the stored range.

    The variation is max |S(N') - S(L)| over N' in [L/2, L], with
    S(N') = sum_{j=n}^{N'} alpha_j e^{ij eta} and L the last stored index.
    Non-convergence is reported, never raised.
    """
    upper = alpha.length - 1
    if upper < n:
        return TailConvergence(0j, upper, [], [], 0.0, True)
    terms = _tail_terms(alpha, eta, upper)
    partial = np.cumsum(terms[n:])
    indices = np.arange(n, upper + 1)
    final = partial[-1]
    window = indices >= max(n, upper // 2)
    variation = float(np.max(np.abs(partial[window] - final)))

    dyadic = [N for N in (2 ** k for k in range(int(np.log2(max(upper, 1))) + 1)) if n <= N <= upper]
    dyadic_values = [complex(partial[N - n]) for N in dyadic]
    converged = variation < tol
    if not converged:
        logger.debug(f"[tail] eta={eta:.6f} n={n}: Cauchy variation {variation:.3e} >= {tol:.1e}")
    return TailConvergence(complex(final), upper, dyadic, dyadic_values, variation, converged)


def _fsr_terms(alpha: VerblunskySequence, eta: float) -> np.ndarray:
    """|hat-alpha(eta, j)| |alpha_{j-1}| for j = 1..L (hat-alpha over the stored range)."""
    L = alpha.length
    if L == 0:
        return np.zeros(0)
    terms = alpha.values * np.exp(1j * eta * np.arange(L))
    hat = np.cumsum(terms[::-1])[::-1]
    # hat[j] = sum_{k >= j} terms[k]; j = 1..L-1 here, hat(L) = 0
    products = np.zeros(L)
    products[: L - 1] = np.abs(hat[1:]) * np.abs(alpha.values[:-1])
    return products


def fsr_criterion(alpha: VerblunskySequence, eta: float, N: int) -> float:
    """
    Partial sum sum_{j=1}^{N} |hat-alpha(eta, j)| |alpha_{j-1}|.

    Small, saturating values support that eta lies outside the set where
    the Pruefer radius is unbounded.
    """
    if N < 0:
        raise PreconditionError(f"N must be nonnegative, got {N}")
    products = _fsr_terms(alpha, eta)
    return float(np.sum(products[:N]))


def fsr_profile(alpha: VerblunskySequence, eta: float) -> FsrProfile:
    """
    Criterion partial sums at dyadic N and the exponent p of S(N) ~ a (log N)^p.
    """
    products = _fsr_terms(alpha, eta)
    partial = np.cumsum(products)
    dyadic = [2 ** k for k in range(1, int(np.log2(max(alpha.length, 2))) + 1) if 2 ** k <= alpha.length]
    sums = [float(partial[N - 1]) for N in dyadic]

    fit_n = np.array([N for N, s in zip(dyadic, sums) if N >= 16 and s > 0.0], dtype=float)
    fit_s = np.array([s for N, s in zip(dyadic, sums) if N >= 16 and s > 0.0])
    exponent = 0.0
    if fit_n.size >= 2:
        exponent = float(np.polyfit(np.log(np.log(fit_n)), np.log(fit_s), 1)[0])
    return FsrProfile(normalize_angle(float(eta)), dyadic, sums, exponent)


def radius_boundedness(
    alpha: VerblunskySequence,
    eta: float,
    n: int,
    beta_count: Optional[int] = None,
    resource_manager: Optional[ResourceManager] = None,
) -> list[BetaRadiusRecord]:
    """
    Per-beta boundedness of R_j(eta, beta), j <= n, on a uniform beta grid
    of beta_count rotations (default SCAN_BETA_SAMPLES).
    """
    beta_count = settings.scan.SCAN_BETA_SAMPLES if beta_count is None else int(beta_count)
    if beta_count < 1:
        raise PreconditionError(f"beta_count must be positive, got {beta_count}")
    betas = 2.0 * np.pi * np.arange(beta_count) / beta_count
    state = pruefer_evolve_grid(alpha, np.full(beta_count, eta), betas, n, resource_manager)
    return [
        BetaRadiusRecord(
            beta=float(b),
            sup_log_radius=float(s),
            final_log_radius=float(r),
            sup_fs_gap=float(g),
        )
        for b, s, r, g in zip(betas, state.sup_radii_log, state.radii_log, state.sup_fs_gap)
    ]
