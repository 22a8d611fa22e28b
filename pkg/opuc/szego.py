"""
Szego recursion, forward and backward.

Forward: Verblunsky coefficients -> monic orthogonal polynomials
    Phi_{n+1}(z) = z Phi_n(z) - conj(alpha_n) Phi_n^*(z)
Backward: measure -> coefficients, by modified Gram-Schmidt on the
Toeplitz moment matrix, used as an independent oracle.

Polynomials are dense ascending coefficient arrays.
"""

import logging
from typing import Optional

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.linalg import toeplitz

from config.settings import settings
from opuc.errors import (
    CoefficientOutOfDiskError,
    ConditioningError,
    InvariantViolationError,
    PreconditionError,
)
from opuc.models import (
    CircleMeasure,
    MonicPair,
    VerblunskySequence,
    measure_moments,
)
from opuc.resource_manager import ResourceManager, get_resource_manager

logger = logging.getLogger(__name__)


def szego_step(state: MonicPair, alpha_n: complex) -> MonicPair:
    """
    One step of the Szego recursion.

    Args:
        state: Degree-n pair (Phi_n, Phi_n^*)
        alpha_n: Verblunsky coefficient, |alpha_n| < 1

    Returns:
        Degree-(n+1) pair; its constant term is exactly -conj(alpha_n)
    """
    alpha_n = complex(alpha_n)
    modulus_sq = alpha_n.real ** 2 + alpha_n.imag ** 2
    if modulus_sq >= 1.0:
        raise CoefficientOutOfDiskError(f"|alpha_n| = {abs(alpha_n):.17g} is not inside the unit disk")

    shifted = np.concatenate(([0.0 + 0.0j], state.phi))
    star_padded = np.concatenate((state.phi_star, [0.0 + 0.0j]))
    with np.errstate(over="ignore", invalid="ignore"):
        phi = shifted - np.conj(alpha_n) * star_padded
    if not np.all(np.isfinite(phi)):
        raise InvariantViolationError(
            f"coefficients of Phi_{state.degree + 1} overflow; evaluate on the circle by recursion instead"
        )
    phi_star = np.conj(phi[::-1])
    return MonicPair(phi, phi_star, state.log_norm_sq + np.log1p(-modulus_sq))


def monic_pair_from_sequence(alpha: VerblunskySequence, n: int, beta: float = 0.0) -> MonicPair:
    """Phi_n^{(beta)}: n Szego steps with coefficients e^{i beta} alpha_j."""
    rotation = np.exp(1j * beta)
    state = MonicPair.initial()
    for a in alpha.padded(n):
        state = szego_step(state, rotation * a)
    return state


def evaluate_on_circle(
    state: MonicPair,
    etas,
    orthonormal: bool = False,
    resource_manager: Optional[ResourceManager] = None,
) -> np.ndarray:
    """
    Phi_n(e^{i eta}) by Horner evaluation, batched over eta.

    Args:
        state: Monic pair to evaluate
        etas: Angles
        orthonormal: Return phi_n = Phi_n / sqrt(norm_sq) instead

    Returns:
        Complex array with the shape of etas
    """
    etas = np.asarray(etas, dtype=float)
    rm = resource_manager or get_resource_manager()
    flat = etas.reshape(-1)
    parts = rm.map_ordered(lambda chunk: P.polyval(np.exp(1j * chunk), state.phi), rm.chunk(flat))
    values = np.concatenate(parts) if parts else np.zeros(0, dtype=np.complex128)
    if orthonormal:
        values = values / np.sqrt(state.norm_sq)
    return values.reshape(etas.shape)


def evaluate_star_on_circle(state: MonicPair, etas) -> np.ndarray:
    """Phi_n^*(e^{i eta}) by Horner evaluation."""
    etas = np.asarray(etas, dtype=float)
    return P.polyval(np.exp(1j * etas), state.phi_star)


def evaluate_by_recursion(
    alpha: VerblunskySequence,
    etas,
    n: int,
    beta: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Phi_n(e^{i eta}) and Phi_n^*(e^{i eta}) by running the recursion on values.

    Stable for large n, where Horner on dense coefficients loses relative
    accuracy through cancellation.
    """
    etas = np.asarray(etas, dtype=float)
    z = np.exp(1j * etas)
    phi = np.ones_like(z)
    phi_star = np.ones_like(z)
    for a in np.exp(1j * beta) * alpha.padded(n):
        phi, phi_star = z * phi - np.conj(a) * phi_star, phi_star - a * z * phi
    return phi, phi_star


def log_modulus_by_recursion(
    alpha: VerblunskySequence,
    etas,
    n: int,
    beta: float = 0.0,
) -> np.ndarray:
    """
    log |Phi_n(e^{i eta})| from the recursion on values, rescaled every step.

    |Phi_n| = |Phi_n^*| on the circle, so the pair is divided by |Phi_k^*|
    after each step and the logs of the divisors are summed.
    """
    etas = np.asarray(etas, dtype=float)
    z = np.exp(1j * etas)
    phi = np.ones_like(z)
    phi_star = np.ones_like(z)
    log_scale = np.zeros(etas.shape)
    for a in np.exp(1j * beta) * alpha.padded(n):
        phi, phi_star = z * phi - np.conj(a) * phi_star, phi_star - a * z * phi
        scale = np.abs(phi_star)
        if np.any(scale <= 0.0):
            raise InvariantViolationError("Phi_k^* vanished on the unit circle")
        phi = phi / scale
        phi_star = phi_star / scale
        log_scale += np.log(scale)
    return log_scale


def christoffel_sums(alpha: VerblunskySequence, etas, n: int) -> np.ndarray:
    """
    Cumulative sums sum_{j<=k} |phi_j(e^{i eta})|^2 for k = 0..n-1.

    The pair (Phi_k, Phi_k^*) is renormalized every step, so long sequences
    with large |alpha_j| neither overflow nor underflow.

    Returns:
        Array of shape (n, len(etas))
    """
    etas = np.asarray(etas, dtype=float).reshape(-1)
    z = np.exp(1j * etas)
    phi = np.ones_like(z)
    phi_star = np.ones_like(z)
    # log |phi_k|; the rescaled pair has |phi| = |phi_star| = 1
    log_weight = np.zeros(etas.size)
    sums = np.empty((n, etas.size))
    running = np.zeros(etas.size)
    coefficients = alpha.padded(n)
    for k in range(n):
        running = running + np.exp(2.0 * log_weight)
        sums[k] = running
        a = coefficients[k]
        phi, phi_star = z * phi - np.conj(a) * phi_star, phi_star - a * z * phi
        scale = np.abs(phi_star)
        phi = phi / scale
        phi_star = phi_star / scale
        log_weight = log_weight + np.log(scale) - 0.5 * np.log1p(-abs(a) ** 2)
    return sums


def gram_schmidt_monic(m: CircleMeasure, n: int) -> list[np.ndarray]:
    """
    Monic orthogonal polynomials Phi_0..Phi_n of m by modified Gram-Schmidt
    on {1, z, ..., z^n} in L^2(d mu).

    The inner product <p, q> = p^H T q uses the Toeplitz matrix of moments
    T[j, k] = int conj(z^j) z^k d mu = c_{j-k}, with c_k = int e^{-ik eta} d mu.

    Raises:
        ConditioningError: cond(T) above settings.numerics.CONDITION_LIMIT
    """
    if n < 0:
        raise PreconditionError(f"n must be nonnegative, got {n}")
    moments = measure_moments(m, n)
    gram = toeplitz(moments)
    condition = np.linalg.cond(gram)
    if not np.isfinite(condition) or condition > settings.numerics.CONDITION_LIMIT:
        raise ConditioningError(
            f"Toeplitz moment matrix of order {n} has condition number {condition:.3e} "
            f"(limit {settings.numerics.CONDITION_LIMIT:.1e}); measure too concentrated"
        )

    basis: list[np.ndarray] = []
    gram_basis: list[np.ndarray] = []
    norms: list[float] = []
    for k in range(n + 1):
        v = np.zeros(n + 1, dtype=np.complex128)
        v[k] = 1.0
        for q, tq, nq in zip(basis, gram_basis, norms):
            # <q, v> = q^H T v = (T q)^H v since T is Hermitian
            v = v - (np.vdot(tq, v) / nq) * q
        tv = gram @ v
        norm = float(np.real(np.vdot(v, tv)))
        if norm <= 0.0:
            raise ConditioningError(f"nonpositive norm at degree {k}: measure supported on < {k + 1} points")
        basis.append(v)
        gram_basis.append(tv)
        norms.append(norm)
    return [b[: k + 1].copy() for k, b in enumerate(basis)]


def verblunsky_from_measure(m: CircleMeasure, n: int) -> VerblunskySequence:
    """
    First n Verblunsky coefficients of m: alpha_k = -conj(Phi_{k+1}(0)).
    """
    if not m.is_probability(settings.numerics.QUADRATURE_TOL * 100):
        logger.warning(f"verblunsky_from_measure: total mass {m.total_mass:.12f} is not 1")
    polys = gram_schmidt_monic(m, n)
    alphas = np.array([-np.conj(p[0]) for p in polys[1:]], dtype=np.complex128)
    if alphas.size and np.max(np.abs(alphas)) >= 1.0:
        raise ConditioningError("recovered |alpha_k| >= 1; moments too inaccurate")
    return VerblunskySequence(alphas, generator_tag=f"from_measure|n={n}")
