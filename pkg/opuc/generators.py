"""
Verblunsky coefficient families and the log-bound constant.

Families are deterministic: random phases come from a counter-based
Philox stream keyed by the seed, so a (family, parameters, seed) triple
always yields the same coefficients.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from opuc.errors import ConfigError, PreconditionError
from opuc.models import TWO_PI, VerblunskySequence
from opuc.output import atomic_write_text, format_float

logger = logging.getLogger(__name__)


class PhaseRule(Enum):
    """Phase rules of the Coulomb family."""
    ZERO = "zero"          # phi_j = 0
    CONSTANT = "constant"  # phi_j = -omega (j+1), a single frequency
    RANDOM = "random"      # phi_j i.i.d. uniform, keyed by seed


@dataclass
class Ell1Check:
    """sum_n n^{-eps/4} |alpha_n| directly and through dyadic Cauchy-Schwarz."""

    eps: float
    direct: float
    dyadic_bound: float

    def to_dict(self) -> dict:
        return {"eps": self.eps, "direct": self.direct, "dyadic_bound": self.dyadic_bound}


def _philox(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed)))


def coulomb_family(
    c: float,
    n: int,
    phase_rule="zero",
    omega: float = 0.0,
    seed: int = 0,
) -> VerblunskySequence:
    """
    alpha_j = c e^{i phi_j} / (j+1), j = 0..n-1.

    Args:
        c: Coupling, 0 <= c < 1
        n: Number of coefficients
        phase_rule: PhaseRule or its value ("zero", "constant", "random")
        omega: Frequency of the constant rule
        seed: Key of the random rule
    """
    if not 0.0 <= c < 1.0:
        raise PreconditionError(f"coulomb_family needs 0 <= c < 1, got {c}")
    if n < 0:
        raise PreconditionError(f"n must be nonnegative, got {n}")
    try:
        rule = PhaseRule(phase_rule)
    except ValueError:
        raise ConfigError(f"unknown phase rule {phase_rule!r}") from None

    j = np.arange(n)
    if rule is PhaseRule.ZERO:
        phases = np.zeros(n)
        tag = f"coulomb|c={c!r}|phase=zero"
    elif rule is PhaseRule.CONSTANT:
        phases = -omega * (j + 1)
        tag = f"coulomb|c={c!r}|phase=constant|omega={omega!r}"
    else:
        phases = _philox(seed).uniform(0.0, TWO_PI, size=n)
        tag = f"coulomb|c={c!r}|phase=random|seed={seed}"

    values = c * np.exp(1j * phases) / (j + 1)
    return VerblunskySequence(values, generator_tag=tag)


def geometric_family(a: complex, n: int) -> VerblunskySequence:
    """alpha_j = a^{j+1}; weighted-l2 (sum (j+1)|alpha_j|^2 < inf)."""
    if not abs(a) < 1.0:
        raise PreconditionError(f"geometric_family needs |a| < 1, got {a}")
    values = complex(a) ** (np.arange(n) + 1)
    return VerblunskySequence(values, generator_tag=f"geometric|a={complex(a)!r}")


def constant_family(a: complex, n: int) -> VerblunskySequence:
    """alpha_j = a (Geronimus polynomials)."""
    if not abs(a) < 1.0:
        raise PreconditionError(f"constant_family needs |a| < 1, got {a}")
    return VerblunskySequence(np.full(n, complex(a)), generator_tag=f"constant|a={complex(a)!r}")


def random_disk_family(radius: float, n: int, seed: int = 0) -> VerblunskySequence:
    """alpha_j uniform on the disk of the given radius (< 1)."""
    if not 0.0 <= radius < 1.0:
        raise PreconditionError(f"random_disk_family needs 0 <= radius < 1, got {radius}")
    rng = _philox(seed)
    moduli = radius * np.sqrt(rng.uniform(0.0, 1.0, size=n))
    angles = rng.uniform(0.0, TWO_PI, size=n)
    return VerblunskySequence(moduli * np.exp(1j * angles), generator_tag=f"random_disk|r={radius!r}|seed={seed}")


def wigner_von_neumann_family(c: float, omega: float, n: int) -> VerblunskySequence:
    """alpha_j = 2c cos(omega (j+1)) / (j+1): two resonant frequencies +-omega."""
    if not 0.0 <= 2.0 * abs(c) < 1.0:
        raise PreconditionError(f"wigner_von_neumann_family needs |2c| < 1, got c={c}")
    j = np.arange(n)
    values = 2.0 * c * np.cos(omega * (j + 1)) / (j + 1)
    return VerblunskySequence(values.astype(np.complex128), generator_tag=f"wvn|c={c!r}|omega={omega!r}")


def estimate_log_constant(alpha: VerblunskySequence) -> tuple[float, np.ndarray]:
    """
    Smallest A with sum_{j<N} (j+1)|alpha_j|^2 <= A log N for all N in [10, length].

    The sum runs over the first N coefficients. For alpha_j = c / (j+1) the
    ratio is c^2 H_N / log N, so A_est lies in [c^2, 1.3 c^2] once N >= 10.

    Returns:
        (A_est, profile) where profile rows are (N, ratio) at dyadic N >= 16
        and at N = length
    """
    L = alpha.length
    if L < 10:
        raise PreconditionError(f"estimate_log_constant needs length >= 10, got {L}")
    weighted = np.cumsum((np.arange(L) + 1) * np.abs(alpha.values) ** 2)
    N = np.arange(10, L + 1)
    ratios = weighted[N - 1] / np.log(N)
    A_est = float(np.max(ratios))

    marks = sorted({2 ** k for k in range(4, int(np.log2(L)) + 1)} | {L})
    profile = np.array([(m, weighted[m - 1] / np.log(m)) for m in marks if m >= 10])
    return A_est, profile


def ell1_fractional_check(alpha: VerblunskySequence, eps: float) -> Ell1Check:
    """
    sum_n max(n,1)^{-eps/4} |alpha_n|, directly and as the sum over dyadic
    blocks [2^k, 2^{k+1}) of the Cauchy-Schwarz bound

        (sum_block n^{-eps/2}/(n+1))^{1/2} (sum_block (n+1)|alpha_n|^2)^{1/2}.
    """
    if not eps > 0.0:
        raise PreconditionError(f"eps must be positive, got {eps}")
    L = alpha.length
    if L == 0:
        return Ell1Check(eps, 0.0, 0.0)
    idx = np.arange(L)
    moduli = np.abs(alpha.values)
    base = np.maximum(idx, 1).astype(float)
    direct = float(np.sum(base ** (-eps / 4.0) * moduli))

    bound = float(moduli[0])
    k = 0
    while 2 ** k < L:
        block = slice(2 ** k, min(2 ** (k + 1), L))
        weights = np.sum(base[block] ** (-eps / 2.0) / (idx[block] + 1))
        energy = np.sum((idx[block] + 1) * moduli[block] ** 2)
        bound += float(np.sqrt(weights * energy))
        k += 1
    return Ell1Check(eps, direct, bound)


def write_sequence(path, alpha: VerblunskySequence) -> Path:
    """
    Plain-text sequence file: '# <generator_tag>' then one 're im' line per
    coefficient at 17 significant digits.
    """
    lines = [f"# {alpha.generator_tag or ''}"]
    lines.extend(f"{format_float(a.real)} {format_float(a.imag)}" for a in alpha.values)
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_sequence(path, tag: Optional[str] = None) -> VerblunskySequence:
    """Inverse of write_sequence; blank lines and extra comment lines are skipped."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"sequence file not found: {path}")
    header = None
    values = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if header is None:
                header = line[1:].strip()
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError(f"{path}:{lineno}: expected 're im', got {raw!r}")
        try:
            values.append(complex(float(parts[0]), float(parts[1])))
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: not a number pair: {raw!r}") from None
    logger.debug(f"read {len(values)} coefficients from {path}")
    return VerblunskySequence(np.array(values, dtype=np.complex128), generator_tag=tag or header or None)
