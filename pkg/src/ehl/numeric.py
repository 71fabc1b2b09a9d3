"""Numerical building blocks: stable link functions, chi-square tail
probabilities, small linear solves, and reproducible random streams.

The chi-square survival function is computed from the regularized upper
incomplete gamma function with the classic two-regime scheme: a power series
for the lower function when x < a + 1 and a Lentz-style continued fraction
for the upper function otherwise. Both converge to near machine precision
for the degrees of freedom used anywhere in this package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputError

RNG_ALGORITHM = "pcg64"

_MAX_ITER = 600
_EPS = 1e-16
_TINY = 1e-300
# exp() overflows above ~709.78; clamp instead of raising
_EXP_MAX = 709.0


def expit(z: float) -> float:
    """Logistic function 1 / (1 + exp(-z)); scalar front end of expit_array
    so both produce identical bits."""
    return float(expit_array(np.array([z], dtype=float))[0])


def expit_array(z: np.ndarray) -> np.ndarray:
    """Vectorized logistic function, stable at both tails."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    t = np.exp(z[~pos])
    out[~pos] = t / (1.0 + t)
    return out


def logit(p: float) -> float:
    """Inverse logistic log(p / (1 - p)); requires p strictly inside (0, 1)."""
    if not 0.0 < p < 1.0:
        raise InputError(f"logit requires p in (0, 1), got {p!r}")
    return math.log(p) - math.log1p(-p)


def exp_clamped(x: float) -> float:
    """exp(x) that saturates to +inf instead of raising OverflowError."""
    if x > _EXP_MAX:
        return math.inf
    return math.exp(x)


def logsumexp(values: Sequence[float] | np.ndarray) -> float:
    """log(sum(exp(values))) with the usual max shift.

    Returns -inf for an empty input or when every entry is -inf.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return -math.inf
    m = float(np.max(arr))
    if m == -math.inf:
        return -math.inf
    if math.isinf(m):
        return math.inf
    return m + math.log(float(np.sum(np.exp(arr - m))))


def _lower_regularized_series(a: float, x: float) -> float:
    # P(a, x) = x^a e^-x / Gamma(a+1) * sum_k x^k / ((a+1)...(a+k)), x <= a + 1
    term = 1.0 / a
    total = term
    denom = a
    for _ in range(_MAX_ITER):
        denom += 1.0
        term *= x / denom
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_regularized_contfrac(a: float, x: float) -> float:
    # Q(a, x) via modified Lentz continued fraction, x > a + 1
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def chisq_sf(x: float, k: int) -> float:
    """Survival function P(X > x) of the chi-square distribution with k
    degrees of freedom.

    Parameters
    ----------
    x : float
        Evaluation point, must be nonnegative (x = +inf gives 0).
    k : int
        Degrees of freedom, a positive integer.

    Returns
    -------
    float
        Upper tail probability in [0, 1].
    """
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise InputError(f"degrees of freedom must be a positive integer, got {k!r}")
    x = float(x)
    if math.isnan(x) or x < 0.0:
        raise InputError(f"chi-square statistic must be nonnegative, got {x!r}")
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    a = 0.5 * k
    hx = 0.5 * x
    if hx < a + 1.0:
        p = 1.0 - _lower_regularized_series(a, hx)
    else:
        p = _upper_regularized_contfrac(a, hx)
    return min(1.0, max(0.0, p))


def solve_linear_3x3(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a 3x3 linear system with an explicit conditioning guard.

    Raises InputError when the determinant is negligible relative to the
    row scales, rather than returning a garbage solution.
    """
    a = np.asarray(matrix, dtype=float)
    b = np.asarray(rhs, dtype=float)
    if a.shape != (3, 3) or b.shape != (3,):
        raise InputError(f"expected a 3x3 matrix and length-3 rhs, got {a.shape} and {b.shape}")
    scale = 1.0
    for row in a:
        scale *= max(np.max(np.abs(row)), _TINY)
    det = float(np.linalg.det(a))
    if abs(det) <= 1e-12 * scale:
        raise InputError("singular or near-singular 3x3 system")
    return np.linalg.solve(a, b)


def derive_rng(*key: int) -> np.random.Generator:
    """Generator seeded from an integer key sequence.

    Streams for distinct keys are statistically independent, and the same
    key always yields the same stream, which is what makes parallel runs
    bit-stable: every task seeds its own generator from (master seed, task
    index) instead of sharing one stream.
    """
    if not key:
        raise InputError("derive_rng requires at least one integer key component")
    return np.random.default_rng(list(key))


@dataclass(frozen=True)
class RngState:
    """Serializable description of a random stream: root seed key plus
    algorithm tag, sufficient to reproduce every draw."""

    seed: tuple[int, ...]
    algorithm: str = RNG_ALGORITHM

    def generator(self) -> np.random.Generator:
        return derive_rng(*self.seed)

    def child(self, *key: int) -> "RngState":
        return RngState(self.seed + key, self.algorithm)


def seed_key(seed: int | Sequence[int]) -> tuple[int, ...]:
    """Normalize a user-facing seed (int or sequence of ints) to a tuple."""
    if isinstance(seed, (int, np.integer)):
        if seed < 0:
            raise InputError(f"seed must be nonnegative, got {seed}")
        return (int(seed),)
    parts = tuple(int(s) for s in seed)
    if not parts:
        raise InputError("seed sequence must be nonempty")
    if any(s < 0 for s in parts):
        raise InputError(f"seed components must be nonnegative, got {parts}")
    return parts
