"""Log-gamma and digamma kernels.

Every Gamma ratio elsewhere in the package is formed as a difference of
log-gammas; ``Gamma(N**2)`` overflows a double already at ``N = 14``.

The real log-gamma is the C library ``lgamma``; complex log-gamma and the
general digamma come from :mod:`scipy.special`. Digamma at integer and
half-integer arguments uses the exact harmonic-sum recurrences so that the
closed-form edge coefficients see no library rounding.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286061
LOG_SQRT_PI = 0.5 * math.log(math.pi)

# Half-integers are detected exactly up to this size; beyond it the
# recurrence sum is no better than the library asymptotic series.
_EXACT_RECURRENCE_LIMIT = 10_000


def ln_gamma(x: float) -> float:
    """Return ``log Gamma(x)`` for real ``x > 0``."""
    x = float(x)
    if not x > 0.0 or math.isinf(x):
        raise DomainError(f"ln_gamma requires a finite x > 0, got {x!r}")
    return math.lgamma(x)


def _check_not_pole(z: np.ndarray) -> None:
    bad = (z.imag == 0.0) & (z.real <= 0.0) & (z.real == np.round(z.real))
    if np.any(bad):
        where = z[bad].flat[0]
        raise DomainError(f"log-gamma has a pole at z = {where.real:g}")
    if not np.all(np.isfinite(z)):
        raise DomainError("log-gamma argument must be finite")


def ln_gamma_complex(z):
    """Principal branch of ``log Gamma(z)`` for complex ``z``.

    The branch is the one analytic on the plane cut along the non-positive
    real axis and real on the positive axis. Accepts a scalar or an array;
    arrays are evaluated elementwise.
    """
    arr = np.asarray(z, dtype=complex)
    _check_not_pole(arr)
    out = special.loggamma(arr)
    if np.ndim(z) == 0:
        return complex(out)
    return out


def loggamma_array(z: np.ndarray) -> np.ndarray:
    """Unchecked vectorized complex log-gamma for internal hot loops."""
    return special.loggamma(z)


@lru_cache(maxsize=4096)
def _harmonic(n: int) -> float:
    return math.fsum(1.0 / k for k in range(1, n))


@lru_cache(maxsize=4096)
def _odd_harmonic(n: int) -> float:
    # sum_{k=0}^{n-1} 2/(2k+1), the increment from psi(1/2) to psi(n + 1/2)
    return math.fsum(2.0 / (2 * k + 1) for k in range(n))


def digamma(x: float) -> float:
    """Digamma function for real ``x > 0``.

    Integers use ``psi(n) = -gamma + H_{n-1}`` and half-integers
    ``psi(n + 1/2) = -gamma - 2 log 2 + sum_{k<n} 2/(2k+1)``.
    """
    x = float(x)
    if not x > 0.0 or math.isinf(x):
        raise DomainError(f"digamma requires a finite x > 0, got {x!r}")
    if x <= _EXACT_RECURRENCE_LIMIT:
        if x == int(x):
            return -EULER_GAMMA + _harmonic(int(x))
        twice = 2.0 * x
        if twice == int(twice):
            n = int(x - 0.5)
            return -EULER_GAMMA - 2.0 * math.log(2.0) + _odd_harmonic(n)
    return float(special.digamma(x))


def gamma_half_exact(x2: int) -> tuple[Fraction, int]:
    """``Gamma(x2 / 2)`` as ``(q, e)`` meaning ``q * pi**(e/2)``, for integer ``x2 >= 1``."""
    if x2 <= 0:
        raise DomainError("Gamma argument must be positive")
    if x2 % 2 == 0:
        return Fraction(math.factorial(x2 // 2 - 1)), 0
    k = (x2 - 1) // 2
    return Fraction(math.factorial(2 * k), 4**k * math.factorial(k)), 1


def gamma_ratio_exact(num2: list[int], den2: list[int], scale: Fraction = Fraction(1),
                      pi_half_powers: int = 0) -> float:
    """``scale * prod Gamma(a/2) / prod Gamma(b/2) * pi**(pi_half_powers/2)``.

    Arguments are passed doubled so half-integers stay exact; the rational
    part is rounded once, so the result is good to a couple of ulps.
    """
    q, e = Fraction(scale), pi_half_powers
    for a in num2:
        g, ge = gamma_half_exact(a)
        q *= g
        e += ge
    for b in den2:
        g, ge = gamma_half_exact(b)
        q /= g
        e -= ge
    if e % 2 == 0:
        return float(q) * math.pi ** (e // 2)
    return float(q) * math.pi ** (e / 2)


def weighted_digamma(c: float, x: float, psi=digamma) -> float:
    """Return ``c * psi(x)`` with the convention ``0 * psi(0) = -1``.

    The convention is the limit of ``eps * psi(eps)`` as ``eps -> 0``; it
    survives any constant shift of ``psi``, so a shifted ``psi`` passed in
    for property testing leaves it unchanged.
    """
    if x < 0:
        raise DomainError(f"weighted_digamma requires x >= 0, got {x!r}")
    if x == 0:
        if c != 0:
            raise DomainError("weighted_digamma(c, 0) is only defined for c = 0")
        return -1.0
    return c * psi(x)
