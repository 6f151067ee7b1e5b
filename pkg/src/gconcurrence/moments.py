"""Exact and asymptotic moments of the determinant and the G-concurrence.

All moments are ratios of the fixed-trace normalization constant

    1/C(alpha) = prod_j Gamma(1 + j b/2) Gamma(alpha + (j-1) b/2) / Gamma(1 + b/2)
                 / Gamma(alpha N + b N (N-1)/2)

taken at two values of ``alpha``: ``<D^s>`` for an ensemble with exponent
``alpha0`` equals ``C(alpha0) / C(alpha0 + s)``. The Hilbert-Schmidt measure
is ``alpha0 = 1``; the induced ``N x K`` measure is
``alpha0 = beta (K - N + 1) / 2``. G-moments follow from ``G = N D**(1/N)``.

Values are returned in log form (:class:`MomentValue`) and accept complex
orders, since density inversion evaluates them along contours.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PoleError
from .specfun import EULER_GAMMA, gamma_ratio_exact, loggamma_array

__all__ = [
    "MomentValue",
    "base_alpha",
    "log_moment_d",
    "det_moment_hs",
    "det_moment_induced",
    "g_moment_hs",
    "g_moment_induced",
    "g_mean_variance",
    "stirling_prefactor_log",
    "stirling_exponent",
    "det_moment_stirling",
    "limit_moment",
    "concentration_point",
    "EULER_GAMMA",
]


@dataclass(frozen=True)
class MomentValue:
    """A moment stored as its logarithm together with the order."""

    log_value: complex
    order: complex
    exact: float | None = None

    @property
    def value(self) -> complex:
        if self.exact is not None:
            return complex(self.exact)
        return complex(np.exp(self.log_value))

    @property
    def real(self) -> float:
        """Real value; valid for real orders where the moment is positive."""
        if self.exact is not None:
            return self.exact
        return math.exp(self.log_value.real)

    def __float__(self) -> float:
        return self.real


def _check_beta(beta) -> int:
    if beta not in (1, 2):
        raise DomainError(f"beta must be 1 or 2, got {beta!r}")
    return int(beta)


def _check_n(n) -> int:
    if int(n) != n or n < 2:
        raise DomainError(f"n must be an integer >= 2, got {n!r}")
    return int(n)


def base_alpha(n: int, k: int, beta: int) -> float:
    """Exponent ``alpha0 = beta (K - N + 1) / 2`` of the induced measure."""
    return beta * (k - n + 1) / 2.0


def _neumaier(terms):
    """Compensated sum of an iterable of equally shaped arrays."""
    total = None
    comp = None
    for term in terms:
        if total is None:
            total = np.array(term, dtype=complex, copy=True)
            comp = np.zeros_like(total)
            continue
        t = total + term
        big = np.abs(total) >= np.abs(term)
        comp += np.where(big, (total - t) + term, (term - t) + total)
        total = t
    return total + comp


def log_moment_d(n: int, beta: int, s, alpha0: float = 1.0) -> np.ndarray:
    """Log of ``<D^s>`` for an ensemble with exponent ``alpha0``; no pole checks.

    ``s`` may be any complex array. Off the poles the result is the analytic
    continuation of the Gamma formula (the imaginary part is only defined
    modulo ``2 pi``), which is what contour methods need.
    """
    s = np.asarray(s, dtype=complex)
    half_b = beta / 2.0
    top = alpha0 * n + half_b * n * (n - 1)
    shifts = [alpha0 + j * half_b for j in range(n)]

    def terms():
        yield math.lgamma(top) - loggamma_array(top + n * s)
        for a in shifts:
            yield loggamma_array(a + s) - math.lgamma(a)

    return _neumaier(terms())


# doubled Gamma arguments up to this size go through exact rational arithmetic
_EXACT_ARG_LIMIT = 2000


def _exact_moment_d(n: int, beta: int, s: complex, alpha0: float) -> float | None:
    """``<D^s>`` as a correctly rounded ratio when every Gamma argument is a half-integer."""
    if s.imag != 0:
        return None
    half_b = beta / 2.0
    top = alpha0 * n + half_b * n * (n - 1)
    shifts = [alpha0 + j * half_b for j in range(n)]
    den = [top + n * s.real] + shifts
    num = [top] + [a + s.real for a in shifts]
    doubled = [2.0 * x for x in num + den]
    if any(d != round(d) or d < 1 or d > _EXACT_ARG_LIMIT for d in doubled):
        return None
    k = len(num)
    ints = [int(round(d)) for d in doubled]
    return gamma_ratio_exact(ints[:k], ints[k:])


def _moment(n: int, beta: int, s: complex, alpha0: float, order: complex, base: int = 1) -> MomentValue:
    """``base**order * <D^s>``; exact when the Gamma arguments allow it."""
    exact = _exact_moment_d(n, beta, s, alpha0)
    if exact is not None and exact > 0.0:
        exact *= float(base) ** order.real
        return MomentValue(complex(math.log(exact)), order, exact)
    log_v = complex(log_moment_d(n, beta, s, alpha0))
    if base != 1:
        log_v += order * math.log(base)
    return MomentValue(log_v, order)


def _validate_order(m, left_limit: float, what: str) -> complex:
    m = complex(m)
    if not (math.isfinite(m.real) and math.isfinite(m.imag)):
        raise DomainError(f"{what}: order must be finite, got {m!r}")
    if m.real <= left_limit:
        raise PoleError(
            f"{what}: order {m} is at or left of the first pole at "
            f"Re m = {left_limit:g}",
            pole=left_limit,
        )
    return m


def det_moment_hs(n: int, beta: int, m) -> MomentValue:
    """``<D^m>`` over the Hilbert-Schmidt measure."""
    n, beta = _check_n(n), _check_beta(beta)
    m = _validate_order(m, -1.0, "det_moment_hs")
    if m == 0:
        return MomentValue(0j, m, 1.0)
    return _moment(n, beta, m, 1.0, m)


def det_moment_induced(n: int, k: int, beta: int, m) -> MomentValue:
    """``<D^m>`` over the measure induced by an ``n x k`` pure state."""
    n, beta = _check_n(n), _check_beta(beta)
    if int(k) != k or k < n:
        raise DomainError(f"k must be an integer >= n, got {k!r}")
    alpha0 = base_alpha(n, k, beta)
    m = _validate_order(m, -alpha0, "det_moment_induced")
    if m == 0:
        return MomentValue(0j, m, 1.0)
    return _moment(n, beta, m, alpha0, m)


def g_moment_hs(n: int, beta: int, m) -> MomentValue:
    """``<G^m>`` over the Hilbert-Schmidt measure."""
    n, beta = _check_n(n), _check_beta(beta)
    m = _validate_order(m, -float(n), "g_moment_hs")
    if m == 0:
        return MomentValue(0j, m, 1.0)
    return _moment(n, beta, m / n, 1.0, m, base=n)


def g_moment_induced(n: int, k: int, beta: int, m) -> MomentValue:
    """``<G^m>`` over the measure induced by an ``n x k`` pure state."""
    n, beta = _check_n(n), _check_beta(beta)
    if int(k) != k or k < n:
        raise DomainError(f"k must be an integer >= n, got {k!r}")
    alpha0 = base_alpha(n, k, beta)
    m = _validate_order(m, -n * alpha0, "g_moment_induced")
    if m == 0:
        return MomentValue(0j, m, 1.0)
    return _moment(n, beta, m / n, alpha0, m, base=n)


def g_mean_variance(n: int, beta: int, k: int | None = None) -> tuple[float, float]:
    """Mean and variance of G; Hilbert-Schmidt unless ``k`` is given."""
    if k is None:
        g1, g2 = g_moment_hs(n, beta, 1).real, g_moment_hs(n, beta, 2).real
    else:
        g1 = g_moment_induced(n, k, beta, 1).real
        g2 = g_moment_induced(n, k, beta, 2).real
    return g1, g2 - g1 * g1


def stirling_exponent(n: int, beta: int) -> float:
    """Power of ``1/M`` in the large-``|M|`` form of ``<D^M>``."""
    if beta == 2:
        return (n * n - 1) / 2.0
    return (n * n + n - 2) / 4.0


def stirling_prefactor_log(n: int, beta: int) -> float:
    """Log of the constant ``A_N`` multiplying the large-``|M|`` form."""
    n, beta = _check_n(n), _check_beta(beta)
    lead = 0.5 * (n - 1) * math.log(2.0 * math.pi)
    if beta == 2:
        parts = [lead, math.lgamma(n * n), -(n * n - 0.5) * math.log(n)]
        parts += [-math.lgamma(j) for j in range(1, n + 1)]
    else:
        parts = [
            lead,
            math.lgamma((n * n + n) / 2.0),
            -((n * n + n - 1) / 2.0) * math.log(n),
        ]
        parts += [-math.lgamma((j + 1) / 2.0) for j in range(1, n + 1)]
    return math.fsum(parts)


def det_moment_stirling(n: int, beta: int, m) -> MomentValue:
    """Large-``|m|`` approximation ``A_N exp(-m N log N) / m**p`` to ``<D^m>``."""
    n, beta = _check_n(n), _check_beta(beta)
    m = complex(m)
    if m == 0:
        raise PoleError("det_moment_stirling has a pole at m = 0", pole=0.0)
    log_v = (
        stirling_prefactor_log(n, beta)
        - m * n * math.log(n)
        - stirling_exponent(n, beta) * np.log(m)
    )
    return MomentValue(complex(log_v), m)


def limit_moment(m: float) -> float:
    """``lim_{N->oo} <G^m> = exp(-m)`` for either beta."""
    if not m >= 0:
        raise DomainError(f"limit_moment requires m >= 0, got {m!r}")
    return math.exp(-m)


def concentration_point(q: float) -> float:
    """Point ``(1/e) (q/(q-1))**(q-1)`` where G concentrates for ``K/N -> q``."""
    q = float(q)
    if not q > 1.0 or math.isinf(q):
        raise DomainError(f"concentration point needs finite q > 1, got {q!r}")
    d = q - 1.0
    return math.exp(-1.0 + d * math.log1p(1.0 / d))
