"""Edge expansions of the determinant density.

Right edge (``D -> N**-N``): a single power law in ``t = -log D - N log N``.
Left edge (``D -> 0``): a series in powers of ``D`` (half-integer powers for
real states) with logarithmic corrections, one group of terms per pole of
the moment function. Coefficients come from closed Gamma/digamma formulas;
:func:`pole_laurent_coefficients` recomputes any of them numerically from
the residues and serves as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .moments import log_moment_d, stirling_exponent, stirling_prefactor_log
from .specfun import digamma, gamma_ratio_exact as _gamma_ratio, weighted_digamma

__all__ = [
    "EdgeTerm",
    "EdgeExpansion",
    "right_edge_exponent",
    "right_edge_constant",
    "right_edge_density",
    "right_edge_density_g",
    "left_edge_coeffs_complex",
    "left_edge_coeffs_real",
    "left_edge_expansion",
    "left_edge_eval",
    "left_edge_integral",
    "pole_laurent_coefficients",
    "left_edge_coeffs_numeric",
]


@dataclass(frozen=True)
class EdgeTerm:
    d_power: Fraction
    log_power: int
    coeff: float
    label: str = ""


@dataclass(frozen=True)
class EdgeExpansion:
    """Terms ``coeff * D**d_power * log(D)**log_power`` of an edge series.

    ``complete_through`` is the highest power of ``D`` whose terms are all
    present; anything above it is missing.
    """

    edge: str
    n: int
    beta: int
    terms: tuple[EdgeTerm, ...]
    complete_through: Fraction
    notes: tuple[str, ...] = field(default=())

    def coefficient(self, label: str) -> float:
        for term in self.terms:
            if term.label == label:
                return term.coeff
        raise KeyError(label)

    def orders(self) -> list[Fraction]:
        return sorted({t.d_power for t in self.terms})

    def truncated(self, max_power) -> "EdgeExpansion":
        max_power = Fraction(max_power)
        kept = tuple(t for t in self.terms if t.d_power <= max_power)
        return EdgeExpansion(
            self.edge, self.n, self.beta, kept,
            min(self.complete_through, max_power), self.notes,
        )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "beta": self.beta,
            "edge": self.edge,
            "complete_through": str(self.complete_through),
            "terms": [
                {
                    "label": t.label,
                    "d_power": str(t.d_power),
                    "log_power": t.log_power,
                    "coeff": t.coeff,
                }
                for t in self.terms
            ],
            "notes": list(self.notes),
        }


# ---------------------------------------------------------------- right edge


def right_edge_exponent(n: int, beta: int) -> float:
    """Power ``p`` of ``t`` in the right-edge law: one less than the Stirling power."""
    return stirling_exponent(n, beta) - 1.0


def right_edge_constant(n: int, beta: int) -> float:
    """``A_N / Gamma(p + 1)``: density ``~ const * t**p / D`` near ``N**-N``."""
    p = right_edge_exponent(n, beta)
    return math.exp(stirling_prefactor_log(n, beta) - math.lgamma(p + 1.0))


def right_edge_density(n: int, beta: int, d):
    """Leading right-edge density ``A_N t**p / (D p!)`` with ``t = -log D - N log N``.

    Zero beyond the support ``D > N**-N``.
    """
    if beta not in (1, 2) or n < 2:
        raise DomainError("need n >= 2 and beta in {1, 2}")
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr <= 0):
        raise DomainError("right_edge_density needs d > 0")
    p = right_edge_exponent(n, beta)
    t = -np.log(d_arr) - n * math.log(n)
    inside = t >= 0
    tt = np.where(inside, t, 0.0)
    powered = np.power(tt, p) if p > 0 else np.ones_like(tt)
    out = np.where(inside, right_edge_constant(n, beta) * powered / d_arr, 0.0)
    return float(out) if np.ndim(d) == 0 else out


def right_edge_density_g(n: int, beta: int, g, log_form: bool = False):
    """Right-edge law for G: ``A~ (1 - g**n)**p / g`` with ``A~ = A_N n / p!``.

    With ``log_form=True`` the factor ``1 - g**n`` is replaced by the exact
    ``-n log g``, which is the determinant law pushed through ``G = n D**(1/n)``
    without the additional linearization.
    """
    g_arr = np.asarray(g, dtype=float)
    if np.any(g_arr <= 0) or np.any(g_arr > 1):
        raise DomainError("right_edge_density_g needs 0 < g <= 1")
    p = right_edge_exponent(n, beta)
    base = -n * np.log(g_arr) if log_form else 1.0 - g_arr**n
    base = np.maximum(base, 0.0)
    powered = np.power(base, p) if p > 0 else np.ones_like(base)
    out = n * right_edge_constant(n, beta) * powered / g_arr
    return float(out) if np.ndim(g) == 0 else out


# ----------------------------------------------------------------- left edge


def _bracket(const: float, weighted: list[tuple[int, float, float]], psi) -> float:
    # entries (sign, w, x) stand for sign * w * psi(x); the 0 psi(0) convention
    # applies to w * psi(x) before the sign
    return math.fsum([const] + [s * weighted_digamma(w, x, psi) for s, w, x in weighted])


def left_edge_coeffs_complex(n: int, psi=digamma) -> EdgeExpansion:
    """Small-``D`` expansion of the complex (beta = 2) density, ``n >= 3``.

    Terms ``Z + X D log D + X~ D``; for ``n = 3`` also the ``D**2`` group,
    where the pole at ``M = -3`` is only of second order. ``psi`` is the
    digamma used in the brackets; it is a parameter so that tests can shift it.
    """
    if n < 3:
        raise DomainError("n = 2 has the closed form 6 sqrt(1 - 4D); use density_n2_closed")
    nn = n * n
    z = _gamma_ratio([2 * nn], [2 * (nn - n), 2 * n])
    x = _gamma_ratio([2 * nn], [2 * (nn - 2 * n), 2 * n, 2 * (n - 1)])
    bracket = _bracket(
        n - 4.0,
        [(1, n, nn - 2 * n), (-1, 2.0, 1.0), (-1, n - 2.0, n - 2.0)],
        psi,
    )
    terms = [
        EdgeTerm(Fraction(0), 0, z, "Z"),
        EdgeTerm(Fraction(1), 1, x, "X"),
        EdgeTerm(Fraction(1), 0, x * bracket, "X~"),
    ]
    complete = Fraction(1)
    notes = []
    if n == 3:
        # second-order pole at M = -3 for n = 3 only
        terms += [
            EdgeTerm(Fraction(2), 2, 0.0, "V"),
            EdgeTerm(Fraction(2), 1, 6.0 * math.factorial(7), "V~"),
            EdgeTerm(Fraction(2), 0, -15.0 * math.factorial(7), "V~~"),
        ]
        complete = Fraction(2)
    else:
        notes.append("truncated at order D: the D**2 group needs polygamma of order >= 1")
    return EdgeExpansion("left", n, 2, tuple(terms), complete, tuple(notes))


def left_edge_coeffs_real(n: int, psi=digamma) -> EdgeExpansion:
    """Small-``D`` expansion of the real (beta = 1) density, ``n >= 3``.

    Terms ``Z + Y D**(1/2) + X D log D + X~ D + W D**(3/2) log D + W~ D**(3/2)``.
    The second-order poles at ``M = -2`` (for ``n = 3``) and ``M = -5/2``
    (for ``n = 3, 4``) degenerate; those coefficients are fixed values.
    """
    if n < 3:
        raise DomainError("n = 2 has the closed form P(D) = 4; use density_n2_closed")
    top2 = n * n + n  # doubled argument of Gamma((N^2+N)/2)
    z = _gamma_ratio([top2], [n * n - n, 2 * n], scale=Fraction(2 ** (n - 1)))
    y = -_gamma_ratio(
        [top2], [n * n - 2 * n, n + 1, 2 * (n - 1)],
        scale=Fraction(2 ** (n - 1)), pi_half_powers=1,
    )
    if n == 3:
        x, x_t = 0.0, 12.0 * math.factorial(5)
    else:
        x = -_gamma_ratio(
            [top2], [n * n - 3 * n, 2 * n, 2 * (n - 2)],
            scale=Fraction(2 ** (2 * n - 3)),
        )
        x_t = x * _bracket(
            n - 8.0,
            [
                (1, n, (n * n - 3 * n) / 2.0),
                (-1, 1.5, 0.5),
                (-1, 2.0, 1.0),
                (-1, (n - 3) / 2.0, (n - 3) / 2.0),
                (-1, (n - 4) / 2.0, (n - 4) / 2.0),
            ],
            psi,
        )
    if n == 3:
        w, w_t = 0.0, 4.0 * math.factorial(5)
    elif n == 4:
        w, w_t = 0.0, 2.0**8 * math.factorial(8)
    else:
        w = -_gamma_ratio(
            [top2], [n * n - 4 * n, n + 1, 2 * (n - 1), 2 * (n - 3)],
            scale=Fraction(2 ** (2 * n - 3), 3), pi_half_powers=1,
        )
        w_t = w * _bracket(
            n - 35.0 / 3.0,
            [
                (1, n, (n * n - 4 * n) / 2.0),
                (-1, 2.5, 0.5),
                (-1, 2.0, 1.0),
                (-1, (n - 4) / 2.0, (n - 4) / 2.0),
                (-1, (n - 5) / 2.0, (n - 5) / 2.0),
            ],
            psi,
        )
    half = Fraction(1, 2)
    terms = (
        EdgeTerm(Fraction(0), 0, z, "Z"),
        EdgeTerm(half, 0, y, "Y"),
        EdgeTerm(Fraction(1), 1, x, "X"),
        EdgeTerm(Fraction(1), 0, x_t, "X~"),
        EdgeTerm(3 * half, 1, w, "W"),
        EdgeTerm(3 * half, 0, w_t, "W~"),
    )
    return EdgeExpansion("left", n, 1, terms, 3 * half)


def left_edge_expansion(n: int, beta: int) -> EdgeExpansion:
    if beta == 2:
        return left_edge_coeffs_complex(n)
    if beta == 1:
        return left_edge_coeffs_real(n)
    raise DomainError(f"beta must be 1 or 2, got {beta!r}")


def left_edge_eval(e: EdgeExpansion, d, max_power=None):
    """Sum ``coeff * d**d_power * log(d)**log_power`` over the stored terms."""
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr <= 0):
        raise DomainError("left_edge_eval needs d > 0")
    log_d = np.log(d_arr)
    total = np.zeros_like(d_arr)
    for term in e.terms:
        if max_power is not None and term.d_power > Fraction(max_power):
            continue
        if term.coeff == 0.0:
            continue
        total = total + term.coeff * d_arr ** float(term.d_power) * log_d**term.log_power
    return float(total) if np.ndim(d) == 0 else total


def left_edge_order_sizes(e: EdgeExpansion, d) -> dict[Fraction, np.ndarray]:
    """Magnitude of each power-of-``D`` group at ``d``; used for truncation estimates."""
    d_arr = np.asarray(d, dtype=float)
    log_d = np.log(d_arr)
    sizes: dict[Fraction, np.ndarray] = {}
    for term in e.terms:
        val = term.coeff * d_arr ** float(term.d_power) * log_d**term.log_power
        sizes[term.d_power] = sizes.get(term.d_power, 0.0) + val
    return {k: np.abs(v) for k, v in sorted(sizes.items())}


def left_edge_integral(e: EdgeExpansion, d: float, m: float = 0.0) -> float:
    """``int_0^d D**m * expansion(D) dD`` in closed form."""
    if d <= 0:
        return 0.0
    log_d = math.log(d)
    parts = []
    for term in e.terms:
        if term.coeff == 0.0:
            continue
        a1 = float(term.d_power) + m + 1.0
        k = term.log_power
        # int_0^d D^(a1-1) log^k D dD = d^a1 sum_j (-1)^j k!/(k-j)! log^(k-j) d / a1^(j+1)
        inner = math.fsum(
            (-1) ** j * math.factorial(k) / math.factorial(k - j) * log_d ** (k - j) / a1 ** (j + 1)
            for j in range(k + 1)
        )
        parts.append(term.coeff * d**a1 * inner)
    return math.fsum(parts)


# ------------------------------------------------------- residue-route oracle


def pole_laurent_coefficients(n: int, beta: int, pole: float, order: int,
                              radius: float | None = None, nodes: int = 256) -> list[float]:
    """Coefficients of ``D**(-1-pole) * log(D)**k``, ``k < order``, from one pole.

    Each is a circle integral ``(1/2 pi i) oint <D^M> (-(M - pole))**k / k! dM``
    evaluated by the trapezoid rule, which converges geometrically on a
    circle that encloses no other pole. The default radius shrinks like
    ``1/n`` because the moments vary like ``exp(-M n log n)`` across the
    circle and a wide circle loses digits to cancellation.
    """
    if radius is None:
        radius = min(0.2, 0.5 / n)
    theta = 2.0 * math.pi * (np.arange(nodes) + 0.5) / nodes
    delta = radius * np.exp(1j * theta)
    values = np.exp(log_moment_d(n, beta, pole + delta))
    out = []
    for k in range(order):
        integrand = values * (-delta) ** k / math.factorial(k) * delta
        out.append(float(np.mean(integrand).real))
    return out


def left_edge_coeffs_numeric(n: int, beta: int, max_power: float) -> EdgeExpansion:
    """Left-edge series recomputed from residues up to ``D**max_power``.

    Pole orders are over-allocated (``k`` up to the generic order); spurious
    higher log powers come out as round-off zeros.
    """
    step = Fraction(1) if beta == 2 else Fraction(1, 2)
    terms = []
    power = Fraction(0)
    while power <= Fraction(max_power):
        pole = -1.0 - float(power)
        order = int(power) + 1 if beta == 2 else int(power + Fraction(1, 2)) + 1
        for k, c in enumerate(pole_laurent_coefficients(n, beta, pole, order)):
            terms.append(EdgeTerm(power, k, c, f"res[{power},{k}]"))
        power += step
    return EdgeExpansion("left", n, beta, tuple(terms), Fraction(max_power))
