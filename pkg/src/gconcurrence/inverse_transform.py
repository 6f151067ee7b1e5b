"""Densities of D and G from the moment function.

With ``x = -log D`` the moment ``<D^M>`` is the Laplace transform of the
density of ``x``. Its support starts at ``x0 = N log N``, so after the shift
``t = x - x0`` the transform ``H(M) = <D^M> exp(M x0)`` decays like ``M**-p``
in the right half plane and the inverse is evaluated on a left-opening
hyperbola with the trapezoid rule (Weideman and Trefethen parameters). The
node count is stepped until two successive answers agree.

The inversion loses relative accuracy where the density of ``x`` is small,
i.e. at very small ``D``. The ``stitched`` method switches there to the
left-edge expansion with a smooth cosine blend; the switch point is chosen
where the expansion's truncation estimate drops below the inversion's
error estimate.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .asymptotics import (
    EdgeExpansion,
    EdgeTerm,
    left_edge_eval,
    left_edge_expansion,
    left_edge_integral,
    left_edge_order_sizes,
    right_edge_constant,
    right_edge_exponent,
)
from .errors import AccuracyError, CapabilityError, DomainError
from .moments import _check_beta, _check_n, log_moment_d

__all__ = [
    "DensityCurve",
    "METHODS",
    "MAX_INVERSION_N",
    "density_n2_closed",
    "density_d",
    "density_g",
    "density_d_bromwich",
    "default_grid_d",
    "default_grid_g",
    "invert_shifted",
    "stitch_plan",
]

METHODS = ("closed_form", "contour_inversion", "edge_asymptote", "stitched")
MAX_INVERSION_N = 12
NEG_TOLERANCE = 1e-8
TAIL_FRACTION = 1e-6

# hyperbola parameters, optimal for a trapezoid rule with `nodes` points
_ALPHA = 1.1721
_H_SCALE = 1.0818
_MU_SCALE = 4.4921
_NODE_STEPS = (12, 16, 20, 24, 32, 40, 48, 64)


# ------------------------------------------------------------------- curves


@dataclass(frozen=True)
class DensityCurve:
    """A density sampled on an ascending grid.

    ``values`` are stored as computed (they may ring slightly negative);
    :attr:`clipped` and the CSV writer clip them at zero.
    """

    variable: str
    n: int
    beta: int
    grid: np.ndarray
    values: np.ndarray
    method: str
    err_estimate: np.ndarray
    point_methods: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variable not in ("D", "G"):
            raise DomainError(f"variable must be 'D' or 'G', got {self.variable!r}")
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}")
        if len(self.grid) != len(self.values):
            raise DomainError("grid and values differ in length")
        if np.any(np.diff(self.grid) <= 0):
            raise DomainError("grid must be strictly ascending")
        if np.min(self.values, initial=0.0) < -NEG_TOLERANCE * max(1.0, np.max(np.abs(self.values), initial=0.0)):
            raise AccuracyError(
                "density rings below the negativity tolerance",
                achieved=float(-np.min(self.values)),
            )

    @property
    def clipped(self) -> np.ndarray:
        return np.maximum(self.values, 0.0)

    @property
    def support_end(self) -> float:
        return self.n ** (-self.n) if self.variable == "D" else 1.0

    def negative_mass(self) -> float:
        """Integral of the negative part before clipping (trapezoid)."""
        neg = np.minimum(self.values, 0.0)
        return float(-np.trapezoid(neg, self.grid)) if len(neg) > 1 else 0.0

    # edge completion -------------------------------------------------------

    def _right_coefficient(self, m: float) -> tuple[float, float]:
        """Leading ``(c, p)`` of the integrand ``~ c s**p`` at the right end.

        ``s`` is ``t`` for D curves (integrating in ``x``) and ``1 - g`` for G.
        """
        n, beta = self.n, self.beta
        p = right_edge_exponent(n, beta)
        k = right_edge_constant(n, beta)
        if self.variable == "D":
            return k * self.support_end**m, p
        return n * k * n**p, p

    def _left_tail(self, lo: float, m: float) -> float:
        if lo <= 0:
            return 0.0
        expansion = _left_series(self.n, self.beta)
        if self.variable == "D":
            return left_edge_integral(expansion, lo, m)
        # G = n D**(1/n): int_0^g G^m P(G) dG = n^m int_0^{(g/n)^n} D^(m/n) P(D) dD
        return self.n**m * left_edge_integral(expansion, (lo / self.n) ** self.n, m / self.n)

    def integral(self, m: float = 0.0) -> float:
        """``int v**m P(v) dv`` over the whole support, edge-completed.

        Trapezoid in ``x = -log D`` (D curves) or in ``g`` (G curves). On a
        uniform grid whose first step from the right end equals the spacing,
        the right end gets the generalized Euler-Maclaurin (Navot) term for an
        ``s**p`` endpoint; otherwise the right-edge law is integrated over the
        gap. The left tail below the grid is the left-edge series integrated
        in closed form.
        """
        vals = self.clipped
        if self.variable == "D":
            x0 = self.n * math.log(self.n)
            s = -np.log(self.grid)[::-1] - x0  # ascending distance from the right end
            f = (self.grid ** (m + 1.0) * vals)[::-1]
        else:
            s = (1.0 - self.grid)[::-1]
            f = (self.grid**m * vals)[::-1]
        if s[0] < 0:
            raise DomainError("grid extends beyond the support")
        c, p = self._right_coefficient(m)
        if s[0] == 0.0:
            s, f = s[1:], f[1:]  # the endpoint value c * 0**p enters through c
        spacing = np.diff(s)
        uniform = len(s) > 8 and np.allclose(spacing, spacing[0], rtol=1e-9, atol=0)
        if uniform and math.isclose(s[0], spacing[0], rel_tol=1e-9):
            body = _navot_gregory(f, spacing[0], c, p)
        else:
            body = float(np.trapezoid(f, s)) + _right_gap(c, p, s[0], m if self.variable == "D" else 0.0)
        lo = float(self.grid[0])
        return body + self._left_tail(lo, m)

    def moment(self, m: float) -> float:
        return self.integral(m)

    def cdf(self, points) -> np.ndarray:
        """CDF at ``points`` (linear interpolation of the cumulative integral)."""
        vals = self.clipped
        pts = np.asarray(points, dtype=float)
        base = self._left_tail(float(self.grid[0]), 0.0)
        if self.variable == "D":
            xs = np.log(self.grid)
            f = self.grid * vals
        else:
            xs = self.grid
            f = vals
        cum = base + np.concatenate(([0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(xs))))
        total = self.integral(0.0)
        q = np.log(np.clip(pts, 1e-300, None)) if self.variable == "D" else pts
        out = np.interp(q, xs, cum)
        out = np.where(q < xs[0], 0.0, out)
        # the small piece between the last grid point and the support end
        out = np.where(pts >= self.grid[-1], total, out)
        below = pts < self.grid[0]
        if np.any(below):
            out[below] = [self._left_tail(float(v), 0.0) for v in pts[below]]
        return np.clip(out / total, 0.0, 1.0)

    # output ----------------------------------------------------------------

    def to_csv(self, stream=None) -> str:
        """Write ``abscissa,density,method,err_estimate`` rows (17 digits)."""
        buf = io.StringIO()
        for key in sorted(self.meta):
            buf.write(f"# {key}={self.meta[key]}\n")
        buf.write("abscissa,density,method,err_estimate\n")
        methods = self.point_methods or (self.method,) * len(self.grid)
        for a, v, meth, e in zip(self.grid, self.clipped, methods, self.err_estimate):
            buf.write(f"{a:.17g},{v:.17g},{meth},{e:.17g}\n")
        text = buf.getvalue()
        if stream is not None:
            stream.write(text)
        return text


def _navot_gregory(f: np.ndarray, step: float, c0: float, p: float) -> float:
    """``int_0^oo`` of samples ``f(k step)``, ``k >= 1``, with ``f ~ s**p (c0 + c1 s + ...)``.

    The singular end gets the Navot terms ``-zeta(-p-j) c_j step**(p+j+1)``,
    with ``c1..c3`` fitted from the first samples; the far end gets the
    third-order Gregory correction.
    """
    s = step * np.arange(1, 4)
    g = f[:3] / s**p - c0
    c_rest = np.linalg.solve(np.vander(s, 4, increasing=True)[:, 1:], g)
    coeffs = np.concatenate(([c0], c_rest))
    near = -sum(special.zeta(-p - j) * cj * step ** (p + j + 1) for j, cj in enumerate(coeffs))
    total = step * (math.fsum(f[:-1]) + 0.5 * f[-1])
    d1 = f[-1] - f[-2]
    d2 = f[-1] - 2 * f[-2] + f[-3]
    d3 = f[-1] - 3 * f[-2] + 3 * f[-3] - f[-4]
    far = -step * (d1 / 12.0 + d2 / 24.0 + 19.0 * d3 / 720.0)
    return total + near + far


def _right_gap(c: float, p: float, s1: float, m: float) -> float:
    """``int_0^s1 c s**p exp(-m s) ds``: the right-edge law across a grid gap."""
    if m > 0:
        return c * special.gammainc(p + 1.0, m * s1) * special.gamma(p + 1.0) / m ** (p + 1.0)
    return c * s1 ** (p + 1.0) / (p + 1.0)


# ----------------------------------------------------------------- N = 2


def density_n2_closed(beta: int, variable: str, grid) -> DensityCurve:
    """Exact two-qubit (rebit) densities.

    Complex: ``6 sqrt(1 - 4D)`` and ``3 G sqrt(1 - G**2)``; real: ``4`` and ``2G``.
    """
    beta = _check_beta(beta)
    g = np.asarray(grid, dtype=float)
    top = 0.25 if variable == "D" else 1.0
    if variable not in ("D", "G"):
        raise DomainError(f"variable must be 'D' or 'G', got {variable!r}")
    if g.size and (np.min(g) < 0 or np.max(g) > top):
        raise DomainError(f"grid must lie in [0, {top}] for variable {variable}")
    if variable == "D":
        vals = 6.0 * np.sqrt(1.0 - 4.0 * g) if beta == 2 else np.full_like(g, 4.0)
    else:
        vals = 3.0 * g * np.sqrt(1.0 - g * g) if beta == 2 else 2.0 * g
    return DensityCurve(variable, 2, beta, g, vals, "closed_form", np.zeros_like(g))


def _left_series(n: int, beta: int) -> EdgeExpansion:
    """Left-edge series, with the Taylor series of the closed form for ``n = 2``."""
    if n >= 3:
        return left_edge_expansion(n, beta)
    if beta == 1:
        return EdgeExpansion("left", 2, 1, (EdgeTerm(Fraction(0), 0, 4.0, "Z"),), Fraction(10))
    # 6 sqrt(1 - 4D) = 6 - 12 D - 12 D^2 - 24 D^3 - 60 D^4 - ...
    coeffs = [6.0, -12.0, -12.0, -24.0, -60.0]
    terms = tuple(EdgeTerm(Fraction(k), 0, c, f"c{k}") for k, c in enumerate(coeffs))
    return EdgeExpansion("left", 2, 2, terms, Fraction(len(coeffs) - 1))


# -------------------------------------------------------------- inversion


def invert_shifted(n: int, beta: int, t, nodes: int) -> np.ndarray:
    """Inverse Laplace transform of ``H(M) = <D^M> exp(M N log N)`` at ``t > 0``.

    Returns the density of ``t = -log D - N log N``, which equals ``D P(D)``.
    """
    t = np.asarray(t, dtype=float)[:, None]
    x0 = n * math.log(n)
    h = _H_SCALE / nodes
    mu = _MU_SCALE * nodes / t
    u = np.arange(nodes + 1) * h
    z = mu * (1.0 + np.sin(1j * u - _ALPHA))
    dz = 1j * mu * np.cos(1j * u - _ALPHA)
    terms = np.exp(z * t + log_moment_d(n, beta, z) + z * x0) * dz
    terms[:, 0] *= 0.5
    return (h / math.pi) * np.imag(terms.sum(axis=1))


def _invert_adaptive(n: int, beta: int, t: np.ndarray, tol: float):
    """Invert with each node count of ``_NODE_STEPS`` and keep the most stable.

    An interior step's error estimate is the larger of its differences to
    the neighbouring steps, so that an accidental agreement of one pair is
    not mistaken for convergence. Returns values and error estimates (both
    for ``D P(D)``) and the node counts used. ``tol`` is accepted for
    interface symmetry; every step is always evaluated.
    """
    del tol
    rows = np.array([invert_shifted(n, beta, t, k) for k in _NODE_STEPS])
    diffs = np.abs(np.diff(rows, axis=0))
    errs = np.maximum(diffs[:-1], diffs[1:])
    pick = np.argmin(errs, axis=0)
    cols = np.arange(t.size)
    nodes = np.asarray(_NODE_STEPS[1:-1])[pick]
    return rows[pick + 1, cols], errs[pick, cols], nodes


def _check_inversion_n(n: int, allow_large: bool) -> None:
    if n > MAX_INVERSION_N and not allow_large:
        raise CapabilityError(
            f"contour inversion is capped at n <= {MAX_INVERSION_N}; use the edge "
            "expansions and sampling for larger n (or pass allow_large=True)"
        )


def _check_d_grid(n: int, d: np.ndarray) -> None:
    if d.size == 0:
        raise DomainError("empty grid")
    if np.any(~np.isfinite(d)) or np.any(d <= 0) or np.any(d >= n ** (-n)):
        raise DomainError(f"grid must lie strictly inside (0, {n}**-{n})")


# ------------------------------------------------------------- stitching


def _expansion_error(n: int, beta: int, d: np.ndarray) -> np.ndarray:
    """Relative truncation estimate of the left series at ``d``.

    The first omitted group is extrapolated geometrically from the last two.
    """
    e = _left_series(n, beta)
    groups = left_edge_order_sizes(e, d)
    sizes = list(groups.values())
    total = np.abs(left_edge_eval(e, d))
    if n == 2 and beta == 1:
        return np.zeros_like(d)
    last = sizes[-1]
    prev = sizes[-2] if len(sizes) > 1 else np.ones_like(d)
    with np.errstate(divide="ignore", invalid="ignore"):
        nxt = np.where(prev > 0, last * last / prev, last)
        rel = nxt / total
    return np.where(np.isfinite(rel), rel, np.inf)


@dataclass(frozen=True)
class StitchPlan:
    """Blend window in ``t = -log D - N log N``: inversion below, series above."""

    t_switch: float
    half_width: float
    t_max: float

    def weight(self, t: np.ndarray) -> np.ndarray:
        """Weight of the series (0 = pure inversion, 1 = pure series)."""
        if not math.isfinite(self.t_switch):
            return np.zeros_like(t)
        lo = self.t_switch - self.half_width
        r = np.clip((t - lo) / (2.0 * self.half_width), 0.0, 1.0)
        return 0.5 * (1.0 - np.cos(math.pi * r))


@lru_cache(maxsize=64)
def stitch_plan(n: int, beta: int, tol: float = 1e-10) -> StitchPlan:
    """Pick where the left series takes over from the inversion.

    ``t_switch`` is the smallest probe ``t`` beyond which the series
    estimate stays below the inversion estimate; ``t_max`` is where the
    series alone reaches ``tol`` (the default grids stop there).
    """
    x0 = n * math.log(n)
    t = np.arange(0.5, 120.0, 0.25)
    d = np.exp(-x0 - t)
    q, err_inv, _ = _invert_adaptive(n, beta, t, tol)
    rel_inv = err_inv / (np.abs(q) + 1e-300)
    # the inversion degrades monotonically beyond its best point
    best = int(np.argmin(rel_inv))
    envelope = rel_inv.copy()
    envelope[best:] = np.maximum.accumulate(rel_inv[best:])
    envelope[:best] = np.inf
    rel_exp = _expansion_error(n, beta, np.exp(-x0 - t))
    half = 0.5
    worst = np.maximum(rel_exp, envelope)
    if np.min(worst) >= envelope[-1]:
        t_switch = math.inf
    else:
        t_switch = float(t[int(np.argmin(worst))])
    reach = np.nonzero(rel_exp <= tol)[0]
    t_max = float(t[reach[0]]) if reach.size else float(t[-1])
    if math.isfinite(t_switch):
        t_max = max(t_max, t_switch + half)
    return StitchPlan(t_switch, half, t_max)


def _evaluate_d(n: int, beta: int, d: np.ndarray, method: str, tol: float):
    """Density values, error estimates and per-point labels at ``d``."""
    x0 = n * math.log(n)
    t = -np.log(d) - x0
    if method == "edge_asymptote":
        from .asymptotics import right_edge_density

        series = _left_series(n, beta)
        use_left = d < 0.5 * n ** (-n)
        vals = np.where(use_left, left_edge_eval(series, d), right_edge_density(n, beta, d))
        # the right law's first neglected order is relative O(t)
        err = np.abs(vals) * np.where(use_left, _expansion_error(n, beta, d), np.abs(t))
        labels = tuple("edge_asymptote" for _ in d)
        return vals, err, labels
    if method == "contour_inversion":
        q, q_err, _ = _invert_adaptive(n, beta, t, tol)
        return q / d, q_err / d, tuple("contour_inversion" for _ in d)
    # stitched
    plan = stitch_plan(n, beta)
    w = plan.weight(t)
    vals = np.zeros_like(d)
    err = np.zeros_like(d)
    inv_idx = w < 1.0
    if np.any(inv_idx):
        q, q_err, _ = _invert_adaptive(n, beta, t[inv_idx], tol)
        vals[inv_idx] = (1.0 - w[inv_idx]) * q / d[inv_idx]
        err[inv_idx] = (1.0 - w[inv_idx]) * q_err / d[inv_idx]
    ser_idx = w > 0.0
    if np.any(ser_idx):
        series = _left_series(n, beta)
        sv = left_edge_eval(series, d[ser_idx])
        vals[ser_idx] += w[ser_idx] * sv
        err[ser_idx] += w[ser_idx] * _expansion_error(n, beta, d[ser_idx]) * np.abs(sv)
    labels = tuple(
        "contour_inversion" if wi == 0.0 else ("edge_asymptote" if wi == 1.0 else "stitched")
        for wi in w
    )
    return vals, err, labels


def _accuracy_check(vals, err, tol, what, abscissa):
    """Relative test in the bulk, absolute in the tails.

    The bulk is where the mass density on a log scale, ``v P(v)``, is above
    ``TAIL_FRACTION`` of its peak; elsewhere the error is measured against
    that threshold instead of the (vanishing) density itself.
    """
    mass = np.abs(vals) * abscissa
    floor = TAIL_FRACTION * np.max(mass, initial=0.0) / abscissa
    rel = err / (np.maximum(np.abs(vals), floor) + 1e-300)
    if np.any(~np.isfinite(vals)) or np.nanmax(rel) > tol:
        worst = float(np.nanmax(rel)) if np.any(np.isfinite(rel)) else math.inf
        raise AccuracyError(f"{what}: error estimate {worst:.3g} exceeds {tol:g}", achieved=worst)


def density_d(n: int, beta: int, grid, method: str = "contour_inversion",
              tol: float = 1e-6, allow_large: bool = False) -> DensityCurve:
    """``P_N(D)`` over the Hilbert-Schmidt measure on ``grid`` inside ``(0, n**-n)``.

    ``method`` is ``contour_inversion`` (default), ``stitched`` or
    ``edge_asymptote``. Raises :class:`AccuracyError` when an error estimate
    exceeds ``tol`` relative to the density (plus a ``1e-8`` floor).
    """
    n, beta = _check_n(n), _check_beta(beta)
    if method not in ("contour_inversion", "stitched", "edge_asymptote"):
        raise DomainError(f"density_d: unsupported method {method!r}")
    _check_inversion_n(n, allow_large)
    d = np.asarray(grid, dtype=float)
    _check_d_grid(n, d)
    vals, err, labels = _evaluate_d(n, beta, d, method, tol)
    if method != "edge_asymptote":
        _accuracy_check(vals, err, tol, "density_d", d)
    meta = {"n": n, "beta": beta, "variable": "D", "method": method}
    if method == "stitched":
        plan = stitch_plan(n, beta)
        meta["blend_window_t"] = f"[{plan.t_switch - plan.half_width:.6g}, {plan.t_switch + plan.half_width:.6g}]"
    return DensityCurve("D", n, beta, d, vals, method, err, labels, meta)


def density_g(n: int, beta: int, grid, method: str = "stitched",
              tol: float = 1e-6, allow_large: bool = False) -> DensityCurve:
    """``P_N(G)`` from ``G P(G) = N D P(D)`` with ``D = (G/N)**N``.

    ``grid`` lies in ``[0, 1]``; the endpoints take their limiting values.
    """
    n, beta = _check_n(n), _check_beta(beta)
    _check_inversion_n(n, allow_large)
    g = np.asarray(grid, dtype=float)
    if g.size == 0 or np.any(~np.isfinite(g)) or np.any(g < 0) or np.any(g > 1):
        raise DomainError("G grid must lie in [0, 1]")
    inner = (g > 0) & (g < 1)
    d = (g[inner] / n) ** n
    vals = np.zeros_like(g)
    err = np.zeros_like(g)
    labels = ["edge_asymptote"] * len(g)
    if np.any(inner):
        # D underflows for tiny G; the series handles those points exactly
        tiny = d < 1e-300
        pd_vals = np.zeros_like(d)
        pd_err = np.zeros_like(d)
        ok = ~tiny
        if np.any(ok):
            v, e, lab = _evaluate_d(n, beta, d[ok], method, tol)
            pd_vals[ok], pd_err[ok] = v, e
            idx = np.nonzero(inner)[0][ok]
            for i, lbl in zip(idx, lab):
                labels[i] = lbl
        vals[inner] = n * d * pd_vals / g[inner]
        err[inner] = n * d * pd_err / g[inner]
    if np.any(g == 1.0) and right_edge_exponent(n, beta) == 0.0:
        vals[g == 1.0] = n * right_edge_constant(n, beta)
    if method != "edge_asymptote":
        _accuracy_check(vals, err, tol, "density_g", np.maximum(g, 1e-300))
    meta = {"n": n, "beta": beta, "variable": "G", "method": method}
    return DensityCurve("G", n, beta, g, vals, method, err, tuple(labels), meta)


# ----------------------------------------------------------------- grids


def default_grid_d(n: int, beta: int, spacing: float = 0.01) -> np.ndarray:
    """Geometric D grid ``N**-N exp(-k spacing)``, k >= 1, down to the series range."""
    plan = stitch_plan(_check_n(n), _check_beta(beta))
    count = int(math.ceil(plan.t_max / spacing))
    t = spacing * np.arange(count, 0, -1)
    return np.exp(-n * math.log(n) - t)


def default_grid_g(points: int = 2001) -> np.ndarray:
    """Uniform interior G grid ``k / (points + 1)``."""
    return np.arange(1, points + 1) / (points + 1.0)


# -------------------------------------------------------- Bromwich line


def density_d_bromwich(n: int, beta: int, d: float, c: float | None = None,
                       limit: int = 200) -> float:
    """``P_N(D)`` from the Bromwich integral along ``Re M = c``, for any ``D > 0``.

    Uses ``P = exp(c t) / (pi D) int_0^oo Re[exp(i y t) H(c + i y)] dy`` with
    Fourier-weighted quadrature. For ``D`` beyond the support (``t < 0``) the
    line is pushed far right, where closing the contour shows the value is
    zero up to the quadrature error that is returned.
    """
    n, beta = _check_n(n), _check_beta(beta)
    if not d > 0:
        raise DomainError("density_d_bromwich needs d > 0")
    x0 = n * math.log(n)
    t = -math.log(d) - x0
    if c is None:
        c = 1.0 if t > 0 else max(1.0, 40.0 / max(abs(t), 1e-12))
        c = min(c, 1e6)

    def h(y, part):
        val = np.exp(log_moment_d(n, beta, np.array([c + 1j * y])) + (c + 1j * y) * x0)[0]
        return val.real if part == 0 else val.imag

    if t == 0.0:
        val, _ = integrate.quad(lambda y: h(y, 0), 0, np.inf, limit=limit)
    else:
        w = abs(t)
        re, _ = integrate.quad(lambda y: h(y, 0), 0, np.inf, weight="cos", wvar=w, limlst=limit)
        im, _ = integrate.quad(lambda y: h(y, 1), 0, np.inf, weight="sin", wvar=w, limlst=limit)
        # Re[e^{iyt} H] = cos(yt) Re H - sin(yt) Im H
        val = re - math.copysign(1.0, t) * im
    return math.exp(c * t) * val / (math.pi * d)
