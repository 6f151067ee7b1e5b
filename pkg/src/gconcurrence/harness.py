"""Histograms, goodness-of-fit statistics, moment tables and concentration scans."""

from __future__ import annotations

import io
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from scipy import stats

from .ensembles import SampleArrays, SystemSpec, sample_arrays
from .errors import ContractError, DomainError
from .inverse_transform import DensityCurve
from .moments import concentration_point, det_moment_induced, g_moment_induced

__all__ = [
    "HistogramData",
    "FitReport",
    "MomentRow",
    "ScanRow",
    "histogram_from_samples",
    "run_histogram_experiment",
    "compare_density",
    "ks_distance",
    "jackknife_mean",
    "moment_check",
    "concentration_scan",
    "MAX_DIMENSION_PRODUCT",
]

JACKKNIFE_BLOCKS = 100
MIN_EXPECTED = 10.0
MAX_DIMENSION_PRODUCT = 200_000


@dataclass(frozen=True)
class HistogramData:
    variable: str
    n: int
    beta: int
    edges: np.ndarray
    counts: np.ndarray
    total: int
    seed: int | None = None

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.total * np.diff(self.edges))

    def to_csv(self, stream=None) -> str:
        buf = io.StringIO()
        if self.seed is not None:
            buf.write(f"# seed={self.seed}\n")
        buf.write(f"# n={self.n} beta={self.beta} variable={self.variable} total={self.total}\n")
        buf.write("bin_left,bin_right,count,density\n")
        for lo, hi, c, d in zip(self.edges[:-1], self.edges[1:], self.counts, self.density):
            buf.write(f"{lo:.17g},{hi:.17g},{int(c)},{d:.17g}\n")
        text = buf.getvalue()
        if stream is not None:
            stream.write(text)
        return text


@dataclass(frozen=True)
class FitReport:
    ks_distance: float
    chi_square: float
    dof: int
    max_abs_residual_sigma: float

    @property
    def chi_square_per_dof(self) -> float:
        return self.chi_square / self.dof if self.dof > 0 else math.nan

    def to_dict(self) -> dict:
        d = asdict(self)
        d["chi_square_per_dof"] = self.chi_square_per_dof
        return d


@dataclass(frozen=True)
class MomentRow:
    order: float
    exact: float
    empirical: float
    std_error: float
    z_score: float


@dataclass(frozen=True)
class ScanRow:
    j: int
    n: int
    k: int
    mean_g: float
    var_g: float
    mean_std_error: float
    target: float


def _support_top(variable: str, n: int) -> float:
    if variable == "D":
        return float(n) ** (-n)
    if variable == "G":
        return 1.0
    raise DomainError(f"variable must be 'D' or 'G', got {variable!r}")


def histogram_from_samples(samples: SampleArrays, bins: int, variable: str) -> HistogramData:
    """Uniform bins on ``[0, n**-n]`` (D) or ``[0, 1]`` (G)."""
    n = samples.spec.n
    top = _support_top(variable, n)
    if int(bins) != bins or bins < 1:
        raise DomainError("bins must be a positive integer")
    data = samples.det if variable == "D" else samples.g
    edges = np.linspace(0.0, top, int(bins) + 1)
    # right-closed last bin: the maximally mixed value itself belongs inside
    idx = np.minimum((np.clip(data, 0.0, top) / top * bins).astype(np.int64), bins - 1)
    counts = np.bincount(idx, minlength=int(bins))
    return HistogramData(variable, n, samples.spec.beta, edges, counts, len(data), samples.seed)


def run_histogram_experiment(spec: SystemSpec, samples: int, bins: int, variable: str,
                             seed: int, threads: int | None = None) -> HistogramData:
    if samples < 1000:
        raise DomainError("histogram experiments need at least 1000 samples")
    arr = sample_arrays(spec, samples, seed, threads=threads)
    return histogram_from_samples(arr, bins, variable)


def _bin_probabilities(h: HistogramData, cdf) -> np.ndarray:
    c = np.asarray(cdf(h.edges), dtype=float)
    return np.diff(c)


def _merge_small(observed: np.ndarray, expected: np.ndarray, floor: float):
    """Merge adjacent bins left to right until each expected count reaches ``floor``."""
    obs_out, exp_out = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= floor:
            obs_out.append(o_acc)
            exp_out.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if exp_out:
            obs_out[-1] += o_acc
            exp_out[-1] += e_acc
        else:
            obs_out.append(o_acc)
            exp_out.append(e_acc)
    return np.array(obs_out), np.array(exp_out)


def compare_density(h: HistogramData, curve) -> FitReport:
    """KS distance on the binned CDFs, Pearson chi-square and Poisson residuals.

    ``curve`` is a :class:`DensityCurve` or any callable CDF.
    """
    if h.total <= 0:
        raise ContractError("histogram holds no samples")
    if isinstance(curve, DensityCurve):
        if curve.variable != h.variable or curve.n != h.n or curve.beta != h.beta:
            raise ContractError("histogram and curve describe different quantities")
        cdf = curve.cdf
    elif callable(curve):
        cdf = curve
    else:
        raise ContractError("curve must be a DensityCurve or a CDF callable")
    probs = np.clip(_bin_probabilities(h, cdf), 0.0, None)
    expected = h.total * probs
    emp_cdf = np.concatenate(([0.0], np.cumsum(h.counts))) / h.total
    ks = float(np.max(np.abs(emp_cdf - np.asarray(cdf(h.edges)))))
    obs, exp = _merge_small(h.counts.astype(float), expected, MIN_EXPECTED)
    with np.errstate(divide="ignore", invalid="ignore"):
        resid = np.where(exp > 0, (obs - exp) / np.sqrt(exp), np.where(obs > 0, np.inf, 0.0))
    chi2 = float(np.sum(resid**2))
    return FitReport(ks, chi2, max(len(obs) - 1, 0), float(np.max(np.abs(resid))))


def ks_distance(samples, cdf) -> float:
    """Kolmogorov-Smirnov distance of raw samples to a CDF callable."""
    return float(stats.kstest(np.asarray(samples), cdf).statistic)


def jackknife_mean(x: np.ndarray, blocks: int = JACKKNIFE_BLOCKS) -> tuple[float, float]:
    """Mean and its delete-one-block jackknife standard error."""
    x = np.asarray(x, dtype=float)
    if len(x) < blocks:
        raise DomainError(f"need at least {blocks} samples for the jackknife")
    parts = np.array_split(x, blocks)
    sums = np.array([p.sum() for p in parts])
    sizes = np.array([len(p) for p in parts])
    total, size = sums.sum(), sizes.sum()
    leave_out = (total - sums) / (size - sizes)
    mean = total / size
    se = math.sqrt((blocks - 1) / blocks * float(np.sum((leave_out - leave_out.mean()) ** 2)))
    return float(mean), se


def _exact_moment(spec: SystemSpec, order: float, of: str) -> float:
    if order == 0:
        return 1.0
    if of == "D":
        return det_moment_induced(spec.n, spec.k, spec.beta, order).real
    return g_moment_induced(spec.n, spec.k, spec.beta, order).real


def moment_check(spec: SystemSpec, samples: int, orders, seed: int, of: str = "D",
                 threads: int | None = None, data: SampleArrays | None = None) -> list[MomentRow]:
    """Empirical against exact moments of D or G, with jackknife errors."""
    if of not in ("D", "G"):
        raise DomainError(f"of must be 'D' or 'G', got {of!r}")
    orders = [float(m) for m in orders]
    if any(m < 0 for m in orders):
        raise DomainError("moment orders must be >= 0")
    arr = data if data is not None else sample_arrays(spec, samples, seed, threads=threads)
    logs = arr.det_log if of == "D" else np.log(arr.g)
    rows = []
    for m in orders:
        exact = _exact_moment(spec, m, of)
        vals = np.exp(m * logs) if m != 0 else np.ones_like(logs)
        emp, se = jackknife_mean(vals)
        diff = emp - exact
        z = 0.0 if diff == 0 else (diff / se if se > 0 else math.copysign(math.inf, diff))
        rows.append(MomentRow(m, exact, emp, se, z))
    return rows


def _dimensions(q: float, j: int, beta: int) -> tuple[int, int]:
    if q == 1:
        return j, j + 2 - beta
    frac = Fraction(q).limit_denominator(1000)
    if abs(float(frac) - q) > 1e-12:
        raise DomainError(f"q must be rational with a small denominator, got {q!r}")
    return j * frac.denominator, j * frac.numerator


def concentration_scan(q: float, j_values, beta: int, samples: int, seed: int,
                       max_dimension_product: int = MAX_DIMENSION_PRODUCT,
                       threads: int | None = None) -> list[ScanRow]:
    """Sample mean and variance of G along ``N = J l1, K = J l2`` with ``q = l2 / l1``.

    ``q = 1`` uses the Hilbert-Schmidt dimensions and targets ``1/e``.
    """
    q = float(q)
    if not q >= 1 or math.isinf(q):
        raise DomainError(f"q must be finite and >= 1, got {q!r}")
    target = math.exp(-1.0) if q == 1 else concentration_point(q)
    rows = []
    for i, j in enumerate(j_values):
        n, k = _dimensions(q, int(j), beta)
        if n * k > max_dimension_product:
            raise DomainError(f"N*K = {n * k} exceeds the cap {max_dimension_product}")
        arr = sample_arrays(SystemSpec(n, k, beta), samples, seed + i, threads=threads)
        mean, se = jackknife_mean(arr.g)
        rows.append(ScanRow(int(j), n, k, mean, float(np.var(arr.g, ddof=1)), se, target))
    return rows
