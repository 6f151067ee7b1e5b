"""Random pure states of an N x K system and their Schmidt spectra.

A Ginibre matrix ``A`` (N x K) gives the reduced state ``A A^dag / Tr``.
K = N + 2 - beta reproduces the Hilbert-Schmidt measure.

Sampling runs in fixed-size blocks. Block ``b`` of seed ``s`` draws from
its own stream ``SeedSequence(s, spawn_key=(b,))``, so a run's samples do
not depend on how blocks are spread over worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import DegenerateInputError, DomainError, PartialResultError

__all__ = [
    "SystemSpec",
    "SchmidtSpectrum",
    "SampleArrays",
    "BLOCK_SIZE",
    "sample_ginibre",
    "reduce_to_spectrum",
    "symmetric_monotones",
    "sample_arrays",
    "sample_batch",
    "block_rng",
    "thread_count",
    "write_samples_csv",
]

BLOCK_SIZE = 8192
THREADS_ENV = "GCONC_THREADS"
CLIP_TOL = 1e-14


@dataclass(frozen=True)
class SystemSpec:
    n: int
    k: int
    beta: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"n must be an integer >= 2, got {self.n!r}")
        if int(self.k) != self.k or self.k < self.n:
            raise DomainError(f"k must be an integer >= n, got {self.k!r}")
        if self.beta not in (1, 2):
            raise DomainError(f"beta must be 1 or 2, got {self.beta!r}")

    @classmethod
    def hs(cls, n: int, beta: int) -> "SystemSpec":
        """Hilbert-Schmidt mode, ``k = n + 2 - beta``."""
        return cls(n, n + 2 - beta, beta)

    @property
    def is_hs(self) -> bool:
        return self.k == self.n + 2 - self.beta


@dataclass(frozen=True)
class SchmidtSpectrum:
    values: tuple[float, ...]
    det_log: float
    g: float

    def __post_init__(self):
        v = self.values
        if any(a < b for a, b in zip(v, v[1:])):
            raise DomainError("Schmidt values must be in descending order")
        if v[-1] < 0:
            raise DomainError("Schmidt values must be non-negative")
        if abs(math.fsum(v) - 1.0) > 1e-10:
            raise DomainError("Schmidt values must sum to 1")
        if not 0.0 <= self.g <= 1.0 + 1e-12:
            raise DomainError(f"G must lie in [0, 1], got {self.g!r}")

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def det(self) -> float:
        return math.exp(self.det_log)


@dataclass(frozen=True)
class SampleArrays:
    """Columnar samples; ``values`` is None when only the determinant was computed."""

    spec: SystemSpec
    seed: int
    det_log: np.ndarray
    g: np.ndarray
    values: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.det_log)

    @property
    def det(self) -> np.ndarray:
        return np.exp(self.det_log)


def thread_count() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def sample_ginibre(spec: SystemSpec, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Ginibre matrix (or a stack of ``size`` of them) with N(0, 1) parts."""
    shape = (spec.n, spec.k) if size is None else (size, spec.n, spec.k)
    a = rng.standard_normal(shape)
    if spec.beta == 2:
        a = a + 1j * rng.standard_normal(shape)
    return a


def _g_from_det_log(n: int, det_log):
    return n * np.exp(np.asarray(det_log) / n)


def reduce_to_spectrum(a) -> SchmidtSpectrum:
    """Eigenvalues of ``A A^dag / Tr(A A^dag)``, descending."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] > a.shape[1]:
        raise DomainError("reduce_to_spectrum needs an n x k matrix with n <= k")
    if a.shape[0] < 2:
        raise DomainError("need n >= 2")
    w = a @ a.conj().T
    tr = float(np.trace(w).real)
    if not tr > 0:
        raise DegenerateInputError("zero matrix has no reduced state")
    lam = np.linalg.eigvalsh(w / tr)[::-1]
    lam = np.where((lam < 0) & (lam > -CLIP_TOL), 0.0, lam)
    if lam[-1] < 0:
        raise DegenerateInputError("Gram matrix is not positive semidefinite")
    with np.errstate(divide="ignore"):
        det_log = float(np.sum(np.log(lam)))
    n = a.shape[0]
    return SchmidtSpectrum(tuple(float(x) for x in lam), det_log, float(_g_from_det_log(n, det_log)))


def symmetric_monotones(s: SchmidtSpectrum, k: int) -> tuple[float, float]:
    """``(tau_k, tau_k**(1/n))`` with ``tau_k`` the k-th elementary symmetric polynomial."""
    n = s.n
    if int(k) != k or not 2 <= k <= n:
        raise DomainError(f"k must be an integer in 2..{n}, got {k!r}")
    # e_j over a growing prefix: all terms are non-negative, so no cancellation
    e = [1.0] + [0.0] * k
    for lam in s.values:
        for j in range(k, 0, -1):
            e[j] += lam * e[j - 1]
    tau = e[k]
    return tau, tau ** (1.0 / n)


def _block_det(spec: SystemSpec, seed: int, block: int, size: int):
    a = sample_ginibre(spec, block_rng(seed, block), size)
    tr = np.einsum("bij,bij->b", a.real, a.real)
    if spec.beta == 2:
        tr = tr + np.einsum("bij,bij->b", a.imag, a.imag)
    if spec.k == spec.n:
        _, logabs = np.linalg.slogdet(a)
        logdet = 2.0 * logabs
    else:
        w = a @ np.conj(np.swapaxes(a, 1, 2))
        _, logdet = np.linalg.slogdet(w)
    det_log = logdet - spec.n * np.log(tr)
    # round-off can push the maximally mixed bound by an ulp
    det_log = np.minimum(det_log, -spec.n * math.log(spec.n))
    return det_log, None


def _block_spectra(spec: SystemSpec, seed: int, block: int, size: int):
    a = sample_ginibre(spec, block_rng(seed, block), size)
    w = a @ np.conj(np.swapaxes(a, 1, 2))
    tr = np.trace(w, axis1=1, axis2=2).real
    lam = np.linalg.eigvalsh(w / tr[:, None, None])[:, ::-1]
    lam = np.where((lam < 0) & (lam > -CLIP_TOL), 0.0, lam)
    with np.errstate(divide="ignore"):
        det_log = np.sum(np.log(lam), axis=1)
    det_log = np.minimum(det_log, -spec.n * math.log(spec.n))
    return det_log, lam


def _check_arrays(spec: SystemSpec, det_log: np.ndarray, values: np.ndarray | None) -> None:
    if np.any(det_log > -spec.n * math.log(spec.n)):
        raise DegenerateInputError("determinant above the maximally mixed bound")
    if values is not None:
        if np.any(np.abs(values.sum(axis=1) - 1.0) > 1e-10) or np.any(values < 0):
            raise DegenerateInputError("spectrum off the simplex")


def sample_arrays(spec: SystemSpec, count: int, seed: int, spectra: bool = False,
                  threads: int | None = None) -> SampleArrays:
    """Draw ``count`` states; determinants only unless ``spectra`` is set.

    Both paths consume the random streams identically, so they see the same
    matrices for the same seed.
    """
    if int(count) != count or count < 1:
        raise DomainError(f"count must be a positive integer, got {count!r}")
    count = int(count)
    blocks = [(b, min(BLOCK_SIZE, count - b * BLOCK_SIZE)) for b in range(-(-count // BLOCK_SIZE))]
    work = _block_spectra if spectra else _block_det
    threads = threads or thread_count()
    results = []
    try:
        if threads > 1 and len(blocks) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(lambda bs: work(spec, seed, *bs), blocks))
        else:
            for b, size in blocks:
                results.append(work(spec, seed, b, size))
    except MemoryError as exc:
        delivered = sum(len(r[0]) for r in results)
        partial = _assemble(spec, seed, results, spectra) if results else None
        raise PartialResultError(
            f"ran out of memory after {delivered} of {count} samples",
            delivered=delivered, partial=partial,
        ) from exc
    out = _assemble(spec, seed, results, spectra)
    _check_arrays(spec, out.det_log, out.values)
    return out


def _assemble(spec, seed, results, spectra) -> SampleArrays:
    det_log = np.concatenate([r[0] for r in results])
    values = np.concatenate([r[1] for r in results]) if spectra else None
    return SampleArrays(spec, seed, det_log, _g_from_det_log(spec.n, det_log), values)


def sample_batch(spec: SystemSpec, count: int, seed: int,
                 threads: int | None = None) -> Iterator[SchmidtSpectrum]:
    """Yield ``count`` spectra; reproducible given ``(spec, count, seed)``."""
    arr = sample_arrays(spec, count, seed, spectra=True, threads=threads)
    for lam, dl, g in zip(arr.values, arr.det_log, arr.g):
        yield SchmidtSpectrum(tuple(float(x) for x in lam), float(dl), float(g))


def write_samples_csv(samples: SampleArrays, stream) -> None:
    """Rows ``lambda_1..lambda_n,det_log,g`` with 17 significant digits."""
    if samples.values is None:
        raise DomainError("sample dump needs spectra; sample with spectra=True")
    n = samples.spec.n
    stream.write(f"# seed={samples.seed}\n")
    stream.write(f"# n={n} k={samples.spec.k} beta={samples.spec.beta}\n")
    stream.write(",".join([f"lambda_{i}" for i in range(1, n + 1)] + ["det_log", "g"]) + "\n")
    for lam, dl, g in zip(samples.values, samples.det_log, samples.g):
        stream.write(",".join(f"{x:.17g}" for x in (*lam, dl, g)) + "\n")
