"""Deterministic sampling, Monte-Carlo aggregation and tensor quadrature.

All randomness flows through numpy's Philox generator, a 64-bit
counter-based generator whose bit stream is fixed by its key alone, so
the value of draw ``i`` of chunk ``c`` under base seed ``s`` is a pure
function of ``(s, c, i)`` on every platform.  Estimators split their
sample budget into fixed chunks of ``CHUNK_SIZE`` draws; chunk ``c``
uses the derived key ``(s + c) mod 2**64``.  Chunk partial sums are
merged with exact summation (``math.fsum``), so results are bit
identical no matter how many workers execute the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtri

from .errors import BoundViolationError, DimensionTooHighError

__all__ = [
    "CHUNK_SIZE",
    "MCResult",
    "make_generator",
    "derived_seed",
    "chunk_plan",
    "run_chunks",
    "RunningStat",
    "mc_expectation",
    "sample_density",
    "tensor_quadrature",
]

CHUNK_SIZE = 1 << 16
_MASK64 = (1 << 64) - 1


def derived_seed(base_seed: int, chunk_index: int) -> int:
    return (int(base_seed) + int(chunk_index)) & _MASK64


def make_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & _MASK64))


@dataclass(frozen=True)
class MCResult:
    """Monte-Carlo mean with its standard error."""

    mean: float
    stderr: float
    n: int


class RunningStat:
    """Per-chunk (sum, sum of squares, count) triples, merged exactly.

    ``math.fsum`` is correctly rounded, so the merged result does not
    depend on the order chunks are added in.
    """

    def __init__(self):
        self._sums: list[float] = []
        self._sumsqs: list[float] = []
        self._n = 0

    def add_chunk(self, values: np.ndarray) -> None:
        v = np.asarray(values, dtype=float)
        self._sums.append(float(np.sum(v)))
        self._sumsqs.append(float(np.sum(v * v)))
        self._n += v.size

    def result(self) -> MCResult:
        n = self._n
        if n == 0:
            return MCResult(math.nan, math.nan, 0)
        s = math.fsum(self._sums)
        ss = math.fsum(self._sumsqs)
        mean = s / n
        if n > 1:
            var = max(0.0, (ss - n * mean * mean) / (n - 1))
            stderr = math.sqrt(var / n)
        else:
            stderr = math.inf
        return MCResult(mean, stderr, n)


def chunk_plan(n: int, chunk_size: int = CHUNK_SIZE) -> list[tuple[int, int]]:
    """(chunk index, chunk length) pairs covering ``n`` samples."""
    if n < 1:
        raise ValueError("need n >= 1")
    full, rem = divmod(n, chunk_size)
    plan = [(c, chunk_size) for c in range(full)]
    if rem:
        plan.append((full, rem))
    return plan


def run_chunks(fn: Callable[[int, int], object],
               plan: Sequence[tuple[int, int]],
               workers: int = 1) -> list[object]:
    """Evaluate ``fn(chunk_index, chunk_len)`` for every chunk.

    Results come back in chunk order whatever ``workers`` is; ``fn``
    must be pure apart from reading shared immutable state.
    """
    if workers <= 1 or len(plan) <= 1:
        return [fn(c, m) for c, m in plan]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda cm: fn(*cm), plan))


def mc_expectation(point_source: Callable[[int, int], np.ndarray],
                   integrand: Callable[[np.ndarray], np.ndarray],
                   n: int,
                   seed: int,
                   chunk_size: int = CHUNK_SIZE,
                   workers: int = 1) -> MCResult:
    """Chunked deterministic Monte-Carlo mean of ``integrand`` over points.

    ``point_source(chunk_seed, m)`` must yield ``m`` points i.i.d. from the
    target distribution using only the given seed.
    """
    plan = chunk_plan(n, chunk_size)

    def one(c: int, m: int):
        pts = point_source(derived_seed(seed, c), m)
        return np.asarray(integrand(pts), dtype=float)

    stat = RunningStat()
    for values in run_chunks(one, plan, workers):
        stat.add_chunk(values)
    return stat.result()


# --- density samplers ---------------------------------------------------------
#
# Builtin forms sample by per-coordinate inverse CDF; expression pdfs by
# rejection from the support box under a declared bound.

def uniform_box_sample(lo: np.ndarray, hi: np.ndarray, n: int,
                       rng: np.random.Generator) -> np.ndarray:
    u = rng.random((n, lo.size))
    return lo + u * (hi - lo)


def gaussian_iid_sample(mu: float, sigma: float, dim: int, n: int,
                        rng: np.random.Generator) -> np.ndarray:
    u = rng.random((n, dim))
    # keep ndtri finite at the (never observed in practice) endpoints
    u = np.clip(u, 1e-300, 1.0 - 1e-16)
    return mu + sigma * ndtri(u)


def exponential_sample(lam: float, dim: int, n: int,
                       rng: np.random.Generator) -> np.ndarray:
    u = rng.random((n, dim))
    return -np.log1p(-u) / lam


def rejection_sample(pdf: Callable[[np.ndarray], np.ndarray],
                     lo: np.ndarray, hi: np.ndarray, bound: float,
                     n: int, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """Accept-reject from the uniform proposal on [lo, hi].

    Returns the points plus the observed acceptance rate.  Raises
    :class:`BoundViolationError` if the pdf ever exceeds ``bound``: the
    declared envelope is part of the model and must dominate the pdf.
    """
    dim = lo.size
    out = np.empty((n, dim))
    got = 0
    proposed = 0
    accepted = 0
    batch = max(n, 4096)
    while got < n:
        x = lo + rng.random((batch, dim)) * (hi - lo)
        f = np.asarray(pdf(x), dtype=float)
        proposed += batch
        bad = f > bound * (1.0 + 1e-12)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise BoundViolationError(x[i], float(f[i]), bound)
        accept = rng.random(batch) * bound < f
        hits = int(np.count_nonzero(accept))
        accepted += hits
        take = min(n - got, hits)
        out[got:got + take] = x[accept][:take]
        got += take
    return out, accepted / proposed


def sample_density(density, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` i.i.d. points from an input density (see model module)."""
    return density.sample(n, seed)


# --- quadrature ----------------------------------------------------------------

def tensor_quadrature(box, f: Callable[[np.ndarray], np.ndarray],
                      nodes_per_dim: int,
                      row_chunk: int = 1 << 16) -> float:
    """Midpoint rule on a tensor grid over ``box`` (N <= 2).

    ``f`` maps an (m, N) array of points to m values.  The midpoint rule
    needs no endpoint evaluations, which keeps integrable edge
    singularities (such as 1/sqrt(y) output densities) finite.
    """
    lo = np.asarray(box.lo, dtype=float)
    hi = np.asarray(box.hi, dtype=float)
    dim = lo.size
    if dim > 2:
        raise DimensionTooHighError(dim)
    if nodes_per_dim < 1:
        raise ValueError("need nodes_per_dim >= 1")
    h = (hi - lo) / nodes_per_dim
    cell = float(np.prod(h))
    axes = [lo[d] + (np.arange(nodes_per_dim) + 0.5) * h[d] for d in range(dim)]

    partials: list[float] = []
    if dim == 1:
        pts = axes[0][:, None]
        for start in range(0, pts.shape[0], row_chunk):
            vals = np.asarray(f(pts[start:start + row_chunk]), dtype=float)
            partials.append(float(np.sum(vals)))
    else:
        # evaluate row blocks of the 2-D grid to bound memory
        rows_per_block = max(1, row_chunk // nodes_per_dim)
        for r0 in range(0, nodes_per_dim, rows_per_block):
            a = axes[0][r0:r0 + rows_per_block]
            g0, g1 = np.meshgrid(a, axes[1], indexing="ij")
            pts = np.column_stack([g0.ravel(), g1.ravel()])
            vals = np.asarray(f(pts), dtype=float)
            partials.append(float(np.sum(vals)))
    return math.fsum(partials) * cell
