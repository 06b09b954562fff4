"""Information-loss estimators.

The loss of a piecewise-bijective map equals the conditional entropy of
the input given the output, and is computed here by three routes plus a
partition sweep:

* ``loss_eq5_mc`` / ``loss_eq5_quadrature`` average the exact pointwise
  integrand  log2( f_Y(g(x)) |det J(x)| / f_X(x) )  over x ~ f_X, by
  Monte Carlo or by a midpoint tensor grid (N <= 2);
* ``loss_corollary1`` assembles  h(X) - h(Y) + E[log2 |det J|]  from
  separately estimated terms (using the exact differential entropy of
  the input when the model declares it);
* ``loss_branch_posterior`` averages the Shannon entropy of the
  subdomain posterior at y = g(x), i.e. the uncertainty about which
  branch produced the output;
* ``partition_sweep`` quantizes x on dyadic grids of growing depth and
  reports the (nondecreasing, converging) quantized-input losses.

All entropies are in bits.  Estimators refuse maps classified Infinite,
raising :class:`InfiniteLossError` instead of returning a number.
Sampling follows the chunked deterministic contract of the numerics
module, so repeated runs and different worker counts give bit-identical
reports.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .classify import Classification, classify
from .errors import InfiniteLossError, SingularJacobianError, ZeroDensityError
from .model import DEFAULT_K_MAX, InputDensity, PiecewiseMap
from .numerics import (
    CHUNK_SIZE,
    RunningStat,
    chunk_plan,
    derived_seed,
    run_chunks,
    tensor_quadrature,
)
from .transform import DEFAULT_TOL, build_candidates, posterior_entropy_bits

__all__ = [
    "LossReport",
    "PartitionSweep",
    "loss_eq5_mc",
    "loss_eq5_quadrature",
    "loss_corollary1",
    "loss_branch_posterior",
    "partition_sweep",
    "differential_entropy_mc",
    "expected_log_jacdet",
]

_CLASSIFY_N = 100_000


@dataclass(frozen=True)
class LossReport:
    loss_bits: float
    stderr_bits: float
    method: str        # eq5_mc | eq5_quadrature | corollary1 | branch_posterior
    n_samples: int
    seed: int
    components: Optional[dict] = None
    truncated: bool = False
    excluded_fraction: float = 0.0

    def to_dict(self) -> dict:
        out = {"loss_bits": self.loss_bits, "stderr_bits": self.stderr_bits,
               "method": self.method, "n_samples": self.n_samples,
               "seed": self.seed, "truncated": self.truncated,
               "excluded_fraction": self.excluded_fraction}
        if self.components is not None:
            out["components"] = dict(self.components)
        return out


@dataclass(frozen=True)
class PartitionSweep:
    depths: tuple[int, ...]
    losses_bits: tuple[float, ...]
    stderrs_bits: tuple[float, ...]
    n_samples: int
    seed: int

    def to_dict(self) -> dict:
        return {"depths": list(self.depths),
                "losses_bits": list(self.losses_bits),
                "stderrs_bits": list(self.stderrs_bits),
                "n_samples": self.n_samples, "seed": self.seed}


def _gate(m: PiecewiseMap, d: InputDensity, seed: int,
          classification: Optional[Classification]) -> Classification:
    if classification is None:
        classification = classify(m, d, _CLASSIFY_N, derived_seed(seed, 101))
    if classification.verdict == "Infinite":
        raise InfiniteLossError(classification)
    return classification


class _Chunk:
    """Shared per-chunk sample pipeline: x ~ f_X, dispatch, forward,
    Jacobian, input density and the preimage candidate table at g(x)."""

    __slots__ = ("x", "y", "jac", "fx", "ok", "table")

    def __init__(self, m: PiecewiseMap, d: InputDensity, chunk_seed: int,
                 mlen: int, tol: float, k_max: int):
        x = d.sample(mlen, chunk_seed)
        part_idx, k, _ = m.dispatch_batch(x, strict=True)
        bij = np.array([p.kind == "bijective" for p in m.parts], dtype=bool)
        ok = bij[part_idx]
        y = m.forward_batch(x, part_idx, k)
        jac = np.ones(mlen)
        if np.any(ok):
            jac[ok] = m.jac_batch(x[ok], part_idx[ok], k[ok])
        bad = ok & ~(jac > 0.0)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise SingularJacobianError(x[i], float(jac[i]))
        self.x = x
        self.y = y
        self.jac = jac
        self.fx = d.pdf_batch(x)
        self.ok = ok
        self.table = build_candidates(m, d, y, tol, k_max)

    def f_y_checked(self) -> np.ndarray:
        fy = self.table.f_y
        bad = self.ok & ~(fy > 0.0)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ZeroDensityError(self.y[i])
        return fy


def _run_mc(m, d, n, seed, tol, k_max, chunk_size, workers, values_of_chunk):
    """Map a chunk -> per-sample-values function over the sample budget."""
    plan = chunk_plan(n, chunk_size)

    def one(c, mlen):
        ch = _Chunk(m, d, derived_seed(seed, c), mlen, tol, k_max)
        return values_of_chunk(ch), bool(ch.table.truncated.any()), int(
            np.count_nonzero(~ch.ok))

    stat = RunningStat()
    truncated = False
    excluded = 0
    for values, trunc, excl in run_chunks(one, plan, workers):
        stat.add_chunk(values)
        truncated |= trunc
        excluded += excl
    return stat.result(), truncated, excluded / n


def loss_eq5_mc(m: PiecewiseMap, d: InputDensity, n: int, seed: int,
                tol: float = DEFAULT_TOL, k_max: int = DEFAULT_K_MAX,
                chunk_size: int = CHUNK_SIZE, workers: int = 1,
                classification: Optional[Classification] = None) -> LossReport:
    """Monte-Carlo mean of the exact loss integrand over x ~ f_X."""
    _gate(m, d, seed, classification)

    def values(ch: _Chunk) -> np.ndarray:
        fy = ch.f_y_checked()
        v = np.zeros(ch.x.shape[0])
        ok = ch.ok
        v[ok] = np.log2(fy[ok] * ch.jac[ok] / ch.fx[ok])
        return v

    res, truncated, excluded = _run_mc(m, d, n, seed, tol, k_max,
                                       chunk_size, workers, values)
    return LossReport(res.mean, res.stderr, "eq5_mc", n, seed,
                      truncated=truncated, excluded_fraction=excluded)


def loss_eq5_quadrature(m: PiecewiseMap, d: InputDensity,
                        nodes_per_dim: int = 512,
                        tol: float = DEFAULT_TOL, k_max: int = DEFAULT_K_MAX,
                        classification: Optional[Classification] = None,
                        seed: int = 0) -> LossReport:
    """Midpoint tensor-grid evaluation of the loss integral (N <= 2).

    Cells whose midpoint carries zero input density are skipped; cells
    straddling region boundaries contribute via their midpoint's branch.
    """
    _gate(m, d, seed, classification)
    bij = np.array([p.kind == "bijective" for p in m.parts], dtype=bool)
    truncated = {"flag": False}

    def integrand(pts: np.ndarray) -> np.ndarray:
        out = np.zeros(pts.shape[0])
        fx = d.pdf_batch(pts)
        live = fx > 0.0
        if not np.any(live):
            return out
        xs = pts[live]
        part_idx, k, _ = m.dispatch_batch(xs, strict=True)
        ok = bij[part_idx]
        if not np.any(ok):
            return out
        y = m.forward_batch(xs[ok], part_idx[ok], k[ok])
        jac = m.jac_batch(xs[ok], part_idx[ok], k[ok])
        table = build_candidates(m, d, y, tol, k_max)
        truncated["flag"] |= bool(table.truncated.any())
        fxl = fx[live][ok]
        v = np.zeros(xs.shape[0])
        v[ok] = fxl * np.log2(np.maximum(table.f_y, 1e-300) * jac / fxl)
        out[live] = v
        return out

    total = tensor_quadrature(d.support.bbox, integrand, nodes_per_dim)
    return LossReport(total, 0.0, "eq5_quadrature", nodes_per_dim ** m.dim,
                      seed, truncated=truncated["flag"])


def loss_corollary1(m: PiecewiseMap, d: InputDensity, n: int, seed: int,
                    tol: float = DEFAULT_TOL, k_max: int = DEFAULT_K_MAX,
                    chunk_size: int = CHUNK_SIZE, workers: int = 1,
                    classification: Optional[Classification] = None) -> LossReport:
    """h(X) - h(Y) + E[log2 |det J|], each term estimated on one sample
    stream; h(X) is taken exactly from the model when declared."""
    _gate(m, d, seed, classification)
    plan = chunk_plan(n, chunk_size)
    exact_hx = d.exact_diffent_bits

    def one(c, mlen):
        ch = _Chunk(m, d, derived_seed(seed, c), mlen, tol, k_max)
        fy = ch.f_y_checked()
        ok = ch.ok
        neg_log_fx = np.zeros(mlen)
        neg_log_fx[ok] = -np.log2(ch.fx[ok])
        neg_log_fy = np.zeros(mlen)
        neg_log_fy[ok] = -np.log2(fy[ok])
        log_jac = np.zeros(mlen)
        log_jac[ok] = np.log2(ch.jac[ok])
        hx_term = np.full(mlen, exact_hx) if exact_hx is not None else neg_log_fx
        v = hx_term - neg_log_fy + log_jac
        return (v, neg_log_fx, neg_log_fy, log_jac,
                bool(ch.table.truncated.any()), int(np.count_nonzero(~ok)))

    stats = [RunningStat() for _ in range(4)]
    truncated = False
    excluded = 0
    for v, a, b, c_, trunc, excl in run_chunks(one, plan, workers):
        for stat, arr in zip(stats, (v, a, b, c_)):
            stat.add_chunk(arr)
        truncated |= trunc
        excluded += excl
    total, hx_mc, hy, ejac = (s.result() for s in stats)

    if exact_hx is not None:
        h_x, h_x_stderr = float(exact_hx), 0.0
    else:
        h_x, h_x_stderr = hx_mc.mean, hx_mc.stderr
    components = {
        "h_X_bits": h_x, "h_X_stderr": h_x_stderr,
        "h_Y_bits": hy.mean, "h_Y_stderr": hy.stderr,
        "e_logjac_bits": ejac.mean, "e_logjac_stderr": ejac.stderr,
    }
    loss_bits = h_x - hy.mean + ejac.mean  # stored identity, exact in floats
    return LossReport(loss_bits, total.stderr, "corollary1", n, seed,
                      components=components, truncated=truncated,
                      excluded_fraction=excluded / n)


def loss_branch_posterior(m: PiecewiseMap, d: InputDensity, n: int, seed: int,
                          tol: float = DEFAULT_TOL, k_max: int = DEFAULT_K_MAX,
                          chunk_size: int = CHUNK_SIZE, workers: int = 1,
                          classification: Optional[Classification] = None
                          ) -> LossReport:
    """Mean Shannon entropy (bits) of the subdomain posterior at y = g(x)."""
    _gate(m, d, seed, classification)

    def values(ch: _Chunk) -> np.ndarray:
        ch.f_y_checked()
        h = posterior_entropy_bits(ch.table)
        return np.where(ch.ok, h, 0.0)

    res, truncated, excluded = _run_mc(m, d, n, seed, tol, k_max,
                                       chunk_size, workers, values)
    return LossReport(res.mean, res.stderr, "branch_posterior", n, seed,
                      truncated=truncated, excluded_fraction=excluded)


# --- partition sweep ---------------------------------------------------------

def _grouped_entropy_bits(cells: np.ndarray, w: np.ndarray,
                          f_y: np.ndarray) -> np.ndarray:
    """Entropy per row of posterior weights aggregated over equal cells.

    cells: (S, m) int codes (-1 for invalid slots, whose weight is 0);
    w: (S, m) unnormalized weights; f_y: (m,) their column sums.
    """
    if cells.shape[0] == 0:
        return np.zeros(cells.shape[1])
    wn = w / np.maximum(f_y, 1e-300)
    order = np.argsort(cells, axis=0, kind="stable")
    c = np.take_along_axis(cells, order, axis=0)
    ww = np.take_along_axis(wn, order, axis=0)
    csum = np.cumsum(ww, axis=0)
    m_ = cells.shape[1]
    start = np.vstack([np.ones((1, m_), dtype=bool), c[1:] != c[:-1]])
    end = np.vstack([c[1:] != c[:-1], np.ones((1, m_), dtype=bool)])
    # cumulative sum just before each run, forward-filled down the run
    base = np.maximum.accumulate(np.where(start, csum - ww, -np.inf), axis=0)
    # cumulative sum at each run's end, backward-filled up the run
    total_at_end = np.minimum.accumulate(
        np.where(end, csum, np.inf)[::-1], axis=0)[::-1]
    group = total_at_end - base
    contrib = np.where(ww > 0.0, ww * np.log2(np.maximum(group, 1e-300)), 0.0)
    return -contrib.sum(axis=0)


def partition_sweep(m: PiecewiseMap, d: InputDensity, depths: Sequence[int],
                    n: int, seed: int,
                    tol: float = DEFAULT_TOL, k_max: int = DEFAULT_K_MAX,
                    chunk_size: int = CHUNK_SIZE, workers: int = 1,
                    classification: Optional[Classification] = None
                    ) -> PartitionSweep:
    """Quantized-input loss H(X_hat | Y) on dyadic grids over the support
    box, one entry per depth (2**depth cells per axis).  The sequence is
    nondecreasing in depth and converges to the full loss."""
    _gate(m, d, seed, classification)
    depths = [int(v) for v in depths]
    if any(v < 0 for v in depths):
        raise ValueError("depths must be nonnegative")
    lo, hi = d.support.bbox.arrays()
    span = hi - lo
    plan = chunk_plan(n, chunk_size)

    def one(c, mlen):
        ch = _Chunk(m, d, derived_seed(seed, c), mlen, tol, k_max)
        ch.f_y_checked()
        t = ch.table
        per_depth = []
        for depth in depths:
            ncells = 1 << depth
            axes = np.floor((t.x - lo) / span * ncells)
            axes = np.clip(axes, 0, ncells - 1).astype(np.int64)
            cell = axes[..., 0]
            for dd in range(1, m.dim):
                cell = cell * ncells + axes[..., dd]
            cell = np.where(t.valid, cell, -1)
            h = _grouped_entropy_bits(cell, t.weight, t.f_y)
            per_depth.append(np.where(ch.ok, h, 0.0))
        return per_depth

    stats = [RunningStat() for _ in depths]
    for per_depth in run_chunks(one, plan, workers):
        for stat, vals in zip(stats, per_depth):
            stat.add_chunk(vals)
    results = [s.result() for s in stats]
    return PartitionSweep(tuple(depths),
                          tuple(r.mean for r in results),
                          tuple(r.stderr for r in results), n, seed)


# --- corollary-1 building blocks ------------------------------------------------

def differential_entropy_mc(d: InputDensity, n: int, seed: int,
                            chunk_size: int = CHUNK_SIZE,
                            workers: int = 1):
    """Plug-in differential entropy of the input, -E[log2 f_X(X)], in bits."""
    plan = chunk_plan(n, chunk_size)

    def one(c, mlen):
        x = d.sample(mlen, derived_seed(seed, c))
        fx = d.pdf_batch(x)
        if np.any(fx <= 0.0):
            i = int(np.argmax(fx <= 0.0))
            raise ZeroDensityError(x[i])
        return -np.log2(fx)

    stat = RunningStat()
    for values in run_chunks(one, plan, workers):
        stat.add_chunk(values)
    return stat.result()


def expected_log_jacdet(m: PiecewiseMap, d: InputDensity, n: int, seed: int,
                        chunk_size: int = CHUNK_SIZE, workers: int = 1):
    """E[log2 |det J(X)|] over x ~ f_X, in bits."""
    plan = chunk_plan(n, chunk_size)
    bij = np.array([p.kind == "bijective" for p in m.parts], dtype=bool)

    def one(c, mlen):
        x = d.sample(mlen, derived_seed(seed, c))
        part_idx, k, _ = m.dispatch_batch(x, strict=True)
        ok = bij[part_idx]
        v = np.zeros(mlen)
        if np.any(ok):
            jac = m.jac_batch(x[ok], part_idx[ok], k[ok])
            if np.any(~(jac > 0.0)):
                i = int(np.argmax(~(jac > 0.0)))
                raise SingularJacobianError(x[ok][i], float(jac[i]))
            v[ok] = np.log2(jac)
        return v

    stat = RunningStat()
    for values in run_chunks(one, plan, workers):
        stat.add_chunk(values)
    return stat.result()
