"""Upper bounds on the information loss.

Three bounds come from the cardinality of the preimage of the output:
the mean log-cardinality, the log of the mean cardinality (Jensen), and
the log of the maximum sampled cardinality.  A fourth, independent bound
is the entropy H(W) of the subdomain index itself.  Countable families
can make every cardinality bound infinite while the loss stays finite;
truncated enumerations are therefore flagged and the affected terms
reported as lower bounds of the true (infinite) values.

The sum of the per-subdomain output masses is computed as the expected
preimage cardinality (the output lands in a subdomain's image exactly
when the preimage meets that subdomain), so no image-set geometry is
ever represented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .classify import Classification, classify
from .errors import InfiniteLossError, ZeroDensityError
from .model import DEFAULT_K_MAX, InputDensity, PiecewiseMap
from .numerics import (
    CHUNK_SIZE,
    MCResult,
    RunningStat,
    chunk_plan,
    derived_seed,
    run_chunks,
)
from .transform import DEFAULT_TOL, build_candidates

__all__ = ["BoundsReport", "bounds_report", "entropy_W"]

_CLASSIFY_N = 100_000


@dataclass(frozen=True)
class BoundsReport:
    e_log_card_bits: float     # E[log2 |preimage|]
    log_e_card_bits: float     # log2 E[|preimage|]
    max_log_card_bits: float   # log2 max sampled |preimage|
    h_W_bits: float            # plug-in entropy of the subdomain index
    stderrs: dict
    infinite_flags: dict
    branch_masses: dict
    n_samples: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "e_log_card_bits": self.e_log_card_bits,
            "log_e_card_bits": self.log_e_card_bits,
            "max_log_card_bits": self.max_log_card_bits,
            "h_W_bits": self.h_W_bits,
            "stderrs": dict(self.stderrs),
            "infinite_flags": dict(self.infinite_flags),
            "branch_masses": dict(self.branch_masses),
            "n_samples": self.n_samples,
            "seed": self.seed,
        }


def _plugin_entropy(counts: dict[int, int], n: int) -> tuple[float, float]:
    p = np.array([c / n for c in counts.values()])
    logp = np.log2(p)
    h = float(-(p * logp).sum())
    # delta method: Var(H_hat) ~ Var(-log2 p(W)) / n
    var = float((p * logp * logp).sum() - h * h)
    return h, math.sqrt(max(var, 0.0) / n)


def bounds_report(m: PiecewiseMap, d: InputDensity, n: int, seed: int,
                  tol: float = DEFAULT_TOL, k_max: int = DEFAULT_K_MAX,
                  chunk_size: int = CHUNK_SIZE, workers: int = 1,
                  classification: Optional[Classification] = None
                  ) -> BoundsReport:
    """Sample x ~ f_X, count preimages of g(x), and tally subdomains."""
    if classification is None:
        classification = classify(m, d, _CLASSIFY_N, derived_seed(seed, 101))
    if classification.verdict == "Infinite":
        # cardinality counting under the bijective-branch enumeration would
        # report misleading finite numbers for maps with atoms or collapses
        raise InfiniteLossError(classification)

    bij = np.array([p.kind == "bijective" for p in m.parts], dtype=bool)
    plan = chunk_plan(n, chunk_size)

    def one(c, mlen):
        x = d.sample(mlen, derived_seed(seed, c))
        part_idx, k, _ = m.dispatch_batch(x, strict=True)
        ok = bij[part_idx]
        y = m.forward_batch(x, part_idx, k)
        table = build_candidates(m, d, y, tol, k_max)
        card = table.cardinality.astype(float)
        bad = ok & ~(card > 0)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ZeroDensityError(y[i])
        card = np.where(ok, card, 1.0)
        codes = m.codes_batch(part_idx, k)
        uniq, cnts = np.unique(codes, return_counts=True)
        return (np.log2(card), card, int(card.max()),
                dict(zip(uniq.tolist(), cnts.tolist())),
                bool(table.truncated.any()))

    log_stat, card_stat = RunningStat(), RunningStat()
    max_card = 0
    counts: dict[int, int] = {}
    truncated = False
    for logs, cards, mx, cnts, trunc in run_chunks(one, plan, workers):
        log_stat.add_chunk(logs)
        card_stat.add_chunk(cards)
        max_card = max(max_card, mx)
        for code, cnt in cnts.items():
            counts[code] = counts.get(code, 0) + cnt
        truncated |= trunc

    e_log = log_stat.result()
    e_card = card_stat.result()
    log_e_card = math.log2(e_card.mean)
    log_e_card_stderr = e_card.stderr / (e_card.mean * math.log(2))
    h_w, h_w_stderr = _plugin_entropy(counts, n)
    masses = {m.code_label(code): counts[code] / n for code in sorted(counts)}

    return BoundsReport(
        e_log_card_bits=e_log.mean,
        log_e_card_bits=log_e_card,
        max_log_card_bits=math.log2(max_card),
        h_W_bits=h_w,
        stderrs={"e_log_card": e_log.stderr, "log_e_card": log_e_card_stderr,
                 "max_log_card": 0.0, "h_W": h_w_stderr},
        infinite_flags={"e_log_card": truncated, "log_e_card": truncated,
                        "max_log_card": truncated, "h_W": False},
        branch_masses=masses,
        n_samples=n, seed=seed)


def entropy_W(m: PiecewiseMap, d: InputDensity, n: int, seed: int,
              chunk_size: int = CHUNK_SIZE, workers: int = 1) -> MCResult:
    """Plug-in entropy (bits) of the subdomain index of x ~ f_X, with the
    delta-method standard error."""
    plan = chunk_plan(n, chunk_size)

    def one(c, mlen):
        x = d.sample(mlen, derived_seed(seed, c))
        part_idx, k, _ = m.dispatch_batch(x, strict=True)
        uniq, cnts = np.unique(m.codes_batch(part_idx, k), return_counts=True)
        return dict(zip(uniq.tolist(), cnts.tolist()))

    counts: dict[int, int] = {}
    for cnts in run_chunks(one, plan, workers):
        for code, cnt in cnts.items():
            counts[code] = counts.get(code, 0) + cnt
    h, stderr = _plugin_entropy(counts, n)
    return MCResult(h, stderr, n)
