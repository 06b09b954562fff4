"""Acceptance suite.

Each test covers one acceptance criterion at its stated tolerance and
prints one PASS line (run with ``pytest -s tests/test_acceptance.py -v``
to see them).  Expected values are frozen from independent oracles:
closed-form integrals, series sums, and scipy distribution functions.
"""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from infoloss.bounds import bounds_report
from infoloss.classify import atom_scan, classify
from infoloss.config import load_config
from infoloss.geometry import Box
from infoloss.loss import (
    loss_branch_posterior,
    loss_corollary1,
    loss_eq5_mc,
    loss_eq5_quadrature,
    partition_sweep,
)
from infoloss.model import postcompose_affine
from infoloss.numerics import tensor_quadrature
from infoloss.transform import build_candidates

N = 1_000_000
SEED = 1

GAUSSIAN_DIFFENT_BITS = 2.047095585180641    # 0.5*log2(2*pi*e)
EX2_E_LOGJAC_BITS = 0.08362691136156641      # (ln2 - gamma)/2 * log2(e)
SAWTOOTH_HW_BITS = 1.5013432665422346        # -sum p_k log2 p_k, p_k geometric
GAUSSIAN_TAIL_AT_1 = 0.15865525393145707     # scipy.stats.norm.sf(1)

FINITE_PRESETS = ["identity", "ex1_fold_square", "ex2_square_gaussian",
                  "ex3_exp_sawtooth", "ex4_polar_unitdisc",
                  "ex6_m0", "ex6_m1", "ex6_m2"]


def announce(criterion: str, detail: str) -> None:
    print(f"\nACCEPTANCE {criterion}: PASS — {detail}")


# --- criterion 1: fold of the uniform square --------------------------------------

def test_acceptance_1_fold_square(setups):
    setup = setups["ex1_fold_square"]
    m, d = setup.pmap, setup.density
    cls = classify(m, d, 100_000, SEED)
    routes = {
        "eq5_mc": loss_eq5_mc(m, d, N, SEED, classification=cls),
        "corollary1": loss_corollary1(m, d, N, SEED, classification=cls),
        "branch_posterior": loss_branch_posterior(m, d, N, SEED,
                                                  classification=cls),
    }
    for name, rep in routes.items():
        assert rep.loss_bits == pytest.approx(0.5, abs=0.01), name
    quad = loss_eq5_quadrature(m, d, 512, classification=cls)
    assert quad.loss_bits == pytest.approx(0.5, abs=0.003)
    announce("1", "fold of the uniform square: "
             + ", ".join(f"{k}={v.loss_bits:.4f}" for k, v in routes.items())
             + f", quadrature={quad.loss_bits:.4f} (target 0.5)")


# --- criterion 2: square of a standard Gaussian ------------------------------------

def test_acceptance_2_square_gaussian(setups):
    setup = setups["ex2_square_gaussian"]
    m, d = setup.pmap, setup.density
    cls = classify(m, d, 100_000, SEED)
    n2 = 2_000_000  # tight +-0.005 component tolerance
    eq5 = loss_eq5_mc(m, d, N, SEED, classification=cls)
    post = loss_branch_posterior(m, d, N, SEED, classification=cls)
    quad = loss_eq5_quadrature(m, d, 512, classification=cls)
    cor = loss_corollary1(m, d, n2, SEED, classification=cls)
    for rep in (eq5, post, quad, cor):
        assert rep.loss_bits == pytest.approx(1.0, abs=0.01)
    comp = cor.components
    assert comp["h_X_bits"] == pytest.approx(GAUSSIAN_DIFFENT_BITS, abs=1e-12)
    assert comp["h_X_bits"] == pytest.approx(2.047, abs=1e-3)
    assert comp["e_logjac_bits"] == pytest.approx(0.0837, abs=0.005)
    assert comp["h_Y_bits"] == pytest.approx(
        GAUSSIAN_DIFFENT_BITS + EX2_E_LOGJAC_BITS - 1.0, abs=0.01)
    announce("2", f"squared Gaussian: loss={cor.loss_bits:.4f}, "
             f"h_X={comp['h_X_bits']:.4f}, h_Y={comp['h_Y_bits']:.4f}, "
             f"E[log jac]={comp['e_logjac_bits']:.4f}")


# --- criterion 3: triangle fold, m in {0, a/2, a} -----------------------------------

TRIANGLE_CASES = {
    "ex6_m0": 0.0,
    "ex6_m1": 1.0,
    "ex6_m2": 2.0,
}


def closed_form_hw(m, a):
    p = np.array([(a - m) ** 2 / (4 * a * a),
                  (a - m) * (a + m) / (2 * a * a),
                  (a + m) ** 2 / (4 * a * a)])
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def test_acceptance_3_triangle_fold(setups):
    a = 2.0
    details = []
    for name, mval in TRIANGLE_CASES.items():
        setup = setups[name]
        pm, d = setup.pmap, setup.density
        cls = classify(pm, d, 100_000, SEED)
        loss_true = 1.0 - mval ** 2 / a ** 2
        rep = loss_eq5_mc(pm, d, N, SEED, classification=cls)
        assert rep.loss_bits == pytest.approx(loss_true, abs=0.01), name
        b = bounds_report(pm, d, N, SEED, classification=cls)
        assert b.e_log_card_bits <= b.log_e_card_bits + 1e-9
        assert b.log_e_card_bits <= b.max_log_card_bits + 1e-9 or mval == a
        assert b.e_log_card_bits == pytest.approx(loss_true, abs=0.01), name
        assert b.log_e_card_bits == pytest.approx(
            math.log2(2 - mval ** 2 / a ** 2), abs=0.01), name
        if mval < a:
            assert b.max_log_card_bits == pytest.approx(1.0, abs=0.01), name
        else:
            # every output of the m=a fold has a one-point preimage: the
            # sampled (and true) max-cardinality bound is 0 bits, see the
            # xfail below for the nominal 1-bit expectation
            assert b.max_log_card_bits == pytest.approx(0.0, abs=0.01)
        assert b.h_W_bits == pytest.approx(closed_form_hw(mval, a), abs=0.01), name
        details.append(f"m={mval:g}: loss={rep.loss_bits:.4f}, "
                       f"chain=({b.e_log_card_bits:.3f}, "
                       f"{b.log_e_card_bits:.3f}, {b.max_log_card_bits:.3f}), "
                       f"H(W)={b.h_W_bits:.4f}")
    announce("3", "triangle fold: " + "; ".join(details))


@pytest.mark.xfail(strict=True, reason=(
    "the nominal max-cardinality value of 1 bit cannot be attained at m=a: "
    "the two mirror subdomains degenerate to zero-mass edges and every "
    "output point has exactly one preimage, so the true and sampled maxima "
    "are both 0 bits (see the decisions ledger)"))
def test_acceptance_3_max_bound_at_m_equals_a(setups):
    setup = setups["ex6_m2"]
    b = bounds_report(setup.pmap, setup.density, 200_000, SEED)
    assert b.max_log_card_bits == pytest.approx(1.0, abs=0.01)


# --- criterion 4: sawtooth of an exponential ----------------------------------------

def test_acceptance_4_sawtooth(setups):
    setup = setups["ex3_exp_sawtooth"]
    m, d = setup.pmap, setup.density
    cls = classify(m, d, 100_000, SEED)
    # series oracle, recomputed to machine precision
    k = np.arange(1, 400)
    p = (1 - math.exp(-1.0)) * np.exp(-(k - 1.0))
    oracle = float(-(p * np.log2(p)).sum())
    assert oracle == pytest.approx(SAWTOOTH_HW_BITS, abs=1e-14)

    b = bounds_report(m, d, N, SEED, classification=cls)
    for term in ("e_log_card", "log_e_card", "max_log_card"):
        assert b.infinite_flags[term], term
    rep = loss_eq5_mc(m, d, N, SEED, classification=cls)
    assert abs(rep.loss_bits - oracle) <= 3 * rep.stderr_bits
    assert abs(b.h_W_bits - oracle) <= 3 * b.stderrs["h_W"] + 1e-4
    announce("4", f"sawtooth: cardinality bounds flagged infinite; "
             f"loss={rep.loss_bits:.4f}±{rep.stderr_bits:.4f} and "
             f"H(W)={b.h_W_bits:.4f} agree with the series oracle {oracle:.4f}")


# --- criterion 5: classification suite ------------------------------------------------

def test_acceptance_5_classification(setups):
    expected_finite = ["identity", "ex1_fold_square", "ex2_square_gaussian",
                       "ex3_exp_sawtooth", "ex6_m0", "ex6_m1", "ex6_m2"]
    for name in expected_finite:
        c = classify(setups[name].pmap, setups[name].density, 200_000, SEED)
        assert c.verdict == "Finite", name

    c = classify(setups["quantizer_uniform"].pmap,
                 setups["quantizer_uniform"].density, 200_000, SEED)
    assert (c.verdict, c.reason) == ("Infinite", "discrete_atom")

    c = classify(setups["ex5_radius_only"].pmap,
                 setups["ex5_radius_only"].density, 200_000, SEED)
    assert (c.verdict, c.reason) == ("Infinite", "rank_deficient_mass")

    setup = setups["limiter_gaussian"]
    c = classify(setup.pmap, setup.density, 200_000, SEED)
    assert c.verdict == "Infinite"
    atoms = atom_scan(setup.pmap, setup.density, 200_000, SEED)
    assert [y for y, _ in atoms] == [(-1.0,), (1.0,)]
    for _, mass in atoms:
        assert mass == pytest.approx(GAUSSIAN_TAIL_AT_1, abs=0.003)

    s4 = setups["ex4_polar_unitdisc"]
    c4 = classify(s4.pmap, s4.density, 200_000, SEED)
    assert c4.verdict == "Finite"
    rep = loss_eq5_mc(s4.pmap, s4.density, 200_000, SEED, classification=c4)
    assert rep.loss_bits == pytest.approx(0.0, abs=0.01)
    announce("5", "classification: finite presets Finite; quantizer "
             "discrete_atom; radius-only rank_deficient_mass; limiter atoms "
             f"at ±1 with masses ±0.003 of {GAUSSIAN_TAIL_AT_1:.4f}; "
             f"polar map loss={rep.loss_bits:.2e}")


# --- criterion 6: property suite -------------------------------------------------------

NP = 200_000  # per-preset budget for the property sweep


@pytest.fixture(scope="module")
def finite_runs(setups):
    out = {}
    for name in FINITE_PRESETS:
        setup = setups[name]
        m, d = setup.pmap, setup.density
        cls = classify(m, d, 100_000, SEED)
        out[name] = {
            "setup": setup,
            "cls": cls,
            "eq5": loss_eq5_mc(m, d, NP, SEED, classification=cls),
            "cor": loss_corollary1(m, d, NP, SEED, classification=cls),
            "post": loss_branch_posterior(m, d, NP, SEED, classification=cls),
        }
    return out


def test_acceptance_6a_nonnegativity(finite_runs):
    for name, run in finite_runs.items():
        for key in ("eq5", "cor", "post"):
            rep = run[key]
            assert rep.loss_bits >= -3 * rep.stderr_bits - 1e-12, (name, key)
    announce("6a", "loss nonnegative (within MC noise) on every preset/route")


def test_acceptance_6b_cross_route_agreement(finite_runs):
    for name, run in finite_runs.items():
        eq5, cor, post = run["eq5"], run["cor"], run["post"]
        for other in (cor, post):
            tol = 3 * (eq5.stderr_bits + other.stderr_bits) + 1e-12
            assert abs(eq5.loss_bits - other.loss_bits) <= tol, (
                name, other.method)
    announce("6b", "three MC routes agree within 3·combined stderr everywhere")


def test_acceptance_6c_entropy_inequality(finite_runs):
    bijective = {"identity", "ex4_polar_unitdisc"}
    for name, run in finite_runs.items():
        comp = run["cor"].components
        lhs = comp["h_Y_bits"]
        rhs = comp["h_X_bits"] + comp["e_logjac_bits"]
        sigma = 3 * math.sqrt(comp["h_Y_stderr"] ** 2
                              + comp["e_logjac_stderr"] ** 2
                              + comp["h_X_stderr"] ** 2)
        assert lhs <= rhs + sigma + 1e-9, name
        if name in bijective:
            assert lhs == pytest.approx(rhs, abs=0.01), name
    announce("6c", "h(Y) <= h(X) + E[log jac] everywhere; equality on the "
             "bijective presets")


SWEEP_DEPTHS = {1: range(0, 11), 2: range(0, 9)}


def test_acceptance_6d_partition_sweep(finite_runs):
    finals = []
    for name, run in finite_runs.items():
        setup, cls, eq5 = run["setup"], run["cls"], run["eq5"]
        depths = list(SWEEP_DEPTHS[setup.pmap.dim])
        sw = partition_sweep(setup.pmap, setup.density, depths, NP, SEED,
                             classification=cls)
        for a, b, sa, sb in zip(sw.losses_bits, sw.losses_bits[1:],
                                sw.stderrs_bits, sw.stderrs_bits[1:]):
            assert b >= a - 3 * (sa + sb) - 1e-12, name
        cap = eq5.loss_bits + 3 * (eq5.stderr_bits + max(sw.stderrs_bits)) + 1e-12
        assert max(sw.losses_bits) <= cap, name
        assert sw.losses_bits[-1] == pytest.approx(eq5.loss_bits, abs=0.01), name
        finals.append(f"{name}:{sw.losses_bits[-1]:.3f}")
    announce("6d", "partition sweeps monotone and converging: "
             + ", ".join(finals))


def test_acceptance_6e_output_bijection_invariance(finite_runs):
    for name, run in finite_runs.items():
        setup, cls = run["setup"], run["cls"]
        m2 = postcompose_affine(setup.pmap, 3.0, 1.0)
        rep2 = loss_eq5_mc(m2, setup.density, NP, SEED, classification=cls)
        base = run["eq5"]
        tol = 3 * (base.stderr_bits + rep2.stderr_bits) + 1e-9
        assert abs(rep2.loss_bits - base.loss_bits) <= tol, name
    announce("6e", "relabeling outputs by y -> 3y+1 moves no loss estimate "
             "beyond MC noise")


NORMALIZATION_GRID = {
    "identity": (Box((0.0,), (1.0,)), 4096),
    "ex1_fold_square": (Box((-2.0, 0.0), (2.0, 4.0)), 2048),
    "ex2_square_gaussian": (Box((0.0,), (72.25,)), 16_000_000),
    "ex3_exp_sawtooth": (Box((0.0,), (2 / 3,)), 8192),
    "ex4_polar_unitdisc": (Box((0.0, -math.pi), (1.0, math.pi)), 1024),
    "ex6_m0": (Box((0.0, 0.0), (2.0, 2.0)), 1024),
    "ex6_m1": (Box((0.0, 0.0), (3.0, 3.0)), 1024),
    "ex6_m2": (Box((0.0, 0.0), (4.0, 4.0)), 2048),
}


def test_acceptance_6f_output_density_normalization(setups):
    errs = []
    for name, (ybox, nodes) in NORMALIZATION_GRID.items():
        setup = setups[name]

        def f_y(pts):
            return build_candidates(setup.pmap, setup.density, pts).f_y

        val = tensor_quadrature(ybox, f_y, nodes)
        assert abs(val - 1.0) <= 1e-3, (name, val)
        errs.append(f"{name}:{abs(val - 1):.1e}")
    announce("6f", "f_Y integrates to 1 ± 1e-3 on every 1-D/2-D preset: "
             + ", ".join(errs))


def _laplace_square_config():
    return {
        "dim": 1,
        "density": {
            "form": "expression",
            "pdf": "0.5*exp(-abs(x1))",
            "pdf_bound": 0.5,
            "support": {"predicate": "x1 >= -20 and x1 <= 20",
                        "bbox": [[-20.0, 20.0]]},
        },
        "parts": [
            {"type": "branch", "name": "neg", "kind": "bijective",
             "region": {"predicate": "x1 <= 0 and x1 >= -20",
                        "bbox": [[-20.0, 0.0]]},
             "forward": ["x1^2"], "inverse": ["-sqrt(y1)"],
             "jac_abs_det": "2*abs(x1)"},
            {"type": "branch", "name": "pos", "kind": "bijective",
             "region": {"predicate": "x1 > 0 and x1 <= 20",
                        "bbox": [[0.0, 20.0]]},
             "forward": ["x1^2"], "inverse": ["sqrt(y1)"],
             "jac_abs_det": "2*abs(x1)"},
        ],
    }


def _uniform_square_config():
    return {
        "dim": 1,
        "density": {
            "form": "uniform_box",
            "support": {"predicate": "x1 >= -1 and x1 <= 1",
                        "bbox": [[-1.0, 1.0]]},
            "exact_diffent_bits": 1.0,
        },
        "parts": [
            {"type": "branch", "name": "neg", "kind": "bijective",
             "region": {"predicate": "x1 <= 0 and x1 >= -1", "bbox": [[-1.0, 0.0]]},
             "forward": ["x1^2"], "inverse": ["-sqrt(y1)"],
             "jac_abs_det": "2*abs(x1)"},
            {"type": "branch", "name": "pos", "kind": "bijective",
             "region": {"predicate": "x1 > 0 and x1 <= 1", "bbox": [[0.0, 1.0]]},
             "forward": ["x1^2"], "inverse": ["sqrt(y1)"],
             "jac_abs_det": "2*abs(x1)"},
        ],
    }


def test_acceptance_6g_even_symmetry_square_law(setups):
    cases = {"gaussian": setups["ex2_square_gaussian"],
             "uniform": load_config(_uniform_square_config()),
             "laplace": load_config(_laplace_square_config())}
    vals = []
    for label, setup in cases.items():
        rep = loss_eq5_mc(setup.pmap, setup.density, NP, SEED)
        assert rep.loss_bits == pytest.approx(1.0, abs=0.01), label
        vals.append(f"{label}:{rep.loss_bits:.4f}")
    announce("6g", "squaring any even-symmetric input loses one bit: "
             + ", ".join(vals))


# --- criterion 7: determinism -----------------------------------------------------------

def test_acceptance_7_determinism():
    def run(workers):
        res = subprocess.run(
            [sys.executable, "-m", "infoloss", "report", "ex1_fold_square",
             "--n", "100000", "--seed", "5", "--workers", str(workers)],
            capture_output=True, text=True, check=True)
        return res.stdout

    first = run(1)
    second = run(1)
    parallel = run(8)
    assert first == second
    assert first == parallel
    digest = json.loads(first)["model_digest"][:12]
    announce("7", f"byte-identical reports across runs and worker counts "
             f"(digest {digest}, {len(first)} bytes)")
