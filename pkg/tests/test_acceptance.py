"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Budgets follow the stated tolerances: exact checks are exact, statistical
checks run at 1e6 samples with 3 sigma bands, and every criterion carries its
stated wall-clock limit.
"""

import time
from fractions import Fraction

import pytest

from opk.graphs import make_graph
from opk.poly import poisson_algebra, random_poly
from opk.quantize import build_mu
from opk.schouten import schouten_bracket
from opk.trees import d_squared, generators
from opk.verify import (
    verify_bernoulli,
    verify_graphs,
    verify_schouten,
    verify_star,
    verify_stokes,
    verify_weights,
)
from opk.weights import snap_rational, weight

MC_SAMPLES = 1_000_000
STAR_SAMPLES = 2_000_000


def announce(number: int, name: str, ok: bool, t0: float, limit: float):
    dt = time.time() - t0
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} ({dt:.1f}s / {limit:.0f}s)"
    print(line, flush=True)
    assert ok, line
    assert dt < limit, f"criterion {number} exceeded its runtime budget: {dt:.1f}s"


def test_criterion_1_d_squared_over_Q():
    t0 = time.time()
    ok = True
    for family, bound in (("ass", 6), ("mor_ass", 5), ("lie", 6)):
        for kind in generators(family, bound):
            ok = ok and d_squared(kind).is_zero()
    announce(1, "d^2 = 0 over Q (ass<=6, mor_ass<=5, lie<=6)", ok, t0, 60)


def test_criterion_2_d_squared_over_F2():
    t0 = time.time()
    ok = True
    q_note = []
    for family, bound in (("ocha", 8), ("mor_lie", 5), ("mor_ocha", 6)):
        for kind in generators(family, bound):
            res = d_squared(kind)
            ok = ok and res.mod2().is_zero()
            if not res.is_zero():
                q_note.append(kind)
    print(f"      Q outcome for the F2 families: "
          f"{'also zero over Q' if not q_note else f'nonzero over Q at {q_note}'}",
          flush=True)
    announce(2, "d^2 = 0 over F2 (ocha<=8, mor_lie<=5, mor_ocha<=6)", ok, t0, 120)


def test_criterion_3_composition_example():
    t0 = time.time()
    rep = verify_graphs()
    announce(3, "two-cycle composition gives 4 graphs with coefficient +1",
             rep.passed, t0, 10)


def test_criterion_4_representation_identity():
    t0 = time.time()
    rep = verify_schouten(seed=0)
    ok = all(c.passed for c in rep.checks if c.name.startswith("representation"))
    announce(4, "representation identity residual == 0 (<=4 vertices, <=3 edges, "
                "d in {2,3})", ok, t0, 60)


def test_criterion_5_bracket_suite():
    t0 = time.time()
    rep = verify_schouten(seed=1)
    names = ("bracket symmetry", "bracket Jacobi", "bracket = signed sum",
             "{psi_a . x^b}")
    ok = all(c.passed for c in rep.checks
             if any(c.name.startswith(n) for n in names))
    announce(5, "bracket symmetry, Jacobi, one-edge identity, generator table",
             ok, t0, 30)


def test_criterion_6_bernoulli_suite():
    t0 = time.time()
    rep = verify_bernoulli(degree=5, hbar_order=4)
    announce(6, "Bernoulli suite exact through x-degree 5 and hbar^4",
             rep.passed, t0, 60)


def test_criterion_7_weights(weight_cache):
    t0 = time.time()
    rep = verify_weights(n_samples=MC_SAMPLES, seed=0, cache=weight_cache)
    announce(7, "weights: exact edge, zero-by-degree sweep, vanishing lemma",
             rep.passed, t0, 300)


def test_criterion_8_stokes(weight_cache):
    t0 = time.time()
    rep = verify_stokes(n_samples=MC_SAMPLES, seed=0, cache=weight_cache)
    announce(8, "Stokes residual within 3 sigma for two 4-vertex families",
             rep.passed, t0, 600)


def test_criterion_9_wedge_snap(weight_cache):
    t0 = time.time()
    wedge = make_graph(1, 2, [(1, 2), (1, 3)], 2, "down")
    est = weight(wedge, "kontsevich", MC_SAMPLES, seed=42, cache=weight_cache)
    snapped = snap_rational(est.mean, est.stderr, 16)
    ok = snapped == Fraction(1, 2) and est.stderr < 1e-3
    announce(9, f"wedge weight snaps to 1/2 "
                f"({est.mean:.6f} +- {est.stderr:.2g})", ok, t0, 300)


def test_criterion_10_star_product(weight_cache):
    t0 = time.time()
    rep = verify_star(n_samples=STAR_SAMPLES, seed=42, cache=weight_cache)
    names = ("star coefficients", "associativity residual", "hbar-slice")
    ok = all(c.passed for c in rep.checks
             if any(c.name.startswith(n) for n in names))
    announce(10, "star product order hbar^2: exact associativity and "
                 "hbar-slice identity", ok, t0, 600)


def test_criterion_11_homogeneous_recovery(weight_cache):
    t0 = time.time()
    spec = poisson_algebra(2, 2)
    mu2 = build_mu(2, "sphere_vol", 2, cache=weight_cache)
    import random
    rng = random.Random(0)
    ok = True
    for _ in range(10):
        f = random_poly(spec, rng, 3)
        g = random_poly(spec, rng, 3)
        ok = ok and (mu2([f, g]) - schouten_bracket(f, g)).is_zero()
    mu3 = build_mu(2, "sphere_vol", 3, n_samples=MC_SAMPLES // 2, seed=1,
                   cache=weight_cache)
    ok = ok and mu3.is_zero() and mu3.float_terms == 0
    announce(11, "build_mu(2,sphere,2) = Schouten bracket; build_mu(2,sphere,3) = 0",
             ok, t0, 300)


@pytest.fixture(scope="module")
def weight_cache(tmp_path_factory):
    from opk.weights import WeightCache
    return WeightCache(str(tmp_path_factory.mktemp("opk-cache")))
