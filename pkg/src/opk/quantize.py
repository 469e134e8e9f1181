"""Quantized operators: induced brackets, star products and twisted operations.

Everything here is an assembly step: enumerate the graphs of the right degree,
estimate their weights, snap the estimates to small rationals, and attach the
graph operators.  Snapped coefficients make the downstream identity checks
exact; a failed snap degrades the coefficient to a float and is flagged in the
provenance record.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .graphs import FeynmanGraph, GraphError, enumerate_graphs, make_graph
from .poly import AlgebraSpec, GradedPoly
from .schouten import mc_residual, phi_graph, phi_graph_coloured
from .weights import WeightCache, WeightEstimate, snap_rational, weight

_MODE_FOR_PROP = {"kontsevich": "down", "anti_kontsevich": "up",
                  "angle": "free", "sphere_vol": "free"}


@dataclass
class WeightedTerm:
    graph: FeynmanGraph
    coeff: Fraction | float
    estimate: WeightEstimate
    snapped: bool
    skipped_zero_operator: bool = False


@dataclass
class WeightedGraphOperator:
    """Sum of snapped weights times graph operators, of fixed arity."""

    d: int
    prop: str
    arity: int
    terms: list[WeightedTerm] = field(default_factory=list)

    @property
    def float_terms(self) -> int:
        return sum(1 for t in self.terms if not t.snapped)

    def is_zero(self) -> bool:
        return all(t.coeff == 0 for t in self.terms)

    def __call__(self, inputs: Sequence[GradedPoly]) -> GradedPoly:
        if len(inputs) != self.arity:
            raise GraphError(f"operator arity {self.arity}, got {len(inputs)}")
        spec = inputs[0].spec
        out = GradedPoly.zero(spec)
        for t in self.terms:
            if t.coeff == 0:
                continue
            out = out + t.coeff * phi_graph(t.graph, inputs)
        return out


def _snap_term(g: FeynmanGraph, prop: str, n_samples: int, seed: int,
               snap_denominator: int, cache: WeightCache | None,
               space: str = "auto") -> WeightedTerm:
    est = weight(g, prop, n_samples, seed, cache=cache, space=space)
    if est.zero_by_degree:
        return WeightedTerm(g, Fraction(0), est, True)
    if est.exact:
        frac = Fraction(est.mean).limit_denominator(snap_denominator)
        return WeightedTerm(g, frac, est, True)
    snapped = snap_rational(est.mean, est.stderr, snap_denominator)
    if snapped is None:
        return WeightedTerm(g, est.mean, est, False)
    return WeightedTerm(g, snapped, est, True)


def build_mu(d: int, prop: str, n: int, n_samples: int = 200_000, seed: int = 0,
             snap_denominator: int = 16, cache: WeightCache | None = None
             ) -> WeightedGraphOperator:
    """The n-ary operation of the quantized aerial theory: weights times graph
    operators over the graphs of top form degree; empty when the degree count
    is not divisible."""
    if n < 2:
        raise GraphError("operations start at arity 2")
    op = WeightedGraphOperator(d, prop, n)
    if (n * d - 2) % (d - 1):
        return op
    l_edges = (n * d - 2) // (d - 1) - 1
    for k, g in enumerate(enumerate_graphs(n, 0, l_edges, d, "free")):
        op.terms.append(_snap_term(g, prop, n_samples, seed * 7919 + k,
                                   snap_denominator, cache, space="rd"))
    return op


def _graph_mode(prop: str) -> str:
    try:
        return _MODE_FOR_PROP[prop]
    except KeyError:
        raise GraphError(f"unknown propagator {prop!r}") from None


def _phi_star(g: FeynmanGraph, gammas: Sequence[GradedPoly],
              grounds: Sequence[GradedPoly], mode: str) -> GradedPoly:
    if mode == "free":
        inputs = list(gammas) + list(grounds)
        aer = make_graph(g.n_aerial, g.m_ground, g.edges, g.d, "free")
        from .schouten import _distribute, _phi_homogeneous
        spec = inputs[0].spec
        out = GradedPoly.zero(spec)
        for h_total, combo in _distribute(inputs):
            if any(f.is_zero() for f in combo):
                continue
            out = out + _phi_homogeneous(aer, combo).hbar_times(h_total)
        return out
    return phi_graph_coloured(g, gammas, grounds, mode)


def _operator_vanishes(g: FeynmanGraph, gamma: GradedPoly) -> bool:
    """Structural zero test: an aerial slot dies when the edges at it demand
    more derivatives than gamma carries."""
    spec = gamma.spec
    dim = spec.dim
    max_psi = max((sum(m[dim:2 * dim]) for _, m in gamma.terms), default=0)
    max_x = max((sum(m[:dim]) for _, m in gamma.terms), default=0)
    n = g.n_aerial
    for v in range(1, n + 1):
        out_deg = sum(1 for s, _ in g.edges if s == v)
        in_deg = sum(1 for _, t in g.edges if t == v)
        if out_deg > max_psi or in_deg > max_x:
            return True
    return False


@dataclass
class StarProduct:
    """Truncated hbar-series deformation of the ground-slot product."""

    gamma: GradedPoly
    prop: str
    order: int
    terms: list[tuple[int, WeightedTerm]] = field(default_factory=list)

    @property
    def mode(self) -> str:
        return _graph_mode(self.prop)

    def __call__(self, f: GradedPoly, g: GradedPoly) -> GradedPoly:
        out = f * g
        factorials = [1]
        for k in range(1, self.order + 1):
            factorials.append(factorials[-1] * k)
        for k, term in self.terms:
            if term.coeff == 0 or term.skipped_zero_operator:
                continue
            val = _phi_star(term.graph, [self.gamma] * k, [f, g], self.mode)
            if val.is_zero():
                continue
            coeff = term.coeff * Fraction(1, factorials[k]) \
                if isinstance(term.coeff, Fraction) else term.coeff / factorials[k]
            out = out + (coeff * val).hbar_times(k)
        return out.truncate_hbar(self.order)

    @property
    def float_terms(self) -> int:
        return sum(1 for _, t in self.terms if not t.snapped)


def star_product(gamma: GradedPoly, prop: str, order: int = 2,
                 n_samples: int = 200_000, seed: int = 0,
                 snap_denominator: int = 16, cache: WeightCache | None = None
                 ) -> StarProduct:
    """Assemble f*g = fg + sum_k hbar^k/k! sum_Gamma w_Gamma Phi(gamma^k; f, g)
    over the mode's graphs with k aerial and 2 ground vertices and 2k edges."""
    spec = gamma.spec
    if spec.d != 2:
        raise GraphError("star products are assembled for d = 2")
    if not gamma.is_zero() and gamma.degree() != 2:
        raise GraphError("gamma must be a bivector")
    mode = _graph_mode(prop)
    gmode = mode if mode in ("down", "up") else "free"
    star = StarProduct(gamma, prop, order)
    for k in range(1, order + 1):
        for i, g in enumerate(enumerate_graphs(k, 2, 2 * k, 2, gmode)):
            if _operator_vanishes(g, gamma):
                est = WeightEstimate(0.0, 0.0, 0, seed, exact=True)
                star.terms.append((k, WeightedTerm(g, Fraction(0), est, True,
                                                   skipped_zero_operator=True)))
                continue
            term = _snap_term(g, prop, n_samples, seed * 104729 + 1000 * k + i,
                              snap_denominator, cache, space="half")
            star.terms.append((k, term))
    return star


def associativity_residual(star: StarProduct, f: GradedPoly, g: GradedPoly,
                           h: GradedPoly) -> GradedPoly:
    """(f*g)*h - f*(g*h), truncated at the star's hbar order."""
    lhs = star(star(f, g), h)
    rhs = star(f, star(g, h))
    return (lhs - rhs).truncate_hbar(star.order)


def ocha_twist(gamma: GradedPoly, prop: str, m: int, order: int = 2,
               n_samples: int = 200_000, seed: int = 0,
               snap_denominator: int = 16, cache: WeightCache | None = None,
               mc_tolerance_degree: int | None = None):
    """The m-ary operation of the gamma-twisted theory,
    mu_m = sum_k hbar^k/k! sum w_Gamma Phi(gamma^k; f_1..f_m); for m = 0 the
    curvature element is returned directly."""
    res = mc_residual(gamma)
    if mc_tolerance_degree is not None:
        res = res.truncate_xdeg(mc_tolerance_degree)
    if not res.is_zero():
        raise GraphError(f"gamma is not Maurer-Cartan: residual {res!r}")
    mode = _graph_mode(prop)
    gmode = mode if mode in ("down", "up") else "free"
    terms: list[tuple[int, WeightedTerm]] = []
    for k in range(0, order + 1):
        l_edges = 2 * k + m - 2  # the slice dimension
        if l_edges < 0 or (k == 0 and m < 2):
            continue
        for i, g in enumerate(enumerate_graphs(k, m, l_edges, 2, gmode)):
            if k and _operator_vanishes(g, gamma):
                continue
            term = _snap_term(g, prop, n_samples, seed * 15485863 + 977 * k + i,
                              snap_denominator, cache, space="half")
            terms.append((k, term))
    factorials = [1]
    for k in range(1, order + 1):
        factorials.append(factorials[-1] * k)

    if m == 0:
        spec = gamma.spec
        out = GradedPoly.zero(spec)
        for k, term in terms:
            if term.coeff == 0:
                continue
            val = _phi_star(term.graph, [gamma] * k, [], mode)
            coeff = term.coeff * Fraction(1, factorials[k]) \
                if isinstance(term.coeff, Fraction) else term.coeff / factorials[k]
            out = out + (coeff * val).hbar_times(k)
        return out.truncate_hbar(order)

    def operation(*fs: GradedPoly) -> GradedPoly:
        if len(fs) != m:
            raise GraphError(f"twisted operation has arity {m}")
        spec = fs[0].spec
        out = GradedPoly.zero(spec)
        for k, term in terms:
            if term.coeff == 0:
                continue
            val = _phi_star(term.graph, [gamma] * k, list(fs), mode)
            if val.is_zero():
                continue
            coeff = term.coeff * Fraction(1, factorials[k]) \
                if isinstance(term.coeff, Fraction) else term.coeff / factorials[k]
            out = out + (coeff * val).hbar_times(k)
        return out.truncate_hbar(order)

    operation.terms = terms
    return operation
