"""Brackets, graph operators and the Bernoulli deformation.

The bracket on a pairing algebra is

    {f . g}  =  sum (f <-d/d s)(d/d t -> g)
             +  (-1)**(|f||g| + (d-1)(|f|+|g|) + d) sum (g <-d/d s)(d/d t -> f)

summed over the pairing list ((s, t) generator pairs).  Graph operators apply
one derivative pair per edge (source factor gets the s-derivative, target
factor the t-derivative) and multiply the tensor factors out; the edge-list
order is the operator composition order, rightmost edge acting first.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import comb
from typing import Callable, Sequence

from .graphs import AERIAL, FeynmanGraph, GraphError, GraphSum, compose, normalize
from .poly import (
    AlgebraError,
    AlgebraSpec,
    GradedPoly,
    Tensor,
    _mono_degree,
    poisson_algebra,
    random_poly,
    two_pairing_algebra,
)

__all__ = [
    "schouten_bracket", "phi_graph", "phi_graph_coloured", "representation_check",
    "mc_residual", "bernoulli_numbers", "bernoulli_hatC", "hatC_residual",
    "co_jacobi_residual", "gamma_delta", "deformed_bracket", "poisson_algebra",
    "two_pairing_algebra", "delta_element", "StructureConstants",
]


def _bracket_halves(f: GradedPoly, g: GradedPoly) -> GradedPoly:
    spec = f.spec
    out = GradedPoly.zero(spec)
    for si, ti in spec.pairing:
        out = out + f.partial_right(spec.names[si]) * g.partial_left(spec.names[ti])
    return out


def schouten_bracket(f: GradedPoly, g: GradedPoly) -> GradedPoly:
    """Degree 1-d bracket of the pairing algebra, defined on homogeneous parts."""
    if f.spec != g.spec:
        raise AlgebraError("mixed algebra specs")
    spec = f.spec
    out = GradedPoly.zero(spec)
    for df, fpart in f.homogeneous_parts().items():
        for dg, gpart in g.homogeneous_parts().items():
            sign = (-1) ** (df * dg + (spec.d - 1) * (df + dg) + spec.d)
            out = out + _bracket_halves(fpart, gpart) \
                + sign * _bracket_halves(gpart, fpart)
    return out


def bracket_symmetry_sign(spec: AlgebraSpec, deg_f: int, deg_g: int) -> int:
    return (-1) ** (deg_f * deg_g + (spec.d - 1) * (deg_f + deg_g) + spec.d)


def _suspension_sign(d: int, degrees: Sequence[int]) -> int:
    """(-1)**((d-1) * sum (n-i) |f_i|), the operadic suspension twist."""
    if (d - 1) % 2 == 0:
        return 1
    n = len(degrees)
    return (-1) ** (sum((n - i) * degrees[i - 1] for i in range(1, n + 1)) % 2)


def _phi_homogeneous(g: FeynmanGraph, inputs: Sequence[GradedPoly]) -> GradedPoly:
    tensor = Tensor.of(inputs)
    for s, t in reversed(g.edges):
        tensor = tensor.apply_edge(s - 1, t - 1)
    out = tensor.multiply_out()
    sign = _suspension_sign(inputs[0].spec.d, [f.degree() for f in inputs])
    return sign * out


def _hbar_homogeneous_parts(f: GradedPoly) -> list[tuple[int, GradedPoly]]:
    """Split into (hbar power, hbar-free homogeneous polynomial) pieces."""
    buckets: dict[tuple[int, int], GradedPoly] = {}
    spec = f.spec
    for (h, m), c in f.terms.items():
        deg = _mono_degree(spec, m)
        buckets.setdefault((h, deg), GradedPoly.zero(spec)).terms[(0, m)] = c
    return [(h, p) for (h, _), p in sorted(buckets.items())]


def _distribute(inputs: Sequence[GradedPoly]):
    """Expand possibly inhomogeneous hbar-series inputs into (hbar power,
    homogeneous factors) combinations."""
    parts = [_hbar_homogeneous_parts(f) for f in inputs]
    for combo in itertools.product(*parts):
        h_total = sum(h for h, _ in combo)
        yield h_total, tuple(p for _, p in combo)


def phi_graph(g: FeynmanGraph, inputs: Sequence[GradedPoly]) -> GradedPoly:
    """The polydifferential operator of an aerial graph: one derivative pair
    per edge, then the product, with the suspension twist that makes the two
    one-edge graphs reproduce the bracket halves.  Depends on the stored edge
    order through a factor sign(permutation)**(d-1)."""
    if g.m_ground:
        raise GraphError("phi_graph needs an aerial-only graph")
    if len(inputs) != len(g.vertices):
        raise GraphError(f"need {len(g.vertices)} inputs, got {len(inputs)}")
    spec = inputs[0].spec
    out = GradedPoly.zero(spec)
    for h_total, combo in _distribute(inputs):
        if any(f.is_zero() for f in combo):
            continue
        out = out + _phi_homogeneous(g, combo).hbar_times(h_total)
    return out


def down_subalgebra_ok(f: GradedPoly) -> bool:
    dim = f.spec.dim
    return all(not any(m[dim:2 * dim]) for (_, m) in f.terms)


def up_subalgebra_ok(f: GradedPoly) -> bool:
    dim = f.spec.dim
    return all(not any(m[:dim]) for (_, m) in f.terms)


def _project(p: GradedPoly, mode: str) -> GradedPoly:
    dim = p.spec.dim
    keep = {}
    for (h, m), c in p.terms.items():
        if mode == "down" and any(m[dim:2 * dim]):
            continue
        if mode == "up" and any(m[:dim]):
            continue
        keep[(h, m)] = c
    return GradedPoly(p.spec, keep)


def phi_graph_coloured(g: FeynmanGraph, aerial_inputs: Sequence[GradedPoly],
                       ground_inputs: Sequence[GradedPoly], mode: str) -> GradedPoly:
    """Two-coloured operator: aerial inputs first, then the ground ones, with a
    final projection killing psi-monomials (mode=down) or x-monomials (up)."""
    if mode not in ("down", "up"):
        raise GraphError(f"unknown mode {mode!r}")
    if g.arrow_mode != mode:
        raise GraphError(f"graph arrow mode {g.arrow_mode!r} does not match {mode!r}")
    if len(aerial_inputs) != g.n_aerial or len(ground_inputs) != g.m_ground:
        raise GraphError("input counts do not match the graph")
    check = down_subalgebra_ok if mode == "down" else up_subalgebra_ok
    for f in ground_inputs:
        if not check(f):
            raise AlgebraError("ground input outside the required subalgebra")
    spec = aerial_inputs[0].spec if aerial_inputs else ground_inputs[0].spec
    out = GradedPoly.zero(spec)
    for h_total, combo in _distribute(list(aerial_inputs) + list(ground_inputs)):
        if any(f.is_zero() for f in combo):
            continue
        out = out + _phi_homogeneous(g, combo).hbar_times(h_total)
    return _project(out, mode)


def _unshuffle_sign(blocks: Sequence[Sequence[int]], degrees: Sequence[int]) -> int:
    """Koszul sign of regrouping the inputs 1..n into consecutive blocks."""
    seq = [i for blk in blocks for i in sorted(blk)]
    sign = 1
    for a in range(len(seq)):
        for b in range(a + 1, len(seq)):
            if seq[a] > seq[b]:
                sign *= (-1) ** (degrees[seq[a] - 1] * degrees[seq[b] - 1])
    return sign


def representation_check(g0: FeynmanGraph, parts: Sequence[FeynmanGraph],
                         partition: Sequence[Sequence[int]],
                         inputs: Sequence[GradedPoly]) -> GradedPoly:
    """Residual of the operad-representation identity on the given inputs:
    the Koszul-signed nested application minus the composed graph sum.  The
    nested sign is the unshuffle sign of regrouping the inputs into blocks,
    the operator-composition sign, and the suspension bookkeeping of the
    per-graph twist; the residual is identically zero."""
    spec = inputs[0].spec
    out = GradedPoly.zero(spec)
    for h_total, combo in _distribute(inputs):
        if any(f.is_zero() for f in combo):
            continue
        res = _representation_residual_homogeneous(g0, parts, partition, combo)
        out = out + res.hbar_times(h_total)
    return out


def _representation_residual_homogeneous(g0, parts, partition, inputs) -> GradedPoly:
    spec = inputs[0].spec
    d = spec.d
    blocks = [tuple(sorted(b)) for b in partition]
    degs = [f.degree() for f in inputs]
    op_par = [((d - 1) * len(p.edges)) % 2 for p in parts]
    block_degs = [[degs[i - 1] for i in blk] for blk in blocks]
    bsum = [sum(bd) % 2 for bd in block_degs]
    kos = 0
    for j in range(len(parts)):
        for i in range(j):
            kos += op_par[j] * bsum[i]
    tw = 0
    if (d - 1) % 2:
        # suspension corrections: the flat twist, the outer twist on block
        # outputs, and the per-part twists
        n = len(inputs)
        tw += sum((n - i) * degs[i - 1] for i in range(1, n + 1))
        outs = [sum(bd) - (d - 1) * len(p.edges) for bd, p in zip(block_degs, parts)]
        p_ = len(parts)
        tw += sum((p_ - j) * outs[j - 1] for j in range(1, p_ + 1))
        for bd in block_degs:
            tw += sum((len(bd) - i) * bd[i - 1] for i in range(1, len(bd) + 1))
    sign = _unshuffle_sign(blocks, degs) * (-1) ** ((kos + tw) % 2)
    block_inputs = [phi_graph(part, [inputs[i - 1] for i in blk])
                    for part, blk in zip(parts, blocks)]
    nested = sign * phi_graph(g0, block_inputs)
    total = GradedPoly.zero(spec)
    for term, coeff in compose(g0, parts, partition):
        total = total + coeff * phi_graph(term, inputs)
    return nested - total


def mc_residual(gamma: GradedPoly) -> GradedPoly:
    """{gamma . gamma}, plus 2{delta, gamma} in the two-pairing algebra."""
    spec = gamma.spec
    if not gamma.is_zero() and gamma.degree() != spec.d:
        raise AlgebraError(f"Maurer-Cartan elements must have degree {spec.d}")
    res = schouten_bracket(gamma, gamma)
    if spec.ngen == 4 * spec.dim:  # two-pairing algebra carries d = {delta, .}
        res = res + 2 * schouten_bracket(delta_element(spec), gamma)
    return res


def delta_element(spec: AlgebraSpec) -> GradedPoly:
    """delta = sum eta^a y_a, the de Rham-type differential of the d=3 algebra."""
    if spec.ngen != 4 * spec.dim:
        raise AlgebraError("delta lives in the two-pairing algebra")
    out = GradedPoly.zero(spec)
    for i in range(1, spec.dim + 1):
        out = out + GradedPoly.gen(spec, f"eta{i}") * GradedPoly.gen(spec, f"y{i}")
    return out


# --- Bernoulli machinery -------------------------------------------------------

def bernoulli_numbers(n: int) -> list[Fraction]:
    """B_0..B_n with B_1 = -1/2, via sum_j C(k+1, j) B_j = 0."""
    out = [Fraction(1)]
    for k in range(1, n + 1):
        s = sum(Fraction(comb(k + 1, j)) * out[j] for j in range(k))
        out.append(-s / (k + 1))
    return out


class StructureConstants:
    """Antisymmetric constants C_{ab}^c of a Lie coalgebra on dim generators."""

    def __init__(self, dim: int, entries: dict[tuple[int, int, int], Fraction | int]):
        self.dim = dim
        self.c: dict[tuple[int, int, int], Fraction] = {}
        for (a, b, c), v in entries.items():
            v = Fraction(v)
            if not (1 <= a <= dim and 1 <= b <= dim and 1 <= c <= dim):
                raise AlgebraError("index out of range")
            if a == b and v:
                raise AlgebraError("C must be antisymmetric in the lower indices")
            if not v:
                continue
            if (a, b, c) in self.c and self.c[(a, b, c)] != v:
                raise AlgebraError("conflicting entries")
            self.c[(a, b, c)] = v
            if self.c.get((b, a, c), -v) != -v:
                raise AlgebraError("C must be antisymmetric in the lower indices")
            self.c[(b, a, c)] = -v

    def __call__(self, a: int, b: int, c: int) -> Fraction:
        return self.c.get((a, b, c), Fraction(0))

    def co_jacobi_residual(self) -> dict[tuple[int, int, int, int], Fraction]:
        """Violations of sum_x C_{a x}^d C_{b c}^x + cyclic = 0, keyed by
        (a, b, c, d); empty when the dual bracket satisfies Jacobi."""
        bad = {}
        rng = range(1, self.dim + 1)
        for a, b, c, d in itertools.product(rng, repeat=4):
            s = Fraction(0)
            for x in rng:
                s += self(a, x, d) * self(b, c, x)
                s += self(c, x, d) * self(a, b, x)
                s += self(b, x, d) * self(c, a, x)
            if s:
                bad[(a, b, c, d)] = s
        return bad


def co_jacobi_residual(C: StructureConstants):
    return C.co_jacobi_residual()


def _word_matrices(spec: AlgebraSpec, C: StructureConstants, N: int
                   ) -> list[list[list[GradedPoly]]]:
    """W_k[a][b] = sum C_{a x1}^{z1} C_{z1 x2}^{z2} ... C_{z_{k-1} xk}^{b}
    x^{x1}...x^{xk} for k = 1..N (index 0 unused)."""
    dim = C.dim
    x = [GradedPoly.gen(spec, f"x{i}") for i in range(1, dim + 1)]
    step = [[GradedPoly.zero(spec) for _ in range(dim)] for _ in range(dim)]
    for a in range(1, dim + 1):
        for b in range(1, dim + 1):
            for xi in range(1, dim + 1):
                v = C(a, xi, b)
                if v:
                    step[a - 1][b - 1] = step[a - 1][b - 1] + v * x[xi - 1]
    words = [None, step]
    for _ in range(2, N + 1):
        prev = words[-1]
        nxt = [[GradedPoly.zero(spec) for _ in range(dim)] for _ in range(dim)]
        for a in range(dim):
            for b in range(dim):
                acc = GradedPoly.zero(spec)
                for z in range(dim):
                    if not prev[a][z].is_zero():
                        acc = acc + prev[a][z] * step[z][b]
                nxt[a][b] = acc
        words.append(nxt)
    return words


def bernoulli_hatC(C: StructureConstants, N: int,
                   spec: AlgebraSpec | None = None,
                   hbar: bool = False) -> list[list[GradedPoly]]:
    """hatC_a^b(x) = delta_a^b + sum_{k=1..N} B_k/k! (C-word of length k),
    optionally weighting the x-degree k term with hbar**k."""
    if N < 1:
        raise AlgebraError("need N >= 1")
    if spec is None:
        spec = poisson_algebra(2, C.dim)
    dim = C.dim
    B = bernoulli_numbers(N)
    words = _word_matrices(spec, C, N)
    fact = [Fraction(1)]
    for k in range(1, N + 1):
        fact.append(fact[-1] * k)
    out = [[GradedPoly.zero(spec) for _ in range(dim)] for _ in range(dim)]
    for a in range(dim):
        for b in range(dim):
            acc = GradedPoly.one(spec) if a == b else GradedPoly.zero(spec)
            for k in range(1, N + 1):
                if B[k] == 0:
                    continue
                term = (B[k] / fact[k]) * words[k][a][b]
                if hbar:
                    term = term.hbar_times(k)
                acc = acc + term
            out[a][b] = acc
    return out


def hatC_residual(C: StructureConstants, N: int) -> list[GradedPoly]:
    """Residuals of C_{ab}^g hatC_g^d = hatC_a^g d_g hatC_b^d - hatC_b^g d_g
    hatC_a^d, truncated at x-degree N-1; all zero iff the map is a Lie algebra
    morphism to that order."""
    spec = poisson_algebra(2, C.dim)
    dim = C.dim
    hat = bernoulli_hatC(C, N, spec)
    out = []
    for a in range(1, dim + 1):
        for b in range(1, dim + 1):
            for dd in range(1, dim + 1):
                lhs = GradedPoly.zero(spec)
                for g in range(1, dim + 1):
                    v = C(a, b, g)
                    if v:
                        lhs = lhs + v * hat[g - 1][dd - 1]
                rhs = GradedPoly.zero(spec)
                for g in range(1, dim + 1):
                    name = f"x{g}"
                    rhs = rhs + hat[a - 1][g - 1] * hat[b - 1][dd - 1].partial_left(name)
                    rhs = rhs - hat[b - 1][g - 1] * hat[a - 1][dd - 1].partial_left(name)
                out.append((lhs - rhs).truncate_xdeg(N - 1))
    return out


def gamma_delta(C: StructureConstants, N: int) -> GradedPoly:
    """The Maurer-Cartan element of the two-pairing algebra attached to a Lie
    coalgebra: a quadratic eta-eta-psi term plus the Bernoulli series coupling
    eta to y.  Raises when the co-Jacobi identity fails."""
    bad = C.co_jacobi_residual()
    if bad:
        key = next(iter(sorted(bad)))
        raise AlgebraError(f"co-Jacobi fails at (a,b,c,d)={key}: {bad[key]}")
    spec = two_pairing_algebra(C.dim)
    dim = C.dim
    eta = [GradedPoly.gen(spec, f"eta{i}") for i in range(1, dim + 1)]
    psi = [GradedPoly.gen(spec, f"psi{i}") for i in range(1, dim + 1)]
    y = [GradedPoly.gen(spec, f"y{i}") for i in range(1, dim + 1)]
    out = GradedPoly.zero(spec)
    for a in range(1, dim + 1):
        for b in range(1, dim + 1):
            for dd in range(1, dim + 1):
                v = C(a, b, dd)
                if v:
                    out = out + (-Fraction(1, 2)) * v * (eta[a - 1] * eta[b - 1] * psi[dd - 1])
    hat = bernoulli_hatC(C, N, spec)
    one = GradedPoly.one(spec)
    for a in range(dim):
        for b in range(dim):
            series = hat[a][b] - (one if a == b else GradedPoly.zero(spec))
            if not series.is_zero():
                out = out + series * eta[a] * y[b]
    return out


# --- the deformed Gerstenhaber bracket ----------------------------------------

def deformed_bracket(C: StructureConstants, order: int
                     ) -> Callable[[GradedPoly, GradedPoly], GradedPoly]:
    """The one-parameter bracket on polyvector fields attached to a Lie
    coalgebra: {x,x} = 0, {psi_a . x^b} = hatC_a^b(hbar x), {psi_a . psi_b} =
    hbar C_{ab}^g psi_g, extended as a biderivation; results are truncated at
    hbar**order."""
    spec = poisson_algebra(2, C.dim)
    dim = C.dim
    hat = bernoulli_hatC(C, order, spec, hbar=True)
    psi = [GradedPoly.gen(spec, f"psi{i}") for i in range(1, dim + 1)]
    # value table on ordered generator pairs
    table: dict[tuple[str, str], GradedPoly] = {}
    for a in range(1, dim + 1):
        for b in range(1, dim + 1):
            val = hat[a - 1][b - 1]
            table[(f"psi{a}", f"x{b}")] = val
            table[(f"x{b}", f"psi{a}")] = -1 * val
            pp = GradedPoly.zero(spec)
            for g in range(1, dim + 1):
                v = C(a, b, g)
                if v:
                    pp = pp + v * psi[g - 1]
            table[(f"psi{a}", f"psi{b}")] = pp.hbar_times(1)

    def bracket(f: GradedPoly, g: GradedPoly) -> GradedPoly:
        if f.spec != spec or g.spec != spec:
            raise AlgebraError("inputs must live in the bracket's algebra")
        out = GradedPoly.zero(spec)
        for (un, vn), val in table.items():
            if val.is_zero():
                continue
            left = f.partial_right(un)
            if left.is_zero():
                continue
            right = g.partial_left(vn)
            if right.is_zero():
                continue
            out = out + left * val * right
        return out.truncate_hbar(order)

    return bracket
