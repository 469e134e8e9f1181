"""Exact graded-commutative polynomials on finitely many generators.

Monomials are exponent tuples over a fixed global generator order; odd
generators square to zero and reordering follows the Koszul rule.  A formal
central parameter hbar is carried as a separate exponent on each term, so an
element is a map (hbar power, monomial) -> Fraction.

Two algebra shapes are provided:

* ``poisson_algebra(d, dim)`` -- generators x^a (degree d-2) and psi_a
  (degree 1), with the pairing (psi_a, x^a); for d=2 these are polyvector
  fields in affine coordinates.
* ``two_pairing_algebra(dim)`` -- the d=3 algebra on x^a (0), psi_a (1),
  eta^a (1), y_a (2) with pairings (y_a, x^a) and (eta^a, psi_a).

The pairing list drives the edge operators: an edge acts as the right
generator's derivative on the target factor followed by the left generator's
derivative on the source factor.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence


class AlgebraError(ValueError):
    pass


@dataclass(frozen=True)
class AlgebraSpec:
    d: int
    dim: int
    names: tuple[str, ...]
    degrees: tuple[int, ...]
    pairing: tuple[tuple[int, int], ...]  # (source-derivative gen, target gen)

    @property
    def ngen(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise AlgebraError(f"unknown generator {name!r}") from None

    def is_odd(self, i: int) -> bool:
        return self.degrees[i] % 2 == 1


def poisson_algebra(d: int, dim: int) -> AlgebraSpec:
    if d < 2 or dim < 1:
        raise AlgebraError("need d >= 2 and dim >= 1")
    names = tuple(f"x{i}" for i in range(1, dim + 1)) + \
        tuple(f"psi{i}" for i in range(1, dim + 1))
    degrees = (d - 2,) * dim + (1,) * dim
    pairing = tuple((dim + i, i) for i in range(dim))
    return AlgebraSpec(d, dim, names, degrees, pairing)


def two_pairing_algebra(dim: int) -> AlgebraSpec:
    """The d=3 algebra on x, psi, eta, y with both derivative pairings."""
    names = tuple(f"x{i}" for i in range(1, dim + 1)) + \
        tuple(f"psi{i}" for i in range(1, dim + 1)) + \
        tuple(f"eta{i}" for i in range(1, dim + 1)) + \
        tuple(f"y{i}" for i in range(1, dim + 1))
    degrees = (0,) * dim + (1,) * dim + (1,) * dim + (2,) * dim
    pairing = tuple((3 * dim + i, i) for i in range(dim)) + \
        tuple((2 * dim + i, dim + i) for i in range(dim))
    return AlgebraSpec(3, dim, names, degrees, pairing)


Mono = tuple[int, ...]
Key = tuple[int, Mono]


def _mono_degree(spec: AlgebraSpec, m: Mono) -> int:
    return sum(e * d for e, d in zip(m, spec.degrees))


def _mul_mono(spec: AlgebraSpec, a: Mono, b: Mono) -> tuple[Mono, int]:
    """Concatenate-and-sort with the Koszul sign; returns (mono, 0) on an odd
    generator square."""
    parity = 0
    for i in range(spec.ngen):
        if not b[i]:
            continue
        if spec.is_odd(i):
            if a[i]:
                return a, 0
            # move b's generator i past a's odd generators of higher position
            parity ^= sum(a[j] for j in range(i + 1, spec.ngen)
                          if spec.is_odd(j)) & 1
    mono = tuple(x + y for x, y in zip(a, b))
    return mono, (-1) ** parity


class GradedPoly:
    """Element of the free graded-commutative algebra over Q[[hbar]]."""

    __slots__ = ("spec", "terms")

    def __init__(self, spec: AlgebraSpec, terms: dict[Key, Fraction] | None = None):
        self.spec = spec
        self.terms: dict[Key, Fraction] = {}
        if terms:
            for k, c in terms.items():
                c = Fraction(c)
                if c:
                    self.terms[k] = c

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls, spec: AlgebraSpec) -> "GradedPoly":
        return cls(spec)

    @classmethod
    def one(cls, spec: AlgebraSpec) -> "GradedPoly":
        return cls(spec, {(0, (0,) * spec.ngen): Fraction(1)})

    @classmethod
    def gen(cls, spec: AlgebraSpec, name: str) -> "GradedPoly":
        i = spec.index(name)
        mono = tuple(1 if j == i else 0 for j in range(spec.ngen))
        return cls(spec, {(0, mono): Fraction(1)})

    @classmethod
    def const(cls, spec: AlgebraSpec, c) -> "GradedPoly":
        return cls(spec, {(0, (0,) * spec.ngen): Fraction(c)})

    # -- ring structure -------------------------------------------------------

    def _same(self, other: "GradedPoly") -> None:
        if self.spec != other.spec:
            raise AlgebraError("mixed algebra specs")

    def __add__(self, other: "GradedPoly") -> "GradedPoly":
        self._same(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            s = out.get(k, Fraction(0)) + c
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return GradedPoly(self.spec, out)

    def __sub__(self, other: "GradedPoly") -> "GradedPoly":
        return self + (other * -1)

    def __mul__(self, other) -> "GradedPoly":
        if isinstance(other, GradedPoly):
            self._same(other)
            out: dict[Key, Fraction] = {}
            for (h1, m1), c1 in self.terms.items():
                for (h2, m2), c2 in other.terms.items():
                    mono, sign = _mul_mono(self.spec, m1, m2)
                    if sign == 0:
                        continue
                    k = (h1 + h2, mono)
                    s = out.get(k, Fraction(0)) + sign * c1 * c2
                    if s:
                        out[k] = s
                    else:
                        out.pop(k, None)
            return GradedPoly(self.spec, out)
        c = Fraction(other)
        return GradedPoly(self.spec, {k: v * c for k, v in self.terms.items()})

    __rmul__ = __mul__

    def hbar_times(self, power: int = 1) -> "GradedPoly":
        return GradedPoly(self.spec,
                          {(h + power, m): c for (h, m), c in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, GradedPoly):
            return NotImplemented
        return self.spec == other.spec and self.terms == other.terms

    def __hash__(self):
        return hash((self.spec, frozenset(self.terms.items())))

    # -- grading ---------------------------------------------------------------

    def degrees_present(self) -> set[int]:
        return {_mono_degree(self.spec, m) for _, m in self.terms}

    def degree(self) -> int:
        """Degree of a homogeneous element (0 for the zero element)."""
        degs = self.degrees_present()
        if not degs:
            return 0
        if len(degs) > 1:
            raise AlgebraError(f"inhomogeneous element, degrees {sorted(degs)}")
        return degs.pop()

    def homogeneous_parts(self) -> dict[int, "GradedPoly"]:
        out: dict[int, GradedPoly] = {}
        for (h, m), c in self.terms.items():
            deg = _mono_degree(self.spec, m)
            out.setdefault(deg, GradedPoly(self.spec)).terms[(h, m)] = c
        return out

    def hbar_slice(self, power: int) -> "GradedPoly":
        return GradedPoly(self.spec, {(0, m): c for (h, m), c in self.terms.items()
                                      if h == power})

    def max_hbar(self) -> int:
        return max((h for h, _ in self.terms), default=0)

    def truncate_hbar(self, order: int) -> "GradedPoly":
        return GradedPoly(self.spec, {(h, m): c for (h, m), c in self.terms.items()
                                      if h <= order})

    def truncate_xdeg(self, bound: int, upto: Iterable[int] | None = None) -> "GradedPoly":
        """Drop terms whose total exponent in the x-generators exceeds bound."""
        xs = range(self.spec.dim) if upto is None else list(upto)
        return GradedPoly(self.spec,
                          {(h, m): c for (h, m), c in self.terms.items()
                           if sum(m[i] for i in xs) <= bound})

    # -- derivations -----------------------------------------------------------

    def partial_left(self, name: str) -> "GradedPoly":
        """Left derivative: the operator enters from the left of each monomial."""
        j = self.spec.index(name)
        odd = self.spec.is_odd(j)
        out: dict[Key, Fraction] = {}
        for (h, m), c in self.terms.items():
            if not m[j]:
                continue
            sign = 1
            if odd:
                parity = sum(m[i] for i in range(j)
                             if self.spec.is_odd(i)) & 1
                sign = -1 if parity else 1
            mono = tuple(e - 1 if i == j else e for i, e in enumerate(m))
            k = (h, mono)
            s = out.get(k, Fraction(0)) + sign * m[j] * c
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return GradedPoly(self.spec, out)

    def partial_right(self, name: str) -> "GradedPoly":
        """Right derivative: the operator enters from the right."""
        j = self.spec.index(name)
        odd = self.spec.is_odd(j)
        out: dict[Key, Fraction] = {}
        for (h, m), c in self.terms.items():
            if not m[j]:
                continue
            sign = 1
            if odd:
                parity = sum(m[i] for i in range(j + 1, self.spec.ngen)
                             if self.spec.is_odd(i)) & 1
                sign = -1 if parity else 1
            mono = tuple(e - 1 if i == j else e for i, e in enumerate(m))
            k = (h, mono)
            s = out.get(k, Fraction(0)) + sign * m[j] * c
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return GradedPoly(self.spec, out)

    # -- display / io -----------------------------------------------------------

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for (h, m), c in sorted(self.terms.items()):
            factors = []
            if h:
                factors.append("h" if h == 1 else f"h^{h}")
            for name, e in zip(self.spec.names, m):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            body = "*".join(factors) or "1"
            bits.append(f"({c})*{body}")
        return " + ".join(bits)

    def to_json(self) -> list[dict]:
        out = []
        for (h, m), c in sorted(self.terms.items()):
            mono = {name: e for name, e in zip(self.spec.names, m) if e}
            out.append({"hbar": h, "coeff": str(c), "mono": mono})
        return out

    @classmethod
    def from_json(cls, spec: AlgebraSpec, data: list[dict] | str) -> "GradedPoly":
        if isinstance(data, str):
            data = json.loads(data)
        terms: dict[Key, Fraction] = {}
        for t in data:
            mono = [0] * spec.ngen
            for name, e in t.get("mono", {}).items():
                mono[spec.index(name)] = int(e)
            key = (int(t.get("hbar", 0)), tuple(mono))
            terms[key] = terms.get(key, Fraction(0)) + Fraction(t["coeff"])
        return cls(spec, terms)


# --- tensor factors for the graph operators ----------------------------------

TKey = tuple[Mono, ...]


class Tensor:
    """Element of (free algebra)^(tensor n) with rational coefficients."""

    __slots__ = ("spec", "n", "terms")

    def __init__(self, spec: AlgebraSpec, n: int,
                 terms: dict[TKey, Fraction] | None = None):
        self.spec = spec
        self.n = n
        self.terms: dict[TKey, Fraction] = {}
        if terms:
            for k, c in terms.items():
                if c:
                    self.terms[k] = c

    @classmethod
    def of(cls, factors: Sequence[GradedPoly]) -> "Tensor":
        if not factors:
            raise AlgebraError("empty tensor")
        spec = factors[0].spec
        terms: dict[TKey, Fraction] = {(): Fraction(1)}
        n = 0
        for f in factors:
            if f.spec != spec:
                raise AlgebraError("mixed algebra specs")
            new: dict[TKey, Fraction] = {}
            for k, c in terms.items():
                for (h, m), c2 in f.terms.items():
                    if h:
                        raise AlgebraError("hbar inside a tensor factor")
                    kk = k + (m,)
                    s = new.get(kk, Fraction(0)) + c * c2
                    if s:
                        new[kk] = s
            terms = new
            n += 1
        return cls(spec, n, terms)

    def apply_partial(self, slot: int, name: str) -> "Tensor":
        """Left derivative at a tensor slot, Koszul-passing the earlier slots."""
        spec = self.spec
        j = spec.index(name)
        odd = spec.is_odd(j)
        out: dict[TKey, Fraction] = {}
        for key, c in self.terms.items():
            m = key[slot]
            if not m[j]:
                continue
            sign = 1
            if odd:
                pass_deg = sum(_mono_degree(spec, key[s]) for s in range(slot))
                inner = sum(m[i] for i in range(j) if spec.is_odd(i))
                sign = -1 if (pass_deg + inner) & 1 else 1
            mono = tuple(e - 1 if i == j else e for i, e in enumerate(m))
            kk = key[:slot] + (mono,) + key[slot + 1:]
            s = out.get(kk, Fraction(0)) + sign * m[j] * c
            if s:
                out[kk] = s
            else:
                out.pop(kk, None)
        return Tensor(spec, self.n, out)

    def apply_edge(self, src: int, tgt: int) -> "Tensor":
        """One derivative pair per the pairing list: the target derivative
        followed by the source one, each a standard left operator, the pair
        weighted by (-1)**|source generator|."""
        spec = self.spec
        out = Tensor(spec, self.n)
        for gi, gj in spec.pairing:
            coeff = (-1) ** (spec.degrees[gi] & 1)
            step = self.apply_partial(tgt, spec.names[gj])
            step = step.apply_partial(src, spec.names[gi])
            for k, c in step.terms.items():
                s = out.terms.get(k, Fraction(0)) + coeff * c
                if s:
                    out.terms[k] = s
                else:
                    out.terms.pop(k, None)
        return out

    def multiply_out(self) -> GradedPoly:
        """The product map: multiply the factors left to right."""
        spec = self.spec
        out: dict[Key, Fraction] = {}
        for key, c in self.terms.items():
            mono = (0,) * spec.ngen
            sign = 1
            for m in key:
                mono, s = _mul_mono(spec, mono, m)
                if s == 0:
                    sign = 0
                    break
                sign *= s
            if sign == 0:
                continue
            k = (0, mono)
            s2 = out.get(k, Fraction(0)) + sign * c
            if s2:
                out[k] = s2
            else:
                out.pop(k, None)
        return GradedPoly(spec, out)


def random_poly(spec: AlgebraSpec, rng, max_degree: int, n_terms: int = 4,
                homogeneous: int | None = None) -> GradedPoly:
    """Random element with small integer coefficients, for property tests."""
    by_deg: dict[int, list[Mono]] = {}
    ceil = [0] * spec.ngen
    for i in range(spec.ngen):
        if spec.is_odd(i):
            ceil[i] = 1
        elif spec.degrees[i] == 0:
            ceil[i] = max_degree
        else:
            ceil[i] = max_degree // abs(spec.degrees[i]) if spec.degrees[i] else max_degree
    ranges = [range(c + 1) for c in ceil]
    for mono in itertools.product(*ranges):
        deg = _mono_degree(spec, mono)
        if 0 <= deg <= max_degree:
            by_deg.setdefault(deg, []).append(mono)
    out: dict[Key, Fraction] = {}
    degs = sorted(by_deg) if homogeneous is None else [homogeneous]
    for _ in range(n_terms):
        deg = rng.choice(degs)
        if not by_deg.get(deg):
            continue
        mono = rng.choice(by_deg[deg])
        c = Fraction(rng.randint(-3, 3))
        if c:
            key = (0, mono)
            out[key] = out.get(key, Fraction(0)) + c
    return GradedPoly(spec, {k: c for k, c in out.items() if c})
