"""Exact sparse multivariate polynomials over the flat weight variables.

Coefficients are fractions.Fraction, exponents are sparse.  A term key is
a tuple of (variable, exponent) pairs sorted by variable; the zero-degree
term key is ().  Polynomials are immutable and kept in a canonical order
(graded lexicographic, descending: higher total degree first, ties broken
lexicographically with lower variable index more significant), so
structural equality is mathematical equality and hashing works.

Float coefficients never appear here; the attack module keeps its fitted
polynomials in its own lightweight type.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import DegreeError, ShapeError, UnsupportedDivisorError
from .network import NetworkShape, Scalar, as_fraction

TermKey = tuple[tuple[int, int], ...]
MultiDegree = tuple[int, ...]


def _term_sort_key(key: TermKey):
    total = sum(e for _, e in key)
    return total, tuple((-v, e) for v, e in key)


def _merge_keys(a: TermKey, b: TermKey) -> TermKey:
    out: dict[int, int] = dict(a)
    for v, e in b:
        out[v] = out.get(v, 0) + e
    return tuple(sorted(out.items()))


class Poly:
    """Immutable exact polynomial; supports +, -, *, ** and scalar ops."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[TermKey, Scalar] | Iterable[tuple[TermKey, Scalar]] = ()):
        if isinstance(terms, Mapping):
            items = terms.items()
        else:
            items = terms
        acc: dict[TermKey, Fraction] = {}
        for key, coeff in items:
            key = tuple(sorted((int(v), int(e)) for v, e in key if e != 0))
            if any(v < 0 or e < 0 for v, e in key):
                raise ValueError(f"bad term key {key}")
            c = as_fraction(coeff)
            if c == 0:
                continue
            acc[key] = acc.get(key, Fraction(0)) + c
        cleaned = [(k, c) for k, c in acc.items() if c != 0]
        cleaned.sort(key=lambda kc: _term_sort_key(kc[0]), reverse=True)
        object.__setattr__(self, "_terms", tuple(cleaned))

    def __setattr__(self, name, value):
        raise AttributeError("Poly is immutable")

    # construction helpers

    @staticmethod
    def zero() -> "Poly":
        return _ZERO

    @staticmethod
    def constant(c: Scalar) -> "Poly":
        return Poly({(): c})

    @staticmethod
    def variable(v: int) -> "Poly":
        return Poly({((int(v), 1),): 1})

    @staticmethod
    def monomial(key: TermKey, coeff: Scalar = 1) -> "Poly":
        return Poly({tuple(key): coeff})

    # inspection

    @property
    def terms(self) -> tuple[tuple[TermKey, Fraction], ...]:
        """Canonical (descending graded-lex) term sequence."""
        return self._terms

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, key: TermKey) -> Fraction:
        key = tuple(sorted((v, e) for v, e in key if e != 0))
        for k, c in self._terms:
            if k == key:
                return c
        return Fraction(0)

    def leading_coefficient(self) -> Fraction:
        if not self._terms:
            raise DegreeError("zero polynomial has no leading coefficient")
        return self._terms[0][1]

    def total_degree(self) -> int:
        if not self._terms:
            raise DegreeError("zero polynomial has no degree")
        return sum(e for _, e in self._terms[0][0])

    def degree_in(self, v: int) -> int:
        """Largest exponent of variable v (0 if absent; 0 for the zero poly)."""
        best = 0
        for key, _ in self._terms:
            for var, e in key:
                if var == v and e > best:
                    best = e
        return best

    def variables(self) -> tuple[int, ...]:
        seen: set[int] = set()
        for key, _ in self._terms:
            for v, _e in key:
                seen.add(v)
        return tuple(sorted(seen))

    def is_homogeneous(self) -> bool:
        if not self._terms:
            raise DegreeError("zero polynomial")
        degs = {sum(e for _, e in key) for key, _ in self._terms}
        return len(degs) == 1

    def normalized(self) -> "Poly":
        """Scale so the leading coefficient is 1 (canonical up-to-scale form)."""
        if not self._terms:
            return self
        lead = self._terms[0][1]
        if lead == 1:
            return self
        return Poly({k: c / lead for k, c in self._terms})

    # ring operations

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == Poly.constant(other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._terms)

    def __neg__(self) -> "Poly":
        return Poly({k: -c for k, c in self._terms})

    def __add__(self, other) -> "Poly":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        acc = dict(self._terms)
        for k, c in other._terms:
            acc[k] = acc.get(k, Fraction(0)) + c
        return Poly(acc)

    __radd__ = __add__

    def __sub__(self, other) -> "Poly":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Poly":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other) -> "Poly":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        acc: dict[TermKey, Fraction] = {}
        for ka, ca in self._terms:
            for kb, cb in other._terms:
                k = _merge_keys(ka, kb)
                acc[k] = acc.get(k, Fraction(0)) + ca * cb
        return Poly(acc)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers")
        result = Poly.constant(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # evaluation

    def evaluate(self, point: Sequence[Scalar], *, exact: bool | None = None) -> Scalar:
        """Evaluate at a point indexed by flat variable.

        exact=None infers the mode: Fraction/int entries give an exact
        result, floats a compensated (math.fsum) double result.
        """
        if exact is None:
            exact = all(isinstance(p, (int, Fraction)) for p in point)
        if exact:
            vals = [as_fraction(p) for p in point]
            total = Fraction(0)
            pow_cache: dict[tuple[int, int], Fraction] = {}
            for key, coeff in self._terms:
                m = coeff
                for v, e in key:
                    if v >= len(vals):
                        raise IndexError(f"variable {v} outside point of length {len(vals)}")
                    p = pow_cache.get((v, e))
                    if p is None:
                        p = vals[v] ** e
                        pow_cache[(v, e)] = p
                    m *= p
                total += m
            return total
        vals_f = [float(p) for p in point]
        parts = []
        for key, coeff in self._terms:
            m = float(coeff)
            for v, e in key:
                if v >= len(vals_f):
                    raise IndexError(f"variable {v} outside point of length {len(vals_f)}")
                m *= vals_f[v] ** e
            parts.append(m)
        return math.fsum(parts)

    # serialization

    def to_json(self) -> list[dict]:
        return [
            {"coeff": f"{c.numerator}/{c.denominator}", "exps": {str(v): e for v, e in key}}
            for key, c in self._terms
        ]

    @staticmethod
    def from_json(data: list[dict]) -> "Poly":
        terms = {}
        for entry in data:
            key = tuple(sorted((int(v), int(e)) for v, e in entry["exps"].items()))
            coeff = Fraction(entry["coeff"])
            terms[key] = terms.get(key, Fraction(0)) + coeff
        return Poly(terms)

    def __repr__(self) -> str:
        if not self._terms:
            return "Poly(0)"
        bits = []
        for key, c in self._terms[:8]:
            mono = "*".join(f"w{v}" + (f"^{e}" if e > 1 else "") for v, e in key) or "1"
            bits.append(f"{c}*{mono}")
        suffix = " + ..." if len(self._terms) > 8 else ""
        return "Poly(" + " + ".join(bits) + suffix + ")"


def _coerce(x) -> "Poly":
    if isinstance(x, Poly):
        return x
    if isinstance(x, (int, Fraction)):
        return Poly.constant(x)
    return NotImplemented


_ZERO = Poly({})


# layer-aware operations


def layerwise_degree(p: Poly, shape: NetworkShape) -> MultiDegree | None:
    """Common layer-wise multidegree of p, or None when not homogeneous.

    Entry k-1 of the result is the total exponent of weight-layer-k
    variables in every monomial.  Raises DegreeError on the zero
    polynomial (its multidegree is undefined).
    """
    if p.is_zero():
        raise DegreeError("zero polynomial has no layer-wise degree")
    expected: MultiDegree | None = None
    n_layers = shape.depth - 1
    for key, _ in p.terms:
        vec = [0] * n_layers
        for v, e in key:
            vec[shape.weight_layer_of(v) - 1] += e
        cur = tuple(vec)
        if expected is None:
            expected = cur
        elif cur != expected:
            return None
    return expected


def pseudo_divides(u: Poly, f: Poly) -> bool:
    """Does f vanish on the locus u = 0, tested by pseudo-substitution?

    Picks a variable x in which u is multilinear, writes u = A*x + B, and
    checks that A^deg_x(f) * f with x replaced by -B/A is the zero
    polynomial.  Sound in the divides->True direction always; the
    True->divides direction needs u irreducible and coprime to A.
    """
    if u.is_zero():
        raise UnsupportedDivisorError("divisor is zero")
    x = None
    for v in u.variables():
        if u.degree_in(v) == 1:
            x = v
            break
    if x is None:
        raise UnsupportedDivisorError("divisor has no multilinear variable")
    # split u = A*x + B
    a_terms: dict[TermKey, Fraction] = {}
    b_terms: dict[TermKey, Fraction] = {}
    for key, c in u.terms:
        kd = dict(key)
        if x in kd:
            kd.pop(x)
            a_terms[tuple(sorted(kd.items()))] = c
        else:
            b_terms[key] = c
    A = Poly(a_terms)
    B = Poly(b_terms)
    d = f.degree_in(x)
    # group f by power of x: f = sum_j c_j * x^j
    groups: dict[int, dict[TermKey, Fraction]] = {}
    for key, c in f.terms:
        kd = dict(key)
        j = kd.pop(x, 0)
        groups.setdefault(j, {})[tuple(sorted(kd.items()))] = c
    remainder = Poly.zero()
    negB = -B
    for j, terms in groups.items():
        cj = Poly(terms)
        remainder = remainder + cj * (negB**j) * (A ** (d - j))
    return remainder.is_zero()


class LinearSupport:
    """Classification of a degree-1 polynomial's variable support."""

    __slots__ = ("kind", "variable", "target", "coefficients")

    def __init__(self, kind: str, variable: int | None = None, target: int | None = None,
                 coefficients: tuple[Fraction, ...] | None = None):
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "variable", variable)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "coefficients", coefficients)

    def __setattr__(self, name, value):
        raise AttributeError("LinearSupport is immutable")

    def __repr__(self):
        return (f"LinearSupport(kind={self.kind!r}, variable={self.variable}, "
                f"target={self.target}, coefficients={self.coefficients})")


def linear_support(p: Poly, shape: NetworkShape) -> LinearSupport:
    """Classify a total-degree-1 polynomial.

    * 'single-weight': exactly one variable (a bare weight parameter);
    * 'first-layer': every variable lives in weight layer 1 and targets
      one common node j; coefficients come back indexed by source node;
    * 'other': anything else of degree 1 (constant offset, mixed layers,
      mixed targets).
    """
    if p.is_zero():
        raise DegreeError("zero polynomial has no linear support")
    if p.total_degree() != 1:
        raise DegreeError(f"expected total degree 1, got {p.total_degree()}")
    has_constant = any(not key for key, _ in p.terms)
    vars_ = p.variables()
    if has_constant:
        return LinearSupport("other")
    if len(vars_) == 1:
        return LinearSupport("single-weight", variable=vars_[0])
    targets = set()
    layers = set()
    for v in vars_:
        k, _i, j = shape.unpack(v)
        layers.add(k)
        targets.add(j)
    if layers == {1} and len(targets) == 1:
        j = targets.pop()
        coeffs = [Fraction(0)] * shape.widths[0]
        for v in vars_:
            _k, i, _j = shape.unpack(v)
            coeffs[i - 1] = p.coefficient(((v, 1),))
        return LinearSupport("first-layer", target=j, coefficients=tuple(coeffs))
    return LinearSupport("other")


def poly_json_dumps(p: Poly) -> str:
    return json.dumps(p.to_json())
