"""Virtual polynomials of the linearized network and their bottleneck factors.

Fixing an activation set P turns the ReLU network into a linear network:
active nodes pass their pre-output through, negative nodes emit zero.
The virtual polynomial of type (i,k) for an input a is the pre-output of
node (i,k) in that linear network, viewed as a polynomial in the weights
(the input enters as rational coefficients).  The node's own flag is not
applied; masking concerns layers strictly below k.

When the P-active subnetwork pinches to a single node at some interior
layer, the polynomial factors as the product of the segment outputs
between consecutive pinch points; factorize computes exactly that
decomposition and the product recovers the virtual polynomial exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .errors import EnumerationBudgetError, ShapeError, ZeroVirtualPolynomialError
from .network import ActivationSet, NetworkShape, Scalar, as_fraction
from .polyalg import Poly


def _check_node(shape: NetworkShape, node: tuple[int, int]) -> tuple[int, int]:
    i, k = node
    if not 2 <= k <= shape.depth:
        raise IndexError(f"node layer {k} out of range 2..{shape.depth}")
    if not 1 <= i <= shape.width(k):
        raise IndexError(f"node {i} out of range 1..{shape.width(k)} in layer {k}")
    return i, k


@dataclass(frozen=True)
class VirtualPoly:
    """A virtual polynomial plus the data that produced it."""

    poly: Poly
    node: tuple[int, int]
    activation_set: ActivationSet
    input: tuple[Fraction, ...]


def _propagate(
    shape: NetworkShape,
    activation_set: ActivationSet,
    start_layer: int,
    start_values: Sequence[Poly],
    end_layer: int,
) -> list[Poly]:
    """Push polynomial node values from start_layer up to pre-outputs at end_layer.

    start_values are the *outputs* x^(start_layer); masking applies to
    hidden layers strictly between start and end.  Returns z^(end_layer).
    """
    cur = list(start_values)
    pre: list[Poly] = []
    for k in range(start_layer, end_layer):
        pre = []
        for j in range(1, shape.width(k + 1) + 1):
            acc = Poly.zero()
            for i in range(1, shape.width(k) + 1):
                if not cur[i - 1].is_zero():
                    acc = acc + Poly.variable(shape.index_of(k, i, j)) * cur[i - 1]
            pre.append(acc)
        if k + 1 < end_layer:
            if not 2 <= k + 1 <= shape.depth - 1:
                raise AssertionError("masking a non-hidden layer")
            cur = [
                pre[j - 1] if activation_set.is_active(j, k + 1) else Poly.zero()
                for j in range(1, shape.width(k + 1) + 1)
            ]
    return pre


def virtual_polynomial(
    shape: NetworkShape,
    x: Sequence[Scalar],
    activation_set: ActivationSet,
    node: tuple[int, int],
) -> VirtualPoly:
    """Pre-output of `node` in the P-masked linear network, input as coefficients."""
    shape.check_input(x)
    i, k = _check_node(shape, node)
    if tuple(activation_set.widths) != shape.widths:
        raise ShapeError("activation set belongs to a different shape")
    inputs = tuple(as_fraction(v) for v in x)
    start = [Poly.constant(v) for v in inputs]
    pre = _propagate(shape, activation_set, 1, start, k)
    return VirtualPoly(poly=pre[i - 1], node=(i, k), activation_set=activation_set, input=inputs)


def enumerate_virtual_polynomials(
    shape: NetworkShape,
    x: Sequence[Scalar],
    node: tuple[int, int],
    *,
    cap: int = 16,
) -> list[VirtualPoly]:
    """All distinct virtual polynomials of one type, with one witness each.

    Iterates activation sets of the hidden nodes that can influence the
    node (layers below it); flags elsewhere are completed as active in
    the witness.  Refuses shapes with more than `cap` hidden nodes.
    """
    i, k = _check_node(shape, node)
    if shape.hidden_count > cap:
        raise EnumerationBudgetError(
            f"{shape.hidden_count} hidden nodes exceed enumeration cap {cap}"
        )
    relevant_layers = list(range(2, min(k, shape.depth)))
    per_layer = [
        [tuple(bits) for bits in itertools.product((True, False), repeat=shape.width(m))]
        for m in relevant_layers
    ]
    seen: dict[Poly, VirtualPoly] = {}
    for combo in itertools.product(*per_layer):
        flags = []
        for m in range(2, shape.depth):
            if m in relevant_layers:
                flags.append(combo[relevant_layers.index(m)])
            else:
                flags.append(tuple([True] * shape.width(m)))
        P = ActivationSet(shape.widths, tuple(flags))
        vp = virtual_polynomial(shape, x, P, (i, k))
        if vp.poly not in seen:
            seen[vp.poly] = vp
    out = list(seen.values())
    out.sort(key=lambda vp: vp.poly.terms, reverse=True)
    return out


@dataclass(frozen=True)
class ActiveSubnetwork:
    """Nodes retained by an activation set; input/output layers always present."""

    widths: tuple[int, ...]
    nodes: tuple[tuple[int, ...], ...]  # per layer 1..L, 1-based ids, sorted

    def present(self, i: int, k: int) -> bool:
        return i in self.nodes[k - 1]

    def edges(self) -> Iterator[tuple[tuple[int, int], tuple[int, int]]]:
        """Retained edges ((i,k),(j,k+1)): both endpoints present."""
        for k in range(1, len(self.widths)):
            for i in self.nodes[k - 1]:
                for j in self.nodes[k]:
                    yield (i, k), (j, k + 1)


def p_active_network(shape: NetworkShape, activation_set: ActivationSet) -> ActiveSubnetwork:
    """Subnetwork of P-active hidden nodes plus the full input/output layers."""
    if tuple(activation_set.widths) != shape.widths:
        raise ShapeError("activation set belongs to a different shape")
    layers = [tuple(range(1, shape.widths[0] + 1))]
    for k in range(2, shape.depth):
        layers.append(activation_set.active_in_layer(k))
    layers.append(tuple(range(1, shape.widths[-1] + 1)))
    return ActiveSubnetwork(shape.widths, tuple(layers))


@dataclass(frozen=True)
class BottleneckReport:
    """Single-node layers of an active subnetwork.

    bottlenecks: layers (2..L) with exactly one present node; the input
    layer never counts, the output layer counts when d_L == 1.  When any
    hidden layer is completely dead the signal cannot pass at all, so
    dead_cuts is reported and bottlenecks is empty.
    """

    bottlenecks: tuple[int, ...]
    dead_cuts: tuple[int, ...]


def bottleneck_layers(sub: ActiveSubnetwork) -> BottleneckReport:
    depth = len(sub.widths)
    dead = tuple(k for k in range(2, depth) if len(sub.nodes[k - 1]) == 0)
    if dead:
        return BottleneckReport(bottlenecks=(), dead_cuts=dead)
    necks = [k for k in range(2, depth + 1) if len(sub.nodes[k - 1]) == 1]
    return BottleneckReport(bottlenecks=tuple(necks), dead_cuts=())


class Factorization:
    """Ordered factors of a virtual polynomial, one per bottleneck segment.

    Behaves as a sequence of Poly; `segments` records the (start, end)
    layer of the subnetwork each factor is the symbolic output of.
    """

    __slots__ = ("factors", "segments", "node", "activation_set")

    def __init__(self, factors, segments, node, activation_set):
        object.__setattr__(self, "factors", tuple(factors))
        object.__setattr__(self, "segments", tuple(segments))
        object.__setattr__(self, "node", node)
        object.__setattr__(self, "activation_set", activation_set)

    def __setattr__(self, name, value):
        raise AttributeError("Factorization is immutable")

    def __len__(self) -> int:
        return len(self.factors)

    def __iter__(self):
        return iter(self.factors)

    def __getitem__(self, idx):
        return self.factors[idx]

    def product(self) -> Poly:
        out = Poly.constant(1)
        for f in self.factors:
            out = out * f
        return out

    def to_json(self) -> dict:
        return {
            "node": list(self.node),
            "activation_set": self.activation_set.to_json(),
            "segments": [list(s) for s in self.segments],
            "factors": [f.to_json() for f in self.factors],
        }


def factorize(
    shape: NetworkShape,
    x: Sequence[Scalar],
    activation_set: ActivationSet,
    node: tuple[int, int],
) -> Factorization:
    """Bottleneck factorization of the virtual polynomial of `node`.

    Cut layers are the hidden layers below the node with exactly one
    active node; each factor is the symbolic output of the subnetwork
    between consecutive cuts (the first starts at the input with the
    sample as coefficients, later ones start at the unique active node
    with value 1).  The product of the factors equals the virtual
    polynomial exactly; the factor count is 1 + number of interior cuts.

    Raises ZeroVirtualPolynomialError when the polynomial is zero (for
    instance behind a dead cut): the zero polynomial has no meaningful
    factorization.
    """
    shape.check_input(x)
    i, k = _check_node(shape, node)
    vp = virtual_polynomial(shape, x, activation_set, (i, k))
    if vp.poly.is_zero():
        raise ZeroVirtualPolynomialError(
            f"virtual polynomial of node ({i},{k}) is zero under these flags"
        )
    cuts = [
        m for m in range(2, k) if len(activation_set.active_in_layer(m)) == 1
    ]
    boundaries = [1, *cuts, k]
    inputs = tuple(as_fraction(v) for v in x)
    factors: list[Poly] = []
    segments: list[tuple[int, int]] = []
    for s, e in zip(boundaries[:-1], boundaries[1:]):
        if s == 1:
            start_vals = [Poly.constant(v) for v in inputs]
        else:
            unique = activation_set.active_in_layer(s)[0]
            start_vals = [
                Poly.constant(1) if idx == unique else Poly.zero()
                for idx in range(1, shape.width(s) + 1)
            ]
        pre = _propagate(shape, activation_set, s, start_vals, e)
        end_node = i if e == k else activation_set.active_in_layer(e)[0]
        factors.append(pre[end_node - 1])
        segments.append((s, e))
    return Factorization(factors, segments, (i, k), activation_set)
