"""Semi-algebraic map of the loss surface: regions, pieces, walls, sheets.

A region is a choice of realized activation set per training sample with
a witness weight point strictly off every wall.  On a region the loss is
one exact polynomial (the piece).  Crossing the zero set of a flipped
node's virtual polynomial moves to the adjacent region; the crossing is
singular exactly when the two pieces differ.

Sheet enumeration records, for every realizable region found by witness
sampling: the hidden-node wall polynomials themselves, their bottleneck
factors, and the bottleneck factors of the output nodes' virtual
polynomials.  The factors are the irreducible components the walls and
retained defining polynomials split into; weight-only components (no
first-layer variable) are precisely the sample-independent ones.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import AdjacencyError, BoundaryError, SamplingError, ShapeError
from .network import (
    ActivationSet,
    NetworkShape,
    Scalar,
    TrainingSample,
    as_fraction,
    check_samples,
    strict_activation_set,
)
from .polyalg import Poly
from .virtual import factorize, virtual_polynomial

RegionKey = tuple[tuple[tuple[bool, ...], ...], ...]


@dataclass(frozen=True)
class Region:
    """Per-sample activation sets plus one witness weight point."""

    activation_sets: tuple[ActivationSet, ...]
    witness: tuple[Scalar, ...]

    @property
    def key(self) -> RegionKey:
        return tuple(p.flags for p in self.activation_sets)

    def flipped(self, sample_index: int, node: tuple[int, int]) -> "Region":
        """Formal neighbor across one wall (witness kept, only flags flip)."""
        sets = list(self.activation_sets)
        i, k = node
        sets[sample_index] = sets[sample_index].flipped(i, k)
        return Region(tuple(sets), self.witness)


def region_of(
    shape: NetworkShape,
    samples: Sequence[TrainingSample],
    w: Sequence[Scalar],
    *,
    exact: bool = True,
) -> Region:
    """Region containing w; BoundaryError when any pre-output is exactly zero."""
    check_samples(shape, samples)
    shape.check_weights(w)
    sets = tuple(
        strict_activation_set(shape, w, s.input, exact=exact) for s in samples
    )
    return Region(sets, tuple(w))


def region_loss_polynomial(
    shape: NetworkShape,
    samples: Sequence[TrainingSample],
    region: Region,
) -> Poly:
    """Exact loss piece on the region: sum_p (1/2)|b_p - Z^(L)(a_p)|^2."""
    check_samples(shape, samples)
    if len(region.activation_sets) != len(samples):
        raise ShapeError("region does not cover the sample list")
    total = Poly.zero()
    for s, P in zip(samples, region.activation_sets):
        total = total + _sample_piece(shape, s, P)
    return total


def _sample_piece(shape: NetworkShape, sample: TrainingSample, P: ActivationSet) -> Poly:
    half = Fraction(1, 2)
    acc = Poly.zero()
    for o in range(1, shape.widths[-1] + 1):
        z = virtual_polynomial(shape, sample.input, P, (o, shape.depth)).poly
        r = Poly.constant(as_fraction(sample.output[o - 1])) - z
        acc = acc + half * (r * r)
    return acc


@dataclass(frozen=True)
class Sheet:
    """One candidate component of the singular locus.

    poly is normalized (leading coefficient 1) so equality means equality
    up to nonzero rational scale.  sample_index is the training sample
    whose wall produced it, or None when the polynomial contains no
    first-layer variable and therefore cannot depend on any sample.
    singular records whether crossing it changes the loss piece.
    """

    poly: Poly
    sample_index: int | None
    singular: bool

    def to_json(self) -> dict:
        return {
            "poly": self.poly.to_json(),
            "sample_index": "independent" if self.sample_index is None else self.sample_index,
            "singular": self.singular,
        }


def _is_sample_independent(poly: Poly, shape: NetworkShape) -> bool:
    return all(shape.weight_layer_of(v) != 1 for v in poly.variables())


def wall_between(
    shape: NetworkShape,
    samples: Sequence[TrainingSample],
    r1: Region,
    r2: Region,
) -> Sheet:
    """Sheet separating two regions that differ in exactly one node flag.

    The sheet polynomial is the flipped node's virtual polynomial under
    the shared flags (its own flag is irrelevant to its pre-output), and
    the singular bit compares the two exact pieces.
    """
    check_samples(shape, samples)
    diffs: list[tuple[int, tuple[int, int]]] = []
    for p, (a, b) in enumerate(zip(r1.activation_sets, r2.activation_sets)):
        for k in range(2, shape.depth):
            for i in range(1, shape.width(k) + 1):
                if a.is_active(i, k) != b.is_active(i, k):
                    diffs.append((p, (i, k)))
    if len(diffs) != 1:
        raise AdjacencyError(f"regions differ in {len(diffs)} flags, expected exactly 1")
    p, (i, k) = diffs[0]
    u = virtual_polynomial(shape, samples[p].input, r1.activation_sets[p], (i, k)).poly
    if u.is_zero():
        raise AdjacencyError(
            f"no wall: node ({i},{k}) has identically zero pre-output here"
        )
    piece1 = _sample_piece(shape, samples[p], r1.activation_sets[p])
    piece2 = _sample_piece(shape, samples[p], r2.activation_sets[p])
    singular = piece1 != piece2
    sample_index = None if _is_sample_independent(u, shape) else p
    return Sheet(poly=u.normalized(), sample_index=sample_index, singular=singular)


def _random_dyadic_weights(shape: NetworkShape, rng: random.Random) -> list[Fraction]:
    scale = 1 << 20
    return [
        Fraction(rng.randint(-scale, scale), scale) for _ in range(shape.weight_count)
    ]


def enumerate_singular_sheets(
    shape: NetworkShape,
    samples: Sequence[TrainingSample],
    probe_budget: int,
    *,
    seed: int = 0,
    include_components: bool = True,
) -> list[Sheet]:
    """Sheets discovered from probe_budget random witness points.

    For every realizable region and sample this emits, deduplicated up to
    nonzero rational scale:

    * each hidden node's nonzero wall polynomial, marked singular when
      the adjacent pieces differ (every bottleneck factor of the wall
      inherits that flag: crossing any component flips the same node
      between the same two pieces);
    * the bottleneck factors of each output node's virtual polynomial,
      non-singular by default (crossing them flips nothing) but OR-merged
      if the same polynomial also arises from a singular wall.

    Raises SamplingError when no probe lands strictly inside a region.
    """
    check_samples(shape, samples)
    if probe_budget < 1:
        raise SamplingError("probe budget must be at least 1")
    rng = random.Random(seed)
    regions: dict[RegionKey, Region] = {}
    for _ in range(probe_budget):
        w = _random_dyadic_weights(shape, rng)
        try:
            r = region_of(shape, samples, w, exact=True)
        except BoundaryError:
            continue
        regions.setdefault(r.key, r)
    if not regions:
        raise SamplingError(f"no realizable region found in {probe_budget} probes")

    piece_cache: dict[tuple[int, tuple[tuple[bool, ...], ...]], Poly] = {}

    def piece(p: int, P: ActivationSet) -> Poly:
        key = (p, P.flags)
        if key not in piece_cache:
            piece_cache[key] = _sample_piece(shape, samples[p], P)
        return piece_cache[key]

    found: dict[Poly, Sheet] = {}

    def emit(poly: Poly, p: int, singular: bool) -> None:
        norm = poly.normalized()
        idx = None if _is_sample_independent(norm, shape) else p
        prev = found.get(norm)
        if prev is None:
            found[norm] = Sheet(norm, idx, singular)
        elif singular and not prev.singular:
            found[norm] = Sheet(norm, prev.sample_index, True)

    for key in sorted(regions):
        r = regions[key]
        for p, sample in enumerate(samples):
            P = r.activation_sets[p]
            for i, k in shape.hidden_nodes():
                u = virtual_polynomial(shape, sample.input, P, (i, k)).poly
                if u.is_zero():
                    continue
                singular = piece(p, P) != piece(p, P.flipped(i, k))
                emit(u, p, singular)
                if include_components:
                    for g in factorize(shape, sample.input, P, (i, k)):
                        emit(g, p, singular)
            if include_components:
                for o in range(1, shape.widths[-1] + 1):
                    node = (o, shape.depth)
                    u = virtual_polynomial(shape, sample.input, P, node).poly
                    if u.is_zero():
                        continue
                    for g in factorize(shape, sample.input, P, node):
                        emit(g, p, singular=False)

    return sorted(found.values(), key=lambda s: s.poly.terms, reverse=True)


def sample_independent_sheets(
    shape: NetworkShape,
    samples_a: Sequence[TrainingSample],
    samples_b: Sequence[TrainingSample],
    probe_budget: int,
    *,
    seed: int = 0,
) -> list[Poly]:
    """Input-free sheet polynomials discovered for both sample sets.

    Runs the enumeration once per sample set and intersects, up to scale,
    the polynomials containing no first-layer variable.  These are the
    components of the singular locus that cannot depend on the data.
    """
    out = []
    seen: set[Poly] = set()
    runs = []
    for idx, samples in enumerate((samples_a, samples_b)):
        sheets = enumerate_singular_sheets(
            shape, samples, probe_budget, seed=seed + idx
        )
        runs.append(
            {s.poly for s in sheets if _is_sample_independent(s.poly, shape)}
        )
    for poly in sorted(runs[0] & runs[1], key=lambda q: q.terms, reverse=True):
        if poly not in seen:
            seen.add(poly)
            out.append(poly)
    return out


def sheet_report(sheets: Sequence[Sheet]) -> list[dict]:
    """JSON-ready rows, deterministic order."""
    return [s.to_json() for s in sheets]
