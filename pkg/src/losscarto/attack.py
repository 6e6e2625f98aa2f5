"""Reconstruction from oracle access to the loss.

The pipeline mirrors how the loss surface is built: training inputs show
up as the coefficient vectors of the linear walls, so the attack scans
lines for kinks, refines each kink by bisection against left/right local
polynomial models, harvests N+1 nearby points of the same sheet, fits a
hyperplane through them (smallest principal direction), and reads the
input direction off the normal's support.  A second, independent route
fits the loss polynomial on both sides of a wall and extracts the same
direction from the gradient of the difference at the wall.

Everything here is double precision; exact algebra stays in polyalg.
run_attack is black-box: it sees only the oracle, the parameter count N
and the input arity d_1, never the sample list or the architecture.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    ContaminationError,
    DegeneracyError,
    EnumerationBudgetError,
    HarvestError,
    QueryBudgetExceeded,
    RecoveryError,
    ShapeError,
    SpuriousKinkError,
)
from .network import NetworkShape
from .polyalg import Poly, TermKey


class LossOracle:
    """Callable loss wrapper with a query counter and optional hard budget.

    The counter increments exactly once per query; when a budget is set,
    the query that would exceed it raises QueryBudgetExceeded before
    touching the underlying function, so query_count never passes budget.
    """

    def __init__(self, fn: Callable[[np.ndarray], float], budget: int | None = None):
        self._fn = fn
        self.query_count = 0
        self.budget = budget

    def __call__(self, w) -> float:
        if self.budget is not None and self.query_count >= self.budget:
            raise QueryBudgetExceeded(f"oracle budget of {self.budget} queries exhausted")
        self.query_count += 1
        return float(self._fn(np.asarray(w, dtype=float)))


@dataclass(frozen=True)
class KinkPoint:
    """A refined nonsmooth point on a scan line.

    jump_magnitude is the slope jump |f'(t+) - f'(t-)|.  It is zero up to
    noise for a second-order kink (curvature jump only), which is how the
    loss behaves across a wall where the residual happens to vanish; the
    curvature jump is then the signal.
    """

    t: float
    location: tuple[float, ...]
    line: tuple[tuple[float, ...], tuple[float, ...]]  # (base, direction)
    bracket_width: float
    jump_magnitude: float
    curvature_jump: float
    refined: bool


def _interp(ts: Sequence[float], ys: Sequence[float], degree: int):
    """Exact local polynomial model through degree+1 points."""
    return np.polynomial.polynomial.Polynomial.fit(ts, ys, degree)


def refine_kink(
    oracle,
    base,
    direction,
    bracket: tuple[float, float],
    *,
    tol: float = 1e-9,
    degree: int = 4,
    max_queries: int = 200,
    spurious_tol: float = 1e-7,
) -> KinkPoint:
    """Bisect a bracketed kink against left/right local polynomial models.

    Fits exact interpolants just outside the bracket, then repeatedly
    queries the midpoint and keeps the half whose model disagrees with
    the value (the midpoint lies on the other piece).  The two models are
    extrapolations of the adjacent polynomial pieces, so the comparison
    stays decisive until the pieces agree to float noise; past that the
    bracket can only shrink inside the noise ball, so the answer lands
    within it.  A bracket where both the slope jump and the curvature
    jump of the two models sit below their noise floors held no kink.
    """
    base = np.asarray(base, dtype=float)
    direction = np.asarray(direction, dtype=float)
    lo, hi = float(bracket[0]), float(bracket[1])
    if not hi > lo:
        raise ValueError(f"empty bracket {bracket}")
    width0 = hi - lo

    queries = 0

    def f(t: float) -> float:
        nonlocal queries
        if queries >= max_queries:
            raise QueryBudgetExceeded(f"refine budget of {max_queries} queries exhausted")
        queries += 1
        return oracle(base + t * direction)

    h = width0 / degree
    left_ts = [lo - j * h for j in range(degree + 1)]
    right_ts = [hi + j * h for j in range(degree + 1)]
    left_ys = [f(t) for t in left_ts]
    right_ys = [f(t) for t in right_ts]
    p_left = _interp(left_ts, left_ys, degree)
    p_right = _interp(right_ts, right_ys, degree)

    while hi - lo > tol:
        m = 0.5 * (lo + hi)
        fm = f(m)
        err_left = abs(p_left(m) - fm)
        err_right = abs(p_right(m) - fm)
        if err_left <= err_right:
            lo = m  # midpoint still on the left piece: kink is to the right
        else:
            hi = m
    t_star = 0.5 * (lo + hi)

    jump = abs(p_left.deriv()(t_star) - p_right.deriv()(t_star))
    jump2 = abs(p_left.deriv(2)(t_star) - p_right.deriv(2)(t_star))
    y_scale = 1.0 + max(abs(v) for v in (*left_ys, *right_ys))
    w0 = max(width0, 1e-12)
    slope_floor = spurious_tol * y_scale / w0
    curv_floor = spurious_tol * y_scale / w0**2
    if jump <= slope_floor and jump2 <= curv_floor:
        raise SpuriousKinkError(
            f"slope jump {jump:.3e} and curvature jump {jump2:.3e} below noise floors: "
            "no kink in bracket"
        )
    loc = base + t_star * direction
    return KinkPoint(
        t=t_star,
        location=tuple(float(v) for v in loc),
        line=(tuple(float(v) for v in base), tuple(float(v) for v in direction)),
        bracket_width=hi - lo,
        jump_magnitude=float(jump),
        curvature_jump=float(jump2),
        refined=True,
    )


def detect_kinks_on_line(
    oracle,
    base,
    direction,
    t_range: tuple[float, float] = (-4.0, 4.0),
    grid: int = 257,
    *,
    tol: float = 12.0,
    refine: bool = True,
    refine_tol: float = 1e-9,
    degree: int = 4,
    refine_budget: int = 200,
    max_kinks: int | None = None,
    spurious_tol: float = 1e-7,
) -> list[KinkPoint]:
    """Scan a line for nonsmooth points of the loss.

    Works off the centered fourth difference, which spikes at h*|slope
    jump| for a first-order kink and at h^2*|curvature jump| for a
    second-order one, against a smooth background of order h^4.  (The
    second difference would miss second-order kinks: it only steps.)
    A grid point is flagged when its fourth difference exceeds tol times
    the local scale, a rolling median plus an absolute floor, so the
    test is invariant to the overall magnitude of the loss.  Runs of
    flags collapse to their strongest cell; each cell's one-spacing
    bracket is refined by refine_kink unless refine=False, and refined
    kinks landing within one grid spacing of an already-accepted one are
    dropped as duplicates (a kink sitting on a grid point splits its
    flag run in two).  Kinks closer together than a few grid cells can
    merge or shadow each other; the caller controls recall through grid
    and t_range.
    """
    base = np.asarray(base, dtype=float)
    direction = np.asarray(direction, dtype=float)
    t0, t1 = float(t_range[0]), float(t_range[1])
    if not t1 > t0:
        raise ValueError(f"bad t_range {t_range}")
    if grid < 8:
        raise ValueError("grid too small to detect anything")
    ts = np.linspace(t0, t1, grid)
    ys = np.array([oracle(base + t * direction) for t in ts])
    d4 = np.abs(ys[:-4] - 4.0 * ys[1:-3] + 6.0 * ys[2:-2] - 4.0 * ys[3:-1] + ys[4:])
    floor = 1e-11 * (float(np.max(np.abs(ys))) + 1.0)
    n = len(d4)  # d4[c] is centered at grid point c + 2
    win = 10
    local = np.empty(n)
    for i in range(n):
        a, b = max(0, i - win), min(n, i + win + 1)
        local[i] = np.median(d4[a:b])
    flagged = d4 > np.maximum(tol * (local + floor), floor)

    runs: list[int] = []  # strongest cell per run of flags
    i = 0
    while i < n:
        if flagged[i]:
            j = i
            while j + 1 < n and flagged[j + 1]:
                j += 1
            runs.append(i + int(np.argmax(d4[i : j + 1])))
            i = j + 1
        else:
            i += 1
    runs.sort(key=lambda c: d4[c], reverse=True)
    groups: list[int] = []
    for cell in runs:  # adjacent runs around one kink collapse to the strongest
        if all(abs(cell - kept) > 4 for kept in groups):
            groups.append(cell)
    if max_kinks is not None:
        groups = groups[:max_kinks]

    out: list[KinkPoint] = []
    h = ts[1] - ts[0]
    for cell in groups:
        center = cell + 2
        lo_t, hi_t = float(ts[center - 1]), float(ts[center + 1])
        if not refine:
            mid = float(ts[center])
            out.append(
                KinkPoint(
                    t=mid,
                    location=tuple(float(v) for v in base + mid * direction),
                    line=(tuple(float(v) for v in base), tuple(float(v) for v in direction)),
                    bracket_width=hi_t - lo_t,
                    jump_magnitude=float(d4[cell] / h),
                    curvature_jump=0.0,
                    refined=False,
                )
            )
            continue
        try:
            kink = refine_kink(
                oracle,
                base,
                direction,
                (lo_t, hi_t),
                tol=refine_tol,
                degree=degree,
                max_queries=refine_budget,
                spurious_tol=spurious_tol,
            )
        except SpuriousKinkError:
            continue
        if any(abs(kink.t - prev.t) <= h for prev in out):
            continue
        out.append(kink)
    out.sort(key=lambda k: k.t)
    return out


def harvest_sheet_points(
    oracle,
    kink: KinkPoint,
    n_points: int,
    radius: float,
    *,
    rng: np.random.Generator,
    retries: int = 3,
    degree: int = 4,
    refine_tol: float = 1e-9,
    refine_budget: int = 200,
    window_grid: int = 33,
    detect_tol: float = 12.0,
) -> np.ndarray:
    """Seed point plus n_points refined sheet points, all within 2*radius.

    Each point comes from perturbing the line base by a random offset of
    norm at most radius, rescanning a short window around the seed t and
    refining the nearest kink.  A lost or drifted kink is retried with a
    fresh, smaller offset up to `retries` extra times, then HarvestError.
    """
    base = np.asarray(kink.line[0], dtype=float)
    direction = np.asarray(kink.line[1], dtype=float)
    seed_pt = np.asarray(kink.location, dtype=float)
    dim = len(seed_pt)
    pts = [seed_pt]
    window = 8.0 * radius / max(float(np.linalg.norm(direction)), 1e-12)
    for _ in range(n_points):
        got = None
        for attempt in range(retries + 1):
            frac = rng.uniform(0.3, 0.8) * (0.5**attempt)
            offset = rng.normal(size=dim)
            offset *= (frac * radius) / max(float(np.linalg.norm(offset)), 1e-300)
            shifted = base + offset
            kinks = detect_kinks_on_line(
                oracle,
                shifted,
                direction,
                (kink.t - window, kink.t + window),
                window_grid,
                tol=detect_tol,
                refine_tol=refine_tol,
                degree=degree,
                refine_budget=refine_budget,
                max_kinks=3,
            )
            if not kinks:
                continue
            best = min(kinks, key=lambda q: abs(q.t - kink.t))
            pt = np.asarray(best.location, dtype=float)
            if float(np.linalg.norm(pt - seed_pt)) <= 2.0 * radius:
                got = pt
                break
        if got is None:
            raise HarvestError(
                f"kink lost near t={kink.t:.6g} after {retries + 1} attempts"
            )
        pts.append(got)
    return np.array(pts)


def fit_hyperplane(points, *, degeneracy_tol: float = 1e-10) -> tuple[np.ndarray, float]:
    """Best-fit hyperplane normal through a point cloud.

    Centers the points and takes the right singular vector of the
    smallest singular value; the sign convention makes the first nonzero
    entry positive.  Needs the cloud to span the hyperplane: a centered
    rank below N-1 cannot pin the normal down and raises DegeneracyError.
    Returns (unit normal, RMS distance of the points to the plane).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError("expected a 2-D array of points")
    m, n = pts.shape
    if m < n + 1:
        raise ValueError(f"need at least N+1 = {n + 1} points, got {m}")
    centered = pts - pts.mean(axis=0)
    _u, s, vt = np.linalg.svd(centered, full_matrices=True)
    if s[0] <= 0.0:
        raise DegeneracyError("all points coincide")
    if n >= 2 and s[n - 2] <= degeneracy_tol * s[0]:
        raise DegeneracyError(
            f"points span rank < N-1 (s[{n - 2}]/s[0] = {s[n - 2] / s[0]:.3e})"
        )
    normal = vt[-1]
    normal = _sign_normalize(normal / np.linalg.norm(normal))
    residual = float(np.sqrt(np.mean((centered @ normal) ** 2)))
    return normal, residual


def _sign_normalize(v: np.ndarray) -> np.ndarray:
    for x in v:
        if x != 0.0:
            return v if x > 0 else -v
    return v


@dataclass(frozen=True)
class ExtractedDirection:
    """Classification of a sheet normal.

    kind is 'weight-parameter' (one-variable support: a bare weight, or a
    one-hot input colliding with one), 'input-direction' (support inside
    a single first-layer column: coefficients are the input up to scale),
    or 'nonlinear' (anything else: the sheet was not a linear wall).
    """

    kind: str
    direction: tuple[float, ...] | None = None
    node: int | None = None
    variable: int | None = None
    support: tuple[int, ...] = ()


def extract_input_direction(
    normal, shape: NetworkShape, support_tol: float = 1e-4
) -> ExtractedDirection:
    """White-box normal classification using the true flat layout."""
    normal = np.asarray(normal, dtype=float)
    if normal.shape != (shape.weight_count,):
        raise ShapeError(
            f"normal has shape {normal.shape}, expected ({shape.weight_count},)"
        )
    amax = float(np.max(np.abs(normal)))
    if amax == 0.0:
        raise DegeneracyError("zero normal")
    support = tuple(int(v) for v in np.flatnonzero(np.abs(normal) > support_tol * amax))
    if len(support) == 1:
        return ExtractedDirection("weight-parameter", variable=support[0], support=support)
    unpacked = [shape.unpack(v) for v in support]
    layers = {k for k, _i, _j in unpacked}
    targets = {j for _k, _i, j in unpacked}
    if layers == {1} and len(targets) == 1:
        j = targets.pop()
        coeffs = np.zeros(shape.widths[0])
        for v, (_k, i, _j) in zip(support, unpacked):
            coeffs[i - 1] = normal[v]
        coeffs = _sign_normalize(coeffs / np.linalg.norm(coeffs))
        return ExtractedDirection(
            "input-direction",
            direction=tuple(float(c) for c in coeffs),
            node=j,
            support=support,
        )
    return ExtractedDirection("nonlinear", support=support)


def aligned_input_direction(
    normal, input_dim: int, support_tol: float = 1e-4
) -> ExtractedDirection:
    """Blind normal classification knowing only d_1.

    Every linear sheet is a bare weight or a first-layer column, and the
    flat layout makes each column d_1 consecutive entries starting at a
    multiple of d_1, so a support inside one aligned window is read as an
    input direction without knowing the rest of the architecture.
    """
    normal = np.asarray(normal, dtype=float)
    amax = float(np.max(np.abs(normal)))
    if amax == 0.0:
        raise DegeneracyError("zero normal")
    support = tuple(int(v) for v in np.flatnonzero(np.abs(normal) > support_tol * amax))
    if len(support) == 1:
        return ExtractedDirection("weight-parameter", variable=support[0], support=support)
    windows = {v // input_dim for v in support}
    if len(windows) == 1:
        q = windows.pop()
        coeffs = np.zeros(input_dim)
        for v in support:
            coeffs[v - q * input_dim] = normal[v]
        coeffs = _sign_normalize(coeffs / np.linalg.norm(coeffs))
        return ExtractedDirection(
            "input-direction",
            direction=tuple(float(c) for c in coeffs),
            node=q + 1,
            support=support,
        )
    return ExtractedDirection("nonlinear", support=support)


# float polynomials for the region-fit route


class FloatPoly:
    """Sparse float-coefficient polynomial (fitted, never exact)."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[TermKey, float] | Iterable[tuple[TermKey, float]] = ()):
        items = terms.items() if isinstance(terms, dict) else terms
        acc: dict[TermKey, float] = {}
        for key, c in items:
            key = tuple(sorted((int(v), int(e)) for v, e in key if e != 0))
            c = float(c)
            if c == 0.0:
                continue
            acc[key] = acc.get(key, 0.0) + c
        object.__setattr__(self, "terms", {k: c for k, c in acc.items() if c != 0.0})

    def __setattr__(self, name, value):
        raise AttributeError("FloatPoly is immutable")

    @staticmethod
    def from_exact(p: Poly) -> "FloatPoly":
        return FloatPoly({k: float(c) for k, c in p.terms})

    def __sub__(self, other: "FloatPoly") -> "FloatPoly":
        acc = dict(self.terms)
        for k, c in other.terms.items():
            acc[k] = acc.get(k, 0.0) - c
        return FloatPoly(acc)

    def evaluate(self, w) -> float:
        w = np.asarray(w, dtype=float)
        parts = []
        for key, c in self.terms.items():
            m = c
            for v, e in key:
                m *= w[v] ** e
            parts.append(m)
        return math.fsum(parts)

    def gradient(self, w, dim: int) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        g = np.zeros(dim)
        for key, c in self.terms.items():
            for idx, (v, e) in enumerate(key):
                m = c * e * w[v] ** (e - 1)
                for v2, e2 in key[:idx] + key[idx + 1 :]:
                    m *= w[v2] ** e2
                g[v] += m
        return g

    def degree_scales(self) -> dict[int, float]:
        """Max |coefficient| per total degree."""
        out: dict[int, float] = {}
        for key, c in self.terms.items():
            d = sum(e for _, e in key)
            out[d] = max(out.get(d, 0.0), abs(c))
        return out

    def drop_tiny(self, eps: float) -> "FloatPoly":
        if not self.terms:
            return self
        cut = eps * max(abs(c) for c in self.terms.values())
        return FloatPoly({k: c for k, c in self.terms.items() if abs(c) > cut})

    def substitute_affine(self, alpha: float, beta) -> "FloatPoly":
        """Polynomial in u after replacing every variable v_i by alpha*u_i + beta_i."""
        beta = np.asarray(beta, dtype=float)
        acc: dict[TermKey, float] = {}
        for key, c in self.terms.items():
            partial: dict[TermKey, float] = {(): c}
            for v, e in key:
                lin = {((v, 1),): alpha, (): float(beta[v])}
                for _ in range(e):
                    nxt: dict[TermKey, float] = {}
                    for k1, c1 in partial.items():
                        for k2, c2 in lin.items():
                            merged = dict(k1)
                            for vv, ee in k2:
                                merged[vv] = merged.get(vv, 0) + ee
                            mk = tuple(sorted(merged.items()))
                            nxt[mk] = nxt.get(mk, 0.0) + c1 * c2
                    partial = nxt
            for k, c2 in partial.items():
                acc[k] = acc.get(k, 0.0) + c2
        return FloatPoly(acc)

    def taylor_at(self, point) -> "FloatPoly":
        """Same polynomial in displacement coordinates v = w - point."""
        return self.substitute_affine(1.0, np.asarray(point, dtype=float))

    def __repr__(self) -> str:
        return f"FloatPoly({len(self.terms)} terms)"


def _monomial_keys(dim: int, degree_bound: int) -> list[TermKey]:
    keys: list[TermKey] = [()]
    for d in range(1, degree_bound + 1):
        for combo in itertools.combinations_with_replacement(range(dim), d):
            key: dict[int, int] = {}
            for v in combo:
                key[v] = key.get(v, 0) + 1
            keys.append(tuple(sorted(key.items())))
    return keys


@dataclass(frozen=True)
class RegionFit:
    poly: FloatPoly  # ambient coordinates
    residual: float
    queries: int


def fit_region_polynomial(
    oracle,
    center,
    radius: float,
    degree_bound: int,
    *,
    rng: np.random.Generator,
    sample_factor: int = 4,
    monomial_cap: int = 5000,
    residual_tol: float = 1e-6,
    prescan: bool = True,
) -> RegionFit:
    """Least-squares loss polynomial on a ball believed to be wall-free.

    Samples the ball, fits all monomials up to degree_bound in centered,
    radius-scaled coordinates (for conditioning), and expands back to
    ambient coordinates.  A prescan along two random diameters rejects
    balls containing a kink; afterwards a residual above residual_tol
    times the local value scale still raises ContaminationError, since a
    polynomial piece must fit to numerical precision.
    """
    center = np.asarray(center, dtype=float)
    dim = len(center)
    keys = _monomial_keys(dim, degree_bound)
    if len(keys) > monomial_cap:
        raise EnumerationBudgetError(
            f"{len(keys)} monomials exceed cap {monomial_cap} (N={dim}, degree={degree_bound})"
        )
    queries = 0

    if prescan:
        for _ in range(2):
            d = rng.normal(size=dim)
            d /= np.linalg.norm(d)
            ts = np.linspace(-radius, radius, 17)
            ys = np.array([oracle(center + t * d) for t in ts])
            queries += len(ts)
            d2 = np.abs(ys[:-2] - 2 * ys[1:-1] + ys[2:])
            floor = 1e-12 * (float(np.max(np.abs(ys))) + 1.0)
            med = float(np.median(d2))
            if np.any(d2 > max(12.0 * (med + floor), floor)):
                raise ContaminationError("prescan found a kink inside the fit ball")

    m = sample_factor * len(keys)
    vs = rng.normal(size=(m, dim))
    vs /= np.linalg.norm(vs, axis=1, keepdims=True)
    vs *= rng.uniform(0.0, 1.0, size=(m, 1)) ** (1.0 / dim)
    ys = np.array([oracle(center + radius * v) for v in vs])
    queries += m

    A = np.empty((m, len(keys)))
    for c, key in enumerate(keys):
        col = np.ones(m)
        for v, e in key:
            col = col * vs[:, v] ** e
        A[:, c] = col
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - ys) ** 2)))
    scale = float(np.sqrt(np.mean(ys**2))) + 1e-30
    if resid > residual_tol * max(scale, 1.0):
        raise ContaminationError(
            f"fit residual {resid:.3e} above {residual_tol:.1e} x scale: region crossed a wall"
        )
    local = FloatPoly(dict(zip(keys, coef))).drop_tiny(1e-9)
    ambient = local.substitute_affine(1.0 / radius, -center / radius)
    return RegionFit(poly=ambient, residual=resid, queries=queries)


@dataclass(frozen=True)
class DifferenceDirection:
    """Outcome of the region-difference route."""

    kind: str  # 'input-direction' | 'weight-parameter' | 'nonlinear' | 'not-linear'
    direction: tuple[float, ...] | None
    node: int | None
    magnitude: float


def region_difference_direction(
    f: FloatPoly | RegionFit,
    g: FloatPoly | RegionFit,
    shape: NetworkShape | None = None,
    support_tol: float = 1e-4,
    *,
    wall_point,
    input_dim: int | None = None,
    localize_radius: float = 1e-2,
    lin_factor: float = 10.0,
    floor: float = 1e-9,
) -> DifferenceDirection:
    """Input direction from two adjacent region fits.

    The difference of the pieces vanishes on the wall, so in displacement
    coordinates at a wall point its degree-1 part is the gradient there,
    which is proportional to the wall's own gradient.  When that linear
    part dominates every other degree at the localization radius, the
    gradient is routed through normal classification (white-box when a
    shape is given, blind with input_dim otherwise); a vanishing gradient
    (for example a squared wall factor, or f == g) reports 'not-linear'.
    """
    fp = f.poly if isinstance(f, RegionFit) else f
    gp = g.poly if isinstance(g, RegionFit) else g
    diff = fp - gp
    wall_point = np.asarray(wall_point, dtype=float)
    shifted = diff.taylor_at(wall_point)
    scales = shifted.degree_scales()
    rho = localize_radius
    weighted = {d: c * rho**d for d, c in scales.items()}
    lin = weighted.get(1, 0.0)
    others = max((c for d, c in weighted.items() if d != 1), default=0.0)
    if lin <= floor or lin <= lin_factor * others:
        return DifferenceDirection("not-linear", None, None, magnitude=lin)
    grad = np.zeros(len(wall_point))
    for key, c in shifted.terms.items():
        if len(key) == 1 and key[0][1] == 1:
            grad[key[0][0]] = c
    if shape is not None:
        ext = extract_input_direction(grad, shape, support_tol)
    elif input_dim is not None:
        ext = aligned_input_direction(grad, input_dim, support_tol)
    else:
        raise ValueError("need a shape or input_dim to classify the direction")
    return DifferenceDirection(ext.kind, ext.direction, ext.node, magnitude=lin)


# architecture recovery from exact sheet sets


def _is_multilinear(p: Poly) -> bool:
    return all(e == 1 for key, _ in p.terms for _v, e in key)


def recover_architecture(
    defining_polys: Sequence[Poly],
    *,
    declared_output_arity: int | None = None,
) -> tuple[int, ...]:
    """Widths d_1..d_L from an exact sheet polynomial set (white-box).

    Multi-variable linear sheets are the first-layer columns: overlapping
    supports merge into one column per second-layer node, giving d_1 and
    d_2.  Then inductively, a degree-k sheet whose every monomial takes
    one already-assigned weight from each of layers 1..k-1 plus exactly
    one new variable assigns its new variables to layer k, and d_{k+1} is
    the layer-k variable count divided by d_k.  Single-variable sheets
    are ambiguous (weight parameter vs one-hot input) and stay out of the
    induction.
    """
    polys: list[Poly] = []
    seen: set[Poly] = set()
    for p in defining_polys:
        if p.is_zero():
            continue
        q = p.normalized()
        if q not in seen:
            seen.add(q)
            polys.append(q)

    columns: list[set[int]] = []
    for p in polys:
        if p.total_degree() != 1 or any(not key for key, _ in p.terms):
            continue
        vs = set(p.variables())
        if len(vs) < 2:
            continue
        merged = {v for v in vs}
        keep: list[set[int]] = []
        for col in columns:
            if col & merged:
                merged |= col
            else:
                keep.append(col)
        keep.append(merged)
        columns = keep
    if not columns:
        raise RecoveryError(
            "no multi-variable linear sheets: inputs degenerate or sheet set incomplete"
        )
    d1 = max(len(col) for col in columns)
    d2 = len(columns)
    layer_of: dict[int, int] = {}
    for col in columns:
        for v in col:
            if v in layer_of:
                raise RecoveryError(f"variable {v} claimed by two first-layer columns")
            layer_of[v] = 1
    widths = [d1, d2]

    k = 2
    while True:
        new_vars: set[int] = set()
        for p in polys:
            if p.total_degree() != k or not _is_multilinear(p):
                continue
            ok = True
            cand: set[int] = set()
            for key, _c in p.terms:
                vs = [v for v, _e in key]
                if len(vs) != k:
                    ok = False
                    break
                known = sorted(layer_of[v] for v in vs if v in layer_of)
                unknown = [v for v in vs if v not in layer_of]
                if len(unknown) != 1 or known != list(range(1, k)):
                    ok = False
                    break
                cand.add(unknown[0])
            if ok and cand:
                new_vars |= cand
        if not new_vars:
            break
        for v in new_vars:
            if v in layer_of:
                raise RecoveryError(f"variable {v} claimed by layers {layer_of[v]} and {k}")
            layer_of[v] = k
        if len(new_vars) % widths[k - 1] != 0:
            raise RecoveryError(
                f"layer-{k} weight count {len(new_vars)} not divisible by d_{k} = {widths[k - 1]}"
            )
        widths.append(len(new_vars) // widths[k - 1])
        k += 1

    if declared_output_arity is not None and widths[-1] != declared_output_arity:
        raise RecoveryError(
            f"recovered output arity {widths[-1]} contradicts declared {declared_output_arity}"
        )
    return tuple(widths)


# end-to-end pipeline


@dataclass(frozen=True)
class AttackConfig:
    """Tunables for run_attack; defaults sized for shapes up to ~20 weights.

    residual_tol is an artifact heuristic (flagged as such in reports):
    a harvested sheet whose hyperplane residual exceeds it is treated as
    curved and dropped rather than classified.
    """

    budget: int = 200_000
    n_lines: int = 12
    grid: int = 257
    t_range: tuple[float, float] = (-4.0, 4.0)
    detect_tol: float = 12.0
    refine_tol: float = 1e-9
    refine_budget: int = 200
    degree: int = 4
    radius_scale: float = 1e-3
    retries: int = 3
    support_tol: float = 1e-4
    dedup_tol: float = 1e-6
    residual_tol: float = 1e-6
    match_threshold: float = 0.999
    max_kinks_per_line: int = 3
    probe_scale: float = 1.0
    seed: int = 0
    paths: tuple[str, ...] = ("hyperplane",)

    _JSON_ALIASES = {"tol": "detect_tol", "radius": "radius_scale"}

    @staticmethod
    def from_json(data: dict) -> "AttackConfig":
        kwargs = {}
        fields = AttackConfig.__dataclass_fields__
        for key, val in data.items():
            name = AttackConfig._JSON_ALIASES.get(key, key)
            if name not in fields:
                raise ValueError(f"unknown attack config key {key!r}")
            if name == "paths":
                val = tuple(val)
            if name == "t_range":
                val = (float(val[0]), float(val[1]))
            kwargs[name] = val
        return AttackConfig(**kwargs)

    def to_json(self) -> dict:
        return {
            "budget": self.budget,
            "grid": self.grid,
            "tol": self.detect_tol,
            "radius": self.radius_scale,
            "seed": self.seed,
            "paths": list(self.paths),
        }


@dataclass(frozen=True)
class RecoveredDirection:
    direction: tuple[float, ...]
    node: int | None
    residual: float
    provenance: str  # 'hyperplane' or 'regionfit'


@dataclass(frozen=True)
class DirectionMatch:
    direction_index: int
    sample_index: int
    cosine: float
    scale: float


@dataclass
class ReconstructionReport:
    directions: list[RecoveredDirection] = field(default_factory=list)
    matches: list[DirectionMatch] = field(default_factory=list)
    architecture: tuple[int, ...] | str = "not attempted"
    oracle_queries: int = 0
    kinks: list[tuple[int, float, float, bool]] = field(default_factory=list)
    weight_sheets: int = 0
    rejected_sheets: int = 0
    budget: int | None = None
    residual_tol: float | None = None

    def to_json(self) -> dict:
        return {
            "directions": [
                {
                    "direction": list(d.direction),
                    "node": d.node,
                    "residual": d.residual,
                    "provenance": d.provenance,
                }
                for d in self.directions
            ],
            "matches": [
                {
                    "direction_index": m.direction_index,
                    "sample_index": m.sample_index,
                    "cosine": m.cosine,
                    "scale": m.scale,
                }
                for m in self.matches
            ],
            "architecture": list(self.architecture)
            if isinstance(self.architecture, tuple)
            else self.architecture,
            "oracle_queries": self.oracle_queries,
            "weight_sheets": self.weight_sheets,
            "rejected_sheets": self.rejected_sheets,
            "kink_count": len(self.kinks),
            "budget": self.budget,
            "residual_tol": self.residual_tol,
            "residual_tol_note": "artifact heuristic threshold, not derived from the model",
        }

    def kink_csv(self) -> str:
        lines = ["line_id,t,jump,refined"]
        for line_id, t, jump, refined in self.kinks:
            lines.append(f"{line_id},{t!r},{jump!r},{str(refined).lower()}")
        return "\n".join(lines) + "\n"


def _match_directions(
    directions: list[RecoveredDirection], true_inputs
) -> list[DirectionMatch]:
    matches = []
    for di, rec in enumerate(directions):
        v = np.asarray(rec.direction, dtype=float)
        best = None
        for si, a in enumerate(true_inputs):
            a = np.asarray(a, dtype=float)
            na = float(np.linalg.norm(a))
            if na == 0.0:
                continue
            cos = abs(float(a @ v)) / (na * float(np.linalg.norm(v)))
            if best is None or cos > best[1]:
                scale = float(a @ v) / float(v @ v)
                best = (si, cos, scale)
        if best is not None:
            matches.append(DirectionMatch(di, best[0], best[1], best[2]))
    return matches


def run_attack(
    oracle: Callable[[np.ndarray], float],
    n_weights: int,
    input_dim: int,
    config: AttackConfig | None = None,
    *,
    true_inputs: Sequence[Sequence[float]] | None = None,
) -> ReconstructionReport:
    """Black-box reconstruction: scan, refine, harvest, fit, classify.

    Knows only the oracle, the weight count N and the input arity d_1.
    Recovered directions are unit vectors in input space, deduplicated at
    |cos| >= 1 - dedup_tol; when true_inputs is supplied (scoring only,
    never consulted by the search) each direction is matched to its best
    sample by |cosine| together with the implied scalar multiple.
    """
    cfg = config or AttackConfig()
    counted = LossOracle(oracle, budget=cfg.budget)
    report = ReconstructionReport(budget=cfg.budget, residual_tol=cfg.residual_tol)
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.n_lines)

    raw_candidates: list[RecoveredDirection] = []
    try:
        for line_id in range(cfg.n_lines):
            rng = np.random.default_rng(children[line_id])
            base = rng.normal(size=n_weights) * cfg.probe_scale
            direction = rng.normal(size=n_weights)
            direction /= np.linalg.norm(direction)
            kinks = detect_kinks_on_line(
                counted,
                base,
                direction,
                cfg.t_range,
                cfg.grid,
                tol=cfg.detect_tol,
                refine_tol=cfg.refine_tol,
                degree=cfg.degree,
                refine_budget=cfg.refine_budget,
                max_kinks=cfg.max_kinks_per_line,
            )
            for kink in kinks:
                report.kinks.append((line_id, kink.t, kink.jump_magnitude, kink.refined))
            if "hyperplane" in cfg.paths:
                for kink in kinks:
                    radius = cfg.radius_scale * max(
                        1.0, float(np.linalg.norm(kink.location))
                    )
                    pts = None
                    for _shrink in range(2):
                        try:
                            pts = harvest_sheet_points(
                                counted,
                                kink,
                                n_weights,
                                radius,
                                rng=rng,
                                retries=cfg.retries,
                                degree=cfg.degree,
                                refine_tol=cfg.refine_tol,
                                refine_budget=cfg.refine_budget,
                                detect_tol=cfg.detect_tol,
                            )
                            break
                        except HarvestError:
                            radius *= 0.5
                    if pts is None:
                        report.rejected_sheets += 1
                        continue
                    try:
                        normal, resid = fit_hyperplane(pts)
                    except DegeneracyError:
                        report.rejected_sheets += 1
                        continue
                    if resid > cfg.residual_tol * max(1.0, radius):
                        report.rejected_sheets += 1
                        continue
                    ext = aligned_input_direction(normal, input_dim, cfg.support_tol)
                    if ext.kind == "weight-parameter":
                        report.weight_sheets += 1
                    elif ext.kind == "input-direction":
                        raw_candidates.append(
                            RecoveredDirection(ext.direction, ext.node, resid, "hyperplane")
                        )
                    else:
                        report.rejected_sheets += 1
            if "regionfit" in cfg.paths and kinks:
                kink = kinks[0]
                clearance = max(0.05, 10.0 * cfg.radius_scale)
                loc = np.asarray(kink.location)
                d = np.asarray(kink.line[1])
                try:
                    fit_lo = fit_region_polynomial(
                        counted, loc - clearance * d, 0.4 * clearance, cfg.degree, rng=rng
                    )
                    fit_hi = fit_region_polynomial(
                        counted, loc + clearance * d, 0.4 * clearance, cfg.degree, rng=rng
                    )
                except (ContaminationError, EnumerationBudgetError):
                    report.rejected_sheets += 1
                else:
                    dd = region_difference_direction(
                        fit_lo,
                        fit_hi,
                        None,
                        cfg.support_tol,
                        wall_point=loc,
                        input_dim=input_dim,
                    )
                    if dd.kind == "input-direction":
                        raw_candidates.append(
                            RecoveredDirection(dd.direction, dd.node, dd.magnitude, "regionfit")
                        )
    except QueryBudgetExceeded:
        pass

    for cand in raw_candidates:
        v = np.asarray(cand.direction)
        dup = False
        for idx, kept in enumerate(report.directions):
            u = np.asarray(kept.direction)
            cos = abs(float(u @ v)) / (np.linalg.norm(u) * np.linalg.norm(v))
            if cos >= 1.0 - cfg.dedup_tol:
                if cand.residual < kept.residual:
                    report.directions[idx] = cand
                dup = True
                break
        if not dup:
            report.directions.append(cand)

    if true_inputs is not None:
        report.matches = _match_directions(report.directions, true_inputs)
    report.oracle_queries = counted.query_count
    return report


def one_d_warmup_oracle(pairs: Sequence[tuple[float, float]], budget: int | None = None) -> LossOracle:
    """N=1 oracle h(a) = sum_i (1/2) max(0, y_i - a x_i)^2.

    The same function is the [2,1,1] network loss restricted to the line
    w = (-a, 1, 1); its kinks sit at the ratios a = y_i / x_i.
    """
    pts = [(float(x), float(y)) for x, y in pairs]

    def h(w) -> float:
        a = float(np.asarray(w, dtype=float).reshape(-1)[0])
        return math.fsum(0.5 * max(0.0, y - a * x) ** 2 for x, y in pts)

    return LossOracle(h, budget=budget)
