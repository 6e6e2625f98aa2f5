import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from losscarto import (
    AttackConfig,
    ContaminationError,
    DegeneracyError,
    EnumerationBudgetError,
    FloatPoly,
    LossOracle,
    NetworkShape,
    Poly,
    QueryBudgetExceeded,
    RecoveryError,
    SpuriousKinkError,
    aligned_input_direction,
    detect_kinks_on_line,
    enumerate_singular_sheets,
    extract_input_direction,
    fit_hyperplane,
    fit_region_polynomial,
    gen_instance,
    harvest_sheet_points,
    make_oracle,
    one_d_warmup_oracle,
    recover_architecture,
    refine_kink,
    region_difference_direction,
    run_attack,
)

V = Poly.variable
F = Fraction


class TestLossOracle:
    def test_budget_is_hard(self):
        oracle = LossOracle(lambda w: float(w[0]), budget=5)
        for _ in range(5):
            oracle([1.0])
        assert oracle.query_count == 5
        with pytest.raises(QueryBudgetExceeded):
            oracle([1.0])
        assert oracle.query_count == 5  # the failed query is not charged

    def test_counts(self):
        oracle = LossOracle(lambda w: 0.0)
        for _ in range(3):
            oracle([0.0])
        assert oracle.query_count == 3


class TestDetectRefine:
    def test_first_order_kink(self):
        # |t - 0.37| has a slope jump of 2 at 0.37, on a smooth background
        kink_at = 0.37

        def f(w):
            t = w[0]
            return abs(t - kink_at) + 0.3 * t * t + 1.0

        kinks = detect_kinks_on_line(LossOracle(f), [0.0], [1.0], (-4, 4), 257)
        assert len(kinks) == 1
        assert abs(kinks[0].t - kink_at) < 1e-8
        assert kinks[0].jump_magnitude == pytest.approx(2.0, rel=1e-4)

    def test_second_order_kink(self):
        # max(0, t - c)^2 is C^1: only the curvature jumps (by 2)
        kink_at = -1.234

        def f(w):
            t = w[0]
            return max(0.0, t - kink_at) ** 2 + 0.1 * t**2

        kinks = detect_kinks_on_line(LossOracle(f), [0.0], [1.0], (-4, 4), 257)
        assert len(kinks) == 1
        assert abs(kinks[0].t - kink_at) < 1e-6
        assert kinks[0].curvature_jump == pytest.approx(2.0, rel=1e-3)

    def test_multiple_kinks_sorted(self):
        spots = [-2.1, 0.4, 1.9]

        def f(w):
            t = w[0]
            return sum(abs(t - c) for c in spots)

        kinks = detect_kinks_on_line(LossOracle(f), [0.0], [1.0], (-4, 4), 257)
        assert [round(k.t, 6) for k in kinks] == pytest.approx(spots, abs=1e-6)

    def test_max_kinks_keeps_strongest(self):
        def f(w):
            t = w[0]
            return 5.0 * abs(t - 1.0) + 0.01 * abs(t + 2.0)

        kinks = detect_kinks_on_line(
            LossOracle(f), [0.0], [1.0], (-4, 4), 257, max_kinks=1
        )
        assert len(kinks) == 1 and abs(kinks[0].t - 1.0) < 1e-8

    def test_smooth_line_is_clean(self):
        def f(w):
            t = w[0]
            return (t - 0.3) ** 4 + 2.0 * t * t

        assert detect_kinks_on_line(LossOracle(f), [0.0], [1.0], (-4, 4), 257) == []

    def test_refine_spurious_bracket(self):
        def f(w):
            t = w[0]
            return t**4 - t + 3.0

        with pytest.raises(SpuriousKinkError):
            refine_kink(LossOracle(f), [0.0], [1.0], (0.1, 0.2))

    def test_refine_budget(self):
        def f(w):
            return abs(w[0] - 0.15)

        with pytest.raises(QueryBudgetExceeded):
            refine_kink(LossOracle(f), [0.0], [1.0], (0.1, 0.2), max_queries=12)

    def test_oracle_budget_propagates(self):
        oracle = LossOracle(lambda w: abs(w[0]), budget=50)
        with pytest.raises(QueryBudgetExceeded):
            detect_kinks_on_line(oracle, [0.0], [1.0], (-4, 4), 257)


def plane_kink_oracle(normal, smooth_scale=0.1):
    """|<n, w>| plus a smooth bowl: its kink sheet is the hyperplane n.w = 0."""
    n = np.asarray(normal, dtype=float)

    def f(w):
        w = np.asarray(w, dtype=float)
        return abs(float(n @ w)) + smooth_scale * float(w @ w)

    return f


class TestHarvestAndFit:
    def test_fit_hyperplane_exact_points(self):
        rng = np.random.default_rng(0)
        n = np.array([3.0, -1.0, 2.0, 0.5])
        n /= np.linalg.norm(n)
        basis = np.linalg.svd(n[None, :])[2][1:]
        pts = rng.normal(size=(12, 3)) @ basis + 0.7 * n * 0.0
        normal, resid = fit_hyperplane(pts)
        assert resid < 1e-12
        assert abs(float(normal @ n)) > 1.0 - 1e-12

    def test_fit_hyperplane_degenerate(self):
        # all points on a line in R^3: the normal is not unique
        ts = np.linspace(0, 1, 10)
        pts = np.stack([ts, 2 * ts, -ts], axis=1)
        with pytest.raises(DegeneracyError):
            fit_hyperplane(pts)

    def test_fit_hyperplane_needs_enough_points(self):
        with pytest.raises(ValueError):
            fit_hyperplane(np.zeros((3, 4)))

    def test_harvest_points_lie_on_sheet(self):
        n = np.array([1.0, -2.0, 0.5, 1.5])
        n /= np.linalg.norm(n)
        oracle = LossOracle(plane_kink_oracle(n))
        rng = np.random.default_rng(1)
        base = np.array([0.3, 0.4, -0.2, 0.1])
        direction = np.array([1.0, 0.2, -0.1, 0.3])
        direction /= np.linalg.norm(direction)
        kinks = detect_kinks_on_line(oracle, base, direction, (-4, 4), 257)
        assert len(kinks) == 1
        pts = harvest_sheet_points(oracle, kinks[0], 6, 0.01, rng=rng)
        assert pts.shape == (7, 4)
        seed_pt = np.asarray(kinks[0].location)
        for p in pts:
            assert abs(float(n @ p)) < 1e-7
            assert np.linalg.norm(p - seed_pt) <= 0.02 + 1e-9
        normal, resid = fit_hyperplane(pts)
        assert abs(float(normal @ n)) > 1.0 - 1e-9

    def test_curved_sheet_residual_scales_quadratically(self):
        # points on a sphere cap: halving the cap radius quarters the
        # plane-fit residual, so curvature is detectable by rescan
        rng = np.random.default_rng(2)
        R = 1.0
        center = np.array([0.0, 0.0, -R])

        def cap_points(radius):
            xy = rng.normal(size=(40, 2))
            xy /= np.linalg.norm(xy, axis=1, keepdims=True)
            xy *= radius * rng.uniform(0.5, 1.0, size=(40, 1))
            z = np.sqrt(R**2 - np.sum(xy**2, axis=1)) - R
            return np.column_stack([xy, z]) - center * 0.0

        _, r1 = fit_hyperplane(cap_points(0.2))
        _, r2 = fit_hyperplane(cap_points(0.1))
        assert r1 / r2 == pytest.approx(4.0, rel=0.6)


class TestExtraction:
    def test_first_layer_column(self):
        s = NetworkShape([3, 4, 2])
        a = np.array([3.0, -1.0, 2.0])
        normal = np.zeros(s.weight_count)
        col = 2  # second-layer target node
        for i in range(3):
            normal[s.index_of(1, i + 1, col)] = a[i]
        normal /= np.linalg.norm(normal)
        ext = extract_input_direction(normal, s)
        assert ext.kind == "input-direction"
        assert ext.node == col
        cos = abs(np.dot(ext.direction, a) / (np.linalg.norm(ext.direction) * np.linalg.norm(a)))
        assert cos > 1.0 - 1e-12

    def test_single_weight(self):
        s = NetworkShape([3, 4, 2])
        normal = np.zeros(s.weight_count)
        normal[17] = -1.0
        ext = extract_input_direction(normal, s)
        assert ext.kind == "weight-parameter" and ext.variable == 17

    def test_mixed_support_is_nonlinear(self):
        s = NetworkShape([3, 4, 2])
        normal = np.zeros(s.weight_count)
        normal[0] = 1.0
        normal[13] = 1.0
        assert extract_input_direction(normal, s).kind == "nonlinear"

    def test_support_tolerance(self):
        s = NetworkShape([3, 4, 2])
        normal = np.zeros(s.weight_count)
        normal[0], normal[1], normal[2] = 1.0, 2.0, -1.0
        normal[12] = 1e-9  # numerical dust outside the column
        assert extract_input_direction(normal, s).kind == "input-direction"

    def test_blind_agrees_with_white_box(self):
        s = NetworkShape([3, 4, 2])
        rng = np.random.default_rng(3)
        for col in range(1, 5):
            a = rng.normal(size=3)
            normal = np.zeros(s.weight_count)
            for i in range(3):
                normal[s.index_of(1, i + 1, col)] = a[i]
            w = extract_input_direction(normal, s)
            b = aligned_input_direction(normal, 3)
            assert w.kind == b.kind == "input-direction"
            assert w.node == b.node == col
            assert np.allclose(w.direction, b.direction)


class TestFloatPoly:
    @settings(max_examples=30)
    @given(st.integers(0, 10**6))
    def test_affine_substitution_matches_evaluation(self, seed):
        rng = np.random.default_rng(seed)
        keys = [(), ((0, 1),), ((1, 2),), ((0, 1), (2, 1)), ((1, 1), (2, 2))]
        p = FloatPoly({k: float(c) for k, c in zip(keys, rng.normal(size=len(keys)))})
        alpha = float(rng.uniform(0.5, 2.0))
        beta = rng.normal(size=3)
        q = p.substitute_affine(alpha, beta)
        for _ in range(5):
            u = rng.normal(size=3)
            assert q.evaluate(u) == pytest.approx(p.evaluate(alpha * u + beta), rel=1e-9, abs=1e-9)

    def test_taylor_shift(self):
        p = FloatPoly({((0, 2),): 1.0})  # w0^2
        c = np.array([3.0])
        s = p.taylor_at(c)  # (v + 3)^2 = v^2 + 6v + 9
        assert s.terms[()] == pytest.approx(9.0)
        assert s.terms[((0, 1),)] == pytest.approx(6.0)
        assert s.terms[((0, 2),)] == pytest.approx(1.0)

    def test_gradient(self):
        p = FloatPoly({((0, 1), (1, 1)): 2.0, ((1, 3),): 1.0})
        g = p.gradient([2.0, 3.0], 2)
        assert g[0] == pytest.approx(6.0)  # d/dw0 2 w0 w1
        assert g[1] == pytest.approx(4.0 + 27.0)  # 2 w0 + 3 w1^2

    def test_from_exact(self):
        p = F(1, 2) * V(0) * V(1) - 3 * V(2)
        fp = FloatPoly.from_exact(p)
        assert fp.evaluate([2.0, 4.0, 1.0]) == pytest.approx(float(p.evaluate((2, 4, 1))))


class TestRegionFit:
    def test_recovers_polynomial(self):
        rng = np.random.default_rng(4)
        true = FloatPoly({(): 1.5, ((0, 2),): 2.0, ((0, 1), (1, 1)): -1.0, ((2, 4),): 0.25})
        oracle = LossOracle(lambda w: true.evaluate(w))
        center = np.array([0.4, -0.2, 0.8])
        fit = fit_region_polynomial(oracle, center, 0.1, 4, rng=rng)
        assert fit.residual < 1e-10
        for _ in range(10):
            w = center + 0.1 * rng.normal(size=3) * 0.5
            assert fit.poly.evaluate(w) == pytest.approx(true.evaluate(w), rel=1e-7, abs=1e-9)

    def test_contamination_detected(self):
        rng = np.random.default_rng(5)
        n = np.array([1.0, -1.0, 0.5])

        def f(w):
            w = np.asarray(w)
            return abs(float(n @ w)) + 0.05 * float(w @ w)

        # ball centered on the kink sheet
        with pytest.raises(ContaminationError):
            fit_region_polynomial(LossOracle(f), np.zeros(3), 0.1, 4, rng=rng)

    def test_monomial_cap(self):
        rng = np.random.default_rng(6)
        with pytest.raises(EnumerationBudgetError):
            fit_region_polynomial(
                LossOracle(lambda w: 0.0), np.zeros(30), 0.1, 4, rng=rng, monomial_cap=100
            )


class TestDifferenceDirection:
    def test_linear_wall_gives_direction(self):
        s = NetworkShape([2, 2, 1])
        # wall x1 w0 + x2 w1 with sample direction (1, 2)
        wall = FloatPoly({((0, 1),): 1.0, ((1, 1),): 2.0})
        cof = FloatPoly({((4, 1),): 0.7, (): 0.3})
        f = FloatPoly({(): 1.0, ((2, 2),): 0.5})
        g_terms = dict(f.terms)
        diff = FloatPoly({})
        # f - g = wall * cofactor
        prod = {}
        for k1, c1 in wall.terms.items():
            for k2, c2 in cof.terms.items():
                merged = dict(k1)
                for v, e in k2:
                    merged[v] = merged.get(v, 0) + e
                key = tuple(sorted(merged.items()))
                prod[key] = prod.get(key, 0.0) + c1 * c2
        g = f - FloatPoly(prod)
        wall_point = np.array([2.0, -1.0, 0.3, 0.4, 1.0, 2.0])  # wall = 2 - 2 = 0
        dd = region_difference_direction(f, g, s, wall_point=wall_point)
        assert dd.kind == "input-direction"
        assert dd.node == 1
        assert np.allclose(
            np.abs(dd.direction / np.linalg.norm(dd.direction)),
            np.abs(np.array([1.0, 2.0]) / math.sqrt(5.0)),
        )

    def test_equal_pieces_not_linear(self):
        s = NetworkShape([2, 2, 1])
        f = FloatPoly({((0, 2),): 1.0})
        dd = region_difference_direction(f, f, s, wall_point=np.zeros(6))
        assert dd.kind == "not-linear"
        assert dd.magnitude == pytest.approx(0.0, abs=1e-12)

    def test_squared_wall_not_linear(self):
        # difference (w0)^2: gradient vanishes on the wall w0 = 0
        s = NetworkShape([2, 2, 1])
        f = FloatPoly({((0, 2),): 1.0})
        g = FloatPoly({})
        wall_point = np.zeros(6)
        dd = region_difference_direction(f, g, s, wall_point=wall_point)
        assert dd.kind == "not-linear"


class TestRecoverArchitecture:
    def test_221_from_enumerated_sheets(self):
        s = NetworkShape([2, 2, 1])
        from losscarto import TrainingSample

        sheets = enumerate_singular_sheets(
            s, [TrainingSample((F(1), F(2)), (F(1),))], 64, seed=0
        )
        assert recover_architecture([sh.poly for sh in sheets]) == (2, 2, 1)

    def test_hand_built_3321(self):
        s = NetworkShape([3, 3, 2, 1])
        x = (F(1), F(2), F(3))
        cols = []
        for j in range(1, 4):
            cols.append(sum((x[i] * V(s.index_of(1, i + 1, j)) for i in range(3)), Poly.zero()))
        # layer-2 rows into each layer-3 node, and the full depth-3 polynomial
        z3 = []
        for j in range(1, 3):
            z3.append(sum((cols[i] * V(s.index_of(2, i + 1, j)) for i in range(3)), Poly.zero()))
        z4 = sum((z3[i] * V(s.index_of(3, i + 1, 1)) for i in range(2)), Poly.zero())
        assert recover_architecture(cols + z3 + [z4]) == (3, 3, 2, 1)

    def test_no_linear_sheets(self):
        with pytest.raises(RecoveryError):
            recover_architecture([V(0) * V(4)])

    def test_declared_arity_cross_check(self):
        s = NetworkShape([2, 2, 1])
        x = (F(1), F(2))
        cols = [
            x[0] * V(s.index_of(1, 1, j)) + x[1] * V(s.index_of(1, 2, j)) for j in (1, 2)
        ]
        z3 = cols[0] * V(4) + cols[1] * V(5)
        assert recover_architecture(cols + [z3], declared_output_arity=1) == (2, 2, 1)
        with pytest.raises(RecoveryError):
            recover_architecture(cols + [z3], declared_output_arity=3)

    def test_divisibility_guard(self):
        # a fake degree-2 sheet claiming a single new variable for layer 2
        cols = [V(0) + V(1), V(2) + V(3)]
        bad = (V(0) + V(1)) * V(4)
        with pytest.raises(RecoveryError):
            recover_architecture(cols + [bad])


class TestAttackPipeline:
    def test_warmup_oracle_values(self):
        oracle = one_d_warmup_oracle([(1.0, 2.0), (3.0, 1.0)])
        assert oracle([0.0]) == pytest.approx(2.5)  # 0.5*4 + 0.5*1
        assert oracle([-1.0]) == pytest.approx(12.5)  # 0.5*9 + 0.5*16
        assert oracle([5.0]) == pytest.approx(0.0)  # both hinges inactive
        assert oracle.query_count == 3

    def test_run_attack_deterministic(self):
        inst = gen_instance([2, 2, 1], 2, seed=11)
        cfg = AttackConfig(n_lines=4, budget=60_000, seed=5)
        reports = []
        for _ in range(2):
            oracle = make_oracle(inst)
            reports.append(run_attack(oracle, 6, 2, cfg))
        a, b = reports
        assert a.oracle_queries == b.oracle_queries
        assert [d.direction for d in a.directions] == [d.direction for d in b.directions]
        assert a.kinks == b.kinks

    def test_run_attack_respects_budget(self):
        inst = gen_instance([2, 2, 1], 2, seed=11)
        cfg = AttackConfig(n_lines=4, budget=700, seed=5)
        report = run_attack(make_oracle(inst), 6, 2, cfg)
        assert report.oracle_queries <= 700

    def test_report_round_trip(self):
        inst = gen_instance([2, 2, 1], 1, seed=2)
        cfg = AttackConfig(n_lines=3, budget=40_000, seed=1)
        true_inputs = [tuple(float(v) for v in s.input) for s in inst.samples]
        report = run_attack(make_oracle(inst), 6, 2, cfg, true_inputs=true_inputs)
        data = report.to_json()
        assert data["oracle_queries"] == report.oracle_queries
        assert "residual_tol_note" in data
        csv = report.kink_csv()
        assert csv.splitlines()[0] == "line_id,t,jump,refined"
        assert len(csv.splitlines()) == len(report.kinks) + 1

    def test_config_json_aliases(self):
        cfg = AttackConfig.from_json(
            {"budget": 1000, "grid": 65, "tol": 9.0, "radius": 1e-4, "seed": 3, "paths": ["hyperplane"]}
        )
        assert cfg.budget == 1000 and cfg.grid == 65
        assert cfg.detect_tol == 9.0 and cfg.radius_scale == 1e-4
        assert cfg.to_json()["tol"] == 9.0
        with pytest.raises(ValueError):
            AttackConfig.from_json({"warp": 1})

    def test_regionfit_path_on_small_instance(self):
        inst = gen_instance([2, 2, 1], 1, seed=3)
        cfg = AttackConfig(
            n_lines=3, budget=100_000, seed=2, paths=("hyperplane", "regionfit"),
            max_kinks_per_line=2,
        )
        true_inputs = [tuple(float(v) for v in s.input) for s in inst.samples]
        report = run_attack(make_oracle(inst), 6, 2, cfg, true_inputs=true_inputs)
        assert any(m.cosine > 0.999 for m in report.matches)
