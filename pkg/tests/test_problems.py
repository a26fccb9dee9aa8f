"""Plant data, constraint-system builders, gain recovery, JSON loading."""

import json

import numpy as np
import pytest

from momipde import (
    BiboPlant,
    GainSet,
    RobustFuzzyPlant,
    VariableLayout,
    bibo_plant,
    build_example1,
    build_example2,
    evaluate,
    is_strictly_feasible,
    load_plant,
    lorenz_fuzzy_plant,
    pack,
    recover_gains,
)

ALPHA1 = [1.9009, 0.7914, 0.1585]
ALPHA2 = [2.1412, 2.0705]


class TestPlantData:
    def test_fuzzy_rule_matrices(self):
        p = lorenz_fuzzy_plant()
        assert (p.n_rules, p.n, p.n_w, p.n_u, p.n_y) == (2, 3, 3, 1, 3)
        assert p.a[0][1][2] == 20.0
        assert p.a[1][1][2] == -30.0
        assert p.a[0][2][2] == pytest.approx(-8.0 / 3.0)
        assert np.array_equal(p.b1[0], 0.1 * np.eye(3))
        assert np.array_equal(p.b2[1], [[1.0], [0.0], [0.0]])
        assert p.h[0][1][0] == 8.4
        assert np.array_equal(p.c[0], np.eye(3))
        assert np.array_equal(p.d[0], [[1.0], [1.0], [1.0]])

    def test_linear_plant(self):
        p = bibo_plant()
        assert np.array_equal(p.a, [[-10.0, -5.0], [-4.0, -1.2]])
        assert np.array_equal(p.b, [[3.0, 1.0], [0.0, 2.0]])
        assert np.array_equal(p.c, [[1.0, 0.7]])
        assert np.array_equal(p.x0, [3.0, -4.0])
        assert (p.n, p.n_u, p.n_y) == (2, 2, 1)

    def test_fuzzy_shape_validation(self):
        with pytest.raises(ValueError, match="per rule"):
            RobustFuzzyPlant(a=(np.eye(2),), b1=(np.eye(2),) * 2,
                             b2=(np.eye(2),), c=(np.eye(2),), d=(np.eye(2),),
                             h=(np.eye(2),))
        with pytest.raises(ValueError, match="n x n"):
            RobustFuzzyPlant(a=(np.zeros((2, 3)),), b1=(np.eye(2),),
                             b2=(np.eye(2),), c=(np.eye(2),), d=(np.eye(2),),
                             h=(np.eye(2),))

    def test_bibo_shape_validation(self):
        with pytest.raises(ValueError):
            BiboPlant(a=np.zeros((2, 3)), b=np.eye(2), c=np.eye(2), x0=np.zeros(2))
        with pytest.raises(ValueError):
            BiboPlant(a=np.eye(2), b=np.eye(2), c=np.eye(2), x0=np.zeros(3))

    def test_gain_set_validation(self):
        gs = GainSet(gains=([[1.0, 2.0]],))
        assert gs.gains[0].shape == (1, 2)
        with pytest.raises(ValueError):
            GainSet(gains=())
        with pytest.raises(ValueError):
            GainSet(gains=([[np.nan, 0.0]],))


class TestBuildExample1:
    def test_block_shapes(self):
        p = lorenz_fuzzy_plant()
        system = build_example1(p, ALPHA1)
        # -Z plus one symmetrized performance block per rule pair i <= j
        assert len(system.blocks) == 1 + 3
        assert system.blocks[0].n == 3
        for blk in system.blocks[1:]:
            # n + (n + n_w) + (n + n_y) rows
            assert blk.n == 15
        # Z symmetric(3) plus one 1x3 gain variable per rule
        assert system.d == 6 + 3 + 3

    def test_alpha_validation(self):
        p = lorenz_fuzzy_plant()
        with pytest.raises(ValueError):
            build_example1(p, [1.0, 1.0])
        for bad in ([0.0, 1.0, 1.0], [1.0, -2.0, 1.0], [1.0, 1.0, 0.0]):
            with pytest.raises(ValueError, match="positive"):
                build_example1(p, bad)

    def test_blocks_evaluate_symmetric(self, rng):
        system = build_example1(lorenz_fuzzy_plant(), ALPHA1)
        for _ in range(5):
            x = rng.standard_normal(system.d)
            for blk in system.blocks:
                m = evaluate(blk, x).a
                assert np.array_equal(m, m.T)

    def test_anchor_feasible_tiny_attenuation_not(self):
        p = lorenz_fuzzy_plant()
        ok, res = is_strictly_feasible(build_example1(p, ALPHA1))
        assert ok and res.lambda_star < 0.0
        # the attenuation level cannot shrink arbitrarily at fixed
        # uncertainty tolerance and scaling
        for gamma in (0.01, 0.1):
            ok, res = is_strictly_feasible(build_example1(p, [gamma, 0.7914, 0.1585]))
            assert not ok and res.lambda_star > 0.0

    def test_augmented_same_constraints(self, rng):
        p = lorenz_fuzzy_plant()
        sa = build_example1(p, ALPHA1, augmented=False)
        sb = build_example1(p, ALPHA1, augmented=True)
        assert len(sa.blocks) == len(sb.blocks)
        x = rng.standard_normal(sa.d)
        for ba, bb in zip(sa.blocks, sb.blocks):
            assert np.array_equal(evaluate(ba, x).a, evaluate(bb, x).a)


class TestBuildExample2:
    def test_block_shapes(self):
        system = build_example2(bibo_plant(), ALPHA2)
        assert [blk.n for blk in system.blocks] == [2, 3, 4, 3]
        assert system.d == 3 + 4

    def test_alpha_validation(self):
        p = bibo_plant()
        with pytest.raises(ValueError):
            build_example2(p, [1.0])
        with pytest.raises(ValueError, match="positive"):
            build_example2(p, [1.0, 0.0])

    def test_initial_state_block_entries(self):
        # the negated coupling block pins x0 against the shape variable
        system = build_example2(bibo_plant(), ALPHA2)
        m = evaluate(system.blocks[1], np.zeros(system.d)).a
        assert m[0][0] == -1.0
        assert m[0][1] == -3.0 and m[0][2] == 4.0
        assert m[1][0] == -3.0 and m[2][0] == 4.0

    def test_bound_blocks_carry_squared_levels(self):
        u_bar, y_bar = 1.5, 2.5
        system = build_example2(bibo_plant(), [u_bar, y_bar])
        zero = np.zeros(system.d)
        mu = evaluate(system.blocks[2], zero).a
        assert mu[2][2] == -u_bar ** 2 and mu[3][3] == -u_bar ** 2
        my = evaluate(system.blocks[3], zero).a
        assert my[2][2] == -y_bar ** 2

    def test_recovered_gain_stabilizes(self, rng):
        # Routh test for n = 2: trace < 0 and det > 0. An independent
        # route from the solver's feasibility claim to actual stability.
        p = bibo_plant()
        checked = 0
        while checked < 8:
            alpha = 0.5 + 7.5 * rng.random(2)
            system = build_example2(p, alpha)
            ok, res = is_strictly_feasible(system)
            if not ok:
                continue
            k = recover_gains(system.layout, res.x_star).gains[0]
            acl = p.a + p.b @ k
            assert np.trace(acl) < 0.0
            assert np.linalg.det(acl) > 0.0
            checked += 1


class TestRecoverGains:
    def test_identity_shape(self):
        layout = VariableLayout([("Z", "symmetric", 2, 2), ("M", "rectangular", 1, 2)])
        x = pack(layout, {"Z": np.eye(2), "M": np.array([[3.0, 4.0]])})
        gs = recover_gains(layout, x)
        assert len(gs.gains) == 1
        assert np.allclose(gs.gains[0], [[3.0, 4.0]], rtol=0, atol=1e-12)

    def test_diagonal_scaling(self):
        layout = VariableLayout([("Z", "symmetric", 2, 2), ("M", "rectangular", 2, 2)])
        x = pack(layout, {"Z": 2.0 * np.eye(2), "M": 4.0 * np.eye(2)})
        gs = recover_gains(layout, x)
        assert np.allclose(gs.gains[0], 2.0 * np.eye(2), rtol=0, atol=1e-12)

    def test_multiple_gain_variables(self, rng):
        layout = VariableLayout([("Z", "symmetric", 3, 3),
                                 ("M1", "rectangular", 1, 3),
                                 ("M2", "rectangular", 1, 3)])
        z = np.eye(3) + 0.1 * np.ones((3, 3))
        m1 = rng.standard_normal((1, 3))
        m2 = rng.standard_normal((1, 3))
        gs = recover_gains(layout, pack(layout, {"Z": z, "M1": m1, "M2": m2}))
        assert len(gs.gains) == 2
        for k, m in zip(gs.gains, (m1, m2)):
            resid = np.max(np.abs(k @ z - m))
            assert resid <= 1e-10 * max(1.0, np.max(np.abs(m)))

    def test_residual_at_solver_output(self):
        from momipde import extract
        system = build_example2(bibo_plant(), ALPHA2)
        ok, res = is_strictly_feasible(system)
        assert ok
        z = extract(system.layout, res.x_star, "Z")
        m = extract(system.layout, res.x_star, "M")
        k = recover_gains(system.layout, res.x_star).gains[0]
        assert np.max(np.abs(k @ z - m)) <= 1e-8 * max(1.0, np.max(np.abs(m)))

    def test_indefinite_shape_variable_raises(self):
        from momipde import NotPositiveDefinite
        layout = VariableLayout([("Z", "symmetric", 2, 2), ("M", "rectangular", 1, 2)])
        x = pack(layout, {"Z": -np.eye(2), "M": np.zeros((1, 2))})
        with pytest.raises(NotPositiveDefinite):
            recover_gains(layout, x)


class TestLoadPlant:
    def test_bibo_round_trip(self, tmp_path):
        p = bibo_plant()
        doc = {"type": "bibo", "a": p.a.tolist(), "b": p.b.tolist(),
               "c": p.c.tolist(), "x0": p.x0.tolist()}
        path = tmp_path / "plant.json"
        path.write_text(json.dumps(doc))
        q = load_plant(str(path))
        assert isinstance(q, BiboPlant)
        assert np.array_equal(q.a, p.a) and np.array_equal(q.x0, p.x0)

    def test_fuzzy_round_trip_from_dict(self):
        p = lorenz_fuzzy_plant()
        doc = {"type": "robust_fuzzy",
               "a": [m.tolist() for m in p.a], "b1": [m.tolist() for m in p.b1],
               "b2": [m.tolist() for m in p.b2], "c": [m.tolist() for m in p.c],
               "d": [m.tolist() for m in p.d], "h": [m.tolist() for m in p.h]}
        q = load_plant(doc)
        assert isinstance(q, RobustFuzzyPlant)
        assert q.n_rules == 2
        assert np.array_equal(q.a[1], p.a[1])

    def test_unknown_type(self):
        with pytest.raises(ValueError, match="unknown plant type"):
            load_plant({"type": "dc_motor"})
