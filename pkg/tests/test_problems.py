import itertools
import json
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from protes import ProtesConfig, protes_minimize
from protes.constraints import count_min_run, is_min_run_admissible
from protes.problems import (
    ANALYTIC_FUNCTIONS,
    ControlInstance,
    Problem,
    all_indices,
    analytic_problem,
    brute_force_min,
    constrained_control_problem,
    control_problem,
    planted_problem,
    qubo_instance,
    qubo_problem,
)
from protes.problems.analytic import ackley, michalewicz, piston, schwefel
from protes.problems.qubo import QuboInstance, max_cut_qubo, vertex_cover_qubo

QUBO_KINDS = ["max_cut", "min_vertex_cover", "quadratic_knapsack", "binary_knapsack"]


def rk4_reference(x, z0, substeps, interval=1.0):
    """Scalar RK4 written independently of the library; returns z(0..T) or None on blow-up."""
    h = interval / substeps
    z = z0
    out = [z]
    for u in x[:-1]:
        for _ in range(substeps):
            f = lambda s: s * s * s - u
            a = f(z)
            b = f(z + h * a / 2)
            c = f(z + h * b / 2)
            e = f(z + h * c)
            z += h * (a + 2 * b + 2 * c + e) / 6
            if not math.isfinite(z) or abs(z) > 1e6:
                return None
        out.append(z)
    return out


class TestAnalytic:
    @pytest.mark.parametrize("name", sorted(ANALYTIC_FUNCTIONS))
    def test_builds_and_evaluates(self, name):
        pr = analytic_problem(name, d=7, grid=16)
        assert pr.shape == (16,) * 7
        X = np.random.default_rng(0).integers(0, 16, (50, 7))
        y = pr.evaluate(X)
        assert y.shape == (50,) and np.all(np.isfinite(y))
        assert np.array_equal(y, pr.evaluate(X))
        json.dumps(pr.describe())

    def test_unknown(self):
        with pytest.raises(ValueError, match="unknown"):
            analytic_problem("nope")

    def test_known_values(self):
        z = np.zeros((1, 5))
        assert ackley(z)[0] == pytest.approx(0.0, abs=1e-12)
        for name in ("alpine", "griewank", "rastrigin", "schaffer"):
            assert ANALYTIC_FUNCTIONS[name][0](z)[0] == pytest.approx(0.0, abs=1e-12)
        assert ANALYTIC_FUNCTIONS["exponential"][0](z)[0] == -1.0
        qing = ANALYTIC_FUNCTIONS["qing"][0]
        assert qing(np.sqrt(np.arange(1, 6))[None, :])[0] == pytest.approx(0.0, abs=1e-12)
        assert schwefel(np.full((1, 4), 420.968746))[0] == pytest.approx(0.0, abs=1e-3)
        assert michalewicz(np.array([[2.20290552, 1.57079633]]))[0] == pytest.approx(-1.8013, abs=1e-4)

    def test_piston_range(self):
        pr = analytic_problem("piston", d=3)
        assert pr.d == 7
        y = pr.evaluate(np.random.default_rng(1).integers(0, 16, (500, 7)))
        # cycle time in seconds over the standard input box
        assert 0.1 < y.min() and y.max() < 1.5

    def test_piston_nominal(self):
        x = np.array([[45.0, 0.0125, 0.006, 3000.0, 100000.0, 293.0, 350.0]])
        M, S, V0, k, P0, Ta, T0 = x[0]
        A = P0 * S + 19.62 * M - k * V0 / S
        V = S / (2 * k) * (math.sqrt(A * A + 4 * k * P0 * V0 * Ta / T0) - A)
        expected = 2 * math.pi * math.sqrt(M / (k + S * S * P0 * V0 * Ta / (T0 * V * V)))
        assert piston(x)[0] == pytest.approx(expected, rel=1e-12)

    def test_ackley_origin_on_odd_grid(self):
        pr = analytic_problem("ackley", d=4, grid=17)
        assert pr.evaluate([[8, 8, 8, 8]])[0] == pytest.approx(0.0, abs=1e-12)

    def test_ackley_grid_minimum(self):
        pr = analytic_problem("ackley", d=7, grid=16)
        nodes = np.linspace(-32.768, 32.768, 16)
        # Ackley depends on x only through sum x^2 and sum cos(2 pi x): a multiset of |x|
        mags = np.unique(np.round(np.abs(nodes), 12))
        oracle = min(ackley(np.array([c]))[0] for c in itertools.combinations_with_replacement(mags, 7))
        nearest = pr.evaluate([[7] * 7])[0]
        assert nearest == pytest.approx(oracle, rel=1e-12)
        _, best, _ = protes_minimize(pr, ProtesConfig(seed=0))
        assert best >= oracle - 1e-12

    def test_grid_nodes(self):
        pr = analytic_problem("exponential", d=1, grid=3)
        np.testing.assert_allclose(pr.evaluate([[0], [1], [2]]), [-math.exp(-0.5), -1.0, -math.exp(-0.5)])
        assert pr.metadata["domain"] == [[-1.0, 1.0]]

    def test_bad_grid(self):
        with pytest.raises(ValueError):
            analytic_problem("ackley", d=3, grid=1)


class TestQubo:
    def test_empty_graph(self):
        Q = max_cut_qubo(np.zeros((4, 4)))
        assert np.all(QuboInstance(Q).energy(all_indices((2,) * 4)) == 0)

    def test_single_edge(self):
        Q = max_cut_qubo(np.array([[0.0, 1.0], [1.0, 0.0]]))
        y = QuboInstance(Q).energy([[0, 0], [0, 1], [1, 0], [1, 1]])
        assert list(y) == [0, -1, -1, 0]

    def test_max_cut_counts_cut_edges(self, rng):
        pr = qubo_problem("max_cut", d=9, seed=3)
        Q = np.asarray(pr.metadata["Q"])
        adj = (Q > 0).astype(int)
        for x in rng.integers(0, 2, (30, 9)):
            cut = sum(adj[i, j] for i in range(9) for j in range(i + 1, 9) if x[i] != x[j])
            assert pr.evaluate(x)[0] == -cut

    def test_vertex_cover_encoding(self, rng):
        pr = qubo_problem("min_vertex_cover", d=9, seed=4)
        P, offset = pr.metadata["penalty"], pr.metadata["offset"]
        Q = np.asarray(pr.metadata["Q"])
        edges = [(i, j) for i in range(9) for j in range(i + 1, 9) if Q[i, j] != 0]
        for x in rng.integers(0, 2, (30, 9)):
            uncovered = sum(1 for i, j in edges if x[i] == 0 and x[j] == 0)
            assert pr.evaluate(x)[0] + offset == pytest.approx(x.sum() + P * uncovered)

    @pytest.mark.parametrize("kind", QUBO_KINDS)
    def test_symmetric_form(self, kind, rng):
        pr = qubo_problem(kind, d=12, seed=1)
        inst = qubo_instance(pr)
        Q = inst.Q
        assert np.array_equal(Q, Q.T)
        for x in rng.integers(0, 2, (20, 12)):
            expand = sum(Q[i, i] * x[i] for i in range(12)) + 2 * sum(
                Q[i, j] * x[i] * x[j] for i in range(12) for j in range(i + 1, 12)
            )
            assert x @ Q @ x == pytest.approx(expand, abs=1e-10)

    @pytest.mark.parametrize("kind", QUBO_KINDS)
    def test_brute_force_d16(self, kind):
        pr = qubo_problem(kind, d=16, seed=0)
        X = all_indices((2,) * 16)
        y = pr.evaluate(X)
        x_min, y_min = brute_force_min(pr)
        assert y_min == y.min() and np.array_equal(x_min, X[np.argmin(y)])
        inst = qubo_instance(pr)
        if inst.weights is not None:
            assert x_min @ inst.weights <= inst.capacity
        _, best, _ = protes_minimize(pr, ProtesConfig(M=2000, seed=0))
        assert best >= y_min

    def test_binary_knapsack_parameters(self):
        pr = qubo_problem("knapsack", d=50, seed=7)
        w, p = np.array(pr.metadata["weights"]), np.array(pr.metadata["profits"])
        assert w.min() >= 5 and w.max() <= 20 and p.min() >= 50 and p.max() <= 100
        assert pr.metadata["penalty"] == 10 * p.max()
        assert pr.metadata["capacity"] <= 1000

    def test_seeded(self):
        a, b = qubo_problem("max_cut", 20, 5), qubo_problem("max_cut", 20, 5)
        assert a.metadata["Q"] == b.metadata["Q"]
        assert a.metadata["Q"] != qubo_problem("max_cut", 20, 6).metadata["Q"]

    def test_rebuild_from_json(self, rng):
        pr = qubo_problem("quadratic_knapsack", 10, 2)
        inst = qubo_instance(Problem(pr.name, pr.shape, pr.func, json.loads(json.dumps(pr.metadata))))
        X = rng.integers(0, 2, (40, 10))
        assert np.array_equal(inst.energy(X), pr.evaluate(X))

    def test_unknown(self):
        with pytest.raises(ValueError):
            qubo_problem("tsp", 5)

    def test_vertex_cover_offset(self):
        Q, offset = vertex_cover_qubo(np.array([[0.0, 1.0], [1.0, 0.0]]), P=8)
        y = QuboInstance(Q).energy([[0, 0], [1, 0], [1, 1]]) + offset
        assert list(y) == [8, 1, 2]


class TestControl:
    def test_shape(self):
        assert control_problem(25).shape == (2,) * 26

    def test_zero_initial_term(self):
        inst = ControlInstance(T=1, z0=0.7, z_ref=0.7)
        # J = 0.5 (z(1) - 0.7)^2 only
        z1 = inst.trajectory([[1, 0]])[0, 1]
        assert inst.objective([[1, 0]])[0] == pytest.approx(0.5 * (z1 - 0.7) ** 2, abs=1e-15)

    def test_all_zeros_blows_up(self):
        # dz/dt = z^3 from 0.8 escapes at t = 1 / (2 * 0.64) < 1
        assert control_problem(5).evaluate(np.zeros((1, 6), dtype=int))[0] == math.inf

    def test_blowup_time_closed_form(self):
        t_star = 1 / (2 * 0.8**2)
        early = ControlInstance(T=1, interval=0.95 * t_star, substeps=400)
        late = ControlInstance(T=1, interval=1.05 * t_star, substeps=400)
        assert math.isfinite(early.objective([[0, 0]])[0])
        assert late.objective([[0, 0]])[0] == math.inf

    def test_matches_independent_integrator(self):
        T = 25
        pr = control_problem(T)
        inst = ControlInstance(T)
        # restricted family: a prefix of ones then a periodic pattern
        family = []
        for lead in range(1, 4):
            for period in range(1, 5):
                for duty in range(period + 1):
                    pat = ([1] * duty + [0] * (period - duty)) * T
                    family.append(([1] * lead + pat)[: T + 1])
        X = np.array(family)
        ys = pr.evaluate(X)
        for x, y in zip(family, ys):
            ref = rk4_reference(x, 0.8, 10)
            if ref is None:
                assert y == math.inf
            else:
                assert y == pytest.approx(0.5 * sum((z - 0.7) ** 2 for z in ref), abs=1e-9)
        assert np.isfinite(ys).any()
        np.testing.assert_allclose(inst.trajectory(X[np.isfinite(ys)]).ravel(), np.ravel(
            [rk4_reference(x, 0.8, 10) for x, y in zip(family, ys) if math.isfinite(y)]
        ), atol=1e-12)

    def test_against_adaptive_solver(self):
        x = [1, 0, 1, 1, 0, 1]
        inst = ControlInstance(T=5, interval=0.1, substeps=200)
        Z = inst.trajectory([x])[0]
        z, ref = 0.8, [0.8]
        for t in range(5):
            sol = solve_ivp(lambda s, v: v**3 - x[t], (0, 0.1), [z], rtol=1e-12, atol=1e-14)
            z = sol.y[0, -1]
            ref.append(z)
        np.testing.assert_allclose(Z, ref, atol=1e-9)

    def test_rk4_order(self):
        x = [[1, 0, 1, 1, 0, 1, 0, 1]]
        J = lambda s: ControlInstance(T=7, interval=0.25, substeps=s).objective(x)[0]
        ref = J(640)
        e1, e2, e3 = (abs(J(s) - ref) for s in (5, 10, 20))
        assert 12 <= e1 / e2 <= 20
        assert 12 <= e2 / e3 <= 20

    def test_last_control_is_ignored(self):
        pr = control_problem(6)
        a, b = [1, 0, 1, 0, 0, 0, 0], [1, 0, 1, 0, 0, 0, 1]
        assert np.array_equal(pr.evaluate([a]), pr.evaluate([b]))

    def test_batch_purity(self):
        pr = control_problem(10)
        X = np.random.default_rng(3).integers(0, 2, (64, 11))
        assert np.array_equal(pr.evaluate(X), pr.evaluate(X))
        # batched result equals one-at-a-time evaluation
        assert np.array_equal(pr.evaluate(X), np.concatenate([pr.evaluate(x) for x in X]))

    def test_invalid(self):
        with pytest.raises(ValueError):
            control_problem(0)
        with pytest.raises(ValueError):
            control_problem(5, substeps=0)


class TestConstrainedControl:
    def test_count(self):
        pr, ind = constrained_control_problem(T=4, l=3)
        assert pr.shape == (2,) * 5 and ind.shape == (2,) * 5
        full = ind.full()
        assert full.sum() == count_min_run(5, 3)
        assert np.array_equal(full.ravel() == 1, is_min_run_admissible(all_indices((2,) * 5), 3))

    def test_too_short(self):
        with pytest.raises(ValueError):
            constrained_control_problem(T=2, l=3)

    def test_vacuous(self):
        _, ind = constrained_control_problem(T=6, l=1)
        assert np.all(ind.full() == 1)

    def test_vacuous_filter_changes_nothing(self):
        pr = control_problem(8, interval=0.1)
        cfg = ProtesConfig(M=1000, seed=3)
        a = protes_minimize(pr, cfg)[2]
        b = protes_minimize(pr, cfg, admissible=lambda X: is_min_run_admissible(X, 1))[2]
        assert [r.best_y for r in a] == [r.best_y for r in b]

    def test_inadmissible_still_evaluated(self):
        pr, ind = constrained_control_problem(T=5, l=3, interval=0.1)
        x = [[1, 0, 1, 0, 1, 0]]
        assert not is_min_run_admissible(x, 3)[0]
        assert math.isfinite(pr.evaluate(x)[0])


class TestPlanted:
    def test_unique_minimum(self):
        for seed in range(5):
            pr = planted_problem(6, 4, seed)
            x, y = brute_force_min(pr)
            assert y == 0.0 and list(x) == pr.metadata["x_star"]
            ys = pr.evaluate(all_indices(pr.shape))
            assert (ys == 0).sum() == 1
            others = ys[ys > 0]
            assert others.min() > 1.0 and others.max() < 2.0

    def test_seeded(self):
        X = all_indices((4,) * 6)
        assert np.array_equal(planted_problem(seed=3).evaluate(X), planted_problem(seed=3).evaluate(X))
        assert planted_problem(seed=3).metadata != planted_problem(seed=4).metadata


class TestProblemContract:
    def test_bounds_and_length_checks(self):
        pr = qubo_problem("max_cut", 4, 0)
        with pytest.raises(IndexError):
            pr.evaluate([[0, 0, 0, 2]])
        with pytest.raises(ValueError):
            pr.evaluate([[0, 0, 0]])
        bad = Problem("bad", (2,), lambda X: np.zeros(3))
        with pytest.raises(ValueError):
            bad.evaluate([[0]])

    def test_negated(self):
        pr = analytic_problem("alpine", d=3)
        X = all_indices((16,) * 3)[::37]
        assert np.array_equal(pr.negated().evaluate(X), -pr.evaluate(X))
        assert pr.negated().metadata["negated"] is True
