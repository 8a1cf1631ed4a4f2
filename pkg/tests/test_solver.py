# -*- coding: utf-8 -*-
"""对偶次梯度求解器测试"""

import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import core.solver as solver_module
from core.data_gen import DatasetSpec, generate
from core.exceptions import DegenerateEigengapWarning, DimensionMismatch, InvalidConfig, ZeroVector
from core.grassmann import Basis, chordal_distance, extrinsic_mean, random_basis
from core.performance import PerformanceMonitor
from core.solver import (
    ConvergedReason,
    DualWeights,
    SolverConfig,
    SolverResult,
    distances,
    dual_cost,
    primal_cost,
    simplex_normalize,
    simplex_project,
    solve,
    subgradient,
    support_init,
    warm_start_sweep,
)

from conftest import PRIMAL_K2, U1, U2, axis_lines, identical_collection, random_collection


class TestSolverConfig:
    def test_defaults(self):
        cfg = SolverConfig()
        assert cfg.step_mode == "backtracking"
        assert cfg.projection == "euclidean"
        assert cfg.to_dict()["max_iter"] == 5000

    def test_collects_every_error(self):
        with pytest.raises(InvalidConfig) as info:
            SolverConfig(a=-1.0, zeta=2.0, beta=0.5)
        assert len(info.value.errors) == 3

    def test_normalizes_choice_case(self):
        assert SolverConfig(step_mode="Diminishing").step_mode == "diminishing"

    def test_unknown_projection(self):
        with pytest.raises(InvalidConfig):
            SolverConfig(projection="sparsemax")


class TestSimplex:
    def test_dual_weights_must_be_feasible(self):
        with pytest.raises(InvalidConfig):
            DualWeights(np.array([0.7, 0.7]))
        assert DualWeights.uniform(4).tolist() == [0.25] * 4

    def test_normalize(self):
        w = simplex_normalize([2.0, -1.0, 2.0])
        np.testing.assert_allclose(w.values, [0.5, 0.0, 0.5])

    def test_normalize_zero_vector(self):
        with pytest.raises(ZeroVector):
            simplex_normalize([0.0, -1.0])

    def test_project_feasible_point_is_fixed(self):
        v = np.array([0.2, 0.3, 0.5])
        np.testing.assert_allclose(simplex_project(v).values, v, atol=1e-15)

    def test_project_zeroes_small_entries(self):
        np.testing.assert_allclose(simplex_project([1.0, 0.2, -3.0]).values, [0.9, 0.1, 0.0], atol=1e-15)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(min_value=-10, max_value=10, allow_nan=False), min_size=1, max_size=12))
    def test_project_is_euclidean_projection(self, values):
        v = np.array(values)
        w = simplex_project(v).values
        assert np.all(w >= 0)
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        # KKT: 正分量上 v − w 为同一常数，零分量上 v 不超过该常数
        positive = w > 1e-12
        tau = np.mean((v - w)[positive])
        np.testing.assert_allclose((v - w)[positive], tau, atol=1e-9)
        assert np.all(v[~positive] <= tau + 1e-9)


class TestDualFunction:
    def test_toy5_uniform_weights(self, toy5):
        value, center = dual_cost(np.full(3, 1.0 / 3.0), toy5, 1)
        assert value == pytest.approx(-1.0 / 9.0, abs=1e-12)
        assert chordal_distance(center, Basis(U1)) == pytest.approx(0.0, abs=1e-10)

    def test_subgradient_bounds(self, rng):
        collection = random_collection(rng, 6, [1, 2, 3, 4])
        center = random_basis(6, 2, rng)
        g = subgradient(center, collection, 2)
        assert np.all(g <= 0)
        assert np.all(g >= -np.minimum(collection.dims, 2))

    def test_subgradient_dimension_mismatch(self, toy5, rng):
        with pytest.raises(DimensionMismatch):
            subgradient(random_basis(5, 2, rng), toy5, 1)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
    def test_subgradient_inequality(self, seed):
        rng = np.random.default_rng(seed)
        collection = random_collection(rng, 7, rng.integers(1, 5, size=6))
        k = int(rng.integers(1, 4))
        lam = rng.dirichlet(np.ones(6))
        f_lam, center = dual_cost(lam, collection, k)
        g = subgradient(center, collection, k)
        for mu in rng.dirichlet(np.ones(6), size=100):
            f_mu, _ = dual_cost(mu, collection, k)
            assert f_mu >= f_lam + g @ (mu - lam) - 1e-10

    def test_weak_duality_at_random_points(self, rng):
        collection = random_collection(rng, 8, [2, 3, 3, 4, 2])
        for lam in rng.dirichlet(np.ones(5), size=50):
            f, center = dual_cost(lam, collection, 2)
            assert primal_cost(center, collection) + f >= -1e-10


class TestSupportInit:
    def test_ties_share_weight(self, toy5):
        w = support_init(toy5, Basis(U1))
        np.testing.assert_allclose(w.values, [1.0 / 3.0] * 3, atol=1e-12)

    def test_single_farthest_point(self, toy5):
        center = Basis(np.eye(5)[:, [3]])
        d = distances(center, toy5)
        w = support_init(toy5, center)
        assert w.values[int(np.argmax(d))] == pytest.approx(1.0)


class TestSolve:
    def test_toy5_line_center(self, toy5):
        result = solve(toy5, 1)
        assert result.primal_cost == pytest.approx(1.0 / 9.0, abs=1e-6)
        assert result.duality_gap <= 1e-6
        np.testing.assert_allclose(result.lambda_best.values, [1.0 / 3.0] * 3, atol=1e-3)
        assert chordal_distance(result.center, Basis(U1)) == pytest.approx(0.0, abs=1e-6)

    def test_toy5_plane_center(self, toy5):
        result = solve(toy5, 2)
        assert result.primal_cost == pytest.approx(PRIMAL_K2, abs=1e-6)
        assert result.duality_gap <= 1e-6
        assert result.lambda_best.values[2] <= 1e-3
        assert chordal_distance(result.center, Basis(U2)) == pytest.approx(0.0, abs=1e-5)
        assert result.converged_reason in (ConvergedReason.GAP_BELOW_ETA, ConvergedReason.STALLED)

    def test_trace_is_consistent(self, rng):
        collection = random_collection(rng, 8, [2, 3, 4, 3, 2, 3])
        result = solve(collection, 2, SolverConfig(max_iter=200))
        assert result.iterations == len(result.trace) - 1
        times = [entry.time for entry in result.trace]
        assert times == sorted(times)
        for entry in result.trace:
            assert entry.gap >= -1e-10
            assert entry.best_primal <= entry.primal + 1e-15
        assert result.dual_cost == pytest.approx(min(e.dual for e in result.trace))
        assert result.duality_gap == pytest.approx(result.primal_cost + result.dual_cost)

    def test_diminishing_mode(self, rng):
        collection = random_collection(rng, 6, [2, 2, 3, 1])
        result = solve(collection, 1, SolverConfig(step_mode="diminishing", max_iter=100))
        assert result.iterations <= 100
        assert all(entry.gap >= -1e-10 for entry in result.trace)

    def test_normalize_projection_at_optimum(self, toy5):
        result = solve(toy5, 1, SolverConfig(projection="normalize"))
        assert result.primal_cost == pytest.approx(1.0 / 9.0, abs=1e-9)

    def test_single_iteration(self, rng):
        collection = random_collection(rng, 7, [3, 3, 3, 3])
        result = solve(collection, 3, SolverConfig(max_iter=1, eta=1e-15), keep_centers=True)
        assert result.iterations <= 1
        mean = extrinsic_mean(collection, 3)
        assert chordal_distance(result.best_center_trace[0], mean) == pytest.approx(0.0, abs=1e-10)

    def test_identical_subspaces_converge_immediately(self, rng):
        collection = identical_collection(rng, 6, 2, 5)
        result = solve(collection, 2)
        assert result.iterations <= 2
        assert result.primal_cost == pytest.approx(0.0, abs=1e-12)

    def test_init_lambda_validation(self, toy5):
        with pytest.raises(InvalidConfig):
            solve(toy5, 1, init_lambda=[1.0, -1.0, 1.0])
        with pytest.raises(InvalidConfig):
            solve(toy5, 1, init_lambda=[0.5, 0.5])

    def test_order_validation(self, toy5):
        with pytest.raises(InvalidConfig):
            solve(toy5, 0)
        with pytest.raises(InvalidConfig):
            solve(toy5, 6)

    def test_to_dict_schema(self, toy5):
        data = solve(toy5, 1).to_dict()
        for key in ("k", "lambda", "center", "primal_cost", "dual_cost", "duality_gap",
                    "iterations", "converged_reason", "trace"):
            assert key in data
        assert data["center"]["n"] == 5 and data["center"]["k"] == 1
        assert {"t", "primal", "dual", "step"} <= set(data["trace"][0])

    def test_records_timing(self, toy5):
        monitor = PerformanceMonitor()
        before = monitor.get_collector("solve").get_stats()["total_count"]
        solve(toy5, 1)
        assert monitor.get_collector("solve").get_stats()["total_count"] == before + 1


class TestIterationInvariants:
    @pytest.mark.parametrize("mode", ["backtracking", "diminishing"])
    def test_best_dual_never_increases(self, rng, mode):
        collection = random_collection(rng, 8, [2, 3, 4, 3, 2, 3, 2, 4])
        result = solve(collection, 2, SolverConfig(max_iter=300, step_mode=mode))
        assert np.all(np.diff([e.best_dual for e in result.trace]) <= 0.0)
        if mode == "backtracking":
            assert np.all(np.diff([e.dual for e in result.trace]) <= 0.0)

    def test_iterates_stay_on_simplex(self, rng, monkeypatch):
        collection = random_collection(rng, 8, [2, 3, 4, 3, 2, 3, 2, 4])
        projected = []

        def recording(v):
            weights = simplex_project(v)
            projected.append(np.array(weights.values))
            return weights

        monkeypatch.setattr(solver_module, "simplex_project", recording)
        result = solve(collection, 2, SolverConfig(max_iter=200))
        assert len(projected) >= result.iterations
        for weights in projected:
            assert np.all(weights >= 0.0)
            assert weights.sum() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("k", [1, 2])
    def test_complementary_slackness(self, toy5, k):
        result = solve(toy5, k)
        slack = result.lambda_best.values * (result.primal_cost - distances(result.center, toy5))
        assert result.duality_gap <= 1e-6
        assert np.all(slack >= -1e-12)
        assert np.all(slack <= result.duality_gap + 1e-12)

    def test_same_seed_same_trace(self):
        spec = DatasetSpec(model="nested_ball", n=8, k0=2, eps1=0.8, eps2=0.1, M1=12, M2=6, seed=3)
        runs = [solve(generate(spec).collection, 2, SolverConfig(max_iter=200)) for _ in range(2)]
        traces = [[(e.t, e.primal, e.dual, e.step, e.gap, e.best_primal, e.best_dual) for e in r.trace]
                  for r in runs]
        assert traces[0] == traces[1]
        assert np.array_equal(runs[0].lambda_best.values, runs[1].lambda_best.values)

    def test_noise_free_boundary_ball_is_recovered(self):
        dataset = generate(DatasetSpec(model="nested_ball", n=6, k0=2, eps1=0.5, M1=40, seed=11))
        result = solve(dataset.collection, 2)
        assert result.duality_gap <= 1e-6
        assert result.primal_cost == pytest.approx(0.5, abs=1e-6)
        assert chordal_distance(result.center, dataset.truth_center) <= 1e-3

    def test_stall_needs_flat_dual_and_gap(self):
        flat = [-1.0] * 12
        assert solver_module._stalled(flat, [0.5] * 12, 10, 1e-9)
        assert not solver_module._stalled(flat, list(np.linspace(0.5, 0.4, 12)), 10, 1e-9)
        assert not solver_module._stalled(list(np.linspace(-1.0, -1.1, 12)), [0.5] * 12, 10, 1e-9)

    def test_degenerate_warning_points_at_caller(self):
        with pytest.warns(DegenerateEigengapWarning) as record:
            result = solve(axis_lines(4), 1)
        assert result.converged_reason in (ConvergedReason.STALLED, ConvergedReason.GAP_BELOW_ETA)
        np.testing.assert_allclose(result.lambda_best.values, 0.25)
        assert any(os.path.basename(w.filename) == os.path.basename(__file__) for w in record)


class TestWarmStartSweep:
    def test_init_is_previous_best(self, toy5, monkeypatch):
        inits = []
        original = solver_module.solve

        def recording(collection, k, config=None, init_lambda=None, keep_centers=False):
            inits.append(init_lambda)
            return original(collection, k, config, init_lambda, keep_centers)

        monkeypatch.setattr(solver_module, "solve", recording)
        results = warm_start_sweep(toy5, 2)
        assert inits[0] is None
        assert inits[1] is results[0].lambda_best

    def test_toy5(self, toy5):
        results = warm_start_sweep(toy5, 2)
        assert [r.k for r in results] == [1, 2]
        assert results[0].primal_cost == pytest.approx(1.0 / 9.0, abs=1e-6)
        assert results[1].primal_cost == pytest.approx(PRIMAL_K2, abs=1e-6)

    def test_naive_matches_warm_costs(self, toy5):
        warm = warm_start_sweep(toy5, 2, warm_start=True)
        naive = warm_start_sweep(toy5, 2, warm_start=False, threads=2)
        for a, b in zip(warm, naive):
            assert a.primal_cost == pytest.approx(b.primal_cost, abs=1e-6)

    def test_k_max_range(self, toy5):
        with pytest.raises(InvalidConfig):
            warm_start_sweep(toy5, 3)

    def test_failure_placeholder(self):
        result = SolverResult.failure(3, "boom")
        assert result.failed
        assert np.isnan(result.primal_cost)
        assert result.support() == []
        assert result.to_dict()["error"] == "boom"
