# -*- coding: utf-8 -*-
"""合成数据生成测试"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import core.data_gen as data_gen
from core.data_gen import (
    DatasetSpec,
    OrthogonalPool,
    Provenance,
    Where,
    _small_center,
    add_noise,
    arc_dataset,
    complete_basis,
    generate,
    geodesic_point,
    nested_ball_dataset,
    no_common_dataset,
    noise_variance,
    random_tangent,
    sample_arc,
    sample_ball,
)
from core.exceptions import InfeasiblePlacement, InvalidConfig, PoolExhausted, RadiusTooLarge
from core.grassmann import chordal_distance, p2s_distance, random_basis

from conftest import random_collection


def _nested(**changes) -> DatasetSpec:
    params = dict(model="nested_ball", n=10, k0=3, eps1=1.0, eps2=0.125, M1=14, M2=6, seed=7)
    params.update(changes)
    return DatasetSpec(**params)


class TestDatasetSpec:
    def test_validation_errors(self):
        with pytest.raises(InvalidConfig):
            DatasetSpec(model="torus", n=10, k0=3, eps1=1.0, M1=5)
        with pytest.raises(InvalidConfig):
            DatasetSpec(model="arc", n=3, k0=3, eps1=1.0, M1=5)
        with pytest.raises(InvalidConfig):
            DatasetSpec(model="arc", n=10, k0=1, eps1=1.5, M1=5)

    def test_replace_and_dict(self):
        spec = _nested(snr_db=math.inf)
        assert spec.to_dict()["snr_db"] is None
        assert spec.M == 20
        changed = spec.replace(n=12, seed=3)
        assert (changed.n, changed.seed, changed.k0) == (12, 3, 3)
        assert DatasetSpec.from_dict(changed.to_dict()) == changed


class TestGeodesics:
    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1),
           fraction=st.floats(min_value=0.01, max_value=0.99))
    def test_hits_target_distance(self, seed, fraction):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 12))
        k = int(rng.integers(1, min(4, n - 1) + 1))
        center = random_basis(n, k, rng)
        target = fraction * min(k, n - k)
        point = geodesic_point(center, random_tangent(center, rng), target)
        assert chordal_distance(center, point) == pytest.approx(target, abs=1e-9)

    def test_tangent_is_horizontal(self, rng):
        center = random_basis(8, 3, rng)
        delta = random_tangent(center, rng)
        np.testing.assert_allclose(center.columns.T @ delta, 0.0, atol=1e-12)
        assert np.linalg.norm(delta) == pytest.approx(1.0)

    def test_radius_too_large(self, rng):
        with pytest.raises(RadiusTooLarge):
            sample_ball(random_basis(6, 2, rng), 2.5, Where.BOUNDARY, 1, rng)

    def test_ball_samples(self, rng):
        center = random_basis(9, 2, rng)
        for x in sample_ball(center, 0.7, Where.BOUNDARY, 10, rng):
            assert chordal_distance(center, x) == pytest.approx(0.7, abs=1e-9)
        for x in sample_ball(center, 0.7, Where.INTERIOR, 10, rng):
            assert chordal_distance(center, x) <= 0.7 + 1e-9

    def test_arc_samples_on_boundary(self, rng):
        center = random_basis(9, 3, rng)
        for x in sample_arc(center, 1.0, 8, rng):
            assert chordal_distance(center, x) == pytest.approx(1.0, abs=1e-9)


class TestCompletion:
    def test_contains_core(self, rng):
        core = random_basis(8, 2, rng)
        full = complete_basis(core, 5, rng)
        assert full.p == 5
        assert p2s_distance(core, full) == pytest.approx(0.0, abs=1e-12)

    def test_smaller_target_rejected(self, rng):
        with pytest.raises(InvalidConfig):
            complete_basis(random_basis(8, 3, rng), 2, rng)

    def test_pool_hands_out_each_direction_once(self, rng):
        truth = random_basis(8, 2, rng)
        pool = OrthogonalPool.build(truth, 3, rng)
        first = pool.take(2)
        second = pool.take(1)
        np.testing.assert_allclose(first.T @ second, 0.0, atol=1e-12)
        np.testing.assert_allclose(truth.columns.T @ first, 0.0, atol=1e-12)
        with pytest.raises(PoolExhausted):
            pool.take(1)


class TestNoise:
    def test_nine_db_variance(self):
        assert noise_variance(9.0, 10) == pytest.approx(1.2589, abs=5e-5)

    def test_no_noise_returns_input(self, rng):
        collection = random_collection(rng, 5, [1, 2])
        assert add_noise(collection, None, 2, rng) is collection
        assert add_noise(collection, math.inf, 2, rng) is collection

    def test_noisy_bases_are_orthonormal(self, rng):
        collection = random_collection(rng, 6, [2, 3])
        noisy = add_noise(collection, 0.0, 2, rng)
        for item, original in zip(noisy, collection):
            np.testing.assert_allclose(item.columns.T @ item.columns, np.eye(item.p), atol=1e-10)
            assert p2s_distance(original, item) > 0

    def test_noise_power_matches_snr(self, rng, monkeypatch):
        collection = random_collection(rng, 10, [3] * 400)
        perturbed = []
        original = data_gen.orthonormalize

        def recording(matrix):
            perturbed.append(np.array(matrix))
            return original(matrix)

        monkeypatch.setattr(data_gen, "orthonormalize", recording)
        add_noise(collection, 6.0, 3, rng)
        power = np.mean([np.sum((noisy - item.columns) ** 2) for noisy, item in zip(perturbed, collection)])
        assert power == pytest.approx(noise_variance(6.0, 3), rel=0.05)


class TestNestedBall:
    def test_membership(self):
        data = generate(_nested(M3=5))
        z1 = data.truth_center
        assert data.truth_k == 3
        assert len(data.collection) == 25
        for core, where in zip(data.cores, data.provenance):
            d = chordal_distance(z1, core)
            if where is Provenance.LARGE_BOUNDARY:
                assert d == pytest.approx(1.0, abs=1e-9)
            else:
                assert d <= 1.0 + 1e-9

    def test_deterministic(self):
        a = generate(_nested())
        b = generate(_nested())
        for x, y in zip(a.collection, b.collection):
            assert np.array_equal(x.columns, y.columns)

    def test_infeasible_radii(self):
        with pytest.raises(InfeasiblePlacement):
            generate(_nested(eps2=1.0))
        # 等维时可行区间为 (eps2, eps1 − eps2)
        with pytest.raises(InfeasiblePlacement):
            generate(_nested(eps2=0.5))

    @pytest.mark.parametrize("k1, k2", [(3, 2), (3, 3), (3, 5)])
    def test_small_center_sits_between_radii(self, rng, k1, k2):
        spec = _nested(n=12, k1=k1, k2=k2, eps1=1.0, eps2=0.25)
        z1 = random_basis(12, k1, rng)
        z2 = _small_center(spec, z1, rng, None)
        offset = 0.5 * (0.25 + 1.0 - 0.25 * min(1.0, k1 / k2))
        assert z2.p == k2
        assert p2s_distance(z1, z2) == pytest.approx(offset, abs=1e-9)
        assert 0.25 < offset < 1.0

    def test_small_center_avoids_pool(self, rng):
        spec = _nested(n=12, eps2=0.25)
        z1 = random_basis(12, 3, rng)
        pool = OrthogonalPool.build(z1, 4, rng).as_basis()
        z2 = _small_center(spec, z1, rng, pool)
        np.testing.assert_allclose(pool.columns.T @ z2.columns, 0.0, atol=1e-10)

    def test_small_ball_samples_stay_in_large_ball(self):
        data = generate(_nested(n=30, k0=10, k1=10, k2=15, eps1=1.0, eps2=0.5, M1=10, M2=10))
        small = [core for core, where in zip(data.cores, data.provenance) if where is Provenance.SMALL_BALL]
        assert len(small) == 10
        for core in small:
            assert core.p == 15
            assert p2s_distance(data.truth_center, core) <= 1.0 + 1e-9

    def test_interior_small_ball(self):
        data = generate(_nested(small_ball="interior"))
        assert data.provenance.count(Provenance.SMALL_BALL) == 6

    def test_orthogonal_completion_preserves_distances(self):
        data = generate(_nested(n=20, k0=2, eps1=0.8, eps2=0.1, M1=5, M2=3,
                                dims=[3], orthogonal_completion=True))
        for core, item in zip(data.cores, data.collection):
            assert item.p == 3
            assert p2s_distance(data.truth_center, item) == pytest.approx(
                chordal_distance(data.truth_center, core), abs=1e-9)

    def test_pool_too_small(self):
        with pytest.raises(PoolExhausted):
            generate(_nested(n=6, k0=2, eps1=0.8, eps2=0.1, M1=5, M2=0, dims=[4],
                             orthogonal_completion=True))

    def test_mixed_manifolds(self):
        data = generate(_nested(n=12, k1=3, k2=5, eps1=1.0, eps2=0.3, M1=6, M2=4))
        dims = [core.p for core in data.cores]
        assert dims == [3] * 6 + [5] * 4
        assert data.truth_k == 3

    def test_generate_dispatches_with_seeded_rng(self):
        spec = _nested(M2=2)
        direct = nested_ball_dataset(spec, np.random.default_rng(spec.seed))
        for x, y in zip(generate(spec).collection, direct.collection):
            assert np.array_equal(x.columns, y.columns)


class TestArc:
    def test_arc_dataset(self):
        spec = DatasetSpec(model="arc", n=10, k0=2, eps1=1.0, M1=6, M2=6, M3=6, dims=[2, 3, 4], seed=1)
        data = generate(spec)
        assert data.provenance.count(Provenance.ARC_BOUNDARY) == 6
        for core, where in zip(data.cores, data.provenance):
            if where is not Provenance.INTERIOR:
                assert chordal_distance(data.truth_center, core) == pytest.approx(1.0, abs=1e-9)
        assert set(data.collection.dims) <= {2, 3, 4}

    def test_explicit_rng_without_arc(self, rng):
        spec = DatasetSpec(model="arc", n=8, k0=2, eps1=0.5, M1=4, M2=0, M3=2)
        data = arc_dataset(spec, rng)
        assert data.provenance == [Provenance.LARGE_BOUNDARY] * 4 + [Provenance.INTERIOR] * 2
        assert data.spec == spec


class TestNoCommon:
    def test_random_collection(self, rng):
        data = no_common_dataset(12, 30, [3, 4, 5], rng)
        assert data.truth_k == 0
        assert data.truth_center is None
        assert set(data.collection.dims) <= {3, 4, 5}

    def test_invalid(self, rng):
        with pytest.raises(InvalidConfig):
            no_common_dataset(4, 10, [5], rng)
