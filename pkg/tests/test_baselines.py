import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fsketch.baselines import (
    BinaryVector, feature_hash_rows, feature_hash_sketch, ohe_binary_bucket_sketch, ohe_distance_bounds,
    one_hot_encode, simhash_sketch,
)
from fsketch.core import CategoricalVector
from fsketch.synthetic import make_synthetic, random_sparse_vector

vectors = st.integers(1, 12).flatmap(
    lambda n: st.lists(st.integers(0, 4), min_size=n, max_size=n).map(CategoricalVector.from_dense))


class TestOneHot:
    def test_zero(self):
        out = one_hot_encode(CategoricalVector(4), 3)
        assert out.dim == 12 and out.nnz == 0

    def test_hand_example(self):
        # x = (2, 0), c = 3: block 1 sets its second bit, block 2 is empty.
        out = one_hot_encode(CategoricalVector.from_dense([2, 0]), 3)
        assert out.dim == 6 and out.set_bits.tolist() == [1]

    def test_value_above_c(self):
        with pytest.raises(ValueError):
            one_hot_encode(CategoricalVector.from_dense([4]), 3)

    def test_sparsity_preserved(self, rng):
        for _ in range(1000):
            x = CategoricalVector.from_dense(rng.integers(0, 6, 30) * (rng.random(30) < 0.3))
            assert one_hot_encode(x, 5).nnz == x.nnz

    @pytest.mark.parametrize("x, y, expected", [([1], [1], (0, 0)), ([1], [2], (1, 2)), ([1], [0], (1, 1))])
    def test_distance_examples(self, x, y, expected):
        assert ohe_distance_bounds(CategoricalVector.from_dense(x), CategoricalVector.from_dense(y), 2) == expected

    @settings(max_examples=300, deadline=None)
    @given(st.data())
    def test_sandwich(self, data):
        n = data.draw(st.integers(1, 12))
        pair = st.lists(st.integers(0, 4), min_size=n, max_size=n).map(CategoricalVector.from_dense)
        x, y = data.draw(pair), data.draw(pair)
        hd, hd_ohe = ohe_distance_bounds(x, y, 4)
        assert hd <= hd_ohe <= 2 * hd
        assert hd == int(np.sum(x.to_dense() != y.to_dense()))


class TestFeatureHashing:
    def test_zero(self):
        assert not feature_hash_sketch(CategoricalVector(30), 8, 1).cells.any()

    def test_single_entry(self):
        s = feature_hash_sketch(CategoricalVector.from_dict(30, {7: 5}), 8, 1)
        assert np.count_nonzero(s.cells) == 1 and abs(s.cells.sum()) == 5

    def test_deterministic(self, rng):
        x = random_sparse_vector(100, 20, 9, rng)
        assert feature_hash_sketch(x, 16, 3) == feature_hash_sketch(x, 16, 3)
        assert feature_hash_sketch(x, 16, 3) != feature_hash_sketch(x, 16, 4)

    def test_linearity_against_direct_sum(self, rng):
        n, d, seed = 40, 7, 5
        # Bucket and sign of each attribute, read back from one-hot probes.
        probes = [feature_hash_sketch(CategoricalVector.from_dict(n, {i: 1}), d, seed).cells for i in range(n)]
        for _ in range(50):
            a = rng.integers(0, 5, n) * (rng.random(n) < 0.4)
            b = rng.integers(0, 5, n) * (rng.random(n) < 0.4)
            sa = feature_hash_sketch(CategoricalVector.from_dense(a), d, seed).cells
            sb = feature_hash_sketch(CategoricalVector.from_dense(b), d, seed).cells
            direct = sum(int(a[i] - b[i]) * probes[i] for i in range(n))
            assert np.array_equal(sa - sb, direct)

    def test_rows_match_single(self, rng):
        ds, _ = make_synthetic(10, 200, 15, 6, 0)
        rows = feature_hash_rows(*ds.csr(), 16, 2)
        for k, x in enumerate(ds):
            assert np.array_equal(rows[k], feature_hash_sketch(x, 16, 2).cells)


class TestSimHash:
    def test_zero(self):
        assert not simhash_sketch(CategoricalVector(30), 64, 1).cells.any()

    def test_deterministic(self, rng):
        x = random_sparse_vector(100, 20, 9, rng)
        assert simhash_sketch(x, 64, 3) == simhash_sketch(x, 64, 3)

    def test_agreement_tracks_angle(self, rng):
        n, planes = 2000, 10_000
        for _ in range(3):
            x = random_sparse_vector(n, 300, 20, rng)
            y = x.with_value(int(x.indices[0]), 0)
            for i in rng.choice(n, 150, replace=False):
                y = y.with_value(int(i), int(rng.integers(1, 21)))
            a, b = x.to_dense().astype(float), y.to_dense().astype(float)
            angle = math.acos(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
            agree = np.mean(simhash_sketch(x, planes, 9).cells == simhash_sketch(y, planes, 9).cells)
            assert abs(agree - (1 - angle / math.pi)) < 0.02


class TestOheProxy:
    def test_zero(self):
        assert ohe_binary_bucket_sketch(CategoricalVector(10), 3, 16, 0).nnz == 0

    def test_single_bit(self):
        assert ohe_binary_bucket_sketch(CategoricalVector.from_dict(10, {4: 2}), 3, 16, 0).nnz == 1

    @settings(max_examples=100, deadline=None)
    @given(vectors, st.integers(1, 20), st.integers(0, 2**32))
    def test_nnz_ceiling(self, x, d, seed):
        assert ohe_binary_bucket_sketch(x, 4, d, seed).nnz <= min(d, x.nnz)

    def test_deterministic(self, rng):
        x = random_sparse_vector(100, 20, 9, rng)
        assert ohe_binary_bucket_sketch(x, 9, 32, 1) == ohe_binary_bucket_sketch(x, 9, 32, 1)

    def test_binary_vector_validation(self):
        with pytest.raises(ValueError):
            BinaryVector(4, [4])
