import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fsketch.core import CategoricalVector
from fsketch.data_io import (
    DataFormatError, Dataset, SketchFile, SketchFormatError, cell_dtype, dataset_stats, decode_sketches,
    dump_native, encode_sketches, load_docword, load_native, load_sketches, sample_points, save_dataset,
    save_sketches, load_dataset,
)
from fsketch.synthetic import make_synthetic

ONE_DOC = b"1\n3\n1\n1 2 5\n"


def docword(text):
    return io.BytesIO(text.encode() if isinstance(text, str) else text)


class TestDocword:
    def test_single_document(self):
        ds = load_docword(docword(ONE_DOC))
        assert len(ds) == 1 and ds.n == 3
        assert ds[0].to_dict() == {1: 5}  # wordID 2 -> 0-based attribute 1
        assert dataset_stats(ds) == (3, 5, 1, 1)

    def test_empty_body(self):
        ds = load_docword(docword("2\n4\n0\n"))
        assert len(ds) == 2 and all(x.nnz == 0 for x in ds)

    def test_text_stream(self):
        assert len(load_docword(io.StringIO(ONE_DOC.decode()))) == 1

    @pytest.mark.parametrize("text, line", [
        ("1\n3\n2\n1 2 5\n1 2 4\n", 5),        # duplicate entry
        ("1\n3\n1\n2 2 5\n", 4),               # docID out of range
        ("1\n3\n1\n1 4 5\n", 4),               # wordID out of range
        ("1\n3\n1\n1 2 0\n", 4),               # non-positive count
        ("1\n3\n1\n1 2\n", 4),                 # missing field
        ("1\nx\n1\n1 2 3\n", 2),               # bad header
        ("1\n3\n2\n1 2 3\n", 3),               # NNZ mismatch
    ])
    def test_errors_carry_line_numbers(self, text, line):
        with pytest.raises(DataFormatError) as info:
            load_docword(docword(text))
        assert info.value.line == line

    def test_category_ceiling(self):
        with pytest.warns(UserWarning):
            ds = load_docword(docword("1\n3\n2\n1 1 9\n1 3 2\n"), category_ceiling=4)
        assert ds[0].to_dict() == {0: 4, 2: 2}

    def test_deterministic(self):
        text = "3\n5\n4\n3 1 2\n1 5 1\n1 2 7\n2 4 1\n"
        a, b = load_docword(docword(text)), load_docword(docword(text))
        assert a == b
        assert a[0].to_dict() == {1: 7, 4: 1}


class TestStats:
    def test_all_zero(self):
        ds = Dataset.from_vectors([CategoricalVector(7)])
        assert dataset_stats(ds) == (7, 0, 0, 1)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            dataset_stats(Dataset(3, [0], [], []))

    def test_permutation_invariant(self, rng):
        ds, _ = make_synthetic(30, 200, 12, 7, 1)
        perm = rng.permutation(len(ds))
        assert dataset_stats(ds.subset(perm)) == dataset_stats(ds)

    def test_sigma_attained(self):
        ds, _ = make_synthetic(30, 200, 12, 7, 1)
        nnz = ds.nnz_per_point
        assert ds.sigma == nnz.max() and np.all(nnz <= ds.sigma)

    def test_dataset_validation(self):
        with pytest.raises(ValueError):
            Dataset(3, [0, 2], [1, 1], [1, 1])
        with pytest.raises(ValueError):
            Dataset(3, [0, 1], [3], [1])
        with pytest.raises(ValueError):
            Dataset(3, [0, 1], [0], [5], category_bound=4)


class TestNative:
    def test_round_trip(self, tmp_path):
        ds, _ = make_synthetic(25, 100, 10, 9, 4)
        ds = Dataset.from_vectors(list(ds) + [CategoricalVector(100)], category_bound=9)
        path = tmp_path / "data.txt"
        save_dataset(path, ds)
        back = load_dataset(path)
        assert back == ds and back.category_count == 9

    def test_format(self):
        buf = io.StringIO()
        dump_native(Dataset.from_vectors([CategoricalVector.from_dense([0, 3, 1]), CategoricalVector(3)]), buf)
        assert buf.getvalue() == "3 3\n2:3 3:1\n\n"

    @pytest.mark.parametrize("text", ["3 3\n4:1\n", "3 3\n1:4\n", "3 3\n1:1 1:2\n", "3 3\nfoo\n", "x\n"])
    def test_errors(self, text):
        with pytest.raises(DataFormatError):
            load_native(io.StringIO(text))


def test_sampling_is_seeded():
    ds, _ = make_synthetic(100, 100, 5, 3, 0)
    a, b = sample_points(ds, 10, 7), sample_points(ds, 10, 7)
    assert a == b and len(a) == 10
    assert sample_points(ds, 10, 8) != a


class TestSketchFile:
    @pytest.mark.parametrize("p, width", [(2, 1), (43, 1), (257, 2), (65537, 4), (2**31 - 1, 4)])
    def test_cell_width(self, p, width):
        assert cell_dtype(p).itemsize == width

    def test_round_trip(self, tmp_path, rng):
        cells = rng.integers(0, 43, size=(1000, 1, 64)).astype(np.uint32)
        sf = SketchFile(5000, 64, 43, 2**64 - 1, 100, cells)
        save_sketches(tmp_path / "s.fsk", sf)
        assert load_sketches(tmp_path / "s.fsk") == sf

    def test_median_rows_round_trip(self, rng):
        sf = SketchFile(10, 8, 65537, 3, 4, rng.integers(0, 65537, size=(5, 3, 8)).astype(np.uint32))
        assert decode_sketches(encode_sketches(sf)) == sf

    def test_empty_collection(self):
        sf = SketchFile(10, 8, 43, 0, 0, np.zeros((0, 1, 8), dtype=np.uint32))
        data = encode_sketches(sf)
        assert len(data) == 60
        assert decode_sketches(data).count == 0

    def test_layout(self):
        sf = SketchFile(4, 2, 5, 9, 3, np.array([[[0, 2]]], dtype=np.uint32))
        data = encode_sketches(sf)
        assert data[:4] == b"FSK1"
        assert data[4:12] == (4).to_bytes(8, "little")
        assert data[-2:] == bytes([0, 2])

    @pytest.mark.parametrize("mutate", [
        lambda b: b"FSK2" + b[4:],
        lambda b: b[:-1],
        lambda b: b[:20],
        lambda b: b + b"\0",
        lambda b: b[:4] + (0).to_bytes(8, "little") + b[12:],
    ])
    def test_corruption_detected(self, mutate, rng):
        sf = SketchFile(100, 16, 43, 1, 5, rng.integers(0, 43, size=(10, 1, 16)).astype(np.uint32))
        with pytest.raises(SketchFormatError):
            decode_sketches(mutate(encode_sketches(sf)))

    def test_cells_beyond_p_rejected(self):
        data = bytearray(encode_sketches(SketchFile(4, 2, 5, 9, 3, np.array([[[0, 2]]], dtype=np.uint32))))
        data[-1] = 7
        with pytest.raises(SketchFormatError):
            decode_sketches(bytes(data))

    def test_failed_save_leaves_no_file(self, tmp_path):
        bad = SketchFile(4, 2, 5, 9, 3, np.array([[[0, 9]]], dtype=np.uint32))
        with pytest.raises(ValueError):
            save_sketches(tmp_path / "bad.fsk", bad)
        assert list(tmp_path.iterdir()) == []

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 20), st.integers(1, 10), st.integers(1, 3), st.sampled_from([2, 251, 257, 70001]),
           st.integers(0, 2**64 - 1))
    def test_round_trip_property(self, count, d, k, p, seed):
        cells = np.random.default_rng(seed).integers(0, p, size=(count, k, d)).astype(np.uint32)
        sf = SketchFile(50, d, p, seed, 7, cells)
        assert decode_sketches(encode_sketches(sf)) == sf
