"""Data layer: CSV parsing, exact numeric round-trips, deterministic
stratified splits, training statistics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symlattice import (
    Dataset,
    InputStats,
    ParseError,
    SplitSpec,
    compute_stats,
    load_csv,
    loads_csv,
    stratified_split,
)


class TestLoadsCsv:
    def test_type_inference(self):
        ds = loads_csv("a,b,c\n1.5,x,3\n2.5,y,4\n")
        assert ds.columns == (("a", "numerical"), ("b", "categorical"), ("c", "numerical"))
        assert ds.column("a").tolist() == [1.5, 2.5]
        assert ds.column("b").tolist() == ["x", "y"]

    def test_single_non_numeric_cell_flips_column(self):
        ds = loads_csv("a\n1\n2\nhigh\n")
        assert ds.stype("a") == "categorical"
        assert ds.column("a").tolist() == ["1", "2", "high"]

    def test_quoted_commas_and_utf8(self):
        ds = loads_csv('name,v\n"Ostergaard, Anna",1\nMüller,2\n')
        assert ds.column("name").tolist() == ["Ostergaard, Anna", "Müller"]

    def test_empty_cells_are_missing(self):
        ds = loads_csv("a,b\n1,\n,x\n")
        a = ds.column("a")
        assert a[0] == 1.0 and math.isnan(a[1])
        assert ds.column("b").tolist() == [None, "x"]

    def test_non_finite_numbers_count_as_missing(self):
        ds = loads_csv("a\n1\ninf\nnan\n")
        vals = ds.column("a")
        assert vals[0] == 1.0
        assert math.isnan(vals[1]) and math.isnan(vals[2])
        assert ds.stype("a") == "numerical"

    def test_header_required(self):
        with pytest.raises(ParseError, match="header"):
            loads_csv("")
        with pytest.raises(ParseError, match="header"):
            loads_csv(",,\n1,2,3\n")

    def test_duplicate_column(self):
        with pytest.raises(ParseError, match="duplicate column"):
            loads_csv("a,a\n1,2\n")

    def test_ragged_row_reports_line(self):
        with pytest.raises(ParseError, match="line 3"):
            loads_csv("a,b\n1,2\n3\n")

    def test_blank_lines_skipped(self):
        ds = loads_csv("a\n1\n\n2\n")
        assert ds.column("a").tolist() == [1.0, 2.0]

    def test_overrides(self):
        ds = loads_csv("zip,y\n02134,1\n90210,0\n", {"zip": "categorical"})
        assert ds.column("zip").tolist() == ["02134", "90210"]
        with pytest.raises(ParseError, match="unknown column"):
            loads_csv("a\n1\n", {"b": "categorical"})
        with pytest.raises(ParseError, match="unknown stype"):
            loads_csv("a\n1\n", {"a": "ordinal"})
        with pytest.raises(ParseError, match="numerical but got"):
            loads_csv("a\n1\nhigh\n", {"a": "numerical"})


class TestRoundTrip:
    def test_tricky_floats_survive_exactly(self, tmp_path):
        vals = [0.1, 1.0 / 3.0, -2.5e17, 1e-300, 6.02214076e23, -0.0, 123456789.123456789]
        ds = Dataset.from_columns({"v": vals})
        p = tmp_path / "t.csv"
        ds.write_csv(p)
        back = load_csv(p)
        assert back.column("v").tolist() == vals

    @settings(max_examples=200, deadline=None)
    @given(st.floats(allow_nan=False, allow_infinity=False, width=64))
    def test_any_finite_float_survives(self, v):
        ds = loads_csv(f"v\n{v!r}\n")
        assert ds.column("v")[0] == v

    def test_missing_and_categorical_round_trip(self, tmp_path):
        ds = Dataset.from_columns(
            {"n": [1.5, None], "c": ["a, b", None]}, {"c": "categorical"}
        )
        p = tmp_path / "t.csv"
        ds.write_csv(p)
        back = load_csv(p)
        n = back.column("n")
        assert n[0] == 1.5 and math.isnan(n[1])
        assert back.column("c").tolist() == ["a, b", None]


class TestDataset:
    def test_ragged_columns_rejected(self):
        with pytest.raises(ValueError, match="ragged"):
            Dataset.from_columns({"a": [1, 2], "b": [1]})

    def test_row_and_subset(self):
        ds = Dataset.from_columns({"a": [1.0, 2.0, 3.0], "c": ["x", "y", "z"]})
        assert ds.row(1) == {"a": 2.0, "c": "y"}
        sub = ds.subset([2, 0])
        assert sub.column("a").tolist() == [3.0, 1.0]
        assert sub.column("c").tolist() == ["z", "x"]

    def test_unknown_column(self):
        ds = Dataset.from_columns({"a": [1.0]})
        with pytest.raises(KeyError):
            ds.column("b")
        with pytest.raises(KeyError):
            ds.stype("b")

    def test_manifest_digest_tracks_content(self):
        a = Dataset.from_columns({"a": [1.0, 2.0]})
        b = Dataset.from_columns({"a": [1.0, 2.0]})
        c = Dataset.from_columns({"a": [1.0, 2.5]})
        assert a.manifest() == b.manifest()
        assert a.manifest()["digest"] != c.manifest()["digest"]
        assert a.manifest()["rows"] == 2

    def test_json_round_trip(self):
        ds = Dataset.from_columns(
            {"n": [1.5, None], "c": ["x", None]}, {"c": "categorical"}
        )
        back = Dataset.from_json(ds.to_json())
        assert back.columns == ds.columns
        assert math.isnan(back.column("n")[1])
        assert back.column("c").tolist() == ["x", None]


class TestSplitSpec:
    def test_validation(self):
        with pytest.raises(ValueError, match="sum to 1"):
            SplitSpec((0.5, 0.2, 0.2))
        with pytest.raises(ValueError, match="nonnegative"):
            SplitSpec((1.2, -0.1, -0.1))
        with pytest.raises(ValueError, match="train fraction"):
            SplitSpec((0.0, 0.5, 0.5))
        with pytest.raises(ValueError, match="train, validation, holdout"):
            SplitSpec((0.5, 0.5))


def with_row_ids(n, labels=None, seed=0):
    rng = np.random.default_rng(seed)
    cols = {"rid": np.arange(n, dtype=float), "x": rng.normal(size=n)}
    if labels is not None:
        cols["y"] = labels
    return Dataset.from_columns(cols)


class TestStratifiedSplit:
    def test_sizes_match_largest_remainder(self):
        # 569 rows at 60/20/20: exact parts 341.4/113.8/113.8 -> 341/114/114
        labels = np.array([0.0] * 212 + [1.0] * 357)
        ds = with_row_ids(569, labels)
        tr, va, ho = stratified_split(ds, SplitSpec(stratify_by="y", seed=42))
        assert (tr.n, va.n, ho.n) == (341, 114, 114)

    def test_partition_is_exact(self):
        labels = (np.arange(200) % 2).astype(float)
        ds = with_row_ids(200, labels)
        tr, va, ho = stratified_split(ds, SplitSpec(stratify_by="y", seed=1))
        ids = np.concatenate([tr.column("rid"), va.column("rid"), ho.column("rid")])
        assert sorted(ids.tolist()) == list(range(200))

    def test_every_stratum_cell_within_one_of_exact(self):
        rng = np.random.default_rng(5)
        labels = (rng.random(237) < 0.3).astype(float)
        ds = with_row_ids(237, labels)
        spec = SplitSpec((0.6, 0.2, 0.2), stratify_by="y", seed=3)
        parts = stratified_split(ds, spec)
        for label in (0.0, 1.0):
            m = int(np.sum(labels == label))
            for frac, part in zip(spec.fractions, parts):
                got = int(np.sum(part.column("y") == label))
                assert abs(got - m * frac) < 1.0 + 1e-9

    def test_deterministic(self):
        labels = (np.arange(101) % 2).astype(float)
        ds = with_row_ids(101, labels)
        spec = SplitSpec(stratify_by="y", seed=9)
        a = stratified_split(ds, spec)
        b = stratified_split(ds, spec)
        for pa, pb in zip(a, b):
            assert pa.column("rid").tolist() == pb.column("rid").tolist()

    def test_seed_changes_assignment(self):
        labels = (np.arange(100) % 2).astype(float)
        ds = with_row_ids(100, labels)
        a = stratified_split(ds, SplitSpec(stratify_by="y", seed=0))
        b = stratified_split(ds, SplitSpec(stratify_by="y", seed=1))
        assert a[0].column("rid").tolist() != b[0].column("rid").tolist()

    def test_unstratified_split(self):
        ds = with_row_ids(10)
        tr, va, ho = stratified_split(ds, SplitSpec((0.8, 0.1, 0.1), seed=0))
        assert (tr.n, va.n, ho.n) == (8, 1, 1)

    def test_categorical_stratification(self):
        n = 90
        cats = np.asarray(["a", "b", "c"] * 30, dtype=object)
        ds = Dataset.from_columns(
            {"rid": np.arange(n, dtype=float), "g": cats}, {"g": "categorical"}
        )
        tr, va, ho = stratified_split(ds, SplitSpec(stratify_by="g", seed=2))
        for part, frac in zip((tr, va, ho), (0.6, 0.2, 0.2)):
            col = part.column("g").tolist()
            for c in "abc":
                assert col.count(c) == round(30 * frac)

    def test_many_valued_numeric_stratifier_rejected(self):
        ds = with_row_ids(30, np.arange(30, dtype=float))
        with pytest.raises(ValueError, match="distinct values"):
            stratified_split(ds, SplitSpec(stratify_by="y"))

    def test_small_stratum_rejected(self):
        labels = np.array([0.0] * 28 + [1.0] * 2)
        ds = with_row_ids(30, labels)
        with pytest.raises(ValueError, match="need at least"):
            stratified_split(ds, SplitSpec(stratify_by="y"))

    def test_empty_dataset_rejected(self):
        ds = Dataset.from_columns({"a": []})
        with pytest.raises(ValueError, match="empty"):
            stratified_split(ds, SplitSpec())

    @settings(max_examples=30, deadline=None)
    @given(
        n=st.integers(30, 400),
        p=st.floats(0.2, 0.8),
        seed=st.integers(0, 1000),
    )
    def test_property_sizes_and_partition(self, n, p, seed):
        rng = np.random.default_rng(seed)
        labels = (rng.random(n) < p).astype(float)
        if min(np.sum(labels == 0), np.sum(labels == 1)) < 3:
            return
        ds = with_row_ids(n, labels, seed=seed)
        spec = SplitSpec((0.6, 0.2, 0.2), stratify_by="y", seed=seed)
        tr, va, ho = stratified_split(ds, spec)
        assert tr.n + va.n + ho.n == n
        got = sorted(
            np.concatenate(
                [tr.column("rid"), va.column("rid"), ho.column("rid")]
            ).tolist()
        )
        assert got == list(range(n))
        # global sizes also follow largest remainder
        exact = [n * f for f in spec.fractions]
        for size, e in zip((tr.n, va.n, ho.n), exact):
            assert abs(size - e) < 1.0 + 1e-9


class TestComputeStats:
    def test_numeric_summary_matches_numpy(self):
        rng = np.random.default_rng(3)
        vals = rng.normal(2.0, 1.5, 100)
        ds = Dataset.from_columns({"x": vals})
        s = compute_stats(ds)
        assert s.numerical["x"]["min"] == float(np.min(vals))
        assert s.numerical["x"]["max"] == float(np.max(vals))
        assert s.numerical["x"]["mean"] == pytest.approx(float(np.mean(vals)))
        assert s.numerical["x"]["std"] == pytest.approx(float(np.std(vals)))

    def test_missing_values_excluded(self):
        ds = Dataset.from_columns({"x": [1.0, None, 3.0]})
        s = compute_stats(ds)
        assert s.numerical["x"]["min"] == 1.0
        assert s.numerical["x"]["max"] == 3.0
        assert s.numerical["x"]["mean"] == 2.0

    def test_categorical_counts_sorted(self):
        ds = Dataset.from_columns(
            {"c": ["b", "a", "b", None, "a", "b"]}, {"c": "categorical"}
        )
        s = compute_stats(ds)
        assert list(s.categorical["c"]) == ["a", "b"]
        assert s.categorical["c"] == {"a": 2, "b": 3}

    def test_all_missing_column_rejected(self):
        ds = Dataset.from_columns({"x": [None, None]})
        with pytest.raises(ValueError, match="no observed values"):
            compute_stats(ds)

    def test_json(self):
        ds = Dataset.from_columns({"x": [1.0, 2.0], "c": ["u", "v"]}, {"c": "categorical"})
        payload = compute_stats(ds).to_json()
        assert set(payload) == {"numerical", "categorical"}
        assert payload["numerical"]["x"]["min"] == 1.0
