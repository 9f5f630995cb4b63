"""Shared fixtures: the reference tumor dataset and small synthetic data."""

from __future__ import annotations

import numpy as np
import pytest

from symlattice import Dataset, NUMERICAL, SplitSpec, load_csv, stratified_split


@pytest.fixture(scope="session")
def bc_csv_path(tmp_path_factory):
    """Breast-cancer diagnostic table exported to CSV (30 features + target)."""
    from sklearn.datasets import load_breast_cancer

    bunch = load_breast_cancer()
    path = tmp_path_factory.mktemp("data") / "breast_cancer.csv"
    names = [str(n) for n in bunch.feature_names] + ["target"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(names) + "\n")
        for row, label in zip(bunch.data, bunch.target):
            fh.write(",".join(repr(float(v)) for v in row) + f",{int(label)}\n")
    return path


@pytest.fixture(scope="session")
def bc_dataset(bc_csv_path) -> Dataset:
    return load_csv(bc_csv_path)


@pytest.fixture(scope="session")
def bc_splits(bc_dataset):
    """Deterministic stratified 0.6/0.2/0.2 split of the tumor table."""
    spec = SplitSpec(fractions=(0.6, 0.2, 0.2), stratify_by="target", seed=42)
    return stratified_split(bc_dataset, spec)


def make_regression_data(seed: int, n: int, noise: float = 0.01, features: int = 5) -> Dataset:
    """y = x0 * x1 + noise, with the remaining features pure decoys."""
    rng = np.random.default_rng(seed)
    cols = {f"x{i}": rng.normal(0.0, 1.0, n) for i in range(features)}
    cols["y"] = cols["x0"] * cols["x1"] + rng.normal(0.0, noise, n)
    names = tuple((c, NUMERICAL) for c in cols)
    return Dataset(names, cols)


@pytest.fixture
def toy_regression() -> Dataset:
    return make_regression_data(seed=0, n=200)


@pytest.fixture
def toy_classification() -> Dataset:
    rng = np.random.default_rng(1)
    n = 160
    a = rng.normal(0.0, 1.0, n)
    b = rng.normal(0.0, 1.0, n)
    y = (a + 2.0 * b > 0).astype(float)
    return Dataset(
        (("a", NUMERICAL), ("b", NUMERICAL), ("target", NUMERICAL)),
        {"a": a, "b": b, "target": y},
    )
