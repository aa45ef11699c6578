"""Framingham-shaped synthetic data for demos and tests.

Group sizes and the sex split match the published counts; feature
distributions are rough Gaussian approximations of the Kaggle extract
(cigarettes per day is clipped at zero). Nothing here reproduces the
published numbers; it only exercises the pipeline at the right scale.
"""

from __future__ import annotations

import csv
import os

import numpy as np

from .dataset import KAGGLE_COLUMNS, Dataset, FEATURE_KEYS

# age, totChol, sysBP, diaBP, BMI, heartRate, cigsPerDay
_MEANS = {
    1: np.array([54.1, 245.0, 143.6, 86.9, 26.5, 76.5, 10.6]),
    0: np.array([48.7, 235.0, 130.3, 82.2, 25.7, 75.7, 8.7]),
}
_SDS = {
    1: np.array([8.0, 48.0, 26.6, 14.2, 4.5, 12.2, 13.0]),
    0: np.array([8.4, 43.0, 20.5, 11.5, 4.0, 11.9, 11.7]),
}
_CORR = np.array([
    [1.00, 0.26, 0.39, 0.21, 0.14, -0.01, -0.19],
    [0.26, 1.00, 0.21, 0.17, 0.12, 0.09, -0.03],
    [0.39, 0.21, 1.00, 0.78, 0.33, 0.18, -0.09],
    [0.21, 0.17, 0.78, 1.00, 0.38, 0.18, -0.06],
    [0.14, 0.12, 0.33, 0.38, 1.00, 0.07, -0.09],
    [-0.01, 0.09, 0.18, 0.18, 0.07, 1.00, 0.06],
    [-0.19, -0.03, -0.09, -0.06, -0.09, 0.06, 1.00],
])

PUBLISHED_COUNTS = {("male", 1): 337, ("female", 1): 285, ("male", 0): 1456, ("female", 0): 2064}


def framingham_like(seed: int = 0, counts: dict[tuple[str, int], int] | None = None) -> Dataset:
    rng = np.random.default_rng(seed)
    counts = counts or PUBLISHED_COUNTS
    blocks, labels, sexes = [], [], []
    for (sex, label), n in counts.items():
        cov = _CORR * np.outer(_SDS[label], _SDS[label])
        x = rng.multivariate_normal(_MEANS[label], cov, size=n)
        x[:, 6] = np.maximum(0.0, np.round(x[:, 6]))
        x[:, :6] = np.round(x[:, :6], 1)
        blocks.append(x)
        labels.append(np.full(n, label))
        sexes.extend([sex] * n)
    X = np.vstack(blocks)
    y = np.concatenate(labels)
    order = rng.permutation(len(y))
    return Dataset(X[order], y[order], tuple(sexes[i] for i in order), source=f"synthetic:{seed}")


def write_csv(d: Dataset, path: str | os.PathLike) -> None:
    """Write in the Kaggle column layout (sex as the 0/1 ``male`` column)."""
    header = [KAGGLE_COLUMNS["sex"], *(KAGGLE_COLUMNS[k] for k in FEATURE_KEYS), KAGGLE_COLUMNS["chd"]]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row, label, sex in zip(d.X, d.y, d.sex):
            flag = "" if sex is None else int(sex == "male")
            w.writerow([flag, *(f"{v:g}" for v in row), int(label)])
