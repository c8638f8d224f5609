"""Synthetic labelled benchmarks for the outlier experiment."""

from __future__ import annotations

import numpy as np

from .io import NORMAL, OUTLIER, Dataset


def separable_benchmark(n_normal=400, n_outlier=200, seed=0) -> Dataset:
    """Normals uniform on the unit disk, outliers uniform on the annulus 3 <= |x| <= 4."""
    rng = np.random.default_rng(seed)
    ang = rng.uniform(0, 2 * np.pi, n_normal + n_outlier)
    rad = np.concatenate([np.sqrt(rng.uniform(0, 1, n_normal)),
                          np.sqrt(rng.uniform(9, 16, n_outlier))])
    pts = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
    labels = np.r_[np.full(n_normal, NORMAL), np.full(n_outlier, OUTLIER)]
    return Dataset(pts, labels)


def thyroid_surrogate(n=3772, p=6, outlier_fraction=0.025, seed=0) -> Dataset:
    """Skewed, correlated 'hormone level' table with a small malfunctioning class.

    Normals are log-normal with a random correlation; outliers shift the
    log-mean of three coordinates by 1.5 to 3 standard deviations in random
    directions, so they overlap the normal cloud only partially.
    """
    rng = np.random.default_rng(seed)
    n_out = int(round(outlier_fraction * n))
    n_norm = n - n_out
    a = rng.normal(size=(p, p))
    cov = a @ a.T / p + 0.5 * np.eye(p)
    sd = np.sqrt(np.diag(cov))
    cov /= np.outer(sd, sd)
    chol = np.linalg.cholesky(cov)
    normal = rng.normal(size=(n_norm, p)) @ chol.T
    shift = np.zeros((n_out, p))
    cols = rng.choice(p, size=3, replace=False)
    shift[:, cols] = rng.choice([-1, 1], size=(n_out, 3)) * rng.uniform(1.5, 3.0, size=(n_out, 3))
    outl = rng.normal(size=(n_out, p)) @ chol.T + shift
    pts = np.exp(0.5 * np.vstack([normal, outl]))
    labels = np.r_[np.full(n_norm, NORMAL), np.full(n_out, OUTLIER)]
    order = rng.permutation(n)
    return Dataset(pts[order], labels[order])


def outlier_split(data: Dataset, seed):
    """Training set of normals and a test set with equally many outliers and normals."""
    if data.labels is None:
        raise ValueError("the outlier benchmark needs labelled data")
    rng = np.random.default_rng(seed)
    out_idx = np.flatnonzero(data.labels == OUTLIER)
    norm_idx = rng.permutation(np.flatnonzero(data.labels == NORMAL))
    k = min(out_idx.size, norm_idx.size // 2)
    if k == 0:
        raise ValueError("need at least one outlier and two normals")
    out_idx = np.sort(rng.permutation(out_idx)[:k])
    test = np.sort(np.r_[out_idx, norm_idx[:k]])
    train = np.sort(norm_idx[k:])
    return data.subset(train), data.subset(test)
