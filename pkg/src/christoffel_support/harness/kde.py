"""Kernel density baseline scores."""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial.distance import cdist

CHUNK = 2048


def kde_score(train, x, kernel: str = "gaussian", h: float = 1.0):
    """(1/n) sum_i K_h(x - X_i) for one point or an (m, p) batch.

    gaussian: K_h(u) = (2 pi h^2)^{-p/2} exp(-|u|_2^2 / (2 h^2))
    laplace:  K_h(u) = (2 h)^{-p} exp(-|u|_1 / h)
    """
    if not h > 0:
        raise ValueError("bandwidth h must be > 0")
    pts = getattr(train, "points", train)
    pts = np.asarray(pts, dtype=float)
    pts = pts[:, None] if pts.ndim == 1 else pts
    n, p = pts.shape
    q = np.asarray(x, dtype=float)
    single = q.ndim == 0 or (q.ndim == 1 and p > 1) or (q.ndim == 1 and q.size == 1 and p == 1)
    q = q.reshape(-1, p)
    out = np.empty(q.shape[0])
    if kernel == "gaussian":
        norm, metric = (2 * math.pi * h * h) ** (-p / 2), "sqeuclidean"
    elif kernel == "laplace":
        norm, metric = (2 * h) ** (-p), "cityblock"
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    for start in range(0, q.shape[0], CHUNK):
        dist = cdist(q[start:start + CHUNK], pts, metric)
        arg = dist / (2 * h * h) if kernel == "gaussian" else dist / h
        out[start:start + CHUNK] = np.exp(-arg).mean(axis=1) * norm
    return float(out[0]) if single else out
