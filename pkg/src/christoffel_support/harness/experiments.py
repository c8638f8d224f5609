"""Experiment drivers: support recovery on shapes, concentration, outlier ranking.

Every driver returns a :class:`RunReport` that embeds its configuration and
the package version.  Replicate seeds are derived from (base seed, n,
replicate index) with :class:`numpy.random.SeedSequence`, so a replicate
draws the same points no matter which other replicates run or in which order.
"""

from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from ..christoffel import christoffel, fit
from ..errors import RankDeficientWarning
from ..geometry import (
    boundary_cells,
    contour_polylines,
    hausdorff_distance,
    make_shape,
    rasterize,
    sample_shape,
    symdiff_measure,
    write_polylines_csv,
    write_raster_text,
)
from ..oracles import (
    BallJacobiMeasure,
    analytic_orthonormal_transform,
    ball_grid,
    concentration_bound,
    empirical_in_orthobasis,
    gegenbauer_boundary_kernel,
    technical_gap,
)
from ..polybasis import basis_size, enumerate_basis, eval_monomials
from ..thresholding import (
    SchemeParams,
    SupportEstimate,
    practical_degree,
    select_scheme,
)
from .datasets import outlier_split
from .io import OUTLIER, Dataset
from .kde import kde_score

KINDS = ("synthetic", "convergence", "concentration", "outlier")
DEGREE_RULES = ("practical", "theoretical", "fixed")
THRESHOLD_RULES = ("min-score", "theoretical")


def version_tag() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def replicate_seed(base: int, n: int, k: int) -> int:
    return int(np.random.SeedSequence([int(base), int(n), int(k)]).generate_state(1)[0])


@dataclass
class ExperimentConfig:
    """Validated description of one run; serialized into every report."""

    kind: str = "convergence"
    shape: str = "disk"
    p: int = 2
    input: Optional[str] = None
    n_grid: tuple = (500, 2000, 8000, 32000)
    seeds: int = 5
    base_seed: int = 0
    degree_rule: str = "practical"
    degree: Optional[int] = None
    threshold_rule: str = "min-score"
    resolution: int = 1024
    coarse_factor: int = 4
    r: float = 0.0
    eps: float = 0.5
    alpha: float = 0.05
    output_dir: Optional[str] = None
    timing: bool = True

    def validate(self) -> "ExperimentConfig":
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.degree_rule not in DEGREE_RULES:
            raise ValueError(f"degree rule must be one of {DEGREE_RULES}")
        if self.threshold_rule not in THRESHOLD_RULES:
            raise ValueError(f"threshold rule must be one of {THRESHOLD_RULES}")
        if self.degree_rule == "fixed" and (self.degree is None or self.degree < 0):
            raise ValueError("the fixed degree rule needs degree >= 0")
        if self.threshold_rule == "theoretical" and self.degree_rule != "theoretical":
            raise ValueError("the theoretical threshold goes with the theoretical degree rule")
        self.n_grid = tuple(sorted(int(n) for n in self.n_grid))
        if not self.n_grid or self.n_grid[0] < 1:
            raise ValueError("n grid must hold positive sample sizes")
        if self.seeds < 1:
            raise ValueError("need at least one seed")
        if self.resolution < 2:
            raise ValueError("resolution must be >= 2")
        if not 0 < self.eps < 1 or not 0 < self.alpha < 1:
            raise ValueError("eps and alpha must lie in (0, 1)")
        if self.r < 0:
            raise ValueError("r must be >= 0")
        return self

    def to_dict(self):
        d = asdict(self)
        d["n_grid"] = list(self.n_grid)
        return d


@dataclass
class RunReport:
    kind: str
    config: dict
    rows: list
    slopes: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    version: str = field(default_factory=version_tag)

    def to_dict(self):
        return {"kind": self.kind, "version": self.version, "config": self.config,
                "rows": self.rows, "slopes": self.slopes, "summary": self.summary}

    def to_json(self) -> str:
        return json.dumps(_plain(self.to_dict()), indent=2, sort_keys=True, allow_nan=False)

    def write(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")


def _plain(obj):
    """Convert numpy scalars/arrays so the report is plain JSON."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def loglog_slope(ns, values) -> Optional[float]:
    """Least-squares slope of log(value) against log(n); None if any value <= 0."""
    v = np.asarray(values, dtype=float)
    if v.size < 2 or np.any(v <= 0) or not np.all(np.isfinite(v)):
        return None
    return float(np.polyfit(np.log(np.asarray(ns, dtype=float)), np.log(v), 1)[0])


# -- support recovery on reference shapes ----------------------------------

def _scheme_params(shape, config):
    C = shape.density_constant(config.r)
    if C is None:
        raise ValueError(f"no analytic density constant for this shape at r = {config.r}")
    return SchemeParams(p=shape.dimension, r=config.r, C=C, R=shape.rolling_radius,
                        eps=config.eps, alpha=config.alpha, diam=shape.diam)


def _one_replicate(shape, truth, box, n, seed, config, scheme):
    x = sample_shape(shape, n, r=config.r, seed=seed)
    applicable = None
    if config.degree_rule == "fixed":
        d = config.degree
    elif config.degree_rule == "theoretical" and not scheme.below_theory:
        d, applicable = scheme.d_n, True
    else:
        d = practical_degree(n)
        applicable = False if config.degree_rule == "theoretical" else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficientWarning)
        model = fit(x, d)
    if config.threshold_rule == "theoretical" and applicable:
        gamma = scheme.gamma_n
    else:
        gamma = model.train_min_score
    est = SupportEstimate(model, gamma)
    ras = est.raster(box, config.resolution, coarse_factor=config.coarse_factor)
    rec = {
        "seed": seed, "d": d, "gamma": gamma,
        "inside_fraction": float(np.mean(christoffel(model, x) >= gamma)),
        "hausdorff": hausdorff_distance(ras, truth),
        "boundary_hausdorff": hausdorff_distance(boundary_cells(ras), boundary_cells(truth)),
        "symdiff": symdiff_measure(ras, truth),
        "applicable": applicable,
    }
    rings = None
    if ras.dimension == 2:
        rings = contour_polylines(ras)
        rec["contours"] = len(rings)
    return rec, ras, rings


def run_synthetic_support(config: ExperimentConfig) -> RunReport:
    """Sample, fit, threshold and compare against the true shape for each n."""
    config.validate()
    shape = make_shape(config.shape, config.p)
    box = shape.study_box()
    truth = rasterize(shape.contains, box, config.resolution)
    outdir = Path(config.output_dir) if config.output_dir else None
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
    params = _scheme_params(shape, config) if config.degree_rule == "theoretical" else None
    rows = []
    for n in config.n_grid:
        t0 = time.perf_counter()
        scheme = select_scheme(n, params) if params is not None else None
        reps = []
        for k in range(config.seeds):
            rec, ras, rings = _one_replicate(shape, truth, box, n,
                                             replicate_seed(config.base_seed, n, k), config, scheme)
            reps.append(rec)
            if outdir is not None and k == 0:
                write_raster_text(ras, outdir / f"raster_n{n}.txt")
                if rings is not None:
                    write_polylines_csv(rings, outdir / f"contours_n{n}.csv")
        row = {
            "n": n,
            "d": int(np.median([r["d"] for r in reps])),
            "gamma": float(np.median([r["gamma"] for r in reps])),
            "hausdorff": float(np.median([r["hausdorff"] for r in reps])),
            "boundary_hausdorff": float(np.median([r["boundary_hausdorff"] for r in reps])),
            "symdiff": float(np.median([r["symdiff"] for r in reps])),
            "inside_fraction": float(min(r["inside_fraction"] for r in reps)),
            "cell_diagonal": truth.cell_diagonal,
            "replicates": reps,
        }
        if "contours" in reps[0]:
            row["contours"] = [r["contours"] for r in reps]
        if scheme is not None:
            row.update(scheme_d_n=scheme.d_n, delta_n=scheme.delta_n, n0=scheme.n0,
                       applicable=not scheme.below_theory)
            row["within_delta"] = (
                all(r["hausdorff"] <= scheme.delta_n for r in reps)
                if not scheme.below_theory else None
            )
        if config.timing:
            row["wall_time"] = time.perf_counter() - t0
        rows.append(row)
    return RunReport(config.kind, config.to_dict(), rows)


def run_convergence_study(config: ExperimentConfig) -> RunReport:
    """Support recovery over an n grid plus fitted log-log slopes of each divergence."""
    report = run_synthetic_support(config)
    ns = [row["n"] for row in report.rows]
    for key in ("hausdorff", "boundary_hausdorff", "symdiff"):
        vals = [row[key] for row in report.rows]
        report.slopes[key] = loglog_slope(ns, vals)
        report.summary[f"{key}_inversions"] = int(sum(b > a for a, b in zip(vals, vals[1:])))
        report.summary[f"{key}_strictly_decreasing_overall"] = bool(vals[-1] < vals[0])
    first, last = report.rows[0]["symdiff"], report.rows[-1]["symdiff"]
    report.summary["symdiff_final_over_initial"] = last / first if first > 0 else None
    return report


# -- concentration of the empirical Christoffel function -------------------

def run_concentration_study(p: int, r: int, d: int, n_grid: Sequence[int], reps: int = 200,
                            alpha: float = 0.1, seed: int = 0, grid_per_axis: int = 50,
                            radius: float = 0.95, min_reps: int = 100) -> RunReport:
    """Monte-Carlo check of the uniform relative-error bound on an analytic ball measure.

    For each n and replicate: draw n points from nu_r, express the empirical
    moment matrix in the population-orthonormal basis, and record the
    supremum over a grid of |Lambda_n - Lambda| / Lambda together with
    ||M_n - I||.  The bound uses m = sup kappa, which for nu_r is attained on
    the unit sphere and has a closed form.
    """
    if reps < min_reps:
        raise ValueError(f"need at least {min_reps} replicates, got {reps}")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    measure = BallJacobiMeasure(p, r)
    basis = enumerate_basis(p, d)
    s = basis_size(p, d)
    T = analytic_orthonormal_transform(p, d, r)
    grid = ball_grid(p, grid_per_axis, radius)
    U = T @ eval_monomials(basis, grid).T          # orthonormal polynomials on the grid
    lam = 1.0 / np.einsum("ij,ij->j", U, U)
    m = gegenbauer_boundary_kernel(p, d, r)
    rows = []
    for n in sorted(int(v) for v in n_grid):
        bound = concentration_bound(m, n, s, alpha)
        rel, gaps = np.empty(reps), np.empty(reps)
        for k in range(reps):
            x = measure.sample(n, np.random.default_rng(replicate_seed(seed, n, k)))
            Mo = empirical_in_orthobasis(x, p, d, r)
            gaps[k] = technical_gap(Mo)
            Lo = scipy.linalg.cholesky(Mo.entries, lower=True)
            Z = scipy.linalg.solve_triangular(Lo, U, lower=True)
            lam_n = 1.0 / np.einsum("ij,ij->j", Z, Z)
            rel[k] = np.max(np.abs(lam_n - lam) / lam)
        rows.append({
            "n": n, "s": s, "m": m, "bound": bound,
            "median_rel_error": float(np.median(rel)),
            "q10_rel_error": float(np.quantile(rel, 0.1)),
            "q90_rel_error": float(np.quantile(rel, 0.9)),
            "max_rel_error": float(rel.max()),
            "median_gap": float(np.median(gaps)),
            "coverage": float(np.mean(rel <= bound)),
            "gap_coverage": float(np.mean(gaps <= bound)),
            "majorant_violations": int(np.sum(rel > gaps + 1e-8)),
        })
    cfg = {"kind": "concentration", "p": p, "r": r, "d": d, "n_grid": [row["n"] for row in rows],
           "reps": reps, "alpha": alpha, "seed": seed, "grid_per_axis": grid_per_axis,
           "radius": radius}
    report = RunReport("concentration", cfg, rows)
    report.slopes["median_rel_error"] = loglog_slope([row["n"] for row in rows],
                                                     [row["median_rel_error"] for row in rows])
    report.summary["min_coverage"] = min(row["coverage"] for row in rows)
    report.summary["majorant_violations"] = sum(row["majorant_violations"] for row in rows)
    return report


# -- outlier ranking -------------------------------------------------------

@dataclass(frozen=True)
class Method:
    """A scoring method: 'christoffel' (degree), 'kde-gaussian'/'kde-laplace' (bandwidth), 'random'."""

    kind: str
    param: Optional[float] = None

    @property
    def label(self):
        if self.kind == "christoffel":
            return f"christoffel:d={int(self.param)}"
        if self.kind.startswith("kde"):
            return f"{self.kind}:h={self.param:g}"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "Method":
        """'christoffel:d=4', 'kde-gaussian:h=0.1', 'random'."""
        kind, _, arg = text.strip().partition(":")
        if kind == "random":
            return cls("random")
        if kind not in ("christoffel", "kde-gaussian", "kde-laplace"):
            raise ValueError(f"unknown method {text!r}")
        key, _, val = arg.partition("=")
        want = "d" if kind == "christoffel" else "h"
        if key != want or not val:
            raise ValueError(f"method {kind!r} needs '{want}=<value>', got {text!r}")
        return cls(kind, int(val) if kind == "christoffel" else float(val))


KDE_BANDWIDTHS = (0.05, 0.1, 0.2, 0.5, 1.0)


def default_methods(degrees=(2, 3, 4, 5, 6)):
    return ([Method("christoffel", d) for d in degrees]
            + [Method("kde-gaussian", h) for h in KDE_BANDWIDTHS]
            + [Method("kde-laplace", h) for h in KDE_BANDWIDTHS]
            + [Method("random")])


def method_scores(method: Method, train: Dataset, test: Dataset, seed=0) -> np.ndarray:
    """Higher = more typical.  KDE bandwidths are in units of the per-axis training std."""
    if method.kind == "christoffel":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankDeficientWarning)
            model = fit(train.points, int(method.param))
        return christoffel(model, test.points)
    if method.kind.startswith("kde"):
        sd = train.points.std(axis=0)
        sd[sd == 0] = 1.0
        return kde_score(train.points / sd, test.points / sd,
                         method.kind.split("-")[1], method.param)
    if method.kind == "random":
        return np.random.default_rng(seed).random(test.n)
    raise ValueError(f"unknown method {method.kind!r}")


def precision_at_half(scores, labels) -> float:
    """Share of true outliers among the half of the test set with the lowest scores."""
    labels = np.asarray(labels)
    k = labels.size // 2
    pred = np.argsort(np.asarray(scores), kind="stable")[:k]
    return float(np.mean(labels[pred] == OUTLIER))


def outlier_precision(train: Dataset, test: Dataset, method: Method, seed=0) -> float:
    if test.labels is None:
        raise ValueError("test set needs labels")
    if not (np.any(test.labels == OUTLIER) and np.any(test.labels != OUTLIER)):
        raise ValueError("test set needs both normal and outlier labels")
    if train.labels is not None and np.any(train.labels == OUTLIER):
        raise ValueError("training set must contain normals only")
    return precision_at_half(method_scores(method, train, test, seed), test.labels)


def run_outlier_bench(data: Dataset, methods=None, splits: int = 10, seed: int = 0,
                      config: Optional[dict] = None) -> RunReport:
    """Precision at half for each method over ``splits`` random train/test splits."""
    if data.labels is None:
        raise ValueError("the outlier benchmark needs labelled data")
    methods = default_methods() if methods is None else [
        m if isinstance(m, Method) else Method.parse(m) for m in methods]
    per = {m.label: [] for m in methods}
    for k in range(splits):
        split_seed = replicate_seed(seed, data.n, k)
        train, test = outlier_split(data, split_seed)
        for m in methods:
            per[m.label].append(outlier_precision(train, test, m, seed=split_seed))
    rows = []
    for m in methods:
        v = np.array(per[m.label])
        rows.append({
            "method": m.label, "precisions": v.tolist(), "median": float(np.median(v)),
            "q10": float(np.quantile(v, 0.1)), "q25": float(np.quantile(v, 0.25)),
            "q75": float(np.quantile(v, 0.75)), "q90": float(np.quantile(v, 0.9)),
        })
    cfg = dict(config or {})
    cfg.update(kind="outlier", splits=splits, seed=seed, methods=[m.label for m in methods],
               n=data.n, p=data.p, outliers=int(np.sum(data.labels == OUTLIER)))
    return RunReport("outlier", cfg, rows)
