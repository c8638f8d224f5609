"""Reference shapes, samplers and raster-based set divergences.

Shapes know their exact membership, signed distance to the boundary,
diameter, rolling-ball radius R and boundary constant C_S = 2 * |dS|.
Set divergences (Hausdorff, boundary Hausdorff, symmetric difference) are
computed on rasters of cell centers; the cell diagonal bounds the
discretization error for well-resolved sets and is reported alongside.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import ndimage

from .errors import (
    GridMismatchError,
    MemoryBudgetError,
    ShapeTooThinError,
    UndefinedDistanceError,
    UnsupportedError,
)

MAX_CELLS = 2**26
MIN_ACCEPTANCE = 1e-4


def unit_ball_volume(p: int) -> float:
    return math.pi ** (p / 2) / math.gamma(p / 2 + 1)


def _points(x, p):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :] if p > 1 else x[:, None]
    if x.shape[-1] != p:
        raise ValueError(f"expected points of dimension {p}, got shape {x.shape}")
    return x


# -- shapes ----------------------------------------------------------------

class Shape:
    """Common interface; subclasses define signed_distance and constants."""

    dimension: int

    def signed_distance(self, x) -> np.ndarray:
        """Positive inside: d(x, dS) for x in S and -d(x, S) outside."""
        raise NotImplementedError

    def contains(self, x) -> np.ndarray:
        return self.signed_distance(x) >= 0

    __call__ = contains

    def boundary_distance(self, x) -> np.ndarray:
        return np.abs(self.signed_distance(x))

    @property
    def box(self):
        raise NotImplementedError

    @property
    def inradius(self) -> float:
        """Upper bound on sup_{x in S} d(x, dS); used as sampler envelope."""
        raise NotImplementedError

    def study_box(self, inflate=0.5):
        """Bounding box grown by ``inflate`` times its width on each axis (total)."""
        lo, hi = self.box
        pad = (hi - lo) * inflate / 2
        return lo - pad, hi + pad

    def density_constant(self, r: float) -> Optional[float]:
        """C with w(x) >= C d(x, dS)^r for the density w ~ d(x, dS)^r, if known."""
        return 1.0 / self.volume if r == 0 else None


@dataclass(frozen=True)
class Ball(Shape):
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def dimension(self):
        return len(self.center)

    def signed_distance(self, x):
        x = _points(x, self.dimension)
        return self.radius - np.linalg.norm(x - np.array(self.center), axis=-1)

    @property
    def box(self):
        c = np.array(self.center)
        return c - self.radius, c + self.radius

    @property
    def volume(self):
        return unit_ball_volume(self.dimension) * self.radius ** self.dimension

    @property
    def surface(self):
        p = self.dimension
        return p * unit_ball_volume(p) * self.radius ** (p - 1)

    @property
    def diam(self):
        return 2 * self.radius

    @property
    def rolling_radius(self):
        return self.radius

    @property
    def boundary_constant(self):
        return 2 * self.surface

    @property
    def inradius(self):
        return self.radius

    def density_constant(self, r):
        # normalizer Z = int_B d(x, dB)^r dx = p V_p rho^(p+r) B(p, r+1)
        p, rho = self.dimension, self.radius
        beta = math.gamma(p) * math.gamma(r + 1) / math.gamma(p + r + 1)
        return 1.0 / (p * unit_ball_volume(p) * rho ** (p + r) * beta)

    def rolling_witness(self, x):
        """Center z of a ball of radius R with x in B_R(z) inside the shape."""
        c = np.array(self.center)
        x = np.asarray(x, dtype=float)
        off = x - c
        dist = np.linalg.norm(off)
        slack = self.radius - self.rolling_radius
        if dist <= slack:
            return x.copy()
        return c + off * (slack / dist)

    def holds_ball(self, z, radius):
        return np.linalg.norm(np.asarray(z) - np.array(self.center)) + radius <= self.radius * (1 + 1e-12)


@dataclass(frozen=True)
class Difference(Shape):
    """Ball ``outer`` with the open ball ``hole`` removed; the hole lies strictly inside."""

    outer: Ball
    hole: Ball

    def __post_init__(self):
        if self.outer.dimension != self.hole.dimension:
            raise ValueError("outer ball and hole differ in dimension")
        if self.gap <= 0:
            raise ValueError("hole must lie strictly inside the outer ball")

    @property
    def gap(self):
        off = np.linalg.norm(np.array(self.hole.center) - np.array(self.outer.center))
        return self.outer.radius - off - self.hole.radius

    @property
    def dimension(self):
        return self.outer.dimension

    def signed_distance(self, x):
        return np.minimum(self.outer.signed_distance(x), -self.hole.signed_distance(x))

    @property
    def box(self):
        return self.outer.box

    @property
    def volume(self):
        return self.outer.volume - self.hole.volume

    @property
    def surface(self):
        return self.outer.surface + self.hole.surface

    @property
    def diam(self):
        return self.outer.diam

    @property
    def rolling_radius(self):
        return min(self.hole.radius, self.gap / 2)

    @property
    def boundary_constant(self):
        return 2 * self.surface

    @property
    def inradius(self):
        return self.outer.radius - self.hole.radius


@dataclass(frozen=True)
class Annulus(Difference):
    """Concentric shell r_in <= |x - c| <= r_out."""

    @classmethod
    def make(cls, center, r_in, r_out):
        return cls(Ball(center, r_out), Ball(center, r_in))

    @property
    def inradius(self):
        return self.gap / 2

    def rolling_witness(self, x):
        c = np.array(self.outer.center)
        x = np.asarray(x, dtype=float)
        off = x - c
        dist = np.linalg.norm(off)
        R = self.rolling_radius
        target = min(max(dist, self.hole.radius + R), self.outer.radius - R)
        if dist == 0:
            raise ValueError("the center is not in the annulus")
        return c + off * (target / dist)

    def holds_ball(self, z, radius):
        dist = np.linalg.norm(np.asarray(z) - np.array(self.outer.center))
        tol = 1e-12 * self.outer.radius
        return dist - radius >= self.hole.radius - tol and dist + radius <= self.outer.radius + tol


@dataclass(frozen=True)
class BallUnion(Shape):
    """Union of pairwise disjoint closed balls."""

    balls: tuple

    def __post_init__(self):
        balls = tuple(self.balls)
        if not balls:
            raise ValueError("need at least one ball")
        if len({b.dimension for b in balls}) != 1:
            raise ValueError("balls differ in dimension")
        object.__setattr__(self, "balls", balls)
        if self.min_gap is not None and self.min_gap <= 0:
            raise ValueError("balls of a union must be pairwise disjoint")

    @property
    def dimension(self):
        return self.balls[0].dimension

    @property
    def min_gap(self):
        gaps = [
            np.linalg.norm(np.array(a.center) - np.array(b.center)) - a.radius - b.radius
            for i, a in enumerate(self.balls) for b in self.balls[i + 1:]
        ]
        return min(gaps) if gaps else None

    def signed_distance(self, x):
        return np.max([b.signed_distance(x) for b in self.balls], axis=0)

    @property
    def box(self):
        los, his = zip(*(b.box for b in self.balls))
        return np.min(los, axis=0), np.max(his, axis=0)

    @property
    def volume(self):
        return sum(b.volume for b in self.balls)

    @property
    def surface(self):
        return sum(b.surface for b in self.balls)

    @property
    def diam(self):
        best = max(b.diam for b in self.balls)
        for i, a in enumerate(self.balls):
            for b in self.balls[i + 1:]:
                span = np.linalg.norm(np.array(a.center) - np.array(b.center)) + a.radius + b.radius
                best = max(best, span)
        return best

    @property
    def rolling_radius(self):
        r = min(b.radius for b in self.balls)
        return r if self.min_gap is None else min(r, self.min_gap / 2)

    @property
    def boundary_constant(self):
        return 2 * self.surface

    @property
    def inradius(self):
        return max(b.radius for b in self.balls)

    def rolling_witness(self, x):
        x = np.asarray(x, dtype=float)
        i = int(np.argmax([b.signed_distance(x)[0] for b in self.balls]))
        b = self.balls[i]
        c = np.array(b.center)
        off = x - c
        dist = np.linalg.norm(off)
        slack = b.radius - self.rolling_radius
        return x.copy() if dist <= slack else c + off * (slack / dist)

    def holds_ball(self, z, radius):
        return any(b.holds_ball(z, radius) for b in self.balls)


def disk(radius=1.0, center=(0.0, 0.0)):
    return Ball(center, radius)


def annulus(r_in=0.5, r_out=1.0, center=(0.0, 0.0)):
    return Annulus.make(center, r_in, r_out)


def four_disks(radius=0.3, offset=0.6):
    """Four disjoint disks centred at (+-offset, +-offset)."""
    return BallUnion(tuple(
        Ball((sx * offset, sy * offset), radius) for sx in (1, -1) for sy in (1, -1)
    ))


def make_shape(name: str, p: int = 2) -> Shape:
    """Named study shapes: 'ball'/'disk', 'annulus', 'four-disks', 'hole'."""
    if name in ("ball", "disk"):
        return Ball((0.0,) * p, 1.0)
    if p != 2:
        raise UnsupportedError(f"shape {name!r} is only defined in the plane")
    if name == "annulus":
        return annulus()
    if name == "four-disks":
        return four_disks()
    if name == "hole":
        return Difference(Ball((0.0, 0.0), 1.0), Ball((0.25, 0.1), 0.35))
    raise ValueError(f"unknown shape {name!r}")


# -- sampling --------------------------------------------------------------

def sample_shape(shape: Shape, n: int, r: float = 0.0, seed: int = 0) -> np.ndarray:
    """Draw n i.i.d. points with density proportional to d(x, dS)^r on the shape.

    Rejection sampling against the bounding box with a counter-based (Philox)
    generator, so a given seed always yields the same points.
    """
    if r < 0:
        raise ValueError("decay exponent r must be >= 0")
    rng = np.random.Generator(np.random.Philox(seed))
    lo, hi = (np.asarray(b, dtype=float) for b in shape.box)
    p = lo.size
    batch = max(4096, 4 * n)
    scale = shape.inradius
    out = []
    have = proposed = accepted = 0
    while have < n:
        z = lo + (hi - lo) * rng.random((batch, p))
        u = rng.random(batch)
        sd = shape.signed_distance(z)
        keep = sd >= 0
        if r > 0:
            keep &= u <= (np.clip(sd, 0, None) / scale) ** r
        proposed += batch
        accepted += int(keep.sum())
        if proposed >= 10**5 and accepted / proposed < MIN_ACCEPTANCE:
            raise ShapeTooThinError(
                f"acceptance rate {accepted / proposed:.2e} below {MIN_ACCEPTANCE:g}"
            )
        out.append(z[keep])
        have += out[-1].shape[0]
    return np.concatenate(out)[:n]


# -- rasters ---------------------------------------------------------------

@dataclass(frozen=True)
class Raster:
    """Boolean occupancy of the cell centers of an axis-aligned grid."""

    lo: np.ndarray
    hi: np.ndarray
    occupancy: np.ndarray = field(repr=False)

    @property
    def resolution(self):
        return self.occupancy.shape

    @property
    def dimension(self):
        return self.occupancy.ndim

    @property
    def cell_size(self):
        return (self.hi - self.lo) / np.array(self.resolution)

    @property
    def cell_volume(self):
        return float(np.prod(self.cell_size))

    @property
    def cell_diagonal(self):
        return float(np.linalg.norm(self.cell_size))

    @property
    def measure(self):
        return int(self.occupancy.sum()) * self.cell_volume

    def axes(self):
        return [lo + h * (np.arange(k) + 0.5)
                for lo, h, k in zip(self.lo, self.cell_size, self.resolution)]

    def centers(self, mask=None):
        """Cell-center coordinates, shape (cells, p), optionally only where mask."""
        grids = np.meshgrid(*self.axes(), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        return pts if mask is None else pts[np.asarray(mask).ravel()]

    def same_grid(self, other: "Raster") -> bool:
        return (self.resolution == other.resolution
                and np.array_equal(self.lo, other.lo)
                and np.array_equal(self.hi, other.hi))

    def with_occupancy(self, occ) -> "Raster":
        return Raster(self.lo, self.hi, np.asarray(occ, dtype=bool))


def _grid(box, resolution, max_cells):
    lo, hi = (np.atleast_1d(np.asarray(b, dtype=float)) for b in box)
    p = lo.size
    res = (int(resolution),) * p if np.ndim(resolution) == 0 else tuple(int(k) for k in resolution)
    if len(res) != p or min(res) < 2:
        raise ValueError(f"need a resolution >= 2 on each of the {p} axes, got {res}")
    if np.any(hi <= lo):
        raise ValueError("box must have positive extent on every axis")
    cells = math.prod(res)
    if cells > max_cells:
        raise MemoryBudgetError(
            f"{cells} cells in dimension {p} exceeds the budget of {max_cells}; "
            "lower the resolution"
        )
    return lo, hi, res


def rasterize(predicate: Callable, box, resolution, max_cells=MAX_CELLS) -> Raster:
    """Occupancy of ``predicate`` (vectorized over (m, p) arrays) at cell centers."""
    lo, hi, res = _grid(box, resolution, max_cells)
    empty = Raster(lo, hi, np.zeros(res, dtype=bool))
    pts = empty.centers()
    occ = np.empty(pts.shape[0], dtype=bool)
    step = 1 << 16
    for start in range(0, pts.shape[0], step):
        occ[start:start + step] = np.asarray(predicate(pts[start:start + step]), dtype=bool)
    return empty.with_occupancy(occ.reshape(res))


def rasterize_level_set(score: Callable, gamma: float, box, resolution,
                        coarse_factor=4, max_cells=MAX_CELLS) -> Raster:
    """Raster of {x : score(x) >= gamma}, refined only near the coarse boundary.

    The grid is first evaluated with ``coarse_factor`` times fewer cells per
    axis.  Fine cells are evaluated exactly inside every coarse cell whose
    3^p neighbourhood (grown by one more coarse cell) is mixed; all other
    fine cells inherit the coarse value.  Components thinner than about one
    coarse cell can be missed; use ``coarse_factor=1`` for a full sweep.
    """
    def pred(x):
        return score(x) >= gamma

    lo, hi, res = _grid(box, resolution, max_cells)
    f = int(coarse_factor)
    if f <= 1 or any(k % f or k // f < 2 for k in res):
        return rasterize(pred, (lo, hi), res, max_cells)
    coarse = rasterize(pred, (lo, hi), tuple(k // f for k in res), max_cells)
    c = coarse.occupancy
    size = 3
    mixed = ndimage.maximum_filter(c, size=size, mode="nearest") != ndimage.minimum_filter(
        c, size=size, mode="nearest")
    mixed = ndimage.binary_dilation(mixed, structure=np.ones((3,) * c.ndim))
    fine, mask = c, mixed
    for axis in range(c.ndim):
        fine = np.repeat(fine, f, axis=axis)
        mask = np.repeat(mask, f, axis=axis)
    grid = Raster(lo, hi, fine)
    pts = grid.centers(mask)
    vals = np.empty(pts.shape[0], dtype=bool)
    step = 1 << 16
    for start in range(0, pts.shape[0], step):
        vals[start:start + step] = pred(pts[start:start + step])
    fine[mask] = vals
    return grid.with_occupancy(fine)


def _require_same_grid(a: Raster, b: Raster):
    if not a.same_grid(b):
        raise GridMismatchError("rasters must share the same box and resolution")


def hausdorff_distance(a: Raster, b: Raster) -> float:
    """Discrete Hausdorff distance between the occupied cell centers of two rasters."""
    _require_same_grid(a, b)
    if not a.occupancy.any() or not b.occupancy.any():
        raise UndefinedDistanceError("Hausdorff distance of an empty raster is undefined")
    h = a.cell_size
    to_b = ndimage.distance_transform_edt(~b.occupancy, sampling=h)
    to_a = ndimage.distance_transform_edt(~a.occupancy, sampling=h)
    return float(max(to_b[a.occupancy].max(), to_a[b.occupancy].max()))


def _axis_neighbours_any(occ, value):
    """Cells with at least one axis-neighbour equal to ``value``; outside counts as False."""
    padded = np.pad(occ, 1, constant_values=False)
    core = tuple(slice(1, -1) for _ in range(occ.ndim))
    hit = np.zeros(occ.shape, dtype=bool)
    for axis in range(occ.ndim):
        for shift in (-1, 1):
            sl = list(core)
            sl[axis] = slice(1 + shift, padded.shape[axis] - 1 + shift)
            nb = padded[tuple(sl)]
            hit |= nb == value
    return hit


def boundary_cells(a: Raster, which: str = "inner") -> Raster:
    """Boundary layer of a raster using axis-neighbour adjacency.

    ``"inner"``: occupied cells with an unoccupied axis-neighbour (cells
    outside the box count as unoccupied).  ``"outer"``: unoccupied cells with
    an occupied axis-neighbour.  ``"both"``: their union.
    """
    occ = a.occupancy
    inner = occ & _axis_neighbours_any(occ, False)
    if which == "inner":
        return a.with_occupancy(inner)
    outer = ~occ & _axis_neighbours_any(occ, True)
    if which == "outer":
        return a.with_occupancy(outer)
    if which == "both":
        return a.with_occupancy(inner | outer)
    raise ValueError(f"unknown boundary kind {which!r}")


def symdiff_measure(a: Raster, b: Raster) -> float:
    """Volume of the cells occupied in exactly one of the two rasters."""
    _require_same_grid(a, b)
    return int(np.count_nonzero(a.occupancy ^ b.occupancy)) * a.cell_volume


def contour_polylines(a: Raster) -> list:
    """Closed marching-squares polylines around the occupied cells (p = 2 only).

    The grid is padded with empty cells so every ring closes.  Saddle cells
    are resolved by connecting the occupied (high) corners.  Each polyline is
    a (k, 2) array in world coordinates whose first and last rows coincide.
    """
    if a.dimension != 2:
        raise UnsupportedError(f"contours are only available in 2-D, not {a.dimension}-D")
    from skimage.measure import find_contours

    padded = np.pad(a.occupancy, 1, constant_values=False).astype(float)
    rings = find_contours(padded, 0.5, fully_connected="high")
    h = a.cell_size
    return [a.lo + (ring - 1 + 0.5) * h for ring in rings]


@dataclass(frozen=True)
class GeometryReport:
    hausdorff: float
    boundary_hausdorff: float
    symdiff_measure: float
    resolution: tuple
    cell_diagonal: float


def compare_rasters(estimate: Raster, truth: Raster) -> GeometryReport:
    return GeometryReport(
        hausdorff=hausdorff_distance(estimate, truth),
        boundary_hausdorff=hausdorff_distance(boundary_cells(estimate), boundary_cells(truth)),
        symdiff_measure=symdiff_measure(estimate, truth),
        resolution=tuple(truth.resolution),
        cell_diagonal=truth.cell_diagonal,
    )


# -- export ----------------------------------------------------------------

def write_raster_text(a: Raster, path) -> None:
    """Plain-text grid: header lines start with '#', then one row of 0/1 per x index (2-D)."""
    occ = a.occupancy if a.dimension == 2 else a.occupancy.reshape(a.resolution[0], -1)
    with open(path, "w") as fh:
        fh.write(f"# lo {' '.join(repr(float(v)) for v in a.lo)}\n")
        fh.write(f"# hi {' '.join(repr(float(v)) for v in a.hi)}\n")
        fh.write(f"# resolution {' '.join(str(k) for k in a.resolution)}\n")
        for row in occ:
            fh.write("".join("1" if v else "0" for v in row) + "\n")


def write_raster_csv(a: Raster, path) -> None:
    """CSV of occupied cell centers, columns x0..x{p-1}."""
    pts = a.centers(a.occupancy)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(a.dimension)])
        w.writerows(pts.tolist())


def write_polylines_csv(rings: Sequence[np.ndarray], path) -> None:
    """CSV rows (x, y, ring_id) for external plotting."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "ring_id"])
        for k, ring in enumerate(rings):
            for x, y in ring:
                w.writerow([repr(float(x)), repr(float(y)), k])
