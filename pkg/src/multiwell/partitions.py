"""Sharp-interface partition calculus on exact planar geometry.

Partitions are explicit segment/ray complexes with phase-pair tags, so
interface masses, densities, and windowed energies are analytic rather than
pixel counts.  Includes the weighted Steiner point (vertex capture per the
subgradient test), Young's law angles, the shortest-path reduction of
surface-tension matrices, cones, and blow-downs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np


class PartitionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Surface tensions


@dataclass(frozen=True)
class TensionMatrix:
    """Symmetric pairwise surface tensions; e_ii = 0, e_ij > 0 off-diagonal."""

    e: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.e, dtype=np.float64)
        object.__setattr__(self, "e", e)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise PartitionError("tension matrix must be square")
        if np.max(np.abs(e - e.T)) > 1e-12:
            raise PartitionError("tension matrix must be symmetric")
        if np.max(np.abs(np.diag(e))) > 0:
            raise PartitionError("diagonal tensions must vanish")
        off = e + np.eye(e.shape[0])
        if np.min(off) <= 0:
            raise PartitionError("off-diagonal tensions must be positive")

    @property
    def phases(self) -> int:
        return self.e.shape[0]

    def __getitem__(self, ij) -> float:
        return float(self.e[ij])

    def is_strictly_metric(self) -> bool:
        """e_ik < e_ij + e_jk for all triples with j distinct from i, k."""
        N = self.phases
        for i in range(N):
            for k in range(N):
                for j in range(N):
                    if j in (i, k) or i == k:
                        continue
                    if not self.e[i, k] < self.e[i, j] + self.e[j, k]:
                        return False
        return True


def metric_reduce(tensions: TensionMatrix) -> TensionMatrix:
    """All-pairs shortest path over the phase graph: the reduced tensions
    satisfy the weak triangle inequality, never exceed the input, and the
    reduction is idempotent."""
    E = tensions.e.copy()
    N = tensions.phases
    for k in range(N):
        E = np.minimum(E, E[:, k, None] + E[None, k, :])
    np.fill_diagonal(E, 0.0)
    return TensionMatrix(E)


# ---------------------------------------------------------------------------
# Partition geometry


@dataclass(frozen=True)
class Segment:
    phase_i: int
    phase_j: int
    p0: np.ndarray
    p1: np.ndarray

    def transformed(self, shift, scale):
        return Segment(self.phase_i, self.phase_j, (self.p0 - shift) * scale, (self.p1 - shift) * scale)


@dataclass(frozen=True)
class Ray:
    phase_i: int
    phase_j: int
    origin: np.ndarray
    direction: np.ndarray  # unit

    def transformed(self, shift, scale):
        return Ray(self.phase_i, self.phase_j, (self.origin - shift) * scale, self.direction)


@dataclass(frozen=True)
class Disk:
    center: np.ndarray
    radius: float


def disk(center, radius) -> Disk:
    return Disk(np.asarray(center, dtype=np.float64), float(radius))


@dataclass(frozen=True)
class PolygonalPartition:
    """Interface complex of tagged segments and rays for N phases."""

    phases: int
    elements: tuple = field(default_factory=tuple)

    def __post_init__(self):
        for el in self.elements:
            for p in (el.phase_i, el.phase_j):
                if not (1 <= p <= self.phases):
                    raise PartitionError(f"phase tag {p} outside 1..{self.phases}")
            if el.phase_i == el.phase_j:
                raise PartitionError("interface must separate two distinct phases")

    def translated_scaled(self, shift, scale) -> "PolygonalPartition":
        shift = np.asarray(shift, dtype=np.float64)
        return replace(self, elements=tuple(el.transformed(shift, scale) for el in self.elements))


def _clip_interval(t_lo, t_hi, origin, direction, w: Disk):
    """Sub-interval of origin + t*direction (t in [t_lo, t_hi]) inside the disk."""
    oc = origin - w.center
    b = float(np.dot(direction, oc))
    c = float(np.dot(oc, oc)) - w.radius**2
    disc = b * b - c
    if disc <= 0:
        return 0.0
    s = math.sqrt(disc)
    lo = max(t_lo, -b - s)
    hi = min(t_hi, -b + s)
    return max(0.0, hi - lo)


def _element_length_in(el, w: Disk) -> float:
    if isinstance(el, Segment):
        v = el.p1 - el.p0
        L = float(np.linalg.norm(v))
        if L == 0.0:
            return 0.0
        return _clip_interval(0.0, L, el.p0, v / L, w)
    return _clip_interval(0.0, np.inf, el.origin, el.direction, w)


def interface_mass(part: PolygonalPartition, window: Disk) -> float:
    return sum(_element_length_in(el, window) for el in part.elements)


def partition_energy(part: PolygonalPartition, tensions: TensionMatrix, window: Disk) -> float:
    """E(A; W) = sum over interface pairs of e_ij x length inside the window."""
    if tensions.phases < part.phases:
        raise PartitionError("tension matrix smaller than the phase count")
    total = 0.0
    for el in part.elements:
        total += tensions[el.phase_i - 1, el.phase_j - 1] * _element_length_in(el, window)
    return total


def density(part: PolygonalPartition, x, r: float) -> float:
    """Interface mass in B_r(x) over 2r (planar codimension-one normalization);
    constant in r exactly on cones, 3/2 at a triod vertex, 1 on a line."""
    if r <= 0:
        raise PartitionError("density radius must be positive")
    return interface_mass(part, disk(x, r)) / (2.0 * r)


def make_cone(x0, ray_directions, pairs=None) -> PolygonalPartition:
    """Cone over the given directions with vertex x0: one ray per direction,
    sectors labeled 1..k counterclockwise unless explicit pairs are given."""
    x0 = np.asarray(x0, dtype=np.float64)
    dirs = [np.asarray(d, dtype=np.float64) for d in ray_directions]
    if len(dirs) < 2:
        raise PartitionError("a cone needs at least 2 rays")
    dirs = [d / np.linalg.norm(d) for d in dirs]
    angles = [math.atan2(d[1], d[0]) for d in dirs]
    order = np.argsort(angles)
    dirs = [dirs[i] for i in order]
    for a, b in zip(dirs, dirs[1:]):
        if np.linalg.norm(a - b) < 1e-12:
            raise PartitionError("duplicate ray directions")
    k = len(dirs)
    if pairs is None:
        pairs = [((i - 1) % k + 1, i % k + 1) for i in range(1, k + 1)]
        nphases = k
    else:
        nphases = max(max(p) for p in pairs)
    elements = [
        Ray(pairs[i][0], pairs[i][1], x0.copy(), dirs[i]) for i in range(k)
    ]
    return PolygonalPartition(phases=nphases, elements=tuple(elements))


def blow_down(part: PolygonalPartition, x0, scales) -> list[PolygonalPartition]:
    """Rescalings mu (S - x0) for decreasing scales mu; cones are fixed points,
    bounded features shrink toward the cone at infinity."""
    scales = list(scales)
    if any(s <= 0 for s in scales):
        raise PartitionError("scales must be positive")
    if any(b >= a for a, b in zip(scales, scales[1:])):
        raise PartitionError("scales must be strictly decreasing")
    return [part.translated_scaled(x0, mu) for mu in scales]


def _point_element_distance(p, el) -> float:
    if isinstance(el, Segment):
        v = el.p1 - el.p0
        L2 = float(np.dot(v, v))
        t = 0.0 if L2 == 0 else np.clip(np.dot(p - el.p0, v) / L2, 0.0, 1.0)
        q = el.p0 + t * v
    else:
        t = max(0.0, float(np.dot(p - el.origin, el.direction)))
        q = el.origin + t * el.direction
    return float(np.linalg.norm(p - q))


def _sample_skeleton(part: PolygonalPartition, window: Disk, step: float) -> np.ndarray:
    pts = []
    for el in part.elements:
        if isinstance(el, Segment):
            o, v = el.p0, el.p1 - el.p0
            L = float(np.linalg.norm(v))
            if L == 0:
                continue
            v = v / L
            hi = L
        else:
            o, v = el.origin, el.direction
            # clip to a bounding reach of the window
            hi = float(np.dot(window.center - o, v)) + window.radius + step
            if hi <= 0:
                continue
        ts = np.arange(0.0, hi + step / 2, step)
        cand = o[None, :] + ts[:, None] * v[None, :]
        keep = np.linalg.norm(cand - window.center[None, :], axis=1) <= window.radius
        pts.append(cand[keep])
    if not pts:
        return np.zeros((0, 2))
    return np.vstack(pts)


def hausdorff_distance(a: PolygonalPartition, b: PolygonalPartition, window: Disk, step: float = 1e-3) -> float:
    """Hausdorff distance between the interface skeletons inside the window,
    by dense sampling (resolution ``step``) against exact element distances."""
    pa = _sample_skeleton(a, window, step)
    pb = _sample_skeleton(b, window, step)
    if pa.shape[0] == 0 or pb.shape[0] == 0:
        return float("inf")

    def directed(pts, other):
        worst = 0.0
        for p in pts:
            d = min(_point_element_distance(p, el) for el in other.elements)
            worst = max(worst, d)
        return worst

    return max(directed(pa, b), directed(pb, a))


# ---------------------------------------------------------------------------
# Reference configurations


def line_partition(angle: float = 0.0) -> PolygonalPartition:
    d = np.array([math.cos(angle), math.sin(angle)])
    return PolygonalPartition(
        phases=2,
        elements=(
            Ray(1, 2, np.zeros(2), d),
            Ray(1, 2, np.zeros(2), -d),
        ),
    )


def triod(rotate: float = 0.0) -> PolygonalPartition:
    """Three rays at 120 degrees from the origin; phases 1, 2, 3 in sectors."""
    dirs = [rotate + np.pi / 2 + k * 2 * np.pi / 3 for k in range(3)]
    return make_cone(np.zeros(2), [[math.cos(t), math.sin(t)] for t in dirs])


def double_junction(separation: float) -> PolygonalPartition:
    """Two triple junctions at (+-s/2, 0) joined by a middle interface; phase 1
    occupies both outer sectors (disconnected), 2 on top, 3 below."""
    if separation <= 0:
        raise PartitionError("separation must be positive")
    d = separation / 2.0
    c60, s60 = 0.5, math.sqrt(3.0) / 2.0
    right = np.array([d, 0.0])
    left = np.array([-d, 0.0])
    return PolygonalPartition(
        phases=3,
        elements=(
            Segment(2, 3, left, right),
            Ray(1, 2, right.copy(), np.array([c60, s60])),
            Ray(1, 3, right.copy(), np.array([c60, -s60])),
            Ray(1, 2, left.copy(), np.array([-c60, s60])),
            Ray(1, 3, left.copy(), np.array([-c60, -s60])),
        ),
    )


def x_cone() -> PolygonalPartition:
    """Blow-down limit of the double junction: four rays from the origin at
    +-60 and +-120 degrees, phases (1, 2, 1, 3) around."""
    c60, s60 = 0.5, math.sqrt(3.0) / 2.0
    return PolygonalPartition(
        phases=3,
        elements=(
            Ray(1, 2, np.zeros(2), np.array([c60, s60])),
            Ray(2, 1, np.zeros(2), np.array([-c60, s60])),
            Ray(1, 3, np.zeros(2), np.array([-c60, -s60])),
            Ray(3, 1, np.zeros(2), np.array([c60, -s60])),
        ),
    )


def merged_competitor(separation: float, window_radius: float) -> PolygonalPartition:
    """Connectedness competitor for the double junction in a given window:
    phase 1 is joined through the middle, phases 2 and 3 retreat to chord
    lenses.  Matches the double junction's trace on the window circle."""
    d = separation / 2.0
    R = window_radius
    ell = (-d + math.sqrt(4 * R * R - 3 * d * d)) / 2.0
    x = d + ell / 2.0
    y = ell * math.sqrt(3.0) / 2.0
    return PolygonalPartition(
        phases=3,
        elements=(
            Segment(1, 2, np.array([-x, y]), np.array([x, y])),
            Segment(1, 3, np.array([-x, -y]), np.array([x, -y])),
        ),
    )


# ---------------------------------------------------------------------------
# Weighted Steiner point (Young's law at a triple junction)


@dataclass(frozen=True)
class WeightedTriangle:
    """Vertices A, B, C with weights w_A = e12, w_B = e13, w_C = e23."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    e12: float
    e13: float
    e23: float

    def __post_init__(self):
        for name in ("A", "B", "C"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if min(self.e12, self.e13, self.e23) <= 0:
            raise PartitionError("weights must be positive")

    @property
    def vertices(self) -> np.ndarray:
        return np.stack([self.A, self.B, self.C])

    @property
    def weights(self) -> np.ndarray:
        return np.array([self.e12, self.e13, self.e23])


def weighted_sum(P, tri: WeightedTriangle) -> float:
    P = np.asarray(P, dtype=np.float64)
    d = np.linalg.norm(tri.vertices - P[None, :], axis=1)
    return float(tri.weights @ d)


def first_order_residual(P, tri: WeightedTriangle) -> float:
    """|sum of weighted unit pulls| at an interior P; at a vertex, the
    subgradient excess max(0, |pull from others| - own weight)."""
    P = np.asarray(P, dtype=np.float64)
    verts = tri.vertices
    wts = tri.weights
    d = np.linalg.norm(verts - P[None, :], axis=1)
    at = np.flatnonzero(d <= 1e-12)
    if at.size:
        i = int(at[0])
        pull = np.zeros(2)
        for j in range(3):
            if j != i:
                pull += wts[j] * (verts[j] - P) / d[j]
        return max(0.0, float(np.linalg.norm(pull)) - wts[i])
    nus = (verts - P[None, :]) / d[:, None]
    return float(np.linalg.norm(wts @ nus))


def steiner_point(tri: WeightedTriangle, tol: float = 1e-10, max_iter: int = 200_000):
    """Minimize the weighted vertex-distance sum by Weiszfeld iteration.

    Vertex capture is decided first by the subgradient test; otherwise the
    iteration starts at the weighted vertex centroid.  Returns (point, info)
    where info records capture/convergence and the first-order residual."""
    verts = tri.vertices
    wts = tri.weights
    for i in range(3):
        pull = np.zeros(2)
        ok = True
        for j in range(3):
            if j == i:
                continue
            dv = verts[j] - verts[i]
            dn = np.linalg.norm(dv)
            if dn <= 1e-15:
                ok = False
                break
            pull += wts[j] * dv / dn
        if ok and np.linalg.norm(pull) <= wts[i] + 1e-14:
            return verts[i].copy(), {
                "captured": True,
                "vertex": i,
                "converged": True,
                "iterations": 0,
                "residual": first_order_residual(verts[i], tri),
            }
    P = (wts @ verts) / wts.sum()
    it = 0
    res = first_order_residual(P, tri)
    while res > tol and it < max_iter:
        d = np.linalg.norm(verts - P[None, :], axis=1)
        if np.any(d <= 1e-15):
            P = P + 1e-12 * np.ones(2)
            d = np.linalg.norm(verts - P[None, :], axis=1)
        w = wts / d
        P = (w @ verts) / w.sum()
        res = first_order_residual(P, tri)
        it += 1
    return P, {
        "captured": False,
        "vertex": None,
        "converged": bool(res <= tol),
        "iterations": it,
        "residual": res,
    }


def young_angles(e12: float, e13: float, e23: float):
    """Junction angles (theta_1, theta_2, theta_3) from the tension triangle:
    law of cosines on side lengths (e23, e13, e12), supplementary map back.

    Requires the strict triangle inequality; the violating triple is named
    otherwise.  The returned angles sum to 2 pi up to rounding."""
    sides = {"e23": e23, "e13": e13, "e12": e12}
    for name, s in sides.items():
        others = sum(v for k, v in sides.items() if k != name)
        if not s < others:
            raise PartitionError(
                f"triangle inequality fails: {name} = {s} >= sum of the others = {others}"
            )
    a, b, c = e23, e13, e12  # opposite hat-theta_1, 2, 3
    hat1 = math.acos((b * b + c * c - a * a) / (2 * b * c))
    hat2 = math.acos((a * a + c * c - b * b) / (2 * a * c))
    hat3 = math.pi - hat1 - hat2
    return (math.pi - hat1, math.pi - hat2, math.pi - hat3)


# ---------------------------------------------------------------------------
# Serialization and the voxel-label adapter


def partition_to_json(part: PolygonalPartition) -> dict:
    segs = []
    rays = []
    for el in part.elements:
        if isinstance(el, Segment):
            segs.append(
                {
                    "phase_i": el.phase_i,
                    "phase_j": el.phase_j,
                    "endpoints": [el.p0.tolist(), el.p1.tolist()],
                }
            )
        else:
            rays.append(
                {
                    "phase_i": el.phase_i,
                    "phase_j": el.phase_j,
                    "origin": el.origin.tolist(),
                    "direction": el.direction.tolist(),
                }
            )
    return {"phases": part.phases, "segments": segs, "rays": rays}


def partition_from_json(data) -> PolygonalPartition:
    if isinstance(data, (str, bytes)):
        data = json.loads(data)
    elements: list = []
    for s in data.get("segments", []):
        elements.append(
            Segment(
                int(s["phase_i"]),
                int(s["phase_j"]),
                np.asarray(s["endpoints"][0], dtype=np.float64),
                np.asarray(s["endpoints"][1], dtype=np.float64),
            )
        )
    for r in data.get("rays", []):
        d = np.asarray(r["direction"], dtype=np.float64)
        elements.append(
            Ray(
                int(r["phase_i"]),
                int(r["phase_j"]),
                np.asarray(r["origin"], dtype=np.float64),
                d / np.linalg.norm(d),
            )
        )
    return PolygonalPartition(phases=int(data["phases"]), elements=tuple(elements))


def label_field(field, wells: np.ndarray) -> np.ndarray:
    """Nearest-well labels of a sampled field (diffuse-solver import)."""
    flat = field.flat()
    d = np.linalg.norm(flat[:, None, :] - np.asarray(wells)[None, :, :], axis=2)
    return np.argmin(d, axis=1).reshape(field.grid.shape)


def voxel_interface_energy(labels: np.ndarray, spacing: float, tensions: TensionMatrix) -> float:
    """Interface energy estimate from a label grid: one face per label-changing
    link.  Carries an O(h) mass bias (faces are axis-aligned); use the exact
    polygonal path when geometry is available."""
    total = 0.0
    dim = labels.ndim
    for a in range(dim):
        lo = tuple(slice(None, -1) if b == a else slice(None) for b in range(dim))
        hi = tuple(slice(1, None) if b == a else slice(None) for b in range(dim))
        li = labels[lo]
        lj = labels[hi]
        changed = li != lj
        if np.any(changed):
            total += float(np.sum(tensions.e[li[changed], lj[changed]])) * spacing ** (dim - 1)
    return total
