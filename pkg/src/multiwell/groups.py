"""Finite reflection groups acting on R^d (d <= 3) as explicit matrices.

Groups are generated by closure from their reflection generators; orders
here never exceed 48, so matrix lists and brute-force orbit/stabilizer
computations are the whole story.  Also houses the region decomposition
used for initial data (base-well region and its group translates) and the
equivariant projection of sampled fields.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import fields

MATRIX_TOL = 1e-9  # closure dedup: products of exact reflections only accumulate rounding
POINT_TOL = 1e-8


def _key(mat: np.ndarray) -> tuple:
    return tuple(np.round(mat, 9).ravel())


def _close(generators: list[np.ndarray], cap: int = 400) -> np.ndarray:
    d = generators[0].shape[0]
    mats = [np.eye(d)]
    seen = {_key(mats[0])}
    frontier = list(mats)
    while frontier:
        new = []
        for a in frontier:
            for b in generators:
                c = a @ b
                k = _key(c)
                if k not in seen:
                    seen.add(k)
                    new.append(c)
        mats.extend(new)
        frontier = new
        if len(mats) > cap:
            raise ValueError(f"group closure exceeded {cap} elements")
    mats.sort(key=_key)
    return np.array(mats)


def _is_reflection(g: np.ndarray, tol: float = 1e-9) -> bool:
    d = g.shape[0]
    return (
        abs(np.linalg.det(g) + 1.0) < 1e-9
        and np.max(np.abs(g - g.T)) < tol
        and abs(np.trace(g) - (d - 2)) < 1e-9
    )


def _reflection_normal(g: np.ndarray) -> np.ndarray:
    # (I - g)/2 = n n^T for a reflection; take the dominant column
    M = (np.eye(g.shape[0]) - g) / 2.0
    col = M[:, np.argmax(np.sum(M * M, axis=0))]
    return col / np.linalg.norm(col)


_CHAMBER_CANDIDATES = [
    np.array([0.1, 0.22, 0.35]),
    np.array([0.313, 0.117, 0.529]),
    np.array([0.271, 0.718, 0.141]),
]


def _chamber_normals(elements: np.ndarray, interior_point: np.ndarray | None = None) -> np.ndarray:
    """Oriented mirror normals of all reflections; the open chamber is
    {x : <x, n> > 0 for every normal}."""
    d = elements.shape[1]
    normals = []
    seen = set()
    for g in elements:
        if _is_reflection(g):
            n = _reflection_normal(g)
            # n and -n define the same mirror: canonicalize the sign
            lead = n[np.flatnonzero(np.abs(n) > 1e-9)[0]]
            n = n * np.sign(lead)
            k = _key(n[None, :])
            if k not in seen:
                seen.add(k)
                normals.append(n)
    if not normals:
        return np.zeros((0, d))
    normals = np.array(normals)
    candidates = [interior_point] if interior_point is not None else []
    candidates += [c[:d] for c in _CHAMBER_CANDIDATES]
    for c in candidates:
        dots = normals @ c
        if np.min(np.abs(dots)) > 1e-6:
            return normals * np.sign(dots)[:, None]
    raise ValueError("no generic chamber point found; pass interior_point")


@dataclass(frozen=True)
class FundamentalRegion:
    """Open simplicial cone {x : <x, n_w> > 0 for all wall normals}.

    The normal list may be redundant (all mirrors of the group, oriented
    toward one chamber); the region is the same."""

    wall_normals: np.ndarray

    def contains(self, x, tol: float = 0.0) -> bool:
        return bool(np.all(self.wall_normals @ np.asarray(x, float) > tol))

    def contains_closure(self, x, tol: float = 1e-9) -> bool:
        return bool(np.all(self.wall_normals @ np.asarray(x, float) >= -tol))

    def min_wall_dot(self, x) -> float:
        return float(np.min(self.wall_normals @ np.asarray(x, float)))


@dataclass(frozen=True)
class ReflectionGroup:
    name: str
    dimension: int
    generators: np.ndarray  # (k, d, d) reflections
    elements: np.ndarray  # (order, d, d), closed under products, lex sorted
    wall_normals: np.ndarray  # oriented mirror normals of one chamber

    @property
    def order(self) -> int:
        return self.elements.shape[0]

    @property
    def fundamental_region(self) -> FundamentalRegion:
        return FundamentalRegion(self.wall_normals)

    def __iter__(self):
        return iter(self.elements)

    def contains(self, mat: np.ndarray) -> bool:
        k = _key(np.asarray(mat, float))
        return any(_key(g) == k for g in self.elements)


def _build_group(name: str, generators: list[np.ndarray], interior_point=None) -> ReflectionGroup:
    gens = [np.asarray(g, dtype=np.float64) for g in generators]
    d = gens[0].shape[0]
    for r in gens:
        if not _is_reflection(r):
            raise ValueError("generators must be reflections (r^2 = I, det r = -1)")
        if np.max(np.abs(r @ r - np.eye(d))) > 1e-12:
            raise ValueError("generator is not an involution")
    elements = _close(gens)
    walls = _chamber_normals(elements, interior_point)
    return ReflectionGroup(
        name=name,
        dimension=d,
        generators=np.array(gens),
        elements=elements,
        wall_normals=walls,
    )


def reflection_matrix(normal) -> np.ndarray:
    n = np.asarray(normal, dtype=np.float64)
    n = n / np.linalg.norm(n)
    return np.eye(n.shape[0]) - 2.0 * np.outer(n, n)


def build_dihedral(k: int) -> ReflectionGroup:
    """Symmetries of the regular k-gon: order 2k, generated by reflections
    across the lines at angles 0 and pi/k."""
    if k < 2:
        raise ValueError("dihedral index must be >= 2")
    r0 = reflection_matrix([0.0, 1.0])  # mirror = x-axis
    th = np.pi / k + np.pi / 2.0
    r1 = reflection_matrix([np.cos(th), np.sin(th)])  # mirror at angle pi/k
    mid = np.pi / (2.0 * k)
    return _build_group(f"dihedral_{k}", [r0, r1], interior_point=np.array([np.cos(mid), np.sin(mid)]))


def build_tetrahedral() -> ReflectionGroup:
    """Full symmetry group (order 24) of the regular tetrahedron with vertices
    (+-sqrt(2/3), 0, 1/sqrt(3)) and (0, +-sqrt(2/3), -1/sqrt(3))."""
    s = np.sqrt(2.0 / 3.0)
    t = 1.0 / np.sqrt(3.0)
    verts = np.array([[s, 0, t], [-s, 0, t], [0, s, -t], [0, -s, -t]])
    gens = [
        reflection_matrix(verts[0] - verts[1]),
        reflection_matrix(verts[2] - verts[3]),
        reflection_matrix(verts[0] - verts[2]),
    ]
    return _build_group("tetrahedral", gens)


def build_cubic() -> ReflectionGroup:
    """Symmetries of the coordinate cube: the 48 signed permutation matrices."""
    gens = [
        reflection_matrix([1.0, 0.0, 0.0]),
        reflection_matrix([1.0, -1.0, 0.0]),
        reflection_matrix([0.0, 1.0, -1.0]),
    ]
    # orient the chamber to the simplex 0 < x1 < x2 < x3
    return _build_group("cubic", gens, interior_point=np.array([0.1, 0.22, 0.35]))


def stabilizer(group: ReflectionGroup, p, tol: float = POINT_TOL) -> ReflectionGroup:
    """Subgroup of elements fixing the point p."""
    p = np.asarray(p, dtype=np.float64)
    d = group.dimension
    keep = np.array([g for g in group.elements if np.linalg.norm(g @ p - p) <= tol])
    refl = [g for g in keep if _is_reflection(g)]
    gens = np.array(refl) if refl else np.zeros((0, d, d))
    normals = np.array([_reflection_normal(g) for g in refl]) if refl else np.zeros((0, d))
    return ReflectionGroup(
        name=f"{group.name}_stab",
        dimension=group.dimension,
        generators=gens,
        elements=keep,
        wall_normals=normals,
    )


def orbit(group: ReflectionGroup, p, tol: float = POINT_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    pts: list[np.ndarray] = []
    for g in group.elements:
        q = g @ p
        if not any(np.linalg.norm(q - r) <= tol for r in pts):
            pts.append(q)
    return np.array(pts)


def orbit_count(group: ReflectionGroup, p) -> int:
    return orbit(group, p).shape[0]


def symmetrize(field: fields.VectorField, group: ReflectionGroup) -> fields.VectorField:
    """Project a sampled field onto the equivariant class u(g x) = g u(x)."""
    _check_square(field, group)
    return fields.symmetrize_pairs(field, fields.as_pairs(group))


def equivariance_residual(field: fields.VectorField, group: ReflectionGroup) -> float:
    _check_square(field, group)
    return fields.equivariance_residual_pairs(field, fields.as_pairs(group))


def _check_square(field: fields.VectorField, group: ReflectionGroup):
    if field.grid.dim != group.dimension or field.m != group.dimension:
        raise ValueError(
            f"need field dimensions d = n = m = {group.dimension}, got "
            f"n={field.grid.dim}, m={field.m}"
        )


# ---------------------------------------------------------------------------
# Region decomposition: D = interior of the union of stabilizer translates of
# the closed chamber; its group copies partition space, one per well.


@dataclass(frozen=True)
class RegionMap:
    group: ReflectionGroup
    base_well: np.ndarray
    stabilizer: ReflectionGroup
    wells: np.ndarray  # (N, d), base well first, remainder lex sorted
    coset_reps: np.ndarray  # (N, d, d), lex-smallest rep mapping base -> wells[i]

    @property
    def orbit_size(self) -> int:
        return self.wells.shape[0]

    def well_index(self, p, tol: float = POINT_TOL) -> int:
        p = np.asarray(p, dtype=np.float64)
        d = np.linalg.norm(self.wells - p[None, :], axis=1)
        i = int(np.argmin(d))
        if d[i] > tol:
            raise ValueError("point is not a well of this region map")
        return i

    def region_of(self, x, tol: float = 1e-9):
        """Label of the region copy containing x: (well index, coset rep).

        Wall ties resolve to the smallest well index (base well first)."""
        x = np.asarray(x, dtype=np.float64)
        dots = self.wells @ x
        top = float(dots.max())
        idx = int(np.flatnonzero(dots >= top - tol)[0])
        return idx, self.coset_reps[idx]

    def wall_distance(self, x) -> float:
        """Distance from x to the boundary of its region copy."""
        x = np.asarray(x, dtype=np.float64)
        i, _ = self.region_of(x)
        dists = []
        for j in range(self.orbit_size):
            if j == i:
                continue
            dw = self.wells[i] - self.wells[j]
            dists.append(float(np.dot(x, dw) / np.linalg.norm(dw)))
        return min(dists)

    @cached_property
    def _pair_cache(self) -> dict:
        return {}

    def pair_rep(self, i: int, j: int, adj: int) -> np.ndarray:
        """Lex-smallest group element mapping (base, wells[adj]) -> (wells[i], wells[j])."""
        key = (i, j, adj)
        cache = self._pair_cache
        if key not in cache:
            a1 = self.wells[0]
            a2 = self.wells[adj]
            best = None
            for g in self.group.elements:
                if (
                    np.linalg.norm(g @ a1 - self.wells[i]) <= POINT_TOL
                    and np.linalg.norm(g @ a2 - self.wells[j]) <= POINT_TOL
                ):
                    best = g
                    break  # elements are lex sorted
            if best is None:
                raise ValueError(
                    f"no group element maps the base well pair to wells ({i}, {j}); "
                    "the connection profile does not match this region geometry"
                )
            cache[key] = best
        return cache[key]

    def pair_stabilizer_elements(self, adj: int) -> np.ndarray:
        a1, a2 = self.wells[0], self.wells[adj]
        keep = [
            g
            for g in self.group.elements
            if np.linalg.norm(g @ a1 - a1) <= POINT_TOL and np.linalg.norm(g @ a2 - a2) <= POINT_TOL
        ]
        return np.array(keep)

    def symmetrized_profile_values(self, profile, adj: int) -> np.ndarray:
        """Profile values projected onto the symmetry class of the well pair:
        invariant under the pair stabilizer, and satisfying U(-t) = r U(t)
        for the wall reflection r swapping the two wells."""
        vals = np.asarray(profile.values, dtype=np.float64)
        spair = self.pair_stabilizer_elements(adj)
        acc = np.zeros_like(vals)
        for s in spair:
            acc += vals @ s.T
        vals = acc / len(spair)
        n = self.wells[0] - self.wells[adj]
        r = reflection_matrix(n)
        if not self.group.contains(r):
            raise ValueError("base and adjacent wells are not related by a group reflection")
        return 0.5 * (vals + vals[::-1] @ r.T)


def build_region_map(group: ReflectionGroup, base_well) -> RegionMap:
    base = np.asarray(base_well, dtype=np.float64)
    stab = stabilizer(group, base)
    pts = orbit(group, base)
    others = sorted(
        (p for p in pts if np.linalg.norm(p - base) > POINT_TOL),
        key=lambda p: tuple(np.round(p, 9)),
    )
    wells = np.vstack([base[None, :]] + [p[None, :] for p in others])
    reps = []
    for w in wells:
        rep = None
        for g in group.elements:  # lex sorted, first hit is lex-smallest
            if np.linalg.norm(g @ base - w) <= POINT_TOL:
                rep = g
                break
        reps.append(rep)
    return RegionMap(
        group=group,
        base_well=base,
        stabilizer=stab,
        wells=wells,
        coset_reps=np.array(reps),
    )


# ---------------------------------------------------------------------------
# JSON serialization: {name, dimension, generators, elements} with row-major rows.


def group_to_json(group: ReflectionGroup) -> dict:
    return {
        "name": group.name,
        "dimension": group.dimension,
        "generators": [g.ravel().tolist() for g in group.generators],
        "elements": [g.ravel().tolist() for g in group.elements],
    }


def group_from_json(data) -> ReflectionGroup:
    if isinstance(data, (str, bytes)):
        data = json.loads(data)
    d = int(data["dimension"])
    gens = np.array([np.asarray(g, dtype=np.float64).reshape(d, d) for g in data["generators"]])
    elements = np.array([np.asarray(g, dtype=np.float64).reshape(d, d) for g in data["elements"]])
    return ReflectionGroup(
        name=data["name"],
        dimension=d,
        generators=gens,
        elements=elements,
        wall_normals=_chamber_normals(elements),
    )


GROUP_BUILDERS = {
    "dihedral_2": lambda: build_dihedral(2),
    "dihedral_3": lambda: build_dihedral(3),
    "dihedral_4": lambda: build_dihedral(4),
    "dihedral_6": lambda: build_dihedral(6),
    "tetrahedral": build_tetrahedral,
    "cubic": build_cubic,
}


def get_group(name: str) -> ReflectionGroup:
    if name.startswith("dihedral_"):
        return build_dihedral(int(name.split("_", 1)[1]))
    if name not in GROUP_BUILDERS:
        raise KeyError(f"unknown group {name!r}")
    return GROUP_BUILDERS[name]()
