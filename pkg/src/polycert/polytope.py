"""Halfspace polytopes: vertices, faces, tangent bases, gauges, facet scaling.

A polytope is stored as the pair (F, g) describing {x : F x <= g}.  All
geometry here is desk-scale (n <= 6, a few dozen facets): vertices come from
exhaustive facet combinations, faces from vertex/facet incidence.  Exactness
over scalability.
"""

from __future__ import annotations

import itertools
import json
import threading
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

DEFAULT_TOL = 1e-9
VERTEX_ENUM_MAX_DIM = 6


class PolytopeError(ValueError):
    pass


class EmptySetError(PolytopeError):
    pass


class UnboundedError(PolytopeError):
    pass


class ZeroRowError(PolytopeError):
    pass


class OutsideSetError(PolytopeError):
    pass


class NonpositiveOffsetError(PolytopeError):
    pass


class NonpositiveScaleError(PolytopeError):
    pass


class DimensionTooLargeError(PolytopeError):
    pass


@dataclass(frozen=True)
class VertexSet:
    """Vertices of a polytope in deterministic (lexicographic) order."""

    vertices: np.ndarray  # (num_vertices, n)
    indices: tuple[int, ...]

    def __len__(self) -> int:
        return self.vertices.shape[0]


@dataclass(frozen=True)
class Face:
    """A face of a polytope, identified by its active facet set.

    ``tangent_basis`` has orthonormal columns spanning the affine hull
    directions of the face (the nullspace of the active facet normals).
    """

    active_facets: tuple[int, ...]
    vertex_indices: tuple[int, ...]
    tangent_basis: np.ndarray  # (n, dim)

    @property
    def dim(self) -> int:
        return self.tangent_basis.shape[1]


@dataclass(frozen=True)
class FacetPartition:
    """Sign-symmetric pairing of facets.

    ``plus_set`` holds one representative per pair F_j = -F_i, ``pair_map``
    maps each representative to its mirror, ``zero_set`` the unpaired facets.
    """

    plus_set: tuple[int, ...]
    zero_set: tuple[int, ...]
    pair_map: dict[int, int]

    @property
    def mirror_set(self) -> tuple[int, ...]:
        return tuple(sorted(self.pair_map.values()))


def _linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None):
    return scipy.optimize.linprog(
        c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
        bounds=bounds if bounds is not None else (None, None),
        method="highs",
    )


class Polytope:
    """Bounded, nonempty polytope {x : F x <= g}.

    Immutable after construction; the face cache uses a lock so instances can
    be shared across workers.
    """

    def __init__(self, F, g, tol: float = DEFAULT_TOL):
        F = np.atleast_2d(np.asarray(F, dtype=float))
        g = np.asarray(g, dtype=float).ravel()
        if F.ndim != 2 or F.shape[0] != g.shape[0]:
            raise PolytopeError(
                f"shape mismatch: F is {F.shape}, g has length {g.shape[0]}")
        if tol < 0:
            raise PolytopeError("tol must be nonnegative")
        row_norms = np.linalg.norm(F, axis=1)
        if np.any(row_norms <= tol):
            raise ZeroRowError(f"zero rows in F: {np.where(row_norms <= tol)[0].tolist()}")
        self.F = F
        self.g = g
        self.tol = float(tol)
        self.F.flags.writeable = False
        self.g.flags.writeable = False
        self._check_nonempty()
        self._check_bounded()
        self._lock = threading.Lock()
        self._vertex_set: VertexSet | None = None
        self._face_cache: dict[frozenset, Face] = {}
        self._faces: tuple[Face, ...] | None = None
        self._partition: FacetPartition | None = None

    # -- validation ------------------------------------------------------

    def _check_nonempty(self) -> None:
        res = _linprog(np.zeros(self.n), A_ub=self.F, b_ub=self.g)
        if res.status == 2:
            raise EmptySetError("no feasible point satisfies F x <= g")
        if not res.success:  # pragma: no cover - defensive
            raise PolytopeError(f"feasibility LP failed: {res.message}")

    def _check_bounded(self) -> None:
        # bounded iff the recession cone {d : F d <= 0} is trivial
        n = self.n
        for k in range(n):
            for sign in (1.0, -1.0):
                c = np.zeros(n)
                c[k] = -sign
                res = _linprog(c, A_ub=self.F, b_ub=np.zeros(self.s),
                               bounds=[(-1.0, 1.0)] * n)
                if res.success and -res.fun > 1e-7:
                    raise UnboundedError(
                        f"recession direction along axis {k} (sign {sign:+.0f})")

    # -- basic queries ----------------------------------------------------

    @property
    def n(self) -> int:
        return self.F.shape[1]

    @property
    def s(self) -> int:
        return self.F.shape[0]

    def residuals(self, x) -> np.ndarray:
        return self.F @ np.asarray(x, dtype=float) - self.g

    def contains(self, x, tol: float | None = None) -> bool:
        tol = self.tol if tol is None else tol
        return bool(np.max(self.residuals(x)) <= tol)

    def active_set(self, x, tol: float | None = None) -> tuple[int, ...]:
        tol = self.tol if tol is None else tol
        r = self.residuals(x)
        if np.max(r) > tol:
            raise OutsideSetError(f"point outside set by {np.max(r):.3e}")
        return tuple(int(i) for i in np.where(r >= -tol)[0])

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {"F": self.F.tolist(), "g": self.g.tolist(), "tol": self.tol}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Polytope":
        return cls(np.array(d["F"]), np.array(d["g"]), float(d.get("tol", DEFAULT_TOL)))

    @classmethod
    def from_json(cls, s: str) -> "Polytope":
        return cls.from_dict(json.loads(s))


def from_halfspaces(F, g, tol: float = DEFAULT_TOL) -> Polytope:
    """Validated polytope from halfspace data (raises on empty/unbounded/zero rows)."""
    return Polytope(F, g, tol)


def box(radii, center=None, tol: float = DEFAULT_TOL) -> Polytope:
    """Axis-aligned box |x_i - c_i| <= radii_i, facet order (+e_1..+e_n, -e_1..-e_n)."""
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    n = radii.shape[0]
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    F = np.vstack([np.eye(n), -np.eye(n)])
    g = np.concatenate([c + radii, radii - c])
    return Polytope(F, g, tol)


def enumerate_vertices(P: Polytope) -> VertexSet:
    """Exact vertex enumeration by n-combinations of facets with feasibility filtering."""
    if P._vertex_set is not None:
        return P._vertex_set
    n, s = P.n, P.s
    if n > VERTEX_ENUM_MAX_DIM:
        raise DimensionTooLargeError(
            f"vertex enumeration limited to n <= {VERTEX_ENUM_MAX_DIM}, got {n}")
    feas_tol = max(P.tol, 1e-9)
    candidates: list[np.ndarray] = []
    for combo in itertools.combinations(range(s), n):
        A = P.F[list(combo)]
        b = P.g[list(combo)]
        try:
            x = np.linalg.solve(A, b)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(x)):
            continue
        scale = 1.0 + np.abs(b).max()
        if np.max(np.abs(A @ x - b)) > 1e-7 * scale:
            continue  # near-singular combination
        if np.max(P.F @ x - P.g) <= feas_tol:
            candidates.append(x)
    if not candidates:
        raise PolytopeError("no vertices found; polytope may be degenerate")
    # deterministic lexicographic order, then tolerance-dedupe
    candidates.sort(key=lambda v: tuple(v))
    vertices: list[np.ndarray] = []
    for v in candidates:
        dup = any(np.max(np.abs(v - u)) <= max(feas_tol * 10, 1e-8) for u in vertices)
        if not dup:
            vertices.append(v)
    V = np.array(vertices)
    V.flags.writeable = False
    vs = VertexSet(vertices=V, indices=tuple(range(len(vertices))))
    P._vertex_set = vs
    return vs


def _tangent_basis(P: Polytope, active: tuple[int, ...]) -> np.ndarray:
    if len(active) == 0:
        return np.eye(P.n)
    ns = scipy.linalg.null_space(P.F[list(active)])
    if ns.size == 0:
        return np.zeros((P.n, 0))
    # snap SVD noise to exact zeros and fix column signs for reproducibility
    ns[np.abs(ns) < 1e-12] = 0.0
    for j in range(ns.shape[1]):
        lead = np.argmax(np.abs(ns[:, j]))
        if ns[lead, j] < 0:
            ns[:, j] = -ns[:, j]
    return ns


def _vertex_active_sets(P: Polytope) -> list[frozenset[int]]:
    V = enumerate_vertices(P).vertices
    tol = max(P.tol, 1e-7 * (1.0 + np.abs(P.g).max()))
    return [frozenset(np.where(np.abs(P.F @ v - P.g) <= tol)[0].tolist()) for v in V]


def _face_from_vertex_ids(P: Polytope, vids: frozenset[int],
                          vertex_active: list[frozenset[int]]) -> Face:
    active = frozenset.intersection(*[vertex_active[i] for i in vids])
    key = frozenset(vids)
    with P._lock:
        cached = P._face_cache.get(key)
    if cached is not None:
        return cached
    face = Face(
        active_facets=tuple(sorted(active)),
        vertex_indices=tuple(sorted(vids)),
        tangent_basis=_tangent_basis(P, tuple(sorted(active))),
    )
    with P._lock:
        P._face_cache[key] = face
    return face


def minimal_face(P: Polytope, x) -> Face:
    """Minimal face containing x: active facets, their vertices, tangent basis.

    Interior points get the full-dimensional face (no active facets, identity
    tangent basis, all vertices).
    """
    active = P.active_set(x)
    vs = enumerate_vertices(P)
    vertex_active = _vertex_active_sets(P)
    aset = frozenset(active)
    vids = frozenset(i for i in vs.indices if aset <= vertex_active[i])
    if not active:
        return Face(active_facets=(), vertex_indices=tuple(sorted(vids)),
                    tangent_basis=np.eye(P.n))
    face = Face(
        active_facets=tuple(sorted(active)),
        vertex_indices=tuple(sorted(vids)),
        tangent_basis=_tangent_basis(P, tuple(sorted(active))),
    )
    with P._lock:
        P._face_cache.setdefault(frozenset(vids), face)
    return face


def proper_faces(P: Polytope) -> tuple[Face, ...]:
    """All proper nonempty faces (facets, ..., edges, vertices).

    Generated by intersecting facets with known faces; every proper face of a
    polytope is an intersection of the facets containing it.
    """
    if P._faces is not None:
        return P._faces
    vertex_active = _vertex_active_sets(P)
    nv = len(vertex_active)
    facet_vsets = {
        i: frozenset(v for v in range(nv) if i in vertex_active[v])
        for i in range(P.s)
    }
    seen: dict[frozenset[int], Face] = {}
    queue = [vs for vs in facet_vsets.values() if vs]
    while queue:
        vids = queue.pop()
        if vids in seen:
            continue
        seen[vids] = _face_from_vertex_ids(P, vids, vertex_active)
        for i in range(P.s):
            sub = vids & facet_vsets[i]
            if sub and sub != vids and sub not in seen:
                queue.append(sub)
    faces = sorted(seen.values(), key=lambda f: (len(f.active_facets), f.active_facets))
    P._faces = tuple(faces)
    return P._faces


def facet_face(P: Polytope, i: int) -> Face:
    """The face of facet i (its vertices and tangent subspace)."""
    vertex_active = _vertex_active_sets(P)
    vids = frozenset(v for v in range(len(vertex_active)) if i in vertex_active[v])
    if not vids:
        raise PolytopeError(f"facet {i} is redundant (supports no vertex)")
    return _face_from_vertex_ids(P, vids, vertex_active)


def sign_symmetric_partition(P: Polytope) -> FacetPartition:
    """Pair facets with exactly opposite normals; unpaired facets go to I_0."""
    if P._partition is not None:
        return P._partition
    tol = max(P.tol, 1e-12)
    paired: set[int] = set()
    pair_map: dict[int, int] = {}
    for i in range(P.s):
        if i in paired:
            continue
        for j in range(i + 1, P.s):
            if j in paired:
                continue
            if np.max(np.abs(P.F[j] + P.F[i])) <= tol * (1.0 + np.abs(P.F[i]).max()):
                pair_map[i] = j
                paired.update((i, j))
                break
    zero = tuple(i for i in range(P.s) if i not in paired)
    part = FacetPartition(plus_set=tuple(sorted(pair_map)), zero_set=zero,
                          pair_map=pair_map)
    P._partition = part
    return part


def chebyshev_center(P: Polytope) -> np.ndarray:
    """Center of the largest inscribed ball (cached)."""
    cached = getattr(P, "_cheb_center", None)
    if cached is not None:
        return cached
    norms = np.linalg.norm(P.F, axis=1)
    c = np.zeros(P.n + 1)
    c[-1] = -1.0
    A = np.hstack([P.F, norms[:, None]])
    res = _linprog(c, A_ub=A, b_ub=P.g,
                   bounds=[(None, None)] * P.n + [(0.0, None)])
    if not res.success:  # pragma: no cover - validated polytopes are solvable
        raise PolytopeError(f"Chebyshev LP failed: {res.message}")
    center = res.x[:P.n]
    center.flags.writeable = False
    P._cheb_center = center
    return center


def minkowski_gauge(P: Polytope, x) -> float:
    """V(x) = max_i F_i x / g_i; requires g > 0 (origin interior)."""
    if np.any(P.g <= 0):
        raise NonpositiveOffsetError("gauge needs g > 0 elementwise")
    return float(np.max((P.F @ np.asarray(x, dtype=float)) / P.g))


def scale_facets(P: Polytope, r) -> Polytope:
    """Facet-wise scaled set {x : F x <= diag(r) g}; scalar r scales uniformly."""
    r = np.asarray(r, dtype=float)
    if r.ndim == 0:
        r = np.full(P.s, float(r))
    if r.shape != (P.s,):
        raise PolytopeError(f"scale vector must have length {P.s}")
    if np.any(r <= 0):
        raise NonpositiveScaleError("facet scales must be positive")
    return Polytope(P.F, r * P.g, P.tol)


def max_vertex_norms(V: VertexSet) -> tuple[float, float]:
    """Largest Euclidean vertex norm, exposed as (M_x, R_0); the two coincide."""
    if len(V) == 0:
        raise PolytopeError("empty vertex set")
    m = float(np.max(np.linalg.norm(V.vertices, axis=1)))
    return m, m


def vertices_to_csv(V: VertexSet, path) -> None:
    header = ",".join(f"x{i + 1}" for i in range(V.vertices.shape[1]))
    rows = [header]
    for v in V.vertices:
        rows.append(",".join(np.format_float_positional(c, unique=True) for c in v))
    with open(path, "w") as fh:
        fh.write("\n".join(rows) + "\n")
