"""Independent certification checks.

Facet maps evaluate the safe-set inequalities on the one-step successor;
certificates are cross-examined by a dense grid oracle (n <= 3) and by
seeded Monte-Carlo sampling concentrated on the set boundary.  Nothing here
reuses the synthesis path: maps are rebuilt from data products and evaluated
directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .basis import Remainder, curvature_operator
from .plant import ClosedLoopRep
from .polytope import (DimensionTooLargeError, Polytope, enumerate_vertices,
                       facet_face, proper_faces)
from .runtime import face_weights

GRID_DEFAULTS = {1: 401, 2: 201, 3: 61}


@dataclass(frozen=True)
class FacetMap:
    """H_i(x) = c_i^T x + w_i^T Q(x), the i-th facet inequality after one step."""

    index: int
    c: np.ndarray  # (n,)
    w: np.ndarray  # (N,)
    remainder: Remainder
    offset: float  # g_i of the certification polytope

    def value(self, x) -> float:
        return float(self.c @ np.asarray(x, dtype=float) + self.w @ self.remainder.q(x))

    def value_columns(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = self.c @ X
        if self.w.size:
            out = out + self.w @ self.remainder.q_columns(X)
        return out

    def hessian(self, x) -> np.ndarray:
        return curvature_operator(self.remainder, self.w, x)


def facet_maps(rep: ClosedLoopRep, P: Polytope, rem: Remainder) -> list[FacetMap]:
    """One map per facet from the closed-loop data matrices M1 = X1 G1, M2 = X1 G2."""
    return [
        FacetMap(index=i, c=P.F[i] @ rep.M1, w=P.F[i] @ rep.M2,
                 remainder=rem, offset=float(P.g[i]))
        for i in range(P.s)
    ]


def rep_step_map(rep: ClosedLoopRep, rem: Remainder):
    """One-step successor map of a single-gain representation."""
    def step(x):
        x = np.asarray(x, dtype=float)
        return rep.M1 @ x + rep.M2 @ rem.q(x)
    return step


def family_step_map(P: Polytope, vertex_reps: dict[int, ClosedLoopRep], rem: Remainder):
    """Successor map of the face-supported interpolated policy."""
    ids = sorted(vertex_reps)
    first = vertex_reps[ids[0]]
    if all(vertex_reps[i] is first for i in ids):
        return rep_step_map(first, rem)

    def step(x):
        x = np.asarray(x, dtype=float)
        q = rem.q(x)
        theta = face_weights(P, x)
        out = np.zeros(P.n)
        for vid, th in theta.items():
            r = vertex_reps[vid]
            out = out + th * (r.M1 @ x + r.M2 @ q)
        return out
    return step


def plant_step_map(plant, controller, P: Polytope):
    """True closed loop (ground-truth oracle side), disturbance-free."""
    from .runtime import eval_controller

    def step(x):
        return plant.step(x, eval_controller(controller, P, x))
    return step


def grid_max_oracle(fmap: FacetMap, P: Polytope,
                    points_per_axis: int | None = None) -> tuple[float, np.ndarray]:
    """Dense-grid maximum of a facet map over P with a local refinement pass."""
    n = P.n
    if n > 3:
        raise DimensionTooLargeError("grid oracle supports n <= 3")
    ppa = points_per_axis or GRID_DEFAULTS[n]
    V = enumerate_vertices(P).vertices
    lo, hi = V.min(axis=0), V.max(axis=0)
    axes = [np.linspace(lo[k], hi[k], ppa) for k in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=0)  # (n, #pts)
    inside = np.all(P.F @ pts <= P.g[:, None] + P.tol + 1e-12, axis=0)
    pts = pts[:, inside]
    vals = fmap.value_columns(pts)
    best = int(np.argmax(vals))
    x_best, v_best = pts[:, best].copy(), float(vals[best])
    # refinement: shrinking coordinate search within ~2 grid cells
    cell = (hi - lo) / max(ppa - 1, 1)
    step = 2.0 * cell
    for _ in range(20):
        improved = False
        for k in range(n):
            for sgn in (1.0, -1.0):
                cand = x_best.copy()
                cand[k] += sgn * step[k]
                if np.max(P.F @ cand - P.g) > P.tol:
                    continue
                v = fmap.value(cand)
                if v > v_best:
                    x_best, v_best = cand, v
                    improved = True
        if not improved:
            step *= 0.5
            if np.max(step) < 1e-12:
                break
    return v_best, x_best


def lipschitz_bound_vs_exact(a11: float, a12: float, c_u: float,
                             r1: float, r2: float) -> tuple[float, float]:
    """Worst-case facet bound: global Lipschitz envelope vs vertex-exact value.

    For the planar one-sided benchmark with a11, a12, c_u >= 0 the facet map is
    nondecreasing, so the exact maximum sits at (r1, r2).
    """
    lip = a11 * r1 + (a12 + 3.0 * abs(c_u) * r2 ** 2) * r2
    exact = a11 * r1 + (a12 + c_u * r2 ** 2) * r2
    return lip, exact


@dataclass(frozen=True)
class VerificationReport:
    lam: float
    samples: int
    boundary_fraction: float
    worst_margin: np.ndarray  # per facet: max over samples of F_i x+ - lam g_i
    violations: tuple  # (x, facet, margin) triples
    passed: bool
    confidence_note: str
    seed: int

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "samples": self.samples,
            "boundary_fraction": self.boundary_fraction,
            "worst_margin": [float(v) for v in self.worst_margin],
            "violations": [
                {"x": [float(c) for c in x], "facet": int(i), "margin": float(m)}
                for x, i, m in self.violations
            ],
            "passed": self.passed,
            "confidence_note": self.confidence_note,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def violations_to_csv(self, path) -> None:
        lines = ["facet,margin," + ",".join(f"x{i+1}" for i in range(
            len(self.violations[0][0]) if self.violations else 0))]
        for x, i, m in self.violations:
            lines.append(f"{i},{m}," + ",".join(
                np.format_float_positional(c, unique=True) for c in x))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def sample_boundary(P: Polytope, n_samples: int, rng) -> np.ndarray:
    """Boundary points: facet chosen uniformly, then a Dirichlet-weighted
    combination of that facet's face vertices (exactly uniform on simplices)."""
    V = enumerate_vertices(P).vertices
    faces = [facet_face(P, i) for i in range(P.s)]
    out = np.zeros((n_samples, P.n))
    for j in range(n_samples):
        i = int(rng.integers(P.s))
        vids = faces[i].vertex_indices
        w = rng.dirichlet(np.ones(len(vids)))
        out[j] = w @ V[list(vids)]
    return out


def sample_interior(P: Polytope, n_samples: int, rng) -> np.ndarray:
    """Interior points by rejection from the bounding box (Dirichlet fallback)."""
    V = enumerate_vertices(P).vertices
    lo, hi = V.min(axis=0), V.max(axis=0)
    out = np.zeros((n_samples, P.n))
    for j in range(n_samples):
        ok = False
        for _ in range(1000):
            x = rng.uniform(lo, hi)
            if np.all(P.F @ x <= P.g):
                out[j], ok = x, True
                break
        if not ok:
            w = rng.dirichlet(np.ones(V.shape[0]))
            out[j] = w @ V
    return out


def monte_carlo_contractivity(P: Polytope, step_map, lam: float,
                              n_samples: int = 2000, boundary_frac: float = 0.7,
                              seed: int = 0, tol: float = 1e-9) -> VerificationReport:
    """Sampled check of F x+ <= lam g, boundary-weighted; deterministic per seed."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    n_b = int(round(boundary_frac * n_samples))
    pts = np.vstack([
        sample_boundary(P, n_b, rng),
        sample_interior(P, n_samples - n_b, rng),
    ])
    worst = np.full(P.s, -np.inf)
    violations = []
    bound = lam * P.g
    for x in pts:
        margins = P.F @ np.asarray(step_map(x), dtype=float) - bound
        worst = np.maximum(worst, margins)
        bad = np.where(margins > tol)[0]
        for i in bad:
            violations.append((x.copy(), int(i), float(margins[i])))
    passed = len(violations) == 0
    eps = 1.0 - 0.001 ** (1.0 / n_samples)
    note = (f"{n_samples} samples, {len(violations)} violations; with zero "
            f"violations the violation probability is at most {eps:.4f} "
            f"with confidence 99.9% (scenario bound)")
    return VerificationReport(lam=lam, samples=n_samples,
                              boundary_fraction=boundary_frac,
                              worst_margin=worst, violations=tuple(violations),
                              passed=passed, confidence_note=note, seed=seed)


def dc_majorizer(beta, phi, c, x, x_ref) -> float:
    """Convex majorizer R(x, x_ref) of c^T (beta - phi) built from tangent planes.

    ``beta`` and ``phi`` are (value, jacobian) callable pairs for vector maps
    that are convex componentwise on the evaluation set.  Components with
    c_k >= 0 keep beta exact and linearize phi at x_ref; components with
    c_k < 0 linearize beta and keep phi exact.
    """
    beta_val, beta_jac = beta
    phi_val, phi_jac = phi
    c = np.asarray(c, dtype=float).ravel()
    x = np.asarray(x, dtype=float)
    x_ref = np.asarray(x_ref, dtype=float)
    dx = x - x_ref
    bx, bref = np.atleast_1d(beta_val(x)), np.atleast_1d(beta_val(x_ref))
    px, pref = np.atleast_1d(phi_val(x)), np.atleast_1d(phi_val(x_ref))
    Jb = np.atleast_2d(beta_jac(x_ref))
    Jp = np.atleast_2d(phi_jac(x_ref))
    total = 0.0
    for k, ck in enumerate(c):
        if ck >= 0:
            total += ck * (bx[k] - pref[k] - Jp[k] @ dx)
        else:
            total += ck * (bref[k] + Jb[k] @ dx - px[k])
    return float(total)
