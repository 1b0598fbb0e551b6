"""Controller evaluation and closed-loop simulation.

Two controller variants: a single global gain pair, and a vertex family whose
input interpolates per-vertex gains with weights supported on the minimal face
containing the state.  Simulations run against the ground-truth plant and log
the Minkowski-gauge trace of the certification polytope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .basis import Remainder
from .plant import PlantModel
from .polytope import (OutsideSetError, Polytope, chebyshev_center,
                       enumerate_vertices, minimal_face, minkowski_gauge)
from . import conic

DRIFT_FACTOR = 10.0
RECONSTRUCTION_TOL = 1e-8


@dataclass(frozen=True)
class GlobalController:
    """u(x) = K1 x + K2 Q(x)."""

    K1: np.ndarray  # (m, n)
    K2: np.ndarray  # (m, N)
    remainder: Remainder

    @property
    def m(self) -> int:
        return self.K1.shape[0]


@dataclass(frozen=True)
class VertexController:
    """One gain pair per polytope vertex, blended over the minimal face."""

    gains: tuple[tuple[np.ndarray, np.ndarray], ...]  # aligned with vertex order
    polytope: Polytope
    remainder: Remainder

    @property
    def m(self) -> int:
        return self.gains[0][0].shape[0]


Controller = GlobalController | VertexController


_LP_OPTS = {"primal_feasibility_tolerance": 1e-10,
            "dual_feasibility_tolerance": 1e-9}


def face_weights(P: Polytope, x, tol: float | None = None) -> dict[int, float]:
    """Convex weights over the minimal-face vertices reproducing x.

    Solves a min-max-weight LP (flattest combination); remaining ties are
    broken by a deterministic index-weighted second stage.  Points within
    tolerance of a face are snapped onto its affine hull first so the hull
    equality stays consistent at machine precision.
    """
    x = np.asarray(x, dtype=float)
    face = minimal_face(P, x)
    vids = list(face.vertex_indices)
    V = enumerate_vertices(P).vertices[vids]  # (k, n)
    k = len(vids)
    if k == 1:
        return {vids[0]: 1.0}
    if face.active_facets:
        T = face.tangent_basis
        anchor = V[0]
        x_eval = anchor + T @ (T.T @ (x - anchor))
    else:
        x_eval = x
    n = P.n
    # stage 1: minimize the largest weight
    c = np.zeros(k + 1)
    c[-1] = 1.0
    A_eq = np.zeros((n + 1, k + 1))
    A_eq[:n, :k] = V.T
    A_eq[n, :k] = 1.0
    b_eq = np.concatenate([x_eval, [1.0]])
    A_ub = np.hstack([np.eye(k), -np.ones((k, 1))])
    b_ub = np.zeros(k)
    bounds = [(0.0, None)] * k + [(0.0, 1.0)]
    res = scipy.optimize.linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                                 bounds=bounds, method="highs", options=_LP_OPTS)
    if not res.success:
        raise OutsideSetError(f"no convex combination reproduces x: {res.message}")
    t_star = float(res.x[-1])
    # stage 2: deterministic tie-break under the min-max cap
    c2 = np.arange(1.0, k + 1.0)
    A_ub2 = np.eye(k)
    b_ub2 = np.full(k, t_star + 1e-9)
    res2 = scipy.optimize.linprog(c2, A_ub=A_ub2, b_ub=b_ub2,
                                  A_eq=A_eq[:, :k], b_eq=b_eq,
                                  bounds=[(0.0, None)] * k, method="highs",
                                  options=_LP_OPTS)
    theta = res2.x if res2.success else res.x[:k]
    theta = np.maximum(theta, 0.0)
    theta = theta / theta.sum()
    err = float(np.linalg.norm(V.T @ theta - x_eval))
    if err > RECONSTRUCTION_TOL:
        raise OutsideSetError(f"face-weight reconstruction error {err:.3e}")
    return {vid: float(th) for vid, th in zip(vids, theta)}


def project_to(P: Polytope, x) -> np.ndarray:
    """Euclidean projection onto P (small SOCP), pulled strictly inside.

    Solver feasibility tolerance can leave the projected point a hair
    outside, so any residual excess is absorbed by stepping toward the
    Chebyshev center (a perturbation of the same order as the excess).
    """
    x = np.asarray(x, dtype=float)
    if P.contains(x):
        return x
    prog = conic.Program("project")
    y = prog.declare("y", P.n)
    t = prog.declare("t")
    prog.add_ineq(P.F @ y - P.g)
    prog.add_soc(y - x, t)
    prog.set_objective(t)
    sol = prog.solve()
    if not sol.optimal:  # pragma: no cover - tiny QP should not fail
        raise RuntimeError(f"projection failed: {sol.status}")
    y = sol["y"].reshape(P.n)
    excess = float(np.max(P.residuals(y)))
    if excess > 0:
        center = chebyshev_center(P)
        gap = float(np.min(P.g - P.F @ center))
        alpha = min(1.0, 2.0 * excess / max(excess + gap, 1e-300))
        y = y + alpha * (center - y)
    return y


def eval_controller(c: Controller, P: Polytope, x) -> np.ndarray:
    """Controller input at x; vertex families require x in P (up to small drift)."""
    x = np.asarray(x, dtype=float)
    if isinstance(c, GlobalController):
        return c.K1 @ x + c.K2 @ c.remainder.q(x)
    r = P.residuals(x)
    if np.max(r) > DRIFT_FACTOR * P.tol:
        raise OutsideSetError(f"state outside set by {np.max(r):.3e}")
    xq = project_to(P, x) if np.max(r) > P.tol else x
    theta = face_weights(P, xq)
    q = c.remainder.q(x)
    u = np.zeros(c.m)
    for vid, th in theta.items():
        K1, K2 = c.gains[vid]
        u = u + th * (K1 @ x + K2 @ q)
    return u


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray  # (k+1, n)
    inputs: np.ndarray  # (k, m)
    gauges: np.ndarray  # (k+1,), NaN when the polytope has nonpositive offsets
    violated_at: int | None

    def to_csv(self, path) -> None:
        n = self.states.shape[1]
        m = self.inputs.shape[1] if self.inputs.size else 0
        header = ["t"] + [f"x{i + 1}" for i in range(n)] + \
            [f"u{j + 1}" for j in range(m)] + ["V"]
        lines = [",".join(header)]
        for t, xs in enumerate(self.states):
            row = [str(t)]
            row += [np.format_float_positional(v, unique=True) for v in xs]
            if t < self.inputs.shape[0]:
                row += [np.format_float_positional(v, unique=True) for v in self.inputs[t]]
            else:
                row += [""] * m
            row.append(np.format_float_positional(self.gauges[t], unique=True))
            lines.append(",".join(row))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def simulate_closed_loop(p: PlantModel, c: Controller, P: Polytope, x0,
                         steps: int, disturbance_gen=None, seed: int = 0) -> Trajectory:
    """Closed-loop rollout with gauge trace; stops at the first exit from P."""
    rng = np.random.default_rng(seed)
    has_gauge = bool(np.all(P.g > 0))
    states = [np.asarray(x0, dtype=float)]
    inputs: list[np.ndarray] = []
    violated_at = None
    for t in range(steps):
        x = states[-1]
        if not P.contains(x, tol=DRIFT_FACTOR * P.tol):
            violated_at = t
            break
        u = eval_controller(c, P, x)
        if disturbance_gen is not None:
            w = np.atleast_1d(disturbance_gen(rng, t))
        elif p.h_w > 0:
            w = rng.uniform(-p.h_w, p.h_w, size=p.n)
        else:
            w = None
        states.append(p.step(x, u, w))
        inputs.append(np.atleast_1d(u))
    S = np.array(states)
    gauges = np.array([minkowski_gauge(P, x) if has_gauge else np.nan for x in S])
    U = np.array(inputs) if inputs else np.zeros((0, c.m))
    return Trajectory(states=S, inputs=U, gauges=gauges, violated_at=violated_at)
