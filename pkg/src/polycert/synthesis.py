"""The certificate programs and the experiment drivers.

Five convex certificates of increasing geometric awareness, all consuming the
same experiment data:

* ``synth_lipschitz``  - nonlinearity minimization under global Lipschitz
  envelopes and worst-case disturbance aggregates.
* ``synth_dc_global``  - difference-of-convex certificate: per-facet curvature
  slack makes every facet map convex, vertex epigraphs bound the maxima,
  per-vertex dual rows tie in the linear parts (disturbance-free).
* ``synth_hybrid``     - splits each facet's nonlinear weights into an exactly
  convexified part and a Lipschitz-bounded residual; never more conservative
  than the pure Lipschitz route.
* ``synth_vertexwise`` - one program per safe-set vertex with curvature
  enforced only along facet tangent subspaces; supports unstructured,
  structured (zero slack on active facets) and active-only modes, the last
  requiring posterior sampled verification.
* ``synth_robust``     - disturbance-aware variant with per-vertex norm
  epigraphs entering the margin through geometry-dependent terms.

State-dependent curvature conditions are enforced at polytope vertices, which
is exact when all dictionary Hessians are affine in the state; otherwise a
dense grid is used and the result is flagged for mandatory verification.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from . import conic
from .basis import (LipschitzEnvelope, Remainder, lipschitz_on,
                    monomial_dictionary, remainder as make_remainder,
                    _grid_points)
from .conic import Program, SolverConfig, STATUS_INFEASIBLE, STATUS_OPTIMAL
from .plant import ClosedLoopRep, ExperimentData, closed_loop_rep
from .polytope import (Polytope, enumerate_vertices, facet_face,
                       max_vertex_norms, scale_facets,
                       sign_symmetric_partition, _vertex_active_sets)
from .runtime import GlobalController, VertexController
from .verify import (family_step_map, monte_carlo_contractivity, rep_step_map)


class InfeasibleAtLowerBracketError(RuntimeError):
    pass


class InfeasibleAtZeroError(RuntimeError):
    pass


@dataclass(frozen=True)
class CertificateSpec:
    """Everything a certificate consumes; the plant itself is never visible."""

    polytope: Polytope
    data: ExperimentData
    remainder: Remainder
    lam: float = 1.0
    h_w: float | None = None  # defaults to the experiment's bound
    input_polytope: tuple[np.ndarray, np.ndarray] | None = None
    lipschitz: LipschitzEnvelope | None = None
    hessian_grid: int = 5
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if not 0.0 < self.lam <= 1.0:
            raise ValueError(f"lambda must lie in (0, 1], got {self.lam}")

    @property
    def hw(self) -> float:
        return self.data.h_w if self.h_w is None else self.h_w

    def envelope(self) -> LipschitzEnvelope:
        return self.lipschitz or lipschitz_on(self.remainder, self.polytope)


@dataclass
class SynthesisResult:
    certificate: str
    mode: str | None
    status: str
    objective: float | None
    lam: float
    rep: ClosedLoopRep | None = None
    vertex_reps: dict[int, ClosedLoopRep] | None = None
    controller: object | None = None
    slacks: dict[str, np.ndarray] = field(default_factory=dict)
    duals: dict[str, np.ndarray] = field(default_factory=dict)
    needs_verification: bool = False
    infeasible_groups: list[str] | None = None
    solver_stats: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == STATUS_OPTIMAL

    def to_dict(self, spec: CertificateSpec | None = None) -> dict:
        out = {
            "certificate": self.certificate,
            "mode": self.mode,
            "status": self.status,
            "objective": self.objective,
            "lambda": self.lam,
            "needs_verification": self.needs_verification,
            "slacks": {k: np.asarray(v).tolist() for k, v in self.slacks.items()},
            "duals": {k: np.asarray(v).tolist() for k, v in self.duals.items()},
            "solver_stats": self.solver_stats,
        }
        if self.infeasible_groups is not None:
            out["infeasible_groups"] = self.infeasible_groups
        if self.rep is not None:
            out["K1"] = self.rep.K1.tolist()
            out["K2"] = self.rep.K2.tolist()
        if self.vertex_reps is not None:
            out["vertex_gains"] = {
                str(vid): {"K1": r.K1.tolist(), "K2": r.K2.tolist()}
                for vid, r in self.vertex_reps.items()
            }
        if spec is not None:
            out["polytope"] = spec.polytope.to_dict()
            out["dictionary"] = spec.remainder.dictionary.to_dict()
        return out


def result_to_controller(d: dict):
    """Rebuild a controller from a serialized result (monomial dictionaries)."""
    if "K1" not in d and "vertex_gains" not in d:
        raise ValueError(f"result carries no gains (status {d.get('status')!r})")
    P = Polytope.from_dict(d["polytope"])
    dic = monomial_dictionary(d["dictionary"]["monomials"], int(d["dictionary"]["n"]))
    rem = make_remainder(dic)
    if "vertex_gains" in d and d.get("mode") not in (None, "unstructured"):
        nv = len(enumerate_vertices(P))
        gains = []
        for vid in range(nv):
            g = d["vertex_gains"][str(vid)]
            gains.append((np.array(g["K1"]), np.array(g["K2"])))
        return VertexController(gains=tuple(gains), polytope=P, remainder=rem), P, rem
    return GlobalController(K1=np.array(d["K1"]), K2=np.array(d["K2"]),
                            remainder=rem), P, rem


# ---------------------------------------------------------------------------
# shared pieces

def _vertex_data(spec: CertificateSpec):
    P, rem = spec.polytope, spec.remainder
    verts = enumerate_vertices(P).vertices
    qs = rem.q_columns(verts.T).T  # (L, N)
    normsq = np.sum(verts ** 2, axis=1)
    return verts, qs, normsq


def _declare_gains(prog: Program, data: ExperimentData):
    G1 = prog.declare("G1", (data.T, data.n))
    G2 = prog.declare("G2", (data.T, data.N)) if data.N > 0 else None
    return G1, G2


def _consistency(prog: Program, data: ExperimentData, G1, G2) -> None:
    G = cp.hstack([G1, G2]) if G2 is not None else G1
    prog.add_eq(data.V0 @ G - np.eye(data.n + data.N), "data_consistency")


def _hessian_points(spec: CertificateSpec) -> tuple[np.ndarray, bool]:
    """Enforcement points for state-dependent curvature: vertices when the
    weighted Hessians are affine in x (exact), else vertices + dense grid with
    a mandatory posterior verification flag."""
    verts = enumerate_vertices(spec.polytope).vertices
    if spec.remainder.all_hessians_affine:
        return verts, False
    pts = _grid_points(spec.polytope, spec.hessian_grid)
    return np.vstack([verts, pts]), True


def _hessian_stack(rem: Remainder, points, tangent=None) -> list[list[np.ndarray]]:
    """Per point, the list of per-term Hessians (tangent-projected if given)."""
    out = []
    for v in points:
        Hs = [rem.hessian(k, v) for k in range(rem.N)]
        if tangent is not None:
            Hs = [tangent.T @ H @ tangent for H in Hs]
        cleaned = []
        for H in Hs:
            H = np.asarray(H, dtype=float)
            scale = np.abs(H).max(initial=1.0)
            H[np.abs(H) < 1e-12 * scale] = 0.0  # drop projection noise
            cleaned.append(H)
        out.append(cleaned)
    return out


def _add_curvature(prog: Program, stacks, w_row, eps_scalar, label: str) -> None:
    """Append  sum_k w_k H_k(v) + eps I >= 0  for every stacked point.

    Stacks that are diagonal at every point (the monomial-dictionary case)
    reduce exactly to linear inequalities on the diagonals, which keeps the
    whole program LP/SOCP and canonicalizes much faster.
    """
    all_diag = all(np.array_equal(H, np.diag(np.diag(H)))
                   for Hs in stacks for H in Hs)
    if all_diag:
        rows = []
        for Hs in stacks:
            if not Hs or Hs[0].shape[0] == 0:
                continue
            rows.append(np.array([np.diag(H) for H in Hs]))  # (N, d)
        if not rows:
            return
        D = np.hstack(rows)  # (N, total_diag_entries)
        expr = w_row @ D if D.shape[0] else np.zeros(D.shape[1])
        prog.add_ineq(-expr - eps_scalar, label)
        return
    for Hs in stacks:
        if not Hs:
            continue
        d = Hs[0].shape[0]
        if d == 0:
            continue
        terms = [w_row[k] * Hs[k] for k in range(len(Hs)) if np.any(Hs[k])]
        if d == 1:
            expr = sum(t[0, 0] for t in terms) if terms else 0.0
            prog.add_ineq(-expr - eps_scalar, label)
        else:
            expr = sum(terms) if terms else np.zeros((d, d))
            prog.add_psd(expr + eps_scalar * np.eye(d), label)


def _add_input_constraints(prog: Program, spec: CertificateSpec, G1, G2,
                           tag: str = "") -> None:
    """Membership of the policy input in its polytope, everywhere on the set.

    Per input row j: a quadratic overbound of the row map is forced convex via
    a curvature slack gamma_j, its vertex epigraph is capped by tau_j <= g_u,j.
    Rows with infinite offsets are vacuous and skipped.
    """
    if spec.input_polytope is None:
        return
    F_u, g_u = spec.input_polytope
    F_u = np.atleast_2d(np.asarray(F_u, dtype=float))
    g_u = np.asarray(g_u, dtype=float).ravel()
    data, rem = spec.data, spec.remainder
    verts, qs, normsq = _vertex_data(spec)
    points, _ = _hessian_points(spec)
    stacks = _hessian_stack(rem, points)
    a = F_u @ data.U0 @ G1  # (r_u, n) affine rows
    b = F_u @ data.U0 @ G2 if G2 is not None else None
    for j in range(F_u.shape[0]):
        if not np.isfinite(g_u[j]):
            continue
        gamma = prog.declare(f"gamma{tag}_{j}")
        tau = prog.declare(f"tau{tag}_{j}")
        prog.add_ineq(-gamma, f"input_gamma{tag}")
        prog.add_ineq(tau - g_u[j], f"input_margin{tag}")
        for ell in range(verts.shape[0]):
            psi = a[j] @ verts[ell]
            if b is not None and qs.shape[1] > 0:
                psi = psi + b[j] @ qs[ell]
            prog.add_ineq(psi + 0.5 * gamma * normsq[ell] - tau, f"input_epi{tag}")
        if b is not None:
            _add_curvature(prog, stacks, b[j], gamma, f"input_curv{tag}")


def _epigraph_block(W, qs, normsq, eps, t):
    """Matrix of all vertex epigraph rows,  <= 0 required."""
    L = qs.shape[0]
    E = 0.5 * cp.outer(eps, normsq) - cp.outer(t, np.ones(L))
    if W is not None and qs.shape[1] > 0:
        E = E + W @ qs.T
    return E


# public name for the input-constraint machinery; the gains are the handles
# into the program under construction
add_input_constraints = _add_input_constraints


def _refined_rep(data: ExperimentData, G1, G2) -> ClosedLoopRep:
    """Project solver output onto exact data consistency before packaging."""
    G1 = np.asarray(G1, dtype=float).reshape(data.T, data.n)
    G2 = (np.asarray(G2, dtype=float).reshape(data.T, data.N)
          if data.N > 0 else np.zeros((data.T, 0)))
    G = np.hstack([G1, G2])
    G = G + np.linalg.pinv(data.V0) @ (np.eye(data.n + data.N) - data.V0 @ G)
    return closed_loop_rep(data, G[:, :data.n], G[:, data.n:])


def _infeasible_result(name, mode, spec, prog, sol) -> SynthesisResult:
    groups = None
    if sol.status == STATUS_INFEASIBLE and spec.solver.diagnose:
        groups = prog.diagnose_infeasibility(spec.solver)
    return SynthesisResult(certificate=name, mode=mode, status=sol.status,
                           objective=None, lam=spec.lam,
                           infeasible_groups=groups, solver_stats=sol.solver_stats)


# ---------------------------------------------------------------------------
# certificate 1: Lipschitz nonlinearity minimization

def synth_lipschitz(spec: CertificateSpec) -> SynthesisResult:
    """Global-envelope certificate; the only one consuming disturbance data
    through worst-case aggregates nu_i = T h_w M_x ||F_i||_1."""
    P, data = spec.polytope, spec.data
    env = spec.envelope()
    Ls = env.scalar
    M_x, _ = max_vertex_norms(enumerate_vertices(P))
    F, g, s = P.F, P.g, P.s
    FX1 = F @ data.X1
    row1 = np.linalg.norm(F, ord=1, axis=1)
    hw = spec.hw

    prog = Program("lipschitz")
    G1, G2 = _declare_gains(prog, data)
    Ps = prog.declare("P", (s, s))
    eta = prog.declare("eta", s)
    _consistency(prog, data, G1, G2)
    prog.add_eq(Ps @ F - FX1 @ G1, "dual_match")
    prog.add_ineq(Ps @ g + eta - spec.lam * g, "margin")
    prog.add_ineq(-Ps, "dual_nonneg")
    prog.add_ineq(-eta, "eta_nonneg")

    bound = 0
    if G2 is not None:
        wnorm = prog.declare("wnorm", s)
        for i in range(s):
            prog.add_soc(FX1[i] @ G2, wnorm[i], "nonlinear_norm")
        bound = bound + Ls * M_x * wnorm
    if hw > 0:
        fro1 = prog.declare("fro1")
        prog.add_soc(cp.vec(G1, order="F"), fro1, "gain_norm")
        gain_term = fro1
        if G2 is not None:
            fro2 = prog.declare("fro2")
            prog.add_soc(cp.vec(G2, order="F"), fro2, "gain_norm")
            gain_term = gain_term + fro2 * Ls
        nu = data.T * hw * M_x * row1
        bound = bound + cp.multiply(nu, cp.promote(gain_term, (s,))) + hw * row1
    if not np.isscalar(bound) or bound != 0:
        prog.add_ineq(bound - eta, "lipschitz_bound")
    _add_input_constraints(prog, spec, G1, G2)
    prog.set_objective(cp.sum(eta))

    sol = prog.solve(spec.solver)
    if not sol.optimal:
        return _infeasible_result("thm1", None, spec, prog, sol)
    rep = _refined_rep(data, sol["G1"], sol["G2"] if G2 is not None else None)
    return SynthesisResult(
        certificate="thm1", mode=None, status=sol.status,
        objective=sol.objective_value, lam=spec.lam, rep=rep,
        controller=GlobalController(rep.K1, rep.K2, spec.remainder),
        slacks={"eta": sol["eta"]}, duals={"P": sol["P"]},
        solver_stats=sol.solver_stats)


# ---------------------------------------------------------------------------
# certificate 2: global DC convexification

def synth_dc_global(spec: CertificateSpec) -> SynthesisResult:
    """Per-facet curvature slack + vertex epigraphs + per-vertex dual rows."""
    if spec.hw > 0:
        raise ValueError("disturbance-free certificate: h_w must be 0 (use thm4)")
    P, data, rem = spec.polytope, spec.data, spec.remainder
    F, g, s = P.F, P.g, P.s
    FX1 = F @ data.X1
    verts, qs, normsq = _vertex_data(spec)
    points, needs_mc = _hessian_points(spec)
    stacks = _hessian_stack(rem, points)

    prog = Program("dc_global")
    G1, G2 = _declare_gains(prog, data)
    eps = prog.declare("eps", s)
    t = prog.declare("t", s)
    _consistency(prog, data, G1, G2)
    prog.add_ineq(-eps, "eps_nonneg")
    prog.add_ineq(-t, "t_nonneg")
    W = FX1 @ G2 if G2 is not None else None  # (s, N) facet nonlinear weights
    for ell in range(verts.shape[0]):
        P_l = prog.declare(f"P_{ell}", (s, s))
        prog.add_ineq(-P_l, "dual_nonneg")
        prog.add_eq(P_l @ F - FX1 @ G1 + cp.outer(eps, verts[ell]), "dual_match")
        prog.add_ineq(P_l @ g + t + 0.5 * normsq[ell] * eps - spec.lam * g, "margin")
    prog.add_ineq(_epigraph_block(W, qs, normsq, eps, t), "vertex_epigraph")
    if W is not None:
        for i in range(s):
            _add_curvature(prog, stacks, W[i], eps[i], "curvature")
    _add_input_constraints(prog, spec, G1, G2)
    prog.set_objective(cp.sum(eps))

    sol = prog.solve(spec.solver)
    if not sol.optimal:
        return _infeasible_result("thm2", None, spec, prog, sol)
    rep = _refined_rep(data, sol["G1"], sol["G2"] if G2 is not None else None)
    duals = {f"P_{ell}": sol[f"P_{ell}"] for ell in range(verts.shape[0])}
    return SynthesisResult(
        certificate="thm2", mode=None, status=sol.status,
        objective=sol.objective_value, lam=spec.lam, rep=rep,
        controller=GlobalController(rep.K1, rep.K2, spec.remainder),
        slacks={"eps": sol["eps"], "t": sol["t"]}, duals=duals,
        needs_verification=needs_mc, solver_stats=sol.solver_stats)


# ---------------------------------------------------------------------------
# certificate 3: hybrid exact-convexification / Lipschitz residual

def synth_hybrid(spec: CertificateSpec) -> SynthesisResult:
    """Split facet weights into a convexified part and a bounded residual.

    Sign-symmetric facet pairs share one convexity condition: the mirror's
    split is tied to the representative's, and a guard row keeps the mirror's
    epigraph above its Lipschitz residual (the tangent plane of the tied
    concave part at the origin is zero, so this is what soundness needs).
    """
    if spec.hw > 0:
        raise ValueError("disturbance-free certificate: h_w must be 0")
    P, data, rem = spec.polytope, spec.data, spec.remainder
    if np.any(P.g < 0):
        raise ValueError("hybrid certificate needs the origin inside the set (g >= 0)")
    F, g, s = P.F, P.g, P.s
    if data.N == 0:
        raise ValueError("hybrid certificate needs a nonempty dictionary")
    FX1 = F @ data.X1
    env = spec.envelope()
    Lq = env.per_component
    verts, qs, _ = _vertex_data(spec)
    _, R0 = max_vertex_norms(enumerate_vertices(P))
    part = sign_symmetric_partition(P)
    points, needs_mc = _hessian_points(spec)
    stacks = _hessian_stack(rem, points)

    prog = Program("hybrid")
    G1, G2 = _declare_gains(prog, data)
    Pm = prog.declare("P", (s, s))
    t = prog.declare("t", s)
    Z = prog.declare("z", (s, data.N))
    R = prog.declare("r", (s, data.N))
    K = prog.declare("k", (s, data.N))
    A = prog.declare("a", (s, data.N))
    _consistency(prog, data, G1, G2)
    prog.add_eq(Pm @ F - FX1 @ G1, "dual_match")
    prog.add_eq(FX1 @ G2 - Z - R, "weight_split")
    for i, j in part.pair_map.items():
        prog.add_eq(Z[j] + Z[i], "mirror_tie")
        prog.add_eq(R[j] + R[i], "mirror_tie")
    LZ = cp.multiply(np.tile(Lq, (s, 1)), Z + R)
    LR = cp.multiply(np.tile(Lq, (s, 1)), R)
    prog.add_ineq(LR - K, "residual_box")
    prog.add_ineq(-LR - K, "residual_box")
    prog.add_ineq(LZ - A, "total_box")
    prog.add_ineq(-LZ - A, "total_box")
    prog.add_ineq(cp.sum(K, axis=1) - cp.sum(A, axis=1), "dominance")
    prog.add_ineq(-K, "k_nonneg")
    prog.add_ineq(-A, "a_nonneg")
    prog.add_ineq(-Pm, "dual_nonneg")
    for ell in range(verts.shape[0]):
        slack = g - F @ verts[ell]  # >= 0
        prog.add_ineq(Z @ qs[ell] - Pm @ slack + R0 * cp.sum(K, axis=1) - t,
                      "vertex_epigraph")
    for j in part.pair_map.values():
        prog.add_ineq(R0 * cp.sum(K[j]) - t[j], "mirror_guard")
    prog.add_ineq(Pm @ g + t - spec.lam * g, "margin")
    for i in (*part.plus_set, *part.zero_set):
        _add_curvature(prog, stacks, Z[i], 0.0, "convexity")
    _add_input_constraints(prog, spec, G1, G2)
    prog.set_objective(cp.sum(K))

    sol = prog.solve(spec.solver)
    if not sol.optimal:
        return _infeasible_result("p1", None, spec, prog, sol)
    rep = _refined_rep(data, sol["G1"], sol["G2"])
    return SynthesisResult(
        certificate="p1", mode=None, status=sol.status,
        objective=sol.objective_value, lam=spec.lam, rep=rep,
        controller=GlobalController(rep.K1, rep.K2, spec.remainder),
        slacks={"t": sol["t"], "z": sol["z"], "r": sol["r"],
                "k": sol["k"], "a": sol["a"]},
        duals={"P": sol["P"]}, needs_verification=needs_mc,
        solver_stats=sol.solver_stats)


# ---------------------------------------------------------------------------
# certificate 4: face-restricted vertex-wise programs

def _vertexwise_program(spec: CertificateSpec, support: tuple[int, ...],
                        incident_only: bool = False) -> tuple[Program, bool]:
    """One face-restricted program.

    ``support`` lists the facets carrying curvature slack: those get a
    tangent curvature constraint on their own facet face and the matching
    quadratic term in the vertex epigraphs.  Facets outside the support are
    covered by raw vertex epigraphs only (their slack is pinned to zero and
    no convexity is claimed for them).

    ``incident_only`` keeps, for each facet, only the epigraph rows at that
    facet's own vertices (the active-only relaxation); every other
    facet/vertex pairing is left to posterior verification.
    """
    P, data, rem = spec.polytope, spec.data, spec.remainder
    F, g, s = P.F, P.g, P.s
    FX1 = F @ data.X1
    verts, qs, normsq = _vertex_data(spec)
    needs_mc = not rem.all_hessians_affine

    prog = Program("vertexwise")
    G1, G2 = _declare_gains(prog, data)
    Pm = prog.declare("P", (s, s))
    t = prog.declare("t", s)
    eps = prog.declare("eps", s)
    _consistency(prog, data, G1, G2)
    prog.add_eq(Pm @ F - FX1 @ G1, "dual_match")
    prog.add_ineq(Pm @ g + t - spec.lam * g, "margin")
    prog.add_ineq(-Pm, "dual_nonneg")
    prog.add_ineq(-t, "t_nonneg")
    prog.add_ineq(-eps, "eps_nonneg")
    unsupported = [i for i in range(s) if i not in support]
    if unsupported:
        prog.add_eq(eps[unsupported], "eps_pinned")
    W = FX1 @ G2 if G2 is not None else None
    E = _epigraph_block(W, qs, normsq, eps, t)
    if incident_only:
        active_sets = _vertex_active_sets(P)
        for ell in range(verts.shape[0]):
            rows = sorted(active_sets[ell])
            if rows:
                prog.add_ineq(E[rows, ell], "vertex_epigraph")
    else:
        prog.add_ineq(E, "vertex_epigraph")
    if W is not None:
        for i in support:
            face = facet_face(P, i)
            Tb = face.tangent_basis
            if Tb.shape[1] == 0:
                continue
            pts = enumerate_vertices(P).vertices[list(face.vertex_indices)]
            stacks = _hessian_stack(rem, pts, tangent=Tb)
            _add_curvature(prog, stacks, W[i], eps[i], "face_curvature")
    _add_input_constraints(prog, spec, G1, G2)
    objective = cp.sum(eps)
    if incident_only and W is not None:
        # the slack objective is flat over the unchecked facet weights; a tiny
        # deterministic pull toward small weights keeps the returned gains
        # tame so the posterior verification has something worth checking
        wabs = prog.declare("wabs", W.shape)
        prog.add_ineq(W - wabs, "weight_tiebreak")
        prog.add_ineq(-W - wabs, "weight_tiebreak")
        objective = objective + 1e-4 * cp.sum(wabs)
    prog.set_objective(objective)
    return prog, needs_mc


def synth_vertexwise(spec: CertificateSpec, mode: str = "unstructured",
                     jobs: int = 1) -> SynthesisResult:
    """Vertex-wise certificate family with face-tangent curvature.

    Modes differ in how much of the epigraph/slack machinery each vertex's
    program keeps: all of it (unstructured; the program is then
    vertex-independent and solved once, giving identical gains everywhere),
    zero slack on the facets active at the program's vertex (structured,
    vertex-dependent gains), or epigraph rows only where facet and vertex are
    incident (active_only, which abandons coverage of the non-incident
    pairings and therefore requires the posterior verification pipeline).
    Vertices with equal active sets share one program.
    """
    if spec.hw > 0:
        raise ValueError("disturbance-free certificate: h_w must be 0 (use thm4)")
    if mode not in ("unstructured", "structured", "active_only"):
        raise ValueError(f"unknown mode {mode!r}")
    P = spec.polytope
    verts = enumerate_vertices(P).vertices
    active_sets = _vertex_active_sets(P)
    all_facets = tuple(range(P.s))

    keys: dict[int, tuple] = {}
    for ell in range(verts.shape[0]):
        act = tuple(sorted(active_sets[ell]))
        if mode == "unstructured":
            keys[ell] = all_facets
        elif mode == "structured":
            keys[ell] = tuple(i for i in range(P.s) if i not in act)
        else:  # active_only: constraint set is vertex-independent
            keys[ell] = all_facets

    distinct = sorted(set(keys.values()))
    programs = {key: _vertexwise_program(spec, support=key,
                                         incident_only=mode == "active_only")
                for key in distinct}

    def run(key):
        prog, _ = programs[key]
        return key, prog.solve(spec.solver)

    if jobs > 1 and len(distinct) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            solutions = dict(pool.map(run, distinct))
    else:
        solutions = dict(run(k) for k in distinct)

    statuses = {key: sol.status for key, sol in solutions.items()}
    if any(st != STATUS_OPTIMAL for st in statuses.values()):
        overall = (STATUS_INFEASIBLE
                   if any(st == STATUS_INFEASIBLE for st in statuses.values())
                   else "numerical_failure")
        stats = {str(k): s for k, s in statuses.items()}
        return SynthesisResult(certificate="thm3", mode=mode, status=overall,
                               objective=None, lam=spec.lam,
                               solver_stats={"per_vertex_status": stats})

    reps: dict[tuple, ClosedLoopRep] = {}
    needs_mc = mode == "active_only" or not spec.remainder.all_hessians_affine
    slacks, duals = {}, {}
    objective = 0.0
    for key, sol in solutions.items():
        G2v = sol["G2"] if spec.data.N > 0 else None
        reps[key] = _refined_rep(spec.data, sol["G1"], G2v)
        objective += sol.objective_value
        tag = "all" if mode == "unstructured" else "s" + "_".join(map(str, key or ("none",)))
        slacks[f"eps_{tag}"] = sol["eps"]
        slacks[f"t_{tag}"] = sol["t"]
        duals[f"P_{tag}"] = sol["P"]

    vertex_reps = {ell: reps[keys[ell]] for ell in range(verts.shape[0])}
    if len(distinct) == 1:
        rep = reps[distinct[0]]
        controller = GlobalController(rep.K1, rep.K2, spec.remainder)
    else:
        rep = None
        gains = tuple((vertex_reps[ell].K1, vertex_reps[ell].K2)
                      for ell in range(verts.shape[0]))
        controller = VertexController(gains=gains, polytope=P,
                                      remainder=spec.remainder)
    return SynthesisResult(
        certificate="thm3", mode=mode, status=STATUS_OPTIMAL,
        objective=objective, lam=spec.lam, rep=rep, vertex_reps=vertex_reps,
        controller=controller, slacks=slacks, duals=duals,
        needs_verification=needs_mc,
        solver_stats={"programs_solved": len(distinct)})


# ---------------------------------------------------------------------------
# certificate 5: disturbance-aware DC certificate

def synth_robust(spec: CertificateSpec) -> SynthesisResult:
    """Robust certificate: disturbance enters the vertex epigraphs through
    d_{T,l} = T h_w F_n (xi1_l + xi2_l + 1) with per-vertex norm epigraphs."""
    P, data, rem = spec.polytope, spec.data, spec.remainder
    F, g, s = P.F, P.g, P.s
    FX1 = F @ data.X1
    verts, qs, normsq = _vertex_data(spec)
    Fn = np.linalg.norm(F, ord=1, axis=1)
    hw = spec.hw
    points, needs_mc = _hessian_points(spec)
    stacks = _hessian_stack(rem, points)
    L = verts.shape[0]

    prog = Program("robust")
    G1, G2 = _declare_gains(prog, data)
    Pm = prog.declare("P", (s, s))
    t = prog.declare("t", s)
    eps = prog.declare("eps", s)
    xi1 = prog.declare("xi1", L)
    xi2 = prog.declare("xi2", L)
    _consistency(prog, data, G1, G2)
    prog.add_eq(Pm @ F - FX1 @ G1, "dual_match")
    prog.add_ineq(Pm @ g + t - spec.lam * g, "margin")
    prog.add_ineq(-Pm, "dual_nonneg")
    prog.add_ineq(-eps, "eps_nonneg")
    prog.add_ineq(-xi1, "xi_nonneg")
    prog.add_ineq(-xi2, "xi_nonneg")
    W = FX1 @ G2 if G2 is not None else None
    for ell in range(L):
        prog.add_soc(G1 @ verts[ell], xi1[ell], "state_norm_epi")
        if G2 is not None and qs.shape[1] > 0:
            prog.add_soc(G2 @ qs[ell], xi2[ell], "lift_norm_epi")
        else:
            prog.add_ineq(-xi2[ell], "lift_norm_epi")
    disturbance = data.T * hw * cp.outer(Fn, xi1 + xi2 + np.ones(L))
    prog.add_ineq(_epigraph_block(W, qs, normsq, eps, t) + disturbance,
                  "vertex_epigraph")
    if W is not None:
        for i in range(s):
            _add_curvature(prog, stacks, W[i], eps[i], "curvature")
    _add_input_constraints(prog, spec, G1, G2)
    prog.set_objective(cp.sum(eps))

    sol = prog.solve(spec.solver)
    if not sol.optimal:
        return _infeasible_result("thm4", None, spec, prog, sol)
    rep = _refined_rep(data, sol["G1"], sol["G2"] if G2 is not None else None)
    return SynthesisResult(
        certificate="thm4", mode=None, status=sol.status,
        objective=sol.objective_value, lam=spec.lam, rep=rep,
        controller=GlobalController(rep.K1, rep.K2, spec.remainder),
        slacks={"eps": sol["eps"], "t": sol["t"], "xi1": sol["xi1"],
                "xi2": sol["xi2"]},
        duals={"P": sol["P"]}, needs_verification=needs_mc,
        solver_stats=sol.solver_stats)


CERTIFICATES = {
    "thm1": "synth_lipschitz",
    "thm2": "synth_dc_global",
    "p1": "synth_hybrid",
    "thm3": "synth_vertexwise",
    "thm4": "synth_robust",
}


def synth(spec: CertificateSpec, certificate: str, mode: str | None = None,
          jobs: int = 1) -> SynthesisResult:
    """Dispatch to one of the five certificates."""
    if certificate == "thm1":
        return synth_lipschitz(spec)
    if certificate == "thm2":
        return synth_dc_global(spec)
    if certificate in ("p1", "prop1"):
        return synth_hybrid(spec)
    if certificate == "thm3":
        return synth_vertexwise(spec, mode=mode or "unstructured", jobs=jobs)
    if certificate == "thm4":
        return synth_robust(spec)
    raise ValueError(f"unknown certificate {certificate!r}")


# ---------------------------------------------------------------------------
# experiment drivers

def _step_map_of(result: SynthesisResult, spec: CertificateSpec):
    if result.vertex_reps is not None and result.rep is None:
        return family_step_map(spec.polytope, result.vertex_reps, spec.remainder)
    return rep_step_map(result.rep, spec.remainder)


def _certified(spec: CertificateSpec, certificate: str, mode, jobs,
               verify_n: int, boundary_frac: float, verify_seed: int):
    """Synthesize and, where the certificate does not stand alone, verify."""
    res = synth(spec, certificate, mode=mode, jobs=jobs)
    if not res.optimal:
        return False, res, None
    if not res.needs_verification:
        return True, res, None
    report = monte_carlo_contractivity(
        spec.polytope, _step_map_of(res, spec), spec.lam,
        n_samples=verify_n, boundary_frac=boundary_frac, seed=verify_seed)
    return report.passed, res, report


@dataclass
class RadiusResult:
    r_star: float
    result: SynthesisResult
    report: object | None
    history: list[tuple[float, bool]]


def maximize_radius(spec: CertificateSpec, certificate: str, mode: str | None = None,
                    bracket: tuple[float, float] = (0.1, 2.0), tol: float = 5e-3,
                    max_iter: int = 30, jobs: int = 1, verify_n: int = 2000,
                    boundary_frac: float = 0.7, verify_seed: int = 0) -> RadiusResult:
    """Largest uniform scaling of the safe-set offsets that stays certified.

    Bisection over r with the template polytope's offsets scaled by r; in
    verification-gated settings a candidate only counts as feasible once the
    sampled check passes.
    """
    template = spec.polytope
    history: list[tuple[float, bool]] = []

    def attempt(r: float):
        sub = dataclasses.replace(spec, polytope=scale_facets(template, r),
                                  lipschitz=None)
        ok, res, report = _certified(sub, certificate, mode, jobs,
                                     verify_n, boundary_frac, verify_seed)
        history.append((r, ok))
        return ok, res, report

    lo, hi = bracket
    ok, best, best_report = attempt(lo)
    if not ok:
        raise InfeasibleAtLowerBracketError(
            f"{certificate} infeasible at r = {lo}")
    best_r = lo
    ok_hi, res_hi, rep_hi = attempt(hi)
    if ok_hi:
        return RadiusResult(hi, res_hi, rep_hi, history)
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        ok, res, report = attempt(mid)
        if ok:
            lo, best_r, best, best_report = mid, mid, res, report
        else:
            hi = mid
    return RadiusResult(best_r, best, best_report, history)


@dataclass(frozen=True)
class SweepTemplate:
    """Plant family for coefficient sweeps; data is re-collected per probe."""

    plant_builder: object  # (e1, e2) -> PlantModel
    e1: float
    e2: float
    polytope: Polytope
    T: int
    seed: int
    lam: float = 1.0
    input_polytope: tuple | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)


@dataclass
class SweepResult:
    magnitude: float
    result: SynthesisResult
    history: list[tuple[float, bool, float | None]]


def sweep_coefficient(template: SweepTemplate, which: str, certificate: str,
                      mode: str | None = None, bracket: tuple[float, float] = (0.0, 10.0),
                      tol: float = 1e-2, max_iter: int = 30, jobs: int = 1,
                      verify_n: int = 2000, boundary_frac: float = 0.7,
                      verify_seed: int = 0) -> SweepResult:
    """Largest admissible coefficient magnitude at the template's fixed set.

    A fresh experiment is collected per probed coefficient (the plant changes),
    always from the same seed so probes stay comparable.
    """
    if which not in ("e1", "e2"):
        raise ValueError("which must be 'e1' or 'e2'")
    from .plant import collect_experiment

    base = template.e1 if which == "e1" else template.e2
    sign = -1.0 if base == 0 else float(np.sign(base))
    history: list[tuple[float, bool, float | None]] = []

    def attempt(mag: float):
        e1 = sign * mag if which == "e1" else template.e1
        e2 = sign * mag if which == "e2" else template.e2
        plant = template.plant_builder(e1, e2)
        data = collect_experiment(plant, template.T, polytope=template.polytope,
                                  seed=template.seed)
        sub = CertificateSpec(polytope=template.polytope, data=data,
                              remainder=plant.remainder, lam=template.lam,
                              input_polytope=template.input_polytope,
                              solver=template.solver)
        ok, res, _ = _certified(sub, certificate, mode, jobs,
                                verify_n, boundary_frac, verify_seed)
        history.append((mag, ok, res.objective))
        return ok, res

    lo, hi = bracket
    ok, best = attempt(lo)
    if not ok:
        raise InfeasibleAtZeroError(f"{certificate} infeasible at |{which}| = {lo}")
    best_m = lo
    ok_hi, res_hi = attempt(hi)
    if ok_hi:
        return SweepResult(hi, res_hi, history)
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        ok, res = attempt(mid)
        if ok:
            lo, best_m, best = mid, mid, res
        else:
            hi = mid
    return SweepResult(best_m, best, history)
