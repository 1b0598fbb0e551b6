"""Solver-agnostic conic program builder with one solve boundary.

Thin layer over cvxpy: named variable blocks, linear equalities/inequalities,
second-order-cone and (small) PSD constraints, a minimized affine objective.
Every Optimal solution is re-audited by direct substitution before it is
returned; infeasibility is a meaningful outcome, not an error.  The default
backend is Clarabel (native interior-point conic solver), with SCS fallback.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

PSD_MAX_SIDE = 10

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_NUMERICAL = "numerical_failure"


class ConicError(ValueError):
    pass


class ShapeMismatchError(ConicError):
    pass


class DuplicateNameError(ConicError):
    pass


@dataclass
class SolverConfig:
    solver: str = "CLARABEL"
    fallbacks: tuple[str, ...] = ("SCS",)
    audit_tol: float = 1e-6
    verbose: bool = False
    diagnose: bool = False  # elastic-relaxation group report on infeasibility
    solver_opts: dict = field(default_factory=dict)


@dataclass
class Solution:
    status: str
    values: dict[str, np.ndarray]
    objective_value: float | None
    solver_stats: dict

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    @property
    def optimal(self) -> bool:
        return self.status == STATUS_OPTIMAL


class Program:
    """A conic program under construction.  Single-owner while building."""

    def __init__(self, name: str = "program"):
        self.name = name
        self._vars: dict[str, cp.Variable] = {}
        # entries: (kind, payload, label) with payload cvxpy expressions
        self._constraints: list[tuple[str, object, str]] = []
        self._objective: cp.Expression | None = None

    # -- construction ------------------------------------------------------

    def declare(self, name: str, shape=()) -> cp.Variable:
        if name in self._vars:
            raise DuplicateNameError(f"variable {name!r} already declared")
        v = cp.Variable(shape, name=name)
        self._vars[name] = v
        return v

    def add_eq(self, expr, label: str = "eq") -> None:
        """Record expr == 0 elementwise."""
        self._constraints.append(("eq", cp.Constant(expr) if np.isscalar(expr) else expr, label))

    def add_ineq(self, expr, label: str = "ineq") -> None:
        """Record expr <= 0 elementwise."""
        self._constraints.append(("ineq", expr, label))

    def add_soc(self, vec, bound, label: str = "soc") -> None:
        """Record ||vec||_2 <= bound with vec a vector expression, bound scalar."""
        vec = cp.vec(vec, order="F") if hasattr(vec, "ndim") and vec.ndim > 1 else vec
        self._constraints.append(("soc", (vec, bound), label))

    def add_psd(self, mat, label: str = "psd") -> None:
        """Record mat >> 0 for a symmetric affine matrix expression, side <= 10."""
        shape = mat.shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise ShapeMismatchError(f"PSD block must be square, got {shape}")
        if shape[0] > PSD_MAX_SIDE:
            raise ShapeMismatchError(f"PSD side {shape[0]} exceeds limit {PSD_MAX_SIDE}")
        sym = 0.5 * (mat + mat.T)
        self._constraints.append(("psd", sym, label))

    def set_objective(self, expr) -> None:
        self._objective = expr

    # -- solving -----------------------------------------------------------

    def _cvx_constraints(self) -> list:
        out = []
        for kind, payload, _ in self._constraints:
            if kind == "eq":
                out.append(payload == 0)
            elif kind == "ineq":
                out.append(payload <= 0)
            elif kind == "soc":
                vec, bound = payload
                out.append(cp.norm(vec, 2) <= bound)
            else:  # psd
                out.append(payload >> 0)
        return out

    def _audit(self, tol: float) -> tuple[float, str]:
        """Worst constraint violation of the current variable values."""
        worst, worst_label = 0.0, ""
        for kind, payload, label in self._constraints:
            if kind == "eq":
                v = float(np.max(np.abs(np.atleast_1d(payload.value))))
            elif kind == "ineq":
                v = float(np.max(np.atleast_1d(payload.value)))
            elif kind == "soc":
                vec, bound = payload
                bval = bound.value if hasattr(bound, "value") else float(bound)
                v = float(np.linalg.norm(np.atleast_1d(vec.value)) - bval)
            else:  # psd
                M = np.atleast_2d(payload.value)
                v = float(-np.min(np.linalg.eigvalsh(0.5 * (M + M.T))))
            if v > worst:
                worst, worst_label = v, label
        return worst, worst_label

    def solve(self, cfg: SolverConfig | None = None) -> Solution:
        cfg = cfg or SolverConfig()
        objective = cp.Minimize(self._objective if self._objective is not None else 0)
        problem = cp.Problem(objective, self._cvx_constraints())
        last_stats: dict = {}
        attempts: list[tuple[str, dict]] = []
        for solver in (cfg.solver, *cfg.fallbacks):
            opts = dict(cfg.solver_opts)
            if solver == "SCS" and not opts:
                # first-order fallback needs tighter targets to pass the audit
                opts = {"eps_abs": 1e-9, "eps_rel": 1e-9, "max_iters": 100_000}
            attempts.append((solver, opts))
            if solver == "CLARABEL" and not opts:
                # near-duplicate rows (facet symmetry) stall the default KKT
                # regularization; a mildly larger one recovers, the audit
                # still polices the returned point
                attempts.append((solver, {"static_regularization_constant": 1e-7}))
                attempts.append((solver, {"equilibrate_enable": False,
                                          "static_regularization_constant": 1e-7}))
        import warnings
        for solver, opts in attempts:
            try:
                with warnings.catch_warnings():
                    # inaccurate-solution warnings are superseded by the audit
                    warnings.simplefilter("ignore")
                    problem.solve(solver=solver, verbose=cfg.verbose, **opts)
            except (cp.error.SolverError, Exception) as exc:  # noqa: BLE001 - solver quirks
                last_stats = {"solver": solver, "error": str(exc)}
                continue
            stats = {
                "solver": solver,
                "status": problem.status,
                "solve_time": getattr(problem.solver_stats, "solve_time", None),
                "num_iters": getattr(problem.solver_stats, "num_iters", None),
            }
            if problem.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
                return Solution(STATUS_INFEASIBLE, {}, None, stats)
            if problem.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
                worst, label = self._audit(cfg.audit_tol)
                stats["audit_violation"] = worst
                stats["audit_worst_group"] = label
                if worst <= cfg.audit_tol:
                    values = {k: np.copy(np.atleast_1d(v.value)) if v.value is not None
                              else None for k, v in self._vars.items()}
                    return Solution(STATUS_OPTIMAL, values, float(problem.value), stats)
                last_stats = stats  # audit failed: try the next backend
                continue
            last_stats = stats  # unbounded or unknown
        return Solution(STATUS_NUMERICAL, {}, None, last_stats)

    # -- portability & diagnostics ------------------------------------------

    def dump(self) -> dict:
        """Portable cone-program description (triplet-sparse, SCS cone layout)."""
        objective = cp.Minimize(self._objective if self._objective is not None else 0)
        problem = cp.Problem(objective, self._cvx_constraints())
        data, _, _ = problem.get_problem_data(cp.SCS)
        A = data["A"].tocoo()
        cones = data["dims"]
        return {
            "format": "scs-cone-v1",
            "variables": {k: list(np.shape(v)) for k, v in self._vars.items()},
            "c": data["c"].tolist(),
            "b": data["b"].tolist(),
            "A": {
                "shape": list(A.shape),
                "row": A.row.tolist(),
                "col": A.col.tolist(),
                "val": A.data.tolist(),
            },
            "cones": {
                "zero": int(cones.zero),
                "nonneg": int(cones.nonneg),
                "soc": [int(q) for q in cones.soc],
                "psd": [int(p) for p in cones.psd],
            },
        }

    def diagnose_infeasibility(self, cfg: SolverConfig | None = None) -> list[str]:
        """Labels of constraint groups needing slack in an elastic relaxation."""
        cfg = cfg or SolverConfig()
        labels = sorted({label for _, _, label in self._constraints})
        slack = {lab: cp.Variable(nonneg=True, name=f"slack_{lab}") for lab in labels}
        relaxed = []
        for kind, payload, label in self._constraints:
            s = slack[label]
            if kind == "eq":
                relaxed.append(cp.abs(payload) <= s)
            elif kind == "ineq":
                relaxed.append(payload <= s)
            elif kind == "soc":
                vec, bound = payload
                relaxed.append(cp.norm(vec, 2) <= bound + s)
            else:
                relaxed.append(payload + s * np.eye(payload.shape[0]) >> 0)
        prob = cp.Problem(cp.Minimize(sum(slack.values())), relaxed)
        try:
            prob.solve(solver=cfg.solver, **cfg.solver_opts)
        except Exception:  # noqa: BLE001
            return labels
        if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            return labels
        return [lab for lab in labels if slack[lab].value is not None
                and float(slack[lab].value) > 1e-7]
