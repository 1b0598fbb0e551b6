"""Ground-truth plant simulation, experiment collection, data matrices.

The plant model lives behind a ground-truth boundary: it generates data and
serves as an oracle for closed-loop simulation, but synthesis code only ever
sees ExperimentData.  Disturbance columns are never stored; only their bound
enters the data products.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .basis import Remainder
from .polytope import Polytope, enumerate_vertices


class DisturbanceBoundViolatedError(ValueError):
    pass


class RankDeficientDataError(RuntimeError):
    pass


class ConsistencyViolatedError(ValueError):
    pass


@dataclass(frozen=True)
class PlantModel:
    """x(t+1) = A1 x + A2 S(x) + B u + w with ||w||_inf <= h_w."""

    A1: np.ndarray  # (n, n)
    A2: np.ndarray  # (n, N)
    B: np.ndarray  # (n, m)
    remainder: Remainder
    h_w: float = 0.0

    def __post_init__(self):
        n, N = self.A1.shape[0], self.remainder.N
        if self.A1.shape != (n, n) or self.A2.shape != (n, N) or self.B.shape[0] != n:
            raise ValueError("inconsistent plant dimensions")
        if self.h_w < 0:
            raise ValueError("h_w must be nonnegative")

    @property
    def n(self) -> int:
        return self.A1.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def N(self) -> int:
        return self.A2.shape[1]

    @property
    def abar1(self) -> np.ndarray:
        """Linear part after absorbing the dictionary linearization, A1 + A2 A_s."""
        return self.A1 + self.A2 @ self.remainder.A_s

    def step(self, x, u, w=None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        xn = self.A1 @ x + self.A2 @ self.remainder.dictionary.value(x) + self.B @ u
        if w is not None:
            xn = xn + np.asarray(w, dtype=float)
        return xn


def simulate_plant(p: PlantModel, x0, inputs, disturbances=None) -> np.ndarray:
    """Forward iteration; returns the (T+1, n) state sequence."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    if inputs.shape[1] != p.m:
        inputs = inputs.reshape(-1, p.m)
    T = inputs.shape[0]
    if disturbances is None:
        disturbances = np.zeros((T, p.n))
    disturbances = np.asarray(disturbances, dtype=float).reshape(T, p.n)
    if np.max(np.abs(disturbances), initial=0.0) > p.h_w + 1e-12:
        raise DisturbanceBoundViolatedError(
            f"||w||_inf = {np.max(np.abs(disturbances)):.3e} exceeds h_w = {p.h_w}")
    X = np.zeros((T + 1, p.n))
    X[0] = np.asarray(x0, dtype=float)
    for t in range(T):
        X[t + 1] = p.step(X[t], inputs[t], disturbances[t])
    return X


@dataclass(frozen=True)
class ExperimentData:
    """Single-experiment data matrices U0, X0, X1 and the lifted V0 = [X0; Q(X0)]."""

    U0: np.ndarray  # (m, T)
    X0: np.ndarray  # (n, T)
    X1: np.ndarray  # (n, T)
    QX0: np.ndarray  # (N, T)
    V0: np.ndarray  # (n+N, T)
    T: int
    h_w: float
    seed: int

    @property
    def n(self) -> int:
        return self.X0.shape[0]

    @property
    def m(self) -> int:
        return self.U0.shape[0]

    @property
    def N(self) -> int:
        return self.QX0.shape[0]

    def to_dict(self) -> dict:
        def fmt(M):
            return [[np.format_float_positional(v, unique=True) for v in row]
                    for row in np.atleast_2d(M)]

        return {
            "U0": fmt(self.U0), "X0": fmt(self.X0), "X1": fmt(self.X1),
            "QX0": fmt(self.QX0), "T": self.T, "h_w": self.h_w, "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentData":
        def arr(M):
            return np.array([[float(v) for v in row] for row in M])

        U0, X0, X1, QX0 = arr(d["U0"]), arr(d["X0"]), arr(d["X1"]), arr(d["QX0"])
        V0 = np.vstack([X0, QX0]) if QX0.size else X0.copy()
        return cls(U0=U0, X0=X0, X1=X1, QX0=QX0, V0=V0,
                   T=int(d["T"]), h_w=float(d["h_w"]), seed=int(d["seed"]))

    @classmethod
    def from_json(cls, s: str) -> "ExperimentData":
        return cls.from_dict(json.loads(s))

    def export_csv(self, directory) -> None:
        import os
        for name in ("X0", "X1", "U0"):
            M = getattr(self, name)
            lines = [",".join(np.format_float_positional(v, unique=True) for v in row)
                     for row in np.atleast_2d(M)]
            with open(os.path.join(directory, f"{name}.csv"), "w") as fh:
                fh.write("\n".join(lines) + "\n")


def _sample_in_scaled_polytope(P: Polytope, scale: float, rng) -> np.ndarray:
    V = enumerate_vertices(P).vertices * scale
    lo, hi = V.min(axis=0), V.max(axis=0)
    for _ in range(10000):
        x = rng.uniform(lo, hi)
        if np.all(P.F @ x <= scale * P.g + P.tol):
            return x
    w = rng.dirichlet(np.ones(V.shape[0]))
    return w @ V


def collect_experiment(p: PlantModel, T: int, input_gen=None, disturbance_gen=None,
                       x0=None, polytope: Polytope | None = None, seed: int = 0,
                       max_retries: int = 10) -> ExperimentData:
    """Run one open-loop experiment and assemble the data matrices.

    Defaults: i.i.d. uniform inputs on [-1, 1]^m, i.i.d. uniform disturbances
    on [-h_w, h_w]^n, and x0 drawn uniformly from 0.2 * polytope when a safe
    set is supplied (origin otherwise).  Retries with a derived seed (up to
    ``max_retries``) if the lifted data matrix is rank deficient.
    """
    n, m, N = p.n, p.m, p.N
    if T < n + N + 1:
        raise ValueError(f"need T >= n+N+1 = {n + N + 1} samples, got {T}")
    for attempt in range(max_retries):
        rng = np.random.default_rng(seed + 7919 * attempt)
        if input_gen is None:
            U = rng.uniform(-1.0, 1.0, size=(T, m))
        else:
            U = np.array([np.atleast_1d(input_gen(rng, t)) for t in range(T)])
        if disturbance_gen is None:
            W = rng.uniform(-p.h_w, p.h_w, size=(T, n)) if p.h_w > 0 else np.zeros((T, n))
        else:
            W = np.array([np.atleast_1d(disturbance_gen(rng, t)) for t in range(T)])
        if x0 is not None:
            x_init = np.asarray(x0, dtype=float)
        elif polytope is not None:
            x_init = _sample_in_scaled_polytope(polytope, 0.2, rng)
        else:
            x_init = np.zeros(n)
        X = simulate_plant(p, x_init, U, W)
        X0, X1 = X[:-1].T, X[1:].T
        QX0 = p.remainder.q_columns(X0)
        V0 = np.vstack([X0, QX0]) if N > 0 else X0.copy()
        if np.linalg.matrix_rank(V0) == n + N:
            return ExperimentData(U0=U.T, X0=X0, X1=X1, QX0=QX0, V0=V0,
                                  T=T, h_w=p.h_w, seed=seed)
    raise RankDeficientDataError(
        f"V0 rank deficient after {max_retries} attempts (seed {seed})")


@dataclass(frozen=True)
class ClosedLoopRep:
    """Data-based closed-loop representation from a right inverse of V0."""

    G_K1: np.ndarray  # (T, n)
    G_K2: np.ndarray  # (T, N)
    K1: np.ndarray  # (m, n)
    K2: np.ndarray  # (m, N)
    M1: np.ndarray  # (n, n) = X1 G_K1
    M2: np.ndarray  # (n, N) = X1 G_K2


CONSISTENCY_TOL = 1e-7


def closed_loop_rep(d: ExperimentData, G_K1, G_K2, tol: float = CONSISTENCY_TOL) -> ClosedLoopRep:
    """Package gains and closed-loop data matrices; checks V0 [G1 G2] = I."""
    G_K1 = np.asarray(G_K1, dtype=float).reshape(d.T, d.n)
    G_K2 = np.asarray(G_K2, dtype=float).reshape(d.T, d.N)
    G = np.hstack([G_K1, G_K2])
    residual = float(np.max(np.abs(d.V0 @ G - np.eye(d.n + d.N))))
    if residual > tol:
        raise ConsistencyViolatedError(
            f"V0 [G1 G2] deviates from identity by {residual:.3e}")
    return ClosedLoopRep(
        G_K1=G_K1, G_K2=G_K2,
        K1=d.U0 @ G_K1, K2=d.U0 @ G_K2,
        M1=d.X1 @ G_K1, M2=d.X1 @ G_K2,
    )


def pinv_rep(d: ExperimentData) -> ClosedLoopRep:
    """Representation from the Moore-Penrose right inverse of V0."""
    G = np.linalg.pinv(d.V0)
    return closed_loop_rep(d, G[:, :d.n], G[:, d.n:])
