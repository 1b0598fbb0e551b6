"""Nonlinear basis dictionaries, linearization remainders and their envelopes.

A dictionary collects scalar basis terms with analytic gradients and Hessians;
the remainder Q(x) = S(x) - A_s x subtracts the linearization at the origin,
so Q(0) = 0 and dQ/dx(0) = 0.  Certificates consume per-term Hessians (with an
affine-in-x decomposition when the terms are polynomials of degree <= 3) and
componentwise Lipschitz bounds of Q over the safe set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polytope import Polytope, enumerate_vertices


class InvalidExponentError(ValueError):
    pass


class NonAffineHessianError(ValueError):
    pass


@dataclass(frozen=True)
class MonomialTerm:
    """Scalar monomial prod_i x_i^{e_i} with analytic derivatives."""

    exponents: tuple[int, ...]

    def __post_init__(self):
        if any(e < 0 for e in self.exponents):
            raise InvalidExponentError(f"negative exponent in {self.exponents}")

    @property
    def n(self) -> int:
        return len(self.exponents)

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.prod(x ** np.array(self.exponents)))

    def value_columns(self, X) -> np.ndarray:
        """Evaluate on each column of an (n, T) matrix."""
        X = np.asarray(X, dtype=float)
        e = np.array(self.exponents)[:, None]
        return np.prod(X ** e, axis=0)

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        g = np.zeros(self.n)
        for a, ea in enumerate(self.exponents):
            if ea == 0:
                continue
            e = list(self.exponents)
            e[a] -= 1
            g[a] = ea * np.prod(x ** np.array(e))
        return g

    def hessian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        H = np.zeros((self.n, self.n))
        for a, ea in enumerate(self.exponents):
            if ea == 0:
                continue
            for b in range(a, self.n):
                eb = self.exponents[b]
                e = list(self.exponents)
                if a == b:
                    if ea < 2:
                        continue
                    coef = ea * (ea - 1)
                    e[a] -= 2
                else:
                    if eb == 0:
                        continue
                    coef = ea * eb
                    e[a] -= 1
                    e[b] -= 1
                val = coef * np.prod(x ** np.array(e))
                H[a, b] = val
                H[b, a] = val
        return H

    def hessian_affine(self) -> tuple[np.ndarray, list[np.ndarray]] | None:
        """Decomposition H(x) = H0 + sum_c x_c H_c, available for degree <= 3."""
        if self.degree > 3:
            return None
        H0 = np.zeros((self.n, self.n))
        Hc = [np.zeros((self.n, self.n)) for _ in range(self.n)]
        for a, ea in enumerate(self.exponents):
            if ea == 0:
                continue
            for b in range(a, self.n):
                eb = self.exponents[b]
                e = list(self.exponents)
                if a == b:
                    if ea < 2:
                        continue
                    coef = ea * (ea - 1)
                    e[a] -= 2
                else:
                    if eb == 0:
                        continue
                    coef = ea * eb
                    e[a] -= 1
                    e[b] -= 1
                rem_deg = sum(e)
                if rem_deg == 0:
                    H0[a, b] += coef
                    if a != b:
                        H0[b, a] += coef
                else:  # rem_deg == 1: linear in exactly one coordinate
                    c = next(i for i, ei in enumerate(e) if ei == 1)
                    Hc[c][a, b] += coef
                    if a != b:
                        Hc[c][b, a] += coef
        return H0, Hc


@dataclass(frozen=True)
class CallableTerm:
    """User-supplied scalar term with explicit derivative callbacks."""

    fn: callable
    grad: callable
    hess: callable
    n: int
    affine_parts: tuple | None = None  # optional (H0, [H_c]) when Hessian affine

    def value(self, x) -> float:
        return float(self.fn(np.asarray(x, dtype=float)))

    def value_columns(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.array([self.value(X[:, t]) for t in range(X.shape[1])])

    def gradient(self, x) -> np.ndarray:
        return np.asarray(self.grad(np.asarray(x, dtype=float)), dtype=float)

    def hessian(self, x) -> np.ndarray:
        return np.asarray(self.hess(np.asarray(x, dtype=float)), dtype=float)

    def hessian_affine(self):
        return self.affine_parts


@dataclass(frozen=True)
class BasisDictionary:
    """Ordered collection of basis terms S(x) in R^N over states in R^n."""

    terms: tuple
    n: int

    @property
    def N(self) -> int:
        return len(self.terms)

    def value(self, x) -> np.ndarray:
        return np.array([t.value(x) for t in self.terms])

    def value_columns(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.N == 0:
            return np.zeros((0, X.shape[1]))
        return np.vstack([t.value_columns(X) for t in self.terms])

    def jacobian(self, x) -> np.ndarray:
        if self.N == 0:
            return np.zeros((0, self.n))
        return np.vstack([t.gradient(x) for t in self.terms])

    def hessian(self, k: int, x) -> np.ndarray:
        return self.terms[k].hessian(x)

    @property
    def all_hessians_affine(self) -> bool:
        return all(t.hessian_affine() is not None for t in self.terms)

    @property
    def all_monomial(self) -> bool:
        return all(isinstance(t, MonomialTerm) for t in self.terms)

    def to_dict(self) -> dict:
        if not self.all_monomial:
            raise ValueError("only monomial dictionaries are serializable")
        return {"monomials": [list(t.exponents) for t in self.terms], "n": self.n}

    @classmethod
    def from_dict(cls, d: dict) -> "BasisDictionary":
        return monomial_dictionary(d["monomials"], int(d["n"]))


def monomial_dictionary(exponent_list, n: int) -> BasisDictionary:
    """Dictionary of monomials given as integer multi-indices of length n."""
    terms = []
    for e in exponent_list:
        e = tuple(int(v) for v in e)
        if len(e) != n:
            raise InvalidExponentError(f"multi-index {e} has length {len(e)}, expected {n}")
        terms.append(MonomialTerm(e))
    return BasisDictionary(terms=tuple(terms), n=n)


@dataclass(frozen=True)
class Remainder:
    """Q(x) = S(x) - A_s x with A_s the Jacobian of S at the origin."""

    dictionary: BasisDictionary
    A_s: np.ndarray  # (N, n)

    @property
    def n(self) -> int:
        return self.dictionary.n

    @property
    def N(self) -> int:
        return self.dictionary.N

    def q(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.dictionary.value(x) - self.A_s @ x

    def q_columns(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return self.dictionary.value_columns(X) - self.A_s @ X

    def jacobian(self, x) -> np.ndarray:
        return self.dictionary.jacobian(x) - self.A_s

    def hessian(self, k: int, x) -> np.ndarray:
        # linear correction drops out of second derivatives
        return self.dictionary.hessian(k, x)

    def hessian_affine(self, k: int):
        return self.dictionary.terms[k].hessian_affine()

    @property
    def all_hessians_affine(self) -> bool:
        return self.dictionary.all_hessians_affine


def remainder(d: BasisDictionary) -> Remainder:
    A_s = d.jacobian(np.zeros(d.n))
    return Remainder(dictionary=d, A_s=A_s)


@dataclass(frozen=True)
class LipschitzEnvelope:
    """Componentwise Lipschitz bounds of Q on a reference polytope."""

    per_component: np.ndarray  # (N,)
    scalar: float  # aggregate ||L_Q||_2, a valid Lipschitz constant of the vector map
    grid_fallback: bool = False
    warnings: tuple[str, ...] = ()


def _is_axis_box(P: Polytope) -> bool:
    return all(np.count_nonzero(row) == 1 for row in P.F)


def _grid_points(P: Polytope, per_axis: int) -> np.ndarray:
    V = enumerate_vertices(P).vertices
    lo, hi = V.min(axis=0), V.max(axis=0)
    axes = [np.linspace(lo[k], hi[k], per_axis) for k in range(P.n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    mask = np.all(P.F @ pts.T <= P.g[:, None] + P.tol + 1e-12, axis=0)
    return pts[mask]


def lipschitz_on(rem: Remainder, P: Polytope, grid_per_axis: int = 41) -> LipschitzEnvelope:
    """Componentwise bounds L_{Q,j} >= sup_P ||grad Q_j||_2.

    On axis-aligned boxes with monomial terms the supremum of each partial is
    attained at a vertex (magnitudes grow monotonically in |x_i|), so vertex
    evaluation is exact.  Otherwise a dense grid supremum is inflated by 1.05
    and flagged.
    """
    if rem.N == 0:
        return LipschitzEnvelope(per_component=np.zeros(0), scalar=0.0)
    warnings: list[str] = []
    if _is_axis_box(P) and rem.dictionary.all_monomial:
        pts = enumerate_vertices(P).vertices
        inflate = 1.0
        fallback = False
    else:
        pts = _grid_points(P, grid_per_axis)
        inflate = 1.05
        fallback = True
        warnings.append(
            f"grid Lipschitz fallback ({grid_per_axis} pts/axis, 1.05 inflation)")
    L = np.zeros(rem.N)
    for x in pts:
        J = rem.jacobian(x)
        L = np.maximum(L, np.linalg.norm(J, axis=1))
    L = inflate * L
    return LipschitzEnvelope(per_component=L, scalar=float(np.linalg.norm(L)),
                             grid_fallback=fallback, warnings=tuple(warnings))


def curvature_operator(rem: Remainder, row_weights, x) -> np.ndarray:
    """Weighted Hessian sum  sum_k w_k d^2 Q_k / dx^2  at x."""
    w = np.asarray(row_weights, dtype=float).ravel()
    if w.shape[0] != rem.N:
        raise ValueError(f"weights must have length {rem.N}")
    H = np.zeros((rem.n, rem.n))
    for k in range(rem.N):
        if w[k] != 0.0:
            H += w[k] * rem.hessian(k, x)
    return H


def curvature_affine(rem: Remainder, row_weights) -> tuple[np.ndarray, list[np.ndarray]]:
    """Affine decomposition H(x) = H0 + sum_c x_c H_c of the weighted Hessian sum.

    Raises NonAffineHessianError when some term's Hessian is not affine in x.
    """
    w = np.asarray(row_weights, dtype=float).ravel()
    H0 = np.zeros((rem.n, rem.n))
    Hc = [np.zeros((rem.n, rem.n)) for _ in range(rem.n)]
    for k in range(rem.N):
        parts = rem.hessian_affine(k)
        if parts is None:
            raise NonAffineHessianError(f"term {k} has a non-affine Hessian")
        H0 += w[k] * parts[0]
        for c in range(rem.n):
            Hc[c] += w[k] * parts[1][c]
    return H0, Hc
