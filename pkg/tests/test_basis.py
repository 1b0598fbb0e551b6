import numpy as np
import pytest

from polycert import basis as bs
from polycert import polytope as pt

PAPER_EXPONENTS = [(3, 0, 0), (0, 3, 0), (0, 0, 3), (2, 0, 0)]


def paper_remainder():
    return bs.remainder(bs.monomial_dictionary(PAPER_EXPONENTS, 3))


def central_jacobian(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    cols = []
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        cols.append((f(x + e) - f(x - e)) / (2 * h))
    return np.stack(cols, axis=-1)


def test_invalid_exponent():
    with pytest.raises(bs.InvalidExponentError):
        bs.monomial_dictionary([(3, -1, 0)], 3)
    with pytest.raises(bs.InvalidExponentError):
        bs.monomial_dictionary([(3, 0)], 3)


def test_paper_dictionary_jacobian_at_zero():
    rem = paper_remainder()
    np.testing.assert_allclose(rem.A_s, 0.0)
    # oracle: central differences of S at the origin
    S = rem.dictionary.value
    np.testing.assert_allclose(central_jacobian(S, np.zeros(3)), 0.0, atol=1e-9)


def test_remainder_vanishes_at_origin():
    rem = paper_remainder()
    np.testing.assert_allclose(rem.q(np.zeros(3)), 0.0, atol=1e-12)
    J0 = central_jacobian(rem.q, np.zeros(3))
    np.testing.assert_allclose(J0, 0.0, atol=1e-6)


def test_linear_term_gets_absorbed():
    rem = bs.remainder(bs.monomial_dictionary([(1,)], 1))
    np.testing.assert_allclose(rem.A_s, [[1.0]])
    for x in (-0.7, 0.0, 1.3):
        assert rem.q(np.array([x])) == pytest.approx(0.0, abs=1e-12)


def test_derivatives_match_finite_differences():
    rem = paper_remainder()
    rng = np.random.default_rng(11)
    for _ in range(100):
        x = rng.uniform(-1, 1, size=3)
        J = rem.jacobian(x)
        J_fd = central_jacobian(rem.q, x)
        np.testing.assert_allclose(J, J_fd, rtol=1e-5, atol=1e-7)
    x = rng.uniform(-1, 1, size=3)
    for k in range(rem.N):
        grad_k = lambda y, k=k: rem.jacobian(y)[k]
        H_fd = central_jacobian(grad_k, x, h=1e-5)
        np.testing.assert_allclose(rem.hessian(k, x), H_fd, rtol=1e-5, atol=1e-6)


def test_hessian_structure():
    d = bs.monomial_dictionary([(2,)], 1)
    np.testing.assert_allclose(d.hessian(0, [0.3]), [[2.0]])
    assert d.terms[0].hessian_affine() is not None
    d3 = bs.monomial_dictionary([(3,)], 1)
    np.testing.assert_allclose(d3.hessian(0, [0.5]), [[3.0]])
    H0, Hc = d3.terms[0].hessian_affine()
    np.testing.assert_allclose(H0, 0.0)
    np.testing.assert_allclose(Hc[0], [[6.0]])
    d4 = bs.monomial_dictionary([(4,)], 1)
    assert d4.terms[0].hessian_affine() is None
    assert not d4.all_hessians_affine


def test_lipschitz_cubic_interval():
    rem = bs.remainder(bs.monomial_dictionary([(3,)], 1))
    env = bs.lipschitz_on(rem, pt.box([1.0]))
    assert env.per_component[0] == pytest.approx(3.0)
    assert not env.grid_fallback


def test_lipschitz_square_interval():
    rem = bs.remainder(bs.monomial_dictionary([(2,)], 1))
    env = bs.lipschitz_on(rem, pt.box([0.5]))
    # oracle: dense grid of sup |2x| over [-0.5, 0.5]
    grid = np.linspace(-0.5, 0.5, 2001)
    assert env.per_component[0] == pytest.approx(np.max(np.abs(2 * grid)), abs=1e-12)


def test_lipschitz_zero_remainder():
    rem = bs.remainder(bs.monomial_dictionary([(1, 0), (0, 1)], 2))
    env = bs.lipschitz_on(rem, pt.box([1.0, 1.0]))
    np.testing.assert_allclose(env.per_component, 0.0, atol=1e-12)
    assert env.scalar == 0.0


def test_lipschitz_envelope_validity():
    rem = paper_remainder()
    P = pt.box([1.0, 1.0, 1.0])
    env = bs.lipschitz_on(rem, P)
    rng = np.random.default_rng(5)
    X = rng.uniform(-1, 1, size=(10_000, 3))
    Y = rng.uniform(-1, 1, size=(10_000, 3))
    QX = rem.q_columns(X.T)
    QY = rem.q_columns(Y.T)
    dist = np.linalg.norm(X - Y, axis=1)
    for j in range(rem.N):
        assert np.all(np.abs(QX[j] - QY[j]) <= env.per_component[j] * dist * (1 + 1e-9))


def test_lipschitz_grid_fallback_flag():
    rem = bs.remainder(bs.monomial_dictionary([(3, 0), (0, 2)], 2))
    simplex = pt.from_halfspaces([[-1, 0], [0, -1], [1, 1]], [0, 0, 1])
    env = bs.lipschitz_on(rem, simplex, grid_per_axis=60)
    assert env.grid_fallback and env.warnings
    # still a valid envelope on sampled pairs
    rng = np.random.default_rng(7)
    pts = rng.uniform(0, 1, size=(4000, 2))
    pts = pts[pts.sum(axis=1) <= 1]
    for j in range(rem.N):
        vals = rem.q_columns(pts.T)[j]
        diffs = np.abs(vals[:, None] - vals[None, :])
        dist = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
        assert np.all(diffs <= env.per_component[j] * dist + 1e-9)


def test_curvature_operator_examples():
    rem = paper_remainder()
    H = bs.curvature_operator(rem, [1, 0, 0, 0], [0.4, 9.9, -3])
    np.testing.assert_allclose(H, np.diag([2.4, 0, 0]), atol=1e-12)
    H4 = bs.curvature_operator(rem, [0, 0, 0, 1], [0.4, 9.9, -3])
    np.testing.assert_allclose(H4, np.diag([2.0, 0, 0]), atol=1e-12)


def test_curvature_operator_vs_finite_differences():
    rem = paper_remainder()
    w = np.array([1.0, 1.0, 1.0, 0.0])
    x = np.array([0.3, -0.6, 0.9])
    f = lambda y: float(w @ rem.q(y))
    grad = lambda y: w @ rem.jacobian(y)
    H_fd = np.stack([(grad(x + h) - grad(x - h)) / (2e-5)
                     for h in 1e-5 * np.eye(3)], axis=-1)
    np.testing.assert_allclose(bs.curvature_operator(rem, w, x), H_fd,
                               rtol=1e-5, atol=1e-6)
    np.testing.assert_allclose(np.diag(bs.curvature_operator(rem, w, x)),
                               6 * x, atol=1e-12)


def test_curvature_affine_decomposition():
    rem = paper_remainder()
    rng = np.random.default_rng(3)
    w = rng.normal(size=4)
    H0, Hc = bs.curvature_affine(rem, w)
    for _ in range(20):
        x = rng.uniform(-1, 1, size=3)
        direct = bs.curvature_operator(rem, w, x)
        assembled = H0 + sum(x[c] * Hc[c] for c in range(3))
        np.testing.assert_allclose(assembled, direct, atol=1e-10)
    rem4 = bs.remainder(bs.monomial_dictionary([(4, 0, 0)], 3))
    with pytest.raises(bs.NonAffineHessianError):
        bs.curvature_affine(rem4, [1.0])


def test_dictionary_serialization_roundtrip():
    d = bs.monomial_dictionary(PAPER_EXPONENTS, 3)
    back = bs.BasisDictionary.from_dict(d.to_dict())
    assert [t.exponents for t in back.terms] == [t.exponents for t in d.terms]
