import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polycert import verify as vf
from polycert.basis import monomial_dictionary, remainder
from polycert.plant import pinv_rep
from polycert.polytope import (DimensionTooLargeError, box,
                               enumerate_vertices, sign_symmetric_partition)


@pytest.fixture()
def example1_maps(example1_autonomous_data):
    plant, P, data = example1_autonomous_data
    rep = pinv_rep(data)
    return plant, P, rep, vf.facet_maps(rep, P, plant.remainder)


def test_example1_facet_values(example1_maps):
    _, _, _, maps = example1_maps
    # facet order (-x <= 1, x <= 0): H2 = f, H1 = -f
    H1, H2 = maps
    assert H2.value([-1.0]) == pytest.approx(-1.0, abs=1e-10)
    assert H2.value([0.0]) == pytest.approx(0.0, abs=1e-12)
    assert H1.value([-1.0]) == pytest.approx(1.0, abs=1e-10)


def test_sign_symmetric_pair_maps_are_opposite(paper_data, paper_template):
    plant, data = paper_data
    rep = pinv_rep(data)
    maps = vf.facet_maps(rep, paper_template, plant.remainder)
    part = sign_symmetric_partition(paper_template)
    rng = np.random.default_rng(0)
    for i, j in part.pair_map.items():
        for _ in range(20):
            x = rng.uniform(-1, 1, size=3)
            assert maps[j].value(x) == pytest.approx(-maps[i].value(x), abs=1e-9)


def test_linear_dictionary_gives_linear_maps():
    rem = remainder(monomial_dictionary([], 2))
    from polycert.plant import PlantModel, collect_experiment
    plant = PlantModel(A1=np.array([[0.5, 0.1], [0.0, 0.4]]),
                       A2=np.zeros((2, 0)), B=np.array([[1.0], [0.5]]),
                       remainder=rem)
    data = collect_experiment(plant, 6, seed=1)
    maps = vf.facet_maps(pinv_rep(data), box([1.0, 1.0]), rem)
    for m in maps:
        assert m.w.size == 0
        x = np.array([0.3, -0.7])
        assert m.value(2 * x) == pytest.approx(2 * m.value(x))


def test_grid_oracle_example1(example1_maps):
    _, P, _, maps = example1_maps
    H1, H2 = maps
    vmax, xmax = vf.grid_max_oracle(H2, P)
    assert vmax == pytest.approx(0.0, abs=1e-10)
    assert xmax[0] == pytest.approx(0.0, abs=1e-8)
    vmin_neg, xmin = vf.grid_max_oracle(H1, P)
    assert vmin_neg == pytest.approx(1.0, abs=1e-10)  # -min f = 1
    assert xmin[0] == pytest.approx(-1.0, abs=1e-8)


def test_grid_oracle_planar_benchmark():
    """Facet map a11 x1 + a12 x2 + cu x2^3 on [0,r1]x[0,r2] peaks at the
    upper corner when all coefficients are nonnegative."""
    a11, a12, cu, r1, r2 = 0.5, 0.1, 0.2, 1.0, 1.0
    rem = remainder(monomial_dictionary([(0, 3)], 2))
    P = box([r1 / 2, r2 / 2], center=[r1 / 2, r2 / 2])
    fmap = vf.FacetMap(index=0, c=np.array([a11, a12]), w=np.array([cu]),
                       remainder=rem, offset=r1)
    vmax, xmax = vf.grid_max_oracle(fmap, P)
    assert vmax == pytest.approx(a11 * r1 + (a12 + cu * r2 ** 2) * r2, abs=1e-9)
    np.testing.assert_allclose(xmax, [r1, r2], atol=1e-6)


def test_grid_oracle_linear_equals_vertex_max():
    rem = remainder(monomial_dictionary([], 2))
    P = box([0.7, 1.3])
    c = np.array([0.4, -0.9])
    fmap = vf.FacetMap(index=0, c=c, w=np.zeros(0), remainder=rem, offset=1.0)
    vmax, _ = vf.grid_max_oracle(fmap, P)
    vertex_max = max(c @ v for v in enumerate_vertices(P).vertices)
    assert vmax == pytest.approx(vertex_max, abs=1e-9)


def test_grid_oracle_convex_vertex_property():
    rem = remainder(monomial_dictionary([(2, 0), (0, 2)], 2))
    P = box([1.0, 1.0])
    fmap = vf.FacetMap(index=0, c=np.array([0.2, -0.1]),
                       w=np.array([0.5, 0.3]), remainder=rem, offset=1.0)
    vmax, _ = vf.grid_max_oracle(fmap, P)
    vertex_max = max(fmap.value(v) for v in enumerate_vertices(P).vertices)
    assert vmax == pytest.approx(vertex_max, abs=1e-8)


def test_grid_oracle_dimension_guard():
    rem = remainder(monomial_dictionary([], 4))
    F = np.vstack([np.eye(4), -np.eye(4)])
    from polycert.polytope import Polytope
    P = Polytope(F, np.ones(8))
    fmap = vf.FacetMap(index=0, c=np.ones(4), w=np.zeros(0), remainder=rem,
                       offset=1.0)
    with pytest.raises(DimensionTooLargeError):
        vf.grid_max_oracle(fmap, P)


def test_lipschitz_bound_vs_exact_values():
    lip, exact = vf.lipschitz_bound_vs_exact(0.5, 0.1, 0.2, 1.0, 1.0)
    assert lip == pytest.approx(1.2)
    assert exact == pytest.approx(0.8)
    lip0, exact0 = vf.lipschitz_bound_vs_exact(0.5, 0.1, 0.0, 1.0, 1.0)
    assert lip0 == pytest.approx(exact0)
    lipr, exactr = vf.lipschitz_bound_vs_exact(0.5, 0.1, 0.2, 2.0, 0.0)
    assert lipr == exactr == pytest.approx(1.0)


def test_monte_carlo_example1(example1_maps):
    plant, P, rep, _ = example1_maps
    report = vf.monte_carlo_contractivity(
        P, vf.rep_step_map(rep, plant.remainder), lam=1.0, n_samples=500,
        seed=0)
    assert report.passed
    # worst margins attained at the endpoints, both zero
    assert np.max(report.worst_margin) == pytest.approx(0.0, abs=1e-8)


def test_monte_carlo_catches_destabilized_gain(paper_data, paper_template):
    plant, data = paper_data
    from polycert.runtime import GlobalController
    from polycert.polytope import scale_facets
    bad = GlobalController(K1=np.array([[0.0, 8.0, 0.0]]),
                           K2=np.zeros((1, 4)), remainder=plant.remainder)
    P = scale_facets(paper_template, 0.5)
    report = vf.monte_carlo_contractivity(
        P, vf.plant_step_map(plant, bad, P), lam=1.0, n_samples=300, seed=1)
    assert not report.passed and report.violations


def test_monte_carlo_determinism(example1_maps):
    plant, P, rep, _ = example1_maps
    step = vf.rep_step_map(rep, plant.remainder)
    a = vf.monte_carlo_contractivity(P, step, 1.0, n_samples=200, seed=7)
    b = vf.monte_carlo_contractivity(P, step, 1.0, n_samples=200, seed=7)
    np.testing.assert_array_equal(a.worst_margin, b.worst_margin)
    assert a.to_json() == b.to_json()


def test_monte_carlo_requires_samples(example1_maps):
    plant, P, rep, _ = example1_maps
    with pytest.raises(ValueError):
        vf.monte_carlo_contractivity(P, vf.rep_step_map(rep, plant.remainder),
                                     1.0, n_samples=0)


def test_boundary_sampler_validity(paper_template):
    P = paper_template
    rng = np.random.default_rng(3)
    n = 3000
    pts = vf.sample_boundary(P, n, rng)
    counts = np.zeros(P.s)
    for x in pts:
        residual = P.F @ x - P.g
        active = np.where(np.abs(residual) <= 1e-9)[0]
        assert active.size >= 1
        counts[active[0]] += 1
    expected = n / P.s
    sigma = np.sqrt(n * (1 / P.s) * (1 - 1 / P.s))
    assert np.all(np.abs(counts - expected) <= 3 * sigma)


def test_interior_sampler_inside(paper_template):
    rng = np.random.default_rng(4)
    pts = vf.sample_interior(paper_template, 500, rng)
    assert np.all(paper_template.F @ pts.T <= paper_template.g[:, None])


def quadratic_part(A, b):
    val = lambda x: np.array([x @ Ak @ x + bk @ x for Ak, bk in zip(A, b)])
    jac = lambda x: np.array([2 * Ak @ x + bk for Ak, bk in zip(A, b)])
    return val, jac


def test_dc_majorizer_tangency_and_zero():
    rng = np.random.default_rng(9)
    n, s = 3, 4
    A_beta = [m.T @ m for m in rng.normal(size=(s, n, n))]
    A_phi = [m.T @ m for m in rng.normal(size=(s, n, n))]
    b_beta, b_phi = rng.normal(size=(s, n)), rng.normal(size=(s, n))
    beta = quadratic_part(A_beta, b_beta)
    phi = quadratic_part(A_phi, b_phi)
    x_ref = rng.normal(size=n)
    c = rng.normal(size=s)
    # tangency: first-order terms vanish at x = x_ref
    H_ref = float(c @ (beta[0](x_ref) - phi[0](x_ref)))
    assert vf.dc_majorizer(beta, phi, c, x_ref, x_ref) == pytest.approx(
        H_ref, abs=1e-9)
    assert vf.dc_majorizer(beta, phi, np.zeros(s), rng.normal(size=n),
                           x_ref) == 0.0


def test_dc_majorizer_matches_quadratic_convexification():
    """With phi = (eps/2)||x||^2 and beta = h + phi, the majorizer for c = e_i
    collapses to c' beta(x) - eps x_ref' x + (eps/2) ||x_ref||^2."""
    rem = remainder(monomial_dictionary([(3,), (2,)], 1))
    eps = 0.7
    w = np.array([0.4, -0.2])
    h = lambda x: np.array([float(w @ rem.q(x))])
    h_jac = lambda x: (w @ rem.jacobian(x)).reshape(1, 1)
    beta = (lambda x: h(x) + 0.5 * eps * float(x @ x),
            lambda x: h_jac(x) + eps * np.atleast_2d(x))
    phi = (lambda x: np.array([0.5 * eps * float(x @ x)]),
           lambda x: eps * np.atleast_2d(x))
    rng = np.random.default_rng(1)
    for _ in range(50):
        x = rng.uniform(-1, 1, size=1)
        x_ref = rng.uniform(-1, 1, size=1)
        R = vf.dc_majorizer(beta, phi, np.ones(1), x, x_ref)
        closed_form = float(beta[0](x)[0] - eps * x_ref @ x
                            + 0.5 * eps * float(x_ref @ x_ref))
        assert R == pytest.approx(closed_form, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-2.0, 2.0), min_size=2, max_size=2),
       st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_dc_majorizer_dominates_on_scalar_dc_pairs(c, x, x_ref):
    """c'(beta - phi) <= R for convex scalar pieces, any reference point."""
    beta = (lambda y: np.array([float(y @ y), float(np.exp(y[0]))]),
            lambda y: np.array([2 * y, [np.exp(y[0])]]))
    phi = (lambda y: np.array([float(2 * y[0] ** 2), float((y[0] - 1) ** 2)]),
           lambda y: np.array([[4 * y[0]], [2 * (y[0] - 1)]]))
    xv, rv = np.array([x]), np.array([x_ref])
    H = float(np.dot(c, beta[0](xv) - phi[0](xv)))
    R = vf.dc_majorizer(beta, phi, np.array(c), xv, rv)
    assert H <= R + 1e-9


def test_convexified_facet_map_vertex_max():
    """Adding the certified curvature slack as a quadratic makes each facet
    map convex, so its grid maximum is attained at a vertex."""
    from polycert import synthesis as sy
    from polycert.plant import PlantModel, collect_experiment
    rem = remainder(monomial_dictionary([(3,)], 1))
    plant = PlantModel(A1=np.array([[0.5]]), A2=np.array([[-0.2]]),
                       B=np.array([[1.0]]), remainder=rem)
    P = box([0.3])
    data = collect_experiment(plant, 8, input_gen=lambda rng, t: np.zeros(1),
                              x0=np.array([0.29]), seed=1)
    spec = sy.CertificateSpec(polytope=P, data=data, remainder=rem, lam=1.0)
    res = sy.synth_dc_global(spec)
    assert res.optimal and res.slacks["eps"].max() > 1e-3
    grid = np.linspace(-0.3, 0.3, 2001)
    for fmap in vf.facet_maps(res.rep, P, rem):
        eps_i = res.slacks["eps"][fmap.index]
        htilde = fmap.value_columns(grid[None, :]) + 0.5 * eps_i * grid ** 2
        vertex_max = max(fmap.value(np.array([v])) + 0.5 * eps_i * v ** 2
                         for v in (-0.3, 0.3))
        assert htilde.max() <= vertex_max + 1e-9


def test_report_serialization(example1_maps, tmp_path):
    plant, P, rep, _ = example1_maps
    report = vf.monte_carlo_contractivity(
        P, vf.rep_step_map(rep, plant.remainder), 1.0, n_samples=100, seed=2)
    d = report.to_dict()
    assert d["passed"] and d["samples"] == 100
    assert "confidence" in report.confidence_note or "violation" in report.confidence_note
