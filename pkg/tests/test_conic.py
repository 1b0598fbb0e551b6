import cvxpy as cp
import numpy as np
import pytest

from polycert import conic
from polycert.polytope import box, enumerate_vertices


def test_soc_minimum():
    prog = conic.Program()
    z = prog.declare("z", 3)
    t = prog.declare("t")
    prog.add_soc(z, t)
    prog.set_objective(t)
    sol = prog.solve()
    assert sol.optimal
    assert sol.objective_value == pytest.approx(0.0, abs=1e-8)
    np.testing.assert_allclose(sol["z"], 0.0, atol=1e-6)


def test_lp_minimum():
    prog = conic.Program()
    x = prog.declare("x")
    prog.add_ineq(1.0 - x)
    prog.set_objective(x)
    assert prog.solve().objective_value == pytest.approx(1.0, abs=1e-8)


def test_psd_two_by_two():
    # oracle: [[x,1],[1,x]] >= 0 iff x >= 0 and x^2 >= 1, so min x = 1
    prog = conic.Program()
    x = prog.declare("x")
    xm = cp.reshape(x, (1, 1), order="F")
    prog.add_psd(cp.bmat([[xm, np.ones((1, 1))], [np.ones((1, 1)), xm]]))
    prog.set_objective(x)
    sol = prog.solve()
    assert sol.objective_value == pytest.approx(1.0, abs=1e-6)


def test_infeasible_is_a_signal():
    prog = conic.Program()
    y = prog.declare("y")
    prog.add_ineq(y, "upper")
    prog.add_ineq(1.0 - y, "lower")
    prog.set_objective(y)
    sol = prog.solve()
    assert sol.status == conic.STATUS_INFEASIBLE
    groups = prog.diagnose_infeasibility()
    assert groups and set(groups) <= {"upper", "lower"}


def test_duplicate_name_and_shape_errors():
    prog = conic.Program()
    prog.declare("x", 3)
    with pytest.raises(conic.DuplicateNameError):
        prog.declare("x")
    with pytest.raises(conic.ShapeMismatchError):
        prog.add_psd(prog.declare("M", (2, 3)))
    with pytest.raises(conic.ShapeMismatchError):
        prog.add_psd(prog.declare("big", (11, 11)))


def test_lp_strong_duality_on_random_instances():
    rng = np.random.default_rng(17)
    for _ in range(50):
        n = int(rng.integers(2, 4))
        radii = rng.uniform(0.5, 2.0, size=n)
        F = np.vstack([np.eye(n), -np.eye(n)])
        g = np.concatenate([radii, radii])
        c = rng.normal(size=n)

        primal = conic.Program()
        x = primal.declare("x", n)
        primal.add_ineq(F @ x - g)
        primal.set_objective(-c @ x)  # maximize c'x
        p = primal.solve()

        dual = conic.Program()
        a = dual.declare("a", 2 * n)
        dual.add_eq(F.T @ a - c)
        dual.add_ineq(-a)
        dual.set_objective(g @ a)
        d = dual.solve()

        assert p.optimal and d.optimal
        assert -p.objective_value == pytest.approx(d.objective_value, abs=1e-6)


def test_post_solve_audit_recorded():
    prog = conic.Program()
    x = prog.declare("x", 4)
    prog.add_ineq(np.ones(4) - x)
    prog.set_objective(cp.sum(x))
    sol = prog.solve()
    assert sol.optimal
    assert sol.solver_stats["audit_violation"] <= 1e-6


def test_psd_at_vertices_implies_interior():
    """Affine-in-x PSD families that hold at box vertices hold inside."""
    rng = np.random.default_rng(23)
    P = box([1.0, 1.0, 1.0])
    verts = enumerate_vertices(P).vertices
    for _ in range(5):
        M0 = rng.normal(size=(4, 4))
        M0 = 0.5 * (M0 + M0.T)
        Mc = []
        for _ in range(3):
            A = rng.normal(size=(4, 4))
            Mc.append(0.5 * (A + A.T))
        evaluate = lambda x: M0 + sum(x[c] * Mc[c] for c in range(3))
        worst = min(np.linalg.eigvalsh(evaluate(v)).min() for v in verts)
        M0 = M0 + (0.01 - worst) * np.eye(4)  # shift to PSD at all vertices
        evaluate = lambda x: M0 + sum(x[c] * Mc[c] for c in range(3))
        for _ in range(200):
            x = rng.uniform(-1, 1, size=3)
            assert np.linalg.eigvalsh(evaluate(x)).min() >= -1e-8


def test_dump_portable_format():
    prog = conic.Program()
    x = prog.declare("x", 2)
    t = prog.declare("t")
    prog.add_soc(x - np.ones(2), t)
    prog.add_ineq(-x)
    prog.set_objective(t)
    d = prog.dump()
    assert d["format"] == "scs-cone-v1"
    assert set(d) >= {"variables", "c", "b", "A", "cones"}
    assert d["A"]["shape"][0] == len(d["b"])
    assert d["cones"]["soc"]
