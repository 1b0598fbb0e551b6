import numpy as np
import pytest

from polycert import (CertificateSpec, collect_experiment, maximize_radius,
                      presets)
from polycert.presets import (example1_plant, example1_polytope, paper_box,
                              paper_plant)

_ACCEPTANCE_RESULTS = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        _ACCEPTANCE_RESULTS.append((name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in _ACCEPTANCE_RESULTS:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}")


@pytest.fixture(scope="session")
def paper_template():
    return paper_box(1.0)


@pytest.fixture(scope="session")
def paper_data(paper_template):
    plant = paper_plant(-0.01, -0.005)
    data = collect_experiment(plant, 20, polytope=paper_template, seed=0)
    return plant, data


@pytest.fixture(scope="session")
def paper_spec(paper_template, paper_data):
    plant, data = paper_data
    return CertificateSpec(polytope=paper_template, data=data,
                           remainder=plant.remainder, lam=1.0)


@pytest.fixture(scope="session")
def example1_data():
    plant = example1_plant()
    P = example1_polytope()
    data = collect_experiment(plant, 10, x0=np.array([-0.5]), seed=2)
    return plant, P, data


@pytest.fixture(scope="session")
def example1_autonomous_data():
    """Zero-input experiment: the gains are forced to zero."""
    plant = example1_plant()
    P = example1_polytope()
    data = collect_experiment(plant, 10, input_gen=lambda rng, t: np.zeros(1),
                              x0=np.array([-0.9]), seed=4)
    return plant, P, data


@pytest.fixture(scope="session")
def paper_rmax(paper_spec):
    """Certified maximal radii on the seed-0 paper system, reused across
    acceptance criteria (bisection tolerance 5e-3)."""
    out = {}
    out["thm1"] = maximize_radius(paper_spec, "thm1", tol=5e-3)
    for mode in ("unstructured", "structured", "active_only"):
        out[("thm3", mode)] = maximize_radius(paper_spec, "thm3", mode=mode,
                                              tol=5e-3, verify_n=2000)
    return out
