"""Built-in benchmark systems.

``paper-sysV``: the three-state single-input plant with cubic/quadratic
dictionary used throughout the numerical study, with the two tunable
nonlinearity coefficients exposed as (e1, e2) slots.
"""

from __future__ import annotations

import numpy as np

from .basis import monomial_dictionary, remainder
from .plant import PlantModel
from .polytope import Polytope, box

PAPER_A1 = np.array([
    [0.90, 0.02, 0.00],
    [-0.30, 0.85, 0.01],
    [0.05, 0.00, 0.80],
])
PAPER_B = np.array([[0.0], [0.1], [0.0]])
PAPER_MONOMIALS = [(3, 0, 0), (0, 3, 0), (0, 0, 3), (2, 0, 0)]

# reported study values for the summary table: (|e1|, |e2|, r*)
PAPER_REPORTED = {
    ("thm1", None): (0.04, 0.015, 0.605),
    ("thm3", "unstructured"): (0.24, 0.31, 0.97),
    ("thm3", "structured"): (0.25, 0.51, 1.15),
    ("thm3", "active_only"): (7.0, 6.5, 1.25),
    ("thm4", None): (0.19, 0.26, 0.93),
}


def paper_dictionary():
    return monomial_dictionary(PAPER_MONOMIALS, 3)


def paper_a2(e1: float, e2: float) -> np.ndarray:
    return np.array([
        [e1, 0.0, 0.0, 0.0],
        [0.0, -0.2, 0.0, 0.0],
        [0.0, -0.008, e2, -0.05],
    ])


def paper_plant(e1: float = -0.01, e2: float = -0.005, h_w: float = 0.0) -> PlantModel:
    return PlantModel(A1=PAPER_A1, A2=paper_a2(e1, e2), B=PAPER_B,
                      remainder=remainder(paper_dictionary()), h_w=h_w)


def paper_box(r: float = 1.0) -> Polytope:
    return box([r, r, r])


def paper_input_polytope(limit: float = 1.0):
    return np.array([[1.0], [-1.0]]), np.array([limit, limit])


def example1_plant(h_w: float = 0.0) -> PlantModel:
    """Scalar plant x+ = 1.2 x - 0.2 x^3 + u with dictionary {x^3}."""
    rem = remainder(monomial_dictionary([(3,)], 1))
    return PlantModel(A1=np.array([[1.2]]), A2=np.array([[-0.2]]),
                      B=np.array([[1.0]]), remainder=rem, h_w=h_w)


def example1_polytope() -> Polytope:
    """The one-sided interval [-1, 0] in the facet order (-x <= 1, x <= 0)."""
    return Polytope(np.array([[-1.0], [1.0]]), np.array([1.0, 0.0]))
