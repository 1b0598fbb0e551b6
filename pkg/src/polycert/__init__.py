"""Data-driven synthesis of state feedback that renders a prescribed
polytopic safe set contractive, certified from a single input-state
experiment."""

from .basis import (BasisDictionary, LipschitzEnvelope, Remainder,
                    curvature_affine, curvature_operator, lipschitz_on,
                    monomial_dictionary, remainder)
from .conic import Program, Solution, SolverConfig
from .plant import (ClosedLoopRep, ExperimentData, PlantModel,
                    closed_loop_rep, collect_experiment, pinv_rep,
                    simulate_plant)
from .polytope import (Face, FacetPartition, Polytope, VertexSet, box,
                       enumerate_vertices, facet_face, from_halfspaces,
                       max_vertex_norms, minimal_face, minkowski_gauge,
                       proper_faces, scale_facets, sign_symmetric_partition)
from .runtime import (GlobalController, Trajectory, VertexController,
                      eval_controller, face_weights, simulate_closed_loop)
from .synthesis import (CertificateSpec, RadiusResult, SweepResult,
                        SweepTemplate, SynthesisResult, add_input_constraints,
                        maximize_radius, result_to_controller,
                        sweep_coefficient, synth, synth_dc_global,
                        synth_hybrid, synth_lipschitz, synth_robust,
                        synth_vertexwise)
from .verify import (FacetMap, VerificationReport, dc_majorizer, facet_maps,
                     family_step_map, grid_max_oracle, lipschitz_bound_vs_exact,
                     monte_carlo_contractivity, plant_step_map, rep_step_map)

__version__ = "0.1.0"
