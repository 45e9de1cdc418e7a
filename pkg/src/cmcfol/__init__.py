"""Constant mean curvature and constant Gauss curvature surfaces in (2+1)-dimensional
flat, anti-de Sitter and de Sitter cone spacetimes over a torus with cone points."""
from .errors import CmcError
from .flow import (
    DualityMap,
    FlowResult,
    admissible_interval,
    dual_embedding,
    dual_parameter,
    duality_eval,
    flow_embedding,
    flow_point,
    k_leaf_from_cmc,
    third_form,
)
from .foliation import gauss_bonnet_report, k_leaves, ordering_report, spacetime_chart, sweep
from .geometry.mesh import Grading, MarkedSurface, build_torus_mesh
from .geometry.metric import ConeMetric, background_factor, discrete_curvature, laplacian_and_mass
from .geometry.models import ModelGeometry, model_chart_metric
from .geometry.operators import (
    FramedMetric,
    QuadraticDifferentialField,
    TangentOperatorField,
    codazzi_residual,
    operator_from_quaddiff,
    quad_diff_field,
)
from .landslide import (
    hopf_from_embedding,
    holomorphicity_residual,
    landslide_check,
    left_right_metrics,
    minimal_lagrangian_certificate,
)
from .solver import (
    CmcProblem,
    ConformalSolution,
    EmbeddingData,
    SolverOptions,
    assemble_problem,
    build_embedding,
    evaluate_functional,
    gauss_residual,
    minimize,
    principal_curvatures,
    solve_cmc,
    uniformize,
)

__version__ = "0.1.0"
