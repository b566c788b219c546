"""Power-flow solving via per-bus circle intersection, with classical
Newton-Raphson, Gauss-Seidel, and damped-Newton reference solvers."""

from .baselines import (BaselineConfig, solve_damped_newton,
                        solve_gauss_seidel, solve_newton)
from .caseio import (NetworkCase, ParseError, load_case, parse_case,
                     scale_loading, serialize_case)
from .fpsolver import (ExplicitStart, FlatStart, SolveReport, SolverConfig,
                       Status, UniformRandomStart, solve)
from .geometry import (CircleTuple, IntersectionKind, IntersectionResult,
                       PlanePoint, intersect_circles, orthogonal_circle,
                       radical_line)
from .netmodel import (AdmittanceModel, BranchSpec, BusKind, BusSpec,
                       TCoefficients, build_admittance, t_coefficients)

__all__ = [
    "AdmittanceModel", "BaselineConfig", "BranchSpec", "BusKind", "BusSpec",
    "CircleTuple", "ExplicitStart", "FlatStart", "IntersectionKind",
    "IntersectionResult", "NetworkCase", "ParseError", "PlanePoint",
    "SolveReport", "SolverConfig", "Status", "TCoefficients",
    "UniformRandomStart", "build_admittance", "intersect_circles",
    "load_case", "orthogonal_circle", "parse_case", "radical_line",
    "scale_loading", "serialize_case", "solve", "solve_damped_newton",
    "solve_gauss_seidel", "solve_newton", "t_coefficients",
]

__version__ = "0.1.0"
