"""Multigoal-oriented adaptive finite elements for 2D elliptic problems."""

from .mesh import (DIRICHLET, NEUMANN, Mesh, MeshError, Subdomain,
                   check_conforming, make_initial_mesh, refine_nvb,
                   shape_quality, uniform_refine, write_mesh)
from .fem import (FeSolution, FeSpace, GalerkinSolver, Goal, ProblemData,
                  build_space, energy_inner, energy_norm, evaluate_functional,
                  prolongate, prolongation_matrix, solve_galerkin,
                  write_solution)
from .estimator import IndicatorField, residual_indicators
from .marking import (ActiveHistory, CAP_LARGEST, EMPTY, IRREGULAR,
                      MarkDecision, REGULAR, combine_marks, decide_marking,
                      doerfler_min, irregular_select, satisfies_doerfler)
from .driver import (AdaptiveConfig, History, LevelRecord, ParameterError,
                     rate_fit, run, tail_ratio, validate_params)

__all__ = [name for name in dir() if not name.startswith("_")]
