"""Morse and Maslov counts for matrix Hill equations with twisted boundary conditions."""

from .crossings import (CrossingRecord, ScanSettings, crossing_form_lambda, crossing_form_s,
                        crossing_indicator, find_crossings_lambda, find_crossings_s,
                        multiplicity_at)
from .errors import (ConfigError, ConvergenceError, HillMaslovError, NearSingularError,
                     NumericalError, ResolutionError)
from .hill import (HillProblem, PotentialSpec, Propagator, RotationFlow, boundary_rotation,
                   coefficient_matrix, eval_potential, fundamental_matrix, lambda_inf_default,
                   propagator, realify, rotation_flow, s_min_bound)
from .maslov import (CurveSummary, MaslovReport, curve_summary, full_report, morse_index_matrix,
                     morse_index_theta, sweep_theta)
from .symplectic import (LagrangianFrame, ReferencePlane, SymplecticForm, intersection_dim,
                         omega_matrix, reference_plane, trace_frame)

__version__ = "0.1.0"
