"""Horizon geometry, Hamiltonian flows, complex absorption, quasinormal-mode
computations, and Mellin-transform asymptotics for de Sitter-type model
spacetimes."""

__version__ = "0.1.0"

from .spacetime import (SpacetimeParams, HorizonData, AdmissibilityReport,
                        NoHorizons, PolarSingularity, InfeasibleC,
                        mu_tilde, horizon_roots, admissibility, dual_metric,
                        choose_c, load_params)
from .symbols import (PhasePoint, CompactPhasePoint, SemiclassicalPoint,
                      kds_classical_symbol, kds_full_symbol,
                      kds_semiclassical_symbol, hamilton_field,
                      ds_symbol_polar, ds_symbol_flat, minkowski_mode_coeffs,
                      subprincipal_beta)
from .dynamics import (Bicharacteristic, RadialSetReport, TrappedSetPoint,
                       LinearizationSpectrum, integrate_flow, classify_radial,
                       find_trapped_set, trapping_linearization, escape_scan,
                       mild_trap_function_check)
from .absorption import (AbsorbingSpec, EllipticityReport, BranchCut, f_z,
                         q_semiclassical, extend_p, ellipticity_scan)
from .resonances import (DiscretizedOperator, Resonance, ResonanceList,
                         build_operator, solve_resonances, oracle_shooting,
                         resolvent_apply, gluing_check,
                         cutoff_correspondence_check)
from .mellin import (TemporalSamples, ExpansionTerm, mellin_transform,
                     inverse_mellin, resonance_expand, fit_decay, threshold)
