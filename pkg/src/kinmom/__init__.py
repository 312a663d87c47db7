"""kinmom: grid operators and identity checks for the kinetic angular
momentum of a charged particle in a static electromagnetic field.

The library builds sparse finite-difference operators (position, momentum,
kinetic momentum, canonical and kinetic angular momentum, Hamiltonian,
magnetic force, torque), verifies their commutator identities as measured
grid residuals with known convergence order, runs unitary wavepacket
propagation, and probes how expectation values respond to gauge
transformations.
"""

from .fields import (FieldConfig, FieldExprError, Poly3, curl,
                     gauge_transform, grad, make_coulomb_quadratic,
                     make_uniform_B, make_zero_field, parse_scalar_field,
                     parse_vector_field, rational)
from .operators import (Grid, GridMismatchError, LinearOperator,
                        StateSpecError, WaveFunction, anticommutator_apply,
                        commutator_apply, derivative_operator, expectation,
                        gauge_phase, gaussian_packet, hamiltonian_operator,
                        identity_operator, l_operator, L_operator,
                        lorentz_force_operator, magnetic_force_operator,
                        momentum_operator, pi_operator, position_operator,
                        torque_operator)
from .tensors import (IdentityReport, Index3, levi_civita,
                      verify_delta_contraction, verify_field_contraction,
                      verify_quadruple_contractions)
from .verify import (ConvergenceReport, GaugeExpectationReport,
                     ResidualReport, convergence_study, family_names,
                     fit_order, verify_angular_ehrenfest_static,
                     verify_force_forms, verify_gauge_expectations,
                     verify_ll_commutation, verify_LL_commutation,
                     verify_pipi_commutation)
from .dynamics import (CrankNicolson, PropagationDomainError,
                       PropagationTrace, SolverError, crank_nicolson_step,
                       dense_ground_state, ground_state, observable_operator,
                       propagate_and_track, verify_angular_ehrenfest_dynamic)
from .scenarios import (RunReport, Scenario, ScenarioError, builtin_names,
                        builtin_scenario, emit_report, parse_scenario, run)

__version__ = "0.1.0"
