"""Gradient-flow desingularization toolkit.

Scalar fields vanishing on a zero locus are analyzed through their
descending gradient flow: trajectory integration under three clocks,
limit retraction onto the zero locus, per-level gradient extrema profiles,
nondegeneracy classification, desingularization certificates, continuous
envelopes of semicontinuous profiles, and mapping-cylinder charts of the
flow near the zero locus.
"""

from .cylinder import (CylinderChart, CylinderError, TrajectorySpaceChart,
                       build_chart, choose_c_sequence, cylinder_coords,
                       cylinder_grid, evaluate_fhat, extract_H,
                       uniform_reference_points, verify_cylinder)
from .desing import (DesingError, ExponentFit, IntegrabilityVerdict, PointClass,
                     VerificationReport, build_psi_from_a, classify_point,
                     fit_lojasiewicz_exponent, integrability_verdict,
                     no_curve_diagnostic, oracle_1d, trichotomy_verdict,
                     verify_certificate)
from .envelope import (EnvelopeError, EnvelopeResult, SemicontinuousProfile,
                       build_envelope, comb_profile, integrable_majorant_for_alpha,
                       moreau_envelope)
from .fields import (DomainSpec, FieldError, FieldZooEntry, ScalarField,
                     field_from_expression, get_zoo_entry, iter_zoo,
                     load_field_file, make_distance_power_field,
                     make_morse_field, make_transnormal_field, zoo_names)
from .flow import (Clock, FlowError, IntegratorControls, Termination, Trajectory,
                   integrate, length_function, limit_curve, reparametrize_clock,
                   retract, safe_set_test, trajectory_length)
from .levelset import (CompactBox, LevelSetError, LevelSetProfile, build_profile,
                       gradient_extrema, sample_level)
from .profiles import (KLCertificate, Profile1D, power_law_certificate,
                       power_law_profile, profile_from_callable)

__version__ = "0.1.0"
