"""Numerical toolkit for surfaces in the first Heisenberg group.

Modules: ``core`` (group law, left-invariant frame), ``surface`` (charts and frame
fields), ``characteristic`` (characteristic curves, ruled parameterizations),
``codazzi`` (profiles of u along rulings), ``variation`` (area, first and second
variation) and ``cli``.
"""
from .core import (Point, FrameVector, group_product, group_inverse, euclidean_to_frame, frame_to_euclidean,
                   j_operator, inner_product, horizontal_line, horizontality_residual)
from .surface import (TGraph, IntrinsicGraph, RuledChart, frame_field, surface_frame, singular_scan,
                      load_surface, builtin, vertical_plane, paraboloid, helicoid, ruled_vertical_plane,
                      helicoid_intrinsic, u_lambda, v_lambda)
from .characteristic import (trace_characteristic, seed_curve, straightness_residual, ruled_from_seed,
                             deformation_vector, vertical_component_poly, foliation_jacobian)
from .codazzi import (CodazziCoeffs, CurveProfile, codazzi_solution, q_along_line, codazzi_residual,
                      fit_codazzi_coeffs, ruling_profile, d_equation_residual)
from .variation import (area, first_variation_graph, first_variation_general, first_variation_H, flux,
                        divergence_identity_residual, q_function, stability_form, instability_search, bump)
from . import errors

__version__ = "0.1.0"
