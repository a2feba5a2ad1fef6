"""Signed volume and projected area of open polygonal arms in 3-space.

Library layout:

    geometry     arm configurations, shoelace area, signed volume,
                 projected area, orthogonal projection
    variational  gradients, first-order condition residuals, tangent
                 Hessians, Morse data
    search       deterministic multistart critical-point search,
                 Newton refinement, canonicalization, dedupe
    classify     structure classification of critical configurations
                 (circle fits, closing/diameter/zigzag verdicts)
    gram         the Gram-determinant picture for 3-edge arms,
                 isosurface extraction, OBJ export
    morsepoly    exact integer polynomials and the Bott-Morse check
    cli          the ``armvol`` command-line front end
"""

from .geometry import (ArmConfiguration, Mode, plane_basis, project_perp,
                       projected_area, signed_area, signed_volume,
                       signed_volume_many, triple_product)
from .variational import (ConditionResiduals, MorseData, condition_residuals,
                          euclidean_gradient, gradient_check, gradient_norm,
                          hessian_tangent, morse_data, riemannian_gradient)
from .search import (ConvergenceError, CriticalPointRecord, SearchOptions,
                     SearchResult, canonicalize, dedupe, find_critical_points,
                     refine_newton, search_critical_points)
from .classify import (ChainCheck, CircleFit, CircleFitError,
                       ClassificationReport, JointFlag, Label, PlanarSubtype,
                       Verdict, ZigzagCheck, check_cyclic_closed,
                       check_diacyclic, classify_critical, detect_zigzag,
                       fit_circle)
from .gram import (GramCriticalPoint, GramPoint, TriangleMesh,
                   cosine_rule_convert, extract_isosurface, gram_critical_points,
                   gram_det, gram_from_config, gram_gradient, gram_hessian,
                   reconstruct_from_gram, reflection_identity_residual,
                   roundtrip_residual, write_obj)
from .morsepoly import (BottMorseResult, CriticalManifoldDatum, IntPolynomial,
                        bott_morse_check, datum_from_spectrum,
                        divide_by_one_plus_t)

__version__ = "0.1.0"
