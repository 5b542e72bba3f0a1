"""Canonical Cartan connection of 4-dimensional Engel CR manifolds."""

from .cartan import (curvature_report, curvature_table, connection_coefficients,
                     connection_form, distinguished_frame_at, essential_curvatures,
                     flatness_test, global_scale_test, integrability_check, umbilicity_test)
from .cohomology import (Cochain, Cochain2, classify_curvature_cochain, coboundary,
                         cocycle_space, cohomology_report)
from .engel import (EngelStructure, find_D0, levi_tanaka_at, normalize_scale, validate)
from .errors import (EngelCRError, EngelDegenerate, InsufficientOrder, ManifoldFileError,
                     NotD0Aligned)
from .fields import adapted_frame, dual_coframe, lie_bracket, structure_functions
from .jets import Jet
from .models import (NormalFormCoefficients, cubic, graph_to_engel, normal_form_model,
                     ode_normal_coordinates)

__version__ = "0.1.0"
