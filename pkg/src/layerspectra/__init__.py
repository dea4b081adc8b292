"""Bound states of Dirichlet quantum layers built over rotational hypersurfaces of R^4.

The package follows one pipeline: a curvature profile generates the
meridian (:mod:`.meridian`), the layer is checked for admissibility
(:mod:`.layer`), curvature invariants are integrated (:mod:`.invariants`),
a variational certificate is attempted (:mod:`.certifier`) and the ground
state is computed directly (:mod:`.eigsolve`).

Hot loops carry numba kernels; set ``LAYERSPECTRA_NO_NUMBA=1`` for the
pure-numpy twins.
"""
__version__ = "0.1.0"

from ._accel import NUMBA_AVAILABLE  # noqa: E402
from .constants import V3, W2, threshold  # noqa: E402
from .errors import (  # noqa: E402
    AdmissibilityError,
    ConfigError,
    ConsistencyError,
    EigensolverError,
    InconclusiveError,
    LayerSpectraError,
    NoBumpError,
)
from .layer import LayerSpec, make_layer, validate  # noqa: E402
from .meridian import CurvatureProfile, build_meridian, principal_curvatures  # noqa: E402

__all__ = [
    "AdmissibilityError",
    "ConfigError",
    "ConsistencyError",
    "CurvatureProfile",
    "EigensolverError",
    "InconclusiveError",
    "LayerSpec",
    "LayerSpectraError",
    "NUMBA_AVAILABLE",
    "NoBumpError",
    "V3",
    "W2",
    "__version__",
    "build_meridian",
    "make_layer",
    "principal_curvatures",
    "threshold",
    "validate",
]
