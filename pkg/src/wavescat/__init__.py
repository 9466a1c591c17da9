"""wavescat: scattering matrices of 2-D Helmholtz waveguides.

The pipeline truncates the cylindrical ends of a waveguide at a radius R,
solves an auxiliary impedance problem there with a finite element method,
and approximates each row of the scattering matrix by the minimizer of a
quadratic functional of cross-section trace residues.  The approximation
error decays exponentially in R on spectral intervals free of transverse
cut-off values, whether or not trapped modes are present.
"""

from .errors import (
    ConfigError,
    ConvergenceError,
    GeometryError,
    InvalidImpedanceError,
    InvalidRadiusError,
    MeshParameterError,
    NumericsError,
    SingularGramError,
    SingularSystemError,
    ThresholdProximityError,
    WavescatError,
)
from .geometry import (
    CrossSection,
    CylindricalEnd,
    TruncatedDomain,
    WaveguideScene,
    make_scene,
    scene_from_json,
    scene_to_json,
    truncate,
    validate_scene,
)
from .helmholtz import BoundaryData, FieldSolution, TruncatedSystem, assemble, prop43_check, solve
from .mesh import Mesh, TraceMesh, check_mesh, generate, trace_mesh, write_mesh
from .oracle import (
    StepJunction,
    step_junction_S,
    step_scene_S,
    straight_guide_S,
    straight_guide_truncated_S,
)
from .scattering import (
    ConvergenceStudy,
    GramMatrices,
    ScatteringResult,
    assemble_gram,
    compute_scattering,
    convergence_from_results,
    convergence_study,
    fit_decay_rate,
    minimize_row,
)
from .spectral import (
    INCOMING,
    OUTGOING,
    PropagatingMode,
    TransverseBasis,
    Wave,
    enumerate_modes,
    gamma_estimate,
    make_wave,
    transverse_eigs,
    wronskian,
)

__version__ = "0.1.0"
