"""Numerical laboratory for the Helfrich-Hurault undulation instability of
smectic-A liquid crystals under a strong magnetic field: closed-form spectral
and bifurcation analysis of the linearized model, symmetry-classified branch
construction, and 3D/2D gradient-flow solvers."""

__version__ = "0.1.0"

from .core import (DefectError, DomainError, EnergyIncreaseError, Field2D,
                   Field3D, Grid2D, Grid3D, MaterialParameters, Parameters,
                   derive_dimensionless, load_snapshot, load_snapshot2d,
                   perturbed_state, save_snapshot, save_snapshot2d,
                   uniform_state)
from .energy import (EnergyBreakdown, WallPattern, WallSegment, demag_field,
                     pattern_lower_bound, planar_energy,
                     quadratic_expansion_check, second_variation, solve_phase,
                     square_limit_field, square_pattern, stripe_limit_field,
                     stripe_pattern, total_energy, wall_energy_density)
from .solver2d import (Solver2D, SolverConfig2D, Trace2D, classify_pattern,
                       perturbed_state2d, run2d, step2d)
from .solver3d import (Solver3D, SolverConfig3D, Trace, dominant_mode,
                       midplane_amplitude, rhs, run, step)
from .spectrum import (EigenProfile, ModeIndex, ModeSpectrum, apply_L,
                       critical_field, detect_resonances, eigenfunction,
                       eigenvalue_slope, eigenvalues, global_critical_field,
                       mode_displacement, mode_spectrum, spectrum_table)
from .symmetry import (BranchProfile, GroupElement, IsotropySpec,
                       apply_group_element, branch_profile, is_fixed,
                       mode_action, transform_state)
