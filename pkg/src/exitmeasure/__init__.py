"""Reconstruction of inaccessible Dirichlet boundary data from interior
measurements, via exit statistics of walk-on-ellipsoids chains and
truncated-SVD inversion of the estimated transfer operator."""

from .backend import BACKEND
from .conductivity import ConductivityTensor, identity_tensor, make_tensor
from .estimator import (DensityEstimate, EstimatorBundle, MeasurementSet,
                        averaged_density, density, make_measurements, mc_rem,
                        save_bundle)
from .geometry import (Ball, BoundaryPointSet, Box, Domain, bauer_spiral,
                       boundary_points, catalog, circle_points, classify_shell,
                       dist_to_boundary, make_domain, side_points,
                       square_points, surface_measure)
from .problems import (EXAMPLES, SOLUTIONS, ExactSolution, ExampleConfig,
                       annulus_hit_oracle, boundary_truth, poisson_kernel_oracle,
                       reconstruction_error, synthesize_measurements)
from .tsvd import (SpectralSolution, TSVDFamily, dual_form_check,
                   perturb_measurements, spectrum, tsvd_family)
from .walk import (CauchyTrace, ExitSample, WalkConfig, batch_exits,
                   extrapolate_cauchy, mean_steps_profile, run_walk,
                   sample_unit_sphere)
from .weights import (WeightFamily, cell_measures, eval_weights, idw_family,
                      interpolate, make_family, voronoi_family)

__version__ = "0.1.0"
