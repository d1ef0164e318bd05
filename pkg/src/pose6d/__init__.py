"""pose6d: PnP-free 6D object pose toolkit.

Differentiable pinhole projection of 3D box corners, the (a, b, c)
rotation encoding with exact Jacobians, a region-grid pose codec,
Levenberg-Marquardt pose fitting, annotation solvers, and evaluation
metrics, exposed through a CLI (``pose6d``) and a stateless HTTP service.
"""

from .errors import (DegenerateAnnotation, DegenerateDepth, EmptyGrid,
                     EmptySet, LengthMismatch, NonOrthonormal, OutOfFrustum,
                     ParseError, Pose6dError, RankDeficient, SingularRotation,
                     SingularTransform, UnencodableOffset)
from .rotations import (AbcRotation, abc_to_rotation, is_rotation_matrix,
                        nearest_rotation, orthonormality_error,
                        rotation_angle_between, rotation_jacobian,
                        rotation_to_abc)
from .projection import (BOX_EDGES, CameraIntrinsics, Pose, box_corners,
                         loss_gradient, project, projection_jacobian,
                         reprojection_loss)
from .region import (EncodedTranslation, GridDecodeConfig, RegionCellOutput,
                     decode_box2d, decode_pose, decode_translation,
                     empty_grid, encode_translation, iter_cells, read_cell,
                     select_best_cell, write_cell)
from .fitting import (FitConfig, FitReport, RegionFitResult,
                      fit_pose, fit_region_channels, gradient_descent_step,
                      initial_pose_estimate, region_loss_gradient,
                      region_projection_jacobian)
from .annotation import (AxisAnnotation, AxisSolveResult, BoxTangency,
                         ImageLine, PixelBox, Side, TangencyAssignment,
                         TangencyConstraint, assign_tangent_corners,
                         augment_affine, affine_rotation_about,
                         affine_scale_about, affine_translation,
                         cube_symmetry_rotations, solve_rotation_from_axes,
                         solve_translation_linear, translation_init_from_box)
from .evalkit import (LINEMOD_CAMERA, LINEMOD_IMAGE_SIZE, EncodedGrid,
                      GroundTruthPoseFile, PoseErrorReport, SyntheticScene,
                      accuracy_over_set, accuracy_table_csv, bounding_box_of,
                      evaluate, generate_scene, load_ground_truth,
                      perturbed_pose, random_rotation_abc, save_ground_truth,
                      synthetic_axis_annotation)

__version__ = "0.1.0"
