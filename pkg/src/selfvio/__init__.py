"""Occlusion-aware self-supervised ego-motion, learned quadrotor dynamics,
and inertial-visual fusion at desk scale, verified against synthetic
ground truth and brute-force oracles."""

from .geometry import (CameraIntrinsics, ContractViolation, SE3Pose,
                       inverse_warp, project, se3_exp, se3_log, warp_depth)
from .losses import (LossConfig, LossDiagnostics, DegenerateBatchError,
                     appearance_loss, depth_consistency_error,
                     masked_min_depth, masked_min_photometric, smoothness_loss,
                     ssim_loss, total_loss)

__version__ = "0.1.0"
