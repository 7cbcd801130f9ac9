"""Camera model, SE(3) kinematics, and differentiable inverse warping.

Conventions (fixed across the package):
  - camera frame: x right, y down, z forward; pixel centers at integer
    coordinates; pinhole, no distortion,
  - quaternions are Hamilton, (w, x, y, z), unit norm,
  - an SE3Pose applied to a point computes R @ p + t,
  - twists are 6-vectors (translation[3], rotation[3]); se3_exp uses the
    standard closed form with the V matrix coupling the two blocks.

The warping entry points (project_grid, inverse_warp, warp_depth) accept
either plain ndarrays or autodiff Vars for the pose entries and depth, so
the pose optimizer can differentiate straight through them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad


class ContractViolation(ValueError):
    """An argument breaks a documented precondition."""


# --------------------------------------------------------------------------
# camera intrinsics


@dataclass
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ContractViolation("focal lengths must be positive")
        if not (0 < self.cx < self.width) or not (0 < self.cy < self.height):
            raise ContractViolation("principal point must lie inside the image")

    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])

    def normalized_grid(self):
        """Per-pixel normalized ray coordinates ((u-cx)/fx, (v-cy)/fy)."""
        u = np.arange(self.width, dtype=np.float64)
        v = np.arange(self.height, dtype=np.float64)
        uu, vv = np.meshgrid(u, v)
        return (uu - self.cx) / self.fx, (vv - self.cy) / self.fy


# --------------------------------------------------------------------------
# quaternions (w, x, y, z)


def quat_normalize(q):
    q = np.asarray(q, dtype=np.float64)
    return q / np.linalg.norm(q)


def quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conj(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_to_matrix(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def matrix_to_quat(R):
    R = np.asarray(R, dtype=np.float64)
    tr = np.trace(R)
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s,
                      (R[1, 0] - R[0, 1]) / s])
    else:
        i = int(np.argmax(np.diag(R)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(max(R[i, i] - R[j, j] - R[k, k] + 1.0, 0.0)) * 2.0
        q = np.empty(4)
        q[0] = (R[k, j] - R[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (R[j, i] + R[i, j]) / s
        q[1 + k] = (R[k, i] + R[i, k]) / s
    if q[0] < 0:
        q = -q
    return quat_normalize(q)


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n == 0.0:
        return np.array([1.0, 0.0, 0.0, 0.0])
    half = 0.5 * angle
    return np.concatenate(([np.cos(half)], np.sin(half) * axis / n))


def rotvec_to_matrix(phi):
    """Rodrigues formula; exact for any angle, Taylor branch near zero."""
    phi = np.asarray(phi, dtype=np.float64)
    t2 = float(phi @ phi)
    K = skew(phi)
    if t2 < 1e-16:
        A = 1.0 - t2 / 6.0
        B = 0.5 - t2 / 24.0
    else:
        th = np.sqrt(t2)
        A = np.sin(th) / th
        B = (1.0 - np.cos(th)) / t2
    return np.eye(3) + A * K + B * (K @ K)


def skew(v):
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


# --------------------------------------------------------------------------
# SE(3)


@dataclass
class SE3Pose:
    """Rigid transform: rotation (unit quaternion, w first) + translation."""

    q: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=np.float64)
        self.t = np.asarray(self.t, dtype=np.float64)
        n = np.linalg.norm(self.q)
        if abs(n - 1.0) > 1e-6:
            raise ContractViolation(f"quaternion norm {n} too far from 1")
        if abs(n - 1.0) > 1e-12:
            self.q = self.q / n

    @classmethod
    def identity(cls) -> "SE3Pose":
        return cls(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))

    @classmethod
    def from_matrix(cls, R, t) -> "SE3Pose":
        return cls(matrix_to_quat(R), np.asarray(t, dtype=np.float64))

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.q)

    def compose(self, other: "SE3Pose") -> "SE3Pose":
        """self applied after other: (self*other)(p) = self(other(p))."""
        R = self.rotation_matrix()
        return SE3Pose(quat_mul(self.q, other.q), R @ other.t + self.t)

    def inverse(self) -> "SE3Pose":
        R = self.rotation_matrix()
        return SE3Pose(quat_conj(self.q), -(R.T @ self.t))

    def apply(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        return pts @ self.rotation_matrix().T + self.t

    def matrix(self) -> np.ndarray:
        M = np.eye(4)
        M[:3, :3] = self.rotation_matrix()
        M[:3, 3] = self.t
        return M


def se3_exp(xi) -> SE3Pose:
    """Exponential map of a twist (rho[3], phi[3]) to an SE3Pose."""
    xi = np.asarray(xi, dtype=np.float64)
    rho, phi = xi[:3], xi[3:]
    t2 = float(phi @ phi)
    K = skew(phi)
    if t2 < 1e-16:
        B = 0.5 - t2 / 24.0
        C = 1.0 / 6.0 - t2 / 120.0
    else:
        th = np.sqrt(t2)
        A = np.sin(th) / th
        B = (1.0 - np.cos(th)) / t2
        C = (1.0 - A) / t2
    V = np.eye(3) + B * K + C * (K @ K)
    return SE3Pose.from_matrix(rotvec_to_matrix(phi), V @ rho)


def se3_log(pose: SE3Pose) -> np.ndarray:
    """Inverse of se3_exp for rotations below pi."""
    R = pose.rotation_matrix()
    cos_th = np.clip((np.trace(R) - 1.0) * 0.5, -1.0, 1.0)
    th = np.arccos(cos_th)
    if th < 1e-8:
        phi = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    else:
        phi = th / (2.0 * np.sin(th)) * np.array(
            [R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    t2 = float(phi @ phi)
    K = skew(phi)
    if t2 < 1e-16:
        Vinv = np.eye(3) - 0.5 * K + (1.0 / 12.0) * (K @ K)
    else:
        A = np.sin(th) / th
        B = (1.0 - np.cos(th)) / t2
        Vinv = np.eye(3) - 0.5 * K + (1.0 / t2) * (1.0 - A / (2.0 * B)) * (K @ K)
    return np.concatenate([Vinv @ pose.t, phi])


def se3_exp_entries(xi):
    """se3_exp on a twist that may be an autodiff Var.

    Returns (R, t) where R is a 3x3 nested list and t a length-3 list of
    scalar entries (Vars when xi is a Var). The Taylor branch for small
    rotations is expressed in theta^2 so there is no sqrt(0) kink.
    """
    rx, ry, rz = xi[0], xi[1], xi[2]
    wx, wy, wz = xi[3], xi[4], xi[5]
    t2 = wx * wx + wy * wy + wz * wz
    if float(ad.value(t2)) < 1e-16:
        A = 1.0 - t2 * (1.0 / 6.0)
        B = 0.5 - t2 * (1.0 / 24.0)
        C = 1.0 / 6.0 - t2 * (1.0 / 120.0)
    else:
        th = ad.sqrt(t2)
        A = ad.sin(th) / th
        B = (1.0 - ad.cos(th)) / t2
        C = (1.0 - A) / t2

    R = [[1.0 - B * (wy * wy + wz * wz), B * (wx * wy) - A * wz, B * (wx * wz) + A * wy],
         [B * (wx * wy) + A * wz, 1.0 - B * (wx * wx + wz * wz), B * (wy * wz) - A * wx],
         [B * (wx * wz) - A * wy, B * (wy * wz) + A * wx, 1.0 - B * (wx * wx + wy * wy)]]

    V = [[1.0 - C * (wy * wy + wz * wz), C * (wx * wy) - B * wz, C * (wx * wz) + B * wy],
         [C * (wx * wy) + B * wz, 1.0 - C * (wx * wx + wz * wz), C * (wy * wz) - B * wx],
         [C * (wx * wz) - B * wy, C * (wy * wz) + B * wx, 1.0 - C * (wx * wx + wy * wy)]]

    t = [V[i][0] * rx + V[i][1] * ry + V[i][2] * rz for i in range(3)]
    return R, t


def pose_entries(pose: SE3Pose):
    """Plain-float (R, t) entries of an SE3Pose for the generic warp path."""
    R = pose.rotation_matrix()
    return [[R[i, j] for j in range(3)] for i in range(3)], [pose.t[i] for i in range(3)]


def invert_entries(R, t):
    """Exact inverse of entry-form (R, t): (R^T, -R^T t)."""
    Rt = [[R[j][i] for j in range(3)] for i in range(3)]
    ti = [-(Rt[i][0] * t[0] + Rt[i][1] * t[1] + Rt[i][2] * t[2]) for i in range(3)]
    return Rt, ti


# --------------------------------------------------------------------------
# validation helpers for per-pixel fields


def validate_image(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ContractViolation("image must be 2-D")
    if not np.all(np.isfinite(img)) or img.min() < 0.0 or img.max() > 1.0:
        raise ContractViolation("image values must be finite and in [0,1]")
    return img


def validate_depth(depth):
    depth = np.asarray(depth, dtype=np.float64)
    if depth.ndim != 2:
        raise ContractViolation("depth must be 2-D")
    if not np.all(np.isfinite(depth)) or depth.min() <= 0.0:
        raise ContractViolation("depth values must be finite and > 0")
    return depth


# --------------------------------------------------------------------------
# projection and warping

Z_EPS = 1e-9


def project(p, depth, K: CameraIntrinsics, pose: SE3Pose):
    """Project one target pixel into the source view.

    Computes K (R K^-1 p depth + t), dehomogenized. Returns ((x, y), valid)
    where valid is False when the transformed point lands at or behind the
    camera plane (z <= 0); coordinates are not clamped.
    """
    u, v = float(p[0]), float(p[1])
    if depth <= 0:
        raise ContractViolation("depth must be positive")
    if not (0 <= u <= K.width - 1 and 0 <= v <= K.height - 1):
        raise ContractViolation("pixel outside image bounds")
    X = np.array([(u - K.cx) / K.fx * depth, (v - K.cy) / K.fy * depth, depth])
    Xc = pose.apply(X)
    if Xc[2] <= Z_EPS:
        return (np.nan, np.nan), False
    return (K.fx * Xc[0] / Xc[2] + K.cx, K.fy * Xc[1] / Xc[2] + K.cy), True


def project_grid(depth_t, K: CameraIntrinsics, R, t):
    """Warp coordinates for every target pixel.

    depth_t may be an ndarray or a Var; (R, t) are entry-form (nested
    lists of floats or scalar Vars). Returns (xs, ys, zc, front) where
    front marks z > 0 and (xs, ys) are continuous source-pixel coords
    (safe values where front is False).
    """
    xn, yn = K.normalized_grid()
    X = xn * depth_t
    Y = yn * depth_t
    Z = depth_t

    Xc = R[0][0] * X + R[0][1] * Y + R[0][2] * Z + t[0]
    Yc = R[1][0] * X + R[1][1] * Y + R[1][2] * Z + t[1]
    Zc = R[2][0] * X + R[2][1] * Y + R[2][2] * Z + t[2]

    front = ad.value(Zc) > Z_EPS
    Zs = ad.where(front, Zc, 1.0)
    xs = K.fx * (Xc / Zs) + K.cx
    ys = K.fy * (Yc / Zs) + K.cy
    return xs, ys, Zc, front


def warp_image(source, depth_t, K: CameraIntrinsics, R, t):
    """Generic inverse warp; returns (recon, mask) with recon zeroed at
    invalid pixels. Differentiates through depth_t/R/t when they are Vars."""
    xs, ys, _, front = project_grid(depth_t, K, R, t)
    sampled, in_bounds = ad.bilinear_sample(source, xs, ys)
    mask = front & in_bounds
    recon = sampled * mask.astype(np.float64)
    return recon, mask


def inverse_warp(source, depth_t, pose: SE3Pose, K: CameraIntrinsics):
    """Reconstruct the target image by sampling `source` through the pose.

    `pose` maps target-frame coordinates into the source frame. The mask
    marks pixels whose warped lookup stays inside the source image and in
    front of the camera; masked pixels carry exactly 0 in the output.
    """
    source = np.asarray(source, dtype=np.float64)
    depth_t = np.asarray(depth_t, dtype=np.float64)
    if source.shape != (K.height, K.width) or depth_t.shape != source.shape:
        raise ContractViolation("image/depth shape does not match intrinsics")
    R, t = pose_entries(pose)
    return warp_image(source, depth_t, K, R, t)


def warp_depth_parts(source_depth, depth_t, K: CameraIntrinsics, R, t):
    """Warp a source depth map onto the target grid, in target coordinates.

    Samples source_depth at the projected coordinates, lifts the sampled
    value back to a 3-D point in the source frame, and transforms it into
    the target frame; the reported depth is that point's target-frame z.
    Returns (warped, mask) where `warped` holds safe positive values at
    masked pixels (callers decide the fill policy).
    """
    xs, ys, _, front = project_grid(depth_t, K, R, t)
    ds, in_bounds = ad.bilinear_sample(source_depth, xs, ys)

    xn_s = (xs - K.cx) / K.fx
    yn_s = (ys - K.cy) / K.fy
    Xs = xn_s * ds
    Ys = yn_s * ds
    Ri, _ = invert_entries(R, t)
    # target-frame z of the lifted source point: row 2 of R^T @ (P - t)
    Px = Xs - t[0]
    Py = Ys - t[1]
    Pz = ds - t[2]
    warped = Ri[2][0] * Px + Ri[2][1] * Py + Ri[2][2] * Pz
    mask = front & in_bounds & (ad.value(warped) > 0.0)
    return warped, mask


def warp_depth(source_depth, depth_t, pose: SE3Pose, K: CameraIntrinsics):
    """Public depth reprojection: masked pixels carry exactly 0."""
    source_depth = np.asarray(source_depth, dtype=np.float64)
    depth_t = np.asarray(depth_t, dtype=np.float64)
    if source_depth.shape != (K.height, K.width) or depth_t.shape != source_depth.shape:
        raise ContractViolation("depth shape does not match intrinsics")
    R, t = pose_entries(pose)
    warped, mask = warp_depth_parts(source_depth, depth_t, K, R, t)
    return warped * mask.astype(np.float64), mask
