"""Canonical on-disk dataset format, loaders/writers, and synchronization.

One directory per sequence:

    manifest.json    format version, sequence id, camera intrinsics,
                     camera-to-body extrinsics (R_cb, t_cb), sensor rates,
                     depth_scale, and a sha256 inventory of every file
    frames.csv       t,image,depth       (depth column may be empty)
    frame_NNNNNN.pgm 16-bit binary PGM (P5, big-endian), gray in [0,1]
    depth_NNNNNN.pgm 16-bit PGM; meters = value / 65535 * depth_scale
    imu.csv          t,gx,gy,gz,ax,ay,az
    motors.csv       t,rpm1,rpm2,rpm3,rpm4
    groundtruth.csv  t,px,py,pz,qw,qx,qy,qz,vx,vy,vz   (optional)

Timestamps are float64 seconds from sequence start; CSV headers are
mandatory, floats are written with repr() so they round-trip exactly.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .geometry import CameraIntrinsics
from .synth import ImuStream, MotorStream

FORMAT_NAME = "selfvio-dataset"
FORMAT_VERSION = 1


class DatasetError(Exception):
    """Base class for dataset loading problems."""


class MissingFileError(DatasetError):
    pass


class ChecksumMismatchError(DatasetError):
    pass


class NonMonotoneTimestampError(DatasetError):
    def __init__(self, stream, index):
        super().__init__(f"non-monotone timestamp in {stream} at row {index}")
        self.stream = stream
        self.index = index


class FormatError(DatasetError):
    pass


# --------------------------------------------------------------------------
# PGM 16-bit


def pgm16_bytes(values) -> bytes:
    """Encode float values in [0,1] as a 16-bit binary PGM."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2 or v.min() < 0.0 or v.max() > 1.0:
        raise FormatError("PGM expects a 2-D array with values in [0,1]")
    q = np.rint(v * 65535.0).astype(">u2")
    h, w = v.shape
    return f"P5\n{w} {h}\n65535\n".encode("ascii") + q.tobytes()


def write_pgm16(path, values):
    with open(path, "wb") as f:
        f.write(pgm16_bytes(values))


def read_pgm16(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    try:
        parts = data.split(b"\n", 3)
        magic, dims, maxval, payload = parts[0], parts[1], parts[2], parts[3]
        if magic != b"P5" or maxval != b"65535":
            raise FormatError(f"unsupported PGM variant in {path}")
        w, h = (int(x) for x in dims.split())
        q = np.frombuffer(payload, dtype=">u2", count=h * w).reshape(h, w)
    except (IndexError, ValueError) as e:
        raise FormatError(f"malformed PGM {path}: {e}") from e
    return q.astype(np.float64) / 65535.0


# --------------------------------------------------------------------------
# CSV helpers


def _write_csv(path, header, columns):
    rows = [header]
    n = len(columns[0])
    for i in range(n):
        rows.append(",".join(_cell(c[i]) for c in columns))
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write("\n".join(rows) + "\n")


def _cell(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _read_csv(path, expect_header):
    if not os.path.exists(path):
        raise MissingFileError(path)
    with open(path, "r", encoding="ascii") as f:
        lines = [ln.rstrip("\n") for ln in f if ln.strip()]
    if not lines or lines[0] != expect_header:
        raise FormatError(f"{path}: expected header {expect_header!r}")
    return [ln.split(",") for ln in lines[1:]]


def _check_monotone(t, stream):
    t = np.asarray(t)
    bad = np.nonzero(np.diff(t) <= 0)[0]
    if len(bad):
        raise NonMonotoneTimestampError(stream, int(bad[0]) + 1)


# --------------------------------------------------------------------------
# manifest


@dataclass
class DatasetManifest:
    sequence_id: str
    intrinsics: CameraIntrinsics
    R_cb: np.ndarray
    t_cb: np.ndarray
    cam_hz: float
    imu_hz: float
    depth_scale: float
    files: dict                     # relpath -> sha256

    def to_json(self) -> str:
        doc = {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "sequence_id": self.sequence_id,
            "intrinsics": {
                "fx": self.intrinsics.fx, "fy": self.intrinsics.fy,
                "cx": self.intrinsics.cx, "cy": self.intrinsics.cy,
                "width": self.intrinsics.width, "height": self.intrinsics.height,
            },
            "R_cb": self.R_cb.tolist(),
            "t_cb": self.t_cb.tolist(),
            "cam_hz": self.cam_hz,
            "imu_hz": self.imu_hz,
            "depth_scale": self.depth_scale,
            "files": {k: self.files[k] for k in sorted(self.files)},
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise FormatError(f"manifest is not valid JSON: {e}") from e
        if doc.get("format") != FORMAT_NAME or doc.get("version") != FORMAT_VERSION:
            raise FormatError("unrecognized dataset format/version")
        ii = doc["intrinsics"]
        R_cb = np.asarray(doc["R_cb"], dtype=np.float64)
        if np.max(np.abs(R_cb @ R_cb.T - np.eye(3))) > 1e-9:
            raise FormatError("extrinsic rotation is not orthonormal")
        return cls(
            sequence_id=doc["sequence_id"],
            intrinsics=CameraIntrinsics(ii["fx"], ii["fy"], ii["cx"], ii["cy"],
                                        ii["width"], ii["height"]),
            R_cb=R_cb,
            t_cb=np.asarray(doc["t_cb"], dtype=np.float64),
            cam_hz=float(doc["cam_hz"]),
            imu_hz=float(doc["imu_hz"]),
            depth_scale=float(doc["depth_scale"]),
            files=dict(doc["files"]),
        )


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# --------------------------------------------------------------------------
# writer


class DatasetWriter:
    """Incremental writer producing the canonical layout above."""

    def __init__(self, root, sequence_id, K: CameraIntrinsics, R_cb, t_cb,
                 cam_hz, imu_hz, depth_scale=20.0):
        self.root = root
        os.makedirs(root, exist_ok=True)
        self.manifest = DatasetManifest(
            sequence_id=sequence_id, intrinsics=K,
            R_cb=np.asarray(R_cb, dtype=np.float64),
            t_cb=np.asarray(t_cb, dtype=np.float64),
            cam_hz=float(cam_hz), imu_hz=float(imu_hz),
            depth_scale=float(depth_scale), files={})
        self.frame_rows = []

    def _put(self, name, data: bytes):
        path = os.path.join(self.root, name)
        with open(path, "wb") as f:
            f.write(data)
        self.manifest.files[name] = hashlib.sha256(data).hexdigest()

    def add_frame(self, t, image, depth=None):
        i = len(self.frame_rows)
        img_name = f"frame_{i:06d}.pgm"
        self._put(img_name, pgm16_bytes(image))
        depth_name = ""
        if depth is not None:
            depth_name = f"depth_{i:06d}.pgm"
            d = np.asarray(depth, dtype=np.float64) / self.manifest.depth_scale
            if d.max() > 1.0 or d.min() < 0.0:
                raise FormatError("depth exceeds manifest depth_scale")
            self._put(depth_name, pgm16_bytes(d))
        self.frame_rows.append((float(t), img_name, depth_name))

    def write_imu(self, imu: ImuStream):
        cols = [imu.t, imu.gyro[:, 0], imu.gyro[:, 1], imu.gyro[:, 2],
                imu.accel[:, 0], imu.accel[:, 1], imu.accel[:, 2]]
        self._put_csv("imu.csv", "t,gx,gy,gz,ax,ay,az", cols)

    def write_motors(self, motors: MotorStream):
        cols = [motors.t] + [motors.rpm[:, i] for i in range(4)]
        self._put_csv("motors.csv", "t,rpm1,rpm2,rpm3,rpm4", cols)

    def write_groundtruth(self, t, pos, quat_wb, vel_w):
        cols = [t] + [pos[:, i] for i in range(3)] \
            + [quat_wb[:, i] for i in range(4)] + [vel_w[:, i] for i in range(3)]
        self._put_csv("groundtruth.csv", "t,px,py,pz,qw,qx,qy,qz,vx,vy,vz", cols)

    def _put_csv(self, name, header, columns):
        rows = [header]
        n = len(columns[0])
        for i in range(n):
            rows.append(",".join(_cell(c[i]) for c in columns))
        self._put(name, ("\n".join(rows) + "\n").encode("ascii"))

    def finalize(self):
        cols = [[r[0] for r in self.frame_rows],
                [r[1] for r in self.frame_rows],
                [r[2] for r in self.frame_rows]]
        self._put_csv("frames.csv", "t,image,depth", cols)
        with open(os.path.join(self.root, "manifest.json"), "w",
                  encoding="ascii", newline="\n") as f:
            f.write(self.manifest.to_json())
        return self.manifest


# --------------------------------------------------------------------------
# loader


@dataclass
class FrameIndex:
    t: np.ndarray
    image_files: list
    depth_files: list


@dataclass
class DatasetBundle:
    root: str
    manifest: DatasetManifest
    frames: FrameIndex
    imu: ImuStream
    motors: MotorStream
    groundtruth: dict | None

    def load_image(self, i) -> np.ndarray:
        return read_pgm16(os.path.join(self.root, self.frames.image_files[i]))

    def load_depth(self, i) -> np.ndarray:
        name = self.frames.depth_files[i]
        if not name:
            raise MissingFileError(f"frame {i} has no depth file")
        d = read_pgm16(os.path.join(self.root, name))
        return d * self.manifest.depth_scale


def load_sequence(root) -> DatasetBundle:
    """Load and validate a dataset directory (checksums verified)."""
    man_path = os.path.join(root, "manifest.json")
    if not os.path.exists(man_path):
        raise MissingFileError(man_path)
    with open(man_path, "r", encoding="ascii") as f:
        manifest = DatasetManifest.from_json(f.read())

    for name, digest in manifest.files.items():
        path = os.path.join(root, name)
        if not os.path.exists(path):
            raise MissingFileError(path)
        if _sha256(path) != digest:
            raise ChecksumMismatchError(path)

    rows = _read_csv(os.path.join(root, "frames.csv"), "t,image,depth")
    ft = np.array([float(r[0]) for r in rows])
    _check_monotone(ft, "frames.csv")
    frames = FrameIndex(t=ft, image_files=[r[1] for r in rows],
                        depth_files=[r[2] for r in rows])

    rows = _read_csv(os.path.join(root, "imu.csv"), "t,gx,gy,gz,ax,ay,az")
    arr = np.array([[float(x) for x in r] for r in rows])
    _check_monotone(arr[:, 0], "imu.csv")
    imu = ImuStream(t=arr[:, 0], gyro=arr[:, 1:4], accel=arr[:, 4:7]).validate()

    rows = _read_csv(os.path.join(root, "motors.csv"), "t,rpm1,rpm2,rpm3,rpm4")
    arr = np.array([[float(x) for x in r] for r in rows])
    _check_monotone(arr[:, 0], "motors.csv")
    motors = MotorStream(t=arr[:, 0], rpm=arr[:, 1:5]).validate()

    gt = None
    gt_path = os.path.join(root, "groundtruth.csv")
    if os.path.exists(gt_path):
        rows = _read_csv(gt_path, "t,px,py,pz,qw,qx,qy,qz,vx,vy,vz")
        arr = np.array([[float(x) for x in r] for r in rows])
        _check_monotone(arr[:, 0], "groundtruth.csv")
        gt = {"t": arr[:, 0], "pos": arr[:, 1:4], "quat_wb": arr[:, 4:8],
              "vel_w": arr[:, 8:11]}
    return DatasetBundle(root=root, manifest=manifest, frames=frames,
                         imu=imu, motors=motors, groundtruth=gt)


# --------------------------------------------------------------------------
# synchronization


@dataclass
class SyncedRecord:
    """One camera frame with its preceding inter-frame sensor window."""
    frame: int
    t: float
    dt: float
    gap: bool
    imu_slice: tuple       # (start, stop) half-open into the IMU stream
    motor_slice: tuple


def synchronize(frame_t, imu_t, motor_t=None, gap_factor=1.5):
    """Partition sensor samples into inter-frame intervals.

    Record i covers (frame_t[i-1], frame_t[i]]; samples before the first
    frame / after the last are reported as head/tail remainders. Gap flag
    is set when dt exceeds gap_factor x median dt.

    Returns (records, head, tail) where head/tail are (imu_slice,
    motor_slice) tuples.
    """
    frame_t = np.asarray(frame_t, dtype=np.float64)
    if len(frame_t) == 0:
        raise DatasetError("camera stream is empty")
    imu_t = np.asarray(imu_t, dtype=np.float64)
    motor_t = imu_t if motor_t is None else np.asarray(motor_t, dtype=np.float64)

    dts = np.diff(frame_t)
    med = float(np.median(dts)) if len(dts) else 0.0
    imu_edges = np.searchsorted(imu_t, frame_t, side="right")
    mot_edges = np.searchsorted(motor_t, frame_t, side="right")

    records = []
    for i in range(1, len(frame_t)):
        dt = float(dts[i - 1])
        records.append(SyncedRecord(
            frame=i, t=float(frame_t[i]), dt=dt,
            gap=bool(med > 0 and dt > gap_factor * med),
            imu_slice=(int(imu_edges[i - 1]), int(imu_edges[i])),
            motor_slice=(int(mot_edges[i - 1]), int(mot_edges[i])),
        ))
    head = ((0, int(imu_edges[0])), (0, int(mot_edges[0])))
    tail = ((int(imu_edges[-1]), len(imu_t)), (int(mot_edges[-1]), len(motor_t)))
    return records, head, tail
