"""Learned quadrotor dynamics: an 11-input MLP predicting two drag terms
and an accelerometer-z residual, trained by backprop-through-time on
open-loop velocity rollouts against scale-ambiguous visual velocities.

Inputs per step: body velocity (3), accelerometer z (1), gyro (3), motor
RPM (4); all z-scored with training-set statistics stored in the params.
Hidden layers [45, 45, 45] with tanh; sigmoid outputs rescaled so that
d_x, d_y are structurally confined to [0, 2] and eps to [-5, 5].

Velocity recurrence (one IMU step):

    vb' = R_step^T (vb + [-d_x vb_x + g_x, -d_y vb_y + g_y,
                          a_z - eps + g_z] * dt)

where R_step is the exact axis-angle exponential of gyro * dt and g is
the gravity vector from the attitude filter. Training jointly optimizes
the MLP weights and one scale parameter per sequence; the window's
initial velocity is taken from the (scaled) teacher, so the scale
gradient flows both through the targets and through the initial state.

All gradients are hand-derived reverse-mode (the finite-difference checks
in the test suite are the independent oracle).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import butter, filtfilt

from .geometry import ContractViolation, rotvec_to_matrix

LAYER_SIZES = (11, 45, 45, 45, 3)
MODEL_FORMAT = "selfvio-drone-model"
MODEL_VERSION = 1

_STD_FLOOR = 1e-3


class DivergenceError(RuntimeError):
    """Training or rollout produced runaway values."""


# --------------------------------------------------------------------------
# parameters


@dataclass
class DroneModelParams:
    weights: list          # [(45,11), (45,45), (45,45), (3,45)]
    biases: list           # [(45,), (45,), (45,), (3,)]
    norm_mean: np.ndarray  # (11,)
    norm_std: np.ndarray   # (11,)
    scales: dict           # sequence id -> s
    version: int = MODEL_VERSION

    def copy(self) -> "DroneModelParams":
        return DroneModelParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            norm_mean=self.norm_mean.copy(),
            norm_std=self.norm_std.copy(),
            scales=dict(self.scales),
            version=self.version,
        )


def init_params(rng, norm_mean=None, norm_std=None, scales=None) -> DroneModelParams:
    weights, biases = [], []
    for nin, nout in zip(LAYER_SIZES[:-1], LAYER_SIZES[1:]):
        weights.append(rng.standard_normal((nout, nin)) / np.sqrt(nin))
        biases.append(np.zeros(nout))
    return DroneModelParams(
        weights=weights, biases=biases,
        norm_mean=np.zeros(11) if norm_mean is None else np.asarray(norm_mean, dtype=np.float64),
        norm_std=np.ones(11) if norm_std is None else np.asarray(norm_std, dtype=np.float64),
        scales=dict(scales or {}),
    )


def save_params(path, params: DroneModelParams):
    doc = {
        "format": MODEL_FORMAT,
        "version": params.version,
        "layer_sizes": list(LAYER_SIZES),
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
        "norm_mean": params.norm_mean.tolist(),
        "norm_std": params.norm_std.tolist(),
        "scales": {k: params.scales[k] for k in sorted(params.scales)},
    }
    with open(path, "w", encoding="ascii", newline="\n") as f:
        json.dump(doc, f, indent=1, sort_keys=True)
        f.write("\n")


def load_params(path) -> DroneModelParams:
    with open(path, "r", encoding="ascii") as f:
        doc = json.load(f)
    if doc.get("format") != MODEL_FORMAT:
        raise ContractViolation(f"not a drone-model file: {path}")
    if doc.get("version") != MODEL_VERSION:
        raise ContractViolation(
            f"model version {doc.get('version')} unsupported (want {MODEL_VERSION})")
    if tuple(doc["layer_sizes"]) != LAYER_SIZES:
        raise ContractViolation("unexpected layer sizes in model file")
    return DroneModelParams(
        weights=[np.asarray(w, dtype=np.float64) for w in doc["weights"]],
        biases=[np.asarray(b, dtype=np.float64) for b in doc["biases"]],
        norm_mean=np.asarray(doc["norm_mean"], dtype=np.float64),
        norm_std=np.asarray(doc["norm_std"], dtype=np.float64),
        scales={k: float(v) for k, v in doc["scales"].items()},
        version=doc["version"],
    )


# --------------------------------------------------------------------------
# MLP forward/backward


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _mlp_forward(params: DroneModelParams, x_raw):
    """x_raw: (B, 11) -> outputs (B, 3) = (d_x, d_y, eps) plus cache."""
    xn = (x_raw - params.norm_mean) / np.maximum(params.norm_std, _STD_FLOOR)
    h = xn
    acts = [xn]
    for W, b in zip(params.weights[:-1], params.biases[:-1]):
        h = np.tanh(h @ W.T + b)
        acts.append(h)
    o = _sigmoid(h @ params.weights[-1].T + params.biases[-1])
    out = np.stack([2.0 * o[:, 0], 2.0 * o[:, 1], 10.0 * o[:, 2] - 5.0], axis=-1)
    return out, (acts, o)


def _mlp_backward(params: DroneModelParams, cache, d_out, grads):
    """Accumulate weight/bias grads into `grads`; return grad w.r.t. x_raw."""
    acts, o = cache
    do = d_out * np.array([2.0, 2.0, 10.0])
    dz = do * o * (1.0 - o)
    for li in range(len(params.weights) - 1, -1, -1):
        grads["weights"][li] += dz.T @ acts[li]
        grads["biases"][li] += dz.sum(axis=0)
        dh = dz @ params.weights[li]
        if li == 0:
            return dh / np.maximum(params.norm_std, _STD_FLOOR)
        dz = dh * (1.0 - acts[li] ** 2)


def model_forward(params: DroneModelParams, vb, accel_z, gyro, rpm):
    """Single-sample drag/residual prediction: (d_x, d_y, eps_az)."""
    x = np.concatenate([np.asarray(vb, dtype=np.float64).ravel(),
                        [float(accel_z)],
                        np.asarray(gyro, dtype=np.float64).ravel(),
                        np.asarray(rpm, dtype=np.float64).ravel()])
    if x.shape != (11,) or not np.all(np.isfinite(x)):
        raise ContractViolation("model_forward expects 11 finite inputs")
    out, _ = _mlp_forward(params, x[None, :])
    return float(out[0, 0]), float(out[0, 1]), float(out[0, 2])


# --------------------------------------------------------------------------
# sequences


@dataclass
class TrainSequence:
    """Synchronized streams for one recording.

    IMU-rate arrays: t (n,), gyro (n,3), accel (n,3), rpm (n,4),
    g_body (n,3) precomputed by the attitude filter. Camera-rate teacher:
    cam_t (m,), v_cam (m,3) scale-ambiguous camera-frame velocities.
    """
    seq_id: str
    t: np.ndarray
    gyro: np.ndarray
    accel: np.ndarray
    rpm: np.ndarray
    g_body: np.ndarray
    cam_t: np.ndarray
    v_cam: np.ndarray
    R_cb: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.t) <= 0) or np.any(np.diff(self.cam_t) <= 0):
            raise ContractViolation("timestamps must be strictly increasing")
        if not np.all(np.isfinite(self.v_cam)):
            raise ContractViolation("teacher velocities must be finite")


def smooth_teacher(cam_t, v_body, cutoff_hz=5.0):
    """Zero-phase third-order Butterworth low-pass, per axis."""
    rate = 1.0 / float(np.median(np.diff(cam_t)))
    wn = min(cutoff_hz / (0.5 * rate), 0.99)
    b, a = butter(3, wn)
    return filtfilt(b, a, v_body, axis=0)


def teacher_velocity(seq: TrainSequence, s: float, cutoff_hz=5.0):
    """Scaled body-frame teacher: s * R_cb @ v_cam, Butterworth-smoothed."""
    if s <= 0:
        raise ContractViolation("scale must be positive")
    v_body = seq.v_cam @ seq.R_cb.T
    return seq.cam_t, s * smooth_teacher(seq.cam_t, v_body, cutoff_hz)


@dataclass
class PreparedSequence:
    seq_id: str
    dt: np.ndarray         # (n-1,)
    az: np.ndarray         # (n-1,)
    gyro: np.ndarray       # (n-1,3)
    rpm: np.ndarray        # (n-1,4)
    g_b: np.ndarray        # (n-1,3)
    R_step: np.ndarray     # (n-1,3,3)
    base_vel: np.ndarray   # (m,3) unit-scale smoothed teacher
    sample_step: np.ndarray  # (m,) IMU step index of each teacher sample
    t: np.ndarray


def prepare_sequence(seq: TrainSequence, cutoff_hz=5.0) -> PreparedSequence:
    n = len(seq.t)
    dt = np.diff(seq.t)
    R_step = np.stack([rotvec_to_matrix(seq.gyro[i] * dt[i]) for i in range(n - 1)])
    _, base = teacher_velocity(seq, 1.0, cutoff_hz)
    sample_step = np.searchsorted(seq.t, seq.cam_t)
    sample_step = np.clip(sample_step, 0, n - 1)
    # averaging consecutive gravity samples keeps the Euler step second
    # order in the (undamped) z row
    g_step = 0.5 * (seq.g_body[:-1] + seq.g_body[1:])
    return PreparedSequence(
        seq_id=seq.seq_id, dt=dt, az=seq.accel[:-1, 2], gyro=seq.gyro[:-1],
        rpm=seq.rpm[:-1], g_b=g_step, R_step=R_step,
        base_vel=base, sample_step=sample_step, t=seq.t,
    )


# --------------------------------------------------------------------------
# rollout


@dataclass
class VelocityRollout:
    t: np.ndarray
    vel: np.ndarray             # (H+1, 3) body velocities
    specific_force: np.ndarray  # (H, 3) per-step bracket terms (without g)


def rollout(params: DroneModelParams, prep: PreparedSequence, vb0,
            start=0, horizon=None) -> VelocityRollout:
    """Open-loop velocity integration over `horizon` IMU steps."""
    n = len(prep.dt)
    if horizon is None:
        horizon = n - start
    if start < 0 or start + horizon > n:
        raise ContractViolation("rollout horizon exceeds the sequence")
    vb = np.asarray(vb0, dtype=np.float64).copy()
    vel = np.empty((horizon + 1, 3))
    sf = np.empty((horizon, 3))
    vel[0] = vb
    for j in range(horizon):
        i = start + j
        x = np.concatenate([vb, [prep.az[i]], prep.gyro[i], prep.rpm[i]])
        out, _ = _mlp_forward(params, x[None, :])
        dx, dy, eps = out[0]
        f = np.array([-dx * vb[0], -dy * vb[1], prep.az[i] - eps])
        u = vb + (f + prep.g_b[i]) * prep.dt[i]
        vb = prep.R_step[i].T @ u
        if not np.all(np.isfinite(vb)):
            raise DivergenceError(f"rollout diverged at step {i}")
        vel[j + 1] = vb
        sf[j] = f
    return VelocityRollout(t=prep.t[start:start + horizon + 1], vel=vel, specific_force=sf)


# --------------------------------------------------------------------------
# BPTT training


def _zero_grads(params):
    return {
        "weights": [np.zeros_like(w) for w in params.weights],
        "biases": [np.zeros_like(b) for b in params.biases],
        "scales": {k: 0.0 for k in params.scales},
    }


def window_loss_and_grads(params: DroneModelParams, prep: PreparedSequence,
                          k0: int, n_steps: int, grads=None):
    """Loss and gradients of one teacher-anchored window.

    The window starts at teacher sample k0 (vb0 = s * base[k0]) and rolls
    n_steps IMU steps; the loss is the per-component MSE against every
    teacher sample falling inside the window. Gradients accumulate into
    `grads` (weights, biases, and the sequence's scale).
    """
    s = params.scales[prep.seq_id]
    i0 = int(prep.sample_step[k0])
    i1 = min(i0 + n_steps, len(prep.dt))
    n_steps = i1 - i0

    in_win = (prep.sample_step > i0) & (prep.sample_step <= i1)
    ks = np.nonzero(in_win)[0]
    if len(ks) == 0:
        raise ContractViolation("window contains no teacher samples")
    targets = s * prep.base_vel[ks]
    local = prep.sample_step[ks] - i0   # step index of each loss sample

    vb = s * prep.base_vel[k0]
    vel = np.empty((n_steps + 1, 3))
    vel[0] = vb
    caches = []
    for j in range(n_steps):
        i = i0 + j
        x = np.concatenate([vb, [prep.az[i]], prep.gyro[i], prep.rpm[i]])
        out, cache = _mlp_forward(params, x[None, :])
        dx, dy, eps = out[0]
        f = np.array([-dx * vb[0], -dy * vb[1], prep.az[i] - eps])
        u = vb + (f + prep.g_b[i]) * prep.dt[i]
        caches.append((vb.copy(), out[0].copy(), cache))
        vb = prep.R_step[i].T @ u
        vel[j + 1] = vb

    m = len(ks)
    resid = vel[local] - targets
    loss = float(np.sum(resid ** 2) / (3 * m))
    if grads is None:
        grads = _zero_grads(params)

    dvel = np.zeros_like(vel)
    np.add.at(dvel, local, 2.0 * resid / (3 * m))
    ds = float(np.sum(-2.0 * resid / (3 * m) * prep.base_vel[ks]))

    lam = dvel[n_steps].copy()
    for j in range(n_steps - 1, -1, -1):
        i = i0 + j
        vb_j, out_j, cache = caches[j]
        dxj, dyj, epsj = out_j
        du = prep.R_step[i] @ lam
        df = du * prep.dt[i]
        d_out = np.array([-df[0] * vb_j[0], -df[1] * vb_j[1], -df[2]])
        dx_raw = _mlp_backward(params, cache, d_out[None, :], grads)[0]
        dvb = du.copy()
        dvb[0] += -dxj * df[0]
        dvb[1] += -dyj * df[1]
        dvb += dx_raw[:3]
        lam = dvb + dvel[j]

    ds += float(lam @ prep.base_vel[k0])   # vb0 = s * base[k0]
    grads["scales"][prep.seq_id] += ds
    return loss, grads


def _batched_windows_loss_and_grads(params: DroneModelParams, preps,
                                    k0s, n_steps, grads):
    """Vectorized BPTT over a batch of equal-length windows.

    preps: list of PreparedSequence, one per window (may repeat).
    Returns the mean window loss; gradients (divided by the batch size)
    accumulate into `grads`.
    """
    B = len(preps)
    L = n_steps
    az = np.empty((B, L))
    gyro = np.empty((B, L, 3))
    rpm = np.empty((B, L, 4))
    g_b = np.empty((B, L, 3))
    dt = np.empty((B, L))
    R_step = np.empty((B, L, 3, 3))
    vb = np.empty((B, 3))
    base0 = np.empty((B, 3))
    dvel = np.zeros((B, L + 1, 3))
    resid_info = []

    for b, (p, k0) in enumerate(zip(preps, k0s)):
        s = params.scales[p.seq_id]
        i0 = int(p.sample_step[k0])
        sl = slice(i0, i0 + L)
        az[b], gyro[b], rpm[b], g_b[b], dt[b] = \
            p.az[sl], p.gyro[sl], p.rpm[sl], p.g_b[sl], p.dt[sl]
        R_step[b] = p.R_step[sl]
        base0[b] = p.base_vel[k0]
        vb[b] = s * base0[b]
        in_win = (p.sample_step > i0) & (p.sample_step <= i0 + L)
        ks = np.nonzero(in_win)[0]
        resid_info.append((ks, p.sample_step[ks] - i0, p.base_vel[ks], s))

    vel = np.empty((B, L + 1, 3))
    vel[:, 0] = vb
    caches = []
    for j in range(L):
        x = np.concatenate([vb, az[:, j:j + 1], gyro[:, j], rpm[:, j]], axis=1)
        out, cache = _mlp_forward(params, x)
        f = np.stack([-out[:, 0] * vb[:, 0], -out[:, 1] * vb[:, 1],
                      az[:, j] - out[:, 2]], axis=1)
        u = vb + (f + g_b[:, j]) * dt[:, j, None]
        caches.append((vb.copy(), out, cache))
        vb = np.einsum("bji,bj->bi", R_step[:, j], u)
        vel[:, j + 1] = vb

    # gradients below are of the MEAN window loss (the 1/B rides on dvel)
    loss = 0.0
    ds = np.zeros(B)
    for b, (ks, local, base, s) in enumerate(resid_info):
        m = len(ks)
        resid = vel[b, local] - s * base
        loss += float(np.sum(resid ** 2) / (3 * m))
        np.add.at(dvel[b], local, 2.0 * resid / (3 * m * B))
        ds[b] = float(np.sum(-2.0 * resid / (3 * m * B) * base))
    loss /= B

    lam = dvel[:, L].copy()
    for j in range(L - 1, -1, -1):
        vb_j, out_j, cache = caches[j]
        du = np.einsum("bij,bj->bi", R_step[:, j], lam)
        df = du * dt[:, j, None]
        d_out = np.stack([-df[:, 0] * vb_j[:, 0], -df[:, 1] * vb_j[:, 1],
                          -df[:, 2]], axis=1)
        dx_raw = _mlp_backward(params, cache, d_out, grads)
        dvb = du
        dvb[:, 0] += -out_j[:, 0] * df[:, 0]
        dvb[:, 1] += -out_j[:, 1] * df[:, 1]
        dvb += dx_raw[:, :3]
        lam = dvb + dvel[:, j]

    ds += np.einsum("bi,bi->b", lam, base0)
    for b, p in enumerate(preps):
        grads["scales"][p.seq_id] += ds[b]
    return loss


@dataclass
class TrainConfig:
    steps: int = 1500
    batch: int = 6
    lr: float = 5e-3
    lr_final: float | None = None      # exponential decay target (None: constant)
    window_min: float = 0.25
    window_max: float = 5.0
    cutoff_hz: float = 5.0
    seed: int = 0
    init_scale: float = 1.0
    scale_grid_init: bool = True
    divergence_factor: float = 10.0
    divergence_patience: int = 100

    def __post_init__(self):
        if self.lr <= 0 or self.steps < 0 or self.batch < 1:
            raise ContractViolation("bad training hyperparameters")
        if not (0 < self.window_min <= self.window_max):
            raise ContractViolation("bad window length range")


def _flatten(params, grads=None):
    src = params if grads is None else grads
    ws = src["weights"] if isinstance(src, dict) else src.weights
    bs = src["biases"] if isinstance(src, dict) else src.biases
    sc = src["scales"] if isinstance(src, dict) else src.scales
    keys = sorted(sc)
    parts = [w.ravel() for w in ws] + [b.ravel() for b in bs]
    parts.append(np.array([sc[k] for k in keys]))
    return np.concatenate(parts), keys


def _unflatten_into(params: DroneModelParams, theta, keys):
    off = 0
    for li, w in enumerate(params.weights):
        params.weights[li] = theta[off:off + w.size].reshape(w.shape)
        off += w.size
    for li, b in enumerate(params.biases):
        params.biases[li] = theta[off:off + b.size].reshape(b.shape)
        off += b.size
    for k in keys:
        params.scales[k] = float(theta[off])
        off += 1


def compute_norm_stats(prepared, init_scale=1.0):
    """Per-channel z-score statistics over the training set."""
    rows = []
    for p in prepared:
        vb = init_scale * p.base_vel
        idx = np.clip(p.sample_step, 0, len(p.az) - 1)
        rows.append(np.concatenate([
            vb, p.az[idx, None], p.gyro[idx], p.rpm[idx]], axis=1))
    X = np.concatenate(rows, axis=0)
    return X.mean(axis=0), np.maximum(X.std(axis=0), _STD_FLOOR)


def _grid_init_scales(params, prepared, rng, candidates=None):
    """Coarse per-sequence scale init: probe window losses over a grid
    with the freshly initialized MLP and keep each sequence's argmin."""
    if candidates is None:
        candidates = np.geomspace(0.25, 4.0, 13)
    for p in prepared:
        rate = 1.0 / float(np.median(p.dt))
        n_steps = min(int(round(1.5 * rate)), len(p.dt) - 1)
        kmax = max(1, int(np.searchsorted(p.sample_step, len(p.dt) - n_steps)) - 1)
        anchors = [int(rng.integers(0, kmax)) for _ in range(4)]
        best = (np.inf, params.scales[p.seq_id])
        for s in candidates:
            params.scales[p.seq_id] = float(s)
            tot = 0.0
            for k0 in anchors:
                l, _ = window_loss_and_grads(params, p, k0, n_steps)
                tot += l
            if tot < best[0]:
                best = (tot, float(s))
        params.scales[p.seq_id] = best[1]


def train(sequences, cfg: TrainConfig, params=None):
    """Joint Adam optimization of MLP weights and per-sequence scales."""
    if not sequences:
        raise ContractViolation("need at least one training sequence")
    prepared = [prepare_sequence(s, cfg.cutoff_hz) for s in sequences]
    for p in prepared:
        if p.t[-1] - p.t[0] < 5.0:
            raise ContractViolation(f"sequence {p.seq_id} shorter than 5 s")

    rng = np.random.default_rng(cfg.seed)
    if params is None:
        mean, std = compute_norm_stats(prepared, cfg.init_scale)
        params = init_params(rng, mean, std,
                             {p.seq_id: cfg.init_scale for p in prepared})
        if cfg.scale_grid_init and cfg.steps > 0:
            _grid_init_scales(params, prepared, rng)
    else:
        params = params.copy()
        for p in prepared:
            params.scales.setdefault(p.seq_id, cfg.init_scale)

    theta, keys = _flatten(params)
    m_adam = np.zeros_like(theta)
    v_adam = np.zeros_like(theta)
    beta1, beta2, eps_adam = 0.9, 0.999, 1e-8

    rates = [1.0 / float(np.median(p.dt)) for p in prepared]
    history = []
    initial_loss = None
    over = 0
    for step in range(cfg.steps):
        grads = _zero_grads(params)
        T = rng.uniform(cfg.window_min, cfg.window_max)
        preps, k0s = [], []
        n_steps = len(prepared[0].dt) - 1
        for _ in range(cfg.batch):
            si = int(rng.integers(len(prepared)))
            p = prepared[si]
            L = max(2, min(int(round(T * rates[si])), len(p.dt) - 1))
            n_steps = min(n_steps, L)
            kmax = int(np.searchsorted(p.sample_step, len(p.dt) - L)) - 1
            k0s.append(int(rng.integers(0, max(1, kmax))))
            preps.append(p)
        batch_loss = _batched_windows_loss_and_grads(params, preps, k0s,
                                                     n_steps, grads)

        if cfg.lr_final is None or cfg.steps <= 1:
            lr = cfg.lr
        else:
            lr = cfg.lr * (cfg.lr_final / cfg.lr) ** (step / (cfg.steps - 1))
        g, _ = _flatten(params, grads)
        m_adam = beta1 * m_adam + (1 - beta1) * g
        v_adam = beta2 * v_adam + (1 - beta2) * g * g
        mh = m_adam / (1 - beta1 ** (step + 1))
        vh = v_adam / (1 - beta2 ** (step + 1))
        theta = theta - lr * mh / (np.sqrt(vh) + eps_adam)
        _unflatten_into(params, theta, keys)

        history.append(batch_loss)
        if initial_loss is None:
            initial_loss = batch_loss
        if batch_loss > cfg.divergence_factor * max(initial_loss, 1e-12):
            over += 1
            if over >= cfg.divergence_patience:
                raise DivergenceError(
                    f"loss above {cfg.divergence_factor}x initial for "
                    f"{cfg.divergence_patience} consecutive steps")
        else:
            over = 0
    return params, history


def effective_drag(params: DroneModelParams, prep: PreparedSequence, s=None,
                   speed_floor=1.0):
    """Mean predicted (d_x, d_y) at cruise teacher velocities.

    Hover samples are excluded (drag is unobservable at zero velocity, so
    the network output there is unconstrained).
    """
    s = params.scales[prep.seq_id] if s is None else s
    idx = np.clip(prep.sample_step, 0, len(prep.az) - 1)
    vb = s * prep.base_vel
    keep = np.linalg.norm(vb, axis=1) >= speed_floor
    if not keep.any():
        raise ContractViolation("no cruise samples above the speed floor")
    X = np.concatenate([vb, prep.az[idx, None], prep.gyro[idx], prep.rpm[idx]], axis=1)
    out, _ = _mlp_forward(params, X[keep])
    return float(out[:, 0].mean()), float(out[:, 1].mean())
