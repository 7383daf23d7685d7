"""Synthetic datasets, IDX ingestion and PGM sample grids."""
import struct
from dataclasses import dataclass

import numpy as np

from .errors import BadMagic, BadParameter, TruncatedFile

IDX_UBYTE_IMAGES = 0x00000803
IDX_UBYTE_LABELS = 0x00000801


@dataclass
class MixtureDataset:
    samples: np.ndarray
    labels: np.ndarray
    means: np.ndarray
    mapping: tuple
    seed: int

    def __len__(self):
        return len(self.samples)

    def split(self, n_test):
        """Train samples plus a held-out (samples, labels) pair from the tail."""
        return self.samples[:-n_test], (self.samples[-n_test:], self.labels[-n_test:])


def make_mixture(K_true, dim_latent=2, dim_data=32, N=5000, separation=8.0, seed=0, spread=1.0):
    """Separable Gaussian mixture pushed through a fixed random affine map and tanh.

    Component means sit evenly on a circle of radius ``separation`` in the
    first two latent coordinates; each component has covariance
    ``spread**2 * I``. Latents are rescaled by ``separation + 3`` so the
    random affine map stays mostly in the linear range of tanh.
    """
    if not separation > 0:
        raise BadParameter("separation must be positive")
    if K_true < 1 or dim_latent < 2 or dim_data < 1 or N < 1:
        raise BadParameter("need K_true >= 1, dim_latent >= 2, dim_data >= 1, N >= 1")
    rng = np.random.default_rng(seed)
    angles = 2.0 * np.pi * np.arange(K_true) / K_true
    means = np.zeros((K_true, dim_latent))
    means[:, 0] = separation * np.cos(angles)
    means[:, 1] = separation * np.sin(angles)
    A = rng.standard_normal((dim_latent, dim_data))
    b = 0.1 * rng.standard_normal(dim_data)
    labels = rng.integers(0, K_true, size=N)
    z = means[labels] + spread * rng.standard_normal((N, dim_latent))
    x = np.tanh((z / (separation + 3.0)) @ A + b)
    return MixtureDataset(x, labels, means, (A, b), seed)


@dataclass
class VideoDataset:
    clips: np.ndarray       # (N, T, side, side) in [-1, 1]
    positions: np.ndarray   # (N, T, 2) top-left corner of the dot (row, col)
    velocities: np.ndarray  # (N, T, 2) velocity in effect after each frame
    side: int

    def __len__(self):
        return len(self.clips)

    def flat(self):
        return self.clips.reshape(len(self.clips), self.clips.shape[1], -1)


def make_bouncing_dot(T, side=16, N=1000, seed=0, dot=3, max_speed=2, velocity=None):
    """Clips of a ``dot x dot`` square bouncing elastically inside a ``side x side`` frame.

    Initial positions and integer velocities are drawn per clip and the speed
    is fixed within a clip; the sign of a component flips on reflection.
    ``velocity`` overrides the random draw for every clip.
    """
    if T < 2:
        raise BadParameter("T must be >= 2")
    if side <= dot or N < 1 or max_speed < 0:
        raise BadParameter("need side > dot, N >= 1, max_speed >= 0")
    hi = side - dot
    if max_speed > hi:
        raise BadParameter("max_speed must not exceed side - dot")
    rng = np.random.default_rng(seed)
    pos = rng.integers(0, hi + 1, size=(N, 2))
    vel = rng.integers(-max_speed, max_speed + 1, size=(N, 2))
    if velocity is not None:
        vel = np.broadcast_to(np.asarray(velocity, dtype=int), (N, 2)).copy()
    clips = -np.ones((N, T, side, side))
    positions = np.zeros((N, T, 2), dtype=int)
    velocities = np.zeros((N, T, 2), dtype=int)
    for t in range(T):
        positions[:, t] = pos
        velocities[:, t] = vel
        for n in range(N):
            r, c = pos[n]
            clips[n, t, r:r + dot, c:c + dot] = 1.0
        pos = pos + vel
        low, high = pos < 0, pos > hi
        pos = np.where(low, -pos, pos)
        pos = np.where(high, 2 * hi - pos, pos)
        vel = np.where(low | high, -vel, vel)
    return VideoDataset(clips, positions, velocities, side)


def read_idx(path):
    """Read an IDX file of unsigned bytes.

    Rank-3 image files (magic 0x803) are returned as float arrays scaled to
    [-1, 1]; label files (magic 0x801) as integer arrays.
    """
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 4:
        raise TruncatedFile(f"{path}: missing header")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic not in (IDX_UBYTE_IMAGES, IDX_UBYTE_LABELS):
        raise BadMagic(f"{path}: magic 0x{magic:08x}")
    ndim = magic & 0xFF
    head = 4 + 4 * ndim
    if len(raw) < head:
        raise TruncatedFile(f"{path}: header shorter than {head} bytes")
    shape = struct.unpack(f">{ndim}I", raw[4:head])
    count = int(np.prod(shape))
    if len(raw) - head < count:
        raise TruncatedFile(f"{path}: expected {count} payload bytes, found {len(raw) - head}")
    values = np.frombuffer(raw, dtype=np.uint8, count=count, offset=head).reshape(shape)
    if magic == IDX_UBYTE_IMAGES:
        return values.astype(np.float64) / 127.5 - 1.0
    return values.astype(np.int64)


def write_idx(array, path):
    """Write a uint8 array as IDX (rank 3 -> image magic, rank 1 -> label magic)."""
    a = np.asarray(array)
    if a.ndim not in (1, 3):
        raise BadParameter("IDX writer supports rank-1 labels or rank-3 images")
    if a.min(initial=0) < 0 or a.max(initial=0) > 255:
        raise BadParameter("values must fit in an unsigned byte")
    magic = IDX_UBYTE_IMAGES if a.ndim == 3 else IDX_UBYTE_LABELS
    with open(path, "wb") as f:
        f.write(struct.pack(">I", magic))
        f.write(struct.pack(f">{a.ndim}I", *a.shape))
        f.write(a.astype(np.uint8).tobytes())


def to_bytes(frames):
    """Map [-1, 1] floats to 0..255 (round half to even, clipped)."""
    f = np.clip(np.asarray(frames, dtype=np.float64), -1.0, 1.0)
    return np.rint((f + 1.0) * 127.5).astype(np.uint8)


def pgm_grid_bytes(frames, rows, cols):
    """Encode frames ``(n, H, W)`` as a binary P5 PGM grid with 1-pixel black separators."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim == 2:
        frames = frames[None]
    n, H, W = frames.shape
    if rows * cols < n:
        raise BadParameter(f"{rows}x{cols} grid cannot hold {n} frames")
    height, width = rows * H + (rows - 1), cols * W + (cols - 1)
    canvas = np.zeros((height, width), dtype=np.uint8)
    pix = to_bytes(frames)
    for i in range(n):
        r, c = divmod(i, cols)
        canvas[r * (H + 1):r * (H + 1) + H, c * (W + 1):c * (W + 1) + W] = pix[i]
    return f"P5\n{width} {height}\n255\n".encode("ascii") + canvas.tobytes()


def write_pgm_grid(frames, rows, cols, path):
    data = pgm_grid_bytes(frames, rows, cols)
    with open(path, "wb") as f:
        f.write(data)


def read_pgm(path):
    """Parse a P5 PGM written by :func:`write_pgm_grid` into a uint8 array."""
    with open(path, "rb") as f:
        raw = f.read()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P5":
        raise BadMagic("not a binary PGM")
    width, height = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(height, width)
