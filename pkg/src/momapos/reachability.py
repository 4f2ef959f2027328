"""Inverse reachability map: voxelised end-effector hit counts in the arm base frame.

Binary file layout (little-endian)::

    magic      4 bytes  b"IRM1"
    version    u16
    voxel_size f64
    extent     6 x f64  (min xyz, max xyz)
    dims       3 x u32
    seed       u64
    name       u16 length + UTF-8 bytes
    counts     dims[0]*dims[1]*dims[2] x u32, row-major (x slowest)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .geometry import Aabb
from .kinematics import BasePose, RobotModel, arm_reach, fk_positions, world_to_arm

MAGIC = b"IRM1"
VERSION = 1
CHUNK = 100_000
_HEADER = struct.Struct("<4sHd6d3IQ")


@dataclass
class ReachabilityMap:
    voxel_size: float
    extent: Aabb
    counts: np.ndarray
    robot_name: str = ""
    build_seed: int = 0

    @property
    def dims(self) -> tuple:
        return tuple(int(v) for v in self.counts.shape)

    @property
    def max_count(self) -> int:
        return int(self.counts.max()) if self.counts.size else 0

    def voxel_index(self, pts) -> tuple[np.ndarray, np.ndarray]:
        """Integer voxel indices of arm-frame points and an inside-extent mask."""
        pts = np.asarray(pts, dtype=float)
        lo, hi = self.extent.lo, self.extent.hi
        inside = np.all((pts >= lo) & (pts <= hi), axis=-1)
        idx = np.floor((pts - lo) / self.voxel_size).astype(np.int64)
        idx = np.clip(idx, 0, np.array(self.dims) - 1)
        return idx, inside

    def voxel_center(self, idx) -> np.ndarray:
        return self.extent.lo + (np.asarray(idx, dtype=float) + 0.5) * self.voxel_size

    def score_local(self, pts) -> np.ndarray:
        """Normalised score for arm-frame points; 0 outside the extent."""
        idx, inside = self.voxel_index(pts)
        mc = self.max_count
        if mc == 0:
            return np.zeros(inside.shape)
        c = self.counts[idx[..., 0], idx[..., 1], idx[..., 2]]
        return np.where(inside, c / mc, 0.0)

    def info(self) -> dict:
        return {
            "robot": self.robot_name,
            "voxel_size": self.voxel_size,
            "extent": self.extent.to_dict(),
            "dims": list(self.dims),
            "seed": self.build_seed,
            "max_count": self.max_count,
            "nonzero_voxels": int(np.count_nonzero(self.counts)),
            "total_hits": int(self.counts.sum(dtype=np.int64)),
        }

    def to_csv(self, path) -> None:
        nz = np.argwhere(self.counts > 0)
        mc = max(self.max_count, 1)
        with open(path, "w") as f:
            f.write("i,j,k,x,y,z,count,score\n")
            for i, j, k in nz:
                c = self.voxel_center((i, j, k))
                n = int(self.counts[i, j, k])
                f.write(f"{i},{j},{k},{c[0]:.4f},{c[1]:.4f},{c[2]:.4f},{n},{n / mc:.6f}\n")


def empty_map(robot: RobotModel, voxel_size: float, seed: int = 0) -> ReachabilityMap:
    R = arm_reach(robot)
    dims = max(int(np.ceil(2 * R / voxel_size - 1e-9)), 1)
    extent = Aabb((-R, -R, -R), (R, R, R))
    return ReachabilityMap(voxel_size, extent, np.zeros((dims, dims, dims), dtype=np.uint32), robot.name, seed)


def _chunk_samples(robot: RobotModel, seed: int, k: int, n: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
    return rng.uniform(robot.lower, robot.upper, size=(CHUNK, robot.dof))[:n]


def accumulate(irm: ReachabilityMap, robot: RobotModel, seed: int, chunks) -> None:
    """Add the FK hits of the given (chunk index, count) pairs into ``irm``."""
    flat = irm.counts.reshape(-1)
    for k, n in chunks:
        pos = fk_positions(robot, _chunk_samples(robot, seed, k, n))
        idx, inside = irm.voxel_index(pos)
        idx = idx[inside]
        lin = np.ravel_multi_index(idx.T, irm.dims)
        flat += np.bincount(lin, minlength=flat.size).astype(np.uint32)


def build_irm(robot: RobotModel, samples: int = 2_000_000, voxel_size: float = 0.05, seed: int = 0) -> ReachabilityMap:
    """Bin the FK positions of ``samples`` uniform in-limit joint vectors.

    Samples come in fixed chunks, chunk k drawn from SeedSequence([seed, k]),
    so a larger build always contains a smaller build's samples.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if voxel_size <= 0:
        raise ValueError("voxel_size must be positive")
    irm = empty_map(robot, voxel_size, seed)
    chunks = [(k, min(CHUNK, samples - k * CHUNK)) for k in range(int(np.ceil(samples / CHUNK)))]
    accumulate(irm, robot, seed, chunks)
    return irm


def irm_query(irm: ReachabilityMap, base: BasePose, base_z_offset: float, target) -> float:
    local = world_to_arm(None, base, np.asarray(target, dtype=float), mount_height=base_z_offset)
    return float(irm.score_local(local))


def irm_query_many(irm: ReachabilityMap, xy, yaw, base_z_offset: float, targets) -> np.ndarray:
    """Scores for every (base, target) pair: shape (n_bases, n_targets)."""
    xy = np.asarray(xy, dtype=float)
    yaw = np.asarray(yaw, dtype=float)
    T = np.asarray(targets, dtype=float)
    dx = T[None, :, 0] - xy[:, None, 0]
    dy = T[None, :, 1] - xy[:, None, 1]
    c, s = np.cos(yaw)[:, None], np.sin(yaw)[:, None]
    local = np.stack([c * dx + s * dy, -s * dx + c * dy, np.broadcast_to(T[None, :, 2] - base_z_offset, dx.shape)], axis=-1)
    return irm.score_local(local)


def save_irm(irm: ReachabilityMap, path) -> None:
    name = irm.robot_name.encode("utf-8")
    header = _HEADER.pack(MAGIC, VERSION, irm.voxel_size, *irm.extent.min, *irm.extent.max, *irm.dims, irm.build_seed)
    with open(path, "wb") as f:
        f.write(header)
        f.write(struct.pack("<H", len(name)))
        f.write(name)
        f.write(np.ascontiguousarray(irm.counts, dtype="<u4").tobytes())


def load_irm(path) -> ReachabilityMap:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < _HEADER.size + 2:
        raise FormatError("file too short for an IRM header")
    magic, version, voxel, *rest = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    ext, dims, seed = rest[:6], rest[6:9], rest[9]
    if voxel <= 0 or min(dims) < 1:
        raise FormatError("invalid voxel size or dims")
    off = _HEADER.size
    (nlen,) = struct.unpack_from("<H", data, off)
    off += 2
    if len(data) < off + nlen:
        raise FormatError("truncated robot name")
    name = data[off : off + nlen].decode("utf-8")
    off += nlen
    n = dims[0] * dims[1] * dims[2]
    if len(data) != off + 4 * n:
        raise FormatError(f"payload holds {len(data) - off} bytes, expected {4 * n}")
    counts = np.frombuffer(data, dtype="<u4", count=n, offset=off).astype(np.uint32).reshape(dims)
    return ReachabilityMap(float(voxel), Aabb(tuple(ext[:3]), tuple(ext[3:])), counts, name, int(seed))
