"""Sweep readers, trajectory/PLY writers and the run configuration file."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import RigidTransform


class MalformedFile(ValueError):
    pass


class EmptySweep(ValueError):
    pass


class ConfigError(ValueError):
    pass


# KITTI Velodyne axes (x forward, y left, z up) -> vehicle frame (X right, Y forward, Z up)
AXIS_REMAPS = {
    "kitti": np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
    "identity": np.eye(3),
}


@dataclass
class Sweep:
    """One sensor rotation.  ``points`` are sensor-frame coordinates (N, 3)."""

    index: int
    points: np.ndarray
    time_fraction: np.ndarray
    intensity: np.ndarray | None = None
    pre_deskewed: bool = False

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        self.time_fraction = np.asarray(self.time_fraction, dtype=float).reshape(-1)
        if len(self.points) == 0:
            raise EmptySweep(f"sweep {self.index} has no points")
        if len(self.time_fraction) != len(self.points):
            raise ValueError("time_fraction length differs from point count")
        if not np.all(np.isfinite(self.points)):
            raise MalformedFile(f"sweep {self.index} has non-finite coordinates")
        tf = self.time_fraction
        if tf.min() < 0.0 or tf.max() > 1.0:
            raise ValueError("time fractions must lie in [0, 1]")

    def __len__(self):
        return len(self.points)


def azimuth_time_fraction(points) -> np.ndarray:
    """Counter-clockwise azimuth measured from the first point, divided by 2 pi."""
    p = np.asarray(points, dtype=float)
    az = np.arctan2(p[:, 1], p[:, 0])
    frac = np.mod(az - az[0], 2.0 * np.pi) / (2.0 * np.pi)
    return np.clip(frac, 0.0, 1.0)


def _drop_zero_range(points, *others):
    keep = np.linalg.norm(points, axis=1) > 0.0
    return (points[keep],) + tuple(o[keep] if o is not None else None for o in others)


def read_kitti_sweep(path, index: int) -> Sweep:
    """Read a KITTI ``.bin`` sweep of little-endian float32 (x, y, z, reflectance)."""
    path = Path(path)
    size = path.stat().st_size
    if size % 16:
        raise MalformedFile(f"{path}: size {size} is not a multiple of 16 bytes")
    if size == 0:
        raise EmptySweep(f"{path}: empty sweep")
    raw = np.fromfile(path, dtype="<f4").reshape(-1, 4)
    if not np.all(np.isfinite(raw)):
        raise MalformedFile(f"{path}: non-finite values")
    pts, inten = _drop_zero_range(raw[:, :3].astype(float), raw[:, 3].astype(float))
    if len(pts) == 0:
        raise EmptySweep(f"{path}: no valid returns")
    return Sweep(index, pts, azimuth_time_fraction(pts), inten, pre_deskewed=True)


def write_kitti_sweep(points, path, intensity=None) -> None:
    p = np.asarray(points, dtype=float).reshape(-1, 3)
    rec = np.zeros((len(p), 4), dtype="<f4")
    rec[:, :3] = p
    if intensity is not None:
        rec[:, 3] = intensity
    rec.tofile(path)


def format_pose_line(pose: RigidTransform) -> str:
    m = pose.matrix()[:3, :]
    return " ".join(f"{v + 0.0:.9g}" for v in m.ravel())


def write_kitti_trajectory(poses, path) -> None:
    poses = list(poses)
    if not poses:
        raise ValueError("trajectory needs at least one pose")
    with open(path, "w") as fh:
        for pose in poses:
            fh.write(format_pose_line(pose) + "\n")


def read_kitti_trajectory(path) -> list[RigidTransform]:
    poses = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                vals = np.array([float(v) for v in line.split()])
            except ValueError as exc:
                raise MalformedFile(f"{path}:{lineno}: {exc}") from exc
            if vals.size != 12 or not np.all(np.isfinite(vals)):
                raise MalformedFile(f"{path}:{lineno}: expected 12 finite values")
            m = vals.reshape(3, 4)
            try:
                poses.append(RigidTransform(m[:, :3], m[:, 3]))
            except ValueError as exc:
                raise MalformedFile(f"{path}:{lineno}: {exc}") from exc
    return poses


_PLY_TYPES = {"float": "<f4", "float32": "<f4", "double": "<f8", "float64": "<f8",
              "uchar": "u1", "uint8": "u1", "int": "<i4", "int32": "<i4", "uint": "<u4"}


def write_ply(points, path, normals=None, scalars: dict | None = None, double: bool = False) -> None:
    """Binary little-endian vertex-only PLY: x, y, z [nx, ny, nz] [extra scalars].

    Values are stored as float32 unless ``double`` is set.
    """
    p = np.asarray(points, dtype=float).reshape(-1, 3)
    names = ["x", "y", "z"]
    cols = [p]
    if normals is not None:
        n = np.asarray(normals, dtype=float).reshape(-1, 3)
        if len(n) != len(p):
            raise ValueError("normals and points differ in length")
        names += ["nx", "ny", "nz"]
        cols.append(n)
    for key, val in (scalars or {}).items():
        names.append(key)
        cols.append(np.asarray(val, dtype=float).reshape(-1, 1))
    data = np.hstack(cols).astype("<f8" if double else "<f4")
    ply_type = "double" if double else "float"
    header = ["ply", "format binary_little_endian 1.0", f"element vertex {len(p)}"]
    header += [f"property {ply_type} {name}" for name in names]
    header.append("end_header")
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        fh.write(np.ascontiguousarray(data).tobytes())


def read_ply(path) -> dict[str, np.ndarray]:
    """Read a binary little-endian vertex PLY into a column dictionary."""
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"ply":
            raise MalformedFile(f"{path}: not a PLY file")
        props: list[tuple[str, str]] = []
        count = None
        in_vertex = False
        fmt = None
        while True:
            line = fh.readline()
            if not line:
                raise MalformedFile(f"{path}: truncated header")
            tokens = line.decode("ascii", "replace").split()
            if not tokens:
                continue
            if tokens[0] == "end_header":
                break
            if tokens[0] == "format":
                fmt = tokens[1]
            elif tokens[0] == "element":
                in_vertex = tokens[1] == "vertex"
                if in_vertex:
                    count = int(tokens[2])
                elif int(tokens[2]) > 0:
                    raise MalformedFile(f"{path}: only vertex elements are supported")
            elif tokens[0] == "property" and in_vertex:
                if tokens[1] == "list" or tokens[1] not in _PLY_TYPES:
                    raise MalformedFile(f"{path}: unsupported property {' '.join(tokens[1:])}")
                props.append((tokens[2], _PLY_TYPES[tokens[1]]))
        if fmt != "binary_little_endian" or count is None:
            raise MalformedFile(f"{path}: need a binary_little_endian vertex element")
        dtype = np.dtype(props)
        buf = fh.read(dtype.itemsize * count)
        if len(buf) != dtype.itemsize * count:
            raise MalformedFile(f"{path}: truncated vertex data")
        arr = np.frombuffer(buf, dtype=dtype, count=count)
    out = {name: arr[name].astype(float) for name, _ in props}
    for name, col in out.items():
        if not np.all(np.isfinite(col)):
            raise MalformedFile(f"{path}: non-finite values in '{name}'")
    return out


def ply_points(cols: dict[str, np.ndarray]) -> np.ndarray:
    return np.column_stack([cols["x"], cols["y"], cols["z"]])


def read_ply_sweep(path, index: int) -> Sweep:
    """Raw sweep from PLY; uses a ``time`` property when present, else azimuth order."""
    cols = read_ply(path)
    if not {"x", "y", "z"} <= cols.keys():
        raise MalformedFile(f"{path}: missing x/y/z")
    pts = ply_points(cols)
    time = cols.get("time")
    inten = cols.get("intensity")
    pts, time, inten = _drop_zero_range(pts, time, inten)
    if len(pts) == 0:
        raise EmptySweep(f"{path}: empty sweep")
    if time is None:
        time = azimuth_time_fraction(pts)
    return Sweep(index, pts, np.clip(time, 0.0, 1.0), inten, pre_deskewed=False)


@dataclass
class RunConfig:
    s: int = 100
    h: float = 0.06
    r: float = 0.20
    iterations: int = 20
    n: int = 100
    object_removal: bool = True
    deskew: str = "auto"
    sampling: str = "ours"
    k_neighbors: int = 20
    axis_remap: str = "kitti"
    min_samples: int = 100
    seed: int = 0
    cluster_link: float = 0.5
    removal_box: tuple = (14.0, 14.0, 4.0)
    ground_voxel: float = 0.5
    ground_seed_radius: float = 10.0
    ground_max_slope_deg: float = 30.0
    ground_max_step: float = 0.3

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.s < 1 or self.n < 1 or self.iterations < 1:
            raise ConfigError("s, n and iterations must be >= 1")
        if not (self.h > 0 and self.r > 0):
            raise ConfigError("h and r must be > 0")
        if self.k_neighbors < 3:
            raise ConfigError("k_neighbors must be >= 3")
        if self.min_samples < 6:
            raise ConfigError("min_samples must be >= 6")
        if self.deskew not in ("auto", "on", "off"):
            raise ConfigError(f"deskew must be auto|on|off, got {self.deskew!r}")
        if self.sampling not in ("ours", "random", "all"):
            raise ConfigError(f"sampling must be ours|random|all, got {self.sampling!r}")
        if self.axis_remap not in AXIS_REMAPS:
            raise ConfigError(f"axis_remap must be one of {sorted(AXIS_REMAPS)}")
        if len(self.removal_box) != 3 or min(self.removal_box) <= 0:
            raise ConfigError("removal_box needs three positive extents")
        if min(self.cluster_link, self.ground_voxel, self.ground_seed_radius, self.ground_max_step) <= 0:
            raise ConfigError("ground/cluster parameters must be > 0")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    @property
    def remap(self) -> np.ndarray:
        return AXIS_REMAPS[self.axis_remap]


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_value(kind, raw: str):
    if kind is bool:
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind is tuple:
        return tuple(float(v) for v in raw.replace(",", " ").split())
    if kind is str:
        return raw
    return kind(raw)


def _field_kinds():
    defaults = RunConfig.__dataclass_fields__
    return {name: type(f.default) if f.default is not dataclasses.MISSING else tuple
            for name, f in defaults.items()}


def parse_config(text: str) -> RunConfig:
    kinds = _field_kinds()
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in kinds:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key == "deskew" and raw.lower() in _TRUE | _FALSE:
            raw = "on" if raw.lower() in _TRUE else "off"
        try:
            values[key] = _parse_value(kinds[key], raw)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        val = getattr(cfg, f.name)
        if isinstance(val, bool):
            val = "true" if val else "false"
        elif isinstance(val, tuple):
            val = " ".join(f"{v:g}" for v in val)
        lines.append(f"{f.name} = {val}")
    return "\n".join(lines) + "\n"


def list_sweep_files(directory, fmt: str) -> list[Path]:
    ext = {"kitti": ".bin", "ply": ".ply"}[fmt]
    files = sorted(p for p in Path(directory).iterdir() if p.suffix == ext and p.is_file())
    return files


def read_sweep(path, index: int, fmt: str) -> Sweep:
    if fmt == "kitti":
        return read_kitti_sweep(path, index)
    if fmt == "ply":
        return read_ply_sweep(path, index)
    raise ValueError(f"unknown sweep format {fmt!r}")

