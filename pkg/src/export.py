"""File formats: snapshots, loss logs, PGM images and run summaries.

PGM input may be plain (P2) or raw (P5) with any maxval up to 65535; samples are
rescaled to [0, 255]. PGM output is always raw P5 with maxval 255.
"""

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from src.errors import DimensionMismatchError, ImageFormatError, NonGridSnapshotError
from src.models import LOSS_LOG_COLUMNS, LossReport

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

IMAGE_SHAPE = (28, 28)


# =============================================================================
# Snapshots
# =============================================================================


@dataclass
class Snapshot:
    """Fields at time ``t`` on every spatial node."""

    t: float
    points: np.ndarray
    rho: np.ndarray
    phi: np.ndarray
    g: np.ndarray
    v: np.ndarray
    weights: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def mass(self) -> float:
        if self.weights is None:
            raise DimensionMismatchError("Snapshot has no quadrature weights")
        return float(np.sum(self.weights * self.rho))

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "count": len(self),
            "rho_min": float(self.rho.min()),
            "rho_max": float(self.rho.max()),
        }


def snapshot_header(dimension: int) -> list[str]:
    return (
        ["t"]
        + [f"x{i}" for i in range(dimension)]
        + ["rho", "phi", "g"]
        + [f"v{i}" for i in range(dimension)]
    )


def export_snapshot(snapshot: Snapshot, path: PathLike) -> Path:
    """Write ``t,x0..,rho,phi,g,v0..`` rows with 9 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = len(snapshot)
    table = np.column_stack(
        [
            np.full(n, snapshot.t),
            snapshot.points,
            snapshot.rho,
            snapshot.phi,
            snapshot.g,
            snapshot.v,
        ]
    )
    if not np.all(np.isfinite(table)):
        raise DimensionMismatchError(f"Snapshot at t={snapshot.t} has non-finite values")
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(snapshot_header(snapshot.dimension))
        writer.writerows([[f"{value:.8e}" for value in row] for row in table])
    return path


def read_snapshot(path: PathLike) -> Snapshot:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise DimensionMismatchError(f"Snapshot file {path} is empty")
    header = rows[0]
    dimension = sum(1 for name in header if name.startswith("x"))
    if header != snapshot_header(dimension):
        raise DimensionMismatchError(f"Unexpected snapshot header in {path}", {"header": header})
    table = np.array([[float(v) for v in row] for row in rows[1:]], dtype=np.float64)
    table = table.reshape(len(rows) - 1, len(header))
    d = dimension
    return Snapshot(
        t=float(table[0, 0]) if len(table) else 0.0,
        points=table[:, 1 : 1 + d],
        rho=table[:, 1 + d],
        phi=table[:, 2 + d],
        g=table[:, 3 + d],
        v=table[:, 4 + d :],
    )


def snapshot_filename(t: float) -> str:
    return f"snapshot_t{t:.2f}.csv"


# =============================================================================
# Loss Log
# =============================================================================


def append_loss_row(path: PathLike, report: LossReport) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    new_file = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as f:
        writer = csv.writer(f)
        if new_file:
            writer.writerow(LOSS_LOG_COLUMNS)
        writer.writerow(report.row())


def read_loss_log(path: PathLike) -> list[LossReport]:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        return [LossReport.model_validate(row) for row in reader]


# =============================================================================
# PGM Images
# =============================================================================


def _pgm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens, position = [], 0
    while len(tokens) < count:
        while position < len(data) and data[position : position + 1].isspace():
            position += 1
        if data[position : position + 1] == b"#":
            while position < len(data) and data[position : position + 1] not in (b"\n", b"\r"):
                position += 1
            continue
        start = position
        while position < len(data) and not data[position : position + 1].isspace():
            position += 1
        if start == position:
            raise ImageFormatError("Truncated PGM header")
        tokens.append(data[start:position])
    return tokens, position


def read_pgm(path: PathLike, expected_shape: Optional[tuple[int, int]] = IMAGE_SHAPE) -> np.ndarray:
    """Read a plain (P2) or raw (P5) PGM into intensities scaled to [0, 255]."""
    data = Path(path).read_bytes()
    tokens, position = _pgm_tokens(data, 4)
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        details = {"magic": magic.decode(errors="replace")}
        raise ImageFormatError(f"{path} is not a PGM image", details)
    try:
        width, height, maxval = (int(token) for token in tokens[1:])
    except ValueError as exc:
        raise ImageFormatError(f"Malformed PGM header in {path}") from exc
    if maxval <= 0 or maxval > 65535:
        raise ImageFormatError(f"Invalid PGM maxval {maxval} in {path}")

    if magic == b"P2":
        values = np.array(data[position:].split(), dtype=np.float64)
    else:
        dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
        values = np.frombuffer(data[position + 1 :], dtype=dtype).astype(np.float64)
    if values.size < width * height:
        raise ImageFormatError(f"PGM {path} holds fewer than {width}x{height} pixels")

    pixels = values[: width * height].reshape(height, width) * (255.0 / maxval)
    if expected_shape is not None and pixels.shape != expected_shape:
        raise ImageFormatError(
            f"Image {path} is {height}x{width}; expected {expected_shape[0]}x{expected_shape[1]}",
            {"shape": [height, width]},
        )
    return pixels


def write_pgm(path: PathLike, pixels: np.ndarray) -> Path:
    """Write an 8-bit raw (P5) PGM."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    image = np.clip(np.rint(pixels), 0, 255).astype(np.uint8)
    height, width = image.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        f.write(image.tobytes())
    return path


def grid_layout(points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (xs, ys, index) when 2D points form a full tensor grid.

    ``index[r, c]`` is the point at row r (top = highest y) and column c.
    """
    if points.ndim != 2 or points.shape[1] != 2:
        raise NonGridSnapshotError("Only planar snapshots can be rendered")
    xs, col = np.unique(points[:, 0], return_inverse=True)
    ys, row = np.unique(points[:, 1], return_inverse=True)
    if len(xs) * len(ys) != len(points):
        raise NonGridSnapshotError("Snapshot points do not form a full grid")
    index = np.full((len(ys), len(xs)), -1)
    index[len(ys) - 1 - row, col] = np.arange(len(points))
    if np.any(index < 0):
        raise NonGridSnapshotError("Snapshot points do not form a full grid")
    return xs, ys, index


def render_planar(snapshot: Snapshot, path: PathLike) -> Path:
    """Render rho as a min-max normalized P5 image; a constant field renders black."""
    _, _, index = grid_layout(snapshot.points)
    field = snapshot.rho[index]
    low, high = float(field.min()), float(field.max())
    if high > low:
        pixels = 255.0 * (field - low) / (high - low)
    else:
        pixels = np.zeros_like(field)
    logger.info("Rendering %dx%d image of rho at t=%.2f", *field.shape, snapshot.t)
    return write_pgm(path, pixels)


# =============================================================================
# Run Summary
# =============================================================================


def export_run_summary(data: dict, output_path: PathLike) -> Path:
    """Write the run summary as indented JSON."""
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, "w") as f:
        json.dump(data, f, indent=2)
    logger.info("Exported summary to %s", output_path)
    return output_path
