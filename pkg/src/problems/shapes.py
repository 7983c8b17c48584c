"""Procedural 28x28 rasters for the shape-transfer problems.

The digits are drawn strokes, not dataset samples. A 28x28 PGM passed as
`rho0_image` or `rho1_image` replaces them.

Pixels hold intensities in [0, 255]; row 0 is the top of the image.
"""

from typing import Callable

import numpy as np

from src.errors import UnknownPresetError

SIZE = 28
INK = 255.0


def _pixel_grid() -> tuple[np.ndarray, np.ndarray]:
    centers = (np.arange(SIZE) + 0.5) / SIZE
    x, y = np.meshgrid(centers, centers[::-1], indexing="xy")
    return x, y


def _segment_distance(x, y, start, end) -> np.ndarray:
    p = np.stack([x, y], axis=-1)
    a, b = np.asarray(start, dtype=float), np.asarray(end, dtype=float)
    ab = b - a
    s = np.clip(((p - a) @ ab) / (ab @ ab), 0.0, 1.0)
    nearest = a + s[..., None] * ab
    return np.linalg.norm(p - nearest, axis=-1)


def _strokes(segments, width: float) -> np.ndarray:
    x, y = _pixel_grid()
    mask = np.zeros_like(x, dtype=bool)
    for start, end in segments:
        mask |= _segment_distance(x, y, start, end) <= width / 2
    return mask


def _triangle_mask(x, y, vertices) -> np.ndarray:
    signs = []
    for i in range(3):
        (x0, y0), (x1, y1) = vertices[i], vertices[(i + 1) % 3]
        signs.append((x1 - x0) * (y - y0) - (y1 - y0) * (x - x0))
    positive = np.all([s >= 0 for s in signs], axis=0)
    negative = np.all([s <= 0 for s in signs], axis=0)
    return positive | negative


def _regular_triangle(radius: float, rotation: float) -> list[tuple[float, float]]:
    angles = rotation + np.array([90.0, 210.0, 330.0]) * np.pi / 180.0
    return [(0.5 + radius * np.cos(a), 0.5 + radius * np.sin(a)) for a in angles]


def disc() -> np.ndarray:
    x, y = _pixel_grid()
    return INK * ((x - 0.5) ** 2 + (y - 0.5) ** 2 <= 0.3**2)


def hexagram() -> np.ndarray:
    x, y = _pixel_grid()
    up = _triangle_mask(x, y, _regular_triangle(0.38, 0.0))
    down = _triangle_mask(x, y, _regular_triangle(0.38, np.pi))
    return INK * (up | down)


def triangle() -> np.ndarray:
    x, y = _pixel_grid()
    return INK * _triangle_mask(x, y, [(0.15, 0.2), (0.85, 0.2), (0.5, 0.85)])


def smiley() -> np.ndarray:
    x, y = _pixel_grid()
    r = np.hypot(x - 0.5, y - 0.5)
    face = (r <= 0.4) & (r >= 0.32)
    eyes = (np.hypot(x - 0.37, y - 0.6) <= 0.06) | (np.hypot(x - 0.63, y - 0.6) <= 0.06)
    mouth_r = np.hypot(x - 0.5, y - 0.5)
    mouth = (mouth_r <= 0.24) & (mouth_r >= 0.17) & (y < 0.42)
    return INK * (face | eyes | mouth)


def digit_one() -> np.ndarray:
    segments = [
        ((0.52, 0.15), (0.52, 0.85)),
        ((0.52, 0.85), (0.38, 0.72)),
        ((0.38, 0.15), (0.66, 0.15)),
    ]
    return INK * _strokes(segments, 0.1)


def digit_seven() -> np.ndarray:
    segments = [
        ((0.25, 0.82), (0.75, 0.82)),
        ((0.75, 0.82), (0.42, 0.15)),
    ]
    return INK * _strokes(segments, 0.1)


SHAPES: dict[str, Callable[[], np.ndarray]] = {
    "disc": disc,
    "hexagram": hexagram,
    "triangle": triangle,
    "smiley": smiley,
    "one": digit_one,
    "seven": digit_seven,
}


def draw_shape(name: str) -> np.ndarray:
    try:
        return SHAPES[name]()
    except KeyError:
        raise UnknownPresetError(f"Unknown shape: {name}", {"available": sorted(SHAPES)}) from None
