"""Tangential projection operators built from orthonormal normal frames.

Frames have shape (..., d, k). A frame with k = 0 (or ``None``) describes the
Euclidean case, where P is the identity. Every operator accepts either numpy
arrays or torch tensors and returns the same kind.
"""

from typing import Optional

import numpy as np
import torch

from src.errors import DimensionMismatchError, FrameError

FRAME_TOLERANCE = 1e-6


def _xp(array):
    return torch if isinstance(array, torch.Tensor) else np


def codimension(frame) -> int:
    return 0 if frame is None else frame.shape[-1]


def frame_deviation(frame) -> float:
    """Largest entry of |N^T N - I| over all frames."""
    if codimension(frame) == 0:
        return 0.0
    xp = _xp(frame)
    gram = xp.einsum("...dk,...dl->...kl", frame, frame)
    eye = xp.eye(frame.shape[-1], dtype=gram.dtype)
    return float(xp.abs(gram - eye).max())


def check_frame(frame, tolerance: float = FRAME_TOLERANCE) -> None:
    deviation = frame_deviation(frame)
    if deviation > tolerance:
        raise FrameError(
            f"Normal frame is not orthonormal (Gram deviation {deviation:.3e})",
            {"deviation": deviation, "tolerance": tolerance},
        )


def projection_apply(frame: Optional[object], vec, check: bool = True):
    """Return P @ vec with P = I - N N^T, batched over leading axes."""
    if codimension(frame) == 0:
        return vec
    if frame.shape[-2] != vec.shape[-1]:
        raise DimensionMismatchError(
            f"frame is {frame.shape[-2]}-dimensional, vector is {vec.shape[-1]}-dimensional"
        )
    if check:
        check_frame(frame)
    xp = _xp(vec)
    coefficients = xp.einsum("...dk,...d->...k", frame, vec)
    return vec - xp.einsum("...dk,...k->...d", frame, coefficients)


def projection_matrix(frame, dimension: Optional[int] = None):
    """Dense P = I - N N^T with shape (..., d, d)."""
    if codimension(frame) == 0:
        if dimension is None:
            raise DimensionMismatchError("dimension is required for an empty frame")
        return np.eye(dimension)
    xp = _xp(frame)
    eye = xp.eye(frame.shape[-2], dtype=frame.dtype)
    return eye - xp.einsum("...dk,...ek->...de", frame, frame)


def tangential_hessian_trace(frame, hess):
    """trace(P H), computed as trace(H) - sum_k n_k^T H n_k."""
    if hess.shape[-1] != hess.shape[-2]:
        raise DimensionMismatchError(f"Hessian must be square, got {tuple(hess.shape)}")
    xp = _xp(hess)
    if xp is torch:
        trace = hess.diagonal(0, -2, -1).sum(-1)
    else:
        trace = np.trace(hess, axis1=-2, axis2=-1)
    if codimension(frame) == 0:
        return trace
    if frame.shape[-2] != hess.shape[-1]:
        raise DimensionMismatchError(
            f"frame is {frame.shape[-2]}-dimensional, Hessian is {hess.shape[-1]}x{hess.shape[-1]}"
        )
    return trace - xp.einsum("...dk,...de,...ek->...", frame, hess, frame)
