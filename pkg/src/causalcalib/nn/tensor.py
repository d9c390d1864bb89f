"""Dense 2-D tensors and finiteness guards for the neural core.

Everything runs in float64 so analytic gradients can be checked against
central finite differences at tight tolerances. Any NaN/Inf leaving an
operation is a hard error that names the layer it came from.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericError


def ensure_finite(name: str, *arrays: np.ndarray) -> None:
    for arr in arrays:
        if not np.isfinite(arr).all():
            raise NumericError(f"non-finite values produced by {name}")


@dataclass
class Tensor2D:
    """Row-major 2-D value used for checkpoint round-trips."""

    rows: int
    cols: int
    data: list[float]

    def __post_init__(self) -> None:
        if self.rows <= 0 or self.cols <= 0:
            raise ValueError("Tensor2D dimensions must be positive")
        if len(self.data) != self.rows * self.cols:
            raise ValueError(
                f"Tensor2D data length {len(self.data)} != {self.rows}x{self.cols}"
            )
        if not np.isfinite(np.asarray(self.data, dtype=float)).all():
            raise NumericError("Tensor2D holds non-finite entries")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Tensor2D":
        arr = np.atleast_2d(np.asarray(arr, dtype=float))
        return cls(rows=arr.shape[0], cols=arr.shape[1], data=[float(v) for v in arr.ravel()])

    def to_array(self) -> np.ndarray:
        return np.asarray(self.data, dtype=float).reshape(self.rows, self.cols)
