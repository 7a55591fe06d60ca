"""Square real/complex fields and index sets on an n x n grid.

Fields are plain 2-D numpy arrays (float64 for real fields, complex128 for
complex ones). Library functions never modify their inputs in place.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator

import numpy as np


def as_real_field(a, name="field") -> np.ndarray:
    """Validate ``a`` as a square, finite float64 array."""
    arr = np.asarray(a)
    if np.iscomplexobj(arr):
        raise TypeError(f"{name} must be real-valued")
    arr = arr.astype(np.float64, copy=False)
    _check_square(arr, name)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_complex_field(a, name="field") -> np.ndarray:
    """Validate ``a`` as a square, finite complex128 array."""
    arr = np.asarray(a).astype(np.complex128, copy=False)
    _check_square(arr, name)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def _check_square(arr, name):
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty square 2-D array, got shape {arr.shape}")


def check_same_shape(*arrays) -> None:
    shapes = {np.shape(a) for a in arrays}
    if len(shapes) != 1:
        raise ValueError(f"dimension mismatch: {sorted(shapes)}")


class SupportSet:
    """Ordered set of (row, col) grid indices, stored as sorted row-major offsets.

    Parameters
    ----------
    n : int
        Grid side.
    flat : array_like of int
        Row-major offsets ``row * n + col``. Must be strictly increasing
        and lie in ``[0, n*n)``.
    """

    __slots__ = ("n", "flat")

    def __init__(self, n: int, flat: Iterable[int] = ()):
        n = int(n)
        if n < 1:
            raise ValueError("grid side must be positive")
        flat = np.asarray(list(flat) if not isinstance(flat, np.ndarray) else flat, dtype=np.int64).ravel()
        if flat.size:
            if flat[0] < 0 or flat[-1] >= n * n:
                raise ValueError("support index outside the grid")
            if np.any(np.diff(flat) <= 0):
                raise ValueError("support indices must be strictly increasing in row-major order")
        flat = flat.copy()
        flat.flags.writeable = False
        self.n = n
        self.flat = flat

    @classmethod
    def full(cls, n: int) -> SupportSet:
        return cls(n, np.arange(n * n))

    @classmethod
    def from_mask(cls, mask) -> SupportSet:
        mask = np.asarray(mask, dtype=bool)
        _check_square(mask, "mask")
        return cls(mask.shape[0], np.flatnonzero(mask))

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[int, int]]) -> SupportSet:
        """Build from (row, col) pairs in any order; duplicates are rejected."""
        pairs = list(pairs)
        for r, c in pairs:
            if not (0 <= r < n and 0 <= c < n):
                raise ValueError(f"index {(r, c)} outside [0, {n})^2")
        flat = sorted(r * n + c for r, c in pairs)
        if len(set(flat)) != len(flat):
            raise ValueError("duplicate support indices")
        return cls(n, flat)

    @property
    def rows(self) -> np.ndarray:
        return self.flat // self.n

    @property
    def cols(self) -> np.ndarray:
        return self.flat % self.n

    def mask(self) -> np.ndarray:
        m = np.zeros(self.n * self.n, dtype=bool)
        m[self.flat] = True
        return m.reshape(self.n, self.n)

    def pairs(self) -> list[tuple[int, int]]:
        return [(int(i) // self.n, int(i) % self.n) for i in self.flat]

    def __len__(self) -> int:
        return int(self.flat.size)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.pairs())

    def __contains__(self, rc) -> bool:
        r, c = rc
        if not (0 <= r < self.n and 0 <= c < self.n):
            return False
        i = r * self.n + c
        k = np.searchsorted(self.flat, i)
        return bool(k < self.flat.size and self.flat[k] == i)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SupportSet):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.flat, other.flat)

    def __hash__(self):
        return hash((self.n, self.flat.tobytes()))

    def __repr__(self) -> str:
        if len(self) <= 8:
            return f"SupportSet(n={self.n}, {self.pairs()})"
        return f"SupportSet(n={self.n}, size={len(self)})"


def frobenius_norm(f) -> float:
    mag = np.abs(np.asarray(f).ravel())
    scale = mag.max(initial=0.0)
    if scale == 0 or not np.isfinite(scale):
        return float(scale)
    # rescale so squaring tiny entries cannot underflow to zero
    return float(scale * np.sqrt(np.sum((mag / scale) ** 2)))


def zero_norm(f, domain: SupportSet | None = None) -> int:
    """Number of entries of ``f`` within ``domain`` that are exactly nonzero."""
    f = np.asarray(f)
    if domain is None:
        return int(np.count_nonzero(f))
    return int(np.count_nonzero(f.ravel()[domain.flat]))


def principal_arg(f) -> np.ndarray:
    """Element-wise argument in (-pi, pi], with arg(0) = 0.

    ``np.angle`` returns -pi for values on the negative real axis with a
    negative-zero imaginary part; those are mapped to +pi.
    """
    f = np.asarray(f)
    phase = np.angle(f)
    phase[phase == -np.pi] = np.pi
    phase[f == 0] = 0.0
    return phase


def unit_phasor(f) -> np.ndarray:
    """``f / |f|`` element-wise, with 1 where ``f == 0``."""
    f = np.asarray(f, dtype=np.complex128)
    mag = np.abs(f)
    out = np.ones_like(f)
    nz = mag > 0
    out[nz] = f[nz] / mag[nz]
    return out


def expj(phase) -> np.ndarray:
    """exp(j * phase) element-wise."""
    phase = np.asarray(phase, dtype=np.float64)
    return np.exp(1j * phase)
