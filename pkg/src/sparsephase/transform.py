"""Centered unitary 2-D DFT and the phase-diversity operator.

Both transforms are unitary, so Frobenius norms are preserved and the
scale of a synthesized intensity image ``|dft2(x)|**2`` matches the scale
used when projecting onto the Fourier-magnitude constraint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from sparsephase.grid import as_real_field, check_same_shape


def dft2(f) -> np.ndarray:
    """Unitary 2-D DFT with the zero frequency at the array center.

    The array center is index ``n // 2`` along each axis (fftshift
    convention). A unit impulse there maps to the constant ``1/n``.
    """
    f = np.asarray(f, dtype=np.complex128)
    return np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(f), norm="ortho"))


def idft2(F) -> np.ndarray:
    """Exact inverse of :func:`dft2`."""
    F = np.asarray(F, dtype=np.complex128)
    return np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(F), norm="ortho"))


@dataclass(frozen=True)
class DiversityOperator:
    """Multiplication by the unimodular field ``exp(j * phase)``."""

    phase: np.ndarray
    _factor: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        phase = as_real_field(self.phase, "diversity phase").copy()
        phase.flags.writeable = False
        factor = np.exp(1j * phase)
        factor.flags.writeable = False
        object.__setattr__(self, "phase", phase)
        object.__setattr__(self, "_factor", factor)

    @property
    def factor(self) -> np.ndarray:
        return self._factor

    def apply(self, f) -> np.ndarray:
        check_same_shape(self.phase, f)
        return np.asarray(f) * self._factor

    def apply_inverse(self, f) -> np.ndarray:
        check_same_shape(self.phase, f)
        return np.asarray(f) * np.conj(self._factor)


def apply_diversity(d: DiversityOperator, f) -> np.ndarray:
    return d.apply(f)


def apply_inverse_diversity(d: DiversityOperator, f) -> np.ndarray:
    return d.apply_inverse(f)
