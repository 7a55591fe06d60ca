"""Quality measures for phase estimates."""

from __future__ import annotations

import numpy as np

from sparsephase.grid import SupportSet, check_same_shape, zero_norm


def wrap_phase(d) -> np.ndarray:
    """Map phases into (-pi, pi]."""
    d = np.asarray(d, dtype=np.float64)
    return d - 2 * np.pi * np.ceil((d - np.pi) / (2 * np.pi))


def change_norm(phi_a, phi_b) -> float:
    """Frobenius norm of the raw (unwrapped) phase difference."""
    check_same_shape(phi_a, phi_b)
    return float(np.linalg.norm((np.asarray(phi_a, dtype=float) - np.asarray(phi_b, dtype=float)).ravel()))


def rms_phase_error(estimate, truth, support: SupportSet) -> float:
    """Root-mean-square of the wrapped phase error over ``support``."""
    check_same_shape(estimate, truth)
    if len(support) == 0:
        raise ValueError("RMS over an empty support is undefined")
    diff = np.asarray(estimate, dtype=float).ravel()[support.flat] - np.asarray(truth, dtype=float).ravel()[support.flat]
    return float(np.sqrt(np.mean(wrap_phase(diff) ** 2)))


def rms_phase_error_full(estimate, truth) -> float:
    """Raw RMS of ``estimate - truth`` over the whole grid, no wrapping."""
    check_same_shape(estimate, truth)
    diff = np.asarray(estimate, dtype=float) - np.asarray(truth, dtype=float)
    return float(np.sqrt(np.mean(diff**2)))


def measured_sparsity(phi, support: SupportSet) -> int:
    return zero_norm(phi, support)
