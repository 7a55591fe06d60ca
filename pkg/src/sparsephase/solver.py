"""SROP / Gerchberg-Saxton iterations and their cyclic-projection form."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from sparsephase.constraints import (
    ProblemInstance,
    distance_to_set,
    project_amplitude,
    project_fourier_magnitude,
    project_sparse_phase,
    truncate_phase,
)
from sparsephase.grid import as_real_field, check_same_shape, principal_arg, unit_phasor
from sparsephase.metrics import change_norm, rms_phase_error, rms_phase_error_full
from sparsephase.transform import dft2, idft2

logger = logging.getLogger(__name__)

TOLERANCE = "tolerance"
MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters.

    ``sparsity_step_enabled=False`` turns SROP into plain Gerchberg-Saxton.
    """

    tolerance: float = 1e-8
    max_iterations: int = 1200
    sparsity_step_enabled: bool = True
    record_set_distances: bool = False

    def __post_init__(self):
        if not self.tolerance >= 0:
            raise ValueError("tolerance must be nonnegative")
        if int(self.max_iterations) < 1:
            raise ValueError("max_iterations must be at least 1")

    @property
    def algorithm(self) -> str:
        return "srop" if self.sparsity_step_enabled else "gs"


@dataclass
class IterationTrace:
    """Per-iteration diagnostics; record ``i`` describes the step producing iterate ``k[i]``.

    ``change[i]`` is ``||phi_{k-1} - phi_k||``. RMS columns are present only
    when a ground truth was supplied, distance columns only when enabled;
    missing values are stored as ``None``.
    """

    k: list = field(default_factory=list)
    change: list = field(default_factory=list)
    rms_support: list = field(default_factory=list)
    rms_full: list = field(default_factory=list)
    dist1: list = field(default_factory=list)
    dist2: list = field(default_factory=list)
    dist3: list = field(default_factory=list)
    estimate: np.ndarray | None = None
    termination_reason: str | None = None

    def __len__(self):
        return len(self.k)

    def append(self, k, change, rms_support=None, rms_full=None, dists=(None, None, None)):
        self.k.append(k)
        self.change.append(change)
        self.rms_support.append(rms_support)
        self.rms_full.append(rms_full)
        self.dist1.append(dists[0])
        self.dist2.append(dists[1])
        self.dist3.append(dists[2])

    def rows(self):
        return zip(self.k, self.change, self.rms_support, self.rms_full, self.dist1, self.dist2, self.dist3)


@dataclass
class SolverResult:
    estimate: np.ndarray
    trace: IterationTrace
    iterations_used: int


class NonFiniteIterateError(FloatingPointError):
    """Raised when an iterate contains NaN or Inf; carries the partial trace."""

    def __init__(self, iteration, trace):
        super().__init__(f"non-finite iterate at iteration {iteration}")
        self.iteration = iteration
        self.trace = trace


def _step(phi_k, inst: ProblemInstance, sparsify: bool) -> np.ndarray:
    d = inst.diversity_operator
    x = inst.chi * np.exp(1j * phi_k)                       # (i)
    X = dft2(x * d.factor)                                  # (ii)
    Y = inst.sqrt_b * unit_phasor(X)                        # (iii)
    y = np.conj(d.factor) * idft2(Y)                        # (iv)
    z = inst.chi * np.exp(1j * principal_arg(y))            # (v)
    phi = principal_arg(z)
    if sparsify:
        phi = truncate_phase(phi, inst.s, inst.support)     # (vi)
    return phi


def srop_step(phi_k, inst: ProblemInstance) -> np.ndarray:
    """One SROP iteration from phase ``phi_k`` to the next phase estimate."""
    return _step(phi_k, inst, True)


def gs_step(phi_k, inst: ProblemInstance) -> np.ndarray:
    """One Gerchberg-Saxton iteration: SROP without the phase truncation."""
    return _step(phi_k, inst, False)


def cyclic_step(x, inst: ProblemInstance) -> np.ndarray:
    """Apply the composed projector P3 P2 P1 once."""
    return project_sparse_phase(project_amplitude(project_fourier_magnitude(x, inst), inst.chi), inst)


def _check_initial_phase(phi0, inst):
    phi0 = as_real_field(phi0, "initial phase")
    check_same_shape(phi0, inst.b)
    if np.any(phi0 <= -np.pi) or np.any(phi0 > np.pi):
        raise ValueError("initial phase must lie in (-pi, pi]")
    outside = np.ones(phi0.size, dtype=bool)
    outside[inst.support.flat] = False
    if np.any(phi0.ravel()[outside] != 0):
        raise ValueError("initial phase must vanish outside the aperture support")
    return phi0


def run(
    inst: ProblemInstance,
    config: SolverConfig = SolverConfig(),
    initial_phase=None,
    truth=None,
) -> SolverResult:
    """Iterate SROP (or GS) until ``||phi_k - phi_{k+1}|| < tolerance`` or the budget is spent.

    Parameters
    ----------
    inst : ProblemInstance
    config : SolverConfig
    initial_phase : ndarray, optional
        Starting phase; zero everywhere when omitted.
    truth : ndarray, optional
        Ground-truth phase used only for the RMS columns of the trace.

    Returns
    -------
    SolverResult
    """
    if initial_phase is None:
        phi = np.zeros_like(inst.b)
    else:
        phi = _check_initial_phase(initial_phase, inst).copy()
    if truth is not None:
        truth = as_real_field(truth, "truth")
        check_same_shape(truth, inst.b)

    step = srop_step if config.sparsity_step_enabled else gs_step
    trace = IterationTrace()
    reason = MAX_ITERATIONS
    for k in range(1, int(config.max_iterations) + 1):
        nxt = step(phi, inst)
        if not np.all(np.isfinite(nxt)):
            trace.estimate = phi
            raise NonFiniteIterateError(k, trace)
        change = change_norm(phi, nxt)
        rms_s = rms_f = None
        if truth is not None:
            rms_s = rms_phase_error(nxt, truth, inst.support)
            rms_f = rms_phase_error_full(nxt, truth)
        dists = (None, None, None)
        if config.record_set_distances:
            x = inst.chi * np.exp(1j * nxt)
            dists = tuple(distance_to_set(x, i, inst) for i in (1, 2, 3))
        trace.append(k, change, rms_s, rms_f, dists)
        phi = nxt
        if change < config.tolerance:
            reason = TOLERANCE
            break
    trace.estimate = phi
    trace.termination_reason = reason
    logger.debug("%s finished after %d iterations (%s), change %.3e",
                 config.algorithm, len(trace), reason, trace.change[-1])
    return SolverResult(estimate=phi, trace=trace, iterations_used=len(trace))


class LinearRate(NamedTuple):
    rate: float
    r_squared: float


def estimate_linear_rate(trace, tail_fraction: float = 0.5, min_points: int = 10) -> LinearRate:
    """Fit ``change_k ~ C * rate**k`` over the tail of a trace.

    ``trace`` is an :class:`IterationTrace` or a sequence of change values
    (taken as ``k = 1, 2, ...``). Only records with positive change are
    used. Returns the geometric rate and the R^2 of the log-linear fit.
    """
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    if isinstance(trace, IterationTrace):
        ks = np.asarray(trace.k, dtype=float)
        changes = np.asarray(trace.change, dtype=float)
    else:
        changes = np.asarray(trace, dtype=float)
        ks = np.arange(1, changes.size + 1, dtype=float)
    start = changes.size - int(math.ceil(tail_fraction * changes.size))
    ks, changes = ks[start:], changes[start:]
    keep = changes > 0
    ks, changes = ks[keep], changes[keep]
    if ks.size < min_points:
        raise ValueError(f"need at least {min_points} positive changes in the tail, got {ks.size}")
    logc = np.log(changes)
    slope, intercept = np.polyfit(ks, logc, 1)
    resid = logc - (slope * ks + intercept)
    ss_tot = float(np.sum((logc - logc.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return LinearRate(float(np.exp(slope)), r2)
