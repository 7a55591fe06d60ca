"""Projectors onto the three constraint sets of sparse-phase retrieval.

* Omega_1: fields whose diversity-corrected Fourier modulus matches the
  measurement, ``|dft2(x * exp(j*diversity))|**2 == b``.
* Omega_2: fields with prescribed modulus, ``|x| == chi``.
* Omega_3: members of Omega_2 whose phase has at most ``s`` nonzeros.

Phases of zero-modulus entries are taken as 0, so every projector is
single-valued and deterministic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from sparsephase.grid import (
    SupportSet,
    as_complex_field,
    as_real_field,
    check_same_shape,
    frobenius_norm,
    principal_arg,
    unit_phasor,
)
from sparsephase.transform import DiversityOperator, dft2, idft2

OMEGA2_RTOL = 1e-9
MAX_ENUMERATED_SUBSETS = 10**6


@dataclass(frozen=True)
class ProblemInstance:
    """Data for one sparse phase retrieval problem.

    Parameters
    ----------
    b : ndarray
        Measured (possibly noisy) intensity image, nonnegative.
    chi : ndarray
        Pupil amplitude, nonnegative and constant on its support.
    diversity : ndarray
        Known diversity phase added in the pupil before measurement.
    s : int
        Upper bound on the number of nonzero phase entries.
    support : SupportSet, optional
        Indices where ``chi > 0``. Derived from ``chi`` when omitted.
    """

    b: np.ndarray
    chi: np.ndarray
    diversity: np.ndarray
    s: int
    support: SupportSet | None = field(default=None)

    def __post_init__(self):
        b = as_real_field(self.b, "b")
        chi = as_real_field(self.chi, "chi")
        diversity = as_real_field(self.diversity, "diversity")
        check_same_shape(b, chi, diversity)
        if np.any(b < 0):
            raise ValueError("measured intensity b must be nonnegative")
        if np.any(chi < 0):
            raise ValueError("amplitude chi must be nonnegative")
        derived = SupportSet.from_mask(chi > 0)
        if self.support is not None and self.support != derived:
            raise ValueError("support must equal the set of indices where chi > 0")
        on_support = chi.ravel()[derived.flat]
        if on_support.size and np.any(on_support != on_support[0]):
            raise ValueError("chi must be uniform on its support")
        s = int(self.s)
        if not 0 <= s <= len(derived):
            raise ValueError(f"sparsity parameter s={s} outside [0, {len(derived)}]")
        for name, arr in (("b", b), ("chi", chi), ("diversity", diversity)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "support", derived)

    @property
    def n(self) -> int:
        return self.b.shape[0]

    @cached_property
    def sqrt_b(self) -> np.ndarray:
        return np.sqrt(self.b)

    @cached_property
    def diversity_operator(self) -> DiversityOperator:
        return DiversityOperator(self.diversity)

    @property
    def chi_level(self) -> float:
        """The constant value of chi on the support (0 for an empty support)."""
        return float(self.chi.ravel()[self.support.flat[0]]) if len(self.support) else 0.0

    def with_s(self, s: int) -> ProblemInstance:
        return ProblemInstance(self.b, self.chi, self.diversity, s)


def project_modulus(Y, b) -> np.ndarray:
    """Nearest point with ``|out|**2 == b``: ``sqrt(b) * Y/|Y|`` (phase 0 where Y is 0)."""
    b = np.asarray(b, dtype=np.float64)
    check_same_shape(Y, b)
    if np.any(b < 0):
        raise ValueError("intensity must be nonnegative")
    return np.sqrt(b) * unit_phasor(Y)


def project_fourier_magnitude(x, inst: ProblemInstance) -> np.ndarray:
    check_same_shape(x, inst.b)
    d = inst.diversity_operator
    X = dft2(d.apply(x))
    Y = inst.sqrt_b * unit_phasor(X)
    return d.apply_inverse(idft2(Y))


def project_amplitude(y, chi) -> np.ndarray:
    """``chi * exp(j*arg(y))`` with arg(0) = 0."""
    check_same_shape(y, chi)
    return np.asarray(chi, dtype=np.float64) * np.exp(1j * principal_arg(y))


def select_support(phi, s: int, domain: SupportSet) -> SupportSet:
    """The ``s`` indices of ``domain`` with largest ``|phi|``.

    Ties are broken in favour of the smaller row-major index, so the
    result is one deterministic member of the set of admissible supports.
    """
    s = int(s)
    if not 0 <= s <= len(domain):
        raise ValueError(f"cannot select {s} indices from a domain of size {len(domain)}")
    mags = np.abs(np.asarray(phi, dtype=np.float64).ravel()[domain.flat])
    # stable sort on -|phi| keeps row-major order within ties
    order = np.argsort(-mags, kind="stable")[:s]
    return SupportSet(domain.n, np.sort(domain.flat[order]))


def truncate_phase(phi, s: int, domain: SupportSet) -> np.ndarray:
    """Keep ``phi`` on its top-``s`` support within ``domain``, zero elsewhere."""
    phi = np.asarray(phi, dtype=np.float64)
    keep = select_support(phi, s, domain).flat
    out = np.zeros(phi.size)
    out[keep] = phi.ravel()[keep]
    return out.reshape(phi.shape)


def _check_in_omega2(z, chi, rtol=OMEGA2_RTOL):
    scale = float(np.max(chi)) if np.size(chi) and np.max(chi) > 0 else 1.0
    gap = float(np.max(np.abs(np.abs(z) - chi)))
    if gap > rtol * scale:
        raise ValueError(f"input is not in the amplitude set (max modulus error {gap:.3e})")


def project_sparse_phase(z, inst: ProblemInstance) -> np.ndarray:
    """Projection onto sparse-phase fields for ``z`` with ``|z| == chi``.

    Keeps the phase of ``z`` on the ``s`` support indices where it is
    largest in magnitude and zeroes it elsewhere. Requires ``chi``
    uniform on its support.
    """
    z = np.asarray(z, dtype=np.complex128)
    check_same_shape(z, inst.chi)
    _check_in_omega2(z, inst.chi)
    phi = truncate_phase(principal_arg(z), inst.s, inst.support)
    return inst.chi * np.exp(1j * phi)


def brute_force_sparse_phase_projection(
    z, inst: ProblemInstance, *, atol=1e-12, max_subsets=MAX_ENUMERATED_SUBSETS
) -> list[np.ndarray]:
    """All nearest points of the sparse-phase set, by exhaustive enumeration.

    For every ``s``-subset ``J`` of the support the closest field whose
    phase vanishes off ``J`` keeps the phase of ``z`` on ``J``; the
    candidates whose distance to ``z`` is within ``atol`` of the minimum
    are returned, deduplicated. Intended as a test oracle on small grids.
    """
    z = as_complex_field(z, "z")
    check_same_shape(z, inst.chi)
    _check_in_omega2(z, inst.chi)
    support = inst.support.flat
    s = inst.s
    count = math.comb(len(support), s)
    if count > max_subsets:
        raise ValueError(f"{count} candidate supports exceed the enumeration limit {max_subsets}")

    phase = np.angle(z).ravel()
    subsets = np.array(list(itertools.combinations(range(len(support)), s)), dtype=np.int64)
    subsets = subsets.reshape(count, s)
    phases = np.zeros((count, z.size))
    if s:
        cols = support[subsets]
        rows = np.repeat(np.arange(count), s)
        phases[rows, cols.ravel()] = phase[cols.ravel()]
    candidates = inst.chi.ravel()[None, :] * np.exp(1j * phases)
    dist = np.linalg.norm(candidates - z.ravel()[None, :], axis=1)
    best = dist.min()

    out = []
    seen = set()
    for i in np.flatnonzero(dist <= best + atol):
        key = candidates[i].tobytes()
        if key in seen:
            continue
        seen.add(key)
        out.append(candidates[i].reshape(z.shape))
    return out


def distance_to_set(x, which: int, inst: ProblemInstance) -> float:
    """Frobenius distance from ``x`` to its computed projection on Omega_1/2/3.

    For Omega_3 the point is first projected onto Omega_2, which makes the
    value an upper bound in general and exact when ``x`` already has
    modulus ``chi``.
    """
    x = np.asarray(x, dtype=np.complex128)
    if which == 1:
        p = project_fourier_magnitude(x, inst)
    elif which == 2:
        p = project_amplitude(x, inst.chi)
    elif which == 3:
        p = project_sparse_phase(project_amplitude(x, inst.chi), inst)
    else:
        raise ValueError(f"unknown constraint set {which!r}; expected 1, 2 or 3")
    return frobenius_norm(x - p)
