"""Synthetic sparse-phase PSF instances: aperture, defocus diversity, noise."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from sparsephase.constraints import ProblemInstance
from sparsephase.grid import SupportSet
from sparsephase.transform import dft2


def _radius_grid(n):
    # pixel centers at (r + 0.5, c + 0.5), disk center at (n/2, n/2)
    r = np.arange(n) + 0.5 - n / 2
    return np.hypot(r[:, None], r[None, :])


def circular_aperture(n: int, diameter: float) -> np.ndarray:
    """Binary disk of the given diameter (pixels) centered on the grid."""
    if not 0 < diameter <= n:
        raise ValueError(f"aperture diameter must lie in (0, {n}], got {diameter}")
    return (_radius_grid(n) <= diameter / 2).astype(np.float64)


def aperture_support(n: int, diameter: float) -> SupportSet:
    return SupportSet.from_mask(circular_aperture(n, diameter) > 0)


def zernike_defocus(n: int, diameter: float) -> np.ndarray:
    """Defocus term ``2*rho**2 - 1`` inside the aperture, 0 outside.

    ``rho`` is the pixel-center distance normalized by the aperture radius.
    """
    ap = circular_aperture(n, diameter)
    rho = _radius_grid(n) / (diameter / 2)
    return np.where(ap > 0, 2 * rho**2 - 1, 0.0)


def random_sparse_phase(support: SupportSet, sparsity: int, phase_range=(-np.pi, np.pi), seed=None) -> np.ndarray:
    """Phase with exactly ``sparsity`` nonzero entries drawn uniformly on ``support``.

    The nonzero positions are a uniform random subset of ``support``; the
    values are i.i.d. uniform on ``phase_range`` with exact zeros redrawn.
    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    """
    sparsity = int(sparsity)
    if not 0 <= sparsity <= len(support):
        raise ValueError(f"sparsity {sparsity} exceeds support size {len(support)}")
    rng = np.random.default_rng(seed)
    lo, hi = phase_range
    idx = rng.choice(support.flat, size=sparsity, replace=False)
    values = rng.uniform(lo, hi, size=sparsity)
    while np.any(values == 0):
        zero = values == 0
        values[zero] = rng.uniform(lo, hi, size=int(zero.sum()))
    phase = np.zeros(support.n * support.n)
    phase[idx] = values
    return phase.reshape(support.n, support.n)


def poisson_noise(b, photon_budget: float, seed=None) -> np.ndarray:
    """Photon-counting noise on ``b`` scaled to ``photon_budget`` expected photons.

    Each pixel becomes ``Poisson(lam * b) / lam`` with ``lam = photon_budget / sum(b)``,
    so the noisy image is unbiased and keeps the scale of ``b``.
    """
    b = np.asarray(b, dtype=np.float64)
    if np.any(b < 0):
        raise ValueError("intensity must be nonnegative")
    if not photon_budget > 0:
        raise ValueError("photon budget must be positive")
    total = b.sum()
    if total <= 0:
        raise ValueError("cannot apply photon noise to an all-zero image")
    lam = photon_budget / total
    rng = np.random.default_rng(seed)
    return rng.poisson(lam * b).astype(np.float64) / lam


@dataclass(frozen=True)
class SimulationSpec:
    """Parameters of one synthetic instance. Defaults reproduce the 128 x 128 setup."""

    n: int = 128
    aperture_diameter: float = 64
    diversity_coefficient: float = 4.0
    sparsity_level: int = 319
    phase_range: tuple = (-np.pi, np.pi)
    photon_budget: float | None = None
    seed: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("grid side must be positive")
        if not 0 < self.aperture_diameter <= self.n:
            raise ValueError("aperture diameter must lie in (0, n]")
        if self.photon_budget is not None and not self.photon_budget > 0:
            raise ValueError("photon budget must be positive or None")
        if self.sparsity_level > len(aperture_support(self.n, self.aperture_diameter)):
            raise ValueError("sparsity level exceeds the aperture pixel count")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["phase_range"] = list(self.phase_range)
        return d


def synthesize_psf(phase, spec: SimulationSpec) -> np.ndarray:
    """Noise-free intensity ``|dft2(ap * exp(j(phase + diversity)))|**2``."""
    ap = circular_aperture(spec.n, spec.aperture_diameter)
    div = spec.diversity_coefficient * zernike_defocus(spec.n, spec.aperture_diameter)
    return np.abs(dft2(ap * np.exp(1j * (np.asarray(phase) + div)))) ** 2


@dataclass(frozen=True)
class SimulatedInstance:
    spec: SimulationSpec
    aperture: np.ndarray
    diversity: np.ndarray
    truth: np.ndarray
    b_clean: np.ndarray
    b_noisy: np.ndarray | None

    @property
    def support(self) -> SupportSet:
        return SupportSet.from_mask(self.aperture > 0)

    @property
    def b(self) -> np.ndarray:
        """The image a solver should see: noisy when a photon budget is set."""
        return self.b_noisy if self.b_noisy is not None else self.b_clean

    def problem(self, s: int, noisy: bool | None = None) -> ProblemInstance:
        b = self.b if noisy is None else (self.b_noisy if noisy else self.b_clean)
        if b is None:
            raise ValueError("instance has no noisy image")
        return ProblemInstance(b=b, chi=self.aperture, diversity=self.diversity, s=s)


def simulate_instance(spec: SimulationSpec) -> SimulatedInstance:
    """Build a full instance; every random draw derives from ``spec.seed``."""
    phase_seed, noise_seed = np.random.SeedSequence(spec.seed).spawn(2)
    ap = circular_aperture(spec.n, spec.aperture_diameter)
    support = SupportSet.from_mask(ap > 0)
    diversity = spec.diversity_coefficient * zernike_defocus(spec.n, spec.aperture_diameter)
    truth = random_sparse_phase(support, spec.sparsity_level, spec.phase_range, phase_seed)
    b = synthesize_psf(truth, spec)
    noisy = None
    if spec.photon_budget is not None:
        noisy = poisson_noise(b, spec.photon_budget, noise_seed)
    return SimulatedInstance(spec, ap, diversity, truth, b, noisy)
