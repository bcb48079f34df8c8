"""Griffin-Lim (GLA) and RAAR phase estimation from an amplitude spectrogram."""
from dataclasses import dataclass, field

import numpy as np

from .spectral import StftConfig, istft, principal_phase, stft

EPS = 1e-12


@dataclass(frozen=True)
class IterativeConfig:
    iterations: int = 100
    beta: float = 0.9
    stft: StftConfig = field(default_factory=StftConfig)

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")


def _check_amplitude(amplitude, shape=None):
    amplitude = np.asarray(amplitude, dtype=np.float64)
    if amplitude.ndim != 2:
        raise ValueError(f"amplitude must be 2-D (frames, bins), got {amplitude.shape}")
    if shape is not None and amplitude.shape != shape:
        raise ValueError(f"shape mismatch: {amplitude.shape} vs {shape}")
    if np.any(amplitude < 0):
        raise ValueError("amplitude must be non-negative")
    return amplitude


def project_consistency(spec, cfg=StftConfig()):
    """``stft(istft(spec))``: nearest spectrogram of an actual signal."""
    spec = np.asarray(spec)
    if spec.ndim != 2 or spec.shape[1] != cfg.n_bins:
        raise ValueError(f"spectrogram shape {spec.shape} does not match {cfg.n_bins} bins")
    if spec.shape[0] < 2:
        # a single frame synthesises zero samples; its projection is zero
        return np.zeros_like(spec)
    return stft(istft(spec, cfg), cfg)


def project_amplitude(spec, amplitude):
    """Impose ``amplitude`` while keeping the phase of ``spec``.

    Entries of ``spec`` with magnitude below 1e-12 take phase 0.
    """
    spec = np.asarray(spec, dtype=np.complex128)
    amplitude = _check_amplitude(amplitude, spec.shape)
    mag = np.abs(spec)
    small = mag < EPS
    unit = np.where(small, 1.0 + 0j, spec / np.where(small, 1.0, mag))
    return amplitude * unit


def inconsistency(spec, cfg=StftConfig()):
    """Relative Frobenius distance ``|s - P_C(s)| / |s|``."""
    spec = np.asarray(spec)
    norm = np.linalg.norm(spec)
    if norm == 0:
        raise ValueError("inconsistency undefined for an all-zero spectrogram")
    return float(np.linalg.norm(spec - project_consistency(spec, cfg)) / norm)


def _initial(amplitude, init_phase):
    if init_phase is None:
        return amplitude.astype(np.complex128)
    return amplitude * np.exp(1j * np.asarray(init_phase, dtype=np.float64))


def _phase(spec):
    return principal_phase(spec.real, spec.imag)


def gla(amplitude, cfg=IterativeConfig(), init_phase=None, callback=None):
    """Griffin-Lim: alternate amplitude and consistency projections.

    Starts from zero phase unless ``init_phase`` is given.  ``callback`` is
    called as ``callback(i, spec)`` after every iteration.
    """
    amplitude = _check_amplitude(amplitude)
    spec = _initial(amplitude, init_phase)
    for i in range(cfg.iterations):
        spec = project_consistency(project_amplitude(spec, amplitude), cfg.stft)
        if callback is not None:
            callback(i + 1, spec)
    return _phase(spec)


def raar_step(spec, amplitude, beta, stft_cfg, literal=False):
    """One relaxed averaged alternating reflections update.

    ``literal=True`` omits the ``beta/2`` factor on the reflection term,
    which no longer leaves a consistent amplitude-matching point fixed.
    """
    p_a = project_amplitude(spec, amplitude)
    r_a = 2.0 * p_a - spec
    r_c = 2.0 * project_consistency(r_a, stft_cfg) - r_a
    if literal:
        return 0.5 * beta * spec + r_c + (1.0 - beta) * p_a
    return 0.5 * beta * (spec + r_c) + (1.0 - beta) * p_a


def raar(amplitude, cfg=IterativeConfig(), init_phase=None, literal=False, callback=None):
    """Relaxed averaged alternating reflections, zero-phase start.

    The phase is read after a terminal amplitude projection.
    """
    amplitude = _check_amplitude(amplitude)
    spec = _initial(amplitude, init_phase)
    for i in range(cfg.iterations):
        spec = raar_step(spec, amplitude, cfg.beta, cfg.stft, literal=literal)
        if callback is not None:
            callback(i + 1, spec)
    return _phase(project_amplitude(spec, amplitude))
