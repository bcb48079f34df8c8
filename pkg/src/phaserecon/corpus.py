"""Deterministic speech-like test material.

Voiced segments are additive harmonic syntheses of a pulse-like glottal
source with a -12 dB/octave tilt, filtered by time-varying formant
resonances (magnitude and phase); unvoiced
segments are band-passed noise bursts.  Each utterance is a sequence of
syllables separated by short pauses, with a declining F0 contour,
vibrato and jitter.  Everything is a pure function of the seed.
"""
import numpy as np
from scipy import signal

SAMPLE_RATE = 16000

# (F1, F2, F3) in Hz
VOWELS = {
    "a": (730, 1090, 2440),
    "i": (270, 2290, 3010),
    "u": (300, 870, 2240),
    "e": (530, 1840, 2480),
    "o": (570, 840, 2410),
    "ae": (660, 1720, 2410),
}
BANDWIDTHS = (80.0, 100.0, 150.0)
EXTRA_FORMANTS = ((3500.0, 250.0), (4500.0, 300.0))


def _resonance(freq, centre, bw):
    # complex response of a second-order all-pole resonance, unit DC gain
    pole = -np.pi * bw + 2j * np.pi * centre
    s = 2j * np.pi * freq
    return pole * np.conj(pole) / ((s - pole) * (s - np.conj(pole)))


def _glottal(freq, corner):
    # two real poles: -12 dB/octave above the corner frequency
    return 1.0 / (1.0 + 1j * freq / corner) ** 2


def _voiced(n, f0_track, formant_track, sr, rng):
    phase0 = 2 * np.pi * np.cumsum(f0_track) / sr
    out = np.zeros(n)
    n_harm = int(sr / 2 / f0_track.min())
    corner = rng.uniform(80.0, 200.0)
    for h in range(1, n_harm + 1):
        fh = h * f0_track
        alive = fh < sr / 2 - 200
        if not alive.any():
            break
        gain = _glottal(fh, corner)
        for fc, bw in zip(formant_track.T, BANDWIDTHS):
            gain = gain * _resonance(fh, fc, bw)
        for fc, bw in EXTRA_FORMANTS:
            gain = gain * _resonance(fh, fc, bw)
        out += np.where(alive, np.real(gain * np.exp(1j * h * phase0)), 0.0)
    return out


def _unvoiced(n, sr, rng):
    lo = rng.uniform(1500, 3500)
    hi = min(lo + rng.uniform(1500, 3500), sr / 2 - 500)
    sos = signal.butter(4, [lo, hi], btype="bandpass", fs=sr, output="sos")
    return signal.sosfilt(sos, rng.standard_normal(n))


def _envelope(n, sr, attack_ms=15.0):
    env = np.ones(n)
    a = min(n // 2, int(attack_ms * sr / 1000))
    if a:
        ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(a) / a)
        env[:a] = ramp
        env[-a:] = ramp[::-1]
    return env


def synth_utterance(seed, duration=2.0, sr=SAMPLE_RATE, f0_mean=None):
    """One speech-like utterance, peak-normalised to 0.5."""
    rng = np.random.default_rng(seed)
    if f0_mean is None:
        f0_mean = rng.choice([rng.uniform(95, 140), rng.uniform(180, 250)])
    n_total = int(duration * sr)
    out = np.zeros(n_total)
    pos = int(rng.uniform(0.03, 0.08) * sr)
    names = list(VOWELS)
    while pos < n_total - int(0.1 * sr):
        if rng.random() < 0.35:
            n = int(rng.uniform(0.05, 0.12) * sr)
            n = min(n, n_total - pos)
            burst = _unvoiced(n, sr, rng) * _envelope(n, sr, 8.0)
            out[pos : pos + n] += 0.08 * burst / (np.std(burst) + 1e-12)
            pos += n
        n = min(int(rng.uniform(0.12, 0.3) * sr), n_total - pos)
        if n < int(0.04 * sr):
            break
        t = np.arange(n) / sr
        start_f0 = f0_mean * rng.uniform(0.9, 1.15)
        end_f0 = start_f0 * rng.uniform(0.8, 1.05)
        vib = 1.0 + 0.01 * np.sin(2 * np.pi * rng.uniform(4, 6) * t)
        jitter = 1.0 + 0.003 * rng.standard_normal(n).cumsum() / np.sqrt(n)
        f0 = np.linspace(start_f0, end_f0, n) * vib * jitter
        v0, v1 = (np.array(VOWELS[names[i]], dtype=float) for i in rng.integers(len(names), size=2))
        mix = np.linspace(0.0, 1.0, n)[:, None]
        formants = (1 - mix) * v0 + mix * v1
        seg = _voiced(n, f0, formants, sr, rng) * _envelope(n, sr)
        seg += 0.01 * rng.standard_normal(n) * _envelope(n, sr)
        out[pos : pos + n] += rng.uniform(0.5, 1.0) * seg / (np.max(np.abs(seg)) + 1e-12)
        pos += n + int(rng.uniform(0.0, 0.08) * sr)
    out += 1e-4 * rng.standard_normal(n_total)
    return 0.5 * out / np.max(np.abs(out))


def synth_corpus(n_utterances, seed=0, duration=2.0, sr=SAMPLE_RATE):
    """List of ``n_utterances`` waveforms with independent seeds."""
    return [synth_utterance(seed * 100003 + i, duration, sr) for i in range(n_utterances)]


def mini_test_set():
    """The bundled 10-clip evaluation set as ``(name, waveform)`` pairs."""
    from importlib import resources

    from .wavio import read_wav

    root = resources.files("phaserecon") / "data" / "mini"
    clips = []
    for path in sorted(p for p in root.iterdir() if p.name.endswith(".wav")):
        with resources.as_file(path) as real:
            wav, _ = read_wav(real)
        clips.append((path.name, wav))
    return clips
