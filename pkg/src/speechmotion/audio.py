"""Audio features: MFCC extraction, timeline alignment, standardization.

The rhythm branch consumes one feature row per motion frame, so the pipeline
here is: resample to the configured rate, frame with a Hann window, mel
filterbank on the power spectrum, log with an absolute floor, orthonormal
DCT, optional delta coefficients, then nearest-timestamp selection onto the
motion frame grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd

import numpy as np
from scipy.fft import dct
from scipy.signal import resample_poly

from .errors import DataError

# Absolute floor applied to mel-band power before the log. Silence therefore
# maps to log(POWER_FLOOR) in every band, and after the orthonormal DCT only
# coefficient 0 is nonzero: sqrt(n_mels) * log(POWER_FLOOR).
POWER_FLOOR = 1e-10


@dataclass(frozen=True)
class MfccSettings:
    """Knobs of the MFCC front end; d_s is the resulting row width."""

    sample_rate: int = 16000
    window_s: float = 0.025
    hop_s: float = 0.010
    n_mels: int = 40
    n_mfcc: int = 13
    deltas: bool = True

    def __post_init__(self) -> None:
        if self.sample_rate <= 0 or self.window_s <= 0 or self.hop_s <= 0:
            raise ValueError("sample rate, window, and hop must be positive")
        if self.n_mfcc > self.n_mels:
            raise ValueError("cannot keep more DCT coefficients than mel bands")

    @property
    def d_s(self) -> int:
        return self.n_mfcc * (2 if self.deltas else 1)

    @property
    def window_samples(self) -> int:
        return int(round(self.window_s * self.sample_rate))

    @property
    def hop_samples(self) -> int:
        return int(round(self.hop_s * self.sample_rate))


@dataclass(frozen=True)
class AudioClip:
    """Feature rows aligned to one motion clip: (T, D_S) float64."""

    features: np.ndarray
    sample_rate: int = 16000

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=np.float64).copy()
        if features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {features.shape}")
        if not np.all(np.isfinite(features)):
            raise DataError("audio features contain non-finite values")
        if self.sample_rate <= 0:
            raise ValueError("sample rate must be positive")
        features.flags.writeable = False
        object.__setattr__(self, "features", features)

    @property
    def t(self) -> int:
        return self.features.shape[0]

    @property
    def d_s(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class Transcript:
    """Word timeline: (word, start_s, end_s) tuples with non-decreasing starts."""

    tokens: tuple[tuple[str, float, float], ...]

    def __post_init__(self) -> None:
        last_start = -np.inf
        for word, start, end in self.tokens:
            if not word:
                raise DataError("transcript contains an empty word")
            if not (np.isfinite(start) and np.isfinite(end)) or start < 0 or end < start:
                raise DataError(f"bad token timing for {word!r}: [{start}, {end}]")
            if start < last_start:
                raise DataError("transcript tokens are not sorted by start time")
            last_start = start

    def words_between(self, start_s: float, end_s: float) -> list[str]:
        """Words whose start time falls inside [start_s, end_s)."""
        return [w for w, s, _ in self.tokens if start_s <= s < end_s]


def mel_filterbank(settings: MfccSettings) -> np.ndarray:
    """Triangular mel filters, (n_mels, n_fft_bins) for the configured window."""
    n_fft = settings.window_samples
    n_bins = n_fft // 2 + 1
    f_max = settings.sample_rate / 2.0

    def to_mel(f):
        return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)

    def from_mel(m):
        return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)

    edges_hz = from_mel(np.linspace(to_mel(0.0), to_mel(f_max), settings.n_mels + 2))
    bin_hz = np.arange(n_bins) * settings.sample_rate / n_fft
    bank = np.zeros((settings.n_mels, n_bins))
    for m in range(settings.n_mels):
        lo, mid, hi = edges_hz[m : m + 3]
        up = (bin_hz - lo) / (mid - lo)
        down = (hi - bin_hz) / (hi - mid)
        bank[m] = np.maximum(0.0, np.minimum(up, down))
    return bank


def _deltas(coeffs: np.ndarray, reach: int = 2) -> np.ndarray:
    # Regression slope over +/- reach frames with clamped edges.
    padded = np.pad(coeffs, ((reach, reach), (0, 0)), mode="edge")
    denom = 2.0 * sum(n * n for n in range(1, reach + 1))
    out = np.zeros_like(coeffs)
    for n in range(1, reach + 1):
        out += n * (padded[reach + n : reach + n + len(coeffs)] - padded[reach - n : reach - n + len(coeffs)])
    return out / denom


def extract_mfcc(waveform, sample_rate_hz: int, settings: MfccSettings = MfccSettings()) -> np.ndarray:
    """Mel-frequency cepstra (plus deltas) for a mono waveform.

    Args:
        waveform: 1-D float array; resampled if sample_rate_hz differs from
            the configured rate.
        sample_rate_hz: rate of `waveform` in Hz.
        settings: front-end configuration.

    Returns:
        (F, settings.d_s) float64 array, one row per analysis frame at the
        configured hop. Deterministic: equal inputs give bit-equal output.

    Raises:
        DataError: waveform shorter than one analysis window, or not 1-D.
    """
    wave = np.asarray(waveform, dtype=np.float64)
    if wave.ndim != 1:
        raise DataError(f"waveform must be mono 1-D, got shape {wave.shape}")
    if not np.all(np.isfinite(wave)):
        raise DataError("waveform contains non-finite values")
    if sample_rate_hz <= 0:
        raise ValueError("sample_rate_hz must be positive")
    if sample_rate_hz != settings.sample_rate:
        g = gcd(settings.sample_rate, int(sample_rate_hz))
        wave = resample_poly(wave, settings.sample_rate // g, int(sample_rate_hz) // g)

    win, hop = settings.window_samples, settings.hop_samples
    if len(wave) < win:
        raise DataError(f"waveform of {len(wave)} samples is shorter than one window ({win})")
    n_frames = 1 + (len(wave) - win) // hop
    idx = np.arange(win)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = wave[idx] * np.hanning(win)

    power = np.abs(np.fft.rfft(frames, axis=1)) ** 2
    mel_power = power @ mel_filterbank(settings).T
    log_mel = np.log(np.maximum(mel_power, POWER_FLOOR))
    cepstra = dct(log_mel, type=2, norm="ortho", axis=1)[:, : settings.n_mfcc]
    if settings.deltas:
        cepstra = np.concatenate([cepstra, _deltas(cepstra)], axis=1)
    return cepstra


def align_audio_to_motion(
    features: np.ndarray,
    audio_hop_s: float,
    motion_fps: float,
    n_motion_frames: int,
) -> np.ndarray:
    """Select one feature row per motion frame by nearest timestamp.

    Audio frame f sits at f * audio_hop_s, motion frame t at t / motion_fps.
    The audio timeline must cover the motion timeline to within one hop.

    Raises:
        DataError: audio too short to cover the motion frames.
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2:
        raise ValueError(f"features must be 2-D, got shape {feats.shape}")
    if audio_hop_s <= 0 or motion_fps <= 0 or n_motion_frames <= 0:
        raise ValueError("hop, fps, and frame count must be positive")
    n_audio = feats.shape[0]
    last_motion_s = (n_motion_frames - 1) / motion_fps
    covered_s = (n_audio - 1) * audio_hop_s + audio_hop_s
    if last_motion_s > covered_s:
        raise DataError(
            f"audio covers {covered_s:.3f}s but motion runs to {last_motion_s:.3f}s"
        )
    times = np.arange(n_motion_frames) / motion_fps
    idx = np.clip(np.rint(times / audio_hop_s).astype(int), 0, n_audio - 1)
    return feats[idx]


@dataclass(frozen=True)
class FeatureStats:
    """Per-speaker standardization statistics fit on the training split.

    Coefficients with (near-)zero variance are centered but not rescaled.
    `speakers` indexes the rows of `means`/`stds`; the pooled row serves
    speakers unseen at fit time.
    """

    speakers: tuple[str, ...]
    means: np.ndarray
    stds: np.ndarray
    pooled_mean: np.ndarray
    pooled_std: np.ndarray

    _STD_FLOOR = 1e-6

    @classmethod
    def fit(cls, frames_by_speaker: dict[str, np.ndarray]) -> "FeatureStats":
        if not frames_by_speaker:
            raise DataError("cannot fit feature statistics on an empty split")
        speakers = tuple(sorted(frames_by_speaker))
        means = np.stack([frames_by_speaker[s].mean(axis=0) for s in speakers])
        stds = np.stack([frames_by_speaker[s].std(axis=0) for s in speakers])
        pooled = np.concatenate([frames_by_speaker[s] for s in speakers], axis=0)
        return cls(speakers, means, stds, pooled.mean(axis=0), pooled.std(axis=0))

    def _row(self, speaker: str | None) -> tuple[np.ndarray, np.ndarray]:
        if speaker is not None and speaker in self.speakers:
            i = self.speakers.index(speaker)
            return self.means[i], self.stds[i]
        return self.pooled_mean, self.pooled_std

    def transform(self, features: np.ndarray, speaker: str | None = None) -> np.ndarray:
        mean, std = self._row(speaker)
        scale = np.where(std < self._STD_FLOOR, 1.0, std)
        return (np.asarray(features, dtype=np.float64) - mean) / scale
