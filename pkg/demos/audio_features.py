"""From a waveform to standardized, motion-aligned speech features."""

import numpy as np

from speechmotion import FeatureStats, MfccSettings, align_audio_to_motion, extract_mfcc

settings = MfccSettings()
sr = settings.sample_rate
t = np.arange(2 * sr) / sr

# two seconds of a 220 Hz tone whose loudness pulses at 2 Hz
wave = np.sin(2 * np.pi * 220.0 * t) * (0.1 + 0.9 * np.sin(np.pi * 2.0 * t) ** 2)
feats = extract_mfcc(wave, sr, settings)
print("mfcc frames:", feats.shape, f"({settings.window_s * 1000:.0f} ms window, "
      f"{settings.hop_s * 1000:.0f} ms hop, 13 cepstra + 13 deltas)")

# the loudness pulse shows up in coefficient 0
c0 = feats[:, 0]
print("coeff 0 range over the pulse:", round(float(c0.min()), 1), "to", round(float(c0.max()), 1))

# silence has a closed form: coeff 0 collapses to the log floor, rest vanish
silent = extract_mfcc(np.zeros(sr), sr, settings)
print("silence coeff 0:", float(silent[0, 0]))
print("silence other coeffs all zero:", bool(np.all(silent[:, 1:] == 0.0)))

# motion runs at 15 fps; each motion frame takes the nearest feature frame
aligned = align_audio_to_motion(feats, settings.hop_s, 15.0, 30)
print("aligned to 30 motion frames:", aligned.shape)

# per-speaker standardization, with a pooled fallback for unseen speakers
stats = FeatureStats.fit({"demo": feats})
z = stats.transform(feats, "demo")
print("standardized column means ~0:", float(np.abs(z.mean(axis=0)).max()) < 1e-9)
print("unseen speaker falls back to pooled stats:",
      np.array_equal(stats.transform(aligned, "nobody"), stats.transform(aligned, None)))
