"""Dataset assembly and joint training of the two branches.

The combined objective per batch is

    lambda_rec * rec + lambda_vae * vae + lambda_rhythm * rhythm + lambda_reg * reg

where rec is the mean-absolute error of the composed clip (pose-mode output
plus rhythm offsets) against the current clip, vae is the mode-gated latent
regularizer, rhythm is the offset regression error, and reg is the
autoencoding error of both clips. Setting a weight to zero removes the term
entirely: it is neither computed nor differentiated. Batches are partitioned
by mode label so each sample contributes exactly one latent term.
"""

from __future__ import annotations

import copy
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import nn
from .audio import AudioClip, FeatureStats, align_audio_to_motion, extract_mfcc
from .config import RunConfig
from .data import Checkpoint, DatasetSplit, TrainingSample
from .errors import DataError, NumericError
from .io import load_landmarks, load_waveform
from .metrics import lvd
from .model import build_branches
from .motion import chunk_sequence, label_mode_change, normalize_skeleton
from .posemode import PoseModeBranch
from .rhythm import RhythmBranch


@dataclass(frozen=True)
class LossWeights:
    """Non-negative weights of the four loss terms."""

    rec: float = 1.0
    vae: float = 0.01
    rhythm: float = 1.0
    reg: float = 1.0

    def __post_init__(self) -> None:
        for name in ("rec", "vae", "rhythm", "reg"):
            if getattr(self, name) < 0:
                raise ValueError(f"loss weight {name} must be non-negative")

    @classmethod
    def from_config(cls, config: RunConfig) -> "LossWeights":
        t = config.train
        return cls(rec=t.lambda_rec, vae=t.lambda_vae, rhythm=t.lambda_rhythm, reg=t.lambda_reg)


# -- dataset -----------------------------------------------------------------


def _pair_by_stem(landmark_files, audio_files) -> tuple[list[tuple[Path, Path]], list[str]]:
    audio_by_stem = {Path(p).stem: Path(p) for p in audio_files}
    pairs, errors = [], []
    seen = set()
    for lm in sorted(Path(p) for p in landmark_files):
        stem = lm.stem
        seen.add(stem)
        if stem not in audio_by_stem:
            errors.append(f"{lm}: no audio file with stem {stem!r}")
            continue
        pairs.append((lm, audio_by_stem[stem]))
    for stem, path in sorted(audio_by_stem.items()):
        if stem not in seen:
            errors.append(f"{path}: no landmark file with stem {stem!r}")
    return pairs, errors


def _segment_samples(lm_path: Path, audio_path: Path, config: RunConfig) -> list[TrainingSample]:
    frames, fps, spec, meta = load_landmarks(lm_path)
    if spec.names != tuple(config.joint_names):
        raise DataError(f"{lm_path}: joint names do not match the configured skeleton")
    if abs(fps - config.fps) > 1e-9:
        raise DataError(f"{lm_path}: fps {fps} does not match configured {config.fps}")
    normalized = normalize_skeleton(frames, spec)

    wave, rate = load_waveform(audio_path)
    feats = extract_mfcc(wave, rate, config.mfcc)
    aligned = align_audio_to_motion(feats, config.mfcc.hop_s, config.fps, len(normalized))

    clips = chunk_sequence(normalized, config.t_frames, fps=config.fps, joint_spec=spec)
    if len(clips) < 2:
        raise DataError(f"{lm_path}: segment too short for a clip pair")
    speaker = str(meta.get("speaker", lm_path.stem.split("_")[0]))
    segment = str(meta.get("segment", lm_path.stem))

    samples = []
    t = config.t_frames
    for i in range(1, len(clips)):
        feats_i = aligned[i * t : (i + 1) * t]
        samples.append(
            TrainingSample(
                m_prev=clips[i - 1],
                m_cur=clips[i],
                s_cur=AudioClip(feats_i, sample_rate=config.mfcc.sample_rate),
                c=label_mode_change(clips[i - 1], clips[i], config.mode_threshold),
                speaker_id=speaker,
                segment_id=segment,
            )
        )
    return samples


def build_dataset(
    landmark_files,
    audio_files,
    config: RunConfig,
) -> tuple[DatasetSplit, list[str]]:
    """Pair files by stem, preprocess each segment, split by segment.

    Returns the split plus a list of per-file error strings for inputs that
    were skipped. Raises DataError when nothing usable remains.
    """
    pairs, errors = _pair_by_stem(landmark_files, audio_files)
    by_segment: dict[str, list[TrainingSample]] = {}
    for lm_path, audio_path in pairs:
        try:
            samples = _segment_samples(lm_path, audio_path, config)
        except DataError as exc:
            errors.append(str(exc))
            continue
        by_segment.setdefault(samples[0].segment_id, []).extend(samples)
    if not by_segment:
        raise DataError(
            "no usable segments; " + (errors[0] if errors else "no input files given")
        )

    segments = sorted(by_segment)
    order = np.random.default_rng(config.train.seed).permutation(len(segments))
    n = len(segments)
    # floor proportions, but never starve the training split
    n_train = max(1, int(n * config.train.split_train))
    n_val = min(int(n * config.train.split_val), n - n_train)
    shuffled = [segments[i] for i in order]
    groups = {
        "train": shuffled[:n_train],
        "val": shuffled[n_train : n_train + n_val],
        "test": shuffled[n_train + n_val :],
    }

    def collect(names):
        out = []
        for seg in sorted(names):
            out.extend(by_segment[seg])
        return tuple(out)

    train = collect(groups["train"])
    if not train:
        raise DataError(f"empty training split from {n} segment(s)")
    frames_by_speaker: dict[str, list[np.ndarray]] = {}
    for sample in train:
        frames_by_speaker.setdefault(sample.speaker_id, []).append(sample.s_cur.features)
    stats = FeatureStats.fit(
        {spk: np.concatenate(rows, axis=0) for spk, rows in frames_by_speaker.items()}
    )
    split = DatasetSplit(
        train=train, val=collect(groups["val"]), test=collect(groups["test"]), feature_stats=stats
    )
    return split, errors


# -- batched objective ---------------------------------------------------------


@dataclass
class _Batch:
    x_prev: np.ndarray  # (B, T*D_M)
    x_cur: np.ndarray
    audio: np.ndarray  # (B, T, D_S), standardized
    offsets: np.ndarray  # (B, T*D_M) ground-truth rhythm targets
    labels: np.ndarray  # (B,) int


def _make_batch(samples, stats: FeatureStats | None) -> _Batch:
    b = len(samples)
    t, d = samples[0].m_cur.frames.shape
    x_prev = np.stack([s.m_prev.frames.reshape(-1) for s in samples])
    x_cur = np.stack([s.m_cur.frames.reshape(-1) for s in samples])
    if stats is None:
        audio = np.stack([s.s_cur.features for s in samples])
    else:
        audio = np.stack([stats.transform(s.s_cur.features, s.speaker_id) for s in samples])
    offsets = np.stack(
        [(s.m_cur.frames - s.m_cur.frames.mean(axis=0)).reshape(-1) for s in samples]
    )
    labels = np.array([s.c for s in samples], dtype=np.int64)
    assert x_prev.shape == (b, t * d)
    return _Batch(x_prev, x_cur, audio, offsets, labels)


def _batch_loss(
    pose: PoseModeBranch,
    pose_pv: dict[str, ad.Var],
    rhythm: RhythmBranch,
    rhythm_pv: dict[str, ad.Var],
    batch: _Batch,
    weights: LossWeights,
    rng: np.random.Generator | None,
    vae_scale: float = 1.0,
) -> tuple[ad.Var, dict[str, float]]:
    """Weighted objective over one batch, on the tape.

    Terms with zero weight are skipped outright; the returned breakdown
    reports unweighted per-term values (0.0 for skipped terms).
    """
    b = batch.x_prev.shape[0]
    c0 = np.flatnonzero(batch.labels == 0)
    c1 = np.flatnonzero(batch.labels == 1)
    d_z = pose.config.d_z

    need_embeddings = weights.rec > 0 or weights.vae > 0 or weights.reg > 0
    need_posterior = weights.vae > 0 or (weights.rec > 0 and len(c1) > 0)
    need_rhythm = weights.rec > 0 or weights.rhythm > 0

    terms: dict[str, ad.Var] = {}
    if need_embeddings:
        x_prev = ad.Var(batch.x_prev)
        x_cur = ad.Var(batch.x_cur)
        e_prev = pose.encode_v(pose_pv, x_prev)
        e_cur = pose.encode_v(pose_pv, x_cur)
    if need_posterior:
        mu, logvar = pose.posterior_v(pose_pv, e_cur - e_prev)

    if need_rhythm:
        rhythm_out = rhythm.forward_v(rhythm_pv, ad.Var(batch.audio))
        rhythm_flat = ad.reshape(rhythm_out, (b, -1))

    if weights.vae > 0:
        parts = []
        if len(c1):
            mu1 = ad.take_rows(mu, c1)
            lv1 = ad.take_rows(logvar, c1)
            parts.append(0.5 * ad.sum(mu1 * mu1 + ad.exp(lv1) - 1.0 - lv1))
        if len(c0):
            mu0 = ad.take_rows(mu, c0)
            lv0 = ad.take_rows(logvar, c0)
            parts.append(ad.sum(ad.sqrt(ad.sum(mu0 * mu0, axis=1))))
            parts.append(ad.sum(ad.sqrt(ad.sum(ad.exp(lv0), axis=1))))
        acc = parts[0]
        for p in parts[1:]:
            acc = acc + p
        terms["vae"] = (1.0 / b) * acc

    if weights.rec > 0:
        if len(c1):
            if rng is None:
                raise ValueError("reconstruction with c = 1 samples needs a generator")
            eps = rng.standard_normal((len(c1), d_z))
            mu1r = ad.take_rows(mu, c1)
            lv1r = ad.take_rows(logvar, c1)
            z1 = mu1r + ad.exp(0.5 * lv1r) * ad.Var(eps)
            z_full = ad.scatter_rows(z1, c1, b)
        else:
            z_full = ad.Var(np.zeros((b, d_z)))
        e_star = pose.decode_transition_v(pose_pv, z_full, e_prev)
        pose_flat = pose.decode_v(pose_pv, e_star)
        terms["rec"] = ad.mean(ad.absolute(pose_flat + rhythm_flat - x_cur))

    if weights.rhythm > 0:
        terms["rhythm"] = ad.mean(ad.absolute(rhythm_flat - ad.Var(batch.offsets)))

    if weights.reg > 0:
        rec_cur = pose.decode_v(pose_pv, e_cur)
        rec_prev = pose.decode_v(pose_pv, e_prev)
        terms["reg"] = ad.mean(ad.absolute(rec_cur - x_cur)) + ad.mean(
            ad.absolute(rec_prev - x_prev)
        )

    weight_of = {"rec": weights.rec, "vae": weights.vae * vae_scale, "rhythm": weights.rhythm, "reg": weights.reg}
    total: ad.Var | None = None
    for name, term in terms.items():
        piece = weight_of[name] * term
        total = piece if total is None else total + piece
    if total is None:  # all weights zero: a legal, if pointless, objective
        total = ad.Var(0.0)
    breakdown = {
        name: float(terms[name].data) if name in terms else 0.0
        for name in ("rec", "vae", "rhythm", "reg")
    }
    return total, breakdown


def total_loss(
    sample: TrainingSample,
    pose: PoseModeBranch,
    pose_params: dict[str, np.ndarray],
    rhythm: RhythmBranch,
    rhythm_params: dict[str, np.ndarray],
    weights: LossWeights,
    rng: np.random.Generator | None = None,
    feature_stats: FeatureStats | None = None,
) -> tuple[float, dict[str, float]]:
    """Combined objective of one sample; returns (total, unweighted breakdown).

    The weighted sum of the breakdown equals the total. A generator is only
    consumed when the sample has c = 1 and reconstruction is active.
    """
    batch = _make_batch([sample], feature_stats)
    total, breakdown = _batch_loss(
        pose,
        nn.param_vars(pose_params),
        rhythm,
        nn.param_vars(rhythm_params),
        batch,
        weights,
        rng,
    )
    return float(total.data), breakdown


# -- validation metric -----------------------------------------------------------


def _forward_generate(
    pose: PoseModeBranch,
    pose_params: dict[str, np.ndarray],
    rhythm: RhythmBranch,
    rhythm_params: dict[str, np.ndarray],
    batch: _Batch,
    rng: np.random.Generator,
) -> np.ndarray:
    """Batched one-step generation (composed clips), constants only."""
    b = batch.x_prev.shape[0]
    pose_pv = nn.param_vars(pose_params)
    rhythm_pv = nn.param_vars(rhythm_params)
    e_prev = pose.encode_v(pose_pv, ad.Var(batch.x_prev)).data
    z = np.zeros((b, pose.config.d_z))
    c1 = np.flatnonzero(batch.labels == 1)
    if len(c1):
        z[c1] = rng.standard_normal((len(c1), pose.config.d_z))
    e_star = pose.decode_transition_v(pose_pv, ad.Var(z), ad.Var(e_prev)).data
    pose_flat = pose.decode_v(pose_pv, ad.Var(e_star)).data
    rhythm_out = rhythm.forward_v(rhythm_pv, ad.Var(batch.audio)).data
    return pose_flat + rhythm_out.reshape(b, -1)


def validation_lvd(
    samples,
    pose: PoseModeBranch,
    pose_params: dict[str, np.ndarray],
    rhythm: RhythmBranch,
    rhythm_params: dict[str, np.ndarray],
    stats: FeatureStats | None,
    seed,
) -> float:
    """Mean velocity-difference between one-step generations and ground truth."""
    if not samples:
        return float("nan")
    batch = _make_batch(list(samples), stats)
    t, d = samples[0].m_cur.frames.shape
    composed = _forward_generate(
        pose, pose_params, rhythm, rhythm_params, batch, np.random.default_rng(seed)
    )
    values = [
        lvd(composed[i].reshape(t, d), s.m_cur.frames) for i, s in enumerate(samples)
    ]
    return float(np.mean(values))


# -- training loop ------------------------------------------------------------------


@dataclass
class TrainResult:
    final: Checkpoint
    best: Checkpoint
    history: list[dict]


def train(
    dataset: DatasetSplit,
    config: RunConfig,
    log_path: str | Path | None = None,
    progress: bool = False,
) -> TrainResult:
    """Minibatch Adam over the combined objective.

    Deterministic for a fixed config and dataset: parameter init, batch
    order, latent draws, and validation draws all derive from the config
    seed. Divergence (non-finite loss) raises NumericError with the epoch.
    """
    if not dataset.train:
        raise DataError("training split is empty")
    pose, rhythm = build_branches(config)
    tcfg = config.train
    rng = np.random.default_rng(tcfg.seed)
    pose_params = pose.init_params(rng)
    rhythm_params = rhythm.init_params(rng)
    optimizer = nn.Adam(
        {**{f"pose.{k}": v for k, v in pose_params.items()},
         **{f"rhythm.{k}": v for k, v in rhythm_params.items()}},
        lr=tcfg.lr,
    )
    merged = {**{f"pose.{k}": v for k, v in pose_params.items()},
              **{f"rhythm.{k}": v for k, v in rhythm_params.items()}}

    weights = LossWeights.from_config(config)
    stats = dataset.feature_stats
    n = len(dataset.train)
    batch_size = min(tcfg.batch_size, n)
    steps_per_epoch = (n + batch_size - 1) // batch_size
    total_steps = tcfg.epochs * steps_per_epoch
    warmup = max(1, int(round(tcfg.kl_anneal_frac * total_steps))) if tcfg.kl_anneal else 0

    rest_posture = np.mean(
        [s.m_cur.frames.mean(axis=0) for s in dataset.train], axis=0
    )

    def checkpoint(epoch: int, val: float | None) -> Checkpoint:
        return Checkpoint(
            pose_params=copy.deepcopy(pose_params),
            rhythm_params=copy.deepcopy(rhythm_params),
            config=config,
            feature_stats=stats,
            rest_posture=rest_posture.copy(),
            seed=tcfg.seed,
            epoch=epoch,
            val_lvd=val,
        )

    history: list[dict] = []
    best: Checkpoint | None = None
    log_fh = open(log_path, "w") if log_path is not None else None
    step = 0
    started = time.monotonic()
    try:
        for epoch in range(1, tcfg.epochs + 1):
            order = rng.permutation(n)
            sums = {"total": 0.0, "rec": 0.0, "vae": 0.0, "rhythm": 0.0, "reg": 0.0}
            for start in range(0, n, batch_size):
                idx = order[start : start + batch_size]
                batch = _make_batch([dataset.train[i] for i in idx], stats)
                vae_scale = min(1.0, (step + 1) / warmup) if warmup else 1.0
                pose_pv = nn.param_vars(pose_params)
                rhythm_pv = nn.param_vars(rhythm_params)
                total, breakdown = _batch_loss(
                    pose, pose_pv, rhythm, rhythm_pv, batch, weights, rng, vae_scale
                )
                value = float(total.data)
                if not np.isfinite(value):
                    raise NumericError(
                        f"loss diverged to {value} at epoch {epoch} step {step}"
                    )
                total.backward()
                grads = {
                    **{f"pose.{k}": g for k, g in nn.gradients(pose_pv).items()},
                    **{f"rhythm.{k}": g for k, g in nn.gradients(rhythm_pv).items()},
                }
                optimizer.step(merged, grads)
                step += 1
                frac = len(idx) / n
                sums["total"] += value * frac
                for key in ("rec", "vae", "rhythm", "reg"):
                    sums[key] += breakdown[key] * frac

            val = validation_lvd(
                dataset.val, pose, pose_params, rhythm, rhythm_params, stats,
                seed=[tcfg.seed, 7919, epoch],
            ) if dataset.val else None
            record = {"epoch": epoch, **{k: sums[k] for k in sums}, "val_lvd": val}
            history.append(record)
            if log_fh is not None:
                log_fh.write(json.dumps(record) + "\n")
                log_fh.flush()
            if progress and (epoch == 1 or epoch % 25 == 0 or epoch == tcfg.epochs):
                elapsed = time.monotonic() - started
                print(
                    f"epoch {epoch}/{tcfg.epochs} loss {sums['total']:.5f}"
                    + (f" val_lvd {val:.5f}" if val is not None else "")
                    + f" [{elapsed:.0f}s]"
                )
            if val is not None and (best is None or best.val_lvd is None or val < best.val_lvd):
                best = checkpoint(epoch, val)
    finally:
        if log_fh is not None:
            log_fh.close()

    final = checkpoint(tcfg.epochs, history[-1]["val_lvd"])
    if best is None:
        best = final
    return TrainResult(final=final, best=best, history=history)
