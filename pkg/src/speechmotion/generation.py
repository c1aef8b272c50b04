"""Sequence generation: mode schedules plus autoregressive clip stacking.

A run of n steps consumes n aligned audio clips and n mode labels. Each step
embeds the previous pose-mode clip, draws (or zeroes) a latent code under
the step's label, decodes the next pose-mode clip, adds the rhythm branch's
offsets for the step's audio, and appends the composed clip. By default the
autoregression feeds the pose-mode clip forward, not the composed one, so
rhythm never leaks into posture; conditioning on the composed clip sits
behind a flag. One generator seeded once drives the whole run, and it is
consumed only at steps whose label is 1, so a prefix of the schedule
reproduces a prefix of the output.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import autodiff as ad
from . import nn
from .audio import AudioClip, Transcript
from .errors import DataError
from .motion import MotionClip, RhythmOffset
from .posemode import PoseModeBranch
from .rhythm import RhythmBranch

_POLICIES = ("keyword", "fixed-interval", "explicit")


@dataclass(frozen=True)
class ModeSchedule:
    """Binary mode labels per generation step and where they came from."""

    labels: tuple[int, ...]
    provenance: str

    def __post_init__(self) -> None:
        if any(c not in (0, 1) for c in self.labels):
            raise ValueError("schedule labels must all be 0 or 1")
        if self.provenance not in _POLICIES:
            raise ValueError(f"provenance must be one of {_POLICIES}")

    def __len__(self) -> int:
        return len(self.labels)


def mode_schedule(
    transcript: Transcript | None,
    n_steps: int,
    policy: str,
    *,
    clip_duration_s: float | None = None,
    keywords=(),
    interval: int = 4,
    explicit=None,
) -> ModeSchedule:
    """Build the per-step mode labels for a run of n_steps clips.

    keyword: label 1 for every step whose time span [i*dur, (i+1)*dur)
        contains the start of a keyword token.
    fixed-interval: label 1 on every interval-th step (steps i with
        (i + 1) % interval == 0).
    explicit: labels given outright; must match n_steps.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    if policy == "keyword":
        if transcript is None:
            raise ValueError("keyword policy needs a transcript")
        if clip_duration_s is None or clip_duration_s <= 0:
            raise ValueError("keyword policy needs a positive clip duration")
        wanted = {w.lower() for w in keywords}
        if not wanted:
            raise ValueError("keyword policy needs a non-empty keyword list")
        labels = []
        for i in range(n_steps):
            words = transcript.words_between(i * clip_duration_s, (i + 1) * clip_duration_s)
            labels.append(int(any(w.lower().strip(".,!?;:") in wanted for w in words)))
        return ModeSchedule(tuple(labels), "keyword")
    if policy == "fixed-interval":
        if interval < 1:
            raise ValueError("interval must be at least 1")
        return ModeSchedule(tuple(int((i + 1) % interval == 0) for i in range(n_steps)), "fixed-interval")
    if policy == "explicit":
        if explicit is None:
            raise ValueError("explicit policy needs labels")
        labels = tuple(int(c) for c in explicit)
        if len(labels) != n_steps:
            raise ValueError(f"explicit labels have length {len(labels)}, expected {n_steps}")
        return ModeSchedule(labels, "explicit")
    raise ValueError(f"unknown policy {policy!r}; expected one of {_POLICIES}")


@dataclass(frozen=True)
class StepRecord:
    """Intermediates of one generation step."""

    c: int
    z: np.ndarray
    pose_clip: MotionClip
    rhythm_offset: RhythmOffset


@dataclass(frozen=True)
class GenerationResult:
    """Composed motion of a full run plus per-step intermediates."""

    motion: np.ndarray
    per_step: tuple[StepRecord, ...]
    seed: int

    @property
    def n_steps(self) -> int:
        return len(self.per_step)


def generate_sequence(
    initial_pose: MotionClip,
    audio_clips,
    schedule: ModeSchedule,
    pose: PoseModeBranch,
    pose_params: Mapping[str, np.ndarray],
    rhythm: RhythmBranch,
    rhythm_params: Mapping[str, np.ndarray],
    *,
    seed: int = 0,
    condition_on_composed: bool = False,
    recenter_offsets: bool = False,
) -> GenerationResult:
    """Run the autoregressive loop over aligned audio clips.

    Args:
        initial_pose: clip standing in for the step-0 "previous motion".
        audio_clips: one AudioClip of standardized features per step.
        schedule: mode labels, same length as audio_clips.
        seed: seeds the single generator used for every latent draw.
        condition_on_composed: feed composed clips (pose + rhythm) forward
            instead of pose-mode clips.
        recenter_offsets: subtract each predicted offset clip's own temporal
            mean before composing.

    Returns:
        GenerationResult with motion stacked to (n_steps * T, D).
    """
    audio_clips = list(audio_clips)
    if not audio_clips:
        raise DataError("generation needs at least one audio clip")
    if len(audio_clips) != len(schedule):
        raise ValueError(
            f"schedule length {len(schedule)} does not match {len(audio_clips)} audio clips"
        )
    rng = np.random.default_rng(seed)
    prev = initial_pose
    records: list[StepRecord] = []
    pose_pv = nn.param_vars(dict(pose_params))
    for c, audio in zip(schedule.labels, audio_clips):
        e_prev = pose.encode_motion(pose_params, prev)
        z = pose.sample_latent(c, rng=rng, mode="infer")
        e_star = pose.decode_transition_v(
            pose_pv, ad.Var(z[None, :]), ad.Var(e_prev[None, :])
        ).data[0]
        pose_clip = pose.decode_motion(pose_params, e_star)
        offsets = rhythm.generate(rhythm_params, audio)
        if recenter_offsets:
            offsets = RhythmOffset(offsets.offsets - offsets.offsets.mean(axis=0))
        records.append(StepRecord(c=c, z=z, pose_clip=pose_clip, rhythm_offset=offsets))
        composed = pose_clip.frames + offsets.offsets
        if condition_on_composed:
            prev = MotionClip(composed, fps=prev.fps, joint_spec=prev.joint_spec)
        else:
            prev = pose_clip
    motion = np.concatenate(
        [r.pose_clip.frames + r.rhythm_offset.offsets for r in records], axis=0
    )
    return GenerationResult(motion=motion, per_step=tuple(records), seed=seed)
