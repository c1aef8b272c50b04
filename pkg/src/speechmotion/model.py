"""Glue from RunConfig to concrete branch objects."""

from __future__ import annotations

from .config import RunConfig
from .posemode import PoseModeBranch, PoseModeConfig
from .rhythm import RhythmBranch, RhythmConfig


def pose_branch_from(config: RunConfig) -> PoseModeBranch:
    m = config.model
    return PoseModeBranch(
        PoseModeConfig(
            t_frames=config.t_frames,
            d_m=config.d_m,
            d_e=m.d_e,
            d_z=m.d_z,
            enc_hidden=tuple(m.enc_hidden),
            latent_hidden=tuple(m.latent_hidden),
            activation=m.activation,
        ),
        fps=config.fps,
        joint_spec=config.joint_spec,
    )


def rhythm_branch_from(config: RunConfig) -> RhythmBranch:
    m = config.model
    return RhythmBranch(
        RhythmConfig(
            t_frames=config.t_frames,
            d_s=config.mfcc.d_s,
            d_m=config.d_m,
            hidden=m.rhythm_hidden,
            n_layers=m.rhythm_layers,
            kernel=m.rhythm_kernel,
            activation=m.activation,
        )
    )


def build_branches(config: RunConfig) -> tuple[PoseModeBranch, RhythmBranch]:
    return pose_branch_from(config), rhythm_branch_from(config)
