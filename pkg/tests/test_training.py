"""Objective assembly, dataset splitting, and the optimization loop."""

import json

import numpy as np
import pytest

from speechmotion import (
    AudioClip,
    DataError,
    DatasetSplit,
    JointSpec,
    LossWeights,
    MotionClip,
    NumericError,
    RunConfig,
    TrainingSample,
    build_dataset,
    label_mode_change,
    loss_vae,
    make_toy_dataset,
    total_loss,
    train,
    validation_lvd,
)
from speechmotion.config import ModelSettings, ToySettings, TrainSettings
from speechmotion.posemode import PoseModeBranch, PoseModeConfig
from speechmotion.rhythm import RhythmBranch, RhythmConfig

SPEC = JointSpec(names=("nose", "neck", "right_palm"), hand_indices=(2,))


def _tiny_branches(seed=0):
    pcfg = PoseModeConfig(t_frames=4, d_m=6, d_e=5, d_z=3, enc_hidden=(8,), latent_hidden=(6,))
    pose = PoseModeBranch(pcfg, joint_spec=SPEC)
    rcfg = RhythmConfig(t_frames=4, d_s=3, d_m=6, hidden=4, n_layers=2, kernel=3)
    rhythm = RhythmBranch(rcfg)
    rng = np.random.default_rng(seed)
    return pose, pose.init_params(rng), rhythm, rhythm.init_params(rng)


def _sample(seed=0, c=0):
    rng = np.random.default_rng(seed)
    return TrainingSample(
        m_prev=MotionClip(rng.normal(size=(4, 6)), joint_spec=SPEC),
        m_cur=MotionClip(rng.normal(size=(4, 6)), joint_spec=SPEC),
        s_cur=AudioClip(rng.normal(size=(4, 3))),
        c=c,
        speaker_id="s",
        segment_id="seg",
    )


# -- loss weights --------------------------------------------------------------------


def test_negative_weight_rejected():
    with pytest.raises(ValueError):
        LossWeights(rec=-0.1)


def test_weights_from_config():
    config = RunConfig().replace(train=TrainSettings(lambda_vae=0.5))
    assert LossWeights.from_config(config).vae == 0.5


# -- total_loss ----------------------------------------------------------------------


def test_all_weights_zero_gives_zero():
    pose, pp, rhythm, rp = _tiny_branches()
    total, breakdown = total_loss(
        _sample(), pose, pp, rhythm, rp, LossWeights(0.0, 0.0, 0.0, 0.0)
    )
    assert total == 0.0
    assert breakdown == {"rec": 0.0, "vae": 0.0, "rhythm": 0.0, "reg": 0.0}


def test_perfect_model_on_zero_clip_reconstructs():
    pose, pp, rhythm, rp = _tiny_branches()
    pp = {k: np.zeros_like(v) for k, v in pp.items()}
    rp = {k: np.zeros_like(v) for k, v in rp.items()}
    zero = TrainingSample(
        m_prev=MotionClip(np.zeros((4, 6)), joint_spec=SPEC),
        m_cur=MotionClip(np.zeros((4, 6)), joint_spec=SPEC),
        s_cur=AudioClip(np.zeros((4, 3))),
        c=0,
        speaker_id="s",
        segment_id="seg",
    )
    total, breakdown = total_loss(zero, pose, pp, rhythm, rp, LossWeights(1.0, 0.0, 0.0, 0.0))
    assert total == 0.0
    assert breakdown["rec"] == 0.0


def test_breakdown_additivity():
    pose, pp, rhythm, rp = _tiny_branches()
    weights = LossWeights(1.0, 0.01, 1.0, 1.0)
    for c, seed in ((0, 1), (1, 2)):
        total, breakdown = total_loss(
            _sample(seed, c), pose, pp, rhythm, rp, weights, rng=np.random.default_rng(0)
        )
        weighted = (
            weights.rec * breakdown["rec"]
            + weights.vae * breakdown["vae"]
            + weights.rhythm * breakdown["rhythm"]
            + weights.reg * breakdown["reg"]
        )
        assert abs(total - weighted) < 1e-9


def test_weight_zeroing_identity():
    # weighted total with one lambda zeroed equals the sum of the other terms
    pose, pp, rhythm, rp = _tiny_branches()
    full = LossWeights(1.0, 1.0, 1.0, 1.0)
    sample = _sample(3, c=1)
    _, breakdown = total_loss(sample, pose, pp, rhythm, rp, full, rng=np.random.default_rng(5))
    for dropped in ("rec", "vae", "rhythm", "reg"):
        weights = LossWeights(**{k: 0.0 if k == dropped else 1.0 for k in ("rec", "vae", "rhythm", "reg")})
        total, sub = total_loss(sample, pose, pp, rhythm, rp, weights, rng=np.random.default_rng(5))
        assert sub[dropped] == 0.0
        expected = sum(breakdown[k] for k in breakdown if k != dropped)
        assert abs(total - expected) < 1e-9


def test_indicator_semantics_of_vae_term(tiny_pose=None):
    pose, pp, rhythm, rp = _tiny_branches()
    for c in (0, 1):
        sample = _sample(seed=4, c=c)
        _, breakdown = total_loss(
            sample, pose, pp, rhythm, rp, LossWeights(0.0, 1.0, 0.0, 0.0)
        )
        e_prev = pose.encode_motion(pp, sample.m_prev)
        e_cur = pose.encode_motion(pp, sample.m_cur)
        post = pose.posterior(pp, e_cur - e_prev)
        assert abs(breakdown["vae"] - loss_vae(post, c)) < 1e-9


def test_total_loss_matches_hand_traced_forward():
    pose, pp, rhythm, rp = _tiny_branches(seed=9)
    sample = _sample(seed=10, c=1)
    weights = LossWeights(1.0, 0.01, 1.0, 1.0)
    got_total, got_parts = total_loss(
        sample, pose, pp, rhythm, rp, weights, rng=np.random.default_rng(21)
    )

    # independent forward pass in plain numpy
    def mlp(prefix, x, n_layers):
        for i in range(n_layers):
            x = x @ pp[f"{prefix}.w{i}"] + pp[f"{prefix}.b{i}"]
            if i < n_layers - 1:
                x = np.tanh(x)
        return x

    x_prev = sample.m_prev.frames.reshape(1, -1)
    x_cur = sample.m_cur.frames.reshape(1, -1)
    e_prev = mlp("f_enc", x_prev, 2)
    e_cur = mlp("f_enc", x_cur, 2)
    stats = mlp("h_enc", e_cur - e_prev, 2)
    mu, logvar = stats[:, :3], stats[:, 3:]

    vae = float(0.5 * np.sum(mu**2 + np.exp(logvar) - 1.0 - logvar))

    eps = np.random.default_rng(21).standard_normal((1, 3))
    z = mu + np.exp(0.5 * logvar) * eps
    e_star = mlp("h_dec", np.concatenate([z, e_prev], axis=1), 2)
    pose_flat = mlp("f_dec", e_star, 2)

    audio = sample.s_cur.features[None]
    h = audio
    for i in range(2):
        w, b_ = rp[f"conv{i}.w"], rp[f"conv{i}.b"]
        pad = np.pad(h, ((0, 0), (1, 1), (0, 0)))
        h = sum(pad[:, k : k + 4] @ w[k] for k in range(3)) + b_
        h = np.tanh(h)
    rhythm_out = h @ rp["head.w"] + rp["head.b"]
    rhythm_flat = rhythm_out.reshape(1, -1)

    rec = float(np.abs(pose_flat + rhythm_flat - x_cur).mean())
    gt_off = sample.m_cur.frames - sample.m_cur.frames.mean(axis=0)
    rhythm_term = float(np.abs(rhythm_out[0] - gt_off).mean())
    reg = float(
        np.abs(mlp("f_dec", e_cur, 2) - x_cur).mean()
        + np.abs(mlp("f_dec", e_prev, 2) - x_prev).mean()
    )
    expected_total = rec + 0.01 * vae + rhythm_term + reg

    assert abs(got_parts["rec"] - rec) < 1e-6
    assert abs(got_parts["vae"] - vae) < 1e-6
    assert abs(got_parts["rhythm"] - rhythm_term) < 1e-6
    assert abs(got_parts["reg"] - reg) < 1e-6
    assert abs(got_total - expected_total) < 1e-6


def test_c1_reconstruction_needs_rng():
    pose, pp, rhythm, rp = _tiny_branches()
    with pytest.raises(ValueError):
        total_loss(_sample(c=1), pose, pp, rhythm, rp, LossWeights(1.0, 0.0, 0.0, 0.0))


# -- dataset assembly ------------------------------------------------------------------


def _toy_config(**kwargs):
    defaults = dict(
        t_frames=16,
        toy=ToySettings(speakers=2, segments_per_speaker=5, clips_per_segment=5),
        model=ModelSettings(
            d_e=8, d_z=4, enc_hidden=(16,), latent_hidden=(8,), rhythm_hidden=8, rhythm_layers=2
        ),
        train=TrainSettings(epochs=2, batch_size=8, lr=1e-3),
    )
    defaults.update(kwargs)
    return RunConfig().replace(**defaults)


@pytest.fixture(scope="module")
def toy_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("toy")
    config = _toy_config()
    make_toy_dataset(out, config, seed=0)
    landmarks = sorted((out / "landmarks").glob("*.npz"))
    audio = sorted((out / "audio").glob("*.wav"))
    return out, config, landmarks, audio


def test_build_dataset_counts_and_determinism(toy_corpus):
    _, config, landmarks, audio = toy_corpus
    split_a, errors_a = build_dataset(landmarks, audio, config)
    split_b, errors_b = build_dataset(landmarks, audio, config)
    assert errors_a == errors_b == []
    # 10 segments -> 8 train, 1 val, 1 test; 4 samples per 5-clip segment
    assert len(split_a.train) == 32
    assert len(split_a.val) == 4
    assert len(split_a.test) == 4
    for a, b in zip(split_a.train, split_b.train):
        np.testing.assert_array_equal(a.m_cur.frames, b.m_cur.frames)
        assert a.segment_id == b.segment_id and a.c == b.c


def test_split_segments_disjoint(toy_corpus):
    _, config, landmarks, audio = toy_corpus
    split, _ = build_dataset(landmarks, audio, config)
    groups = [
        {s.segment_id for s in split.train},
        {s.segment_id for s in split.val},
        {s.segment_id for s in split.test},
    ]
    assert not (groups[0] & groups[1] or groups[0] & groups[2] or groups[1] & groups[2])


def test_labels_match_pseudo_rule(toy_corpus):
    _, config, landmarks, audio = toy_corpus
    split, _ = build_dataset(landmarks, audio, config)
    for s in split.train + split.val + split.test:
        assert s.c == label_mode_change(s.m_prev, s.m_cur, config.mode_threshold)


def test_single_pair_segment(tmp_path):
    # one segment of exactly 2 clips -> one sample
    config = _toy_config(toy=ToySettings(speakers=1, segments_per_speaker=1, clips_per_segment=2))
    make_toy_dataset(tmp_path, config, seed=1)
    split, errors = build_dataset(
        sorted((tmp_path / "landmarks").glob("*.npz")),
        sorted((tmp_path / "audio").glob("*.wav")),
        config,
    )
    assert errors == []
    assert len(split.train) + len(split.val) + len(split.test) == 1


def test_short_segment_reported_not_fatal(tmp_path, toy_corpus):
    src, config, landmarks, audio = toy_corpus
    # corrupt one landmark file to be shorter than two clips
    import shutil

    from speechmotion import io as smio

    work = tmp_path / "data"
    shutil.copytree(src, work)
    victim = sorted((work / "landmarks").glob("*.npz"))[0]
    frames, fps, spec, meta = smio.load_landmarks(victim)
    smio.save_landmarks(victim, frames[: config.t_frames], fps, spec, meta)
    split, errors = build_dataset(
        sorted((work / "landmarks").glob("*.npz")),
        sorted((work / "audio").glob("*.wav")),
        config,
    )
    assert len(errors) == 1 and victim.name in errors[0]
    assert len(split.train) > 0


def test_unpaired_files_reported(toy_corpus):
    _, config, landmarks, audio = toy_corpus
    split, errors = build_dataset(landmarks, audio[:-1], config)
    assert len(errors) == 1
    assert audio[-1].stem in errors[0]


def test_empty_inputs_is_data_error():
    with pytest.raises(DataError):
        build_dataset([], [], _toy_config())


def test_dataset_split_rejects_leaky_segments():
    a, b = _sample(1), _sample(2)
    with pytest.raises(ValueError):
        DatasetSplit(train=(a,), val=(b,), test=(), feature_stats=None)


# -- training loop -------------------------------------------------------------------------


def test_train_reproducible_and_logs(toy_corpus, tmp_path):
    _, config, landmarks, audio = toy_corpus
    split, _ = build_dataset(landmarks, audio, config)
    log = tmp_path / "log.jsonl"
    r1 = train(split, config, log_path=log)
    r2 = train(split, config)
    assert r1.history[0]["total"] == r2.history[0]["total"]  # bit-identical rerun
    assert abs(r1.history[0]["total"] - r2.history[0]["total"]) < 1e-6
    for k in ("pose", "rhythm"):
        p1 = getattr(r1.final, f"{k}_params")
        p2 = getattr(r2.final, f"{k}_params")
        for key in p1:
            np.testing.assert_array_equal(p1[key], p2[key])

    lines = [json.loads(line) for line in log.read_text().splitlines()]
    assert len(lines) == config.train.epochs
    assert {"epoch", "total", "rec", "vae", "rhythm", "reg", "val_lvd"} <= set(lines[0])
    assert r1.final.epoch == config.train.epochs
    assert r1.best.val_lvd is not None


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # overflow is the point
def test_train_divergence_aborts(toy_corpus):
    _, config, landmarks, audio = toy_corpus
    split, _ = build_dataset(landmarks, audio, config)
    bad = config.replace(train=TrainSettings(epochs=3, batch_size=8, lr=1e9))
    with pytest.raises(NumericError):
        train(split, bad)


def test_train_loss_decreases(toy_corpus):
    _, config, landmarks, audio = toy_corpus
    split, _ = build_dataset(landmarks, audio, config)
    result = train(split, config.replace(train=TrainSettings(epochs=10, batch_size=8, lr=3e-3)))
    assert result.history[-1]["total"] < result.history[0]["total"]


def test_validation_lvd_empty_is_nan():
    pose, pp, rhythm, rp = _tiny_branches()
    assert np.isnan(validation_lvd([], pose, pp, rhythm, rp, None, seed=0))


def test_validation_lvd_positive(toy_corpus):
    _, config, landmarks, audio = toy_corpus
    split, _ = build_dataset(landmarks, audio, config)
    pose, pp, rhythm, rp = _tiny_branches()
    pcfg = PoseModeConfig(
        t_frames=16, d_m=24, d_e=8, d_z=4, enc_hidden=(16,), latent_hidden=(8,)
    )
    pose = PoseModeBranch(pcfg)
    rcfg = RhythmConfig(t_frames=16, d_s=26, d_m=24, hidden=8, n_layers=2)
    rhythm = RhythmBranch(rcfg)
    rng = np.random.default_rng(0)
    value = validation_lvd(
        split.val, pose, pose.init_params(rng), rhythm, rhythm.init_params(rng),
        split.feature_stats, seed=0,
    )
    assert value > 0
