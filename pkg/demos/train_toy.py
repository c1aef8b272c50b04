"""Train both branches on a small synthetic corpus and watch the losses."""

import dataclasses
import tempfile
from pathlib import Path

from speechmotion import RunConfig
from speechmotion.toydata import make_toy_dataset
from speechmotion.training import build_dataset, train

base = RunConfig()
config = base.replace(
    t_frames=32,
    toy=dataclasses.replace(base.toy, speakers=2, segments_per_speaker=5, clips_per_segment=6),
    model=dataclasses.replace(
        base.model,
        d_e=16,
        d_z=8,
        enc_hidden=(32,),
        latent_hidden=(16,),
        rhythm_hidden=24,
        rhythm_layers=3,
    ),
    train=dataclasses.replace(base.train, epochs=60, lr=1e-3, batch_size=16),
)

with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    make_toy_dataset(root, config, seed=0)
    split, errors = build_dataset(
        sorted((root / "landmarks").glob("*.npz")),
        sorted((root / "audio").glob("*.wav")),
        config,
    )
    print(f"samples: {len(split.train)} train / {len(split.val)} val / {len(split.test)} test")

    result = train(split, config, progress=False)

    for i in (0, 9, 29, 59):
        h = result.history[i]
        print(
            f"epoch {h['epoch']:3d}: rec {h['rec']:.4f} vae {h['vae']:.4f}"
            f" rhythm {h['rhythm']:.4f} reg {h['reg']:.4f}"
        )
    print(f"best validation lvd: {result.best.val_lvd:.4f} (epoch {result.best.epoch})")
