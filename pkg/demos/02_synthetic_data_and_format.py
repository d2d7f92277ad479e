"""Generate a synthetic trimodal dataset and round-trip it through the
on-disk format.

Each clip has a latent [z_shared, z_audio, z_visual]; audio features see
[z_shared, z_audio], visual features [z_shared, z_visual], and the three
caption types are (noisy) linear views of the corresponding slices. Audio
captions carry no visual-only information by construction.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from trialign.data import gen_synthetic, read_dataset, write_dataset
from trialign.eval import dataset_fingerprint

dataset = gen_synthetic(n_clips=32, k_shared=8, k_audio=4, k_visual=4,
                        noise_sigma=0.1, rows_per_clip=3, seed=0,
                        captions_per_type=2)
clip = dataset.clip_ids[0]
print(f"{len(dataset)} clips; first clip {clip!r}")
print(f"  audio features:  {dataset.features(clip, 'audio').shape}")
print(f"  visual features: {dataset.features(clip, 'visual').shape}")
for caption_type in ("audio", "visual", "audio_visual"):
    caps = dataset.captions_for(clip, caption_type)
    print(f"  {caption_type} captions: {len(caps)} x "
          f"{caps[0].text_embedding.shape}")

with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp) / "dataset"
    write_dataset(dataset, root)
    print("\non disk:")
    for path in sorted(root.iterdir()):
        print(f"  {path.name}: {path.stat().st_size} bytes")
    print("  meta.json:", json.loads((root / "meta.json").read_text()))
    first_line = (root / "manifest.jsonl").read_text().splitlines()[0]
    print("  first manifest entry:", first_line)

    loaded = read_dataset(root)
    # Storage is float32, so the fingerprints (hashed at float32) agree.
    print("\nfingerprint before write:", dataset_fingerprint(dataset))
    print("fingerprint after read:  ", dataset_fingerprint(loaded))

    # The loader validates: trim the blob and it refuses with a located error.
    blob = root / "embeddings.f32"
    blob.write_bytes(blob.read_bytes()[:-8])
    try:
        read_dataset(root)
    except Exception as exc:
        print(f"\ntruncated blob rejected: {exc}")

same = gen_synthetic(32, 8, 4, 4, 0.1, 3, seed=0, captions_per_type=2)
print("\nsame seed regenerates identical features:",
      np.array_equal(same.features(clip, "audio"),
                     dataset.features(clip, "audio")))
