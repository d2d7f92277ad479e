"""Train one regime end to end and evaluate crossmodal retrieval.

Uses the three-loss audio-visual-caption regime at a reduced scale so the
script finishes in a few seconds; the loss trace shows the contrastive
terms falling and the retrieval table shows alignment well above chance.
"""

import numpy as np

from trialign.data import gen_synthetic
from trialign.eval import format_report_table, run_task_suite
from trialign.regimes import SlavaAvCaptions
from trialign.train import TrainConfig, epoch_mean, train_single_stage

dataset = gen_synthetic(n_clips=128, k_shared=8, k_audio=4, k_visual=4,
                        noise_sigma=0.1, rows_per_clip=3, seed=0)
config = TrainConfig(epochs=10, batch_size=32, seed=0)
regime = SlavaAvCaptions(use_av_loss=True)

result = train_single_stage(dataset, config, regime)

print("epoch-mean losses (av / at / vt / total):")
for epoch in range(config.epochs):
    av = epoch_mean(result.trace, 0, epoch, "av")
    at = epoch_mean(result.trace, 0, epoch, "at")
    vt = epoch_mean(result.trace, 0, epoch, "vt")
    total = epoch_mean(result.trace, 0, epoch)
    print(f"  epoch {epoch:2d}: {av:.4f}  {at:.4f}  {vt:.4f}  {total:.4f}")

report = run_task_suite(result.aligner, dataset, k=10,
                        model_tag="slava-av-3loss")
print(f"\nrecall@10 over {report.n_clips} clips "
      f"(chance ~ {10 / report.n_clips:.3f}):\n")
print(format_report_table([report]))

# Determinism: the same config reproduces the run bit for bit.
again = train_single_stage(dataset, config, regime)
identical = all(
    np.array_equal(result.aligner.head(n).weight, again.aligner.head(n).weight)
    for n in ("visual", "audio", "text"))
print(f"re-run with the same seed is bit-identical: {identical}")
