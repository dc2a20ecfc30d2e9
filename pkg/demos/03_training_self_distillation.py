"""Training with self-distillation on a small synthetic subject.

Builds DE features for one subject, trains the graph network with the
three-part loss, and prints the loss breakdown as the deepest layer
teaches the shallow ones. About a minute on a laptop CPU. Run with:

    python3 demos/03_training_self_distillation.py

Note the dynamics on this trivially separable task: once validation
accuracy saturates, cross-entropy keeps inflating the deepest layer's
feature norms and the feature-distillation term chases them, so the raw
losses can diverge in late epochs. Selection by best validation accuracy
(how every fit picks its checkpoint) makes this harmless.
"""

from dgsd import (DgsdConfig, SynthSpec, TrainConfig, extract_features,
                  model_from_bytes, parameter_count, predict, slide_windows,
                  synthesize, znorm_trial)
from dgsd.train import fit

spec = SynthSpec(n_subjects=1, trials_per_subject=8, trial_seconds=30.0,
                 n_channels=32, alpha_asymmetry=1.0, noise_sigma=1.0, seed=5)
features = []
for rec in synthesize(spec):
    rec = znorm_trial(rec)
    features.extend(extract_features(w) for w in slide_windows(rec, 1.0))
print(f"{len(features)} windows of shape {features[0].values.shape}")

model_cfg = DgsdConfig(n_nodes=32, hidden=16, feature_head_dim=16)
print(f"model: {parameter_count(model_cfg)} trainable parameters "
      f"(adjacency {model_cfg.n_nodes}x{model_cfg.n_nodes} included)")

config = TrainConfig(epochs=15, batch_size=32, learning_rate=0.004,
                     early_stop_patience=None)
report = fit(features, config, model_cfg)

print("\nepoch  loss1(CE)  loss2(feat)  loss3(KL)  total    val acc")
for rec in report.epochs:
    print(f"{rec.epoch:5d}  {rec.loss.loss1:9.4f}  {rec.loss.loss2:11.4f}  "
          f"{rec.loss.loss3:9.4f}  {rec.loss.total:7.4f}  {rec.val_accuracy:7.3f}")

print(f"\nbest epoch {report.best_epoch} "
      f"(val {report.best_val_accuracy:.3f}), "
      f"test accuracy {report.test_accuracy:.3f}")

# The checkpoint holds everything needed for inference.
best = model_from_bytes(report.checkpoint)
sample = features[report.test_indices[0]]
print(f"one test window: predicted {predict(best, sample).name}, "
      f"true {sample.label.name}")
