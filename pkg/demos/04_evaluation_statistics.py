"""Evaluation metrics: per-subject accuracy, precision/recall, and the
paired t-test used to compare two detectors.

Pure statistics, no training. Run with:

    python3 demos/04_evaluation_statistics.py
"""

import numpy as np

from dgsd import (ConfusionCounts, SubjectResult, accuracy_stats,
                  aggregate_results, paired_t_test, precision_recall)

rng = np.random.default_rng(11)

# Simulated per-subject outcomes for two detectors, 100 windows each;
# detector A is consistently a little better.
results_a, results_b = [], []
acc_a, acc_b = [], []
for i in range(12):
    y = rng.integers(0, 2, 100)
    flips_a = rng.random(100) < 0.12
    flips_b = rng.random(100) < 0.18
    pred_a = np.where(flips_a, 1 - y, y)
    pred_b = np.where(flips_b, 1 - y, y)
    results_a.append(SubjectResult.from_predictions(f"subj{i:02d}", 1.0, y, pred_a))
    results_b.append(SubjectResult.from_predictions(f"subj{i:02d}", 1.0, y, pred_b))
    acc_a.append(results_a[-1].accuracy)
    acc_b.append(results_b[-1].accuracy)

mean_a, sd_a = accuracy_stats(results_a)
mean_b, sd_b = accuracy_stats(results_b)
print(f"detector A: {mean_a:.3f} +- {sd_a:.3f}")
print(f"detector B: {mean_b:.3f} +- {sd_b:.3f}")

print("\nper-subject precision/recall (LEFT is the positive class):")
for res in results_a[:4]:
    precision, recall = precision_recall(res.confusion)
    print(f"  {res.subject_id}: accuracy={res.accuracy:.3f} "
          f"precision={precision:.3f} recall={recall:.3f}")

agg = aggregate_results(results_a)
print(f"\naggregate over {agg['n_subjects']} subjects: "
      f"precision {agg['precision_mean']:.3f}, recall {agg['recall_mean']:.3f}")

test = paired_t_test(acc_a, acc_b)
print(f"\npaired t-test A vs B: t={test.t:.3f}, p={test.p:.5f}, "
      f"significant at 0.05: {test.significant}")

# Degenerate but well-defined edges.
tie = paired_t_test(acc_a, acc_a)
print(f"identical samples: t={tie.t}, p={tie.p} (degenerate={tie.degenerate})")
print("undefined precision example:",
      precision_recall(ConfusionCounts(tp=0, fp=0, tn=7, fn=3)))
