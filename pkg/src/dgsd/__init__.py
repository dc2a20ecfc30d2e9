"""EEG auditory spatial attention detection.

Differential-entropy band features over a learnable electrode graph,
classified by a residual Chebyshev graph-convolution network trained with
self-distillation.
"""

from .data import (DatasetManifest, DatasetReader, SynthSpec, build_manifest,
                   hemisphere_map, read_dataset, synthesize, verify_dataset,
                   write_dataset, write_synthetic)
from .features import (DEFAULT_BANDS, Band, DeFeatureMatrix, EegRecording,
                       EegWindow, Label, bandpass, differential_entropy,
                       extract_features, slide_windows, znorm_trial)
from .graph import (ChebyshevBasis, chebyshev_basis, estimate_lambda_max,
                    gft, graph_conv, inverse_gft, laplacian,
                    rescale_laplacian)
from .losses import (LossBreakdown, LossWeights, combine, cross_entropy,
                     feature_distillation, hierarchical_distillation,
                     self_distillation_loss)
from .metrics import (ConfusionCounts, SubjectResult, TTestResult,
                      accuracy_stats, aggregate_results, paired_t_test,
                      precision_recall, write_subject_csv)
from .model import (DgsdConfig, DgsdModel, ForwardTrace, forward, init_model,
                    load_model, model_from_bytes, model_to_bytes,
                    parameter_count, predict, save_model)
from .train import (TrainConfig, TrainReport, evaluate_accuracy, fit,
                    gradient_check, project_w, split_dataset, train_step,
                    update_w_literal)

__version__ = "0.1.0"
