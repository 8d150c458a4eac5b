"""veriface: lightweight fake-face detection.

Stages: 30%-margin face chips with landmark/region blocks, a learned
orthogonal filter bank per block, per-channel spatial PCA, supervised
cross-entropy feature screening, and a boosted-tree classifier whose
stored-parameter count is audited against a 256K budget.
"""

__version__ = "0.1.0"

from .blocks import (Block, BlockLayoutConfig, FaceChip, crop_face,
                     extract_blocks, load_image)
from .config import RunConfig, load_config, parse_config
from .dft import (DftSelector, EnergySelector, apply_selector, dft_cost,
                  fit_dft, fit_energy_selector)
from .errors import (ConfigError, DataIOError, FittingError, GeometryError,
                     InsufficientDataError, MetricError, ModelIOError,
                     ValidationError, VerifaceError)
from .gbdt import (GbdtConfig, GbdtModel, Tree, count_parameters, fit_gbdt,
                   predict_proba)
from .manifest import (DatasetManifest, FrameRecord, LandmarkSet, load_manifest,
                       parse_manifest, sample_frame_indices, save_manifest,
                       serialize_manifest, subsample_manifest)
from .model_io import load_model, save_model, serialize_model
from .pipeline import (DetectorModel, ParameterReport, audit_parameters,
                       compute_auc, evaluate_manifest, landmark_discriminability,
                       predict_frame, predict_record, predict_video,
                       score_manifest, train_detector)
from .saab import (ResponseTensor, SaabFilterBank, apply_saab, fit_saab,
                   inverse_saab, output_size)
from .spatial_pca import (SpatialPcaModel, apply_spatial_pca, fit_spatial_pca)
from .synthetic import make_synthetic_dataset
