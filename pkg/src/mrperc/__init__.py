"""Deep perceptual image similarity metrics with a 2AFC evaluation harness.

The package computes distances between images from the block activations
of a small sequential CNN backbone stored in a portable MRPW weight file.
Descriptors combine linear feature maps and channel Gram matrices at one
or two resolutions, pass through a normalization strategy, and are
compared with MSE, MAE, or binary cross-entropy.  The ``mr`` preset uses
(x1 linear, x1 quadratic, x2 linear) branches with sigmoid normalization
and cross-entropy; the ``classical`` preset is L2-normalized linear
features at x1 with MSE.
"""

from .descriptor import (Descriptor, DissimMeasure, FeatureBlock,
                         NormStrategy, dissimilarity, gram, linear_features,
                         normalize, quadratic_features)
from .errors import (ChecksumError, ConfigurationError, FormatError,
                     IngestionError, InputError, ManifestError, MrpercError,
                     UsageError, WeightFileError)
from .evaluation import (EvalReport, TripletRecord, evaluate, evaluate_grid,
                         evaluate_metric, load_2afc, score_triplet,
                         subsample_records)
from .images import load_image, save_image
from .model import (LayerDescriptor, WeightStore, extract_blocks,
                    load_weights, preprocess)
from .pipeline import (CLASSICAL, MR, PRESETS, Branch, MetricConfig,
                       MetricResult, compute_metric, mr_perceptual, ssim,
                       ssim_distance)
from .tensorops import bilinear_resize, conv2d, maxpool2d, relu

__version__ = "0.1.0"

__all__ = [
    "Branch", "CLASSICAL", "ChecksumError", "ConfigurationError",
    "Descriptor", "DissimMeasure", "EvalReport", "FeatureBlock",
    "FormatError", "IngestionError", "InputError", "LayerDescriptor", "MR",
    "ManifestError", "MetricConfig", "MetricResult", "MrpercError",
    "NormStrategy", "PRESETS", "TripletRecord", "UsageError",
    "WeightFileError", "WeightStore", "bilinear_resize", "compute_metric",
    "conv2d", "dissimilarity", "evaluate", "evaluate_grid", "evaluate_metric",
    "extract_blocks", "gram", "linear_features", "load_2afc", "load_image",
    "load_weights", "maxpool2d", "mr_perceptual", "normalize", "preprocess",
    "quadratic_features", "relu", "save_image", "score_triplet", "ssim",
    "ssim_distance", "subsample_records",
]
