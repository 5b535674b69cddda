"""Curriculum training for polarimetric SAR patch classifiers.

The package ranks labeled patches from easy to hard using the entropy /
mean-alpha target decomposition of their coherency matrices, feeds them to a
small convolutional classifier in accumulating batches, and compares the
result against conventional epoch training on the same samples.
"""

from .classifier import (
    PARAM_ORDER,
    Model,
    ModelConfig,
    classify_scene,
    cross_entropy,
    evaluate,
    forward,
    freeze_normalization,
    init_model,
    load_model,
    loss_and_gradients,
    save_model,
    train_on_batch,
)
from .coherency import (
    NUM_COMPONENTS,
    UNLABELED,
    CoherencyMatrix,
    Patch,
    SceneDataset,
    matrices_to_vectors,
    matrix_to_vector,
    vector_to_matrix,
    vectors_to_matrices,
)
from .curriculum import (
    MAX_COMPLEXITY,
    BatchSchedule,
    RankedTrainingSet,
    batch_schedule,
    complexity_from_fields,
    patch_complexities,
    patch_complexity,
    pixel_complexity,
    prefix_sizes,
    rank_patches,
    slice_batch,
    write_ranking_csv,
)
from .errors import (
    DclError,
    EmptySetError,
    ExhaustedError,
    FormatError,
    GridMismatchError,
    InsufficientSamplesError,
    InvalidCovarianceError,
    NaNLossError,
    NonFiniteError,
    OutOfRangeError,
    SceneTooSmallError,
    ShapeMismatchError,
    VersionMismatchError,
)
from .halpha import (
    EigenSystem,
    HAlpha,
    alpha_angles,
    decompose_field,
    eigendecompose,
    entropy,
    halpha_of_pixel,
    mean_alpha,
    pseudo_probabilities,
)
from .patches import (
    DEFAULT_PATCH_SIZE,
    PatchExtractionSpec,
    extract_patches,
    split_pools,
)
from .sceneio import (
    legend_color,
    load_scene,
    save_scene,
    write_legend_csv,
    write_pgm,
)
from .synthesis import (
    DEFAULT_LOOKS,
    ClassRegion,
    SceneSpec,
    default_covariances,
    generate_scene,
    stripe_scene_spec,
)
from .training import (
    METHOD_BASELINE,
    METHOD_CURRICULUM,
    BaselineConfig,
    ComparisonReport,
    DclConfig,
    StageRecord,
    TrainingLog,
    compare_runs,
    run_baseline,
    run_dcl,
    stage_draws,
    write_oa_curves,
)

__version__ = "0.1.0"

__all__ = [
    "NUM_COMPONENTS",
    "UNLABELED",
    "CoherencyMatrix",
    "Patch",
    "SceneDataset",
    "matrices_to_vectors",
    "matrix_to_vector",
    "vector_to_matrix",
    "vectors_to_matrices",
    "EigenSystem",
    "HAlpha",
    "alpha_angles",
    "decompose_field",
    "eigendecompose",
    "entropy",
    "halpha_of_pixel",
    "mean_alpha",
    "pseudo_probabilities",
    "MAX_COMPLEXITY",
    "BatchSchedule",
    "RankedTrainingSet",
    "batch_schedule",
    "complexity_from_fields",
    "patch_complexities",
    "patch_complexity",
    "pixel_complexity",
    "prefix_sizes",
    "rank_patches",
    "slice_batch",
    "write_ranking_csv",
    "PARAM_ORDER",
    "Model",
    "ModelConfig",
    "classify_scene",
    "cross_entropy",
    "evaluate",
    "forward",
    "freeze_normalization",
    "init_model",
    "load_model",
    "loss_and_gradients",
    "save_model",
    "train_on_batch",
    "DEFAULT_LOOKS",
    "ClassRegion",
    "SceneSpec",
    "default_covariances",
    "generate_scene",
    "stripe_scene_spec",
    "legend_color",
    "load_scene",
    "save_scene",
    "write_legend_csv",
    "write_pgm",
    "DEFAULT_PATCH_SIZE",
    "PatchExtractionSpec",
    "extract_patches",
    "split_pools",
    "METHOD_BASELINE",
    "METHOD_CURRICULUM",
    "BaselineConfig",
    "ComparisonReport",
    "DclConfig",
    "StageRecord",
    "TrainingLog",
    "compare_runs",
    "run_baseline",
    "run_dcl",
    "stage_draws",
    "write_oa_curves",
    "DclError",
    "EmptySetError",
    "ExhaustedError",
    "FormatError",
    "GridMismatchError",
    "InsufficientSamplesError",
    "InvalidCovarianceError",
    "NaNLossError",
    "NonFiniteError",
    "OutOfRangeError",
    "SceneTooSmallError",
    "ShapeMismatchError",
    "VersionMismatchError",
    "__version__",
]
