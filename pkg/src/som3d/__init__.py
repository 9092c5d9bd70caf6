"""3D self-organizing maps for temporal-spatial point data.

Train a lattice of nodes over (time, latitude, longitude) points - with
optional multi-period time vectors and categorical labels - and measure
how reliably the trained map mirrors the input distribution.
"""

from .errors import (
    DataError,
    DegenerateDimensionError,
    DimensionMismatchError,
    NumericError,
    Som3dError,
    UndefinedCorrelationError,
    UnknownCategoryError,
    UsageError,
)
from .evaluate import (
    CategoryReliability,
    EvaluationReport,
    FrequencyTensor,
    ReliabilityResult,
    SectionSums,
    correlation,
    evaluate,
    frequency_tensor,
    marginalize,
    per_category_reliability,
    project,
    quantization_error,
    r_squared,
    reliability,
    section_sums,
    section_sums_r2,
    topographic_error,
)
from .grid import (
    Codebook,
    GridDims,
    euclidean_distance,
    flat_index,
    grid_coordinate,
    grid_coordinates,
    grid_distance,
    grid_neighbors,
    mixed_distance,
)
from .io import (
    ColumnMapping,
    export_density,
    load_model,
    load_records,
    save_model,
    write_report,
)
from .preprocess import (
    CategoryVector,
    EncodedDataset,
    EncodingConfig,
    IncidentRecord,
    InputVector,
    NormalizationParams,
    TimeVector,
    apply_normalization,
    as_dataset,
    build_dataset,
    encode_category,
    encode_time_vector,
    fit_normalization,
    fit_rescale,
    fit_zscore,
    invert_normalization,
)
from .train import (
    UNASSIGNED_ID,
    BmuAssignment,
    RotationHazardWarning,
    SomModel,
    TrainingConfig,
    assign_bmus,
    assign_ids_probabilistic,
    assign_ids_wta,
    batch_epoch,
    compute_weight_matrix,
    estimate_alpha,
    find_bmu,
    gaussian_weight,
    linear_init,
    pca,
    radius_schedule,
    random_init,
    train,
)

__version__ = "0.1.0"
