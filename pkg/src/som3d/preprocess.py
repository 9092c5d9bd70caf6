"""Encoding of raw incident records into training vectors.

Covers per-dimension normalization (rescale to [0,1] or z-score), the
multi-period time-vector encoding, and one-hot category encoding.
"""

from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .errors import (
    DataError,
    DegenerateDimensionError,
    DimensionMismatchError,
    UnknownCategoryError,
)

PERIOD_LENGTHS = {"day": 1440, "week": 7, "month": 12}
PERIOD_ORDER = ("day", "week", "month")

NORMALIZATION_KINDS = ("none", "rescale", "zscore")


@dataclass(frozen=True)
class IncidentRecord:
    """One raw event: when, where, and optionally what kind."""

    timestamp: datetime
    latitude: float
    longitude: float
    category: str | None = None
    source_line: int | None = None  # 1-based line in the source file, if any

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude {self.longitude} outside [-180, 180]")


@dataclass
class TimeVector:
    """A time point re-expressed as one fraction per period."""

    components: np.ndarray  # fraction per period
    periods: tuple  # matching period lengths, e.g. (1440, 7)

    def __post_init__(self):
        self.components = np.asarray(self.components, dtype=np.float64)


@dataclass
class CategoryVector:
    """One-hot encoding of a category ID (1-based)."""

    one_hot: np.ndarray
    id: int


@dataclass
class InputVector:
    """Encoded training point: numeric part plus optional category."""

    numeric: np.ndarray
    category_id: int | None = None
    one_hot: np.ndarray | None = None


@dataclass
class NormalizationParams:
    """Fitted per-dimension normalization, invertible."""

    kind: str
    minimum: np.ndarray | None = None
    maximum: np.ndarray | None = None
    mean: np.ndarray | None = None
    std: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in NORMALIZATION_KINDS:
            raise ValueError(f"unknown normalization kind {self.kind!r}")


def fit_rescale(data) -> NormalizationParams:
    """Fit a per-dimension rescaling of the data onto [0, 1]."""
    x = _as_matrix(data)
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    degenerate = np.flatnonzero(hi <= lo)
    if degenerate.size:
        raise DegenerateDimensionError(
            f"dimension {degenerate[0]} is constant (min == max == {lo[degenerate[0]]!r}); "
            "rescaling is undefined"
        )
    return NormalizationParams(kind="rescale", minimum=lo, maximum=hi)


def fit_zscore(data) -> NormalizationParams:
    """Fit a per-dimension z-score transform (population standard deviation)."""
    x = _as_matrix(data)
    mu = x.mean(axis=0)
    sigma = x.std(axis=0)  # divide by n: keeps the unit-variance invariant exact
    degenerate = np.flatnonzero(sigma == 0.0)
    if degenerate.size:
        raise DegenerateDimensionError(
            f"dimension {degenerate[0]} has zero variance; z-score is undefined"
        )
    return NormalizationParams(kind="zscore", mean=mu, std=sigma)


def fit_normalization(data, kind: str) -> NormalizationParams:
    if kind == "none":
        return NormalizationParams(kind="none")
    if kind == "rescale":
        return fit_rescale(data)
    if kind == "zscore":
        return fit_zscore(data)
    raise ValueError(f"unknown normalization kind {kind!r}")


def apply_normalization(params: NormalizationParams, x):
    """Transform a vector or matrix into normalized units."""
    x = np.asarray(x, dtype=np.float64)
    if params.kind == "none":
        return x.copy()
    if params.kind == "rescale":
        _check_dim(params.minimum, x)
        return (x - params.minimum) / (params.maximum - params.minimum)
    _check_dim(params.mean, x)
    return (x - params.mean) / params.std


def invert_normalization(params: NormalizationParams, x):
    """Map normalized units back to raw units; inverse of apply_normalization."""
    x = np.asarray(x, dtype=np.float64)
    if params.kind == "none":
        return x.copy()
    if params.kind == "rescale":
        _check_dim(params.minimum, x)
        return x * (params.maximum - params.minimum) + params.minimum
    _check_dim(params.mean, x)
    return x * params.std + params.mean


def encode_time_vector(ts: datetime, periods=("day",), one_based: bool = False) -> TimeVector:
    """Convert a timestamp into one fraction per requested period.

    Stored fractions are zero-based (Monday and January are 0) so every
    component stays in [0, 1). one_based=True reproduces the conventional
    human numbering (Monday=1, January=1, minutes unchanged); note that
    Sunday and December then land exactly on 1.0.
    """
    seen = set()
    for p in periods:
        if p not in PERIOD_LENGTHS:
            raise ValueError(f"unknown period {p!r}; choose from {PERIOD_ORDER}")
        if p in seen:
            raise ValueError(f"duplicate period {p!r}")
        seen.add(p)
    components = []
    lengths = []
    offset = 1 if one_based else 0
    for p in periods:
        if p == "day":
            minute = ts.hour * 60 + ts.minute + ts.second / 60.0
            components.append(minute / 1440.0)
        elif p == "week":
            components.append((ts.weekday() + offset) / 7.0)
        else:  # month
            components.append((ts.month - 1 + offset) / 12.0)
        lengths.append(PERIOD_LENGTHS[p])
    return TimeVector(np.array(components), tuple(lengths))


def encode_category(label: str, vocabulary) -> CategoryVector:
    """One-hot encode a label against an ordered vocabulary (IDs are 1-based)."""
    try:
        idx = vocabulary.index(label)
    except ValueError:
        raise UnknownCategoryError(f"category {label!r} not in vocabulary") from None
    one_hot = np.zeros(len(vocabulary), dtype=np.float64)
    one_hot[idx] = 1.0
    return CategoryVector(one_hot=one_hot, id=idx + 1)


@dataclass
class EncodingConfig:
    """How incident records become training vectors."""

    periods: tuple = ("day",)
    normalize: str = "rescale"
    use_categories: bool = False
    unknown_category: str = "error"  # or "skip"; only relevant with a fixed vocabulary

    def __post_init__(self):
        self.periods = tuple(self.periods)
        if not self.periods:
            raise ValueError("at least one time period is required")
        for p in self.periods:
            if p not in PERIOD_LENGTHS:
                raise ValueError(f"unknown period {p!r}; choose from {PERIOD_ORDER}")
        if self.normalize not in NORMALIZATION_KINDS:
            raise ValueError(f"unknown normalization kind {self.normalize!r}")
        if self.unknown_category not in ("error", "skip"):
            raise ValueError("unknown_category must be 'error' or 'skip'")


@dataclass
class EncodedDataset:
    """Encoded training vectors plus the parameters that produced them."""

    vectors: np.ndarray  # (N, D) normalized numeric part
    norm: NormalizationParams
    periods: tuple = ()
    category_ids: np.ndarray | None = None  # (N,) 1-based IDs
    one_hot: np.ndarray | None = None  # (N, k)
    vocabulary: list | None = None

    def __len__(self):
        return self.vectors.shape[0]

    @property
    def n_time(self) -> int:
        return len(self.periods)

    @property
    def axis_names(self) -> list:
        if self.periods:
            return [*self.periods, "lat", "lon"]
        return [f"x{i}" for i in range(self.vectors.shape[1])]

    def input_vector(self, i: int) -> InputVector:
        return InputVector(
            numeric=self.vectors[i],
            category_id=None if self.category_ids is None else int(self.category_ids[i]),
            one_hot=None if self.one_hot is None else self.one_hot[i],
        )


def as_dataset(data) -> EncodedDataset:
    """Wrap a bare (N, D) array as an EncodedDataset; pass datasets through."""
    if isinstance(data, EncodedDataset):
        return data
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatchError(f"expected an (N, D) array, got shape {x.shape}")
    return EncodedDataset(vectors=x, norm=NormalizationParams(kind="none"))


def build_dataset(records, config: EncodingConfig | None = None, *, vocabulary=None,
                  norm: NormalizationParams | None = None) -> EncodedDataset:
    """Encode incident records into training vectors.

    Each record becomes [time fractions..., latitude, longitude], normalized
    per config (normalization is fitted on the full dataset first), plus an
    optional one-hot category part. Passing a fixed `vocabulary` and fitted
    `norm` encodes new data in an existing model's units instead of fitting.
    """
    config = config or EncodingConfig()
    records = list(records)
    if not records:
        raise DataError("cannot build a dataset from zero records")

    fit_vocab = vocabulary is None
    vocab = [] if fit_vocab else list(vocabulary)
    rows = []
    ids = []
    for idx, rec in enumerate(records):
        time_part = encode_time_vector(rec.timestamp, config.periods).components
        rows.append([*time_part, rec.latitude, rec.longitude])
        if config.use_categories:
            where = f"record {idx}" if rec.source_line is None else f"line {rec.source_line}"
            if rec.category is None:
                raise DataError(f"{where}: category requested but record has none")
            if rec.category not in vocab:
                if fit_vocab:
                    vocab.append(rec.category)
                elif config.unknown_category == "skip":
                    rows.pop()
                    continue
                else:
                    raise UnknownCategoryError(
                        f"{where}: category {rec.category!r} not in model vocabulary"
                    )
            ids.append(vocab.index(rec.category) + 1)
    if not rows:
        raise DataError("no records survived encoding")

    numeric = np.array(rows, dtype=np.float64)
    if norm is None:
        norm = fit_normalization(numeric, config.normalize)
    numeric = apply_normalization(norm, numeric)

    category_ids = None
    one_hot = None
    if config.use_categories:
        category_ids = np.array(ids, dtype=np.int64)
        one_hot = np.zeros((len(ids), len(vocab)), dtype=np.float64)
        one_hot[np.arange(len(ids)), category_ids - 1] = 1.0

    return EncodedDataset(
        vectors=numeric,
        norm=norm,
        periods=config.periods,
        category_ids=category_ids,
        one_hot=one_hot,
        vocabulary=vocab if config.use_categories else None,
    )


def _as_matrix(data) -> np.ndarray:
    x = np.asarray(data, dtype=np.float64)
    if x.size == 0:
        raise DataError("cannot fit normalization on empty data")
    if x.ndim == 1:
        x = x[:, None]
    return x


def _check_dim(reference, x):
    if reference.shape[0] != x.shape[-1]:
        raise DimensionMismatchError(
            f"normalization fitted for {reference.shape[0]} dimensions, data has {x.shape[-1]}"
        )
