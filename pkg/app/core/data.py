"""Dataset sources: Gaussian generator, CSV ingestion, subsampling and a surrogate arrhythmia set"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union
import logging
import math

import numpy as np
import pandas as pd

from app.core.config import CsvSource, GaussianSource, SurrogateSource
from app.core.errors import CovarianceError, CsvFormatError, DimensionMismatchError, EmptyClassError
from app.core.types import NEGATIVE, POSITIVE, Dataset

logger = logging.getLogger(__name__)

MISSING_TOKENS = ("?", "")
SURROGATE_SEPARATION = 4.0


@dataclass(frozen=True)
class GaussianSpec:
    """Two multivariate normal classes; identity covariances when omitted"""
    mean_pos: Sequence[float]
    mean_neg: Sequence[float]
    n_pos: int
    n_neg: int
    seed: int = 0
    cov_pos: Optional[Sequence[Sequence[float]]] = None
    cov_neg: Optional[Sequence[Sequence[float]]] = None

    @classmethod
    def from_source(cls, source: GaussianSource, seed_offset: int = 0) -> "GaussianSpec":
        return cls(source.mean_pos, source.mean_neg, source.n_pos, source.n_neg,
                   source.seed + seed_offset, source.cov_pos, source.cov_neg)


def _cholesky(cov: Optional[Sequence[Sequence[float]]], p: int, name: str) -> np.ndarray:
    if cov is None:
        return np.eye(p)
    matrix = np.asarray(cov, dtype=float)
    if matrix.shape != (p, p):
        raise DimensionMismatchError(f"{name} has shape {matrix.shape}, expected ({p}, {p})")
    if not np.allclose(matrix, matrix.T):
        raise CovarianceError(f"{name} is not symmetric")
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError as e:
        raise CovarianceError(f"{name} is not positive definite") from e


def generate_gaussians(spec: GaussianSpec) -> Dataset:
    """Sample both classes with a seeded PCG64 stream, positives first"""
    mean_pos = np.asarray(spec.mean_pos, dtype=float)
    mean_neg = np.asarray(spec.mean_neg, dtype=float)
    if mean_pos.shape != mean_neg.shape or mean_pos.ndim != 1:
        raise DimensionMismatchError("Class means must be vectors of equal length")
    if spec.n_pos < 1 or spec.n_neg < 1:
        raise EmptyClassError(f"Both class sizes must be positive, got ({spec.n_pos}, {spec.n_neg})")
    p = mean_pos.size
    chol_pos = _cholesky(spec.cov_pos, p, "cov_pos")
    chol_neg = _cholesky(spec.cov_neg, p, "cov_neg")

    rng = np.random.default_rng(spec.seed)
    positives = mean_pos + rng.standard_normal((spec.n_pos, p)) @ chol_pos.T
    negatives = mean_neg + rng.standard_normal((spec.n_neg, p)) @ chol_neg.T
    return Dataset.from_classes(positives, negatives)


def _resolve_column(column: int, width: int) -> int:
    index = width - 1 if column == 0 else column - 1
    if not 0 <= index < width:
        raise CsvFormatError(f"Column {column} outside a table of {width} columns")
    return index


def read_csv_dataset(path: Union[str, Path], label_column: int = 0, positive_value: str = "1",
                     feature_columns: Optional[Tuple[int, int]] = None,
                     header: bool = False) -> Tuple[Dataset, int]:
    """Load a labeled table and return the dataset plus the number of rows dropped for missing values"""
    path = Path(path)
    if not path.exists():
        raise CsvFormatError(f"CSV file not found: {path}")
    try:
        df = pd.read_csv(path, header=0 if header else None, dtype=str,
                         keep_default_na=False, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise CsvFormatError(f"Malformed CSV {path}: {e}") from e

    width = df.shape[1]
    label_idx = _resolve_column(label_column, width)
    if feature_columns is None:
        feature_idx = [j for j in range(width) if j != label_idx]
    else:
        first, last = feature_columns
        if first > last:
            raise CsvFormatError(f"Feature column range {feature_columns} is empty")
        feature_idx = list(range(_resolve_column(first, width), _resolve_column(last, width) + 1))
    if label_idx in feature_idx:
        raise CsvFormatError("The label column overlaps the feature columns")

    selected = df.iloc[:, feature_idx + [label_idx]].apply(lambda column: column.str.strip())
    missing = selected.isna().any(axis=1) | selected.isin(MISSING_TOKENS).any(axis=1)
    dropped = int(missing.sum())
    kept = selected[~missing]
    if kept.empty:
        raise CsvFormatError(f"No complete rows left in {path} after dropping {dropped}")

    features = kept.iloc[:, :-1].apply(pd.to_numeric, errors="coerce")
    bad = features.isna().any(axis=1)
    if bad.any():
        row = int(bad.idxmax()) + (2 if header else 1)
        raise CsvFormatError(f"Non-numeric feature value in {path}, line {row}")
    labels = np.where(kept.iloc[:, -1].to_numpy() == positive_value, POSITIVE, NEGATIVE)
    if dropped:
        logger.info(f"Dropped {dropped} rows with missing values from {path}")
    logger.info(f"Loaded {len(kept)} rows, {len(feature_idx)} features from {path}")
    return Dataset(features.to_numpy(dtype=float), labels), dropped


def load_csv(path: Union[str, Path], label_column: int = 0, positive_value: str = "1",
             feature_columns: Optional[Tuple[int, int]] = None, header: bool = False) -> Dataset:
    """1-based columns; label 0 means the last column; tokens other than ``positive_value`` are negative"""
    return read_csv_dataset(path, label_column, positive_value, feature_columns, header)[0]


def write_csv(data: Dataset, path: Union[str, Path]) -> None:
    """Features with 17 significant digits, then the +1/-1 label as the last column"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame(data.X)
    df["label"] = data.y
    df.to_csv(path, header=False, index=False, float_format="%.17g")


def subsample(data: Dataset, fraction: float, seed: int,
              target_counts: Optional[Tuple[int, int]] = None) -> Dataset:
    """Draw ceil(fraction * class size) points per class without replacement, keeping input order"""
    if not 0 < fraction <= 1:
        raise ValueError(f"Subsample fraction must lie in (0, 1], got {fraction}")
    rng = np.random.default_rng(seed)
    keep = []
    for position, label in enumerate((POSITIVE, NEGATIVE)):
        idx = data.indices_of(label)
        count = target_counts[position] if target_counts else math.ceil(fraction * idx.size)
        if count < 1:
            raise EmptyClassError(f"Subsample leaves class {label:+d} empty")
        if count > idx.size:
            raise ValueError(f"Cannot draw {count} points from a class of {idx.size}")
        keep.append(rng.choice(idx, count, replace=False))
    return data.subset(np.sort(np.concatenate(keep)))


def make_surrogate_arrhythmia(seed: int = 0, n_pos: int = 37, n_neg: int = 49, p: int = 60) -> Dataset:
    """Stand-in with the shape of the subsampled arrhythmia table for runs without the real file

    Every column is an affine image of one latent class factor (positives around -4, negatives around +4),
    so the table carries ``p`` strongly correlated features but no spare dimensions to shatter the labels.
    """
    rng = np.random.default_rng(seed)
    loadings = rng.uniform(0.5, 1.5, size=p) * rng.choice([-1.0, 1.0], size=p)
    offsets = rng.normal(0.0, 1.0, size=p)
    latent = generate_gaussians(GaussianSpec([-SURROGATE_SEPARATION], [SURROGATE_SEPARATION], n_pos, n_neg,
                                             seed=seed + 1))
    X = offsets + latent.X * loadings
    return Dataset(X, latent.y.copy())


def load_dataset(source: Union[GaussianSource, CsvSource, SurrogateSource], seed_offset: int = 0) -> Dataset:
    """Materialize a configured data source"""
    if isinstance(source, GaussianSource):
        return generate_gaussians(GaussianSpec.from_source(source, seed_offset))
    if isinstance(source, SurrogateSource):
        return make_surrogate_arrhythmia(source.seed + seed_offset, source.n_pos, source.n_neg, source.p)
    if isinstance(source, CsvSource):
        data = load_csv(source.path, source.label_column, source.positive_value,
                        source.feature_columns, source.header)
        if source.subsample_fraction < 1 or source.target_counts:
            data = subsample(data, source.subsample_fraction, source.subsample_seed + seed_offset,
                             source.target_counts)
        logger.info(f"CSV source: {data.n_pos} positives, {data.n_neg} negatives, {data.p} features")
        return data
    raise ValueError(f"Unknown data source: {type(source).__name__}")
