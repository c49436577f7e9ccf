"""The 19 engineered statistical features of a column, plus z-score scaling.

Conventions (frozen by the test suite):
  - numeric characters are Unicode decimal digits, alphabetic are Unicode
    letters, special is anything that is neither letter, digit, nor whitespace;
  - words are maximal whitespace-separated runs;
  - entropy is base-2 Shannon entropy of the distinct-value frequencies;
  - std/skewness/kurtosis are population moments (kurtosis is excess);
  - zero-variance length distributions give skewness = kurtosis = 0;
  - mode ties resolve to the smallest length.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .core import ColumnInstance
from .errors import ConfigError

FEATURE_NAMES = (
    "std_numeric_chars",
    "std_alpha_chars",
    "entropy",
    "std_special_chars",
    "std_words",
    "mean_words",
    "mean_numeric_chars",
    "min_value_length",
    "kurtosis_length",
    "mean_special_chars",
    "number_of_values",
    "frac_cells_alpha",
    "frac_cells_numeric",
    "sum_length",
    "max_value_length",
    "skewness_length",
    "mean_alpha_chars",
    "median_length",
    "mode_length",
)

N_FEATURES = len(FEATURE_NAMES)

# Human-readable labels in the same order, for reports.
FEATURE_LABELS = (
    "Std of # of Numeric Characters in Cells",
    "Std of # of Alphabetic Characters in Cells",
    "Entropy",
    "Std of # of Special Characters in Cells",
    "Std of # of Words in Cells",
    "Mean # Words in Cells",
    "Mean # of Numeric Characters in Cells",
    "Minimum Value Length",
    "Kurtosis of the Length of Values",
    "Mean # Special Characters in Cells",
    "Number of Values",
    "Fraction of Cells with Alphabetical Characters",
    "Fraction of Cells with Numeric Characters",
    "Sum of the Length of Values",
    "Maximum Value Length",
    "Skewness of the Length of Values",
    "Mean # Alphabetic Characters in Cells",
    "Median Length of Values",
    "Mode Length of Values",
)


def _char_counts(value: str):
    numeric = alpha = special = 0
    for ch in value:
        if ch.isdecimal():
            numeric += 1
        elif ch.isalpha():
            alpha += 1
        elif not ch.isspace():
            special += 1
    return numeric, alpha, special


def _skew_kurtosis(x: np.ndarray):
    m2 = np.mean((x - x.mean()) ** 2)
    if m2 == 0.0:
        return 0.0, 0.0
    centered = x - x.mean()
    skew = np.mean(centered**3) / m2**1.5
    kurt = np.mean(centered**4) / m2**2 - 3.0
    return float(skew), float(kurt)


def extract_features(instance: ColumnInstance) -> np.ndarray:
    """Compute the 19 features of one column, in FEATURE_NAMES order."""
    values = instance.values
    n = len(values)

    counts = np.array([_char_counts(v) for v in values], dtype=np.float64)
    numeric, alpha, special = counts[:, 0], counts[:, 1], counts[:, 2]
    words = np.array([len(v.split()) for v in values], dtype=np.float64)
    lengths = np.array([len(v) for v in values], dtype=np.float64)

    freqs = np.array(list(Counter(values).values()), dtype=np.float64) / n
    entropy = float(-(freqs * np.log2(freqs)).sum()) if len(freqs) > 1 else 0.0

    skew, kurt = _skew_kurtosis(lengths)
    length_counter = Counter(len(v) for v in values)
    max_count = max(length_counter.values())
    mode_length = min(L for L, c in length_counter.items() if c == max_count)

    out = np.array(
        [
            numeric.std(),
            alpha.std(),
            entropy,
            special.std(),
            words.std(),
            words.mean(),
            numeric.mean(),
            lengths.min(),
            kurt,
            special.mean(),
            float(n),
            float(np.count_nonzero(alpha > 0)) / n,
            float(np.count_nonzero(numeric > 0)) / n,
            lengths.sum(),
            lengths.max(),
            skew,
            alpha.mean(),
            float(np.median(lengths)),
            float(mode_length),
        ],
        dtype=np.float64,
    )
    assert np.all(np.isfinite(out))
    return out


@dataclass(frozen=True)
class FeatureScaler:
    """Per-feature z-scoring with statistics fitted on training columns.

    Population std; a zero std is replaced by 1 so constant features pass
    through centered.
    """

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, feature_rows) -> "FeatureScaler":
        rows = np.asarray(feature_rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] == 0:
            raise ConfigError("scaler needs at least one feature row")
        mean = rows.mean(axis=0)
        std = rows.std(axis=0)
        std = np.where(std == 0.0, 1.0, std)
        return cls(mean=mean, std=std)

    def transform(self, v: np.ndarray) -> np.ndarray:
        return (np.asarray(v, dtype=np.float64) - self.mean) / self.std

    def inverse_transform(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=np.float64) * self.std + self.mean
