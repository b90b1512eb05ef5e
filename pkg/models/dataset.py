from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from sklearn.model_selection import train_test_split
from sklearn.preprocessing import StandardScaler

from models.errors import DomainError, EmptyDatasetError


class Support(str, Enum):
    REAL_LINE = "real_line"
    UNIT_CUBE = "unit_cube"


@dataclass(frozen=True)
class Dataset:
    """n x d sample matrix with its support.

    Args:
        values (np.ndarray): samples, one row per observation.
        support (Support): ``REAL_LINE`` or ``UNIT_CUBE``.
        standardized (bool): columns have mean 0 and variance 1 (ddof=0).
    """

    values: np.ndarray
    support: Support = Support.REAL_LINE
    standardized: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError(f"Dataset needs a 2-d matrix, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DomainError("Dataset contains non-finite entries")
        support = Support(self.support)
        if support == Support.UNIT_CUBE and values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise DomainError(f"Unit-cube data has entries in [{values.min()}, {values.max()}]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "support", support)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def require_samples(self) -> None:
        if self.n == 0:
            raise EmptyDatasetError("Dataset has no samples")

    def standardize(self) -> "Dataset":
        """Centers and scales every column to unit (population) variance."""
        self.require_samples()
        if self.support != Support.REAL_LINE:
            raise DomainError("Only real-line data are standardized")
        scaled = StandardScaler().fit_transform(self.values)
        return Dataset(scaled, self.support, standardized=True)

    def subset(self, rows: np.ndarray) -> "Dataset":
        return Dataset(self.values[rows], self.support, standardized=False)

    def split(self, holdout: float, seed: Optional[int] = None) -> Tuple["Dataset", "Dataset"]:
        """Random train/holdout split; ``holdout`` is a fraction or a row count."""
        holdout = holdout if holdout < 1 else int(holdout)
        train_rows, test_rows = train_test_split(np.arange(self.n), test_size=holdout, random_state=seed)
        return self.subset(np.sort(train_rows)), self.subset(np.sort(test_rows))
