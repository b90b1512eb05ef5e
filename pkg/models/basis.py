from dataclasses import dataclass
from enum import Enum
from typing import Optional


class BasisKind(str, Enum):
    GAUSSIAN = "gaussian"
    LEGENDRE = "legendre"


@dataclass(frozen=True)
class BasisSpec:
    """Sufficient-statistic basis of a pairwise exponential family.

    ``GAUSSIAN`` is the family with phi_ii = -x_i^2 / 2 and phi_ij = -x_i x_j,
    whose natural parameter is the precision matrix. ``LEGENDRE`` is the
    truncated tensor-product Legendre family on the unit cube: degrees 1..m1 for
    vertices and an m2 x m2 grid of products for edges.

    Args:
        kind (BasisKind): family.
        m1 (Optional[int]): univariate truncation, legendre only.
        m2 (Optional[int]): bivariate truncation per axis, legendre only.
    """

    kind: BasisKind = BasisKind.GAUSSIAN
    m1: Optional[int] = None
    m2: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", BasisKind(self.kind))
        if self.kind == BasisKind.LEGENDRE:
            if self.m1 is None or self.m2 is None:
                raise ValueError("Legendre basis needs both m1 and m2")
            if self.m1 < 1 or self.m2 < 1:
                raise ValueError(f"Invalid truncation: m1={self.m1}, m2={self.m2}")
        elif self.m1 is not None or self.m2 is not None:
            raise ValueError("Gaussian basis takes no truncation parameters")

    @classmethod
    def gaussian(cls) -> "BasisSpec":
        return cls(BasisKind.GAUSSIAN)

    @classmethod
    def legendre(cls, m1: int, m2: int) -> "BasisSpec":
        return cls(BasisKind.LEGENDRE, m1, m2)

    @property
    def is_gaussian(self) -> bool:
        return self.kind == BasisKind.GAUSSIAN

    @property
    def vertex_dim(self) -> int:
        return 1 if self.is_gaussian else self.m1

    @property
    def edge_dim(self) -> int:
        return 1 if self.is_gaussian else self.m2 * self.m2

    @property
    def edge_weight(self) -> float:
        # ||Omega||_1 counts every off-diagonal entry twice
        return 2.0 if self.is_gaussian else 1.0

    def column_dim(self, d: int) -> int:
        """Length p_i of a column theta_{.,i}."""
        return self.vertex_dim + (d - 1) * self.edge_dim

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value}
        if not self.is_gaussian:
            out.update(m1=self.m1, m2=self.m2)
        return out

    @classmethod
    def from_dict(cls, payload: dict) -> "BasisSpec":
        return cls(BasisKind(payload["kind"]), payload.get("m1"), payload.get("m2"))

    def __str__(self) -> str:
        if self.is_gaussian:
            return "gaussian"
        return f"legendre(m1={self.m1}, m2={self.m2})"
