from dataclasses import dataclass, field
from typing import Any, List, Optional

from models.graph import Graph
from models.params import ParamBlocks, edge_set_of


@dataclass
class FitResult:
    """Solution of one regularized score-matching problem and solver diagnostics.

    Args:
        theta (ParamBlocks): estimated parameters; zero groups are exact zeros.
        lam (float): regularization level.
        solver (str): "cd", "admm" or "ista".
        iterations (int): sweeps or iterations used.
        kkt (float): optimality residual at ``theta``.
        converged (bool): stopping rule met before the iteration cap.
        objective (float): penalized objective at ``theta``.
        history (List[float]): per-iteration objective or change values.
        state (Any): solver state usable as a warm start.
        elapsed (float): wall-clock seconds.
    """

    theta: ParamBlocks
    lam: float
    solver: str
    iterations: int = 0
    kkt: float = 0.0
    converged: bool = True
    objective: float = float("nan")
    history: List[float] = field(default_factory=list)
    state: Optional[Any] = None
    elapsed: float = 0.0

    @property
    def edges(self) -> Graph:
        return edge_set_of(self.theta)

    def summary(self) -> dict:
        return {
            "lambda": self.lam,
            "solver": self.solver,
            "iterations": self.iterations,
            "kkt_residual": self.kkt,
            "converged": self.converged,
            "objective": self.objective,
            "edge_count": len(self.edges),
            "elapsed": self.elapsed,
        }
