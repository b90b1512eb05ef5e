# Copyright 2022 solo-learn development team.

# Permission is hereby granted, free of charge, to any person obtaining a copy of
# this software and associated documentation files (the "Software"), to deal in
# the Software without restriction, including without limitation the rights to use,
# copy, modify, merge, publish, distribute, sublicense, and/or sell copies of the
# Software, and to permit persons to whom the Software is furnished to do so,
# subject to the following conditions:

# The above copyright notice and this permission notice shall be included in all copies
# or substantial portions of the Software.

# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR IMPLIED,
# INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY, FITNESS FOR A PARTICULAR
# PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE AUTHORS OR COPYRIGHT HOLDERS BE LIABLE
# FOR ANY CLAIM, DAMAGES OR OTHER LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR
# OTHERWISE, ARISING FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER
# DEALINGS IN THE SOFTWARE.

# Optimizer skeleton follows the LARS optimizer of Pytorch Lightning Bolts
# (https://github.com/PyTorchLightning/lightning-bolts/blob/master/pl_bolts/optimizers/lars.py)

import logging
import time
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.linalg
import torch
from sklearn.exceptions import ConvergenceWarning
from torch.optim.optimizer import Optimizer, required

from data_modules.statistics import Stats, as_column_stats
from models.errors import DimensionMismatchError
from models.params import ParamBlocks
from opt_utils.admm import ColumnProblem
from opt_utils.result import FitResult

log = logging.getLogger(__name__)


class GroupISTA(Optimizer):
    """Proximal gradient descent with a weighted group-lasso penalty.

    Every step is a plain gradient step followed by group soft-thresholding,

        p <- S~(p - lr * grad, lr * lam * w_g)   for every group g.

    Args:
        params (iterable): iterable of parameters to optimize or dicts defining
            parameter groups
        lr (float): step size, at most 1 / L for the Lipschitz constant L of the gradient
        lam (float): regularization level (default: 0)
        group_index (torch.Tensor): group id of every entry of the (flattened) parameter
        group_weights (torch.Tensor): penalty weight of every group
    Example:
        >>> theta = torch.zeros(4, dtype=torch.float64, requires_grad=True)
        >>> optimizer = GroupISTA([theta], lr=0.1, lam=0.5,
        ...                       group_index=torch.tensor([0, 0, 1, 1]),
        ...                       group_weights=torch.ones(2, dtype=torch.float64))
        >>> optimizer.zero_grad()
        >>> ((theta - 1.0) ** 2).sum().backward()
        >>> optimizer.step()
    """

    def __init__(self, params, lr=required, lam=0.0, group_index=None, group_weights=None):
        if lr is not required and lr <= 0.0:
            raise ValueError(f"Invalid learning rate: {lr}")
        if lam < 0.0:
            raise ValueError(f"Invalid lambda value: {lam}")
        if group_index is None or group_weights is None:
            raise ValueError("GroupISTA needs group_index and group_weights")
        if torch.any(group_weights < 0):
            raise ValueError("Group weights must be nonnegative")

        defaults = dict(lr=lr, lam=lam, group_index=group_index, group_weights=group_weights)
        super().__init__(params, defaults)

    def __setstate__(self, state):
        super().__setstate__(state)

        for group in self.param_groups:
            group.setdefault("lam", 0.0)

    @torch.no_grad()
    def step(self, closure=None):
        """Performs a single proximal gradient step.
        Args:
            closure (callable, optional): A closure that reevaluates the smooth
                loss and returns it.
        """
        loss = None
        if closure is not None:
            with torch.enable_grad():
                loss = closure()

        for group in self.param_groups:
            lr = group["lr"]
            index = group["group_index"]
            thresholds = lr * group["lam"] * group["group_weights"]

            for p in group["params"]:
                if p.grad is None:
                    continue

                p.add_(p.grad, alpha=-lr)
                flat = p.view(-1)
                norms = torch.zeros_like(thresholds).index_add_(0, index, flat * flat).sqrt_()
                keep = norms > thresholds
                factor = torch.where(keep, 1.0 - thresholds / torch.where(keep, norms, torch.ones_like(norms)),
                                     torch.zeros_like(norms))
                # zero groups become exact zeros
                flat.copy_(torch.where(factor[index] > 0, flat * factor[index], torch.zeros_like(flat)))

        return loss


@dataclass
class IstaConfig:
    """Options of ``ista_fit``.

    Args:
        lam (float): regularization level.
        max_iters (int): iteration cap.
        rel_tol (float): stop when sum|d theta| / max(sum|theta|, 1) drops below it.
        penalize_vertices (bool): include vertex groups in the penalty.
        step (Optional[float]): step size; 1 / L when not given.
    """

    lam: float = 0.1
    max_iters: int = 1_000_000
    rel_tol: float = 1e-10
    penalize_vertices: bool = True
    step: Optional[float] = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"Invalid lambda: {self.lam}")
        if self.rel_tol <= 0:
            raise ValueError(f"Invalid rel_tol: {self.rel_tol}")
        if self.max_iters < 1:
            raise ValueError(f"Invalid max_iters: {self.max_iters}")
        if self.step is not None and self.step <= 0:
            raise ValueError(f"Invalid step: {self.step}")


def lipschitz_constant(stats: Stats) -> float:
    """Upper bound on the Lipschitz constant of the score gradient in the shared parameters.

    Every entry of theta appears in at most two columns, hence the factor 2.
    """
    stats = as_column_stats(stats)
    top = max(float(scipy.linalg.eigvalsh(s.gamma, subset_by_index=[s.dim - 1, s.dim - 1])[0]) for s in stats)
    return 2.0 * max(top, 0.0)


def ista_fit(stats: Stats, cfg: IstaConfig, warm: Optional[Union[ParamBlocks, np.ndarray]] = None) -> FitResult:
    """Proximal gradient descent on the shared parameter vector.

    Args:
        stats (Stats): column statistics (Gaussian statistics are converted).
        cfg (IstaConfig): solver options.
        warm (Optional[Union[ParamBlocks, np.ndarray]]): starting parameters (zeros by default).

    Returns:
        FitResult: theta with exact group zeros; ``state`` is the flat parameter vector.
    """
    start = time.perf_counter()
    stats = as_column_stats(stats)
    problem = ColumnProblem(stats, cfg.penalize_vertices)
    layout = problem.layout

    if warm is None:
        init = np.zeros(layout.size)
    else:
        init = warm.to_vector() if isinstance(warm, ParamBlocks) else np.asarray(warm, dtype=float)
        if init.shape != (layout.size,):
            raise DimensionMismatchError(f"Warm start of shape {init.shape}, expected {(layout.size,)}")

    lr = cfg.step
    if lr is None:
        lipschitz = lipschitz_constant(stats)
        lr = 1.0 / lipschitz if lipschitz > 0 else 1.0

    theta = torch.tensor(init, dtype=torch.float64, requires_grad=True)
    index = torch.as_tensor(problem.index)
    gammas = torch.as_tensor(problem.gammas)
    kvecs = torch.as_tensor(problem.kvecs)
    optimizer = GroupISTA(
        [theta],
        lr=lr,
        lam=cfg.lam,
        group_index=torch.as_tensor(layout.group_index),
        group_weights=torch.as_tensor(problem.weights, dtype=torch.float64),
    )

    def closure():
        optimizer.zero_grad()
        cols = theta[index]
        loss = 0.5 * torch.einsum("ip,ipq,iq->", cols, gammas, cols) + (kvecs * cols).sum()
        loss.backward()
        return loss

    history = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        previous = theta.detach().clone()
        optimizer.step(closure)
        current = theta.detach()
        change = float((current - previous).abs().sum())
        scale = max(float(current.abs().sum()), 1.0)
        history.append(change / scale)
        if change < cfg.rel_tol * scale:
            converged = True
            break

    if not converged:
        warnings.warn(f"ISTA did not converge in {cfg.max_iters} iterations (lambda={cfg.lam})", ConvergenceWarning)
    z = theta.detach().numpy().copy()
    kkt = problem.kkt(z, cfg.lam)
    log.debug("ista_fit lambda=%.4g iterations=%d kkt=%.2e", cfg.lam, it, kkt)
    return FitResult(
        theta=ParamBlocks.from_vector(z, layout),
        lam=cfg.lam,
        solver="ista",
        iterations=it,
        kkt=kkt,
        converged=converged,
        objective=problem.objective(z, cfg.lam),
        history=history,
        state=z,
        elapsed=time.perf_counter() - start,
    )
