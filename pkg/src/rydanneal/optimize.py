"""Gradient and simplex minimizers and the staged annealing-control pipeline.

The quasi-Newton stage uses the BFGS inverse-Hessian update
H_{k+1} = (I - rho s y^T) H (I - rho y s^T) + rho s s^T with central-difference
gradients and a backtracking Armijo line search. The simplex stage is the
classic Nelder-Mead method (reflect 1, expand 2, contract 1/2, shrink 1/2).
The production pipeline chains them quasi-Newton -> simplex -> quasi-Newton,
each stage starting from the previous best.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GRAD_STEP = 1e-6          # central-difference step, scaled by max(1, |x_i|)
ARMIJO_C1 = 1e-4
MAX_BACKTRACKS = 20
PIPELINE_TOL = 1e-4
NM_BUDGET = 300


@dataclass
class OptimizerReport:
    x_best: np.ndarray
    f_best: float
    n_evals: int
    history: list = field(default_factory=list)   # (eval index, f) pairs
    stages: list = field(default_factory=list)    # per-stage summaries
    reason: str = ""

    def running_best(self) -> np.ndarray:
        vals = np.array([f for _, f in self.history])
        return np.minimum.accumulate(vals)


class _CountedObjective:
    """Wraps f with bound clamping, evaluation counting and history."""

    def __init__(self, f, bounds=None):
        self.f = f
        self.bounds = bounds
        self.n_evals = 0
        self.history = []
        self.x_best = None
        self.f_best = np.inf

    def clamp(self, x):
        x = np.asarray(x, dtype=float)
        if self.bounds is None:
            return x
        lo, hi = self.bounds
        return np.clip(x, lo, hi)

    def __call__(self, x):
        x = self.clamp(x)
        val = float(self.f(x))
        self.history.append((self.n_evals, val))
        self.n_evals += 1
        if val < self.f_best:
            self.f_best = val
            self.x_best = x.copy()
        return val


def central_difference_gradient(f, x, step: float = GRAD_STEP) -> np.ndarray:
    """(f(x + h e_i) - f(x - h e_i)) / 2h with h = step * max(1, |x_i|)."""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(len(x)):
        h = step * max(1.0, abs(x[i]))
        up = x.copy()
        dn = x.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (f(up) - f(dn)) / (2.0 * h)
    return grad


def _backtracking_line_search(f, x, fx, direction, grad):
    slope = float(grad @ direction)
    alpha = 1.0
    for _ in range(MAX_BACKTRACKS):
        candidate = x + alpha * direction
        f_new = f(candidate)
        if f_new <= fx + ARMIJO_C1 * alpha * slope:
            return alpha, f_new
        alpha *= 0.5
    return None, None


def quasi_newton_minimize(f, x0, max_iter: int, tol: float = PIPELINE_TOL,
                          bounds=None, grad_step: float = GRAD_STEP) -> OptimizerReport:
    """BFGS with numerically estimated gradients.

    Stops on gradient norm < tol, |change in f| < tol, or max_iter.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    obj = _CountedObjective(f, bounds)
    x = obj.clamp(x0)
    fx = obj(x)
    n = len(x)
    h_inv = np.eye(n)
    grad = central_difference_gradient(obj, x, grad_step)
    reason = "max_iter"
    for _ in range(max_iter):
        gnorm = float(np.linalg.norm(grad))
        if gnorm < tol:
            reason = "gradient"
            break
        direction = -h_inv @ grad
        if float(grad @ direction) >= 0:
            # stale curvature; restart from steepest descent
            h_inv = np.eye(n)
            direction = -grad
        alpha, f_new = _backtracking_line_search(obj, x, fx, direction, grad)
        if alpha is None:
            reason = "line_search"
            break
        x_new = obj.clamp(x + alpha * direction)
        grad_new = central_difference_gradient(obj, x_new, grad_step)
        s = x_new - x
        y = grad_new - grad
        sy = float(y @ s)
        if sy > 1e-12 * max(1.0, float(np.linalg.norm(s)) * float(np.linalg.norm(y))):
            rho = 1.0 / sy
            outer_sy = np.outer(s, y)
            left = np.eye(n) - rho * outer_sy
            h_inv = left @ h_inv @ left.T + rho * np.outer(s, s)
        df = abs(f_new - fx)
        x, fx, grad = x_new, f_new, grad_new
        if df < tol:
            reason = "f_change"
            break
    return OptimizerReport(x_best=obj.x_best, f_best=obj.f_best, n_evals=obj.n_evals,
                           history=obj.history, reason=reason,
                           stages=[{"method": "bfgs", "reason": reason,
                                    "n_evals": obj.n_evals}])


def nelder_mead_minimize(f, x0, max_iter: int, max_fev: int,
                         tol: float = PIPELINE_TOL, bounds=None,
                         initial_step: float = 0.05) -> OptimizerReport:
    """Nelder-Mead simplex with standard coefficients.

    The initial simplex perturbs each coordinate by 5% (0.00025 absolute for
    zero coordinates). Stops when the function-value spread falls below tol
    or a budget runs out.
    """
    if max_iter < 1 or max_fev < 1:
        raise ValueError("budgets must be >= 1")
    obj = _CountedObjective(f, bounds)
    x0 = obj.clamp(x0)
    n = len(x0)
    simplex = [x0.copy()]
    for i in range(n):
        v = x0.copy()
        v[i] = v[i] * (1.0 + initial_step) if v[i] != 0.0 else 0.00025
        simplex.append(v)
    fvals = [obj(v) for v in simplex]
    reason = "max_iter"
    for _ in range(max_iter):
        if obj.n_evals >= max_fev:
            reason = "max_fev"
            break
        order = np.argsort(fvals)
        simplex = [simplex[i] for i in order]
        fvals = [fvals[i] for i in order]
        diam = max(float(np.max(np.abs(v - simplex[0]))) for v in simplex[1:])
        if fvals[-1] - fvals[0] < tol and \
                diam < tol * max(1.0, float(np.max(np.abs(simplex[0])))):
            reason = "spread"
            break
        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]
        reflected = centroid + (centroid - worst)
        f_r = obj(reflected)
        if f_r < fvals[0]:
            expanded = centroid + 2.0 * (centroid - worst)
            f_e = obj(expanded)
            if f_e < f_r:
                simplex[-1], fvals[-1] = expanded, f_e
            else:
                simplex[-1], fvals[-1] = reflected, f_r
        elif f_r < fvals[-2]:
            simplex[-1], fvals[-1] = reflected, f_r
        else:
            if f_r < fvals[-1]:
                contracted = centroid + 0.5 * (reflected - centroid)
            else:
                contracted = centroid + 0.5 * (worst - centroid)
            f_c = obj(contracted)
            if f_c < min(f_r, fvals[-1]):
                simplex[-1], fvals[-1] = contracted, f_c
            else:
                best = simplex[0]
                for i in range(1, n + 1):
                    simplex[i] = best + 0.5 * (simplex[i] - best)
                    fvals[i] = obj(simplex[i])
    return OptimizerReport(x_best=obj.x_best, f_best=obj.f_best, n_evals=obj.n_evals,
                           history=obj.history, reason=reason,
                           stages=[{"method": "nelder_mead", "reason": reason,
                                    "n_evals": obj.n_evals}])


@dataclass(frozen=True)
class PipelineConfig:
    stage1_max_iter: int = 4          # quasi-Newton warm-up (3-6 typical)
    nm_max_iter: int = NM_BUDGET
    nm_max_fev: int = NM_BUDGET
    stage3_max_iter: int = 2          # final quasi-Newton polish
    tol: float = PIPELINE_TOL
    bounds: tuple | None = None
    grad_step: float = GRAD_STEP

    def __post_init__(self):
        if min(self.stage1_max_iter, self.nm_max_iter,
               self.nm_max_fev, self.stage3_max_iter) < 1:
            raise ValueError("all stage budgets must be >= 1")


def bnb_pipeline(f, x0, cfg: PipelineConfig = PipelineConfig()) -> OptimizerReport:
    """Quasi-Newton, then simplex, then quasi-Newton, chaining the best point."""
    history = []
    stages = []
    offset = 0

    def run(stage_fn):
        nonlocal offset
        rep = stage_fn()
        history.extend((i + offset, v) for i, v in rep.history)
        offset += rep.n_evals
        stages.extend(rep.stages)
        return rep

    rep1 = run(lambda: quasi_newton_minimize(
        f, x0, cfg.stage1_max_iter, cfg.tol, cfg.bounds, cfg.grad_step))
    rep2 = run(lambda: nelder_mead_minimize(
        f, rep1.x_best, cfg.nm_max_iter, cfg.nm_max_fev, cfg.tol, cfg.bounds))
    start3 = rep2.x_best if rep2.f_best <= rep1.f_best else rep1.x_best
    rep3 = run(lambda: quasi_newton_minimize(
        f, start3, cfg.stage3_max_iter, cfg.tol, cfg.bounds, cfg.grad_step))

    best = min((rep1, rep2, rep3), key=lambda r: r.f_best)
    return OptimizerReport(x_best=best.x_best, f_best=best.f_best,
                           n_evals=offset, history=history, stages=stages,
                           reason=";".join(s["reason"] for s in stages))
