"""Gradient descent with Barzilai-Borwein steps and nonmonotone Armijo backtracking.

Optional box constraints turn it into the spectral projected gradient method;
without bounds it is plain gradient descent with a spectral step length.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    optimality: float
    iterations: int
    evaluations: int
    converged: bool
    message: str


def projected_optimality(x: np.ndarray, g: np.ndarray, lower=None, upper=None) -> float:
    """Sup norm of the first-order defect.

    Free coordinates contribute ``|g_i|``; a coordinate sitting on a bound only
    contributes the part of ``g_i`` pointing into the feasible box.
    """
    if lower is None and upper is None:
        return float(np.max(np.abs(g), initial=0.0))
    chi = np.abs(g)
    if lower is not None:
        at_lo = x <= lower
        chi = np.where(at_lo, np.maximum(-g, 0.0), chi)
    if upper is not None:
        at_hi = x >= upper
        chi = np.where(at_hi, np.maximum(g, 0.0), chi)
        if lower is not None:
            chi = np.where(at_lo & at_hi, 0.0, chi)
    return float(np.max(chi, initial=0.0))


def spectral_gradient(
    fun: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    *,
    tol: float,
    max_iter: int,
    lower: np.ndarray | None = None,
    upper: np.ndarray | None = None,
    memory: int = 10,
    sufficient_decrease: float = 1e-4,
    patience: int | None = None,
) -> MinimizeResult:
    """Minimize ``fun`` until the projected optimality drops to ``tol``.

    With ``patience`` the run also stops (unconverged) once the best optimality
    has not halved for that many iterations, which happens when energy
    differences fall below roundoff before the gradient reaches ``tol``.
    """

    def project(z):
        if lower is not None:
            z = np.maximum(z, lower)
        if upper is not None:
            z = np.minimum(z, upper)
        return z

    x = project(np.array(x0, dtype=float))
    f = fun(x)
    g = grad(x)
    n_eval = 1
    history = [f]
    opt = projected_optimality(x, g, lower, upper)
    best = (opt, x, f)
    checkpoint, last_gain = opt, 0
    step = 1.0 / max(opt, 1e-300)
    it = 0
    message = "iteration budget exhausted"
    while True:
        if opt <= tol:
            message = "first-order tolerance reached"
            break
        if patience is not None and it - last_gain >= patience:
            message = "stagnated: energy decrease below roundoff"
            break
        if it >= max_iter:
            break
        it += 1
        d = project(x - step * g) - x
        gtd = float(g @ d)
        if gtd >= 0.0:
            # the step collapsed below roundoff; nothing more to gain
            message = "no descent direction at working precision"
            break
        f_ref = max(history[-memory:])
        lam = 1.0
        while True:
            x_new = x + lam * d
            f_new = fun(x_new)
            n_eval += 1
            if f_new <= f_ref + sufficient_decrease * lam * gtd:
                break
            # energy differences below roundoff cannot certify decrease
            if f_new - f_ref <= 1e-13 * max(abs(f_ref), abs(f_new)):
                break
            denom = f_new - f - lam * gtd
            trial = -0.5 * lam * lam * gtd / denom if denom > 0 else 0.5 * lam
            lam = trial if 0.1 * lam <= trial <= 0.9 * lam else 0.5 * lam
            if lam < 1e-20:
                break
        g_new = grad(x_new)
        s = x_new - x
        y = g_new - g
        sty = float(s @ y)
        step = float(s @ s) / sty if sty > 0 else 1e30
        step = min(max(step, 1e-30), 1e30)
        x, f, g = x_new, f_new, g_new
        history.append(f)
        opt = projected_optimality(x, g, lower, upper)
        if opt < best[0]:
            best = (opt, x, f)
        if opt <= 0.5 * checkpoint:
            checkpoint, last_gain = opt, it
    converged = opt <= tol
    if not converged:
        opt, x, f = best
    return MinimizeResult(x, float(f), float(opt), it, n_eval, converged, message)
