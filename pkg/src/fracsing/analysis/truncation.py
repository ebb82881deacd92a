"""Truncated singular nonlinearity and the box-constrained functional used for comparison."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..kernel import Field, KernelWeights
from ..optim import spectral_gradient
from ..solver import STAGNATION_PATIENCE, SolverConfig


@dataclass(frozen=True)
class TruncationKit:
    """``g(s) = min((s^+ + shift)^-beta, k)``, its primitive ``Phi`` with ``Phi(1) = 0``, and ``T_tau``.

    With ``shift = 0`` this is the usual truncation ``min(s^-beta, k)`` extended
    by ``k`` to ``s <= 0``. A positive ``shift`` gives the analogous kit for
    the regularized problems, whose quotient is ``(u + shift)^-gamma``.
    """

    k: float
    beta: float
    eps: float
    tau: float = 1.0
    shift: float = 0.0

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"k must be positive, got {self.k}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.shift >= 0:
            raise ValueError(f"shift must be nonnegative, got {self.shift}")

    @classmethod
    def for_comparison(cls, gamma: float, eps: float, shift: float = 0.0, beta: float | None = None,
                       tau: float = 1.0) -> "TruncationKit":
        """Kit with ``k`` comfortably above ``eps^-beta`` (``beta`` defaults to ``gamma``)."""
        beta = gamma if beta is None else beta
        return cls(k=2.0 * eps ** (-beta) + 1.0, beta=beta, eps=eps, tau=tau, shift=shift)

    @property
    def valid_for_comparison(self) -> bool:
        return self.eps ** (-self.beta) < self.k

    @property
    def kink(self) -> float:
        """Point where the power branch meets the constant ``k`` (may be <= 0 when shift > 0)."""
        return self.k ** (-1.0 / self.beta) - self.shift

    def _H(self, t):
        # antiderivative of t^-beta on t > 0
        if self.beta == 1.0:
            return np.log(t)
        return t ** (1.0 - self.beta) / (1.0 - self.beta)

    def g(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            return np.minimum((np.maximum(s, 0.0) + self.shift) ** (-self.beta), self.k)

    def _G(self, s) -> np.ndarray:
        # primitive of g vanishing at 0
        s = np.asarray(s, dtype=float)
        g0 = float(self.g(0.0))
        c = self.kink
        out = np.empty_like(s)
        neg = s <= 0
        out[neg] = g0 * s[neg]
        pos = ~neg
        sp = s[pos]
        if c <= 0:
            out[pos] = self._H(sp + self.shift) - self._H(self.shift)
        else:
            below = sp <= c
            val = np.empty_like(sp)
            val[below] = self.k * sp[below]
            val[~below] = self.k * c + self._H(sp[~below] + self.shift) - self._H(c + self.shift)
            out[pos] = val
        return out

    def Phi(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return self._G(s) - self._G(np.array([1.0]))[0]

    def T(self, s) -> np.ndarray:
        """``T_tau``: clip to ``[-tau, tau]``, odd and nondecreasing."""
        return np.clip(np.asarray(s, dtype=float), -self.tau, self.tau)


@dataclass
class TruncatedResult:
    w: Field
    optimality: float
    iterations: int
    converged: bool


def truncated_minimize(weights: KernelWeights, f: Field, v: Field, kit: TruncationKit,
                       config: SolverConfig, full_output: bool = False):
    """Minimize ``S(phi)/p - sum f Phi(phi) V`` over ``0 <= phi <= v`` by spectral projected gradient."""
    domain = weights.domain
    if f.domain is not domain or v.domain is not domain:
        raise ValueError("domain mismatch between fields and weights")
    if not v.is_nonnegative():
        raise ValueError("upper obstacle v must be nonnegative")
    if not f.is_nonnegative():
        raise ValueError("source f must be nonnegative")
    p = weights.p
    upper = v.interior.copy()
    lower = np.zeros_like(upper)
    load = f.interior * weights.volume
    if not upper.any() or not load.any():
        # the box is a point, or the seminorm alone is minimized at 0
        res = TruncatedResult(Field.zeros(domain), 0.0, 0, True)
        return res if full_output else res.w
    opt = spectral_gradient(
        lambda x: weights.energy(x) / p - load @ kit.Phi(x),
        lambda x: weights.gradient(x) - load * kit.g(x),
        upper, tol=config.inner_tol, max_iter=config.max_inner_iters,
        lower=lower, upper=upper, patience=STAGNATION_PATIENCE if p < 2 else None,
    )
    res = TruncatedResult(Field.from_interior(domain, opt.x), opt.optimality, opt.iterations,
                          opt.converged)
    return res if full_output else res.w

