"""Exponent bookkeeping for the singular problem."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from ..kernel import check_exponents


@dataclass(frozen=True)
class ExponentTable:
    p: float
    s: float
    N: int
    gamma: float
    q: float
    critical: float
    critical_dual: float
    m: float
    m_conjugate: float | None
    r: float | None
    boundary: float

    @property
    def coercivity_ratio(self) -> float | None:
        """``p*_s / (p m')``; below one whenever gamma < 1."""
        if self.m_conjugate is None or math.isinf(self.m_conjugate):
            return None
        return self.critical / (self.p * self.m_conjugate)

    def identity_defects(self) -> dict[str, float]:
        """Relative defects of the algebraic identities, each computed along an independent route."""
        out = {}
        # dual exponent: formula vs the Hoelder conjugate of p*_s
        conj = self.critical / (self.critical - 1.0)
        out["critical_dual"] = abs(self.critical_dual - conj) / conj
        if self.gamma < 1:
            out["m_conjugate"] = abs((1.0 - self.gamma) * self.m_conjugate - self.critical) / self.critical
        if self.r is not None and math.isfinite(self.r):
            # r / (p - 1) is the fractional Sobolev exponent of q at order sp
            lhs = (self.p - 1.0) / self.r
            rhs = 1.0 / self.q - self.s * self.p / self.N
            out["r"] = abs(lhs - rhs) / abs(rhs)
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["coercivity_ratio"] = self.coercivity_ratio
        return d


def exponents(p: float, s: float, N: int, gamma: float, q: float = 1.0) -> ExponentTable:
    """Derived exponents for source integrability ``q``.

    ``r`` is ``inf`` for ``q > N/(sp)`` and ``None`` at the excluded value
    ``q = N/(sp)``. ``m_conjugate`` is ``inf`` at ``gamma = 1`` and ``None`` for
    ``gamma > 1`` where ``m < 1``.
    """
    check_exponents(N, s, p)
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if not q >= 1:
        raise ValueError(f"source integrability q must be at least 1, got {q}")
    sp = s * p
    critical = N * p / (N - sp)
    critical_dual = N * p / (N * (p - 1) + sp)
    m = N * p / (N * (p - 1) + sp + gamma * (N - sp))
    if gamma < 1:
        m_conj = m / (m - 1.0)
    elif gamma == 1:
        m_conj = math.inf
    else:
        m_conj = None
    threshold = N / sp
    if q < threshold:
        r = N * (p - 1) * q / (N - sp * q)
    elif q > threshold:
        r = math.inf
    else:
        r = None
    return ExponentTable(p, s, N, gamma, q, critical, critical_dual, m, m_conj, r,
                         max((gamma + p - 1) / p, 1.0))
