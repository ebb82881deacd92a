"""Elementary inequalities behind the a-priori estimates, checked on samples and on solves."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..kernel import Field, KernelWeights, apply_operator, seminorm_p, signed_power


@dataclass(frozen=True)
class PowerGapReport:
    q: float
    eps: float
    samples: int
    violations: int
    min_slack: float


def lemma_dino_check(q: float, eps: float, samples: int = 100_000,
                     seed: int | None = 0) -> PowerGapReport:
    """Sample ``|x^q - y^q| >= eps^(q-1) |x - y|`` on ``[0, 10 eps]^2`` with ``max(x, y) >= eps``.

    Pairs are drawn uniformly and rejected when both coordinates fall below
    ``eps``. A pair counts as a violation only when the defect exceeds the
    roundoff scale of the two powers.
    """
    if not q > 1:
        raise ValueError(f"q must exceed 1, got {q}")
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    rng = np.random.default_rng(seed)
    chunks, have = [], 0
    while have < samples:
        xy = rng.uniform(0.0, 10.0 * eps, size=(max(samples - have, 1) * 102 // 100 + 16, 2))
        xy = xy[xy.max(axis=1) >= eps]
        chunks.append(xy)
        have += len(xy)
    x, y = np.concatenate(chunks)[:samples].T
    xq, yq = x ** q, y ** q
    slack = np.abs(xq - yq) - eps ** (q - 1.0) * np.abs(x - y)
    roundoff = 8 * np.finfo(float).eps * (xq + yq)
    violations = int(np.count_nonzero(slack < -roundoff))
    return PowerGapReport(q, eps, int(samples), violations,
                          float(slack.min()) if samples else 0.0)


@dataclass(frozen=True)
class ConvexMap:
    """A convex C^1 map with ``phi(0) = 0`` together with its derivative."""

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]

    def __call__(self, t):
        return self.value(t)

    @classmethod
    def identity(cls) -> "ConvexMap":
        return cls("identity", lambda t: np.asarray(t, dtype=float), lambda t: np.ones_like(t, dtype=float))

    @classmethod
    def power(cls, q: float) -> "ConvexMap":
        """``t^q`` on ``t >= 0``; convex only for ``q >= 1``, which the check enforces."""
        return cls(f"power({q:g})",
                   lambda t: np.maximum(t, 0.0) ** q,
                   lambda t: q * np.maximum(t, 0.0) ** (q - 1.0))

    @classmethod
    def exponential(cls, a: float) -> "ConvexMap":
        """``exp(a t) - 1``, convex for every ``a >= 0``."""
        return cls(f"exponential({a:g})",
                   lambda t: np.expm1(a * np.asarray(t, dtype=float)),
                   lambda t: a * np.exp(a * np.asarray(t, dtype=float)))


def _assert_convex(phi: ConvexMap, lo: float, hi: float, points: int = 257) -> None:
    if float(np.asarray(phi(np.array([0.0])))[0]) != 0.0:
        raise ValueError(f"{phi.name} does not vanish at 0")
    if hi <= lo:
        return
    t = np.linspace(lo, hi, points)
    a, b = t[:-2], t[2:]
    mid = phi(0.5 * (a + b))
    chord = 0.5 * (phi(a) + phi(b))
    scale = np.maximum(np.abs(mid), np.abs(chord)) + 1e-300
    if np.any(mid - chord > 1e-12 * scale):
        raise ValueError(f"{phi.name} is not convex on the range [{lo:g}, {hi:g}] of u")


@dataclass(frozen=True)
class ConvexityReport:
    phi: str
    slack: float
    certificate: float
    weight_mass: float

    @property
    def holds(self) -> bool:
        return self.slack <= self.certificate


def convexity_inequality_check(weights: KernelWeights, u: Field, F: Field, phi: ConvexMap,
                               test: Field) -> ConvexityReport:
    """Slack of ``<A phi(u), test> <= sum F |phi'(u)|^(p-2) phi'(u) test V``.

    The pairwise inequality behind it is exact, so the slack is at most
    ``<Au - F V, psi>`` with ``psi = I_p(phi'(u)) test``. That bound is returned as
    ``certificate = max|Au - F V| * sum|psi|``; ``weight_mass`` is ``sum|psi|``.
    """
    for fld in (u, F, test):
        if fld.domain is not weights.domain:
            raise ValueError("domain mismatch between fields and weights")
    if not test.is_nonnegative():
        raise ValueError("test field must be nonnegative")
    v = u.interior
    _assert_convex(phi, min(float(v.min()), 0.0), float(v.max()))
    psi = signed_power(phi.derivative(v), weights.p) * test.interior
    lhs = float(apply_operator(weights, Field.from_interior(u.domain, phi(v))).interior @ test.interior)
    rhs = float(F.interior @ psi) * weights.volume
    defect = weights.gradient(v) - F.interior * weights.volume
    mass = float(np.abs(psi).sum())
    cert = float(np.max(np.abs(defect), initial=0.0)) * mass
    # allow summation roundoff on the two sides
    cert += 1e-12 * (abs(lhs) + abs(rhs))
    return ConvexityReport(phi.name, lhs - rhs, cert, mass)


@dataclass(frozen=True)
class BoundaryDatumEntry:
    eps: float
    seminorm_shifted: float
    bound: float
    slack: float

    @property
    def holds(self) -> bool:
        return self.slack >= -1e-8 * max(1.0, self.bound)


@dataclass(frozen=True)
class BoundaryDatumReport:
    gamma: float
    entries: tuple[BoundaryDatumEntry, ...]

    @property
    def holds(self) -> bool:
        return all(e.holds for e in self.entries)

    @property
    def min_slack(self) -> float:
        return min((e.slack for e in self.entries), default=np.inf)


def boundary_datum_check(weights: KernelWeights, u: Field, gamma: float,
                         eps_list: Sequence[float]) -> BoundaryDatumReport:
    """Seminorm of ``(u - eps)^+`` against its bound, for each ``eps``.

    For ``gamma > 1`` the bound is ``eps^(1-gamma) [u^q]^p`` with
    ``q = (gamma+p-1)/p``; otherwise it is ``[u]^p`` itself, since cutting at a
    level never increases the discrete seminorm.
    """
    if u.domain is not weights.domain:
        raise ValueError("domain mismatch between field and weights")
    if not u.is_nonnegative():
        raise ValueError("u must be nonnegative")
    p = weights.p
    v = u.interior
    if gamma > 1:
        base = weights.energy(v ** ((gamma + p - 1.0) / p))
    else:
        base = weights.energy(v)
    entries = []
    for eps in eps_list:
        if not eps > 0:
            raise ValueError(f"eps must be positive, got {eps}")
        shifted = weights.energy(np.maximum(v - eps, 0.0))
        bound = eps ** (1.0 - gamma) * base if gamma > 1 else base
        entries.append(BoundaryDatumEntry(float(eps), shifted, bound, bound - shifted))
    return BoundaryDatumReport(float(gamma), tuple(entries))
