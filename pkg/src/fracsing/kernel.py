"""Discrete Gagliardo form: pair weights, energy, operator and weak residual.

For nodes ``x_i`` with cell volume ``V`` the pair weight is
``w_ij = V**2 / |x_i - x_j|**(N + s p)`` and the tail weight ``d_i`` is ``V``
times the exact integral of ``|x_i - y|**-(N + s p)`` over everything outside
the grid hull. With ``u = 0`` on exterior nodes the discrete seminorm is

    S(u) = sum_{i != j} w_ij |u_i - u_j|**p + 2 sum_i d_i |u_i|**p

and the operator ``(Au)_i = 2 sum_j w_ij I_p(u_i - u_j) + 2 d_i I_p(u_i)`` with
``I_p(t) = |t|**(p-2) t`` is the gradient of ``S / p`` in the interior values.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import betainc

from .geometry import CompactSubset, GridDomain


@dataclass(frozen=True, eq=False)
class Field:
    """Nodal values on a grid; exterior nodes hold exactly zero."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.domain.n_nodes,):
            raise ValueError(
                f"field has {values.shape} values, domain has {self.domain.n_nodes} nodes")
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite values")
        if np.any(values[~self.domain.interior_mask] != 0.0):
            raise ValueError("field violates the exterior-zero encoding (u = 0 outside the domain)")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, domain: GridDomain) -> "Field":
        return cls(domain, np.zeros(domain.n_nodes))

    @classmethod
    def from_interior(cls, domain: GridDomain, interior_values) -> "Field":
        values = np.zeros(domain.n_nodes)
        values[domain.interior_mask] = interior_values
        return cls(domain, values)

    @classmethod
    def from_function(cls, domain: GridDomain, fn) -> "Field":
        """Evaluate ``fn(points)`` (points of shape ``(n, dim)``) at interior nodes."""
        return cls.from_interior(domain, np.broadcast_to(fn(domain.interior_points()),
                                                         (domain.n_interior,)))

    @property
    def interior(self) -> np.ndarray:
        return self.values[self.domain.interior_mask]

    def is_nonnegative(self) -> bool:
        return bool(self.values.min() >= 0.0)

    def __mul__(self, alpha: float) -> "Field":
        return Field(self.domain, self.values * float(alpha))

    __rmul__ = __mul__

    def __add__(self, other: "Field") -> "Field":
        _same_domain(self.domain, other.domain)
        return Field(self.domain, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _same_domain(self.domain, other.domain)
        return Field(self.domain, self.values - other.values)


def _same_domain(a: GridDomain, b: GridDomain) -> None:
    if a is not b:
        raise ValueError("domain mismatch: field and weights live on different grids")


def signed_power(t: np.ndarray, p: float) -> np.ndarray:
    """``|t|**(p-2) * t`` with the continuous value 0 at ``t = 0``."""
    if p == 2.0:
        return t
    if p == 3.0:
        return np.abs(t) * t
    return np.sign(t) * np.abs(t) ** (p - 1.0)


def _tail_1d(x: np.ndarray, lower: float, upper: float, sp: float) -> np.ndarray:
    return ((x - lower) ** (-sp) + (upper - x) ** (-sp)) / sp


def _cos_power_integral(phi: np.ndarray, a: float) -> np.ndarray:
    """``int_0^phi cos(t)**a dt`` for ``|phi| < pi/2``."""
    val = 0.5 * beta_fn(0.5, 0.5 * (a + 1.0)) * betainc(0.5, 0.5 * (a + 1.0), np.sin(phi) ** 2)
    return np.sign(phi) * val


def _tail_2d(pts: np.ndarray, lower: np.ndarray, upper: np.ndarray, sp: float) -> np.ndarray:
    # In polar coordinates around x the exterior integral is
    # int_0^{2pi} rho(theta)**(-sp) / sp dtheta, rho = distance to the hull along theta.
    # On a face at distance delta, rho = delta / cos(phi), phi measured from the face normal.
    x, y = pts[:, 0], pts[:, 1]
    faces = [
        (upper[0] - x, y - lower[1], upper[1] - y),
        (x - lower[0], upper[1] - y, y - lower[1]),
        (upper[1] - y, upper[0] - x, x - lower[0]),
        (y - lower[1], x - lower[0], upper[0] - x),
    ]
    total = np.zeros(len(pts))
    for delta, before, after in faces:
        lo = -np.arctan2(before, delta)
        hi = np.arctan2(after, delta)
        total += delta ** (-sp) * (_cos_power_integral(hi, sp) - _cos_power_integral(lo, sp))
    return total / sp


def exterior_tail(domain: GridDomain, sp: float) -> np.ndarray:
    """Integral of ``|x_i - y|**-(N+sp)`` over the complement of the grid hull, per node."""
    if domain.dim == 1:
        return _tail_1d(domain.nodes[:, 0], domain.hull_lower[0], domain.hull_upper[0], sp)
    if domain.dim == 2:
        return _tail_2d(domain.nodes, domain.hull_lower, domain.hull_upper, sp)
    raise ValueError("only N = 1 and N = 2 are supported")


def ball_tail(dim: int, radius: float, sp: float) -> float:
    """Kernel integral over ``|y - x| > radius``: ``|S^{N-1}| radius**(-sp) / sp``."""
    sphere = {1: 2.0, 2: 2.0 * np.pi}[dim]
    return sphere * radius ** (-sp) / sp


@dataclass(frozen=True, eq=False)
class KernelWeights:
    domain: GridDomain
    s: float
    p: float
    pair_weights: np.ndarray
    tail_weights: np.ndarray

    @property
    def sp(self) -> float:
        return self.s * self.p

    @property
    def volume(self) -> float:
        return self.domain.cell_volume

    @cached_property
    def interior_pairs(self) -> np.ndarray:
        idx = self.domain.interior_index
        return np.ascontiguousarray(self.pair_weights[np.ix_(idx, idx)])

    @cached_property
    def exterior_coupling(self) -> np.ndarray:
        """Per interior node: tail weight plus all pair weights to exterior nodes."""
        mask = self.domain.interior_mask
        return self.pair_weights[np.ix_(mask, ~mask)].sum(axis=1) + self.tail_weights[mask]

    @cached_property
    def linear_matrix(self) -> np.ndarray:
        """Interior matrix of the operator for p = 2 (exponent-independent pair structure)."""
        W = self.interior_pairs
        L = -2.0 * W
        L[np.diag_indices_from(L)] = 2.0 * (W.sum(axis=1) + self.exterior_coupling)
        return L

    # array-level kernels on interior values; the public functions below wrap them
    def energy(self, v: np.ndarray, p: float | None = None) -> float:
        p = self.p if p is None else p
        if p == 2.0:
            return float(v @ (self.linear_matrix @ v))
        diff = np.abs(v[:, None] - v[None, :])
        return float(np.sum(self.interior_pairs * diff ** p)
                     + 2.0 * np.sum(self.exterior_coupling * np.abs(v) ** p))

    def gradient(self, v: np.ndarray) -> np.ndarray:
        if self.p == 2.0:
            return self.linear_matrix @ v
        flux = signed_power(v[:, None] - v[None, :], self.p)
        return 2.0 * np.sum(self.interior_pairs * flux, axis=1) \
            + 2.0 * self.exterior_coupling * signed_power(v, self.p)


def check_exponents(dim: int, s: float, p: float, strict: bool = True) -> None:
    if not 0.0 < s < 1.0:
        raise ValueError(f"fractional order s must lie in (0, 1), got {s}")
    if not p > 1.0:
        raise ValueError(f"exponent p must exceed 1, got {p}")
    if strict and not dim > s * p:
        raise ValueError(f"standing assumption violated: need N > s*p, got N={dim}, s*p={s * p:g}")


def assemble(domain: GridDomain, s: float, p: float, strict: bool = True) -> KernelWeights:
    """Dense pair weights and exterior tail weights.

    ``strict=False`` skips the ``N > s p`` check. The discrete operator is well
    defined without it (e.g. the linear fractional Laplacian with ``s >= 1/2`` in
    one dimension); only the singular problem needs the assumption.
    """
    check_exponents(domain.dim, s, p, strict)
    sp = s * p
    x = domain.nodes
    dist2 = np.zeros((domain.n_nodes, domain.n_nodes))
    for k in range(domain.dim):
        dist2 += (x[:, k, None] - x[None, :, k]) ** 2
    np.fill_diagonal(dist2, 1.0)
    V = domain.cell_volume
    W = V * V * dist2 ** (-0.5 * (domain.dim + sp))
    np.fill_diagonal(W, 0.0)
    # the exact pair structure is symmetric; enforce it bitwise
    W = 0.5 * (W + W.T)
    d = V * exterior_tail(domain, sp)
    W.setflags(write=False)
    d.setflags(write=False)
    return KernelWeights(domain, float(s), float(p), W, d)


def seminorm_p(weights: KernelWeights, u: Field, p: float | None = None) -> float:
    """Discrete ``[u]^p`` including the exterior tail; ``p`` defaults to the kernel's exponent.

    Passing another ``p`` reuses the same pair weights, which is only meaningful
    when ``s * p`` is unchanged.
    """
    _same_domain(weights.domain, u.domain)
    return weights.energy(u.interior, p)


def apply_operator(weights: KernelWeights, u: Field) -> Field:
    _same_domain(weights.domain, u.domain)
    return Field.from_interior(u.domain, weights.gradient(u.interior))


def pointwise_residual(weights: KernelWeights, u: Field, rhs: Field, gamma: float,
                       shift: float = 0.0) -> np.ndarray:
    """Interior values of ``(Au)_i / V - f_i / (u_i + shift)**gamma`` (may be inf/nan where u+shift <= 0)."""
    _same_domain(weights.domain, u.domain)
    _same_domain(weights.domain, rhs.domain)
    v = u.interior
    with np.errstate(divide="ignore", invalid="ignore"):
        quotient = rhs.interior / (np.maximum(v, 0.0) + shift) ** gamma
    return weights.gradient(v) / weights.volume - quotient


def weak_residual(weights: KernelWeights, u: Field, rhs: Field, testset: CompactSubset,
                  gamma: float, shift: float = 0.0) -> float:
    """Largest defect of the weak equation over nodal hat test functions on ``testset``.

    Each defect ``<Au, phi> - sum f u^-gamma phi V`` is divided by the L1 mass ``V``
    of the hat, so the value is in units of the pointwise equation. ``shift``
    evaluates the regularized quotient ``f / (u + shift)**gamma`` instead.
    """
    pos = np.searchsorted(weights.domain.interior_index, testset.node_indices)
    if np.any(u.interior[pos] + shift <= 0.0):
        raise ValueError("singular quotient on test set: u vanishes on a test node")
    res = pointwise_residual(weights, u, rhs, gamma, shift)
    return float(np.max(np.abs(res[pos])))
