"""Run configuration: TOML schema, validation and round-trip through dictionaries."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .geometry import GridDomain, build_ball, build_interval, build_rectangle
from .kernel import Field, check_exponents
from .solver import ProblemSpec, SolverConfig

CHECKS = ("exponents", "lemma_dino", "convexity_inequality", "monotonicity", "apriori_bounds",
          "boundary_datum", "comparison", "uniqueness", "symmetry")
PROFILES = ("constant", "gaussian", "power", "csv")
PARITIES = ("none", "even", "odd")
DOMAINS = ("interval", "rectangle", "ball")


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


@dataclass(frozen=True)
class DomainBlock:
    kind: str = "interval"
    a: float = -1.0
    b: float = 1.0
    M: int = 129
    pad: float = 0.25
    lower: tuple[float, ...] = (-1.0, -1.0)
    upper: tuple[float, ...] = (1.0, 1.0)
    shape: tuple[int, ...] = (33, 33)
    center: tuple[float, ...] = (0.0, 0.0)
    radius: float = 1.0

    @property
    def dim(self) -> int:
        return 1 if self.kind == "interval" else 2

    def build(self, M: int | None = None) -> GridDomain:
        """Grid for this block; ``M`` overrides the node count (square shape for rectangles)."""
        if self.kind == "interval":
            return build_interval(self.a, self.b, self.M if M is None else M, self.pad)
        if self.kind == "rectangle":
            shape = self.shape if M is None else (M, M)
            return build_rectangle(self.lower, self.upper, shape, self.pad)
        return build_ball(self.center, self.radius, self.M if M is None else M, self.pad)


@dataclass(frozen=True)
class SourceBlock:
    """Nonnegative source profile.

    ``constant``: ``c``; ``gaussian``: ``c exp(-|x - mu|^2 / (2 sigma^2))``;
    ``power``: ``c |x - mu|^alpha``; ``csv``: nodal values read from ``path``.
    ``parity = "even"`` averages the profile with its mirror image in the first
    coordinate about the domain center; ``"odd"`` multiplies it by
    ``1 + (x_1 - center) / half_width``, which adds an odd part and keeps it
    nonnegative on the domain.
    """

    profile: str = "constant"
    c: float = 1.0
    mu: tuple[float, ...] = (0.0,)
    sigma: float = 0.5
    alpha: float = 1.0
    parity: str = "none"
    path: str = ""


@dataclass(frozen=True)
class ProblemBlock:
    p: float = 2.0
    s: float = 0.4
    gamma: float = 1.0
    N: int = 1
    integrability: float = math.inf
    domain: DomainBlock = field(default_factory=DomainBlock)
    source: SourceBlock = field(default_factory=SourceBlock)


@dataclass(frozen=True)
class VerifyBlock:
    checks: tuple[str, ...] = CHECKS
    eps_list: tuple[float, ...] = (0.05, 0.1, 0.2)
    samples: int = 100_000
    dino_q: tuple[float, ...] = (1.5, 2.0, 3.7)
    dino_eps: tuple[float, ...] = (0.1, 0.5, 1.0)
    exponent_tuples: int = 100
    comparison_scale: float = 2.0


@dataclass(frozen=True)
class OutputBlock:
    directory: str = "out"
    formats: tuple[str, ...] = ("json", "csv")
    seed: int = 0


@dataclass(frozen=True)
class SweepBlock:
    """Cartesian lists; an omitted key keeps the problem's value, an empty list empties the sweep."""

    p: tuple[float, ...] | None = None
    s: tuple[float, ...] | None = None
    gamma: tuple[float, ...] | None = None
    M: tuple[int, ...] | None = None


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemBlock = field(default_factory=ProblemBlock)
    solver: SolverConfig = field(default_factory=SolverConfig)
    verify: VerifyBlock = field(default_factory=VerifyBlock)
    output: OutputBlock = field(default_factory=OutputBlock)
    sweep: SweepBlock = field(default_factory=SweepBlock)
    base_dir: str = field(default=".", compare=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        d["sweep"] = {k: v for k, v in d["sweep"].items() if v is not None}
        d["problem"]["integrability"] = _encode_float(self.problem.integrability)
        return d

    @classmethod
    def from_dict(cls, data: dict, base_dir: str | Path = ".") -> "RunConfig":
        """Build and validate; raises :class:`ConfigError` naming the first bad field."""
        data = dict(data)
        unknown = set(data) - {"problem", "solver", "verify", "output", "sweep"}
        if unknown:
            raise ConfigError(f"unknown top-level table(s): {', '.join(sorted(unknown))}")
        prob = dict(data.get("problem", {}))
        domain = _block(DomainBlock, prob.pop("domain", {}), "problem.domain")
        source = _block(SourceBlock, prob.pop("source", {}), "problem.source")
        problem = _block(ProblemBlock, prob, "problem", domain=domain, source=source)
        solver = _block(SolverConfig, data.get("solver", {}), "solver")
        cfg = cls(problem=problem, solver=solver,
                  verify=_block(VerifyBlock, data.get("verify", {}), "verify"),
                  output=_block(OutputBlock, data.get("output", {}), "output"),
                  sweep=_block(SweepBlock, data.get("sweep", {}), "sweep"),
                  base_dir=str(base_dir))
        cfg.validate()
        return cfg

    # validation happens before any grid or kernel is built for the solve
    def validate(self) -> None:
        pb = self.problem
        if pb.domain.kind not in DOMAINS:
            raise ConfigError(f"problem.domain.kind: expected one of {DOMAINS}, got {pb.domain.kind!r}")
        if pb.N != pb.domain.dim:
            raise ConfigError(f"problem.N: {pb.N} does not match a {pb.domain.kind} domain "
                              f"(dimension {pb.domain.dim})")
        try:
            check_exponents(pb.N, pb.s, pb.p)
        except ValueError as exc:
            msg = str(exc)
            if "N > s*p" in msg:
                msg = f"N>sp violated: N={pb.N}, s*p={pb.s * pb.p:g}"
            raise ConfigError(f"problem: {msg}") from exc
        if not pb.gamma >= 0:
            raise ConfigError(f"problem.gamma: must be nonnegative, got {pb.gamma}")
        src = pb.source
        if src.profile not in PROFILES:
            raise ConfigError(f"problem.source.profile: expected one of {PROFILES}, got {src.profile!r}")
        if src.parity not in PARITIES:
            raise ConfigError(f"problem.source.parity: expected one of {PARITIES}, got {src.parity!r}")
        if not src.c >= 0:
            raise ConfigError(f"problem.source.c: must be nonnegative, got {src.c}")
        if src.profile == "gaussian" and not src.sigma > 0:
            raise ConfigError(f"problem.source.sigma: must be positive, got {src.sigma}")
        if src.profile == "power" and not src.alpha >= 0:
            raise ConfigError(f"problem.source.alpha: must be nonnegative, got {src.alpha}")
        if src.profile in ("gaussian", "power") and len(src.mu) != pb.N:
            raise ConfigError(f"problem.source.mu: needs {pb.N} coordinate(s), got {len(src.mu)}")
        bad = [c for c in self.verify.checks if c not in CHECKS]
        if bad:
            raise ConfigError(f"verify.checks: unknown check(s) {bad}; valid names: {', '.join(CHECKS)}")
        if any(not e > 0 for e in self.verify.eps_list):
            raise ConfigError("verify.eps_list: all entries must be positive")
        if self.verify.samples < 0:
            raise ConfigError("verify.samples: must be nonnegative")
        if any(not q > 1 for q in self.verify.dino_q):
            raise ConfigError("verify.dino_q: all entries must exceed 1")
        if any(not e > 0 for e in self.verify.dino_eps):
            raise ConfigError("verify.dino_eps: all entries must be positive")
        if not self.output.seed >= 0:
            raise ConfigError("output.seed: must be a nonnegative integer")
        bad_fmt = [f for f in self.output.formats if f not in ("json", "csv")]
        if bad_fmt:
            raise ConfigError(f"output.formats: unknown format(s) {bad_fmt}")
        try:
            domain = self.build_domain()
        except ValueError as exc:
            raise ConfigError(f"problem.domain: {exc}") from exc
        self.source_field(domain)

    def build_domain(self, M: int | None = None) -> GridDomain:
        return self.problem.domain.build(M)

    def source_field(self, domain: GridDomain) -> Field:
        values = source_values(self.problem.source, domain, self.base_dir)
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ConfigError("problem.source: profile must be finite and nonnegative on the domain")
        return Field.from_interior(domain, values)

    def problem_spec(self, domain: GridDomain, **overrides) -> ProblemSpec:
        pb = self.problem
        kw = dict(p=pb.p, s=pb.s, gamma=pb.gamma, dim=pb.N, source_integrability=pb.integrability)
        kw.update(overrides)
        return ProblemSpec(source=self.source_field(domain).interior, **kw)


def _encode_float(x: float):
    return "inf" if math.isinf(x) else x


def _coerce(value: Any, target: Any, where: str):
    """Convert TOML values to the annotated field type."""
    kind = target if isinstance(target, str) else getattr(target, "__name__", str(target))
    try:
        if kind.startswith("tuple"):
            if not isinstance(value, (list, tuple)):
                raise TypeError("expected an array")
            inner = kind[kind.index("[") + 1:].split(",")[0].strip()
            conv = {"int": _as_int, "float": float, "str": str}[inner]
            return tuple(conv(v) for v in value)
        if kind == "int":
            return _as_int(value)
        if kind == "float":
            if isinstance(value, str) and value.lower() in ("inf", "infinity"):
                return math.inf
            if isinstance(value, bool):
                raise TypeError("expected a number")
            return float(value)
        if kind == "str":
            if not isinstance(value, str):
                raise TypeError("expected a string")
            return value
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"{where}: {exc} (got {value!r})") from exc
    return value


def _as_int(v) -> int:
    if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
        raise TypeError("expected an integer")
    return int(v)


def _block(cls, data: dict, where: str, **nested):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a table")
    names = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(names)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(sorted(unknown))}")
    kw = {k: _coerce(v, names[k].type, f"{where}.{k}") for k, v in data.items()}
    kw.update(nested)
    try:
        return cls(**kw)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def source_values(src: SourceBlock, domain: GridDomain, base_dir: str | Path = ".") -> np.ndarray:
    """Interior values of the configured source profile."""
    pts = domain.interior_points()
    if src.profile == "csv":
        return _read_source_csv(Path(base_dir) / src.path, domain)

    def raw(x):
        if src.profile == "constant":
            return np.full(len(x), src.c)
        r2 = np.sum((x - np.asarray(src.mu)) ** 2, axis=1)
        if src.profile == "gaussian":
            return src.c * np.exp(-0.5 * r2 / src.sigma ** 2)
        return src.c * r2 ** (0.5 * src.alpha)

    center = domain.region.center[0]
    if src.parity == "even":
        mirror = pts.copy()
        mirror[:, 0] = 2.0 * center - mirror[:, 0]
        return 0.5 * (raw(pts) + raw(mirror))
    vals = raw(pts)
    if src.parity == "odd":
        vals = vals * (1.0 + (pts[:, 0] - center) / _half_width(domain))
    return vals


def _half_width(domain: GridDomain) -> float:
    pts = domain.interior_points()[:, 0]
    c = domain.region.center[0]
    # the largest interior offset keeps the factor nonnegative on the domain
    return float(np.max(np.abs(pts - c)))


def _read_source_csv(path: Path, domain: GridDomain) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    except OSError as exc:
        raise ConfigError(f"problem.source.path: cannot read {path}: {exc.strerror}") from exc
    pts = domain.interior_points()
    if len(rows) != len(pts):
        raise ConfigError(f"problem.source.path: {len(rows)} rows in {path.name}, "
                          f"expected one per interior node ({len(pts)})")
    try:
        table = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise ConfigError(f"problem.source.path: non-numeric entry in {path.name}") from exc
    if table.shape[1] != domain.dim + 1:
        raise ConfigError(f"problem.source.path: rows need {domain.dim} coordinate(s) and a value")
    if np.max(np.abs(table[:, :-1] - pts)) > 1e-9 * max(1.0, float(np.abs(pts).max())):
        raise ConfigError(f"problem.source.path: coordinates in {path.name} do not match the grid")
    return table[:, -1]


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return RunConfig.from_dict(data, base_dir=path.parent)
