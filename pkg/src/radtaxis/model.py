"""Problem definition: geometry, diffusion law, boundary datum, initial data, run config.

All types here are immutable after construction and safe to share between
threads and sweep workers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Union

import numpy as np

from .errors import ConfigError, DomainError

if TYPE_CHECKING:
    from .grid import RadialGrid, RadialProfile


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n: pi^(n/2) / Gamma(n/2 + 1).

    Evaluated through the integer factorial forms so small dimensions come
    out exact (2, pi, 4pi/3, ...) instead of carrying Gamma round-off.
    """
    if n % 2 == 0:
        return math.pi ** (n // 2) / math.factorial(n // 2)
    k = (n - 1) // 2
    return 2.0 * math.factorial(k) * (4.0 * math.pi) ** k / math.factorial(n)


@dataclass(frozen=True)
class Geometry:
    """Ball of radius R in R^n, n >= 1."""

    n: int
    R: float

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or self.n < 1:
            raise ConfigError(f"space dimension n must be an integer >= 1, got {self.n!r}")
        if not (math.isfinite(self.R) and self.R > 0):
            raise ConfigError(f"ball radius R must be finite and > 0, got {self.R!r}")

    @property
    def unit_ball_volume(self) -> float:
        return unit_ball_volume(self.n)

    @property
    def surface_coefficient(self) -> float:
        """omega = n * |B_1|; face area at radius r is omega * r^(n-1)."""
        return self.n * self.unit_ball_volume

    @property
    def domain_volume(self) -> float:
        return self.unit_ball_volume * self.R ** self.n


@dataclass(frozen=True)
class DiffusionLaw:
    """Power-law diffusion coefficient D(xi) = kappa * (xi + 1)^(-alpha).

    alpha < 1 is the bounded regime, alpha > 1 the blow-up candidate regime;
    closed form only, no tabulation.
    """

    alpha: float
    kappa: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.alpha):
            raise ConfigError(f"diffusion exponent alpha must be finite, got {self.alpha!r}")
        if not (math.isfinite(self.kappa) and self.kappa > 0):
            raise ConfigError(f"diffusion scale kappa must be finite and > 0, got {self.kappa!r}")

    def eval(self, xi):
        """D(xi) for scalar or array xi >= 0; strictly positive."""
        xi = np.asarray(xi, dtype=float)
        if xi.size and np.min(xi) < 0.0:
            raise DomainError("D evaluated at negative density; scheme positivity is broken")
        out = self.kappa * (xi + 1.0) ** (-self.alpha)
        return float(out) if out.ndim == 0 else out

    def eval_unchecked(self, xi: np.ndarray) -> np.ndarray:
        """eval() without the domain guard, for hot paths that clamp first."""
        return self.kappa * (xi + 1.0) ** (-self.alpha)

    def deriv(self, xi):
        """D'(xi) = -alpha * kappa * (xi + 1)^(-alpha - 1)."""
        xi = np.asarray(xi, dtype=float)
        if xi.size and np.min(xi) < 0.0:
            raise DomainError("D' evaluated at negative density; scheme positivity is broken")
        out = -self.alpha * self.kappa * (xi + 1.0) ** (-self.alpha - 1.0)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BoundaryDatum:
    """Prescribed constant boundary value of the signal, v = M > 0 at r = R."""

    M: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.M) and self.M > 0):
            raise ConfigError(f"boundary value M must be finite and > 0, got {self.M!r}")


@dataclass(frozen=True)
class ConstantData:
    """Spatially constant initial density u0 = value >= 0."""

    value: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ConfigError(f"constant initial value must be >= 0, got {self.value!r}")


@dataclass(frozen=True)
class GaussianBump:
    """Gaussian-shaped bump exp(-((r - center)/width)^2), normalized to total mass."""

    mass: float
    width: float
    center_radius: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mass) and self.mass >= 0):
            raise ConfigError(f"bump mass must be >= 0, got {self.mass!r}")
        if not (math.isfinite(self.width) and self.width > 0):
            raise ConfigError(f"bump width must be > 0, got {self.width!r}")
        if not (math.isfinite(self.center_radius) and self.center_radius >= 0):
            raise ConfigError(f"bump center radius must be >= 0, got {self.center_radius!r}")


@dataclass(frozen=True)
class AnnulusBump:
    """Smooth ring profile sin^2(pi (r - r_lo)/(r_hi - r_lo)) on (r_lo, r_hi), 0 outside."""

    mass: float
    r_lo: float
    r_hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mass) and self.mass >= 0):
            raise ConfigError(f"annulus mass must be >= 0, got {self.mass!r}")
        if not (0.0 <= self.r_lo < self.r_hi):
            raise ConfigError(f"annulus needs 0 <= r_lo < r_hi, got [{self.r_lo!r}, {self.r_hi!r}]")


InitialData = Union[ConstantData, GaussianBump, AnnulusBump]

# 3-point Gauss-Legendre rule on [-1, 1]; exact for cell averages of the
# smooth closed forms to the accuracy the mass normalization then absorbs.
_GAUSS_NODES = np.array([-math.sqrt(3.0 / 5.0), 0.0, math.sqrt(3.0 / 5.0)])
_GAUSS_WEIGHTS = np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])


def _shape_values(data: InitialData, r: np.ndarray) -> np.ndarray:
    if isinstance(data, ConstantData):
        return np.full_like(r, data.value)
    if isinstance(data, GaussianBump):
        with np.errstate(over="ignore"):  # far tails underflow to 0, which is fine
            return np.exp(-(((r - data.center_radius) / data.width) ** 2))
    if isinstance(data, AnnulusBump):
        inside = (r > data.r_lo) & (r < data.r_hi)
        phase = np.where(inside, (r - data.r_lo) / (data.r_hi - data.r_lo), 0.0)
        return np.where(inside, np.sin(math.pi * phase) ** 2, 0.0)
    raise ConfigError(f"unknown initial data kind {type(data).__name__}")


def sample_initial(data: InitialData, grid: "RadialGrid") -> "RadialProfile":
    """Sample initial data as cell averages on the radial grid.

    Mass-parametrized kinds are integrated cell by cell (Gauss quadrature of
    the closed form against the volume weight r^(n-1)) and then rescaled so
    the grid quadrature reproduces the requested mass exactly; this keeps the
    sampled mass refinement-invariant.
    """
    from .grid import RadialProfile, integrate

    if isinstance(data, (GaussianBump, AnnulusBump)):
        geom = grid.geometry
        if isinstance(data, GaussianBump) and not data.center_radius < geom.R:
            raise ConfigError(
                f"bump center radius {data.center_radius} must be < R = {geom.R}"
            )
        if isinstance(data, AnnulusBump) and not data.r_hi <= geom.R:
            raise ConfigError(f"annulus outer radius {data.r_hi} must be <= R = {geom.R}")

    if isinstance(data, ConstantData):
        # Cell average of a constant is the constant; no quadrature error in any n.
        values = np.full(grid.n_cells, data.value)
        return RadialProfile(grid, values)

    lo = grid.face_radii[:-1]
    half = 0.5 * grid.dr
    mid = grid.center_radii
    exponent = grid.geometry.n - 1
    cell_integrals = np.zeros(grid.n_cells)
    for node, weight in zip(_GAUSS_NODES, _GAUSS_WEIGHTS):
        r = mid + half * node
        cell_integrals += weight * _shape_values(data, r) * r ** exponent
    cell_integrals *= half * grid.geometry.surface_coefficient
    values = cell_integrals / grid.volumes

    profile = RadialProfile(grid, values)
    if data.mass == 0.0:
        return RadialProfile(grid, np.zeros(grid.n_cells))
    raw_mass = integrate(profile)
    if raw_mass <= 0.0:
        raise ConfigError(
            "initial profile has zero sampled mass and cannot be normalized; "
            "check width / annulus bounds against the grid"
        )
    values *= data.mass / raw_mass
    return RadialProfile(grid, values)


@dataclass(frozen=True)
class RunConfig:
    """Full description of one simulation case.

    u_max_threshold and dt_min may be left None; they are then resolved at
    run start as 1e6 * ||u0||_inf and 1e-12 * (first stable dt).
    """

    geometry: Geometry
    diffusion: DiffusionLaw
    boundary: BoundaryDatum
    initial: InitialData
    cells: int
    t_end: float
    cfl_safety: float = 0.4
    u_max_threshold: float | None = None
    dt_min: float | None = None
    output_stride: int = 1
    lp_exponents: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not isinstance(self.cells, int) or self.cells < 16:
            raise ConfigError(f"cells must be an integer >= 16, got {self.cells!r}")
        if not (math.isfinite(self.t_end) and self.t_end >= 0):
            raise ConfigError(f"t_end must be finite and >= 0, got {self.t_end!r}")
        if not (0.0 < self.cfl_safety <= 1.0):
            raise ConfigError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety!r}")
        if self.u_max_threshold is not None and not self.u_max_threshold > 0:
            raise ConfigError(f"u_max_threshold must be > 0, got {self.u_max_threshold!r}")
        if self.dt_min is not None and not self.dt_min > 0:
            raise ConfigError(f"dt_min must be > 0, got {self.dt_min!r}")
        if not isinstance(self.output_stride, int) or self.output_stride < 1:
            raise ConfigError(f"output_stride must be an integer >= 1, got {self.output_stride!r}")
        object.__setattr__(self, "lp_exponents", tuple(float(p) for p in self.lp_exponents))
        for p in self.lp_exponents:
            if not (math.isfinite(p) and p > 1.0):
                raise ConfigError(f"lp exponents must be finite and > 1, got {p!r}")
        if isinstance(self.initial, GaussianBump) and not self.initial.center_radius < self.geometry.R:
            raise ConfigError("initial.center must be < R")
        if isinstance(self.initial, AnnulusBump) and not self.initial.r_hi <= self.geometry.R:
            raise ConfigError("initial.r_hi must be <= R")


# Flat config-file vocabulary; anything else is a hard error.
_CONFIG_KEYS = frozenset(
    [
        "n", "R", "alpha", "kappa", "M",
        "initial.kind", "initial.mass", "initial.width", "initial.center",
        "initial.r_lo", "initial.r_hi",
        "cells", "t_end", "cfl_safety", "u_max_threshold", "dt_min",
        "output_stride", "lp",
    ]
)
_REQUIRED_KEYS = ("n", "R", "alpha", "kappa", "M", "initial.kind", "cells", "t_end")
_KIND_KEYS = {
    "constant": frozenset(["initial.mass"]),
    "gaussian": frozenset(["initial.mass", "initial.width", "initial.center"]),
    "annulus": frozenset(["initial.mass", "initial.r_lo", "initial.r_hi"]),
}


def parse_flat_keys(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse `key = value` lines; '#' starts a comment; duplicate keys are errors."""
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if key in entries:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        entries[key] = value
    return entries


def _parse_float(entries: dict[str, str], key: str, source: str) -> float:
    try:
        return float(entries[key])
    except ValueError as exc:
        raise ConfigError(f"{source}: key {key!r} is not a number: {entries[key]!r}") from exc


def _parse_int(entries: dict[str, str], key: str, source: str) -> int:
    raw = entries[key]
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{source}: key {key!r} is not an integer: {raw!r}") from exc


def parse_initial(kind: str, params: dict[str, float], geometry: Geometry, source: str = "<config>") -> InitialData:
    """Build initial data from config-level parameters.

    For kind=constant the `mass` parameter is the total mass; the constant
    level is mass / |Omega|.
    """
    if kind == "constant":
        return ConstantData(value=params["initial.mass"] / geometry.domain_volume)
    if kind == "gaussian":
        return GaussianBump(
            mass=params["initial.mass"],
            width=params["initial.width"],
            center_radius=params["initial.center"],
        )
    if kind == "annulus":
        return AnnulusBump(
            mass=params["initial.mass"],
            r_lo=params["initial.r_lo"],
            r_hi=params["initial.r_hi"],
        )
    raise ConfigError(f"{source}: initial.kind must be constant, gaussian, or annulus, got {kind!r}")


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse the flat key=value run-config format."""
    entries = parse_flat_keys(text, source)

    unknown = sorted(set(entries) - _CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"{source}: unknown key {unknown[0]!r}")
    missing = [k for k in _REQUIRED_KEYS if k not in entries]
    if missing:
        raise ConfigError(f"{source}: missing required key {missing[0]!r}")

    kind = entries["initial.kind"].lower()
    if kind not in _KIND_KEYS:
        raise ConfigError(f"{source}: initial.kind must be constant, gaussian, or annulus, got {kind!r}")
    needed = _KIND_KEYS[kind]
    present_initial = {k for k in entries if k.startswith("initial.") and k != "initial.kind"}
    for k in sorted(needed - present_initial):
        raise ConfigError(f"{source}: initial.kind={kind} requires key {k!r}")
    for k in sorted(present_initial - needed):
        raise ConfigError(f"{source}: key {k!r} does not apply to initial.kind={kind}")

    geometry = Geometry(n=_parse_int(entries, "n", source), R=_parse_float(entries, "R", source))
    diffusion = DiffusionLaw(
        alpha=_parse_float(entries, "alpha", source),
        kappa=_parse_float(entries, "kappa", source),
    )
    boundary = BoundaryDatum(M=_parse_float(entries, "M", source))
    params = {k: _parse_float(entries, k, source) for k in needed}
    initial = parse_initial(kind, params, geometry, source)

    lp: tuple[float, ...] = ()
    if "lp" in entries and entries["lp"]:
        try:
            lp = tuple(float(tok) for tok in entries["lp"].split(","))
        except ValueError as exc:
            raise ConfigError(f"{source}: key 'lp' must be a comma-separated list of numbers") from exc

    return RunConfig(
        geometry=geometry,
        diffusion=diffusion,
        boundary=boundary,
        initial=initial,
        cells=_parse_int(entries, "cells", source),
        t_end=_parse_float(entries, "t_end", source),
        cfl_safety=_parse_float(entries, "cfl_safety", source) if "cfl_safety" in entries else 0.4,
        u_max_threshold=_parse_float(entries, "u_max_threshold", source) if "u_max_threshold" in entries else None,
        dt_min=_parse_float(entries, "dt_min", source) if "dt_min" in entries else None,
        output_stride=_parse_int(entries, "output_stride", source) if "output_stride" in entries else 1,
        lp_exponents=lp,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), source=str(path))


def config_to_text(config: RunConfig) -> str:
    """Serialize a RunConfig back to the flat key=value format (canonical order)."""
    lines = [
        f"n = {config.geometry.n}",
        f"R = {config.geometry.R!r}",
        f"alpha = {config.diffusion.alpha!r}",
        f"kappa = {config.diffusion.kappa!r}",
        f"M = {config.boundary.M!r}",
    ]
    initial = config.initial
    if isinstance(initial, ConstantData):
        lines.append("initial.kind = constant")
        lines.append(f"initial.mass = {initial.value * config.geometry.domain_volume!r}")
    elif isinstance(initial, GaussianBump):
        lines.append("initial.kind = gaussian")
        lines.append(f"initial.mass = {initial.mass!r}")
        lines.append(f"initial.width = {initial.width!r}")
        lines.append(f"initial.center = {initial.center_radius!r}")
    else:
        lines.append("initial.kind = annulus")
        lines.append(f"initial.mass = {initial.mass!r}")
        lines.append(f"initial.r_lo = {initial.r_lo!r}")
        lines.append(f"initial.r_hi = {initial.r_hi!r}")
    lines.append(f"cells = {config.cells}")
    lines.append(f"t_end = {config.t_end!r}")
    lines.append(f"cfl_safety = {config.cfl_safety!r}")
    if config.u_max_threshold is not None:
        lines.append(f"u_max_threshold = {config.u_max_threshold!r}")
    if config.dt_min is not None:
        lines.append(f"dt_min = {config.dt_min!r}")
    lines.append(f"output_stride = {config.output_stride}")
    if config.lp_exponents:
        lines.append("lp = " + ", ".join(repr(p) for p in config.lp_exponents))
    return "\n".join(lines) + "\n"
