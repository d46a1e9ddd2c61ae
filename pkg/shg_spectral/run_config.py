from __future__ import annotations # Enable type annotation to be stored as string
from dataclasses import dataclass, fields, replace, asdict
from functools import cache
from pathlib import Path
from typing import Any, Mapping
import logging
import os

from shg_spectral.utils.json_utils import load_config_file


ENV_PREFIX = 'SHG_SPECTRAL_'

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    """
    Numerical settings and run options shared by every pipeline. Support dict-like access.

    Attributes:
        - rtol, atol (float): Frame integrator tolerances.
        - first_step (float): Initial integrator step before the |λ| scaling.
        - frame_grid (int): Minimum grid size for the cached connection coefficients.
        - det_tol (float): Bound on the relative determinant defect |det M - 1|/max(1, ‖M‖²).
        - det_refinements (int): How often λ values above det_tol are integrated again with tighter tolerances.
        - K (int): Default truncation radius.
        - K_align (int): Alignment radius; counts are checked per annulus beyond it and in total inside it.
        - contour_min_points, contour_points_per_k (int): Annulus boundary sampling, max(min, per_k*(j+1)) points.
        - contour_max_doublings (int): How often the boundary sampling may be doubled until the winding is stable.
        - zero_on_contour_tol (float): Relative minimum-modulus threshold on counting contours.
        - cauchy_points (int): Points on Cauchy differentiation circles.
        - cauchy_radius_fraction (float): Circle radius as a fraction of the local λ-scale.
        - newton_tol (float): Relative step tolerance of Newton refinement.
        - newton_max_iter (int): Newton iteration cap.
        - subdivision_depth (int): Radial bisection depth of the Newton fallback.
        - double_point_tol (float): Relative width under which a branch pair is a double point.
        - tame_separation (float): Relative separation under which two divisor points coincide.
        - match_window (int): Label window of the divisor metric matching.
        - tail_terms (int): Vacuum tail terms summed explicitly in the reconstruction.
        - annulus_radii, annulus_angles (int): Sampling of annuli for bounding sequences.
        - quadrature_nodes (int): Gauss-Chebyshev nodes for period integrals.
        - blowup_bound (float): Coefficient bound of the y-evolution.
        - chunk_size (int): Number of λ integrated together as one stacked ODE.
        - threads (int): Worker threads, 1 means sequential.
        - deterministic (bool): Byte-stable outputs (no dated folders, ordered reductions).
        - seed (int): Seed for generated potentials, variations and test grids.
        - out_dir (str | None): Output directory of the CLI.
        - log_level (str): Logging level of the CLI.
    """
    rtol: float = 1e-11
    atol: float = 1e-13
    first_step: float = 0.01
    frame_grid: int = 64
    det_tol: float = 1e-9
    det_refinements: int = 2
    K: int = 8
    K_align: int = 4
    contour_min_points: int = 64
    contour_points_per_k: int = 16
    contour_max_doublings: int = 3
    zero_on_contour_tol: float = 1e-12
    cauchy_points: int = 32
    cauchy_radius_fraction: float = 0.05
    newton_tol: float = 1e-12
    newton_max_iter: int = 40
    subdivision_depth: int = 4
    double_point_tol: float = 1e-9
    tame_separation: float = 1e-8
    match_window: int = 2
    tail_terms: int = 2048
    annulus_radii: int = 3
    annulus_angles: int = 24
    quadrature_nodes: int = 64
    blowup_bound: float = 1e3
    chunk_size: int = 256
    threads: int = 1
    deterministic: bool = False
    seed: int = 0
    out_dir: str | None = None
    log_level: str = 'INFO'

    def __post_init__(self) -> None:
        for name in ('rtol', 'atol', 'first_step', 'det_tol', 'zero_on_contour_tol', 'cauchy_radius_fraction', 'newton_tol', 'double_point_tol', 'tame_separation', 'blowup_bound'):
            if not getattr(self, name) > 0:
                logger.error(f"Config field '{name}' must be > 0, got {getattr(self, name)}")
                raise ValueError(f"Config field '{name}' must be > 0, got {getattr(self, name)}")
        for name in ('frame_grid', 'contour_min_points', 'contour_points_per_k', 'cauchy_points', 'newton_max_iter', 'quadrature_nodes', 'chunk_size', 'threads', 'tail_terms', 'annulus_radii', 'annulus_angles'):
            if getattr(self, name) < 1:
                logger.error(f"Config field '{name}' must be >= 1, got {getattr(self, name)}")
                raise ValueError(f"Config field '{name}' must be >= 1, got {getattr(self, name)}")
        if self.det_refinements < 0:
            logger.error(f"Config field 'det_refinements' must be >= 0, got {self.det_refinements}")
            raise ValueError(f"Config field 'det_refinements' must be >= 0, got {self.det_refinements}")
        if self.K < 0 or self.K_align < 0:
            raise ValueError(f"Truncation radii must be nonnegative, got K={self.K}, K_align={self.K_align}")
        if self.K_align > self.K:
            logger.warning(f"K_align={self.K_align} exceeds K={self.K}; clamping to K.")
            object.__setattr__(self, 'K_align', self.K)

    def __getitem__(self, key: str) -> Any:
        return getattr(self, key)

    def get(self, key: str, default=None) -> Any:
        """Mimic dict.get(): Return the value for key if key is in the object, else default."""
        return getattr(self, key, default)

    def updated(self, **changes: Any) -> RunConfig:
        """Return a copy with the given fields changed, ignoring None values."""
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _parse_env_value(raw: str, default: Any) -> Any:
    """Parse an environment string with the type of the field default."""
    if isinstance(default, bool):
        if raw.strip().lower() in ('1', 'true', 'yes', 'on'):
            return True
        if raw.strip().lower() in ('0', 'false', 'no', 'off'):
            return False
        raise ValueError(f"Cannot parse boolean from '{raw}'")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if raw.strip().lower() in ('', 'none', 'null'):
        return None
    return raw

def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, Any]:
    """Collect the RunConfig fields set through SHG_SPECTRAL_<FIELD> environment variables."""
    environ = os.environ if environ is None else environ
    defaults = RunConfig()
    overrides: dict[str, Any] = {}
    for f in fields(RunConfig):
        key = f"{ENV_PREFIX}{f.name.upper()}"
        if key in environ:
            overrides[f.name] = _parse_env_value(environ[key], getattr(defaults, f.name))
    return overrides

def load_run_config(config_file: Path | str | None = None, environ: Mapping[str, str] | None = None, **cli_overrides: Any) -> RunConfig:
    """
    Build the run configuration: defaults, then config/run_config.json, then config_file, then environment, then CLI flags.

    Args:
        config_file (Path | str | None): Optional JSON file with RunConfig fields.
        environ (Mapping[str, str] | None): Environment to read overrides from, os.environ if None.
        cli_overrides: Explicit values, None entries are ignored.

    Returns:
        RunConfig: The merged configuration.
    """
    known = {f.name for f in fields(RunConfig)}
    merged: dict[str, Any] = {}
    for source in (load_config_file('run_config'), load_config_file(Path(config_file)) if config_file else None):
        if source is None:
            continue
        unknown = set(source) - known
        if unknown:
            logger.warning(f"Ignoring unknown config fields: {sorted(unknown)}")
        merged.update({k: v for k, v in source.items() if k in known})
    merged.update(env_overrides(environ))
    merged.update({k: v for k, v in cli_overrides.items() if v is not None and k in known})
    return RunConfig(**merged)

@cache
def get_run_config() -> RunConfig:
    """Default configuration used when an operation receives config=None."""
    return load_run_config()
