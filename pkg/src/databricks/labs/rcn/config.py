import dataclasses
import os
import typing
from dataclasses import dataclass, field
from pathlib import Path

import yaml
from databricks.labs.blueprint.installation import Installation, SerdeError

from databricks.labs.rcn.grid import DirichletReflection, StripGrid, build_grid
from databricks.labs.rcn.optimize import SeedKind, SweepParams
from databricks.labs.rcn.selfdual import ProbeParams, QaShape, default_height

__all__ = ["RcnConfig", "RunConfig", "apply_overrides", "load_config"]


@dataclass
class RunConfig:
    """Configuration of one named run of the minimizer, the sweeps and the probes"""

    name: str = "default"  # name of the run configuration
    eps: list[float] = field(default_factory=list)  # wavenumber parameters in (0, 1]
    height: float = 0.0  # strip height L, 0 selects max(20, 8 / eps)
    m: int = 96  # nodes per shift-period in x
    n: int = 96  # cells in y
    k: list[int] = field(default_factory=list)  # Dirichlet node counts, empty selects an even spread over [0, m]
    delta: float = 0.0  # initial asymptotic phase shift for roll seeds
    seeds: list[str] = field(default_factory=lambda: ["knee", "zipper-seed"])  # roll, knee or zipper-seed
    reflection: str = "odd"  # ghost rule below the Dirichlet nodes; odd (theta_{i,-1} = -theta_{i,1}) or even
    tol: float = 1e-5  # max-norm of the projected gradient at convergence
    max_iters: int = 20000  # conjugate-gradient step cap
    jobs: int = 4  # worker threads of a sweep
    output_dir: str = "."  # directory receiving field files, CSV and YAML reports
    seed: int = 0  # random seed of the initial perturbation
    perturbation: float = 0.0  # amplitude of the random initial perturbation
    c: list[float] = field(default_factory=lambda: [1.0, 1.5, 2.0])  # widths of the blended test functions, 1 - a = c eps
    profile: str = "ramp"  # shape of q_a, ramp or tanh
    probe_spacing: float = 0.1  # node spacing of the test-function grids, 0 uses m and n
    nu: float = 0.0  # inset of the tanh profile, 0 selects c pi / 4
    gamma: float = 0.5  # overshoot of the tanh plateaus
    sigma_small: float = 0.0  # half-width of the partition transitions, 0 selects nu / 8
    blend_radius: list[float] = field(default_factory=lambda: [0.5, 1.0, 2.0])  # radii of the modified neighbourhood
    variants: list[str] = field(default_factory=lambda: ["squeeze", "extend"])  # vector fields to certify

    @property
    def seed_kinds(self) -> tuple[SeedKind, ...]:
        return tuple(SeedKind.parse(kind) for kind in self.seeds)

    @property
    def reflection_kind(self) -> DirichletReflection:
        try:
            return DirichletReflection(self.reflection)
        except ValueError:
            raise ValueError(f"Unknown reflection '{self.reflection}', expected odd or even") from None

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)

    def height_for(self, eps: float) -> float:
        return self.height or default_height(eps)

    def grid_for(self, eps: float) -> StripGrid:
        return build_grid(eps, self.height_for(eps), self.m, self.n)

    def sweep_params(self) -> SweepParams:
        return SweepParams(
            m=self.m,
            n=self.n,
            height=self.height or None,
            k_values=tuple(self.k) or None,
            seeds=self.seed_kinds,
            tol=self.tol,
            max_iters=self.max_iters,
            num_threads=self.jobs,
            reflection=self.reflection_kind,
        )

    @property
    def profile_shape(self) -> QaShape:
        return QaShape.parse(self.profile)

    def probe_params(self) -> ProbeParams:
        return ProbeParams(
            spacing=self.probe_spacing or 1.0,
            m=None if self.probe_spacing else self.m,
            n=None if self.probe_spacing else self.n,
            height=self.height or None,
            widths=tuple(self.c),
            blend_radii=tuple(self.blend_radius),
            shape=self.profile_shape,
            nu=self.nu or None,
            gamma=self.gamma,
            sigma_small=self.sigma_small or None,
            num_threads=self.jobs,
        )

    def validate(self, *, require_eps: bool = True) -> "RunConfig":
        """
        Check the run configuration and create the output directory.

        :param require_eps: reject an empty eps list; commands reading the grid from a field file pass False
        :return: the configuration itself
        :raises ValueError: on the first invalid setting
        """
        if require_eps and not self.eps:
            raise ValueError("At least one eps value is required")
        for eps in self.eps:
            if not 0.0 < eps <= 1.0:
                raise ValueError(f"eps must lie in (0, 1], got {eps}")
        if self.height < 0.0:
            raise ValueError(f"Strip height must be positive, got {self.height}")
        if self.m < 8 or self.n < 8:
            raise ValueError(f"Grid needs at least 8 nodes per direction, got m={self.m}, n={self.n}")
        for k in self.k:
            if not 0 <= k <= self.m:
                raise ValueError(f"Dirichlet node count must lie in [0, {self.m}], got k={k}")
        if not self.seed_kinds:
            raise ValueError("At least one seed kind is required")
        _ = self.reflection_kind  # raises on unknown values
        if self.tol <= 0.0:
            raise ValueError(f"Tolerance must be positive, got {self.tol}")
        if self.max_iters < 1 or self.jobs < 1:
            raise ValueError(f"max_iters and jobs must be positive, got {self.max_iters} and {self.jobs}")
        if not self.c or min(self.c) <= 0.0 or not 0.0 < self.gamma < 1.0:
            raise ValueError(f"Probe needs widths c > 0 and 0 < gamma < 1, got c={self.c}, gamma={self.gamma}")
        if not self.blend_radius or min(self.blend_radius) <= 0.0:
            raise ValueError(f"Blend radii must be positive, got {self.blend_radius}")
        if min(self.nu, self.sigma_small, self.probe_spacing, self.perturbation) < 0.0:
            raise ValueError("nu, sigma_small, probe_spacing and perturbation must be non-negative")
        _ = self.profile_shape  # raises on unknown values
        for variant in self.variants:
            if variant not in ("squeeze", "extend"):
                raise ValueError(f"Unknown vector field variant '{variant}', expected squeeze or extend")
        try:
            self.output_path.mkdir(parents=True, exist_ok=True)
        except OSError as err:
            raise ValueError(f"Output directory {self.output_dir} cannot be created: {err}") from None
        if not os.access(self.output_path, os.W_OK):
            raise ValueError(f"Output directory {self.output_dir} is not writable")
        return self


@dataclass
class RcnConfig:
    """Configuration file holding named run configurations"""

    __file__ = "config.yml"
    __version__ = 1

    run_configs: list[RunConfig]
    log_level: str | None = "INFO"

    def get_run_config(self, run_config_name: str | None = "default") -> RunConfig:
        """Get the run configuration for a given run name, or the first one if no run name is provided.
        :param run_config_name: The name of the run configuration to get.
        :return: The run configuration.
        :raises ValueError: If no run configurations are available or if the specified run configuration name is
        not found.
        """
        if not self.run_configs:
            raise ValueError("No run configurations available")

        if not run_config_name:
            return self.run_configs[0]

        for run in self.run_configs:
            if run.name == run_config_name:
                return run

        raise ValueError("No run configurations available")


def load_config(path: str | Path) -> RcnConfig:
    """
    Load run configurations from a yml or json file in the local filesystem.

    :param path: path to the file, which must carry `version: 1`
    :return: the parsed configuration
    """
    try:
        return Installation.load_local(RcnConfig, Path(path))
    except FileNotFoundError:
        msg = f"Config file {path} missing"
        raise FileNotFoundError(msg) from None
    except (SerdeError, yaml.YAMLError) as err:
        raise ValueError(f"Invalid config file {path}: {err}") from None


def _parse_scalar(name: str, kind: type, raw: str):
    try:
        return kind(raw.strip())
    except ValueError:
        raise ValueError(f"Invalid value for --{name.replace('_', '-')}: '{raw}'") from None


def _parse_flag(name: str, annotation, raw: str):
    if typing.get_origin(annotation) is list:
        (item,) = typing.get_args(annotation)
        parts = [part for part in raw.replace(" ", ",").split(",") if part]
        if not parts:
            raise ValueError(f"--{name.replace('_', '-')} needs at least one value")
        return [_parse_scalar(name, item, part) for part in parts]
    return _parse_scalar(name, annotation, raw)


def apply_overrides(run_config: RunConfig, flags: dict[str, str | None]) -> RunConfig:
    """
    Override fields of a run configuration with command-line flags.

    Flags arrive as strings; list fields take comma-separated values. Empty and unknown flags are ignored.
    """
    types = typing.get_type_hints(RunConfig)
    changes = {}
    for name, raw in flags.items():
        if name not in types or raw is None or raw == "":
            continue
        changes[name] = _parse_flag(name, types[name], raw)
    return dataclasses.replace(run_config, **changes)
