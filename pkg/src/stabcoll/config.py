"""Run configuration: loading, defaults and validation."""
from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from .exceptions import ConfigError

__all__ = [
    "PROBLEMS", "SWEEP_AXES", "Stabilization", "Constants", "SolverConfig", "OutputConfig",
    "RunConfig", "load_config", "config_from_mapping",
]

SCALAR_PROBLEMS = ("bl1d", "sine1d", "sine2d", "skew")
FLOW_PROBLEMS = ("stokes_vortex", "stokes_cavity", "ns_vortex", "kovasznay", "ns_cavity")
PROBLEMS = SCALAR_PROBLEMS + FLOW_PROBLEMS
FORMS = ("vp", "rotational")
KNOT_STYLES = ("uniform", "stretched")

# Peclet / Reynolds defaults per problem
_DEFAULT_PE = {"bl1d": 500.0, "sine1d": 1.0, "sine2d": 1.0, "skew": 1000.0}
_DEFAULT_RE = {"ns_vortex": 1.0, "kovasznay": 40.0, "ns_cavity": 100.0}

# sweep axis -> (section, attribute)
SWEEP_AXES = {
    "n_elem": (None, "n_elem"),
    "k": (None, "degree"),
    "C": ("constants", "C"),
    "Pe": (None, "pe"),
    "Re": (None, "re"),
}


@dataclass
class Stabilization:
    supg: bool = True
    pspg: bool = True
    graddiv: bool = True


@dataclass
class Constants:
    C: float = 1.0
    C1: float = 4.0
    C2: float = 4.0
    C3: float = 4.0
    s_rot: float = 0.1


@dataclass
class SolverConfig:
    rtol: float = 1e-10
    max_iter: int = 50
    line_search: bool = True
    tau_jacobian: str = "lagged"
    continuation: list | None = None   # Reynolds ladder for ns_cavity


@dataclass
class OutputConfig:
    directory: str = "runs/default"
    samples_per_span: int = 4
    vtk: bool = False
    matrix_market: bool = False


@dataclass
class RunConfig:
    """Everything needed to reproduce one solve.

    ``n_elem`` is an element count per direction or a list of them; a list
    runs a mesh sequence and fits convergence rates.
    """

    problem: str
    form: str = "vp"
    degree: int = 4
    n_elem: int | list = 16
    knots: str = "uniform"
    pe: float | None = None
    re: float | None = None
    mu: float = 1.0
    stabilization: Stabilization = field(default_factory=Stabilization)
    constants: Constants = field(default_factory=Constants)
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    reference: dict | None = None   # {"u": path, "v": path}

    def __post_init__(self):
        if self.pe is None and self.problem in _DEFAULT_PE:
            self.pe = _DEFAULT_PE[self.problem]
        if self.re is None and self.problem in _DEFAULT_RE:
            self.re = _DEFAULT_RE[self.problem]
        self.validate()

    # ------------------------------------------------------------------
    @property
    def is_flow(self) -> bool:
        return self.problem in FLOW_PROBLEMS

    @property
    def dim(self) -> int:
        return 1 if self.problem in ("bl1d", "sine1d") else 2

    @property
    def meshes(self) -> list:
        return list(self.n_elem) if isinstance(self.n_elem, (list, tuple)) else [self.n_elem]

    @property
    def equations(self) -> str | None:
        if not self.is_flow:
            return None
        kind = "ns" if self.problem in ("ns_vortex", "kovasznay", "ns_cavity") else "stokes"
        return "%s_%s" % (kind, "rot" if self.form == "rotational" else "vp")

    def validate(self) -> None:
        if self.problem not in PROBLEMS:
            raise ConfigError("unknown problem %r; choose one of %s" % (self.problem, ", ".join(PROBLEMS)))
        if self.form not in FORMS:
            raise ConfigError("form must be 'vp' or 'rotational', got %r" % (self.form,))
        if self.form == "rotational" and not self.is_flow:
            raise ConfigError("form 'rotational' applies to flow problems only; %r is scalar transport"
                              % self.problem)
        if not isinstance(self.degree, int) or self.degree < 1:
            raise ConfigError("degree must be a positive integer")
        if self.is_flow and self.degree < 2:
            raise ConfigError("%s form needs degree >= 2 (second derivatives are collocated); got k=%d"
                              % (self.form, self.degree))
        if not self.is_flow and self.stabilization.supg and self.degree < 2:
            raise ConfigError("SUPG needs degree >= 2; set stabilization.supg: false or raise the degree")
        meshes = self.meshes
        if not meshes:
            raise ConfigError("n_elem list is empty")
        for n in meshes:
            if not isinstance(n, int) or n < 1:
                raise ConfigError("n_elem entries must be positive integers, got %r" % (n,))
            if self.knots == "stretched" and n < 2:
                raise ConfigError("stretched knots need n_elem >= 2")
        if self.knots not in KNOT_STYLES:
            raise ConfigError("knots must be 'uniform' or 'stretched', got %r" % (self.knots,))
        if self.problem in _DEFAULT_PE and not (self.pe and self.pe > 0):
            raise ConfigError("Pe must be positive")
        if self.problem in _DEFAULT_RE and not (self.re and self.re > 0):
            raise ConfigError("Re must be positive")
        if self.problem in ("stokes_vortex", "stokes_cavity") and not self.mu > 0:
            raise ConfigError("mu must be positive")
        c = self.constants
        for name in ("C1", "C2", "C3", "s_rot"):
            if not getattr(c, name) > 0:
                raise ConfigError("constants.%s must be positive" % name)
        if c.C < 0:
            raise ConfigError("constants.C must be non-negative")
        s = self.solver
        if s.tau_jacobian not in ("lagged", "full"):
            raise ConfigError("solver.tau_jacobian must be 'lagged' or 'full'")
        if not s.rtol > 0 or s.max_iter < 1:
            raise ConfigError("solver.rtol must be positive and solver.max_iter >= 1")
        if s.continuation is not None and (not s.continuation or min(s.continuation) <= 0):
            raise ConfigError("solver.continuation must list positive Reynolds numbers")
        if self.output.samples_per_span < 1:
            raise ConfigError("output.samples_per_span must be >= 1")
        if self.reference is not None:
            if self.problem != "ns_cavity":
                raise ConfigError("reference profiles are only compared for ns_cavity")
            bad = set(self.reference) - {"u", "v"}
            if bad:
                raise ConfigError("reference keys must be 'u' and/or 'v', got %s" % sorted(bad))

    # ------------------------------------------------------------------
    def to_dict(self) -> dict:
        return asdict(self)

    def with_value(self, axis: str, value) -> "RunConfig":
        """Copy with one sweep axis set to ``value``."""
        if axis not in SWEEP_AXES:
            raise ConfigError("unknown sweep axis %r; choose one of %s" % (axis, ", ".join(SWEEP_AXES)))
        section, attr = SWEEP_AXES[axis]
        if axis in ("n_elem", "k"):
            value = _as_int(value, axis)
        else:
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ConfigError("%s values must be numbers, got %r" % (axis, value)) from None
        new = copy.deepcopy(self)
        if section is None:
            if axis == "Pe" and self.problem not in _DEFAULT_PE:
                raise ConfigError("Pe applies to scalar transport problems only")
            if axis == "Re" and self.problem not in _DEFAULT_RE:
                raise ConfigError("Re applies to Navier-Stokes problems only")
            setattr(new, attr, value)
        else:
            setattr(new, section, replace(getattr(new, section), **{attr: value}))
        new.validate()
        return new


def _as_int(v, name):
    try:
        f = float(v)
    except (TypeError, ValueError):
        raise ConfigError("%s values must be integers, got %r" % (name, v)) from None
    if f != int(f):
        raise ConfigError("%s values must be integers, got %r" % (name, v))
    return int(f)


_SECTIONS = {"stabilization": Stabilization, "constants": Constants,
             "solver": SolverConfig, "output": OutputConfig}


def config_from_mapping(data: dict) -> RunConfig:
    """Build a validated :class:`RunConfig` from nested dictionaries."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    if "problem" not in data:
        raise ConfigError("configuration needs a 'problem' key")
    top = {f.name for f in fields(RunConfig)}
    unknown = set(data) - top
    if unknown:
        raise ConfigError("unknown configuration keys: %s" % ", ".join(sorted(unknown)))
    kwargs = {}
    for key, value in data.items():
        if key in _SECTIONS:
            cls = _SECTIONS[key]
            if value is None:
                value = {}
            if not isinstance(value, dict):
                raise ConfigError("%s must be a mapping" % key)
            allowed = {f.name for f in fields(cls)}
            bad = set(value) - allowed
            if bad:
                raise ConfigError("unknown keys in %s: %s (allowed: %s)"
                                  % (key, ", ".join(sorted(bad)), ", ".join(sorted(allowed))))
            try:
                kwargs[key] = cls(**value)
            except TypeError as exc:
                raise ConfigError("%s: %s" % (key, exc)) from None
        else:
            kwargs[key] = value
    # YAML reads "1e-10" as a string; coerce numeric fields explicitly
    try:
        for key in ("pe", "re", "mu"):
            if kwargs.get(key) is not None:
                kwargs[key] = float(kwargs[key])
        c = kwargs.get("constants")
        if c is not None:
            for name in ("C", "C1", "C2", "C3", "s_rot"):
                setattr(c, name, float(getattr(c, name)))
        s = kwargs.get("solver")
        if s is not None:
            s.rtol = float(s.rtol)
            if s.continuation is not None:
                s.continuation = [float(r) for r in s.continuation]
    except (TypeError, ValueError) as exc:
        raise ConfigError("non-numeric value in configuration: %s" % exc) from None
    return RunConfig(**kwargs)


def load_config(path) -> RunConfig:
    """Read a YAML configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc)) from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("%s is not valid YAML: %s" % (path, exc)) from None
    return config_from_mapping(data)
