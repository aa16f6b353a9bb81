import json
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional, Tuple

from dotenv import dotenv_values, load_dotenv

from utils.errors import ConfigurationError

load_dotenv()


class Config:
    """Process-wide defaults for the family Hermite-Einstein laboratory"""

    # Output configuration
    output_directory = os.getenv("FHE_OUTPUT_DIR", "output")
    # relative to each run directory
    logs_subdirectory = os.getenv("FHE_LOGS_SUBDIR", "logs")
    log_level = os.getenv("FHE_LOG_LEVEL", "INFO")

    # Reproducibility
    default_seed = int(os.getenv("FHE_SEED", "12345"))

    # Numerical tolerances
    holo_tol = float(os.getenv("HOLO_TOL", "1e-8"))
    gram_cond_max = float(os.getenv("GRAM_COND_MAX", "1e10"))
    flow_tol = float(os.getenv("FLOW_TOL", "1e-8"))
    monotone_tol = float(os.getenv("MONOTONE_TOL", "1e-8"))
    eig_floor = float(os.getenv("EIG_FLOOR", "1e-13"))
    obstruction_tol = float(os.getenv("OBSTRUCTION_TOL", "1e-8"))

    # Time stepping
    c_stab = float(os.getenv("C_STAB", "0.4"))
    snapshot_every = int(os.getenv("SNAPSHOT_EVERY", "10"))

    # Workflow behavior
    continue_on_failure = os.getenv("CONTINUE_ON_FAILURE", "true").lower() == "true"
    save_intermediate_results = os.getenv("SAVE_INTERMEDIATE", "true").lower() == "true"

    # Verify suite grid
    verify_fibre_n = int(os.getenv("VERIFY_FIBRE_N", "8"))
    verify_base_n = int(os.getenv("VERIFY_BASE_N", "8"))


config = Config()


SCHEMES = ("rk4", "semi_implicit")
INITIAL_DATA = ("identity", "diagonal_mode", "random_hermitian", "dirichlet_sine")
SUBCOMMANDS = ("verify", "flow", "dirichlet", "adiabatic", "nu", "report")


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value not in ("true", "false"):
        raise ValueError(f"expected true/false, got {text!r}")
    return value == "true"


def _parse_pair(text: str) -> Tuple[int, int]:
    parts = [int(p) for p in text.split(",")]
    if len(parts) != 2:
        raise ValueError(f"expected two comma-separated integers, got {text!r}")
    return parts[0], parts[1]


def _parse_float_list(text: str) -> List[float]:
    return [float(p) for p in text.split(",") if p.strip()]


def _parse_optional_float(text: str) -> Optional[float]:
    return None if text.strip().lower() in ("", "none") else float(text)


def _parse_optional_text(text: str) -> Optional[str]:
    return None if text.strip().lower() in ("", "none") else text.strip()


# config key -> (RunConfig attribute, parser)
_KEYS = {
    "GRID_FIBRE_N": ("fibre_n", int),
    "GRID_BASE_KIND": ("base_kind", str),
    "GRID_BASE_N": ("base_n", _parse_pair),
    "GRID_K": ("k", float),
    "BUNDLE_PRESET": ("preset", str),
    "BUNDLE_RANK": ("rank", int),
    "BUNDLE_HORIZONTAL_COUPLING": ("horizontal_coupling", _parse_optional_float),
    "BUNDLE_EPSILON": ("epsilon", float),
    "BUNDLE_CUSTOM_AV": ("custom_av", _parse_optional_text),
    "FLOW_LAMBDA": ("lam", float),
    "FLOW_DT": ("dt", float),
    "FLOW_T_END": ("t_end", float),
    "FLOW_TOL": ("tol", float),
    "FLOW_SCHEME": ("scheme", str),
    "FLOW_INITIAL": ("initial", str),
    "FLOW_AMPLITUDE": ("amplitude", float),
    "FLOW_MAX_STEPS": ("max_steps", int),
    "FLOW_SNAPSHOT_EVERY": ("snapshot_every", int),
    "ADIABATIC_K_LIST": ("k_list", _parse_float_list),
    "ADIABATIC_SKIP_PHI": ("skip_phi", _parse_bool),
    "ADIABATIC_SKIP_TAU": ("skip_tau", _parse_bool),
    "RUN_SEED": ("seed", int),
    "RUN_OUT": ("out", str),
}


def _format_value(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ",".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class RunConfig:
    """Parameters of one experiment run.

    Files are dotenv files; key prefixes (GRID_, BUNDLE_, FLOW_, ADIABATIC_,
    RUN_) play the role of sections.
    """

    fibre_n: int = 8
    base_kind: str = "torus"
    base_n: Tuple[int, int] = (8, 8)
    k: float = 1.0
    preset: str = "diagonal_zero"
    rank: int = 2
    horizontal_coupling: Optional[float] = None
    epsilon: float = 0.5
    custom_av: Optional[str] = None
    lam: float = 1.0
    dt: float = 1e-3
    t_end: float = 0.1
    tol: float = field(default_factory=lambda: config.flow_tol)
    scheme: str = "rk4"
    initial: str = "identity"
    amplitude: float = 0.1
    max_steps: int = 100000
    snapshot_every: int = field(default_factory=lambda: config.snapshot_every)
    k_list: List[float] = field(default_factory=lambda: [16.0, 32.0, 64.0, 128.0])
    skip_phi: bool = False
    skip_tau: bool = False
    seed: int = field(default_factory=lambda: config.default_seed)
    out: str = field(default_factory=lambda: config.output_directory)

    def __post_init__(self):
        self.base_n = tuple(int(n) for n in self.base_n)
        self.k_list = [float(k) for k in self.k_list]
        self.validate()

    def validate(self) -> None:
        from bundle.presets import PRESETS

        problems = []
        if self.fibre_n < 4 or self.fibre_n % 2:
            problems.append(f"GRID_FIBRE_N must be even and >= 4 (got {self.fibre_n})")
        if self.base_kind not in ("torus", "annulus"):
            problems.append(f"GRID_BASE_KIND must be torus or annulus (got {self.base_kind!r})")
        if len(self.base_n) != 2 or min(self.base_n) < 4:
            problems.append(f"GRID_BASE_N must be two sizes >= 4 (got {self.base_n})")
        if self.k <= 0:
            problems.append("GRID_K must be positive")
        if self.preset not in PRESETS:
            problems.append(f"unknown BUNDLE_PRESET {self.preset!r}")
        if self.rank < 1:
            problems.append("BUNDLE_RANK must be >= 1")
        if self.lam < 0:
            problems.append("FLOW_LAMBDA must be non-negative")
        if self.dt <= 0 or self.t_end < 0 or self.tol <= 0:
            problems.append("FLOW_DT and FLOW_TOL must be positive, FLOW_T_END non-negative")
        if self.scheme not in SCHEMES:
            problems.append(f"FLOW_SCHEME must be one of {SCHEMES} (got {self.scheme!r})")
        if self.initial not in INITIAL_DATA:
            problems.append(f"FLOW_INITIAL must be one of {INITIAL_DATA} (got {self.initial!r})")
        if self.max_steps < 1 or self.snapshot_every < 1:
            problems.append("FLOW_MAX_STEPS and FLOW_SNAPSHOT_EVERY must be >= 1")
        if not self.k_list or min(self.k_list) <= 0:
            problems.append("ADIABATIC_K_LIST must hold positive values")
        if problems:
            raise ConfigurationError("; ".join(problems))

    @classmethod
    def from_mapping(cls, values: Dict[str, Optional[str]]) -> "RunConfig":
        unknown = sorted(set(values) - set(_KEYS))
        if unknown:
            raise ConfigurationError(f"unknown configuration keys: {', '.join(unknown)}")
        kwargs = {}
        for key, text in values.items():
            attr, parser = _KEYS[key]
            try:
                kwargs[attr] = parser(text if text is not None else "")
            except (TypeError, ValueError) as exc:
                raise ConfigurationError(f"invalid value for {key}: {exc}") from exc
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        if not os.path.isfile(path):
            raise FileNotFoundError(path)
        return cls.from_mapping(dict(dotenv_values(path)))

    def to_text(self) -> str:
        lines = []
        for key, (attr, _) in _KEYS.items():
            value = getattr(self, attr)
            text = _format_value(value)
            if attr == "custom_av" and value is not None:
                text = "'" + json.dumps(json.loads(value)) + "'"
            lines.append(f"{key}={text}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["base_n"] = list(self.base_n)
        return data

    def replace(self, **changes) -> "RunConfig":
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        return RunConfig(**data)
