"""Scenario files: a versioned JSON description of one experiment."""

import json
import logging
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Any, Literal

if TYPE_CHECKING:
    from typing import Self

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from mckv.core.criteria import VerdictKind
from mckv.core.model import Density, ModelKind, ModelParams
from mckv.core.selfsim import SelfSimilar, SelfSimilarStart
from mckv.errors import ConfigurationError
from mckv.solvers.scheme import GridConfig

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
BUNDLED_PACKAGE = "mckv.scenarios"


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelSpec(_Spec):
    kind: ModelKind = ModelKind.LINEAR
    alpha: float
    beta: float = 0.0
    kappa: float = 0.125

    @model_validator(mode="after")
    def _check_params(self) -> "Self":
        if self.kind is ModelKind.LINEAR and self.alpha < 0:
            raise ValueError("alpha must be >= 0 for the linear model")
        if not 0.0 < self.kappa <= 0.125:
            raise ValueError("kappa must lie in (0, 1/8]")
        return self

    def to_params(self) -> ModelParams:
        return ModelParams(alpha=self.alpha, beta=self.beta, kappa=self.kappa, model=self.kind)


class DensitySpec(_Spec):
    """Initial data. ``selfsimilar`` starts from the exact profile at time ``t0``."""

    kind: Literal["exponential", "gamma2", "narrow_gaussian", "tabulated", "selfsimilar"]
    rate: float = Field(default=1.0, gt=0)
    x0: float | None = Field(default=None, gt=0)
    sigma: float | None = Field(default=None, gt=0)
    path: str | None = None
    c: float = 0.0
    t0: float = Field(default=0.5, gt=0)

    @model_validator(mode="after")
    def _check_fields(self) -> "Self":
        if self.kind == "narrow_gaussian" and self.x0 is None:
            raise ValueError("narrow_gaussian needs x0")
        if self.kind == "tabulated" and not self.path:
            raise ValueError("tabulated needs path")
        return self

    def build(self, params: ModelParams, base_dir: Path | None = None) -> Density | SelfSimilarStart:
        match self.kind:
            case "exponential":
                return Density.exponential(self.rate)
            case "gamma2":
                return Density.gamma_shape2(self.rate)
            case "narrow_gaussian":
                return Density.narrow_gaussian(self.x0, self.sigma)
            case "tabulated":
                path = Path(self.path)
                if not path.is_absolute() and base_dir is not None:
                    path = base_dir / path
                if not path.exists():
                    raise ConfigurationError(f"density.path: file not found: {path}")
                return Density.from_csv(path)
            case "selfsimilar":
                if params.model is not ModelKind.LINEAR:
                    raise ConfigurationError("density.kind: selfsimilar needs the linear model")
                profile = SelfSimilar(c=self.c, beta=params.beta, alpha=params.alpha)
                return SelfSimilarStart(profile, self.t0)


class ParticleSpec(_Spec):
    n: int = Field(ge=100)
    dt: float = Field(gt=0)
    seed: int | None = Field(default=None, ge=0)
    bridge: bool = False
    point_start: bool = False  # start a narrow_gaussian run exactly at x0


class CriteriaSpec(_Spec):
    mu_grid: list[float] | None = None
    delta: bool = False  # use the point-mass verdict for narrow_gaussian data


class ExpectSpec(_Spec):
    """What counts as success for ``run``."""

    outcome: Literal["blowup", "regular"] | None = None
    blowup_before: float | None = Field(default=None, gt=0)
    verdict: VerdictKind | None = None
    loss_error_max: float | None = Field(default=None, gt=0)
    compare: bool = False
    calibration: float = Field(default=1.0, gt=0)


class Scenario(_Spec):
    """One experiment: model, initial data and the engines to run."""

    schema_version: Literal[1]
    name: str
    description: str = ""
    model: ModelSpec
    density: DensitySpec
    T: float = Field(gt=0)
    grid: GridConfig | None = None
    particles: ParticleSpec | None = None
    criteria: CriteriaSpec | None = None
    expect: ExpectSpec = ExpectSpec()
    output_dir: str | None = None

    @property
    def params(self) -> ModelParams:
        return self.model.to_params()


def format_validation_error(error: ValidationError, prefix: str = "") -> str:
    """One ``dotted.path: message`` line per validation problem."""
    lines = []
    for item in error.errors():
        parts = [prefix] if prefix else []
        parts += [str(p) for p in item["loc"]]
        path = ".".join(parts) or "<root>"
        lines.append(f"{path}: {item['msg']}")
    return "\n".join(lines)


def parse_scenario(data: dict[str, Any]) -> Scenario:
    """Validate a decoded scenario document.

    Raises:
        ConfigurationError: With one ``field.path: message`` line per problem.
    """
    try:
        return Scenario.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(format_validation_error(e)) from e


def bundled_scenarios() -> list[str]:
    """Names of the scenarios shipped with the package."""
    root = resources.files(BUNDLED_PACKAGE)
    return sorted(p.name.removesuffix(".json") for p in root.iterdir() if p.name.endswith(".json"))


def load_scenario(ref: str | Path) -> tuple[Scenario, Path | None]:
    """Load a scenario from a file path or a bundled scenario name.

    Returns:
        The scenario and the directory relative paths resolve against
        (``None`` for bundled scenarios).

    Raises:
        ConfigurationError: If the file is missing, not JSON or invalid.
    """
    path = Path(ref)
    if path.exists():
        text = path.read_text(encoding="utf-8")
        base_dir: Path | None = path.resolve().parent
    elif str(ref) in bundled_scenarios():
        text = resources.files(BUNDLED_PACKAGE).joinpath(f"{ref}.json").read_text(encoding="utf-8")
        base_dir = None
    else:
        raise ConfigurationError(f"Scenario not found: {ref}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Scenario is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError("Scenario must be a JSON object")
    scenario = parse_scenario(data)
    logger.debug("Loaded scenario %s", scenario.name)
    return scenario, base_dir


def with_value(scenario: Scenario, parameter: str, value: float) -> Scenario:
    """Copy of ``scenario`` with the numeric field at dotted ``parameter`` replaced.

    Raises:
        ConfigurationError: If the path does not name a numeric field.
    """
    data = scenario.model_dump(mode="json")
    *parents, leaf = parameter.split(".")
    node: Any = data
    for key in parents:
        if not isinstance(node, dict) or not isinstance(node.get(key), dict):
            raise ConfigurationError(f"{parameter}: not a scenario field")
        node = node[key]
    current = node.get(leaf) if isinstance(node, dict) else None
    if isinstance(current, bool) or not isinstance(current, int | float):
        raise ConfigurationError(f"{parameter}: not a numeric scenario field")
    node[leaf] = int(value) if isinstance(current, int) and float(value).is_integer() else value
    return parse_scenario(data)
