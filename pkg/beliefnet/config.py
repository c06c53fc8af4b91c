"""
Run configuration.

A run is described by an INI file:

    [network]
    kind = barabasi_albert      ; or: file = net.txt
    n = 100
    m = 3
    seed = 42

    [agents]
    mode = uniform_variance     ; homogeneous | per_agent | uniform_variance
    low = 0.009
    high = 0.18
    seed = 7

    [simulation]
    theta = 0.6
    horizon = 30
    replicates = 10000
    seed = 0

    [output]
    directory = results/desk

Environment (.env is honoured): BELIEFNET_THREADS, BELIEFNET_LOG_LEVEL.
"""
import configparser
import logging
import os
from pathlib import Path
from typing import List, Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, model_validator

from beliefnet.acquisition.engine import DEFAULT_VARIANCE_RANGE
from beliefnet.dynamics.models import SimConfig
from beliefnet.errors import ConfigError
from beliefnet.network.models import GraphKind, GraphSpec

logger = logging.getLogger(__name__)

load_dotenv()

KIND_ALIASES = {"ba": "barabasi_albert"}


def log_level(default: str = "INFO") -> int:
    name = os.getenv("BELIEFNET_LOG_LEVEL", default).upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.INFO


def env_threads() -> Optional[int]:
    raw = os.getenv("BELIEFNET_THREADS")
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"BELIEFNET_THREADS must be an integer, got {raw!r}")


class NetworkSource(BaseModel):
    kind: Optional[GraphKind] = None
    file: Optional[str] = None
    n: Optional[int] = None
    m: int = 3
    k: int = 1
    seed: int = 0
    allow_self_loops: bool = False

    @model_validator(mode="after")
    def _one_source(self):
        if (self.kind is None) == (self.file is None):
            raise ValueError("[network] needs exactly one of 'kind' or 'file'")
        if self.kind == "custom_file":
            raise ValueError("[network] use 'file = ...' instead of kind = custom_file")
        if self.kind is not None and self.n is None:
            raise ValueError(f"[network] kind = {self.kind} needs 'n'")
        return self

    def to_spec(self) -> GraphSpec:
        if self.file is not None:
            return GraphSpec(kind="custom_file", n=self.n or 0, path=self.file)
        return GraphSpec(kind=self.kind, n=self.n, m=self.m, k=self.k, seed=self.seed)


class AgentSpec(BaseModel):
    mode: Literal["homogeneous", "per_agent", "uniform_variance"]
    # homogeneous: one value each; per_agent: one value per agent (length 1 broadcasts)
    a: List[float] = Field(default_factory=list)
    b: List[float] = Field(default_factory=list)
    r: List[float] = Field(default_factory=list)
    # uniform_variance
    low: float = DEFAULT_VARIANCE_RANGE[0]
    high: float = DEFAULT_VARIANCE_RANGE[1]
    seed: int = 0

    @model_validator(mode="after")
    def _one_mode(self):
        given = [name for name in ("a", "b", "r") if getattr(self, name)]
        if self.mode == "uniform_variance":
            if given:
                raise ValueError(f"[agents] uniform_variance mode takes no {', '.join(given)}")
            if not 0.0 < self.low <= self.high:
                raise ValueError(f"[agents] need 0 < low <= high, got [{self.low}, {self.high}]")
            return self
        if len(given) != 3:
            raise ValueError(f"[agents] {self.mode} mode needs a, b and r")
        if self.mode == "homogeneous" and any(len(getattr(self, x)) != 1 for x in "abr"):
            raise ValueError("[agents] homogeneous mode takes a single value for a, b and r")
        return self


class OutputSpec(BaseModel):
    directory: str = "results"
    record_trajectories: bool = False

    def ensure(self) -> Path:
        path = Path(self.directory)
        try:
            path.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"output directory {path} cannot be created: {e}")
        if not os.access(path, os.W_OK):
            raise ConfigError(f"output directory {path} is not writable")
        return path


class RunConfig(BaseModel):
    network: NetworkSource
    agents: AgentSpec
    sim: SimConfig
    output: OutputSpec = Field(default_factory=OutputSpec)


def _split(value: str) -> List[str]:
    return [v.strip() for v in value.replace(";", ",").split(",") if v.strip()]


def _section(parser: configparser.ConfigParser, name: str, required: bool = True) -> dict:
    if not parser.has_section(name):
        if required:
            raise ConfigError(f"missing [{name}] section")
        return {}
    return dict(parser.items(name))


def parse_run_config(text: str, base_dir: Optional[Path] = None) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}")

    network = _section(parser, "network")
    if "kind" in network:
        network["kind"] = KIND_ALIASES.get(network["kind"], network["kind"])
    if "file" in network and base_dir is not None and not Path(network["file"]).is_absolute():
        network["file"] = str(base_dir / network["file"])

    agents = _section(parser, "agents")
    for key in ("a", "b", "r"):
        if key in agents:
            agents[key] = _split(agents[key])

    sim = _section(parser, "simulation")
    if "record" in sim:
        sim["record"] = frozenset(_split(sim["record"]))
    if "histogram_steps" in sim:
        sim["histogram_steps"] = _split(sim["histogram_steps"])
    if sim.get("convergence_tol", "").lower() in ("", "none"):
        sim.pop("convergence_tol", None)

    output = _section(parser, "output", required=False)

    try:
        cfg = RunConfig(
            network=NetworkSource(**network),
            agents=AgentSpec(**agents),
            sim=SimConfig(**sim),
            output=OutputSpec(**output),
        )
        cfg.sim.check()
        if cfg.network.kind is not None:
            cfg.network.to_spec().check()
    except ValidationError as e:
        raise ConfigError(f"invalid config: {e}")
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e))
    return cfg


def load_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    cfg = parse_run_config(text, base_dir=path.parent)
    logger.info(f"[IO] Loaded run config {path} ({cfg.agents.mode} agents, {cfg.sim.replicates} replicates)")
    return cfg
