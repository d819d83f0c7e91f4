"""Scenario configuration: YAML loading, defaults and validation.

Grammar (all keys except ``hosts``, ``strategy``, ``lambda`` and
``deadline`` are optional)::

    name: mec-android
    strategy: hybrid          # local, server, tmin, emin, hybrid, balanced,
                              # lf:tmin, lf:hybrid, lf:balanced, server:<host>
    fallback: tmin            # hybrid/balanced with empty feasible set: tmin | cancel
    server: cloudlet          # SERVER target when strategy is plain "server"
    lambda: 12                # mean job inter-arrival time per generator (s)
    deadline: 9               # relative deadline (s)
    duration: 600             # job generation window (s)
    repetitions: 6
    seed: 1
    dissemination_period: 0.1 # 0 = every decision sees fresh state
    contention_mode: fixed    # fixed | fair
    corrected_tc: false
    jitter: 0.1               # default exec_time_jitter for built-in profiles
    window: 10                # moving-average window
    input_size: 2200000       # bytes
    output_size: 4096         # bytes
    hosts:
      - pixel4                          # built-in profile, default role
      - {profile: cloudlet, role: worker}
      - {name: box, role: worker, p_idle: 5, p_compute: 20, p_upload: 6,
         p_download: 6, exec_time_mean: 2.0, uplink_bw: 1e8, downlink_bw: 1e8}
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import yaml

from .core_model import DEFAULT_INPUT_SIZE, DEFAULT_OUTPUT_SIZE, DeviceProfile, Role
from .estimation import DEFAULT_WINDOW
from .profiles import builtin_profiles
from .strategies import LocalFirst, Local, Server, Strategy, parse_strategy

log = logging.getLogger(__name__)

_PROFILE_FIELDS = {f.name for f in dataclasses.fields(DeviceProfile)} - {"host", "role"}
_TOP_KEYS = {
    "name",
    "strategy",
    "fallback",
    "server",
    "lambda",
    "deadline",
    "duration",
    "repetitions",
    "seed",
    "dissemination_period",
    "contention_mode",
    "corrected_tc",
    "jitter",
    "window",
    "input_size",
    "output_size",
    "hosts",
}


class ConfigError(ValueError):
    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("invalid scenario:\n  - " + "\n  - ".join(self.errors))


@dataclass(frozen=True)
class ScenarioConfig:
    hosts: Tuple[DeviceProfile, ...]
    strategy: str
    lam: float
    deadline: float
    duration: float = 600.0
    repetitions: int = 6
    seed: int = 0
    dissemination_period: float = 0.1
    contention_mode: str = "fixed"
    corrected_tc: bool = False
    fallback: str = "tmin"
    server: Optional[str] = None
    window: int = DEFAULT_WINDOW
    input_size: float = DEFAULT_INPUT_SIZE
    output_size: float = DEFAULT_OUTPUT_SIZE
    name: str = "scenario"
    warnings: Tuple[str, ...] = field(default=(), compare=False)

    @property
    def host_ids(self) -> List[str]:
        return [h.host for h in self.hosts]

    @property
    def generators(self) -> List[DeviceProfile]:
        return [h for h in self.hosts if h.role.generates]

    @property
    def workers(self) -> List[DeviceProfile]:
        return [h for h in self.hosts if h.role.executes]

    @property
    def fc_mode(self) -> bool:
        roles = [h.role for h in self.hosts]
        return roles.count(Role.GENERATOR) == 1 and roles.count(Role.BOTH) == 0

    def strategy_obj(self) -> Strategy:
        return parse_strategy(self.strategy, server=self.server, fallback=self.fallback)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


def validate(cfg: ScenarioConfig) -> ScenarioConfig:
    """Return ``cfg`` with warnings attached; raise ConfigError listing every violation."""
    errors: List[str] = []
    warnings: List[str] = []

    ids = cfg.host_ids
    dupes = sorted({h for h in ids if ids.count(h) > 1})
    if dupes:
        errors.append(f"duplicate host names: {', '.join(dupes)}")
    if not cfg.workers:
        errors.append("no host has a worker role")
    if not cfg.generators:
        errors.append("no host generates jobs")
    if cfg.lam <= 0:
        errors.append(f"lambda must be > 0 (got {cfg.lam})")
    if cfg.deadline <= 0:
        errors.append(f"deadline must be > 0 (got {cfg.deadline})")
    if cfg.duration <= 0:
        errors.append(f"duration must be > 0 (got {cfg.duration})")
    if cfg.repetitions < 1:
        errors.append("repetitions must be >= 1")
    if cfg.dissemination_period < 0:
        errors.append("dissemination_period must be >= 0")
    if cfg.window < 1:
        errors.append("window must be >= 1")
    if cfg.contention_mode not in ("fixed", "fair"):
        errors.append(f"contention_mode must be fixed or fair (got {cfg.contention_mode!r})")
    if cfg.fallback not in ("tmin", "cancel"):
        errors.append(f"fallback must be tmin or cancel (got {cfg.fallback!r})")
    if cfg.input_size <= 0 or cfg.output_size < 0:
        errors.append("input_size must be > 0 and output_size >= 0")

    strategy = None
    try:
        strategy = cfg.strategy_obj()
    except ValueError as exc:
        errors.append(str(exc))

    if isinstance(strategy, LocalFirst):
        if cfg.fc_mode:
            errors.append(
                f"{cfg.strategy} is local-first and only applies when generators also "
                "execute jobs; the femtocloud configuration has a generator-only host"
            )
        elif any(not h.role.executes for h in cfg.generators):
            errors.append(f"{cfg.strategy} needs every generating host to also be a worker")
    if isinstance(strategy, Local) and any(not h.role.executes for h in cfg.generators):
        errors.append("local strategy needs every generating host to also be a worker")
    if isinstance(strategy, Server):
        target = next((h for h in cfg.hosts if h.host == strategy.host), None)
        if target is None:
            errors.append(f"server host {strategy.host!r} is not in the topology")
        elif target.role is not Role.WORKER:
            errors.append(f"server host {strategy.host!r} must have the worker role")

    if errors:
        raise ConfigError(errors)
    # in the femtocloud the single generator fires len(workers) times as often,
    # so the per-device gap is what the deadline should be compared with
    per_device = cfg.lam * len(cfg.workers) if cfg.fc_mode else cfg.lam
    if cfg.deadline > per_device:
        warnings.append(f"deadline {cfg.deadline} exceeds lambda {per_device}; experiments use d <= lambda")
    for w in warnings:
        log.warning(w)
    return cfg.replace(warnings=tuple(warnings))


def _host_from_entry(entry, jitter: float, profiles, errors: List[str]) -> Optional[DeviceProfile]:
    if isinstance(entry, str):
        entry = {"profile": entry}
    if not isinstance(entry, dict):
        errors.append(f"host entry must be a name or mapping (got {entry!r})")
        return None
    entry = dict(entry)
    role = entry.pop("role", None)
    try:
        role = Role(role) if role is not None else None
    except ValueError:
        errors.append(f"unknown role {role!r}")
        return None
    base = entry.pop("profile", None)
    name = entry.pop("name", base)
    unknown = set(entry) - _PROFILE_FIELDS
    if unknown:
        errors.append(f"host {name!r}: unknown keys {sorted(unknown)}")
        return None
    if base is not None:
        if base not in profiles:
            errors.append(f"unknown built-in profile {base!r}; known: {', '.join(profiles)}")
            return None
        fields = dataclasses.asdict(profiles[base])
    else:
        fields = {"role": Role.BOTH, "exec_time_jitter": jitter}
        missing = _PROFILE_FIELDS - {"exec_time_jitter"} - set(entry)
        if missing:
            errors.append(f"host {name!r}: inline profile missing {sorted(missing)}")
            return None
    if name is None:
        errors.append("inline host needs a name")
        return None
    for key, value in entry.items():
        # YAML 1.1 reads forms like 1.0e8 as strings
        try:
            fields[key] = float(value)
        except (TypeError, ValueError):
            errors.append(f"host {name!r}: {key} must be a number (got {value!r})")
            return None
    fields["host"] = str(name)
    if role is not None:
        fields["role"] = role
    try:
        return DeviceProfile(**fields)
    except (TypeError, ValueError) as exc:
        errors.append(str(exc))
        return None


def from_dict(data: dict) -> ScenarioConfig:
    errors: List[str] = []
    if not isinstance(data, dict):
        raise ConfigError(["config must be a mapping"])
    unknown = set(data) - _TOP_KEYS
    if unknown:
        errors.append(f"unknown keys: {sorted(unknown)}")
    for key in ("hosts", "strategy", "lambda", "deadline"):
        if key not in data:
            errors.append(f"missing required key {key!r}")
    if errors:
        raise ConfigError(errors)

    jitter = float(data.get("jitter", 0.1))
    profiles = builtin_profiles(jitter)
    hosts = [_host_from_entry(e, jitter, profiles, errors) for e in data["hosts"] or []]
    if errors:
        raise ConfigError(errors)
    try:
        cfg = ScenarioConfig(
            hosts=tuple(hosts),
            strategy=str(data["strategy"]),
            lam=float(data["lambda"]),
            deadline=float(data["deadline"]),
            duration=float(data.get("duration", 600.0)),
            repetitions=int(data.get("repetitions", 6)),
            seed=int(data.get("seed", 0)),
            dissemination_period=float(data.get("dissemination_period", 0.1)),
            contention_mode=str(data.get("contention_mode", "fixed")),
            corrected_tc=bool(data.get("corrected_tc", False)),
            fallback=str(data.get("fallback", "tmin")),
            server=data.get("server"),
            window=int(data.get("window", DEFAULT_WINDOW)),
            input_size=float(data.get("input_size", DEFAULT_INPUT_SIZE)),
            output_size=float(data.get("output_size", DEFAULT_OUTPUT_SIZE)),
            name=str(data.get("name", "scenario")),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError([f"bad value: {exc}"]) from None
    return validate(cfg)


def load_and_validate(path) -> ScenarioConfig:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"{path}: not valid YAML: {exc}"]) from None
    return from_dict(data)


# -- ready-made topologies ---------------------------------------------------


def android_mec(strategy: str, lam: float, deadline: float, **kw) -> ScenarioConfig:
    """The five Android devices, each generating and executing jobs."""
    from .profiles import ANDROID

    return from_dict({"hosts": list(ANDROID), "strategy": strategy, "lambda": lam, "deadline": deadline, **kw})


def cloudlet_mec(strategy: str, lam: float, deadline: float, **kw) -> ScenarioConfig:
    """Android MEC plus the cloudlet as a pure worker."""
    from .profiles import ANDROID

    hosts = list(ANDROID) + [{"profile": "cloudlet", "role": "worker"}]
    kw.setdefault("server", "cloudlet")
    return from_dict({"hosts": hosts, "strategy": strategy, "lambda": lam, "deadline": deadline, **kw})


def android_fc(strategy: str, lam: float, deadline: float, **kw) -> ScenarioConfig:
    """One external generator feeding the five Android devices as workers.

    ``lam`` is the per-device rate of the equivalent MEC run; the generator
    fires at ``lam / 5``.
    """
    from .profiles import ANDROID

    hosts = ["fc_generator"] + [{"profile": a, "role": "worker"} for a in ANDROID]
    return from_dict(
        {"hosts": hosts, "strategy": strategy, "lambda": lam / len(ANDROID), "deadline": deadline, **kw}
    )
