"""Experiment configuration: TOML files and built-in presets.

A config is a flat TOML document with typed blocks; delay atom values may
name the sweep parameter (e.g. "d1") and get substituted per sweep point.
"""

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from dataclasses import dataclass, field

import numpy as np

from .ctmc import validate_generator
from .delays import Deterministic, DiscreteAtoms, Exponential
from .errors import ConfigParseError

DEFAULT_SWEEP = [float(x) for x in np.geomspace(0.05, 3.0, 16)]
ALL_POLICIES = ["zw", "cw", "state_ind", "delay_ind", "greedy", "opt_wait"]


@dataclass
class SimSpec:
    enabled: bool = True
    cycles: int = 1_000_000
    seed: int = 0
    burn_in: int = 1_000


@dataclass
class ExperimentConfig:
    name: str
    generator_rows: list
    estimator: str = "martingale"
    forward_delay: dict = field(default_factory=lambda: {"kind": "deterministic", "value": 0.0})
    backward_delay: dict = field(default_factory=dict)
    w_max: float = 1.5
    sweep_parameter: str = "d1"
    sweep_values: list = field(default_factory=lambda: list(DEFAULT_SWEEP))
    policies: list = field(default_factory=lambda: list(ALL_POLICIES))
    sim: SimSpec = field(default_factory=SimSpec)
    output: str | None = None

    def validate(self):
        if self.w_max <= 0.0:
            raise ConfigParseError("w_max must be positive")
        validate_generator(self.generator_rows)
        unknown = set(self.policies) - set(ALL_POLICIES)
        if unknown:
            raise ConfigParseError(f"unknown policies: {sorted(unknown)}")
        for v in self.sweep_values:
            if not (isinstance(v, (int, float)) and v >= 0.0):
                raise ConfigParseError(f"bad sweep value {v!r}")
        for spec in (self.forward_delay, self.backward_delay):
            if spec.get("kind") not in ("deterministic", "atoms", "exponential"):
                raise ConfigParseError(f"bad delay spec {spec!r}")
        return self


def build_delay(spec: dict, sweep_parameter: str, sweep_value: float):
    """Instantiate a delay spec, substituting the sweep parameter name."""
    kind = spec["kind"]
    if kind == "deterministic":
        return Deterministic(_subst(spec["value"], sweep_parameter, sweep_value))
    if kind == "exponential":
        return Exponential(rate=float(spec["rate"]))
    if kind == "atoms":
        vals = [_subst(v, sweep_parameter, sweep_value) for v, _ in spec["atoms"]]
        probs = [float(p) for _, p in spec["atoms"]]
        return DiscreteAtoms(values=np.array(vals), probs=np.array(probs))
    raise ConfigParseError(f"unknown delay kind {kind!r}")


def _subst(value, name, sweep_value):
    if isinstance(value, str):
        if value != name:
            raise ConfigParseError(f"unknown parameter reference {value!r}")
        return float(sweep_value)
    return float(value)


def _binary_preset(name, alpha, beta, forward):
    return ExperimentConfig(
        name=name,
        generator_rows=[[-alpha, alpha], [beta, -beta]],
        forward_delay=forward,
        backward_delay={"kind": "atoms", "atoms": [[0.0, 0.5], ["d1", 0.5]]},
    )


def presets() -> dict:
    return {
        "exp1": _binary_preset("exp1", 1.0, 0.1, {"kind": "deterministic", "value": 0.0}),
        "exp2": _binary_preset("exp2", 0.6, 0.4, {"kind": "deterministic", "value": 0.0}),
        "exp3": _binary_preset(
            "exp3", 1.0, 0.1, {"kind": "atoms", "atoms": [[0.3, 0.3], [0.5, 0.3], [1.0, 0.4]]}
        ),
    }


def load_config(source: str) -> ExperimentConfig:
    """Resolve a preset name or parse a TOML config file."""
    table = presets()
    if source in table:
        return table[source].validate()
    try:
        with open(source, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigParseError(f"no preset or config file named {source!r}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParseError(f"TOML parse error in {source}: {exc}") from exc
    try:
        cfg = ExperimentConfig(
            name=doc.get("name", source),
            generator_rows=doc["generator"]["rows"],
            estimator=doc.get("estimator", "martingale"),
            forward_delay=doc["forward_delay"],
            backward_delay=doc["backward_delay"],
            w_max=float(doc.get("w_max", 1.5)),
            sweep_parameter=doc.get("sweep", {}).get("parameter", "d1"),
            sweep_values=list(doc.get("sweep", {}).get("values", DEFAULT_SWEEP)),
            policies=list(doc.get("sweep", {}).get("policies", ALL_POLICIES)),
            sim=SimSpec(
                enabled=doc.get("sim", {}).get("enabled", True),
                cycles=int(doc.get("sim", {}).get("cycles", 1_000_000)),
                seed=int(doc.get("sim", {}).get("seed", 0)),
                burn_in=int(doc.get("sim", {}).get("burn_in", 1_000)),
            ),
            output=doc.get("output", {}).get("path"),
        )
    except KeyError as exc:
        raise ConfigParseError(f"missing config key: {exc}") from exc
    return cfg.validate()
