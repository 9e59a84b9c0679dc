"""Experiment configuration files.

A flat, sectioned key-value format with an explicit ``spec_version``
key, chosen over nested formats so configs diff cleanly and parse
errors can always name a line:

    spec_version = 1

    [model]
    sigma2 = 1.0
    kappa2 = 2.0
    theta0 = 1.0, 1.0

    [policy exponential]
    family = exponential
    n0 = 10
    u = 0.5

    [run] / [cost] / [output] sections follow the same key = value shape.

Policy sections are one per labeled policy; the ``family`` key selects
constant, polynomial, exponential, explicit, batch_constant,
batch_linear, batch_exponential, budget_constant or budget_linear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import policy as pol

__all__ = [
    "ConfigError",
    "PolicyConfig",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "build_schedule",
    "apply_override",
]


class ConfigError(ValueError):
    """Config problem, with the offending line number where known."""


_POLICY_FAMILIES = {
    "constant": {"n0"},
    "polynomial": {"n0", "alpha"},
    "exponential": {"n0", "u"},
    "explicit": {"schedule"},
    "batch_constant": {"n", "B"},
    "batch_linear": {"n", "B"},
    "batch_exponential": {"n", "u", "B"},
    "budget_constant": {"n0", "u"},
    "budget_linear": {"n0", "u", "normalization"},
}
_POLICY_OPTIONAL = {"budget_linear": {"normalization"}}

_SECTION_KEYS = {
    "model": {"d", "sigma2", "kappa2", "theta0"},
    "run": {
        "T",
        "runs",
        "master_seed",
        "update",
        "eta",
        "max_draws_per_iter",
        "divergence_cap",
    },
    "cost": {"c_g", "c_t"},
    "output": {"directory", "emit_svg", "eval_samples"},
}


@dataclass(frozen=True)
class PolicyConfig:
    label: str
    family: str
    params: dict[str, object]
    line: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    sigma2: float
    kappa2: float
    theta0: np.ndarray
    policies: tuple[PolicyConfig, ...]
    T: int
    runs: int
    master_seed: int
    update: str = "mle"
    eta: float | None = None
    max_draws_per_iter: int | None = None
    divergence_cap: float = 1e6
    c_g: float = 0.0
    c_t: float = 1.0
    out_dir: str = "out"
    emit_svg: bool = True
    eval_samples: int = 10_000

    @property
    def d(self) -> int:
        return self.theta0.size


@dataclass
class _Entry:
    value: str
    line: int


def _tokenize(text: str) -> tuple[dict[str, _Entry], dict[str, dict[str, _Entry]], list[tuple[str, int]]]:
    """Split into top-level keys, per-section keys, and section order."""
    top: dict[str, _Entry] = {}
    sections: dict[str, dict[str, _Entry]] = {}
    order: list[tuple[str, int]] = []
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if not name:
                raise ConfigError(f"line {lineno}: empty section header")
            if name in sections:
                raise ConfigError(f"line {lineno}: duplicate section [{name}]")
            sections[name] = {}
            order.append((name, lineno))
            current = name
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: missing key before '='")
        target = top if current is None else sections[current]
        if key in target:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        target[key] = _Entry(value, lineno)
    return top, sections, order


def _as_int(entry: _Entry, key: str) -> int:
    try:
        return int(entry.value)
    except ValueError:
        raise ConfigError(f"line {entry.line}: {key} must be an integer, got {entry.value!r}") from None


def _as_float(entry: _Entry, key: str) -> float:
    try:
        v = float(entry.value)
    except ValueError:
        raise ConfigError(f"line {entry.line}: {key} must be a number, got {entry.value!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"line {entry.line}: {key} must be finite")
    return v


def _as_bool(entry: _Entry, key: str) -> bool:
    v = entry.value.lower()
    if v in ("true", "yes", "1"):
        return True
    if v in ("false", "no", "0"):
        return False
    raise ConfigError(f"line {entry.line}: {key} must be true/false, got {entry.value!r}")


def _as_float_list(entry: _Entry, key: str) -> list[float]:
    try:
        return [float(tok) for tok in entry.value.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"line {entry.line}: {key} must be comma-separated numbers") from None


def _as_int_list(entry: _Entry, key: str) -> list[int]:
    try:
        return [int(tok) for tok in entry.value.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"line {entry.line}: {key} must be comma-separated integers") from None


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate config text; raises :class:`ConfigError` with
    line numbers on any problem."""
    top, sections, order = _tokenize(text)

    if "spec_version" not in top:
        raise ConfigError("line 1: missing required top-level key 'spec_version'")
    version = _as_int(top["spec_version"], "spec_version")
    if version != 1:
        raise ConfigError(
            f"line {top['spec_version'].line}: unsupported spec_version {version}"
        )
    for key, entry in top.items():
        if key != "spec_version":
            raise ConfigError(f"line {entry.line}: unexpected top-level key {key!r}")

    for required in ("model", "run", "cost"):
        if required not in sections:
            raise ConfigError(f"missing required section [{required}]")

    policies: list[PolicyConfig] = []
    labels: set[str] = set()
    for name, lineno in order:
        if name in _SECTION_KEYS:
            for key, entry in sections[name].items():
                if key not in _SECTION_KEYS[name]:
                    raise ConfigError(
                        f"line {entry.line}: unknown key {key!r} in section [{name}]"
                    )
            continue
        tokens = name.split(None, 1)
        if tokens[0] != "policy":
            raise ConfigError(f"line {lineno}: unknown section [{name}]")
        if len(tokens) != 2 or not tokens[1].strip():
            raise ConfigError(f"line {lineno}: policy section needs a label: [policy LABEL]")
        label = tokens[1].strip()
        if label in labels:
            raise ConfigError(f"line {lineno}: duplicate policy label {label!r}")
        labels.add(label)
        policies.append(_parse_policy(label, sections[name], lineno))

    if not policies:
        raise ConfigError("config defines no [policy LABEL] sections")

    model = sections["model"]
    for req in ("sigma2", "kappa2", "theta0"):
        if req not in model:
            raise ConfigError(f"section [model] is missing required key {req!r}")
    sigma2 = _as_float(model["sigma2"], "sigma2")
    kappa2 = _as_float(model["kappa2"], "kappa2")
    if sigma2 <= 0:
        raise ConfigError(f"line {model['sigma2'].line}: sigma2 must be positive")
    if kappa2 <= 0:
        raise ConfigError(f"line {model['kappa2'].line}: kappa2 must be positive")
    theta0 = np.array(_as_float_list(model["theta0"], "theta0"), dtype=np.float64)
    if theta0.size == 0:
        raise ConfigError(f"line {model['theta0'].line}: theta0 must not be empty")
    if "d" in model:
        d = _as_int(model["d"], "d")
        if d != theta0.size:
            raise ConfigError(
                f"line {model['d'].line}: d={d} but theta0 has {theta0.size} coordinates"
            )

    runsec = sections["run"]
    for req in ("T", "runs", "master_seed"):
        if req not in runsec:
            raise ConfigError(f"section [run] is missing required key {req!r}")
    T = _as_int(runsec["T"], "T")
    runs = _as_int(runsec["runs"], "runs")
    master_seed = _as_int(runsec["master_seed"], "master_seed")
    if T < 1:
        raise ConfigError(f"line {runsec['T'].line}: T must be >= 1")
    if runs < 2:
        raise ConfigError(
            f"line {runsec['runs'].line}: runs must be >= 2 (standard errors need at "
            f"least two completed runs)"
        )
    update = runsec["update"].value if "update" in runsec else "mle"
    if update not in ("mle", "gd"):
        raise ConfigError(f"line {runsec['update'].line}: update must be 'mle' or 'gd'")
    eta = _as_float(runsec["eta"], "eta") if "eta" in runsec else None
    max_draws = (
        _as_int(runsec["max_draws_per_iter"], "max_draws_per_iter")
        if "max_draws_per_iter" in runsec
        else None
    )
    divergence_cap = (
        _as_float(runsec["divergence_cap"], "divergence_cap")
        if "divergence_cap" in runsec
        else 1e6
    )

    costsec = sections["cost"]
    for req in ("c_g", "c_t"):
        if req not in costsec:
            raise ConfigError(f"section [cost] is missing required key {req!r}")
    c_g = _as_float(costsec["c_g"], "c_g")
    c_t = _as_float(costsec["c_t"], "c_t")

    outsec = sections.get("output", {})
    out_dir = outsec["directory"].value if "directory" in outsec else "out"
    emit_svg = _as_bool(outsec["emit_svg"], "emit_svg") if "emit_svg" in outsec else True
    eval_samples = (
        _as_int(outsec["eval_samples"], "eval_samples") if "eval_samples" in outsec else 10_000
    )

    cfg = ExperimentConfig(
        sigma2=sigma2,
        kappa2=kappa2,
        theta0=theta0,
        policies=tuple(policies),
        T=T,
        runs=runs,
        master_seed=master_seed,
        update=update,
        eta=eta,
        max_draws_per_iter=max_draws,
        divergence_cap=divergence_cap,
        c_g=c_g,
        c_t=c_t,
        out_dir=out_dir,
        emit_svg=emit_svg,
        eval_samples=eval_samples,
    )
    # Materialize every policy once now so family/parameter problems
    # surface as config errors, not later runtime ones.
    for p in cfg.policies:
        build_schedule(p, cfg.T)
    return cfg


def _parse_policy(label: str, entries: dict[str, _Entry], lineno: int) -> PolicyConfig:
    if "family" not in entries:
        raise ConfigError(f"line {lineno}: policy {label!r} is missing the 'family' key")
    family_entry = entries["family"]
    family = family_entry.value
    if family not in _POLICY_FAMILIES:
        raise ConfigError(
            f"line {family_entry.line}: unknown policy family {family!r} "
            f"(expected one of {sorted(_POLICY_FAMILIES)})"
        )
    allowed = _POLICY_FAMILIES[family]
    optional = _POLICY_OPTIONAL.get(family, set())
    params: dict[str, object] = {}
    for key, entry in entries.items():
        if key == "family":
            continue
        if key not in allowed:
            raise ConfigError(
                f"line {entry.line}: unknown policy family key {key!r} for "
                f"family {family!r} (allowed: {sorted(allowed)})"
            )
        if key in ("n0", "B"):
            params[key] = _as_int(entry, key)
        elif key in ("alpha", "u", "n"):
            params[key] = _as_float(entry, key)
        elif key == "schedule":
            params[key] = tuple(_as_int_list(entry, key))
        elif key == "normalization":
            if entry.value not in ("verbatim", "exact"):
                raise ConfigError(
                    f"line {entry.line}: normalization must be 'verbatim' or 'exact'"
                )
            params[key] = entry.value
    missing = allowed - optional - set(params)
    if missing:
        raise ConfigError(
            f"line {lineno}: policy {label!r} (family {family!r}) is missing "
            f"required key(s) {sorted(missing)}"
        )
    return PolicyConfig(label=label, family=family, params=params, line=lineno)


def build_schedule(p: PolicyConfig, T: int) -> pol.Schedule:
    """Materialize a configured policy for horizon T."""
    try:
        if p.family == "constant":
            return pol.materialize(pol.Constant(p.params["n0"]), T)
        if p.family == "polynomial":
            return pol.materialize(pol.Polynomial(p.params["n0"], p.params["alpha"]), T)
        if p.family == "exponential":
            return pol.materialize(pol.Exponential(p.params["n0"], p.params["u"]), T)
        if p.family == "explicit":
            return pol.materialize(pol.Explicit(p.params["schedule"]), T)
        if p.family == "batch_constant":
            return pol.materialize(pol.BatchConstant(p.params["n"], p.params["B"]), T)
        if p.family == "batch_linear":
            return pol.materialize(pol.BatchLinear(p.params["n"], p.params["B"]), T)
        if p.family == "batch_exponential":
            return pol.materialize(
                pol.BatchExponential(p.params["n"], p.params["u"], p.params["B"]), T
            )
        if p.family == "budget_constant":
            return pol.budget_matched_constant(p.params["n0"], p.params["u"], T)
        if p.family == "budget_linear":
            return pol.budget_matched_linear(
                p.params["n0"],
                p.params["u"],
                T,
                p.params.get("normalization", "verbatim"),
            )
    except ValueError as exc:
        raise ConfigError(f"policy {p.label!r}: {exc}") from exc
    raise ConfigError(f"policy {p.label!r}: unknown family {p.family!r}")


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and parse a config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def apply_override(cfg: ExperimentConfig, axis: str, value: float) -> ExperimentConfig:
    """Return a copy of ``cfg`` with one numeric key replaced.

    ``axis`` is a dotted path: ``model.sigma2``, ``run.T``, ``cost.c_g``,
    ``output.eval_samples`` or ``policy.<label>.<key>``. Only numeric
    keys can be swept.
    """
    parts = axis.split(".")
    if len(parts) == 2:
        section, key = parts
        if section == "model" and key in ("sigma2", "kappa2"):
            return replace(cfg, **{key: float(value)})
        if section == "run" and key in ("T", "runs", "master_seed", "max_draws_per_iter"):
            return replace(cfg, **{key: int(value)})
        if section == "run" and key in ("eta", "divergence_cap"):
            return replace(cfg, **{key: float(value)})
        if section == "cost" and key in ("c_g", "c_t"):
            return replace(cfg, **{key: float(value)})
        if section == "output" and key == "eval_samples":
            return replace(cfg, eval_samples=int(value))
        raise ConfigError(f"axis {axis!r} does not name a numeric config key")
    if len(parts) == 3 and parts[0] == "policy":
        _, label, key = parts
        for i, p in enumerate(cfg.policies):
            if p.label == label:
                if key not in p.params or not isinstance(p.params[key], (int, float)):
                    raise ConfigError(
                        f"axis {axis!r} does not name a numeric key of policy {label!r}"
                    )
                new_params = dict(p.params)
                new_params[key] = (
                    int(value) if isinstance(p.params[key], int) else float(value)
                )
                policies = list(cfg.policies)
                policies[i] = replace(p, params=new_params)
                return replace(cfg, policies=tuple(policies))
        raise ConfigError(f"axis {axis!r}: no policy labeled {label!r}")
    raise ConfigError(f"axis {axis!r} is not of the form section.key or policy.label.key")
