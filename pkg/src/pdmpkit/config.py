"""Run configuration: a versioned YAML file with a closed set of keys.

Unknown keys, wrong types and out-of-range values are rejected with the
file name and line number of the offending entry.  A minimal file::

    schema_version: 1
    target: {name: standard_gaussian, dim: 2}
    sampler: {variant: bps, lambda_ref: 1.0, alpha: 0.0}
    run: {horizon: 100.0, chains: 2, seed: 7, out: results}
"""

import copy
import os

import numpy as np
import yaml

from .errors import ConfigurationError
from .samplers import HAZARDS, VARIANTS, SamplerConfig
from .targets import gaussian_mixture_potential, gaussian_potential, standard_gaussian

SCHEMA_VERSION = 1
TARGETS = ("standard_gaussian", "gaussian", "gaussian_mixture")

_REQUIRED = object()


def _num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _opt(check):
    return lambda x: x is None or check(x)


def _num_list(x):
    return isinstance(x, list) and all(_num(v) for v in x)


def _matrix(x):
    return isinstance(x, list) and all(_num_list(r) for r in x)


# key -> (type predicate, type description, default)
SCHEMA = {
    "schema_version": (_int, "integer", _REQUIRED),
    "target": {
        "name": (lambda x: x in TARGETS, f"one of {TARGETS}", _REQUIRED),
        "dim": (_opt(_int), "integer", None),
        "mean": (_opt(_num_list), "list of numbers", None),
        "covariance": (_opt(_matrix), "matrix (list of lists)", None),
        "weights": (_opt(_num_list), "list of numbers", None),
        "means": (_opt(_matrix), "list of mean vectors", None),
    },
    "sampler": {
        "variant": (lambda x: x in VARIANTS, f"one of {VARIANTS}", _REQUIRED),
        "lambda_ref": (_num, "number", 1.0),
        "alpha": (_num, "number", 0.0),
        "hazard": (lambda x: x in HAZARDS, f"one of {HAZARDS}", "auto"),
        "lookahead": (_num, "number", 1.0),
        "rate_perturbation": (_num, "number", 0.0),
        "step": (_num, "number", 0.01),
    },
    "run": {
        "horizon": (_opt(_num), "number", None),
        "n_events": (_opt(_int), "integer", None),
        "chains": (_int, "integer", 1),
        "seed": (_int, "integer", _REQUIRED),
        "out": (lambda x: isinstance(x, str) and x != "", "path", "results"),
        "workers": (_opt(_int), "integer", None),
        "initial_state": (_opt(_num_list), "list of numbers", None),
    },
    "dense": {
        "dt": (_opt(_num), "number", None),
        "num": (_opt(_int), "integer", None),
    },
    "verify": {
        "bounds": {
            "enabled": (lambda x: isinstance(x, bool), "boolean", False),
            "n_instances": (_int, "integer", 100),
            "horizon": (_num, "number", 5.0),
        },
        "invariance": {
            "enabled": (lambda x: isinstance(x, bool), "boolean", False),
            "n_functions": (_int, "integer", 10),
            "n_samples": (_int, "integer", 10**6),
        },
        "martingale": {
            "enabled": (lambda x: isinstance(x, bool), "boolean", False),
            "times": (_num_list, "list of numbers", [1.0, 2.0]),
            "n_paths": (_int, "integer", 10**4),
            "panels": (_int, "integer", 16),
        },
        "core_probe": {
            "enabled": (lambda x: isinstance(x, bool), "boolean", False),
            "k": (_num_list, "list of numbers", [2.0, 4.0, 8.0]),
            "spacing": (_num, "number", 0.1),
        },
        "continuity": {
            "enabled": (lambda x: isinstance(x, bool), "boolean", False),
            "times": (_num_list, "list of numbers", [0.1, 0.01, 0.001]),
            "n_paths": (_int, "integer", 2000),
        },
    },
}

SUITES = tuple(SCHEMA["verify"])


def _where(source, node):
    return f"{source}:{node.start_mark.line + 1}"


def _validate(node, schema, source, section):
    """Check one mapping node against ``schema``; return the plain dict with defaults."""
    if not isinstance(node, yaml.MappingNode):
        raise ConfigurationError(f"{_where(source, node)}: section {section or '<root>'!r} must be a mapping")
    out = {}
    seen = {}
    for key_node, value_node in node.value:
        key = key_node.value
        path = f"{section}.{key}" if section else key
        if key in seen:
            raise ConfigurationError(f"{_where(source, key_node)}: duplicate key {path!r}")
        seen[key] = key_node
        if key not in schema:
            allowed = ", ".join(sorted(schema))
            raise ConfigurationError(f"{_where(source, key_node)}: unknown key {path!r} (allowed: {allowed})")
        rule = schema[key]
        if isinstance(rule, dict):
            out[key] = _validate(value_node, rule, source, path)
            continue
        check, desc, _ = rule
        value = yaml.safe_load(yaml.serialize(value_node))
        if not check(value):
            raise ConfigurationError(f"{_where(source, value_node)}: {path!r} must be {desc}, got {value!r}")
        out[key] = value
    for key, rule in schema.items():
        if key in out:
            continue
        path = f"{section}.{key}" if section else key
        if isinstance(rule, dict):
            out[key] = _defaults(rule, path, source, node)
        elif rule[2] is _REQUIRED:
            raise ConfigurationError(f"{_where(source, node)}: missing required key {path!r}")
        else:
            out[key] = copy.deepcopy(rule[2])
    return out


def _defaults(schema, section, source, node):
    out = {}
    for key, rule in schema.items():
        if isinstance(rule, dict):
            out[key] = _defaults(rule, f"{section}.{key}", source, node)
        elif rule[2] is _REQUIRED:
            raise ConfigurationError(f"{_where(source, node)}: missing section {section!r} (needs {key!r})")
        else:
            out[key] = copy.deepcopy(rule[2])
    return out


def parse_config(text, source="<config>"):
    """Parse and validate YAML text into a plain nested dict."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark is not None else source
        raise ConfigurationError(f"{where}: YAML syntax error: {getattr(exc, 'problem', exc)}") from None
    if node is None:
        raise ConfigurationError(f"{source}: empty configuration")
    cfg = _validate(node, SCHEMA, source, "")
    if cfg["schema_version"] != SCHEMA_VERSION:
        raise ConfigurationError(f"{source}: unsupported schema_version {cfg['schema_version']} (expected {SCHEMA_VERSION})")
    _check_semantics(cfg, source)
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, source=str(path))


def _check_semantics(cfg, source):
    run = cfg["run"]
    if (run["horizon"] is None) == (run["n_events"] is None):
        raise ConfigurationError(f"{source}: set exactly one of run.horizon and run.n_events")
    if run["horizon"] is not None and not run["horizon"] > 0:
        raise ConfigurationError(f"{source}: run.horizon must be positive")
    if run["n_events"] is not None and run["n_events"] <= 0:
        raise ConfigurationError(f"{source}: run.n_events must be positive")
    if run["chains"] <= 0:
        raise ConfigurationError(f"{source}: run.chains must be positive")
    if run["seed"] <= 0:
        raise ConfigurationError(f"{source}: run.seed must be positive")
    if run["workers"] is not None and run["workers"] <= 0:
        raise ConfigurationError(f"{source}: run.workers must be positive")
    dense = cfg["dense"]
    if dense["dt"] is not None and dense["num"] is not None:
        raise ConfigurationError(f"{source}: set at most one of dense.dt and dense.num")
    if dense["dt"] is not None and not dense["dt"] > 0:
        raise ConfigurationError(f"{source}: dense.dt must be positive")
    if dense["num"] is not None and dense["num"] < 2:
        raise ConfigurationError(f"{source}: dense.num must be at least 2")
    try:
        target = build_target(cfg["target"])
        build_sampler_config(cfg, target)
    except (ValueError, TypeError) as exc:
        raise ConfigurationError(f"{source}: {exc}") from None
    init = run["initial_state"]
    if init is not None and len(init) != 2 * target.dim:
        raise ConfigurationError(f"{source}: run.initial_state needs {2 * target.dim} entries, got {len(init)}")


def build_target(tcfg):
    name = tcfg["name"]
    if name == "standard_gaussian":
        if tcfg["dim"] is None or tcfg["dim"] <= 0:
            raise ConfigurationError("target.dim must be a positive integer for standard_gaussian")
        return standard_gaussian(tcfg["dim"])
    if name == "gaussian":
        if tcfg["mean"] is None or tcfg["covariance"] is None:
            raise ConfigurationError("gaussian target needs mean and covariance")
        return gaussian_potential(np.array(tcfg["mean"], dtype=float), np.array(tcfg["covariance"], dtype=float))
    if tcfg["weights"] is None or tcfg["means"] is None or tcfg["covariance"] is None:
        raise ConfigurationError("gaussian_mixture target needs weights, means and covariance")
    return gaussian_mixture_potential(
        np.array(tcfg["weights"], dtype=float), np.array(tcfg["means"], dtype=float), np.array(tcfg["covariance"], dtype=float)
    )


def build_sampler_config(cfg, target=None):
    s = cfg["sampler"]
    target = build_target(cfg["target"]) if target is None else target
    return SamplerConfig(
        target=target,
        variant=s["variant"],
        lambda_ref=float(s["lambda_ref"]),
        alpha=float(s["alpha"]),
        hazard=s["hazard"],
        lookahead=float(s["lookahead"]),
        rate_perturbation=float(s["rate_perturbation"]),
        step=float(s["step"]),
    )


def apply_overrides(cfg, seed=None, out=None, chains=None):
    """Command-line overrides, validated like file values."""
    cfg = copy.deepcopy(cfg)
    if seed is not None:
        if seed <= 0:
            raise ConfigurationError("--seed must be positive")
        cfg["run"]["seed"] = seed
    if chains is not None:
        if chains <= 0:
            raise ConfigurationError("--chains must be positive")
        cfg["run"]["chains"] = chains
    if out is not None:
        cfg["run"]["out"] = out
    return cfg


def enabled_suites(cfg):
    return [name for name in SUITES if cfg["verify"][name]["enabled"]]


def default_workers(cfg):
    w = cfg["run"]["workers"]
    return w if w is not None else (os.cpu_count() or 1)
