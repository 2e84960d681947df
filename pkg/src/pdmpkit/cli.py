"""Command-line front end: ``pdmpkit {sample,verify,replay}``.

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
3 runtime failure.
"""

import argparse
import glob
import json
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import metadata

import numpy as np

from . import __version__, suites
from .config import (
    SUITES,
    apply_overrides,
    build_sampler_config,
    build_target,
    default_workers,
    enabled_suites,
    load_config,
)
from .errors import ConfigurationError, SimulationError, SkeletonError
from .reports import write_report
from .samplers import build_sampler
from .process import simulate_skeleton
from .skeleton import check_replay, dense_states, read_skeleton, write_dense_csv, write_skeleton
from .targets import ReferenceMeasure

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

#: offset keeping verification streams apart from chain streams
_SUITE_STREAM = 1_000_000


def _versions():
    out = {"python": platform.python_version(), "pdmpkit": __version__}
    for pkg in ("numpy", "scipy", "PyYAML"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:  # pragma: no cover
            out[pkg] = None
    return out


def _write_json(path, payload):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    os.replace(tmp, path)


def _prepare_out(out):
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create output directory {out}: {exc.strerror}") from None
    if not os.access(out, os.W_OK | os.X_OK):
        raise ConfigurationError(f"output directory {out} is not writable")


def chain_seed(master_seed, chain):
    return np.random.SeedSequence([master_seed, chain])


def dense_grid(dense_cfg, horizon):
    """Time grid on [0, horizon] from ``dense.dt`` or ``dense.num``; None if neither is set."""
    if dense_cfg.get("dt") is not None:
        dt = float(dense_cfg["dt"])
        return dt * np.arange(int(np.floor(horizon / dt + 1e-9)) + 1)
    if dense_cfg.get("num") is not None:
        return np.linspace(0.0, horizon, int(dense_cfg["num"]))
    return None


def _spec_from_sections(target_cfg, sampler_cfg):
    cfg = {"target": target_cfg, "sampler": sampler_cfg}
    return build_sampler(build_sampler_config(cfg, build_target(target_cfg)))


def run_chain(cfg, chain, out):
    """Simulate one chain and write its skeleton (and dense CSV); return its summary."""
    run = cfg["run"]
    target = build_target(cfg["target"])
    spec = build_sampler(build_sampler_config(cfg, target))
    rng = np.random.default_rng(chain_seed(run["seed"], chain))
    if run["initial_state"] is not None:
        z0 = np.array(run["initial_state"], dtype=float)
    else:
        z0 = ReferenceMeasure(target).sample(rng, 1)[0]
    if run["n_events"] is not None:
        sk = simulate_skeleton(spec, z0, np.finfo(float).max, rng, n_events=run["n_events"])
        if len(sk) < run["n_events"]:
            raise SimulationError(f"chain {chain} stopped jumping after {len(sk)} of {run['n_events']} events")
    else:
        sk = simulate_skeleton(spec, z0, run["horizon"], rng)
    stem = os.path.join(out, f"chain_{chain:03d}")
    files = [stem + ".jsonl"]
    write_skeleton(
        files[0], sk, run["seed"], chain=chain, target=cfg["target"], sampler=cfg["sampler"], dense=cfg["dense"],
    )
    grid = dense_grid(cfg["dense"], sk.horizon)
    if grid is not None:
        files.append(stem + ".csv")
        write_dense_csv(files[1], grid, dense_states(sk, spec, grid))
    return {"chain": chain, "events": len(sk), "horizon": sk.horizon, "files": [os.path.basename(f) for f in files]}


def _manifest(cfg, kind):
    run = cfg["run"]
    return {
        "status": "incomplete",
        "command": kind,
        "config": cfg,
        "versions": _versions(),
        "seeds": {str(c): [run["seed"], c] for c in range(run["chains"])},
    }


def _map(fn, args, workers):
    if workers <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=min(workers, len(args))) as pool:
        futures = [pool.submit(fn, *a) for a in args]
        return [f.result() for f in futures]


def cmd_sample(cfg):
    out = cfg["run"]["out"]
    _prepare_out(out)
    manifest_path = os.path.join(out, "manifest.json")
    manifest = _manifest(cfg, "sample")
    _write_json(manifest_path, manifest)
    start = time.perf_counter()
    chains = range(cfg["run"]["chains"])
    try:
        results = _map(run_chain, [(cfg, c, out) for c in chains], default_workers(cfg))
    except Exception as exc:
        for c in chains:
            for path in glob.glob(os.path.join(out, f"chain_{c:03d}.*")):
                os.remove(path)
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        manifest["wall_time_s"] = time.perf_counter() - start
        _write_json(manifest_path, manifest)
        print(f"error: simulation failed: {manifest['error']}", file=sys.stderr)
        return EXIT_RUNTIME
    manifest["chains"] = results
    manifest["event_counts"] = [r["events"] for r in results]
    manifest["wall_time_s"] = time.perf_counter() - start
    manifest["status"] = "complete"
    _write_json(manifest_path, manifest)
    for r in results:
        print(f"chain {r['chain']}: {r['events']} events up to t={r['horizon']:.6g}")
    return EXIT_OK


def run_suite(cfg, name):
    """One verification suite with its own RNG stream; returns a list of Checks."""
    target = build_target(cfg["target"])
    spec = build_sampler(build_sampler_config(cfg, target))
    index = SUITES.index(name)
    rng = np.random.default_rng(np.random.SeedSequence([cfg["run"]["seed"], _SUITE_STREAM + index]))
    v = cfg["verify"][name]
    if name == "bounds":
        return suites.bounds_suite(spec, target, rng, v["n_instances"], v["horizon"])
    if name == "invariance":
        return suites.invariance_suite(spec, target, rng, v["n_functions"], v["n_samples"])
    if name == "martingale":
        z0 = cfg["run"]["initial_state"]
        return suites.martingale_suite(spec, target, rng, v["times"], v["n_paths"], v["panels"], z0=z0)
    if name == "core_probe":
        return suites.core_probe_suite(spec, rng, v["k"], v["spacing"])
    if name == "continuity":
        return suites.continuity_suite(spec, target, rng, v["times"], v["n_paths"])
    raise ConfigurationError(f"unknown suite {name}")


def cmd_verify(cfg):
    names = enabled_suites(cfg)
    if not names:
        raise ConfigurationError("no verification suite enabled (set verify.<suite>.enabled: true)")
    out = cfg["run"]["out"]
    _prepare_out(out)
    manifest_path = os.path.join(out, "manifest.json")
    manifest = _manifest(cfg, "verify")
    manifest["suites"] = names
    _write_json(manifest_path, manifest)
    start = time.perf_counter()
    try:
        results = _map(run_suite, [(cfg, n) for n in names], default_workers(cfg))
    except Exception as exc:
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        _write_json(manifest_path, manifest)
        print(f"error: verification failed to run: {manifest['error']}", file=sys.stderr)
        return EXIT_RUNTIME
    checks = [c for group in results for c in group]
    ok = write_report(checks, os.path.join(out, "report.json"), os.path.join(out, "report.txt"))
    manifest["status"] = "complete"
    manifest["wall_time_s"] = time.perf_counter() - start
    manifest["all_pass"] = ok
    _write_json(manifest_path, manifest)
    for c in checks:
        print(c.line())
    failed = [c.name for c in checks if not c.passed]
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def _parse_grid(text):
    """``start:stop:num`` → linspace."""
    try:
        start, stop, num = text.split(":")
        return np.linspace(float(start), float(stop), int(num))
    except ValueError:
        raise ConfigurationError(f"--grid must look like start:stop:num, got {text!r}") from None


def cmd_replay(path, grid=None, out=None):
    try:
        sk, head = read_skeleton(path)
    except OSError as exc:
        raise ConfigurationError(f"cannot read skeleton {path}: {exc.strerror}") from None
    if "target" not in head or "sampler" not in head:
        raise SkeletonError(f"{path}: header lacks the target/sampler description needed for replay")
    spec = _spec_from_sections(head["target"], head["sampler"])
    if spec.dim != sk.dim:
        raise SkeletonError(f"{path}: header dimension {sk.dim} does not match the sampler ({spec.dim})")
    check_replay(sk, spec)
    if grid is None:
        grid = dense_grid(head.get("dense") or {}, sk.horizon)
        if grid is None:
            raise ConfigurationError("no time grid: pass --grid or --dt, or sample with a dense section")
    grid = np.asarray(grid, dtype=float)
    if out is None:
        root = path[:-6] if path.endswith(".jsonl") else path
        out = root + ".replay.csv"
    write_dense_csv(out, grid, dense_states(sk, spec, grid))
    print(f"replay consistent: {len(sk)} events; wrote {out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="pdmpkit", description="Simulate and verify kinetic PDMP samplers.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("sample", "simulate chains and write skeletons"), ("verify", "run verification suites")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", help="YAML run configuration")
        p.add_argument("--seed", type=int, help="override run.seed")
        p.add_argument("--out", help="override run.out")
        p.add_argument("--chains", type=int, help="override run.chains")
    p = sub.add_parser("replay", help="rebuild a dense path from a skeleton file")
    p.add_argument("skeleton", help="skeleton JSONL file written by 'sample'")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--grid", help="time grid start:stop:num")
    g.add_argument("--dt", type=float, help="grid spacing from 0 to the horizon")
    p.add_argument("--out", help="CSV path (default: <skeleton>.replay.csv)")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.command == "replay":
            grid = None
            if args.grid:
                grid = _parse_grid(args.grid)
            elif args.dt:
                if not args.dt > 0:
                    raise ConfigurationError("--dt must be positive")
                sk, _ = read_skeleton(args.skeleton)
                grid = dense_grid({"dt": args.dt}, sk.horizon)
            return cmd_replay(args.skeleton, grid, args.out)
        cfg = apply_overrides(load_config(args.config), seed=args.seed, out=args.out, chains=args.chains)
        return cmd_sample(cfg) if args.command == "sample" else cmd_verify(cfg)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SkeletonError as exc:
        print(f"replay failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except Exception as exc:  # noqa: BLE001  (exit-code contract)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
