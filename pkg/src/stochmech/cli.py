"""Command-line entry point: configured ensemble runs, oracle verification,
and target-density dumps.

A run is configured by one JSON file plus flag overrides (flags win) and
writes one directory named scenario + seed + timestamp containing, in order:
manifest.json (config echo + tool version), ensemble.tsv, density.tsv,
summary.json, and optional per-path dumps.  Ensemble tables are byte-stable
under re-runs of the same configuration for any worker count.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import __version__, momentum, oscillator, sde, stats, tableio, verify
from . import wavefunction as wf
from .errors import ConfigError, StochmechError
from .momentum import POLICIES
from .scenarios import SCENARIO_KINDS, Scenario


@dataclass
class ScenarioConfig:
    scenario: str = "oscillator-ground"
    nu: float = 0.5
    dt: float = 1e-3
    horizon: float = 50.0
    paths: int = 10000
    seed: int = 42
    policy: str = "ratio"
    t0: float = 0.0
    grid_extent: Tuple[float, float] = wf.DEFAULT_EXTENT
    grid_points: int = wf.DEFAULT_POINTS
    state_file: Optional[str] = None
    out: str = "runs"
    dump_paths: bool = False
    workers: Optional[int] = None

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as err:
                raise ConfigError(f"config: invalid JSON ({err})") from err
        if not isinstance(payload, dict):
            raise ConfigError("config: top level must be an object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"config: unknown fields {sorted(unknown)}")
        if "grid_extent" in payload:
            payload["grid_extent"] = tuple(payload["grid_extent"])
        return cls(**payload)

    def validate(self) -> "ScenarioConfig":
        if self.scenario not in SCENARIO_KINDS:
            raise ConfigError(f"scenario: {self.scenario!r} is not one of {SCENARIO_KINDS}")
        for name in ("nu", "dt", "horizon"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name}: must be positive")
        if self.paths < 1:
            raise ConfigError("paths: must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed: must be non-negative")
        if self.policy not in POLICIES:
            raise ConfigError(f"policy: {self.policy!r} is not one of {POLICIES}")
        if self.grid_points < 16:
            raise ConfigError("grid_points: must be >= 16")
        if not self.grid_extent[0] < self.grid_extent[1]:
            raise ConfigError("grid_extent: lower bound must be below upper bound")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers: must be >= 1")
        if self.state_file is not None and not os.path.exists(self.state_file):
            raise ConfigError(f"state_file: {self.state_file!r} does not exist")
        try:
            self.sim_params()
        except ValueError as err:
            raise ConfigError(f"horizon/dt: {err}") from err
        return self

    def sim_params(self) -> sde.SimParams:
        return sde.SimParams(nu=self.nu, dt=self.dt, horizon=self.horizon,
                             t0=self.t0, seed=self.seed)

    def scenario_obj(self) -> Scenario:
        return Scenario(kind=self.scenario, nu=self.nu, t0=self.t0,
                        grid_extent=self.grid_extent, grid_points=self.grid_points,
                        state_file=self.state_file)

    def effective_workers(self) -> int:
        return self.workers if self.workers is not None else (os.cpu_count() or 1)

    def to_dict(self) -> dict:
        payload = dataclasses.asdict(self)
        payload["grid_extent"] = list(self.grid_extent)
        return payload


def _apply_overrides(config: ScenarioConfig, args: argparse.Namespace) -> ScenarioConfig:
    mapping = {
        "scenario": "scenario", "nu": "nu", "dt": "dt", "horizon": "horizon",
        "paths": "paths", "seed": "seed", "policy": "policy", "out": "out",
        "workers": "workers",
    }
    for arg_name, field_name in mapping.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            setattr(config, field_name, value)
    if getattr(args, "dump_paths", False):
        config.dump_paths = True
    return config


def load_config(args: argparse.Namespace) -> ScenarioConfig:
    config = ScenarioConfig.from_file(args.config) if args.config else ScenarioConfig()
    return _apply_overrides(config, args).validate()


def _run_directory(config: ScenarioConfig) -> str:
    stamp = time.strftime("%Y%m%d-%H%M%S", time.gmtime())
    base = os.path.join(config.out, f"{config.scenario}-seed{config.seed}-{stamp}")
    candidate = base
    suffix = 1
    while os.path.exists(candidate):
        candidate = f"{base}-{suffix}"
        suffix += 1
    os.makedirs(candidate)
    return candidate


def _write_manifest(run_dir: str, config: ScenarioConfig) -> None:
    tableio.write_json(os.path.join(run_dir, "manifest.json"), {
        "tool": "stochmech",
        "version": __version__,
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "config": config.to_dict(),
    })


def _dump_paths(run_dir: str, config: ScenarioConfig) -> None:
    scenario = config.scenario_obj()
    interacting, free = scenario.drift_fields()
    sampler = scenario.initial_sampler()
    params = config.sim_params()
    dump_dir = tableio.ensure_dir(os.path.join(run_dir, "paths"))
    for index in range(config.paths):
        p = params.with_path_index(index)
        x0 = sde.draw_initial(p, sampler)
        path = sde.integrate(interacting, x0, p)
        pair = sde.co_integrate((interacting, free), path)
        tableio.write_table(os.path.join(dump_dir, f"path_{index:05d}.tsv"), {
            "t": path.times,
            "x": path.positions,
            "x_F": pair.free_positions,
            "dW": np.concatenate([path.increments, [0.0]]),
        })


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args)
    scenario = config.scenario_obj()
    params = config.sim_params()
    run_dir = _run_directory(config)
    _write_manifest(run_dir, config)

    ensemble = momentum.collect(scenario, params, config.paths,
                                policy=config.policy,
                                workers=config.effective_workers())
    tableio.write_table(os.path.join(run_dir, "ensemble.tsv"), {
        "path_index": ensemble.path_indices,
        "P": ensemble.values,
        "T_used": np.full(len(ensemble), ensemble.horizon_used),
    })

    density = scenario.target_density()
    wf.write_density(density, os.path.join(run_dir, "density.tsv"))

    hist = stats.Histogram.from_samples(ensemble.values, bins=64)
    tableio.write_table(os.path.join(run_dir, "histogram.tsv"), {
        "left_edge": hist.edges[:-1],
        "right_edge": hist.edges[1:],
        "count": hist.counts,
        "density": hist.density,
    })

    mom = stats.moments(ensemble.values)
    ks = stats.ks_against_density(ensemble.values, density)
    summary = {
        "sample_count": mom.n,
        "mean": mom.mean,
        "variance": mom.variance,
        "stderr_mean": mom.stderr_mean,
        "stderr_variance": mom.stderr_variance,
        "ks_statistic": ks.statistic,
        "ks_pvalue": ks.pvalue,
        "out_of_domain_evaluations": int(ensemble.extras["out_of_domain"].sum()),
        "provenance": ensemble.provenance,
    }
    tableio.write_json(os.path.join(run_dir, "summary.json"), summary)

    if config.dump_paths:
        _dump_paths(run_dir, config)

    print(f"run directory: {run_dir}")
    print(f"momentum samples: {mom.n}")
    print(f"mean(P) = {mom.mean:.5f} +- {mom.stderr_mean:.5f}")
    print(f"var(P)  = {mom.variance:.5f} +- {mom.stderr_variance:.5f}")
    print(f"KS vs quantum momentum density: D = {ks.statistic:.5f}, p = {ks.pvalue:.4f}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    config = load_config(args)
    if config.scenario != "oscillator-ground":
        raise ConfigError("scenario: verify requires the oscillator-ground scenario")
    results = verify.run_verification(nu=config.nu, dt=config.dt,
                                      horizon=config.horizon, m=config.paths,
                                      seed=config.seed,
                                      workers=config.effective_workers())
    for result in results:
        print(result.line())
    return 0 if all(r.passed for r in results) else 1


def cmd_density(args: argparse.Namespace) -> int:
    config = load_config(args)
    density = config.scenario_obj().target_density()
    if args.out is not None:
        out_dir = tableio.ensure_dir(config.out)
        path = os.path.join(out_dir, "density.tsv")
        wf.write_density(density, path)
        print(f"wrote {path}")
    else:
        sys.stdout.write("p\trho\n")
        for p, rho in zip(density.p, density.density):
            sys.stdout.write(f"{tableio.format_float(p)}\t{tableio.format_float(rho)}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stochmech",
        description="Monte Carlo momentum sampling on coupled quantum diffusions")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override it")
    common.add_argument("--scenario", choices=SCENARIO_KINDS)
    common.add_argument("--nu", type=float, help="diffusion parameter")
    common.add_argument("--dt", type=float, help="time step")
    common.add_argument("--horizon", type=float, help="simulated horizon T")
    common.add_argument("--paths", type=int, help="ensemble size M")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--policy", choices=POLICIES, help="momentum truncation policy")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, help="worker processes")

    run_parser = sub.add_parser("run", parents=[common],
                                help="simulate an ensemble and write artifacts")
    run_parser.add_argument("--dump-paths", action="store_true",
                            help="write one t/x/x_F/dW table per path (large)")
    run_parser.set_defaults(func=cmd_run)

    verify_parser = sub.add_parser("verify", parents=[common],
                                   help="run the closed-form oracle cross-checks")
    verify_parser.set_defaults(func=cmd_verify)

    density_parser = sub.add_parser("density", parents=[common],
                                    help="emit the quantum momentum density")
    density_parser.set_defaults(func=cmd_density)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except StochmechError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        # downstream consumer (e.g. head) closed the stream
        sys.stderr.close()
        return 141


if __name__ == "__main__":
    sys.exit(main())
