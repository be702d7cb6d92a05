"""Command-line driver: ``python -m esfem <study> [flags]``.

Every study writes ``<study>.csv`` and ``manifest.txt`` into ``--out``.
Exit status: 0 when every check passes, 1 when a check fails or the
numerics break down, 2 for invalid input.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field, fields

from . import experiments as ex
from .errors import ConfigError, DomainError, EsfemError
from .geometry import get_surface
from .io import ensure_dir, write_admissibility, write_manifest, write_off
from .mesh import advect_mesh, build_icosphere

CLOSED_SURFACES = ("ellipsoid", "sphere-static")
STUDIES = ("convergence", "ritz", "maxprinciple", "geometry", "l2decay", "mesh-export")

DEFAULT_LEVELS = {
    "convergence": [1, 2, 3, 4],
    "ritz": [1, 2, 3, 4, 5],
    "maxprinciple": [2, 3, 4, 5],
    "geometry": [1, 2, 3, 4, 5],
    "l2decay": [4],
    "mesh-export": [0, 1, 2, 3],
}
DEFAULT_TAU = {"convergence": 1e-3, "maxprinciple": 1e-2}


@dataclass
class RunConfig:
    study: str
    surface: str = "ellipsoid"
    levels: list | None = None
    tau: float | None = None
    bdf: int = 4
    gamma: float = 1.0
    t_end: float | None = None
    times: list | None = None
    quad_order: int = 4
    initial: str = "interpolant"
    out: str = "results"
    seed: int = 0
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    tolerances: dict = field(default_factory=dict)

    def validate(self):
        if self.study not in STUDIES:
            raise ConfigError(f"unknown study {self.study!r}")
        if self.surface not in CLOSED_SURFACES:
            raise ConfigError(f"unknown surface {self.surface!r}; choose from {list(CLOSED_SURFACES)}")
        if self.levels is None:
            self.levels = list(DEFAULT_LEVELS[self.study])
        if not self.levels or any(not 0 <= l <= 8 for l in self.levels):
            raise ConfigError("levels must lie in 0..8")
        if self.tau is None:
            self.tau = DEFAULT_TAU.get(self.study, 1e-3)
        if not self.tau > 0:
            raise ConfigError(f"tau must be positive (got {self.tau})")
        if not 1 <= self.bdf <= 4:
            raise ConfigError("BDF order must be in 1..4")
        if not self.gamma > 0:
            raise ConfigError("gamma must be positive")
        if self.t_end is not None and not 0 <= self.t_end <= 1:
            raise ConfigError("t-end must lie in [0, 1]")
        if self.quad_order not in (2, 4, 6):
            raise ConfigError("quadrature order must be 2, 4 or 6")
        if self.initial not in ("interpolant", "ritz"):
            raise ConfigError("initial must be 'interpolant' or 'ritz'")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.times is not None and any(not 0 <= t <= 1 for t in self.times):
            raise ConfigError("times must lie in [0, 1]")
        ex.tolerances(self.tolerances)
        return self


def parse_levels(text):
    """``"1..4"``, ``"1,3,5"`` or ``"2"``."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = (int(p) for p in text.split(".."))
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return sorted({int(p) for p in text.split(",") if p.strip()})
    except ValueError:
        raise ConfigError(f"cannot parse levels {text!r}") from None


def _floats(text):
    try:
        return [float(p) for p in str(text).replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"expected numbers, got {text!r}") from None


_CONVERT = {
    "study": str, "surface": str, "levels": parse_levels, "tau": float, "bdf": int, "gamma": float,
    "t_end": float, "times": _floats, "quad_order": int, "initial": str, "out": str, "seed": int,
    "threads": int,
}


def read_config(path):
    """Parse ``key = value`` lines; ``tol.<name> = lo, hi`` sets a check band."""
    values, tol = {}, {}
    with open(path) as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected 'key = value'")
            key, value = (p.strip() for p in line.split("=", 1))
            key = key.replace("-", "_")
            if key.startswith("tol."):
                band = _floats(value)
                if len(band) != 2:
                    raise ConfigError(f"{path}:{n}: tolerance needs two numbers")
                tol[key[4:]] = tuple(band)
            elif key in _CONVERT:
                try:
                    values[key] = _CONVERT[key](value)
                except ValueError:
                    raise ConfigError(f"{path}:{n}: bad value for {key!r}") from None
            else:
                raise ConfigError(f"{path}:{n}: unknown key {key!r}")
    ex.tolerances(tol)
    return values, tol


def build_parser():
    parser = argparse.ArgumentParser(prog="esfem", description="Evolving surface FEM studies.")
    parser.add_argument("study", choices=STUDIES)
    parser.add_argument("--levels", help="refinement levels, e.g. 1..4 or 1,2,3")
    parser.add_argument("--tau", type=float, help="time step")
    parser.add_argument("--bdf", type=int, help="BDF order 1..4")
    parser.add_argument("--gamma", type=float, help="weight parameter gamma")
    parser.add_argument("--t-end", type=float, dest="t_end", help="final time")
    parser.add_argument("--times", help="comma-separated sample times")
    parser.add_argument("--surface", choices=CLOSED_SURFACES)
    parser.add_argument("--initial", choices=("interpolant", "ritz"))
    parser.add_argument("--quad-order", type=int, dest="quad_order")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--config", help="key = value configuration file")
    return parser


def make_config(args) -> RunConfig:
    values, tol = read_config(args.config) if args.config else ({}, {})
    values.pop("study", None)
    for name in _CONVERT:
        flag = None if name == "study" else getattr(args, name, None)
        if flag is None:
            continue
        values[name] = _CONVERT[name](flag) if name in ("levels", "times") else flag
    known = {f.name for f in fields(RunConfig)}
    return RunConfig(study=args.study, tolerances=tol, **{k: v for k, v in values.items() if k in known}).validate()


def run(cfg: RunConfig):
    """Execute a validated configuration; returns the list of reports."""
    out = ensure_dir(cfg.out)
    tol = cfg.tolerances
    if cfg.study == "convergence":
        reports = [ex.run_convergence(cfg.levels, cfg.tau, cfg.bdf, cfg.surface, cfg.t_end, cfg.initial,
                                      quad_order=cfg.quad_order, tol=tol, threads=cfg.threads)]
    elif cfg.study == "ritz":
        times = cfg.times if cfg.times is not None else (0.0, 0.25)
        reports = [
            ex.run_ritz_study(cfg.levels, times, cfg.surface, tol=tol, threads=cfg.threads),
            ex.run_weighted_checks(cfg.levels, (cfg.gamma,), cfg.surface, tol=tol),
        ]
    elif cfg.study == "maxprinciple":
        t_end = 1.0 if cfg.t_end is None else cfg.t_end
        reports = [ex.run_maxprinciple(cfg.levels, t_end, cfg.tau, cfg.bdf, cfg.surface, seed=cfg.seed,
                                       tol=tol, threads=cfg.threads)]
    elif cfg.study == "geometry":
        times = cfg.times if cfg.times is not None else (0.0, 0.25, 0.6)
        reports = [ex.run_geometry_checks(cfg.levels, times, cfg.surface, cfg.seed, tol=tol,
                                          threads=cfg.threads)]
    elif cfg.study == "l2decay":
        reports = [ex.run_l2_decay(max(cfg.levels), cfg.surface, tol=tol)]
    else:
        reports = []
        surface = get_surface(cfg.surface)
        t = 0.0 if cfg.t_end is None else cfg.t_end
        meshes = [advect_mesh(build_icosphere(l, surface), t) for l in cfg.levels]
        for mesh in meshes:
            write_off(mesh, os.path.join(out, f"mesh_level{mesh.level}.off"))
        write_admissibility(meshes, os.path.join(out, "admissibility.csv"))
    for rep in reports:
        rep.to_csv(os.path.join(out, f"{rep.name}.csv"))
    write_manifest(reports, os.path.join(out, "manifest.txt"), header=[_describe(cfg)])
    return reports


def _describe(cfg):
    return (f"study={cfg.study} surface={cfg.surface} levels={cfg.levels} tau={cfg.tau:g} "
            f"bdf={cfg.bdf} gamma={cfg.gamma:g} seed={cfg.seed}")


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return 2 if exc.code else 0
    try:
        cfg = make_config(args)
    except (ConfigError, DomainError, OSError) as exc:
        print(f"esfem: error: {exc}", file=sys.stderr)
        return 2
    try:
        reports = run(cfg)
    except (ConfigError, DomainError) as exc:
        print(f"esfem: error: {exc}", file=sys.stderr)
        return 2
    except (EsfemError, ArithmeticError, ValueError) as exc:
        print(f"esfem: numeric failure: {exc}", file=sys.stderr)
        return 1
    for rep in reports:
        print(rep.summary())
    return 0 if all(rep.passed for rep in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
