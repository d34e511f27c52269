"""Command-line entry point: ``nslyap <command> --config scenario.toml``.

Exit codes: 0 pass, 1 refuted, 2 inconclusive, 3 error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path


from . import __version__
from . import integrator as itg
from . import invariance as inv
from . import lcs as lcs_mod
from . import lyapunov as ly
from .config import ScenarioConfig, jsonable, parse_config
from .errors import NslyapError

log = logging.getLogger("nslyap")

EXIT_PASS, EXIT_REFUTED, EXIT_INCONCLUSIVE, EXIT_ERROR = 0, 1, 2, 3
COMMANDS = ("simulate", "check-lyapunov", "check-invariance", "simulate-lcs", "rho-horizon", "report")
VERDICT_EXIT = {ly.CERTIFIED: EXIT_PASS, ly.REFUTED: EXIT_REFUTED, ly.INCONCLUSIVE: EXIT_INCONCLUSIVE}


def _fresh_path(out: Path, stem: str, digest: str, suffix: str) -> Path:
    """out/stem-<hash>.suffix, with a counter appended instead of overwriting."""
    p = out / f"{stem}-{digest[:12]}{suffix}"
    k = 1
    while p.exists():
        p = out / f"{stem}-{digest[:12]}-{k}{suffix}"
        k += 1
    return p


def write_report(out: Path, command: str, cfg: ScenarioConfig, result: dict) -> Path:
    digest = cfg.config_hash()
    body = {
        "tool": "nslyap",
        "version": __version__,
        "command": command,
        "config_hash": digest,
        "result": jsonable(result),
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    out.mkdir(parents=True, exist_ok=True)
    path = _fresh_path(out, command, digest, ".json")
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    return path


def _cmd_simulate(cfg, out):
    sys_ = cfg.build_system()
    if cfg.x0 is None:
        raise NslyapError("simulate needs x0")
    traj = itg.simulate(sys_, cfg.x0, cfg.T, cfg.h)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = _fresh_path(out, "trajectory", cfg.config_hash(), ".csv")
    traj.to_csv(csv_path)
    return EXIT_PASS, {"final": traj.final, "steps": len(traj.times) - 1,
                       "max_residual": float(traj.residuals.max()), "csv": csv_path.name}


def _cmd_simulate_lcs(cfg, out):
    model = cfg.build_lcs()
    traj = lcs_mod.simulate_lcs(model, cfg.T, cfg.h)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = _fresh_path(out, "lcs-trajectory", cfg.config_hash(), ".csv")
    traj.to_csv(csv_path)
    return EXIT_PASS, {"final": traj.final, "steps": len(traj.times) - 1,
                       "max_comp_residual": float(traj.comp_residuals.max()), "csv": csv_path.name}


def _cmd_check_lyapunov(cfg, out):
    rep = ly.certify(cfg.build_candidate(), cfg.build_system(), cfg.build_region(), cfg.n_samples,
                     cfg.variant, cfg.T, cfg.h, cfg.seed)
    rep.config_hash = cfg.config_hash()
    return VERDICT_EXIT[rep.verdict], rep.to_dict()


def _cmd_check_invariance(cfg, out):
    rep = inv.check_invariance(cfg.build_invariant_set(), cfg.build_system(), cfg.n_samples, cfg.T,
                               cfg.h, cfg.seed)
    rep.config_hash = cfg.config_hash()
    return VERDICT_EXIT[rep.verdict], rep.to_dict()


def _cmd_rho_horizon(cfg, out):
    if cfg.y is None:
        raise NslyapError("rho-horizon needs y")
    r = dict(cfg.rho or {})
    inf = float("inf")
    value = ly.rho_horizon(cfg.build_candidate(), cfg.build_system(), cfg.y,
                           rho_bar=float(r.get("rho_bar", inf)), lam_bar=float(r.get("lam_bar", -inf)),
                           h=cfg.h, ybar=r.get("ybar"), T_max=float(r.get("T_max", 10.0)),
                           rho_scale=float(r.get("rho_scale", 1.0)))
    return EXIT_PASS, {"y": cfg.y, "rho_horizon": value}


def _cmd_report(cfg, out):
    parts, code = {}, EXIT_PASS
    jobs = []
    if cfg.candidate is not None and cfg.region is not None:
        jobs.append(("check-lyapunov", _cmd_check_lyapunov))
    if cfg.invariant_set is not None:
        jobs.append(("check-invariance", _cmd_check_invariance))
    if cfg.system is not None and cfg.x0 is not None:
        jobs.append(("simulate", _cmd_simulate))
    if cfg.lcs is not None:
        jobs.append(("simulate-lcs", _cmd_simulate_lcs))
    if cfg.candidate is not None and cfg.y is not None:
        jobs.append(("rho-horizon", _cmd_rho_horizon))
    if not jobs:
        raise NslyapError("nothing to report for this scenario")
    for name, job in jobs:
        c, res = job(cfg, out)
        parts[name] = res
        code = max(code, c)
    return code, parts


HANDLERS = {
    "simulate": _cmd_simulate,
    "check-lyapunov": _cmd_check_lyapunov,
    "check-invariance": _cmd_check_invariance,
    "simulate-lcs": _cmd_simulate_lcs,
    "rho-horizon": _cmd_rho_horizon,
    "report": _cmd_report,
}


def run(command: str, cfg: ScenarioConfig, out=None) -> tuple:
    """(exit code, report path or None)."""
    out = Path(out if out is not None else cfg.out)
    try:
        code, result = HANDLERS[command](cfg, out)
    except (NslyapError, ValueError, RuntimeError, NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR, None
    path = write_report(out, command, cfg, result)
    return code, path


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nslyap", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="scenario TOML file")
    p.add_argument("--out", default=None, help="output directory (default from config)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = parse_config(Path(args.config))
        overrides = {k: getattr(args, k) for k in ("seed", "h", "T") if getattr(args, k) is not None}
        if overrides:
            cfg = parse_config(dataclasses.replace(cfg, **overrides).to_toml())
    except (NslyapError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    code, path = run(args.command, cfg, args.out)
    if path is not None:
        log.info("report written to %s", path)
        print(path)
    return code


if __name__ == "__main__":
    sys.exit(main())
