"""Command-line entry point: ``nvdnp {simulate,angle-sweep,validate,print-defaults}``."""

import argparse
from dataclasses import replace
import hashlib
import json
import math
from pathlib import Path
import sys
import time

from . import __version__
from .config import FIELDS, ConfigError, RunConfig, _parse_value, parse_config, render_config

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_INVALID = 2
EXIT_ORACLE = 3


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def manifest_hash(command, cfg):
    body = {"command": command, "config": {k: _jsonable(v) for k, v in cfg.to_dict().items()},
            "version": __version__}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()


def _dump_json(obj):
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n"


def _clean(obj):
    """Replace non-finite floats so the JSON stays strict."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else str(obj)
    return obj


def load(args):
    """Config from ``--config`` plus ``--set`` and ``--seed`` overrides."""
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg, _ = parse_config(fh.read())
    else:
        cfg = RunConfig()
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set {item}: expected key=value")
        key, raw = (s.strip() for s in item.split("=", 1))
        if key not in FIELDS:
            raise ConfigError(f"--set: unknown key {key!r}")
        try:
            overrides[key] = _parse_value(raw, FIELDS[key].type)
        except ValueError as exc:
            raise ConfigError(f"--set {key}: {exc}") from None
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if getattr(args, "angles", None):
        overrides["angles_deg"] = args.angles
    if getattr(args, "no_resonator", False):
        overrides["resonator_hwhm_mhz"] = math.inf
    cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


def write_outputs(out, command, cfg, fmt, csv_name, csv_text, json_name, payload, threads, started):
    digest = manifest_hash(command, cfg)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    if fmt in ("csv", "both"):
        (out / csv_name).write_text(f"# manifest_sha256: {digest}\n" + csv_text, encoding="utf-8")
        files.append(csv_name)
    if fmt in ("json", "both"):
        body = {"manifest_sha256": digest, **_clean(payload)}
        (out / json_name).write_text(_dump_json(body), encoding="utf-8")
        files.append(json_name)
    manifest = {
        "command": command,
        "version": __version__,
        "manifest_sha256": digest,
        "master_seed": cfg.master_seed,
        "config": _clean(cfg.to_dict()),
        "threads": threads,
        "files": files,
        "wall_time_s": round(time.perf_counter() - started, 3),
    }
    (out / "manifest.json").write_text(_dump_json(manifest), encoding="utf-8")
    return files


def cmd_simulate(args):
    from .simulation import run_simulation

    cfg = load(args)
    started = time.perf_counter()
    result = run_simulation(cfg, threads=args.threads)
    payload = {"protocol": cfg.protocol, **result.to_dict(per_spin=args.per_spin)}
    files = write_outputs(args.out, "simulate", cfg, args.format, "trace.csv", result.to_csv(),
                          "result.json", payload, args.threads, started)
    final = payload["final_bulk_polarization_mean"]
    print(f"final bulk polarization {final:.6g} over {cfg.n_seeds} baths; wrote {', '.join(files)}")
    return EXIT_OK


def cmd_angle_sweep(args):
    from .simulation import run_angle_sweep

    cfg = load(args)
    if len(cfg.angles()) < 2:
        raise ConfigError("angles_deg: an angle sweep needs at least two angles")
    started = time.perf_counter()
    curve = run_angle_sweep(cfg, threads=args.threads)
    files = write_outputs(args.out, "angle-sweep", cfg, args.format, "angle_curve.csv",
                          curve.to_csv(), "angle_summary.json", curve.to_dict(), args.threads, started)
    for t, m, s in zip(curve.theta, curve.mean, curve.stderr):
        print(f"theta {math.degrees(t):5.1f} deg  enhancement {m:.4f} +- {s:.4f}")
    print(f"wrote {', '.join(files)}")
    return EXIT_OK


def cmd_validate(args):
    from .oracles import run_all

    cfg = load(args)
    checks = run_all(cfg.larmor_mhz)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_ORACLE if failed else EXIT_OK


def cmd_print_defaults(args):
    sys.stdout.write(render_config(RunConfig()))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="nvdnp", description="NV-13C dynamic nuclear polarization simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, outputs=True):
        sp.add_argument("--config", metavar="PATH", help="key = value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        if outputs:
            sp.add_argument("--threads", type=int, default=1, help="worker threads")
            sp.add_argument("--out", metavar="DIR", default="nvdnp_out", help="output directory")
            sp.add_argument("--format", choices=("csv", "json", "both"), default="both")

    sp = sub.add_parser("simulate", help="polarization build-up over bath samples")
    common(sp)
    sp.add_argument("--per-spin", action="store_true", help="include per-spin traces in the JSON")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("angle-sweep", help="enhancement versus misalignment angle")
    common(sp)
    sp.add_argument("--angles", help="comma-separated angles in degrees")
    sp.add_argument("--no-resonator", action="store_true", help="disable the resonator filter (hwhm = inf)")
    sp.set_defaults(func=cmd_angle_sweep)

    sp = sub.add_parser("validate", help="run the built-in numerical checks")
    common(sp, outputs=False)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("print-defaults", help="print the default config")
    sp.set_defaults(func=cmd_print_defaults)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
