"""Batch driver: ``tclchaos <command> --config run.ini --out results/``.

The config is an INI file with one section per command holding flat
``key = value`` pairs.  Any key can be overridden from the environment as
``TCLCHAOS_<KEY>`` (upper case).  Every run writes ``manifest.json`` next to
its outputs; a failed run writes ``error.json`` and exits non-zero.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import logging
import os
import platform
import sys
import time
import traceback
from importlib import metadata
from pathlib import Path

import numpy as np

ENV_PREFIX = "TCLCHAOS_"
COMMANDS = ("spectrum", "unfold", "stats", "sff", "sweep", "map", "poincare", "plot")

log = logging.getLogger("tclchaos")


class ConfigError(ValueError):
    pass


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> list:
    return [float(x) for x in s.replace(",", " ").split()]


_MODEL_KEYS = {
    "model": str, "L": int, "S": int, "lam": float, "J": float, "mu": float,
    "omega_c": float, "omega_s": float, "n_cutoff": int, "n_ex": int, "parity": str,
}
_TRIM_KEYS = {"trim_low": float, "trim_high": float}

#: accepted keys, their types and defaults, per command
SCHEMA = {
    "spectrum": {**_MODEL_KEYS, **_TRIM_KEYS, "dim": int, "n_blocks": int, "check_residuals": _bool},
    "unfold": {"input": str, **_TRIM_KEYS, "degree": int, "bins": int},
    "stats": {"input": str, **_TRIM_KEYS, "degree": int, "method": str, "unfold": _bool},
    "sff": {"input": str, **_TRIM_KEYS, "degree": int, "unfold": _bool, "block_size": int,
            "t_min": float, "t_max": float, "n_times": int},
    "sweep": {**_MODEL_KEYS, **_TRIM_KEYS, "grid": _floats, "scaled": _bool, "exponent": float,
              "degree": int, "method": str},
    "map": {"lattice_curve": str, "impurity_curve": str, "lattice_S": int, "impurity_S": int,
            "diagnostic": str, "n_grid": int},
    "poincare": {"S": int, "lam": float, "mu": float, "omega_c": float, "omega_s": float,
                 "energy": float, "energy_above_min": float, "n_seeds": int, "n_crossings": int,
                 "tol": float},
    "plot": {"spectrum": str, "unfolded": str, "stats": str, "sff": str, "curve": str,
             "section": str, "map": str},
}

DEFAULTS = {
    "spectrum": {"model": "lattice", "lam": 1.0, "J": 0.0, "mu": 0.0, "omega_c": 1.0, "omega_s": 1.0,
                 "n_cutoff": 1024, "parity": "symmetric", "trim_low": 0.0, "trim_high": 0.0,
                 "n_blocks": 1, "check_residuals": False},
    "unfold": {"trim_low": 0.0, "trim_high": 0.0, "degree": 12, "bins": 50},
    "stats": {"trim_low": 0.0, "trim_high": 0.0, "degree": 12, "method": "mle", "unfold": True},
    "sff": {"trim_low": 0.0, "trim_high": 0.0, "degree": 12, "unfold": True, "block_size": 100,
            "t_min": 1e-2, "t_max": 1e2, "n_times": 400},
    "sweep": {"model": "lattice", "lam": 1.0, "omega_c": 1.0, "omega_s": 1.0, "n_cutoff": 256,
              "parity": "symmetric", "scaled": False, "degree": 12, "method": "mle"},
    "map": {"diagnostic": "both", "n_grid": 101},
    "poincare": {"S": 1, "lam": 1.0, "mu": 0.1, "omega_c": 1.0, "omega_s": 1.0, "n_seeds": 8,
                 "n_crossings": 1000, "tol": 1e-10},
    "plot": {},
}


def load_config(command: str, path=None, environ=None) -> dict:
    """Merge defaults, the command's INI section and ``TCLCHAOS_*`` overrides.

    Unknown keys in the section are rejected.  Environment variables that
    do not name a key of this command are ignored (they may belong to
    another command).
    """
    schema = SCHEMA[command]
    lower = {k.lower(): k for k in schema}
    raw = {}
    if path is not None:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        if not cp.read(path):
            raise ConfigError(f"cannot read config file {path}")
        unknown_sections = set(cp.sections()) - set(COMMANDS)
        if unknown_sections:
            raise ConfigError(f"unknown config section(s): {sorted(unknown_sections)}")
        if cp.has_section(command):
            for key, value in cp.items(command):
                if key.lower() not in lower:
                    raise ConfigError(f"unknown key {key!r} in section [{command}]")
                raw[lower[key.lower()]] = value
    environ = os.environ if environ is None else environ
    for name, value in environ.items():
        if name.startswith(ENV_PREFIX):
            key = name[len(ENV_PREFIX):].lower()
            if key in lower:
                raw[lower[key]] = value
    cfg = dict(DEFAULTS[command])
    for key, value in raw.items():
        try:
            cfg[key] = schema[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from None
    return cfg


def _require(cfg, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("numpy", "scipy", "numba", "matplotlib", "artifact"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            pass
    return out


def _load_spectrum(cfg):
    from .spectra import Spectrum, trim_spectrum

    _require(cfg, "input")
    if not Path(cfg["input"]).exists():
        raise FileNotFoundError(f"input spectrum {cfg['input']} not found")
    spec = Spectrum.from_csv(cfg["input"])
    spec = Spectrum(spec.values, {k: v for k, v in spec.provenance.items() if k != "trims"})
    if cfg["trim_low"] or cfg["trim_high"]:
        spec = trim_spectrum(spec, cfg["trim_low"], cfg["trim_high"])
    return spec


# --- commands ---------------------------------------------------------------

def cmd_spectrum(cfg, out: Path, seed: int, workers: int) -> list:
    from .basis import ImpurityParams, LatticeParams, build_impurity_basis, build_sector_basis
    from .hamiltonian import assemble_impurity_hamiltonian, assemble_lattice_hamiltonian
    from .spectra import Spectrum, diagonalize, trim_spectrum
    from .stats import goe_sample_spectrum, poisson_levels

    model = cfg["model"]
    if model == "lattice":
        _require(cfg, "L", "S", "n_ex")
        p = LatticeParams(cfg["L"], cfg["S"], cfg["lam"], cfg["J"], cfg["omega_c"], cfg["omega_s"])
        H = assemble_lattice_hamiltonian(build_sector_basis(p, cfg["n_ex"], cfg["parity"]))
        spec = diagonalize(H, check_residuals=cfg["check_residuals"], seed=seed)
    elif model == "impurity":
        _require(cfg, "S")
        p = ImpurityParams(cfg["S"], cfg["lam"], cfg["mu"], cfg["omega_c"], cfg["omega_s"], cfg["n_cutoff"])
        H = assemble_impurity_hamiltonian(build_impurity_basis(p))
        spec = diagonalize(H, check_residuals=cfg["check_residuals"], seed=seed)
    elif model == "goe":
        _require(cfg, "dim")
        # independent samples are concatenated after shifting apart, so blocks never interleave
        parts, offset = [], 0.0
        for k in range(cfg["n_blocks"]):
            v = goe_sample_spectrum(cfg["dim"], seed + k).values
            parts.append(v - v[0] + offset)
            offset = parts[-1][-1] + 10.0 * np.ptp(v)
        spec = Spectrum(np.concatenate(parts), {"ensemble": "GOE", "dim": cfg["dim"],
                                                "n_blocks": cfg["n_blocks"], "seed": seed})
    elif model == "poisson":
        _require(cfg, "dim")
        spec = Spectrum(poisson_levels(cfg["dim"], seed), {"ensemble": "poisson", "seed": seed})
    else:
        raise ConfigError(f"unknown model {model!r}")
    if cfg["trim_low"] or cfg["trim_high"]:
        spec = trim_spectrum(spec, cfg["trim_low"], cfg["trim_high"])
    path = out / "spectrum.csv"
    spec.to_csv(path)
    return [path]


def cmd_unfold(cfg, out, seed, workers):
    from .unfolding import dos_histogram, unfold, write_histogram_csv

    spec = _load_spectrum(cfg)
    u = unfold(spec, cfg["degree"])
    paths = [out / "unfolded.csv", out / "dos_raw.csv", out / "dos_unfolded.csv"]
    u.to_csv(paths[0])
    write_histogram_csv(paths[1], *dos_histogram(spec.values, cfg["bins"]))
    write_histogram_csv(paths[2], *dos_histogram(u.values, cfg["bins"]))
    return paths


def _write_hist(path, edges, density):
    with open(path, "w") as fh:
        fh.write("bin_left,bin_right,density\n")
        for lo, hi, d in zip(edges[:-1], edges[1:], density):
            fh.write(f"{lo:.17g},{hi:.17g},{d:.17g}\n")


def cmd_stats(cfg, out, seed, workers):
    from .stats import stats_report
    from .unfolding import unfold

    spec = _load_spectrum(cfg)
    u = unfold(spec, cfg["degree"]) if cfg["unfold"] else spec
    rep = stats_report(spec, u, cfg["method"], params={**spec.provenance, "degree": cfg["degree"],
                                                         "trim_low": cfg["trim_low"],
                                                         "trim_high": cfg["trim_high"]})
    paths = [out / "stats.json", out / "spacing_hist.csv", out / "ratio_hist.csv"]
    rep.to_json(paths[0])
    _write_hist(paths[1], rep.histograms["spacing"]["edges"], rep.histograms["spacing"]["density"])
    _write_hist(paths[2], rep.histograms["ratio"]["edges"], rep.histograms["ratio"]["density"])
    return paths


def cmd_sff(cfg, out, seed, workers):
    from .sff import default_times, sff
    from .unfolding import unfold

    spec = _load_spectrum(cfg)
    u = unfold(spec, cfg["degree"]) if cfg["unfold"] else spec
    curve = sff(u, cfg["block_size"], default_times(cfg["n_times"], cfg["t_min"], cfg["t_max"]))
    path = out / "sff.csv"
    curve.to_csv(path)
    return [path]


def cmd_sweep(cfg, out, seed, workers):
    from .crossover import SCALING_EXPONENTS, sweep

    _require(cfg, "grid", "S")
    model = cfg["model"]
    if model == "lattice":
        _require(cfg, "L", "n_ex")
        fixed = {k: cfg[k] for k in ("L", "S", "lam", "omega_c", "omega_s")}
    elif model == "impurity":
        fixed = {k: cfg[k] for k in ("S", "lam", "omega_c", "omega_s", "n_cutoff")}
    else:
        raise ConfigError(f"unknown model {model!r}")
    expo = cfg.get("exponent", SCALING_EXPONENTS[model])
    grid = np.asarray(cfg["grid"], dtype=float)
    if cfg["scaled"]:
        grid = grid / float(cfg["S"]) ** expo
    trims = None
    if "trim_low" in cfg or "trim_high" in cfg:
        from .crossover import DEFAULT_TRIMS

        lo, hi = DEFAULT_TRIMS[model]
        trims = (cfg.get("trim_low", lo), cfg.get("trim_high", hi))
    curve = sweep(model, grid, fixed, cfg.get("n_ex"), cfg["parity"], trims, cfg["degree"],
                  cfg["method"], workers, expo)
    paths = [out / "curve.csv", out / "curve.json"]
    curve.to_csv(paths[0])
    with open(paths[1], "w") as fh:
        json.dump({"model": model, "S": curve.S, "exponent": expo, "failed": curve.failed,
                   "meta": curve.meta}, fh, indent=2, sort_keys=True)
    return paths


def cmd_map(cfg, out, seed, workers):
    from .crossover import DiagnosticCurve, extract_map

    _require(cfg, "lattice_curve", "impurity_curve", "lattice_S", "impurity_S")
    for key in ("lattice_curve", "impurity_curve"):
        if not Path(cfg[key]).exists():
            raise FileNotFoundError(f"{key} file {cfg[key]} not found")
    lat = DiagnosticCurve.from_csv(cfg["lattice_curve"], "lattice", cfg["lattice_S"])
    imp = DiagnosticCurve.from_csv(cfg["impurity_curve"], "impurity", cfg["impurity_S"])
    which = ("b", "r") if cfg["diagnostic"] == "both" else (cfg["diagnostic"],)
    paths = []
    for d in which:
        m = extract_map(lat, imp, d, cfg["n_grid"])
        p = out / f"map_{d}.csv"
        m.to_csv(p)
        paths.append(p)
    return paths


def cmd_poincare(cfg, out, seed, workers):
    from .basis import ImpurityParams
    from .classical import minimum_energy, poincare_section, section_dimension

    p = ImpurityParams(cfg["S"], cfg["lam"], cfg["mu"], cfg["omega_c"], cfg["omega_s"])
    if cfg.get("energy") is not None:
        E = cfg["energy"]
    else:
        _require(cfg, "energy_above_min")
        E = minimum_energy(p)[0] + cfg["energy_above_min"]
    sec = poincare_section(p, E, cfg["n_seeds"], cfg["n_crossings"], seed, cfg["tol"])
    paths = [out / "section.csv", out / "section.json"]
    sec.to_csv(paths[0])
    meta = sec.metadata()
    try:
        meta["dimension_proxy"] = section_dimension(sec)
    except ValueError:
        meta["dimension_proxy"] = None
    with open(paths[1], "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    return paths


def cmd_plot(cfg, out, seed, workers):
    from . import plots

    given = {k: v for k, v in cfg.items() if v}
    if not given:
        raise ConfigError("plot needs at least one input file key")
    for key, path in given.items():
        if not Path(path).exists():
            raise FileNotFoundError(f"{key} input {path} not found")
    return plots.plot_artifacts(given, out)


HANDLERS = {
    "spectrum": cmd_spectrum, "unfold": cmd_unfold, "stats": cmd_stats, "sff": cmd_sff,
    "sweep": cmd_sweep, "map": cmd_map, "poincare": cmd_poincare, "plot": cmd_plot,
}


def _input_files(cfg) -> list:
    keys = ("input", "lattice_curve", "impurity_curve", *SCHEMA["plot"])
    return [cfg[k] for k in keys if isinstance(cfg.get(k), str) and Path(cfg[k]).is_file()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tclchaos", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="INI file with a [<command>] section")
    ap.add_argument("--out", type=Path, default=Path("."), help="output directory")
    ap.add_argument("--workers", type=int, default=1, help="worker processes for sweeps")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    cfg = None
    try:
        cfg = load_config(args.command, args.config)
        outputs = HANDLERS[args.command](cfg, args.out, args.seed, args.workers)
    except Exception as exc:  # noqa: BLE001 - every failure becomes an error record
        record = {
            "status": "error",
            "command": args.command,
            "error_type": type(exc).__name__,
            "message": str(exc),
            "config": cfg,
            "traceback": traceback.format_exc(limit=5),
        }
        with open(args.out / "error.json", "w") as fh:
            json.dump(record, fh, indent=2, default=str)
        print(json.dumps({k: record[k] for k in ("status", "command", "error_type", "message")}),
              file=sys.stderr)
        return 2 if isinstance(exc, ConfigError) else 1
    manifest = {
        "status": "ok",
        "command": args.command,
        "config": cfg,
        "seed": args.seed,
        "workers": args.workers,
        "versions": _versions(),
        "inputs": {str(p): _sha256(p) for p in _input_files(cfg)},
        "outputs": {Path(p).name: _sha256(p) for p in outputs},
        "wall_time_s": time.perf_counter() - t0,
    }
    with open(args.out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
    return 0


if __name__ == "__main__":
    sys.exit(main())
