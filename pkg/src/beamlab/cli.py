"""Reproducible experiment runner.

Subcommands: bound-check, neg-sweep, tomography, jj-evolve, pendulum,
fluctuations, compare.  Configuration comes from an optional JSON file
(--config) with unknown keys rejected; command-line flags override file
values, and the effective configuration is echoed into every report header.
All randomness derives from the --seed through the fixed fan-out mix, so a
run is byte-identical across repeats and across --workers settings (worker
count is an execution detail and is not echoed).

Exit codes: 0 success; 1 domain/configuration error; 2 a bound or
invariant violated by a sampled state, which would falsify the
implementation rather than the run.
"""

from __future__ import annotations

import argparse
import json
import sys
from multiprocessing import get_context

import numpy as np

from . import dynamics, entanglement, fock, jj, polarization, reports
from .errors import BeamlabError, DomainError
from .seeding import child_seed, rng_for

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2


def _load_config_file(path: str, allowed: set[str]) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise BeamlabError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BeamlabError(
            f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise BeamlabError(f"{path}: config must be a JSON object")
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise BeamlabError(f"{path}: unknown config keys: {', '.join(unknown)}")
    return data


def _effective(args, keys: list[str], file_keys: set[str] | None = None) -> dict:
    """Merge config file < flags; flags win when explicitly set."""
    cfg = {}
    if getattr(args, "config", None):
        cfg.update(_load_config_file(args.config, file_keys or set(keys)))
    for key in keys:
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            cfg[key] = flag
    return cfg


def _require(cfg: dict, key: str):
    if key not in cfg or cfg[key] is None:
        raise BeamlabError(f"missing required parameter '{key}'")
    return cfg[key]


def _jj_params(cfg: dict) -> jj.JJParams:
    n_total = int(_require(cfg, "n_total"))
    n_bar1 = cfg.get("n_bar1")
    if n_bar1 is None:
        n_bar1 = n_total / 2.0
    return jj.JJParams(e_c=float(_require(cfg, "e_c")),
                       lam=float(_require(cfg, "lam")),
                       n_total=n_total, n_bar1=float(n_bar1))


# -- bound-check / neg-sweep ---------------------------------------------------


def _bound_chunk(task):
    seed, start, stop, cutoff, photons = task
    return entanglement.bound_rows(seed, range(start, stop), cutoff, photons)


def _parallel_bound_rows(seed, samples, cutoff, photons, workers):
    if workers <= 1 or samples < 2 * workers:
        return entanglement.bound_rows(seed, range(samples), cutoff, photons)
    bounds = np.linspace(0, samples, workers + 1, dtype=int)
    tasks = [(seed, int(a), int(b), cutoff, photons)
             for a, b in zip(bounds[:-1], bounds[1:]) if a < b]
    with get_context("spawn").Pool(workers) as pool:
        chunks = pool.map(_bound_chunk, tasks)
    return [row for chunk in chunks for row in chunk]


def _mixture_rows(seed, mixtures, cutoff, offset):
    space = fock.FockSpace.truncated([cutoff] * 4)
    rows = []
    for m in range(mixtures):
        rng = rng_for(seed, offset + m)
        g1 = entanglement.gamma_from_state(entanglement.haar_state(space, rng))
        g2 = entanglement.gamma_from_state(entanglement.haar_state(space, rng))
        w = float(rng.uniform())
        mix = entanglement.gamma_from_mixture([(w, g1), (1.0 - w, g2)])
        rep = entanglement.bound_report(mix)
        rows.append({
            "seed": int(offset + m), "cutoff": int(cutoff),
            "n_a": mix.n_a, "n_b": mix.n_b, "n_ab": mix.n_ab,
            "negativity": rep.negativity, "bound_exact": rep.bound_exact,
            "bound_approx": rep.bound_approx, "satisfied": rep.satisfied,
        })
    return rows


def run_bound_check(args) -> int:
    cfg = _effective(args, ["seed", "samples", "cutoff", "mixtures"])
    cfg.setdefault("samples", 1000)
    cfg.setdefault("cutoff", 2)
    cfg.setdefault("mixtures", 0)
    seed = int(_require(cfg, "seed"))
    rows = _parallel_bound_rows(seed, int(cfg["samples"]), int(cfg["cutoff"]),
                                None, args.workers)
    rows += _mixture_rows(seed, int(cfg["mixtures"]), int(cfg["cutoff"]),
                          offset=int(cfg["samples"]))
    config = {"subcommand": "bound-check", "seed": seed,
              "samples": int(cfg["samples"]), "cutoff": int(cfg["cutoff"]),
              "mixtures": int(cfg["mixtures"]), "format": args.format}
    reports.emit_report(rows, args.format, args.out, config=config)
    return EXIT_OK if all(r["satisfied"] for r in rows) else EXIT_VIOLATION


def run_neg_sweep(args) -> int:
    cfg = _effective(args, ["seed", "samples", "k_max"])
    cfg.setdefault("samples", 200)
    cfg.setdefault("k_max", 10)
    seed = int(_require(cfg, "seed"))
    samples, k_max = int(cfg["samples"]), int(cfg["k_max"])
    rows = []
    for k in range(1, k_max + 1):
        rows += _parallel_bound_rows(child_seed(seed, k), samples, k, k,
                                     args.workers)
    config = {"subcommand": "neg-sweep", "seed": seed, "samples": samples,
              "k_max": k_max, "format": args.format}
    reports.emit_report(rows, args.format, args.out, config=config)
    return EXIT_OK if all(r["satisfied"] for r in rows) else EXIT_VIOLATION


# -- tomography ------------------------------------------------------------------


def _complex_matrix(nested) -> np.ndarray:
    try:
        arr = np.array([[complex(c[0], c[1]) for c in row] for row in nested])
    except (TypeError, IndexError) as exc:
        raise BeamlabError(
            "matrix entries must be [re, im] pairs, e.g. [[[1,0],[0,0]], ...]"
        ) from exc
    return arr


_SCENE_KEYS = {"stokes", "omega", "device_maps", "shots", "seed", "noise"}


def run_tomography(args) -> int:
    cfg = _effective(args, ["shots", "seed", "noise"], file_keys=_SCENE_KEYS)
    cfg.setdefault("shots", 10000)
    cfg.setdefault("noise", True)
    if "omega" in cfg:
        omega = polarization.CorrelationMatrix2(_complex_matrix(cfg["omega"]))
    elif "stokes" in cfg:
        s = cfg["stokes"]
        unknown = sorted(set(s) - {"i", "m", "c", "s"})
        if unknown:
            raise BeamlabError(f"unknown stokes keys: {', '.join(unknown)}")
        omega = polarization.stokes_to_omega(polarization.StokesVector(
            i=float(s["i"]), m=float(s.get("m", 0.0)),
            c=float(s.get("c", 0.0)), s=float(s.get("s", 0.0))))
    else:
        raise BeamlabError("scene must provide either 'omega' or 'stokes'")
    for spec in cfg.get("device_maps", []):
        device = polarization.DeviceMap(
            tuple(_complex_matrix(k) for k in spec["kraus"]))
        omega = polarization.apply_device_map(omega, device)
    result = polarization.tomography_simulate(
        omega, int(cfg["shots"]), int(_require(cfg, "seed")),
        noise=bool(cfg["noise"]))
    names = ("i", "m", "c", "s")
    config = {"subcommand": "tomography", "seed": int(cfg["seed"]),
              "shots": int(cfg["shots"]), "noise": bool(cfg["noise"]),
              "format": args.format}
    rows = [{"component": n, "estimate": e, "standard_error": se, "true_value": t}
            for n, e, se, t in zip(names, result.estimate,
                                   result.standard_errors, result.true_values)]
    if args.format == "json":
        payload = {
            "config": config,
            "estimate": dict(zip(names, result.estimate)),
            "standard_errors": dict(zip(names, result.standard_errors)),
            "true_values": dict(zip(names, result.true_values)),
        }
        try:
            with open(args.out, "w") as fh:
                json.dump(payload, fh, indent=2, allow_nan=False)
                fh.write("\n")
        except OSError as exc:
            raise BeamlabError(f"cannot write report to {args.out}: {exc}") from exc
    else:
        reports.emit_report(rows, args.format, args.out, config=config)
    return EXIT_OK


# -- dynamics subcommands --------------------------------------------------------


_JJ_KEYS = ["e_c", "lam", "n_total", "n_bar1"]


def run_jj_evolve(args) -> int:
    cfg = _effective(args, _JJ_KEYS + ["model", "n0", "phi0", "horizon", "dt"])
    params = _jj_params(cfg)
    model = cfg.get("model", "mean_field")
    n0 = float(cfg.get("n0", params.n_bar1))
    phi0 = float(cfg.get("phi0", 0.0))      # construction label of the product state
    omega = jj.derived_constants(params).omega
    rate = max(omega, abs(params.lam), 1e-12)
    horizon = float(cfg.get("horizon", 10.0 / rate))
    dt = float(cfg.get("dt", 0.01 / rate))
    space = jj.sector_space(params)
    initial = jj.product_state(params.n_total, n0, phi0, space)
    if model == "mean_field":
        traj = dynamics.evolve_meanfield(initial, params, horizon, dt)
    elif model == "bose_hubbard":
        traj = dynamics.evolve_exact(initial, params, horizon, dt)
    else:
        raise BeamlabError(f"unknown model {model!r}")
    config = {"subcommand": "jj-evolve", "model": model,
              "e_c": params.e_c, "lam": params.lam, "n_total": params.n_total,
              "n_bar1": params.n_bar1, "n0": n0, "phi0": phi0,
              "horizon": horizon, "dt": dt, "format": args.format}
    reports.emit_report(traj.rows(), args.format, args.out, config=config)
    return EXIT_OK


def run_pendulum(args) -> int:
    cfg = _effective(args, ["phi0", "phidot0", "omega", "horizon", "dt",
                            "e_c", "n_bar1"])
    phi0 = float(cfg.get("phi0", 0.0))
    phidot0 = float(cfg.get("phidot0", 0.0))
    omega = float(_require(cfg, "omega"))
    horizon = float(cfg.get("horizon", 10.0 / omega if omega > 0 else 10.0))
    dt = float(cfg.get("dt", 0.01 / omega if omega > 0 else 0.01))
    e_c = cfg.get("e_c")
    n_bar1 = cfg.get("n_bar1")
    traj = dynamics.pendulum_trajectory(
        phi0, phidot0, omega, horizon, dt,
        e_c=None if e_c is None else float(e_c),
        n_bar1=None if n_bar1 is None else float(n_bar1))
    config = {"subcommand": "pendulum", "phi0": phi0, "phidot0": phidot0,
              "omega": omega, "horizon": horizon, "dt": dt,
              "e_c": e_c, "n_bar1": n_bar1, "format": args.format}
    reports.emit_report(traj.rows(), args.format, args.out, config=config)
    return EXIT_OK


def run_fluctuations(args) -> int:
    cfg = _effective(args, ["n_bar1_values", "p", "phi", "e_c", "lam"])
    cfg.setdefault("p", 0.5)
    cfg.setdefault("phi", 0.0)
    cfg.setdefault("e_c", 1.0)
    cfg.setdefault("lam", 1.0)
    raw = _require(cfg, "n_bar1_values")
    values = [float(v) for v in (raw.split(",") if isinstance(raw, str) else raw)]
    p = float(cfg["p"])
    if not 0.0 < p < 1.0:
        raise DomainError(f"filling p must be in (0, 1), got {p}")
    params_list = [jj.JJParams(e_c=float(cfg["e_c"]), lam=float(cfg["lam"]),
                               n_total=int(round(nb / p)), n_bar1=nb)
                   for nb in values]
    report = dynamics.fluctuation_scan(params_list, phi=float(cfg["phi"]))
    config = {"subcommand": "fluctuations", "n_bar1_values": values, "p": p,
              "phi": float(cfg["phi"]), "e_c": float(cfg["e_c"]),
              "lam": float(cfg["lam"]), "format": args.format}
    extra = {"fitted_exponents": {"number": report.fitted_exponents[0],
                                  "phase": report.fitted_exponents[1]}}
    reports.emit_report(report.rows(), args.format, args.out, config=config,
                        extra=extra)
    return EXIT_OK


def run_compare(args) -> int:
    cfg = _effective(args, _JJ_KEYS + ["n0", "phi0", "horizon"])
    params = _jj_params(cfg)
    n0 = float(cfg.get("n0", params.n_bar1 + 1.0))
    phi0 = float(cfg.get("phi0", 0.0))      # displacement from the locked phase
    omega = jj.derived_constants(params).omega
    rate = max(omega, abs(params.lam), 1e-12)
    horizon = float(cfg.get("horizon", 20.0 / rate))
    record = dynamics.model_compare(params, n0, phi0, horizon)
    config = {"subcommand": "compare", "e_c": params.e_c, "lam": params.lam,
              "n_total": params.n_total, "n_bar1": params.n_bar1, "n0": n0,
              "phi0": phi0, "horizon": horizon, "format": args.format}
    extra = {"max_divergence": {"n1": record.max_div_n1, "phi": record.max_div_phi}}
    reports.emit_report(record.rows(), args.format, args.out, config=config,
                        extra=extra)
    return EXIT_OK


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamlab",
        description="Bosonic two-beam polarization and Josephson-junction "
                    "numerical experiments")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (flags override it)")
        p.add_argument("--seed", type=int, help="master seed for the run")
        p.add_argument("--out", required=True, help="report output path")
        p.add_argument("--format", choices=["csv", "json"], default="csv")

    p = sub.add_parser("bound-check",
                       help="negativity bound over Haar-random states")
    common(p)
    p.add_argument("--samples", type=int)
    p.add_argument("--cutoff", type=int)
    p.add_argument("--mixtures", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=run_bound_check)

    p = sub.add_parser("neg-sweep",
                       help="max negativity vs photons per beam (k = 1..k_max)")
    common(p)
    p.add_argument("--samples", type=int, help="random-search samples per k")
    p.add_argument("--k-max", type=int, dest="k_max")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=run_neg_sweep)

    p = sub.add_parser("tomography", help="simulated Stokes tomography")
    common(p)
    p.add_argument("--shots", type=int)
    p.add_argument("--noise", type=lambda s: s.lower() != "false", default=None)
    p.set_defaults(func=run_tomography)

    p = sub.add_parser("jj-evolve", help="one junction trajectory")
    common(p)
    for flag in ("--e-c", "--lam", "--n-bar1", "--n0", "--phi0",
                 "--horizon", "--dt"):
        p.add_argument(flag, type=float)
    p.add_argument("--n-total", type=int)
    p.add_argument("--model", choices=["mean_field", "bose_hubbard"])
    p.set_defaults(func=run_jj_evolve)

    p = sub.add_parser("pendulum", help="classical pendulum trajectory")
    common(p)
    for flag in ("--phi0", "--phidot0", "--omega", "--horizon", "--dt",
                 "--e-c", "--n-bar1"):
        p.add_argument(flag, type=float)
    p.set_defaults(func=run_pendulum)

    p = sub.add_parser("fluctuations",
                       help="number/phase fluctuation scaling scan")
    common(p)
    p.add_argument("--n-bar1-values", dest="n_bar1_values",
                   help="comma-separated background pair numbers")
    p.add_argument("--p", type=float, help="filling n_bar1/N held fixed")
    p.add_argument("--phi", type=float)
    p.add_argument("--e-c", type=float)
    p.add_argument("--lam", type=float)
    p.set_defaults(func=run_fluctuations)

    p = sub.add_parser("compare", help="exact vs self-consistent vs pendulum")
    common(p)
    for flag in ("--e-c", "--lam", "--n-bar1", "--n0", "--phi0", "--horizon"):
        p.add_argument(flag, type=float)
    p.add_argument("--n-total", type=int)
    p.set_defaults(func=run_compare)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BeamlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
