"""Batch front-end: admissibility sweeps, flow studies, resonance tables,
expansion fits.  One subcommand per study; all randomness is seeded from the
command line and outputs are deterministic byte-for-byte."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .spacetime import SpacetimeParams, NoHorizons, load_params, \
    admissibility, domain
from .symbols import PhasePoint, CompactPhasePoint
from .dynamics import integrate_flow, classify_radial, StepFailure
from .absorption import AbsorbingSpec
from .resonances import build_operator, solve_resonances, oracle_refine, \
    SolverFailure
from .mellin import resonance_expand, evaluate_terms, fit_decay, \
    TemporalSamples, PoleOnContour, log_gaussian_pulse_hat, inverse_mellin
from .resonances import resolvent_apply

EXIT_OK = 0
EXIT_FLAGS = 1
EXIT_CONFIG = 2
EXIT_STEP = 3
EXIT_SOLVER = 4
EXIT_CONTOUR = 5

_SCHEMAS = {
    "admissible": {
        "grid_size": (int, 64, 1_000_000, 2048),
        "require": (str, None, None, "horizons_exist,classical_nontrapping"),
    },
    "flow": {
        "n_traj": (int, 1, 500, 20),
        "T": (float, 0.1, 500.0, 4.0),
        "tol": (float, 1e-12, 1e-4, 1e-10),
        "eps": (float, 1e-6, 0.1, 1e-3),
        "horizon_sign": (int, -1, 1, 1),
        "include_classify": (int, 0, 1, 1),
        "retry_budget": (int, 0, 5, 2),
    },
    "resonances": {
        "N": (int, 16, 400, 80),
        "ell_min": (int, 0, 16, 0),
        "ell_max": (int, 0, 16, 2),
        "re_min": (float, -100.0, 100.0, -6.0),
        "re_max": (float, -100.0, 100.0, 6.0),
        "im_min": (float, -100.0, 100.0, -3.6),
        "im_max": (float, -100.0, 100.0, 0.4),
        "scan_step": (float, 0.05, 1.0, 0.2),
        "oracle": (int, 0, 1, 1),
    },
    "expand": {
        "N": (int, 16, 400, 48),
        "ell": (int, 0, 16, 0),
        "ell_target": (float, 0.1, 10.0, 1.5),
        "sigma_max": (float, 5.0, 200.0, 60.0),
        "n_sigma": (int, 128, 100_000, 4000),
        "recon_bound": (float, 1e-12, 1.0, 1e-6),
    },
}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    params_file: str
    out_dir: str
    seed: int = 0
    threads: int = 1
    fmt: str = "csv"
    knobs: dict = field(default_factory=dict)

    @property
    def digest(self) -> str:
        payload = json.dumps({"command": self.command, "seed": self.seed,
                              "threads": self.threads, "format": self.fmt,
                              "knobs": self.knobs}, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()


def parse_config(path, command, out_dir, seed, threads, fmt) -> RunConfig:
    """key=value config; unknown keys and out-of-range knobs are rejected."""
    schema = _SCHEMAS[command]
    kv = {}
    try:
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"malformed config line: {line!r}")
                k, v = (t.strip() for t in line.split("=", 1))
                kv[k] = v
    except OSError as exc:
        raise ConfigError(str(exc)) from exc
    if "params" not in kv:
        raise ConfigError("config must name a params file (params = PATH)")
    params_file = kv.pop("params")
    if not os.path.isabs(params_file):
        params_file = os.path.join(os.path.dirname(os.path.abspath(path)),
                                   params_file)
    knobs = {}
    for k, v in kv.items():
        if k not in schema:
            raise ConfigError(f"unknown config key {k!r} for {command}")
        typ, lo, hi, _ = schema[k]
        try:
            val = typ(v)
        except ValueError as exc:
            raise ConfigError(f"bad value for {k}: {v!r}") from exc
        if lo is not None and not (lo <= val <= hi):
            raise ConfigError(f"{k} = {val} outside [{lo}, {hi}]")
        knobs[k] = val
    for k, (typ, lo, hi, dft) in schema.items():
        knobs.setdefault(k, dft)
    return RunConfig(command, params_file, out_dir, seed, threads, fmt, knobs)


def _write_manifest(cfg: RunConfig, extra=None):
    os.makedirs(cfg.out_dir, exist_ok=True)
    manifest = {"command": cfg.command, "config_hash": cfg.digest,
                "seed": cfg.seed, "threads": cfg.threads,
                "format": cfg.fmt, "version": __version__,
                "knobs": cfg.knobs}
    if extra:
        manifest.update(extra)
    with open(os.path.join(cfg.out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def _fmt(x) -> str:
    return f"{x:.17g}"


def cmd_admissible(cfg: RunConfig) -> int:
    params = load_params(cfg.params_file)
    rep = admissibility(params, grid_size=cfg.knobs["grid_size"])
    _write_manifest(cfg)
    with open(os.path.join(cfg.out_dir, "admissibility.json"), "w") as fh:
        fh.write(rep.to_json())
    wanted = [t.strip() for t in cfg.knobs["require"].split(",") if t.strip()]
    ok = all(getattr(rep, name) for name in wanted)
    return EXIT_OK if ok else EXIT_FLAGS


def cmd_flow(cfg: RunConfig) -> int:
    params = load_params(cfg.params_file)
    rng = np.random.default_rng(cfg.seed)
    _write_manifest(cfg)
    k = cfg.knobs
    rows = []
    r_lo, r_hi = domain(params)
    for traj_id in range(k["n_traj"]):
        if params.model == "deSitter":
            start = (k["eps"] * rng.uniform(-1, 1), k["eps"] * rng.uniform(0.5, 1),
                     k["eps"] * rng.uniform(-1, 1), 1)
            attempt_tol = k["tol"]
            for attempt in range(k["retry_budget"] + 1):
                try:
                    bc = integrate_flow("ds_reduced", params, start, k["T"],
                                        tol=attempt_tol)
                    break
                except StepFailure:
                    attempt_tol = min(attempt_tol * 10, 1e-4)
            else:
                return EXIT_STEP
            for s, y in bc.samples:
                rows.append([traj_id, "ds_reduced", _fmt(s)]
                            + [_fmt(v) for v in y]
                            + ["", "", ""])
        else:
            zeta = rng.uniform(0.2, 1.0) * float(rng.choice([-1.0, 1.0]))
            pt = PhasePoint(rng.uniform(r_lo * 1.05, r_hi * 0.95),
                            rng.uniform(0.5, math.pi - 0.5),
                            rng.uniform(0, 2 * math.pi),
                            rng.uniform(-1, 1), rng.uniform(-1, 1), zeta)
            attempt_tol = k["tol"]
            for attempt in range(k["retry_budget"] + 1):
                try:
                    bc = integrate_flow("kds_classical", params, pt, k["T"],
                                        tol=attempt_tol,
                                        horizon_sign=k["horizon_sign"])
                    break
                except StepFailure:
                    attempt_tol = min(attempt_tol * 10, 1e-4)
            else:
                return EXIT_STEP
            led = bc.conserved_ledger
            for i, (s, p) in enumerate(bc.samples):
                if isinstance(p, CompactPhasePoint):
                    chart = "compact"
                    coords = [p.base[0], p.base[1], p.base[2], p.nu,
                              p.eta_hat, p.zeta_hat]
                else:
                    chart = "affine"
                    coords = [p.r, p.theta, p.phi, p.xi, p.eta, p.zeta]
                rows.append([traj_id, chart, _fmt(s)] + [_fmt(v) for v in coords]
                            + [_fmt(led["p"][i]), _fmt(led["zeta"][i]),
                               _fmt(led["ptilde"][i])])
    with open(os.path.join(cfg.out_dir, "trajectories.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trajectory", "chart", "parameter", "c1", "c2", "c3",
                    "c4", "c5", "c6", "p", "zeta", "ptilde"])
        w.writerows(rows)
    if k["include_classify"]:
        rep = classify_radial(params, k["horizon_sign"], n_traj=k["n_traj"],
                              tol=min(k["tol"], 1e-10), seed=cfg.seed)
        with open(os.path.join(cfg.out_dir, "radial_report.json"), "w") as fh:
            json.dump({"horizon_sign": rep.horizon_sign,
                       "kind": rep.is_sink_or_source,
                       "beta0_measured": rep.beta0_measured,
                       "beta0_expected": rep.beta0_expected,
                       "rho0_rate": rep.rho0_rate,
                       "rel_err": rep.beta0_rel_err}, fh, indent=2,
                      sort_keys=True)
    return EXIT_OK


def _model_id(params: SpacetimeParams) -> str:
    return {"deSitter": "deSitter", "MinkowskiBoundary": "minkowski",
            "dSSchwarzschild": "dSSchwarzschild"}.get(params.model, params.model)


def cmd_resonances(cfg: RunConfig) -> int:
    params = load_params(cfg.params_file)
    model = _model_id(params)
    k = cfg.knobs
    _write_manifest(cfg)
    region = (k["re_min"], k["re_max"], k["im_min"], k["im_max"])
    rows = []
    appendix = []
    for ell in range(k["ell_min"], k["ell_max"] + 1):
        try:
            op = build_operator(model, params, ell, k["N"])
            rl = solve_resonances(op, region=region, scan_step=k["scan_step"])
        except SolverFailure:
            return EXIT_SOLVER
        for e in rl.entries:
            row = [model, ell, k["N"], _fmt(e.sigma.real), _fmt(e.sigma.imag),
                   e.multiplicity, _fmt(e.convergence_delta)]
            if k["oracle"]:
                try:
                    z = oracle_refine(model, params, ell, e.sigma, n=params.n)
                    row += [_fmt(z.real), _fmt(z.imag), _fmt(abs(z - e.sigma))]
                except Exception:
                    row += ["", "", ""]
            rows.append(row)
            appendix.append({"ell": ell, "sigma_re": e.sigma.real,
                             "sigma_im": e.sigma.imag,
                             "convergence_delta": e.convergence_delta,
                             "suspect": e.suspect})
    header = ["model", "ell", "N", "re_sigma", "im_sigma", "multiplicity",
              "convergence_delta"]
    if k["oracle"]:
        header += ["oracle_re", "oracle_im", "oracle_dist"]
    with open(os.path.join(cfg.out_dir, "resonances.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    with open(os.path.join(cfg.out_dir, "convergence.json"), "w") as fh:
        json.dump(appendix, fh, indent=2, sort_keys=True)
    return EXIT_OK


def cmd_expand(cfg: RunConfig) -> int:
    params = load_params(cfg.params_file)
    model = _model_id(params)
    k = cfg.knobs
    _write_manifest(cfg)
    spec = AbsorbingSpec(digamma_scale=1e-12)
    op = build_operator(model, params, k["ell"], k["N"], spec)
    f0 = np.exp(-((op.grid - 0.5) / 0.15) ** 2)
    try:
        terms, rem = resonance_expand(f0, op, k["ell_target"],
                                      sigma_max=k["sigma_max"],
                                      n_sigma=k["n_sigma"])
    except PoleOnContour:
        return EXIT_CONTOUR
    # reconstruction residual against the inverse transform along a contour
    # above every pole (Im sigma = +0.3)
    phat = log_gaussian_pulse_hat()
    sig = np.linspace(-k["sigma_max"], k["sigma_max"], k["n_sigma"])
    vals = np.array([resolvent_apply(op, s + 0.3j,
                                     phat(s + 0.3j) * f0.astype(complex),
                                     with_absorber=False) for s in sig])
    tau = rem.tau_grid
    direct = inverse_mellin(vals, -0.3, sig, tau)
    synth = rem.values.copy()
    tv = evaluate_terms(terms, tau)
    if tv is not None:
        synth = synth + tv
    resid = float(np.max(np.abs(direct.values - synth))
                  / max(np.max(np.abs(direct.values)), 1e-300))
    rate, logpow, fitres = fit_decay(TemporalSamples(tau, rem.values),
                                     window=(1e-4, 3e-2))
    out = {
        "terms": [{"sigma_re": t.sigma_j.real, "sigma_im": t.sigma_j.imag,
                   "kappa": t.kappa,
                   "coeff_norm": float(np.linalg.norm(np.atleast_1d(t.a)))}
                  for t in terms],
        "remainder_rate": rate,
        "remainder_log_power": logpow,
        "reconstruction_residual": resid,
        "bound": k["recon_bound"],
    }
    with open(os.path.join(cfg.out_dir, "expansion.json"), "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
    print(f"reconstruction residual: {resid:.3e}")
    return EXIT_OK if resid < k["recon_bound"] else EXIT_FLAGS


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="qnmkit")
    ap.add_argument("command", choices=sorted(_SCHEMAS))
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--format", choices=["csv", "json"], default="csv")
    try:
        ns = ap.parse_args(argv)
    except SystemExit:
        return EXIT_CONFIG
    try:
        cfg = parse_config(ns.config, ns.command, ns.out, ns.seed, ns.threads,
                           ns.format)
    except (ConfigError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        handler = {"admissible": cmd_admissible, "flow": cmd_flow,
                   "resonances": cmd_resonances, "expand": cmd_expand}[cfg.command]
        return handler(cfg)
    except (ConfigError, ValueError, NoHorizons) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StepFailure:
        return EXIT_STEP
    except SolverFailure:
        return EXIT_SOLVER
    except PoleOnContour:
        return EXIT_CONTOUR


if __name__ == "__main__":
    raise SystemExit(main())
