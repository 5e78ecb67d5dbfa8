"""Experiment runner.

Subcommands: ``basis``, ``trace-check``, ``simulate``, ``stability``,
``picard``, ``averaging``, ``sewing-rates``, ``lasry-lions``,
``dpf-check``.  Each run reads a flat INI config, checks the (alpha,
gamma, d) admissibility window, executes one experiment, and writes a
timestamped run directory containing

* ``config.ini``   the resolved config snapshot (lossless round trip),
* ``<table>.csv``  RFC 4180 data files, floats at 17 significant digits,
* ``summary.json`` fitted quantities and pass/fail verdicts, validated
  against the shipped JSON schema,
* ``run.log``      plain-text log.

Exit codes: 0 all verdicts pass, 1 some verdict failed, 2 unparseable
config, 3 parameters outside the admissibility window without
``--override-window``, 4 runtime numerical failure.

The only environment variable consulted is ``REGNOISE_THREADS`` (worker
count for ensemble blocks); results are bit-identical for any value.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import datetime as _dt
import json
import sys
import time
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .dynamics import (ConstantDrift, EnsembleConfig, ZeroDrift, auto_picard_horizon,
                       diagonal_holder_drift, dpf_partial_sums, holder_pair_check,
                       holder_profile, holder_seminorm_est, picard_sequence,
                       rank_one_drift, simulate_ensemble, stability_family,
                       tanh_profile)
from .gaussian import mc_average_2pt
from .mollify import ScalarHolderFn, check_lipschitz, gap_bound, inf_convolution
from .sewing import ConstantPath, comparison_germ, rate_probe
from .spectrum import build_basis, gamma_window, trace_report
from .stats import increment_growth_exponent, loglog_fit
from .streams import substream

APRIORI_TOL = 1e-9

# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    """Typed view of the flat INI config; defaults give a runnable setup."""

    experiment: str = ""
    # [basis]
    dimension: int = 1
    boundary: str = "dirichlet"
    modes: int = 64
    custom_eigenvalues: str = ""
    # [model]
    gamma: float = 0.0
    alpha: float = 0.5
    # [drift]
    drift_kind: str = "rank-one"
    drift_profile: str = "holder"
    drift_scale: float = 1.0
    drift_input_mode: int = 1
    drift_output_mode: int = 1
    drift_beta: float = 0.2
    drift_constant: str = "1:1.0"
    # [run]
    seed: int = 1
    t_end: float = 1.0
    dt: float = 2.0**-10
    samples: int = 1000
    moment: float = 2.0
    store_every: int = 16
    output_dir: str = "runs"
    window_override: bool = False
    x0: str = "1:0.3,2:0.2"
    # [trace]
    trace_cutoffs: str = "1,10,100,1000,10000"
    # [averaging]
    avg_t_exp_min: int = -8
    avg_t_exp_max: int = -2
    avg_h1: str = "1:0.75"
    avg_h2: str = "1:0.25"
    avg_slope_slack: float = 0.15
    avg_ratio_bound: float = 5.0
    # [stability]
    stab_eps: str = "0.1,0.01,0.001,0.0001"
    stab_direction: str = "1:1.0"
    stab_ratio_spread: float = 3.0
    stab_slope_target: float = 1.0
    stab_slope_tol: float = 0.15
    # [picard]
    pic_iterations: int = 7
    pic_t_prime: str = "auto"
    pic_ratio_bound: float = 0.8
    pic_check_from: int = 2
    pic_check_to: int = 6
    pic_pilot_paths: int = 256
    # [sewing]
    sew_levels: str = "0.5,0.25,0.125,0.0625,0.03125"
    sew_anchor: float = 0.25
    sew_t_end: float = 1.5
    sew_psi: str = "1:0.35"
    sew_phi: str = "1:0.25"
    sew_inner: int = 64
    sew_cond: int = 128
    sew_defect_target: str = "auto"
    sew_cond_target: str = "auto"
    sew_boot: int = 1000
    # [lasry-lions]
    ll_lambdas: str = "0.25,1.0,4.0"
    ll_function: str = "holder"
    ll_points: int = 64
    ll_pairs: int = 200
    ll_scale: float = 2.0
    ll_oracle: bool = True
    # [dpf]
    dpf_cutoffs: str = "128,256,512,1024,2048,4096,8192"
    dpf_band: float = 0.1
    dpf_cauchy_tol: float = 1e-6
    dpf_pairs: int = 10000
    # [simulate]
    sim_dump_max: int = 4


_SECTIONS: dict[str, dict[str, str]] = {
    "basis": {"dimension": "dimension", "boundary": "boundary", "modes": "modes",
              "custom_eigenvalues": "custom_eigenvalues"},
    "model": {"gamma": "gamma", "alpha": "alpha"},
    "drift": {"kind": "drift_kind", "profile": "drift_profile", "scale": "drift_scale",
              "input_mode": "drift_input_mode", "output_mode": "drift_output_mode",
              "beta": "drift_beta", "constant": "drift_constant"},
    "run": {"seed": "seed", "t_end": "t_end", "dt": "dt", "samples": "samples",
            "moment": "moment", "store_every": "store_every", "output_dir": "output_dir",
            "window_override": "window_override", "x0": "x0"},
    "trace": {"cutoffs": "trace_cutoffs"},
    "averaging": {"t_exp_min": "avg_t_exp_min", "t_exp_max": "avg_t_exp_max",
                  "h1": "avg_h1", "h2": "avg_h2", "slope_slack": "avg_slope_slack",
                  "ratio_bound": "avg_ratio_bound"},
    "stability": {"eps": "stab_eps", "direction": "stab_direction",
                  "ratio_spread": "stab_ratio_spread", "slope_target": "stab_slope_target",
                  "slope_tol": "stab_slope_tol"},
    "picard": {"iterations": "pic_iterations", "t_prime": "pic_t_prime",
               "ratio_bound": "pic_ratio_bound", "check_from": "pic_check_from",
               "check_to": "pic_check_to", "pilot_paths": "pic_pilot_paths"},
    "sewing": {"levels": "sew_levels", "anchor": "sew_anchor", "t_end": "sew_t_end",
               "psi": "sew_psi", "phi": "sew_phi", "inner_samples": "sew_inner",
               "cond_samples": "sew_cond", "defect_target": "sew_defect_target",
               "cond_target": "sew_cond_target", "n_boot": "sew_boot"},
    "lasry-lions": {"lambdas": "ll_lambdas", "function": "ll_function",
                    "n_points": "ll_points", "n_pairs": "ll_pairs", "scale": "ll_scale",
                    "oracle": "ll_oracle"},
    "dpf": {"cutoffs": "dpf_cutoffs", "growth_band": "dpf_band",
            "cauchy_tol": "dpf_cauchy_tol", "n_pairs": "dpf_pairs"},
    "simulate": {"dump_paths_max": "sim_dump_max"},
}

_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


class ConfigError(Exception):
    pass


def _coerce(field_name: str, raw: str):
    kind = _FIELD_TYPES[field_name]
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if raw.lower() in ("true", "yes", "1"):
                return True
            if raw.lower() in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value {raw!r} for key {field_name}") from exc


def load_config(path: str | Path) -> RunConfig:
    parser = configparser.ConfigParser()
    try:
        with open(path, "r", encoding="utf8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    cfg = RunConfig()
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            setattr(cfg, _SECTIONS[section][key], _coerce(_SECTIONS[section][key], raw))
    return cfg


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(cfg: RunConfig) -> str:
    """Canonical INI serialization; load(dump(cfg)) == cfg."""
    lines = []
    for section, mapping in _SECTIONS.items():
        lines.append(f"[{section}]")
        for key, field_name in mapping.items():
            lines.append(f"{key} = {_format_value(getattr(cfg, field_name))}")
        lines.append("")
    return "\n".join(lines)


def parse_sparse_vector(text: str, n_modes: int) -> np.ndarray:
    """'mode:value,mode:value' with 1-based mode indices -> dense vector."""
    out = np.zeros(n_modes)
    text = text.strip()
    if not text:
        return out
    for item in text.split(","):
        mode, _, value = item.partition(":")
        try:
            idx, val = int(mode), float(value)
        except ValueError as exc:
            raise ConfigError(f"bad vector entry {item!r}") from exc
        if not 1 <= idx <= n_modes:
            raise ConfigError(f"mode {idx} outside 1..{n_modes}")
        out[idx - 1] = val
    return out


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad float list {text!r}") from exc


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad int list {text!r}") from exc


def build_basis_from(cfg: RunConfig):
    custom = None
    if cfg.boundary == "custom":
        if not cfg.custom_eigenvalues:
            raise ConfigError("custom boundary requires custom_eigenvalues file")
        try:
            custom = np.loadtxt(cfg.custom_eigenvalues, ndmin=1)
        except OSError as exc:
            raise ConfigError(f"cannot read eigenvalue file: {exc}") from exc
    try:
        return build_basis(cfg.dimension, cfg.boundary, cfg.modes, custom)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_drift_from(cfg: RunConfig, n_modes: int):
    kind = cfg.drift_kind
    if kind == "zero":
        return ZeroDrift(n_modes)
    if kind == "constant":
        return ConstantDrift(parse_sparse_vector(cfg.drift_constant, n_modes))
    if kind == "rank-one":
        if cfg.drift_profile == "holder":
            profile = holder_profile(cfg.alpha)
        elif cfg.drift_profile == "tanh":
            profile = tanh_profile()
        else:
            raise ConfigError(f"unknown drift profile {cfg.drift_profile!r}")
        v = np.zeros(n_modes)
        u = np.zeros(n_modes)
        if not 1 <= cfg.drift_input_mode <= n_modes or not 1 <= cfg.drift_output_mode <= n_modes:
            raise ConfigError("drift modes outside the basis")
        v[cfg.drift_input_mode - 1] = 1.0
        u[cfg.drift_output_mode - 1] = 1.0
        return rank_one_drift(profile, v, u, scale=cfg.drift_scale)
    if kind == "diagonal":
        try:
            return diagonal_holder_drift(n_modes, cfg.drift_beta, cfg.alpha)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown drift kind {kind!r}")


# ---------------------------------------------------------------------------
# experiment scaffolding


@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool
    observed: float | str | None = None
    threshold: float | str | None = None
    comparator: str = ""


@dataclass(frozen=True)
class Table:
    name: str
    header: tuple[str, ...]
    rows: list[tuple]


@dataclass(frozen=True)
class ExperimentOutput:
    tables: list[Table]
    fitted: dict
    verdicts: list[Verdict]


def _ensemble_config(cfg: RunConfig, basis, drift, **overrides) -> EnsembleConfig:
    args = dict(basis=basis, gamma=cfg.gamma, drift=drift,
                x0=parse_sparse_vector(cfg.x0, basis.n_modes),
                t_end=cfg.t_end, dt=cfg.dt, n_paths=cfg.samples, seed=cfg.seed,
                moment=cfg.moment, store_every=cfg.store_every)
    args.update(overrides)
    return EnsembleConfig(**args)


def run_basis_experiment(cfg: RunConfig) -> ExperimentOutput:
    basis = build_basis_from(cfg)
    rows = [(i + 1, float(basis.eigenvalues[i]), ",".join(map(str, basis.mode_labels[i])))
            for i in range(basis.n_modes)]
    verdicts = [
        Verdict("eigenvalues-positive", bool(basis.eigenvalues.min() > 0),
                float(basis.eigenvalues.min()), 0.0, ">"),
        Verdict("eigenvalues-sorted", bool(np.all(np.diff(basis.eigenvalues) >= 0))),
    ]
    return ExperimentOutput([Table("eigenvalues", ("index", "eigenvalue", "label"), rows)],
                            {"n_modes": basis.n_modes}, verdicts)


def run_trace_experiment(cfg: RunConfig) -> ExperimentOutput:
    basis = build_basis_from(cfg)
    cutoffs = _parse_ints(cfg.trace_cutoffs)
    report = trace_report(basis, cfg.gamma, cutoffs)
    sums = report.partial_sums
    inc = np.diff(np.concatenate([[0.0], sums]))
    rows = [(c, float(s), float(d)) for c, s, d in zip(cutoffs, sums, inc)]
    fitted = {"analytic_verdict": report.analytic_verdict}
    if len(cutoffs) >= 4:
        slope = increment_growth_exponent(cutoffs, sums)
        numeric = "converges" if slope <= -0.01 else "diverges"
        fitted["increment_slope"] = slope
    else:
        numeric = "converges" if inc[-1] < 0.25 * inc[0] else "diverges"
    fitted["numeric_verdict"] = numeric
    verdicts = [Verdict("analytic-numeric-agreement", numeric == report.analytic_verdict,
                        numeric, report.analytic_verdict, "==")]
    return ExperimentOutput([Table("trace", ("cutoff", "partial_sum", "tail_increment"), rows)],
                            fitted, verdicts)


def run_simulate_experiment(cfg: RunConfig) -> ExperimentOutput:
    basis = build_basis_from(cfg)
    drift = build_drift_from(cfg, basis.n_modes)
    ens_cfg = _ensemble_config(cfg, basis, drift)
    ens = simulate_ensemble(ens_cfg)
    m = cfg.moment

    def lm(values, j):
        norms = np.linalg.norm(values[:, j, :], axis=1)
        return float((norms**m).mean() ** (1.0 / m))

    rows = [(float(t), lm(ens.x, j), lm(ens.k, j), lm(ens.z, j))
            for j, t in enumerate(ens.times)]
    tables = [Table("summary", ("time", "x_lm", "k_lm", "z_lm"), rows)]
    if cfg.samples <= cfg.sim_dump_max:
        traj = []
        for p in range(cfg.samples):
            for j, t in enumerate(ens.times):
                for mode in range(basis.n_modes):
                    traj.append((p, float(t), mode + 1, float(ens.x[p, j, mode]),
                                 float(ens.z[p, j, mode])))
        tables.append(Table("trajectory", ("path", "time", "mode", "x", "z"), traj))
    verdicts = []
    fitted = {}
    if np.isfinite(drift.sup_norm):
        apriori = holder_seminorm_est(ens, 1.0, 0.0, cfg.t_end, float("inf"), "K")
        fitted["apriori_seminorm"] = apriori
        verdicts.append(Verdict("drift-part-apriori", apriori <= drift.sup_norm + APRIORI_TOL,
                                apriori, drift.sup_norm + APRIORI_TOL, "<="))
    if cfg.drift_kind == "zero":
        sg = np.exp(-np.outer(ens.times, basis.eigenvalues)) * ens_cfg.x0
        residual = float(np.abs(ens.x - ens.z - sg).max())
        tol = 1e-12 * (1.0 + float(np.abs(ens_cfg.x0).max()))
        verdicts.append(Verdict("free-decomposition", residual <= tol, residual, tol, "<="))
    if not verdicts:
        verdicts.append(Verdict("completed", True))
    return ExperimentOutput(tables, fitted, verdicts)


def run_stability_experiment(cfg: RunConfig) -> ExperimentOutput:
    basis = build_basis_from(cfg)
    drift = build_drift_from(cfg, basis.n_modes)
    ens_cfg = _ensemble_config(cfg, basis, drift)
    eps = _parse_floats(cfg.stab_eps)
    if not eps:
        raise ConfigError("stability needs a nonempty eps list")
    direction = parse_sparse_vector(cfg.stab_direction, basis.n_modes)
    norm = np.linalg.norm(direction)
    if norm == 0:
        raise ConfigError("stability direction must be nonzero")
    direction = direction / norm
    x0 = parse_sparse_vector(cfg.x0, basis.n_modes)
    family = stability_family(ens_cfg, x0, [x0 + e * direction for e in eps])
    rows = [(r.eps, r.sup_lm_distance, r.ratio) for r in family.reports]
    fitted = {}
    verdicts = []
    positive = [r for r in family.reports if r.eps > 0]
    if positive:
        ratios = np.array([r.ratio for r in positive])
        spread = float(ratios.max() / ratios.min()) if ratios.min() > 0 else float("inf")
        fitted["ratio_spread"] = spread
        verdicts.append(Verdict("ratio-spread", spread <= cfg.stab_ratio_spread,
                                spread, cfg.stab_ratio_spread, "<="))
        if len(positive) >= 3:
            fit = loglog_fit([r.eps for r in positive],
                             [r.sup_lm_distance for r in positive])
            fitted["slope"] = fit.slope
            ok = abs(fit.slope - cfg.stab_slope_target) <= cfg.stab_slope_tol
            verdicts.append(Verdict("slope", ok, fit.slope,
                                    f"{cfg.stab_slope_target}+-{cfg.stab_slope_tol}", "in"))
    for r in family.reports:
        if r.eps == 0:
            verdicts.append(Verdict("identical-start-zero-distance",
                                    r.sup_lm_distance == 0.0, r.sup_lm_distance, 0.0, "=="))
    return ExperimentOutput([Table("stability", ("eps", "sup_lm_distance", "ratio"), rows)],
                            fitted, verdicts)


def run_picard_experiment(cfg: RunConfig) -> ExperimentOutput:
    basis = build_basis_from(cfg)
    drift = build_drift_from(cfg, basis.n_modes)
    ens_cfg = _ensemble_config(cfg, basis, drift)
    if cfg.pic_t_prime == "auto":
        t_prime = auto_picard_horizon(ens_cfg, cfg.pic_pilot_paths)
    else:
        t_prime = float(cfg.pic_t_prime)
    res = picard_sequence(ens_cfg, cfg.pic_iterations, t_prime)
    rows = [(k, float(res.distances[k]),
             float(res.ratios[k]) if np.isfinite(res.ratios[k]) else "nan")
            for k in range(cfg.pic_iterations)]
    lo, hi = cfg.pic_check_from, min(cfg.pic_check_to, cfg.pic_iterations - 1)
    window = res.ratios[lo:hi + 1]
    worst = float(np.nanmax(window)) if window.size else 0.0
    verdicts = [Verdict("contraction", worst <= cfg.pic_ratio_bound,
                        worst, cfg.pic_ratio_bound, "<=")]
    if np.isfinite(drift.sup_norm):
        verdicts.append(Verdict("iterate-apriori",
                                res.apriori_seminorm <= drift.sup_norm + APRIORI_TOL,
                                res.apriori_seminorm, drift.sup_norm + APRIORI_TOL, "<="))
    fitted = {"t_prime": t_prime, "max_checked_ratio": worst}
    return ExperimentOutput([Table("picard", ("iteration", "distance", "ratio"), rows)],
                            fitted, verdicts)


def run_averaging_experiment(cfg: RunConfig) -> ExperimentOutput:
    basis = build_basis_from(cfg)
    drift = build_drift_from(cfg, basis.n_modes)
    h1 = parse_sparse_vector(cfg.avg_h1, basis.n_modes)
    h2 = parse_sparse_vector(cfg.avg_h2, basis.n_modes)
    sep = float(np.linalg.norm(h1 - h2))
    ts = [2.0**k for k in range(cfg.avg_t_exp_min, cfg.avg_t_exp_max + 1)]
    theory_slope = -(1.0 + cfg.gamma) * (1.0 - cfg.alpha) / 2.0
    rows = []
    estimates, stderrs, ratios = [], [], []
    for t in ts:
        est = mc_average_2pt(drift, basis, cfg.gamma, t, h1, h2, cfg.samples, cfg.seed)
        ratio = est.estimate / (t**theory_slope * sep)
        rows.append((t, est.estimate, est.stderr, ratio))
        estimates.append(est.estimate)
        stderrs.append(est.stderr)
        ratios.append(ratio)
    fit = loglog_fit(ts, estimates, stderrs)
    spread = float(max(ratios) / min(ratios))
    threshold = theory_slope - cfg.avg_slope_slack
    fitted = {"slope": fit.slope, "intercept": fit.intercept,
              "theory_slope": theory_slope, "ratio_spread": spread}
    verdicts = [
        Verdict("slope", fit.slope >= threshold, fit.slope, threshold, ">="),
        Verdict("ratio-spread", spread <= cfg.avg_ratio_bound,
                spread, cfg.avg_ratio_bound, "<="),
    ]
    return ExperimentOutput([Table("averaging", ("t", "estimate", "stderr", "bound_ratio"),
                                   rows)], fitted, verdicts)


def run_sewing_experiment(cfg: RunConfig) -> ExperimentOutput:
    basis = build_basis_from(cfg)
    drift = build_drift_from(cfg, basis.n_modes)
    levels = _parse_floats(cfg.sew_levels)
    if cfg.sew_anchor + max(levels) > cfg.sew_t_end:
        raise ConfigError("sewing t_end must cover anchor + max level")
    psi = ConstantPath(parse_sparse_vector(cfg.sew_psi, basis.n_modes))
    phi = ConstantPath(parse_sparse_vector(cfg.sew_phi, basis.n_modes))
    germ = comparison_germ(drift, psi, phi, cfg.sew_t_end, basis, cfg.gamma,
                           cfg.sew_inner, cfg.seed)
    report = rate_probe(germ, basis, cfg.gamma, cfg.moment, levels, cfg.samples,
                        cfg.seed, anchor=cfg.sew_anchor, cond_samples=cfg.sew_cond,
                        n_boot=cfg.sew_boot)
    d_target = (1.0 - (cfg.gamma + 1.0) * (1.0 - cfg.alpha) / 2.0
                if cfg.sew_defect_target == "auto" else float(cfg.sew_defect_target))
    c_target = (2.0 - (1.0 + cfg.gamma) * (2.0 - cfg.alpha) / 2.0
                if cfg.sew_cond_target == "auto" else float(cfg.sew_cond_target))
    rows = [(float(report.levels[i]), float(report.defect_norms[i]),
             float(report.defect_stderr[i]), float(report.cond_norms[i]),
             float(report.cond_stderr[i])) for i in range(report.levels.size)]
    d_hw = (report.defect_slope_ci[1] - report.defect_slope_ci[0]) / 2.0
    c_hw = (report.cond_slope_ci[1] - report.cond_slope_ci[0]) / 2.0
    fitted = {"defect_slope": report.defect_slope,
              "defect_slope_ci": list(report.defect_slope_ci),
              "cond_slope": report.cond_slope,
              "cond_slope_ci": list(report.cond_slope_ci),
              "defect_excess": report.defect_excess,
              "cond_excess": report.cond_excess,
              "defect_target": d_target, "cond_target": c_target}
    inf_ok = not np.isfinite(report.defect_slope)
    verdicts = [
        Verdict("defect-slope", inf_ok or report.defect_slope >= d_target - d_hw,
                report.defect_slope, d_target, ">=target-ci"),
        Verdict("defect-above-half", inf_ok or report.defect_slope_ci[0] > 0.5,
                report.defect_slope_ci[0], 0.5, ">"),
        Verdict("cond-slope", inf_ok or report.cond_slope >= c_target - c_hw,
                report.cond_slope, c_target, ">=target-ci"),
        Verdict("cond-above-one", inf_ok or report.cond_slope_ci[0] > 1.0,
                report.cond_slope_ci[0], 1.0, ">"),
    ]
    return ExperimentOutput([Table("sewing",
                                   ("level", "defect_lm", "defect_stderr",
                                    "cond_lm", "cond_stderr"), rows)], fitted, verdicts)


def run_lasry_lions_experiment(cfg: RunConfig) -> ExperimentOutput:
    if cfg.ll_function == "holder":
        profile = holder_profile(cfg.alpha)
    else:
        raise ConfigError(f"unknown scalar function {cfg.ll_function!r}")
    g = ScalarHolderFn(fn=lambda x: profile(x[..., 0]), alpha=profile.alpha,
                       holder_seminorm=profile.seminorm, sup_norm=profile.sup_norm,
                       dim=1, features=((np.array([1.0]), profile.kinks),),
                       name=profile.name)
    rng = substream(cfg.seed, "lasry-lions-points")
    points = [np.array([v]) for v in cfg.ll_scale * rng.standard_normal(cfg.ll_points)]
    points += [np.array([0.0]), np.array([1.0])]
    pair_rng = substream(cfg.seed, "lasry-lions-pairs")
    pairs = []
    while len(pairs) < cfg.ll_pairs:
        x, y = cfg.ll_scale * pair_rng.standard_normal(2)
        if abs(x - y) > 1e-6:
            pairs.append((np.array([x]), np.array([y])))
    rows = []
    fitted = {}
    verdicts = []
    for lam in _parse_floats(cfg.ll_lambdas):
        bound = gap_bound(g.alpha, g.holder_seminorm, lam) if g.alpha < 1 else float("inf")
        worst_gap = 0.0
        for x in points:
            val = inf_convolution(g, lam, x)
            gap = float(g(x)) - val
            worst_gap = max(worst_gap, gap)
            rows.append((float(x[0]), lam, float(g(x)), val, gap, bound))
        ratio = check_lipschitz(g, lam, pairs)
        fitted[f"max_gap_lambda_{lam}"] = worst_gap
        fitted[f"max_lipschitz_ratio_lambda_{lam}"] = ratio
        verdicts.append(Verdict(f"gap-bound-lambda-{lam}", worst_gap <= bound,
                                worst_gap, bound, "<="))
        verdicts.append(Verdict(f"lipschitz-lambda-{lam}",
                                ratio <= (1.0 + 1e-9) / lam, ratio,
                                (1.0 + 1e-9) / lam, "<="))
        if cfg.ll_oracle and lam == 4.0 and cfg.alpha == 0.5:
            val1 = inf_convolution(g, lam, np.array([1.0]))
            verdicts.append(Verdict("oracle-quarter", abs(val1 - 0.25) <= 1e-6,
                                    val1, 0.25, "=="))
    return ExperimentOutput([Table("lasry_lions",
                                   ("x", "lambda", "g", "g_lambda", "gap", "gap_bound"),
                                   rows)], fitted, verdicts)


def run_dpf_experiment(cfg: RunConfig) -> ExperimentOutput:
    basis = build_basis_from(cfg)
    drift = build_drift_from(cfg, basis.n_modes)
    cutoffs = _parse_ints(cfg.dpf_cutoffs)
    sums = dpf_partial_sums(drift, basis, cutoffs)
    inc = np.diff(np.concatenate([[0.0], sums]))
    rows = [(c, float(s), float(d)) for c, s, d in zip(cutoffs, sums, inc)]
    fitted = {}
    verdicts = []
    if cfg.drift_kind == "diagonal":
        slope = increment_growth_exponent(cutoffs, sums)
        target = 1.0 - 2.0 / cfg.dimension - 2.0 * cfg.drift_beta
        fitted.update({"growth_exponent": slope, "growth_target": target})
        verdicts.append(Verdict("growth-exponent", abs(slope - target) <= cfg.dpf_band,
                                slope, f"{target}+-{cfg.dpf_band}", "in"))
        verdicts.append(Verdict("diverging-sums", bool(sums[-1] > 1.5 * sums[0]),
                                float(sums[-1] / sums[0]), 1.5, ">"))
    else:
        tail = float(inc[-1])
        fitted["tail_increment"] = tail
        verdicts.append(Verdict("cauchy-tail", tail < cfg.dpf_cauchy_tol,
                                tail, cfg.dpf_cauchy_tol, "<"))
    ratio = holder_pair_check(drift, cfg.dpf_pairs, cfg.seed)
    fitted["max_holder_ratio"] = ratio
    verdicts.append(Verdict("certified-holder-metadata", ratio <= drift.holder_seminorm,
                            ratio, drift.holder_seminorm, "<="))
    return ExperimentOutput([Table("dpf", ("cutoff", "partial_sum", "tail_increment"),
                                   rows)], fitted, verdicts)


EXPERIMENTS = {
    "basis": run_basis_experiment,
    "trace-check": run_trace_experiment,
    "simulate": run_simulate_experiment,
    "stability": run_stability_experiment,
    "picard": run_picard_experiment,
    "averaging": run_averaging_experiment,
    "sewing-rates": run_sewing_experiment,
    "lasry-lions": run_lasry_lions_experiment,
    "dpf-check": run_dpf_experiment,
}


# ---------------------------------------------------------------------------
# run directory and serialization


def _fmt_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(path: Path, table: Table) -> None:
    with open(path, "w", newline="", encoding="utf8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(table.header)
        for row in table.rows:
            writer.writerow([_fmt_cell(v) for v in row])


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_json_safe(v) for v in obj.tolist()]
    return obj


def _summary_schema() -> dict:
    text = resources.files("regnoise").joinpath("schemas/summary.schema.json").read_text("utf8")
    return json.loads(text)


def _unique_run_dir(root: Path, experiment: str) -> Path:
    stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%S")
    base = root / f"{experiment}-{stamp}"
    candidate, n = base, 1
    while candidate.exists():
        n += 1
        candidate = Path(f"{base}-{n}")
    candidate.mkdir(parents=True)
    return candidate


def run(cfg: RunConfig) -> tuple[int, Path | None]:
    """Execute one experiment; returns (exit code, run directory)."""
    if cfg.experiment not in EXPERIMENTS:
        print(f"unknown experiment {cfg.experiment!r}", file=sys.stderr)
        return 2, None
    window = gamma_window(cfg.alpha, cfg.dimension, cfg.gamma)
    if not window.admissible and not cfg.window_override:
        print(f"gamma={cfg.gamma} outside the admissible window "
              f"({window.lower}, {window.upper}) for alpha={cfg.alpha}, "
              f"d={cfg.dimension}; pass --override-window to force", file=sys.stderr)
        return 3, None
    started = time.monotonic()
    try:
        output = EXPERIMENTS[cfg.experiment](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2, None
    except (FloatingPointError, OverflowError, ZeroDivisionError,
            np.linalg.LinAlgError, ValueError, KeyError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4, None
    runtime = time.monotonic() - started
    run_dir = _unique_run_dir(Path(cfg.output_dir), cfg.experiment)
    (run_dir / "config.ini").write_text(dump_config(cfg), encoding="utf8")
    csv_files = []
    for table in output.tables:
        name = f"{table.name}.csv"
        write_csv(run_dir / name, table)
        csv_files.append(name)
    passed = bool(all(v.passed for v in output.verdicts))
    config_dict = {section: {key: _format_value(getattr(cfg, field_name))
                             for key, field_name in mapping.items()}
                   for section, mapping in _SECTIONS.items()}
    summary = {
        "experiment": cfg.experiment,
        "version": f"regnoise-{__version__}",
        "seed": cfg.seed,
        "passed": passed,
        "admissible": bool(window.admissible),
        "window": {"lower": window.lower, "upper": window.upper,
                   "lower_open": window.lower_open, "upper_open": window.upper_open},
        "config": config_dict,
        "verdicts": [{"name": v.name, "passed": bool(v.passed),
                      "observed": _json_safe(v.observed),
                      "threshold": _json_safe(v.threshold),
                      "comparator": v.comparator} for v in output.verdicts],
        "fitted": _json_safe(output.fitted),
        "csv_files": csv_files,
        "runtime_seconds": runtime,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    jsonschema.validate(summary, _summary_schema())
    (run_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf8")
    log_lines = [f"experiment: {cfg.experiment}", f"seed: {cfg.seed}",
                 f"runtime_seconds: {runtime:.3f}",
                 f"admissible: {window.admissible}"]
    log_lines += [f"verdict {v.name}: {'PASS' if v.passed else 'FAIL'} "
                  f"(observed={v.observed} {v.comparator} {v.threshold})"
                  for v in output.verdicts]
    log_lines.append(f"overall: {'PASS' if passed else 'FAIL'}")
    (run_dir / "run.log").write_text("\n".join(log_lines) + "\n", encoding="utf8")
    return (0 if passed else 1), run_dir


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="regnoise",
        description="Monte Carlo verification experiments for semilinear "
                    "Hilbert-space SDEs with Hoelder drift")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--override-window", action="store_true")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    cfg.experiment = args.experiment
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.output_dir = args.out
    if args.override_window:
        cfg.window_override = True
    code, run_dir = run(cfg)
    if run_dir is not None:
        print(run_dir)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
