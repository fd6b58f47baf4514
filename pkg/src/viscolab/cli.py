"""Experiment runner: declarative configs, subcommands, reproducible output.

Configuration is a flat INI file with sections [operator], [domain],
[problem], [barrier], [numerics], [outputs] plus optional subcommand
sections ([exponents], [sweep], [compare], [whole_space]).  All physical
fields come from the named closed-form registry, so a config hashes and
replays byte-identically.

Exit codes: 0 all checks passed, 2 configuration error, 3 numerical
abort, 4 certification or comparison failure, 5 regularity bound failure.

Outputs per run directory:
  solution.csv    rows x0,...,x{N-1},t,u,V,W over recorded slices
  regularity.csv  axis,fitted_exponent,predicted_exponent,
                  fitted_constant,residual_of_fit,pass
  manifest.txt    flat key=value echo of the config, run constants,
                  certificates and a content hash of the CSVs
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import subprocess
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import barriers, certify, domain as dom, fields, operators as ops
from . import regularity, scheme as sch

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_CERTIFY = 4
EXIT_REGULARITY = 5


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    operator: dict
    domain: dict
    problem: dict
    barrier: dict
    numerics: dict
    outputs: dict
    extra: dict = field(default_factory=dict)
    raw_text: str = ""

    def echo(self) -> dict:
        flat = {}
        for section_name in ("operator", "domain", "problem", "barrier",
                             "numerics", "outputs"):
            for k, v in sorted(getattr(self, section_name).items()):
                flat[f"{section_name}.{k}"] = v
        for sec, block in sorted(self.extra.items()):
            for k, v in sorted(block.items()):
                flat[f"{sec}.{k}"] = v
        return flat


def parse_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.optionxform = str  # ellipticity keys a and A must stay distinct
    try:
        text = path.read_text()
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc
    known = ("operator", "domain", "problem", "barrier", "numerics",
             "outputs")
    blocks = {name: dict(parser[name]) if parser.has_section(name) else {}
              for name in known}
    extra = {s: dict(parser[s]) for s in parser.sections() if s not in known}
    return RunConfig(*[blocks[n] for n in known], extra=extra, raw_text=text)


def _getfloat(block: dict, key: str, default=None) -> float:
    if key not in block:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return float(default)
    try:
        return float(block[key])
    except ValueError as exc:
        raise ConfigError(f"bad float for {key!r}: {block[key]!r}") from exc


def build_operator(block: dict) -> ops.OperatorSpec:
    try:
        return ops.OperatorSpec(
            kind=block.get("kind", "trace_with_power"),
            alpha=_getfloat(block, "alpha", 0.0),
            a=_getfloat(block, "a", 1.0),
            A=_getfloat(block, "A", 1.0),
            x_modulus_scale=_getfloat(block, "x_modulus_scale", 0.0))
    except ValueError as exc:
        raise ConfigError(f"operator block: {exc}") from exc


def build_domain(block: dict) -> dom.DomainSpec:
    kind = block.get("kind", "interval")
    try:
        if kind == "interval":
            return dom.make_domain("interval",
                                   x0=_getfloat(block, "x0", 0.0),
                                   x1=_getfloat(block, "x1", 1.0))
        if kind == "box":
            lo = [float(v) for v in block.get("lo", "0,0").split(",")]
            hi = [float(v) for v in block.get("hi", "1,1").split(",")]
            return dom.make_domain("box", lo=lo, hi=hi)
        if kind == "ball":
            center = [float(v)
                      for v in block.get("center", "0,0").split(",")]
            return dom.make_domain("ball", center=center,
                                   radius=_getfloat(block, "radius", 1.0))
        if kind == "l_shape":
            return dom.make_domain("l_shape",
                                   size=_getfloat(block, "size", 1.0))
    except ValueError as exc:
        raise ConfigError(f"domain block: {exc}") from exc
    raise ConfigError(f"unknown domain kind {kind!r}")


def _field_params(block: dict, prefix: str) -> dict:
    plen = len(prefix) + 1
    return {k[plen:]: v for k, v in block.items()
            if k.startswith(prefix + "_")}


def build_problem(cfg: RunConfig) -> sch.ProblemSpec:
    operator = build_operator(cfg.operator)
    domain = build_domain(cfg.domain)
    pb = cfg.problem
    try:
        psi = fields.make_scalar_field(pb.get("psi", "zero"), domain.dim,
                                       **_field_params(pb, "psi"))
        src = fields.make_scalar_field(pb.get("f", "zero"), domain.dim,
                                       **_field_params(pb, "f"))
        drift = fields.make_vector_field(pb.get("h", "zero"), domain.dim,
                                         **_field_params(pb, "h"))
        eps = cfg.numerics.get("eps", "auto")
        eps_val = None if eps in ("auto", "", None) else float(eps)
        return sch.ProblemSpec(
            operator=operator, domain=domain,
            T=_getfloat(pb, "t", pb.get("T", 0.1)),
            h=drift, f=src, psi=psi, eps=eps_val,
            barrier_gamma=_getfloat(cfg.barrier, "gamma_b", 0.5),
            barrier_c=_getfloat(cfg.barrier, "c_bar", 4.0))
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"problem block: {exc}") from exc


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_solution_csv(path: Path, field_out: sch.SpaceTimeField,
                       V: np.ndarray | None, W: np.ndarray | None) -> None:
    grid = field_out.grid
    dim = grid.domain.dim
    mask = grid.inside_mask
    pts = grid.points[mask]
    header = ",".join([f"x{k}" for k in range(dim)] + ["t", "u", "V", "W"])
    lines = [header]
    for k, t in enumerate(field_out.times):
        uvals = field_out.values[k][mask]
        vvals = V[k] if V is not None else np.full(len(pts), np.nan)
        wvals = W[k] if W is not None else np.full(len(pts), np.nan)
        for j in range(len(pts)):
            coords = [_fmt(float(c)) for c in pts[j]]
            lines.append(",".join(coords + [_fmt(float(t)),
                                            _fmt(float(uvals[j])),
                                            _fmt(float(vvals[j])),
                                            _fmt(float(wvals[j]))]))
    path.write_text("\n".join(lines) + "\n")


def write_regularity_csv(path: Path,
                         rows: list[regularity.HolderEstimate]) -> None:
    lines = ["axis,fitted_exponent,predicted_exponent,fitted_constant,"
             "residual_of_fit,pass"]
    for r in rows:
        lines.append(",".join([
            r.axis, _fmt(r.fitted_exponent), _fmt(r.predicted_exponent),
            _fmt(r.fitted_constant), _fmt(r.residual_of_fit),
            str(r.passed).lower()]))
    path.write_text("\n".join(lines) + "\n")


def _git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=5,
                             cwd=Path(__file__).parent)
        return out.stdout.strip() or "unknown"
    except Exception:
        return "unknown"


def write_manifest(path: Path, cfg: RunConfig, entries: dict,
                   csv_paths: list[Path], wall_time: float) -> None:
    h = hashlib.sha256()
    for p in sorted(csv_paths):
        if p.exists():
            h.update(p.read_bytes())
    lines = []
    for k, v in cfg.echo().items():
        lines.append(f"config.{k}={v}")
    for k, v in sorted(entries.items()):
        lines.append(f"{k}={_fmt(v) if isinstance(v, float) else v}")
    lines.append(f"run.content_hash={h.hexdigest()}")
    lines.append(f"run.build={_git_describe()}")
    lines.append(f"run.wall_time_s={wall_time:.3f}")
    path.write_text("\n".join(lines) + "\n")


def content_hash(out_dir: Path) -> str:
    for line in (out_dir / "manifest.txt").read_text().splitlines():
        if line.startswith("run.content_hash="):
            return line.split("=", 1)[1]
    raise ValueError("manifest has no content hash")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_check_operators(cfg: RunConfig, out_dir: Path, seed: int) -> int:
    t0 = time.perf_counter()
    spec = build_operator(cfg.operator)
    n = int(float(cfg.numerics.get("property_samples", 2000)))
    reports = [
        ops.check_homogeneity(spec, n, seed),
        ops.check_ellipticity_sandwich(spec, n, seed + 1),
        ops.check_degenerate_monotonicity(spec, n, seed + 2),
        ops.check_structure(spec, "H4", n, seed + 3),
        ops.check_structure(spec, "H6", n, seed + 4),
    ]
    lines = ["hypothesis,samples_tested,max_violation,constant_found,pass"]
    ok = True
    for r in reports:
        ok &= r.passed
        lines.append(",".join([r.hypothesis, str(r.samples_tested),
                               _fmt(r.max_violation),
                               _fmt(r.constant_found)
                               if r.constant_found is not None else "",
                               str(r.passed).lower()]))
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "properties.csv"
    csv_path.write_text("\n".join(lines) + "\n")
    write_manifest(out_dir / "manifest.txt", cfg,
                   {"operator": spec.label(), "pass": str(ok).lower()},
                   [csv_path], time.perf_counter() - t0)
    return EXIT_OK if ok else EXIT_CERTIFY


def _exponents_for(problem: sch.ProblemSpec) -> barriers.ExponentSet:
    gamma_f = problem.f.gamma_t if problem.f.c_t > 0 else 1.0
    return barriers.exponents(problem.operator.alpha, problem.psi.gamma,
                              gamma_f, problem.domain, problem.h.bound,
                              problem.operator.ellipticity()[1])


def _envelope_tol(dx: float) -> float:
    return 1e-9


def run_solve_pipeline(cfg: RunConfig, out_dir: Path, seed: int) -> int:
    """solve + certify + envelope sandwich + regularity on one config."""
    t0 = time.perf_counter()
    problem = build_problem(cfg)
    dx = _getfloat(cfg.numerics, "dx", 1.0 / 32)
    record_every = int(float(cfg.numerics.get("record_every", 1)))
    use_envelope = cfg.barrier.get("envelope", "on").lower() != "off"
    out_dir.mkdir(parents=True, exist_ok=True)
    entries: dict = {}

    grid = dom.build_grid(problem.domain, dx, problem.T)
    for msg in problem.validate(grid):
        entries.setdefault("validation.warnings", "")
        entries["validation.warnings"] += msg + "; "

    try:
        field_out = sch.solve(problem, dx, record_every=record_every)
    except sch.NumericalAbort as exc:
        entries["abort"] = str(exc)
        write_manifest(out_dir / "manifest.txt", cfg, entries, [],
                       time.perf_counter() - t0)
        return EXIT_NUMERIC

    ok = True
    # scheme output must certify both ways at solver tolerance
    for kind in ("sub", "super"):
        cert = certify.certify(field_out, problem, kind, tol=1e-9)
        entries[f"certificate.{kind}.worst_residual"] = cert.worst_residual
        entries[f"certificate.{kind}.pass"] = str(cert.passed).lower()
        entries[f"certificate.{kind}.degenerate_nodes"] = \
            cert.zero_gradient_nodes_tested
        entries[f"certificate.{kind}.note"] = cert.notes
        ok &= cert.passed

    V = W = None
    if use_envelope:
        exps = _exponents_for(problem)
        env = barriers.parabolic_envelope(problem, exps)
        stat = env.certify_stationary(grid.points[grid.inside_mask],
                                      field_out.times)
        entries["envelope.stationary_super_margin"] = stat["super_margin"]
        entries["envelope.stationary_sub_margin"] = stat["sub_margin"]
        entries["envelope.certified"] = str(stat["certified"]).lower()
        pts = grid.points.reshape(-1, problem.domain.dim)
        Wall = env.upper(pts, field_out.times)
        Vall = env.lower(pts, field_out.times)
        mask = grid.inside_mask.ravel()
        uflat = field_out.values.reshape(len(field_out.times), -1)
        sandwich_hi = float(np.max((uflat - Wall)[:, mask]))
        sandwich_lo = float(np.max((Vall - uflat)[:, mask]))
        entries["envelope.max_u_minus_W"] = sandwich_hi
        entries["envelope.max_V_minus_u"] = sandwich_lo
        sandwich_ok = sandwich_hi <= 0.0 and sandwich_lo <= 0.0
        entries["envelope.sandwich_pass"] = str(sandwich_ok).lower()
        ok &= sandwich_ok and stat["certified"]
        V = Vall[:, mask]
        W = Wall[:, mask]
    if not ok:
        status = EXIT_CERTIFY
    else:
        status = EXIT_OK

    rows = []
    exps = _exponents_for(problem)
    sp = regularity.holder_fit(field_out, "space", "interior",
                               predicted=problem.psi.gamma, seed=seed)
    tm = regularity.holder_fit(field_out, "time", "interior",
                               predicted=exps.gamma_star, seed=seed + 1)
    rows += [sp, tm]
    try:
        rows.append(regularity.boundary_rate(field_out, problem, exps))
    except ValueError:
        pass
    reg_ok = all(r.passed for r in rows)
    entries["regularity.pass"] = str(reg_ok).lower()
    if status == EXIT_OK and not reg_ok:
        status = EXIT_REGULARITY

    audit = sch.monotonicity_probe(field_out, problem,
                                   n_nodes=int(float(
                                       cfg.numerics.get("audit_nodes", 200))),
                                   seed=seed)
    entries["scheme.monotonicity_probe_min"] = audit
    for k, v in field_out.meta.items():
        if k != "trusted_mask":
            entries[f"run.{k}"] = v

    sol_path = out_dir / "solution.csv"
    reg_path = out_dir / "regularity.csv"
    write_solution_csv(sol_path, field_out, V, W)
    write_regularity_csv(reg_path, rows)
    write_manifest(out_dir / "manifest.txt", cfg, entries,
                   [sol_path, reg_path], time.perf_counter() - t0)
    return status


def cmd_solve_whole_space(cfg: RunConfig, out_dir: Path, seed: int) -> int:
    t0 = time.perf_counter()
    problem = build_problem(cfg)
    dx = _getfloat(cfg.numerics, "dx", 1.0 / 16)
    ws = cfg.extra.get("whole_space", {})
    R = float(ws.get("box_half_width", 2.0))
    record_every = int(float(cfg.numerics.get("record_every", 1)))
    out_dir.mkdir(parents=True, exist_ok=True)
    entries: dict = {}
    try:
        field_out = sch.solve_whole_space(problem, R, dx,
                                          record_every=record_every)
    except sch.NumericalAbort as exc:
        entries["abort"] = str(exc)
        write_manifest(out_dir / "manifest.txt", cfg, entries, [],
                       time.perf_counter() - t0)
        return EXIT_NUMERIC
    for k, v in field_out.meta.items():
        if k != "trusted_mask":
            entries[f"run.{k}"] = v
    trusted = field_out.meta["trusted_mask"]
    entries["trusted.max_abs_u"] = float(
        np.max(np.abs(field_out.values[:, trusted])))
    sol_path = out_dir / "solution.csv"
    write_solution_csv(sol_path, field_out, None, None)
    write_manifest(out_dir / "manifest.txt", cfg, entries, [sol_path],
                   time.perf_counter() - t0)
    return EXIT_OK


def cmd_exponents(cfg: RunConfig, out_dir: Path) -> int:
    t0 = time.perf_counter()
    block = cfg.extra.get("exponents", {})

    def _list(key: str, default: str) -> list[float]:
        return [float(v) for v in block.get(key, default).split(",")]

    rows = regularity.exponent_table(_list("alpha_list", "0"),
                                     _list("gamma_list", "1"),
                                     _list("gamma_f_list", "1"))
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["alpha,gamma,gamma_f,q1,q,gamma_star,attain"]
    for r in rows:
        lines.append(",".join(_fmt(r[k]) for k in
                              ("alpha", "gamma", "gamma_f", "q1", "q",
                               "gamma_star", "attain")))
    path = out_dir / "exponents.csv"
    path.write_text("\n".join(lines) + "\n")
    write_manifest(out_dir / "manifest.txt", cfg, {"rows": len(rows)},
                   [path], time.perf_counter() - t0)
    return EXIT_OK


def cmd_barriers(cfg: RunConfig, out_dir: Path) -> int:
    t0 = time.perf_counter()
    problem = build_problem(cfg)
    dx = _getfloat(cfg.numerics, "dx", 1.0 / 32)
    grid = dom.build_grid(problem.domain, dx, problem.T)
    exps = _exponents_for(problem)
    env = barriers.parabolic_envelope(problem, exps)
    times = np.linspace(0.0, problem.T, 9)
    pts = grid.points[grid.inside_mask]
    W = env.upper(pts, times)
    V = env.lower(pts, times)
    stat = env.certify_stationary(pts, times)
    out_dir.mkdir(parents=True, exist_ok=True)
    dim = problem.domain.dim
    lines = [",".join([f"x{k}" for k in range(dim)] + ["t", "V", "W"])]
    for k, t in enumerate(times):
        for j in range(len(pts)):
            coords = [_fmt(float(c)) for c in pts[j]]
            lines.append(",".join(coords + [_fmt(float(t)),
                                            _fmt(float(V[k, j])),
                                            _fmt(float(W[k, j]))]))
    path = out_dir / "barrier.csv"
    path.write_text("\n".join(lines) + "\n")
    ordered = bool(np.all(V <= W + 1e-12))
    entries = {"envelope.V_le_W": str(ordered).lower(),
               "envelope.stationary_super_margin": stat["super_margin"],
               "envelope.stationary_sub_margin": stat["sub_margin"],
               "envelope.certified": str(stat["certified"]).lower()}
    for name, val in (("q1", exps.q1), ("q", exps.q), ("cq", exps.cq),
                      ("gamma_star", exps.gamma_star),
                      ("attain", exps.attain), ("k2", exps.k2)):
        entries[f"exponents.{name}"] = val
    write_manifest(out_dir / "manifest.txt", cfg, entries, [path],
                   time.perf_counter() - t0)
    return EXIT_OK if (ordered and stat["certified"]) else EXIT_CERTIFY


def cmd_perron(cfg: RunConfig, out_dir: Path, seed: int) -> int:
    t0 = time.perf_counter()
    problem = build_problem(cfg)
    dx = _getfloat(cfg.numerics, "dx", 1.0 / 32)
    exps = _exponents_for(problem)
    env = barriers.parabolic_envelope(problem, exps)
    grid = dom.build_grid(problem.domain, dx, problem.T)
    env.certify_stationary(grid.points[grid.inside_mask],
                           np.linspace(0, problem.T, 5))
    out_dir.mkdir(parents=True, exist_ok=True)
    entries: dict = {}
    try:
        fixed = certify.perron_iterate(problem, env, dx)
    except ValueError as exc:
        entries["abort"] = str(exc)
        write_manifest(out_dir / "manifest.txt", cfg, entries, [],
                       time.perf_counter() - t0)
        return EXIT_CERTIFY
    direct = sch.solve(problem, dx)
    gap = float(np.max(np.abs(fixed.values - direct.values)
                       [:, fixed.grid.inside_mask]))
    entries["perron.sweeps_used"] = fixed.meta["sweeps_used"]
    entries["perron.gap_to_solve"] = gap
    ok = gap <= 5 * dx
    entries["perron.pass"] = str(ok).lower()
    sol_path = out_dir / "solution.csv"
    write_solution_csv(sol_path, fixed, None, None)
    write_manifest(out_dir / "manifest.txt", cfg, entries, [sol_path],
                   time.perf_counter() - t0)
    return EXIT_OK if ok else EXIT_CERTIFY


def make_comparison_pair(problem: sch.ProblemSpec, seed: int
                         ) -> tuple[sch.ProblemSpec, sch.ProblemSpec]:
    """Randomized ordered data pair (f1 <= f2, psi1 <= psi2) on one operator."""
    from dataclasses import replace
    rng = np.random.default_rng(seed)
    amps = rng.uniform(-0.4, 0.4, size=3)
    phases = rng.uniform(0, np.pi, size=3)
    psi1 = fields.make_scalar_field("trig_mix", problem.domain.dim,
                                    amps=",".join(f"{a:.6f}" for a in amps),
                                    phases=",".join(f"{p:.6f}"
                                                    for p in phases))
    lift = float(rng.uniform(0.3, 0.8))
    psi2 = fields.make_scalar_field(
        "trig_mix", problem.domain.dim,
        amps=",".join(f"{a:.6f}" for a in amps),
        phases=",".join(f"{p:.6f}" for p in phases), offset=f"{lift:.6f}")
    f1 = fields.make_scalar_field("constant", problem.domain.dim,
                                  value=float(rng.uniform(-0.5, 0.0)))
    f2 = fields.make_scalar_field(
        "constant", problem.domain.dim,
        value=f1.params["value"] + float(rng.uniform(0.1, 0.6)))
    return (replace(problem, psi=psi1, f=f1),
            replace(problem, psi=psi2, f=f2))


def run_comparison_experiment(problem: sch.ProblemSpec, dx: float,
                              n_pairs: int, seed: int) -> list[float]:
    """Max crossings u1 - u2 over seeded ordered pairs (should be <= 0)."""
    crossings = []
    for k in range(n_pairs):
        p1, p2 = make_comparison_pair(problem, seed + k)
        numerics = sch.shared_numerics([p1, p2], dx)
        u1 = sch.solve(p1, dx, numerics=numerics)
        u2 = sch.solve(p2, dx, numerics=numerics)
        rep = certify.compare(u1, u2, tol=1e-10)
        crossings.append(rep.max_crossing)
    return crossings


def cmd_compare(cfg: RunConfig, out_dir: Path, seed: int) -> int:
    t0 = time.perf_counter()
    problem = build_problem(cfg)
    block = cfg.extra.get("compare", {})
    n_pairs = int(float(block.get("n_pairs", 20)))
    dx = _getfloat(cfg.numerics, "dx", 1.0 / 32)
    crossings = run_comparison_experiment(problem, dx, n_pairs, seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["pair,max_crossing,pass"]
    ok = True
    for k, c in enumerate(crossings):
        good = c <= 1e-10
        ok &= good
        lines.append(f"{k},{_fmt(c)},{str(good).lower()}")
    path = out_dir / "comparison.csv"
    path.write_text("\n".join(lines) + "\n")
    write_manifest(out_dir / "manifest.txt", cfg,
                   {"compare.worst": max(crossings),
                    "compare.pass": str(ok).lower()},
                   [path], time.perf_counter() - t0)
    return EXIT_OK if ok else EXIT_CERTIFY


def cmd_sweep(cfg: RunConfig, out_dir: Path, seed: int, over: str) -> int:
    t0 = time.perf_counter()
    block = cfg.extra.get("sweep", {})
    axis = over or block.get("axis", "dx")
    if axis not in ("dx", "alpha", "gamma", "eps"):
        raise ConfigError(f"sweep axis must be dx/alpha/gamma/eps, got {axis}")
    values = [float(v) for v in block.get("values", "").split(",")
              if v.strip()]
    if not values:
        raise ConfigError("sweep requires [sweep] values = v1,v2,...")
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    header = ("point,{axis},status,error_vs_reference,att_fitted,att_pred,"
              "space_fitted,time_fitted,eps_change").format(axis=axis)
    reference = None
    for i, v in enumerate(values):
        sub_cfg = RunConfig(dict(cfg.operator), dict(cfg.domain),
                            dict(cfg.problem), dict(cfg.barrier),
                            dict(cfg.numerics), dict(cfg.outputs),
                            extra=dict(cfg.extra), raw_text=cfg.raw_text)
        if axis == "dx":
            sub_cfg.numerics["dx"] = str(v)
        elif axis == "alpha":
            sub_cfg.operator["alpha"] = str(v)
        elif axis == "gamma":
            sub_cfg.problem["psi_gamma"] = str(v)
        else:
            sub_cfg.numerics["eps"] = str(v)
        try:
            problem = build_problem(sub_cfg)
            dx = _getfloat(sub_cfg.numerics, "dx", 1.0 / 32)
            field_out = sch.solve(problem, dx)
            exps = _exponents_for(problem)
            att = regularity.boundary_rate(field_out, problem, exps)
            sp = regularity.holder_fit(field_out, "space", "interior",
                                       predicted=problem.psi.gamma,
                                       seed=seed)
            tm = regularity.holder_fit(field_out, "time", "interior",
                                       predicted=exps.gamma_star,
                                       seed=seed + 1)
            err = eps_change = np.nan
            if axis == "eps":
                final = field_out.values[-1][field_out.grid.inside_mask]
                if reference is not None:
                    eps_change = float(np.max(np.abs(final - reference)))
                reference = final
            rows.append(f"{i},{_fmt(v)},ok,{_fmt(err)},"
                        f"{_fmt(att.fitted_exponent)},"
                        f"{_fmt(att.predicted_exponent)},"
                        f"{_fmt(sp.fitted_exponent)},"
                        f"{_fmt(tm.fitted_exponent)},{_fmt(eps_change)}")
        except Exception as exc:  # sweep continues past failed points
            rows.append(f"{i},{_fmt(v)},failed:{type(exc).__name__},,,,,")
    path = out_dir / "sweep.csv"
    path.write_text("\n".join([header] + rows) + "\n")
    write_manifest(out_dir / "manifest.txt", cfg, {"sweep.axis": axis},
                   [path], time.perf_counter() - t0)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="viscolab",
        description="solver/verifier lab for singular parabolic equations")
    parser.add_argument("command",
                        choices=["check-operators", "exponents", "barriers",
                                 "solve", "solve-whole-space", "perron",
                                 "compare", "sweep"])
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default="out")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=0,
                        help="worker hint; results are identical for any "
                             "value")
    parser.add_argument("--over", default="",
                        help="sweep axis (dx/alpha/gamma/eps)")
    args = parser.parse_args(argv)
    out_dir = Path(args.out)
    try:
        cfg = parse_config(args.config)
        if args.command == "check-operators":
            return cmd_check_operators(cfg, out_dir, args.seed)
        if args.command == "exponents":
            return cmd_exponents(cfg, out_dir)
        if args.command == "barriers":
            return cmd_barriers(cfg, out_dir)
        if args.command == "solve":
            return run_solve_pipeline(cfg, out_dir, args.seed)
        if args.command == "solve-whole-space":
            return cmd_solve_whole_space(cfg, out_dir, args.seed)
        if args.command == "perron":
            return cmd_perron(cfg, out_dir, args.seed)
        if args.command == "compare":
            return cmd_compare(cfg, out_dir, args.seed)
        if args.command == "sweep":
            return cmd_sweep(cfg, out_dir, args.seed, args.over)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except sch.NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
