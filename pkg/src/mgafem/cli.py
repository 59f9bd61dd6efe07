"""Command-line front end: experiment configs, runs, CSV output, rate reports.

Config files are TOML with a fixed key set (unknown keys are rejected):

    [problem]   domain, regions, A, f, fvec, goals
    [adapt]     theta, c_mark, rho_irr, n_goals, degree,
                irregular_variant, initial_sort, neumann_residual
    [stop]      max_ndof | max_levels | tol
    [ablation]  mode            # ngo | afem_only | restrict_goals(k)
    [output]    csv_path, report_path

The CSV schema (one row per level) is the external contract consumed by
the plotting frontend:

    level,active_goal,n_elements,ndof,cumndof,eta,zeta_1..zeta_N,delta,
    marking,n_mark_u,n_mark_z,n_mark_uz,n_mark,solves_primal,solves_dual,
    goal_1..goal_N
"""

from __future__ import annotations

import argparse
import re
import sys
from dataclasses import dataclass, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .driver import (AdaptiveConfig, History, LevelRecord, ParameterError,
                     rate_fit, run, validate_params)
from .fem import Goal, ProblemData
from .marking import CAP_LARGEST, EMPTY
from .mesh import Mesh, Subdomain, make_initial_mesh, write_mesh

MODES = ("ngo", "afem_only")
_RESTRICT_RE = re.compile(r"^restrict_goals\((\d+)\)$")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    domain: dict
    subdomains: list[Subdomain]
    problem: ProblemData
    adapt: AdaptiveConfig
    mode: str                 # driver mode: ngo | afem_only
    restrict_goals: int | None
    csv_path: str
    report_path: str
    seed: int = 0             # reserved; not settable from config files

    def build_mesh(self) -> Mesh:
        return make_initial_mesh(self.domain, self.subdomains)

    def driver_config(self) -> AdaptiveConfig:
        """The AdaptiveConfig actually passed to the driver.

        restrict_goals(k) cycles only the first k goals; the rest are
        monitored by the driver because the problem still carries them.
        """
        if self.restrict_goals is not None:
            return replace(self.adapt, n_goals=self.restrict_goals)
        return self.adapt


def _require_keys(table: dict, allowed: dict, context: str) -> dict:
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"{context}: unknown key(s) {unknown}; "
                          f"allowed: {sorted(allowed)}")
    out = {}
    for key, (required, default) in allowed.items():
        if key in table:
            out[key] = table[key]
        elif required:
            raise ConfigError(f"{context}: missing required key {key!r}")
        else:
            out[key] = default
    return out


def _parse_domain(spec, context: str) -> dict:
    if isinstance(spec, str):
        return {"kind": spec}
    if isinstance(spec, dict):
        if "kind" not in spec:
            raise ConfigError(f"{context}: domain table needs a 'kind' entry")
        allowed = {"kind", "n0", "cells_per_unit"}
        unknown = sorted(set(spec) - allowed)
        if unknown:
            raise ConfigError(f"{context}: unknown domain key(s) {unknown}")
        return dict(spec)
    raise ConfigError(f"{context}: domain must be a string or a table")


def _parse_regions(entries, context: str) -> list[Subdomain]:
    subdomains = []
    for k, entry in enumerate(entries):
        ctx = f"{context}.regions[{k}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{ctx}: must be a table")
        fields = _require_keys(entry, {"id": (True, None), "rect": (False, None),
                                       "polygon": (False, None)}, ctx)
        rect = tuple(fields["rect"]) if fields["rect"] is not None else None
        polygon = (tuple(tuple(p) for p in fields["polygon"])
                   if fields["polygon"] is not None else None)
        try:
            subdomains.append(Subdomain(int(fields["id"]), rect=rect, polygon=polygon))
        except ValueError as exc:
            raise ConfigError(f"{ctx}: {exc}") from exc
    return subdomains


def _parse_region_scalar(spec, context: str):
    if isinstance(spec, (int, float)):
        return float(spec)
    if isinstance(spec, list):
        table = {}
        for k, entry in enumerate(spec):
            fields = _require_keys(entry, {"region": (True, None), "value": (True, None)},
                                   f"{context}[{k}]")
            table[int(fields["region"])] = float(fields["value"])
        return table
    raise ConfigError(f"{context}: expected a number or an array of "
                      f"{{region, value}} tables")


def _parse_region_vector(spec, context: str):
    if isinstance(spec, list) and len(spec) == 2 and all(
            isinstance(x, (int, float)) for x in spec):
        return (float(spec[0]), float(spec[1]))
    if isinstance(spec, list):
        table = {}
        for k, entry in enumerate(spec):
            fields = _require_keys(entry, {"region": (True, None), "value": (True, None)},
                                   f"{context}[{k}]")
            value = fields["value"]
            if not (isinstance(value, list) and len(value) == 2):
                raise ConfigError(f"{context}[{k}]: value must be a 2-vector")
            table[int(fields["region"])] = (float(value[0]), float(value[1]))
        return table
    raise ConfigError(f"{context}: expected a 2-vector or an array of "
                      f"{{region, value}} tables")


def _parse_diffusion(spec, context: str):
    if isinstance(spec, (int, float)):
        return float(spec)
    if isinstance(spec, list) and spec and isinstance(spec[0], list) \
            and all(isinstance(x, (int, float)) for row in spec for x in row):
        return tuple(tuple(float(x) for x in row) for row in spec)
    if isinstance(spec, list):
        table = {}
        for k, entry in enumerate(spec):
            fields = _require_keys(entry, {"region": (True, None), "value": (True, None)},
                                   f"{context}[{k}]")
            table[int(fields["region"])] = fields["value"]
        return table
    raise ConfigError(f"{context}: expected a number, a 2x2 matrix, or an array "
                      f"of {{region, value}} tables")


def _parse_goals(entries, context: str) -> tuple[Goal, ...]:
    goals = []
    for k, entry in enumerate(entries):
        ctx = f"{context}.goals[{k}]"
        fields = _require_keys(entry, {"region": (False, None), "g": (False, 0.0),
                                       "gvec": (False, (0.0, 0.0))}, ctx)
        g = float(fields["g"])
        gvec = fields["gvec"]
        if not (isinstance(gvec, (list, tuple)) and len(gvec) == 2):
            raise ConfigError(f"{ctx}: gvec must be a 2-vector")
        gvec = (float(gvec[0]), float(gvec[1]))
        if fields["region"] is not None:
            region = int(fields["region"])
            goals.append(Goal(weight={region: g} if g else 0.0,
                              flux={region: gvec} if any(gvec) else (0.0, 0.0)))
        else:
            goals.append(Goal(weight=g, flux=gvec))
    if not goals:
        raise ConfigError(f"{context}: at least one goal is required")
    return tuple(goals)


def load_config(path) -> ExperimentConfig:
    """Parse and validate an experiment config file."""
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file {path} does not exist") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: TOML syntax error: {exc}") from exc

    tables = _require_keys(raw, {"problem": (True, None), "adapt": (True, None),
                                 "stop": (True, None), "ablation": (False, {}),
                                 "output": (True, None)}, str(path))

    prob = _require_keys(tables["problem"], {
        "domain": (True, None), "regions": (False, []), "A": (False, 1.0),
        "f": (False, 0.0), "fvec": (False, (0.0, 0.0)), "goals": (True, None),
    }, f"{path}:[problem]")
    domain = _parse_domain(prob["domain"], f"{path}:[problem]")
    subdomains = _parse_regions(prob["regions"], f"{path}:[problem]")
    problem = ProblemData(
        diffusion=_parse_diffusion(prob["A"], f"{path}:[problem].A"),
        load=_parse_region_scalar(prob["f"], f"{path}:[problem].f"),
        load_flux=_parse_region_vector(prob["fvec"], f"{path}:[problem].fvec"),
        goals=_parse_goals(prob["goals"], f"{path}:[problem]"),
    )

    adapt = _require_keys(tables["adapt"], {
        "theta": (True, None), "c_mark": (False, 2.0), "rho_irr": (False, 0.25),
        "n_goals": (True, None), "degree": (False, 1),
        "irregular_variant": (False, CAP_LARGEST), "initial_sort": (False, False),
        "neumann_residual": (False, True),
    }, f"{path}:[adapt]")
    stop = _require_keys(tables["stop"], {
        "max_ndof": (False, None), "max_levels": (False, None), "tol": (False, None),
    }, f"{path}:[stop]")
    cfg = AdaptiveConfig(
        theta=float(adapt["theta"]), c_mark=float(adapt["c_mark"]),
        rho_irr=float(adapt["rho_irr"]), n_goals=int(adapt["n_goals"]),
        degree=int(adapt["degree"]),
        irregular_variant=str(adapt["irregular_variant"]),
        initial_sort=bool(adapt["initial_sort"]),
        neumann_residual=bool(adapt["neumann_residual"]),
        max_ndof=int(stop["max_ndof"]) if stop["max_ndof"] is not None else None,
        max_levels=int(stop["max_levels"]) if stop["max_levels"] is not None else None,
        estimator_tol=float(stop["tol"]) if stop["tol"] is not None else None,
    )
    if cfg.n_goals != problem.n_goals:
        raise ConfigError(f"{path}: [adapt] n_goals = {cfg.n_goals} does not match "
                          f"{problem.n_goals} goals in [problem]")

    ablation = _require_keys(tables["ablation"], {"mode": (False, "ngo")},
                             f"{path}:[ablation]")
    mode_str = str(ablation["mode"])
    restrict = None
    if mode_str in MODES:
        mode = mode_str
    else:
        match = _RESTRICT_RE.match(mode_str)
        if not match:
            raise ConfigError(f"{path}:[ablation] mode must be 'ngo', 'afem_only', "
                              f"or 'restrict_goals(k)', got {mode_str!r}")
        restrict = int(match.group(1))
        if not 1 <= restrict < problem.n_goals:
            raise ConfigError(f"{path}:[ablation] restrict_goals({restrict}) needs "
                              f"1 <= k < {problem.n_goals}")
        mode = "ngo"

    output = _require_keys(tables["output"], {"csv_path": (True, None),
                                              "report_path": (True, None)},
                           f"{path}:[output]")

    exp = ExperimentConfig(
        domain=domain, subdomains=subdomains, problem=problem, adapt=cfg,
        mode=mode, restrict_goals=restrict,
        csv_path=str(output["csv_path"]), report_path=str(output["report_path"]),
    )
    validate_params(exp.driver_config())
    return exp


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_history_csv(history: History, path) -> None:
    n = history.n_goals_total
    header = (["level", "active_goal", "n_elements", "ndof", "cumndof", "eta"]
              + [f"zeta_{i}" for i in range(1, n + 1)]
              + ["delta", "marking", "n_mark_u", "n_mark_z", "n_mark_uz", "n_mark",
                 "solves_primal", "solves_dual"]
              + [f"goal_{i}" for i in range(1, n + 1)])
    lines = [",".join(header)]
    for r in history.records:
        row = ([r.level, r.active_goal, r.n_elements, r.ndof, r.cumndof, r.eta]
               + list(r.zeta)
               + [r.delta, r.marking, r.n_mark_u, r.n_mark_z, r.n_mark_uz, r.n_mark,
                  r.solves_primal, r.solves_dual]
               + list(r.goal_values))
        lines.append(",".join(_fmt(x) for x in row))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_history_csv(path) -> History:
    """Rebuild level records from a CSV file written by write_history_csv."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ConfigError(f"{path}: empty CSV")
    header = lines[0].split(",")
    zeta_cols = [c for c in header if re.fullmatch(r"zeta_\d+", c)]
    goal_cols = [c for c in header if re.fullmatch(r"goal_\d+", c)]
    n = len(zeta_cols)
    expected = (["level", "active_goal", "n_elements", "ndof", "cumndof", "eta"]
                + [f"zeta_{i}" for i in range(1, n + 1)]
                + ["delta", "marking", "n_mark_u", "n_mark_z", "n_mark_uz", "n_mark",
                   "solves_primal", "solves_dual"]
                + [f"goal_{i}" for i in range(1, n + 1)])
    if header != expected or not goal_cols:
        raise ConfigError(f"{path}: header does not match the CSV contract")
    records = []
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise ConfigError(f"{path}:{ln}: expected {len(header)} fields, "
                              f"got {len(parts)}")
        it = iter(parts)
        records.append(LevelRecord(
            level=int(next(it)), active_goal=int(next(it)),
            n_elements=int(next(it)), ndof=int(next(it)), cumndof=int(next(it)),
            eta=float(next(it)),
            zeta=tuple(float(next(it)) for _ in range(n)),
            delta=float(next(it)), marking=next(it),
            n_mark_u=int(next(it)), n_mark_z=int(next(it)),
            n_mark_uz=int(next(it)), n_mark=int(next(it)),
            solves_primal=int(next(it)), solves_dual=int(next(it)),
            goal_values=tuple(float(next(it)) for _ in range(n)),
        ))
    if not records:
        raise ConfigError(f"{path}: CSV contains no level rows")
    return History(config=AdaptiveConfig(max_levels=1), mode="csv", records=records)


def expected_windows(degree: int, x_axis: str) -> dict[str, tuple[float, float]]:
    """Slope windows around the optimal rates -p and -p/2.

    The tolerance is 0.15 * p per decade window on ndof and 0.2 * p on
    cumulative ndof (the cumulative axis flattens the early levels more).
    """
    tol = 0.15 * degree if x_axis == "ndof" else 0.2 * degree
    out = {"delta": (-degree - tol, -degree + tol)}
    half = degree / 2.0
    for q in ("eta", "zeta"):
        out[q] = (-half - tol, -half + tol)
    return out


def rate_report(csv_paths, window="decade", degree: int | None = None,
                x_axis: str | None = None) -> str:
    """Slope table per CSV plus a cross-run comparison.

    With a known degree, slopes are judged against the expected windows on
    the chosen axis (default ndof); otherwise the report is informational.
    """
    axis = x_axis or "ndof"
    blocks = []
    comparison = []
    for path in csv_paths:
        history = read_history_csv(path)
        n = history.n_goals_total
        last = history.records[-1]
        lines = [f"run: {path}",
                 f"  levels: {len(history.records)}  final ndof: {last.ndof}  "
                 f"final cumndof: {last.cumndof}",
                 f"  window: {window}  axis: {axis}"]
        windows = expected_windows(degree, axis) if degree is not None else {}
        quantities = ["delta", "eta"] + [f"zeta_{i}" for i in range(1, n + 1)]
        lines.append(f"  {'quantity':<12} {'slope':>8}  {'expected':<18} status")
        for q in quantities:
            try:
                slope = rate_fit(history, q, window, axis)
            except ValueError as exc:
                raise ConfigError(f"{path}: {q}: {exc}") from exc
            key = "zeta" if q.startswith("zeta_") else q
            if key in windows:
                lo, hi = windows[key]
                status = "PASS" if lo <= slope <= hi else "FAIL"
                expected = f"[{lo:+.3f}, {hi:+.3f}]"
            else:
                status = "-"
                expected = "-"
            lines.append(f"  {q:<12} {slope:+8.3f}  {expected:<18} {status}")
            if q == "delta":
                comparison.append((str(path), slope))
        goal_strs = [f"goal_{i+1} = {_fmt(last.goal_values[i])}" for i in range(n)]
        lines.append("  final goal values: " + ", ".join(goal_strs))
        blocks.append("\n".join(lines))
    report = "rate report\n===========\n\n" + "\n\n".join(blocks)
    if len(comparison) > 1:
        width = max(len(p) for p, _ in comparison)
        rows = [f"  {p:<{width}}  {s:+.3f}" for p, s in comparison]
        report += ("\n\ncomparison (delta slope, axis=" + axis + "):\n"
                   + "\n".join(rows))
    return report + "\n"


def run_experiment(config_path, max_ndof: int | None = None,
                   out_dir=None, dump_mesh: bool = False) -> tuple[History, Path, Path]:
    """Run one configured experiment; writes the CSV and the rate report.

    With dump_mesh, the final adaptive mesh is also written in the
    plain-text dump format (next to the CSV, suffix _mesh.txt) for the
    frontend's wireframe renderer.
    """
    exp = load_config(config_path)
    cfg = exp.driver_config()
    if max_ndof is not None:
        cfg = replace(cfg, max_ndof=max_ndof)
    mesh0 = exp.build_mesh()
    history = run(cfg, exp.problem, mesh0, mode=exp.mode)
    csv_path = Path(exp.csv_path)
    report_path = Path(exp.report_path)
    if out_dir is not None:
        out = Path(out_dir)
        csv_path = out / csv_path.name
        report_path = out / report_path.name
    write_history_csv(history, csv_path)
    axis = "cumndof" if exp.domain.get("kind") == "z_shape" else "ndof"
    report = rate_report([csv_path], window="decade", degree=exp.adapt.degree,
                         x_axis=axis)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(report, encoding="utf-8")
    if dump_mesh:
        write_mesh(history.final_mesh, csv_path.with_name(csv_path.stem + "_mesh.txt"))
    return history, csv_path, report_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mgafem",
        description="Multigoal-oriented adaptive FEM experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--max-ndof", type=int, default=None,
                       help="override the stopping budget")
    p_run.add_argument("--out", default=None, help="directory for output files")
    p_run.add_argument("--dump-mesh", action="store_true",
                       help="also write the final mesh in the dump format")

    p_rep = sub.add_parser("report", help="fit rates from result CSVs")
    p_rep.add_argument("csv", nargs="+")
    p_rep.add_argument("--window", default="decade",
                       help="fit window: decade or last:k")
    p_rep.add_argument("--degree", type=int, default=None,
                       help="polynomial degree, enables PASS/FAIL columns")
    p_rep.add_argument("--x", dest="x_axis", default=None,
                       choices=("ndof", "cumndof"), help="fit axis")

    p_val = sub.add_parser("validate", help="validate a config without running")
    p_val.add_argument("config")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            history, csv_path, report_path = run_experiment(
                args.config, max_ndof=args.max_ndof, out_dir=args.out,
                dump_mesh=args.dump_mesh)
            last = history.records[-1]
            print(f"done: {len(history.records)} levels, final ndof {last.ndof}")
            for warning in history.warnings:
                print(f"warning: {warning}")
            print(f"csv:    {csv_path}")
            print(f"report: {report_path}")
        elif args.command == "report":
            print(rate_report(args.csv, window=args.window, degree=args.degree,
                              x_axis=args.x_axis), end="")
        elif args.command == "validate":
            exp = load_config(args.config)
            q_est, warnings = validate_params(exp.driver_config())
            print(f"config ok: {args.config}")
            print(f"q_est = {q_est:.6f} (theta = {exp.adapt.theta})")
            if exp.adapt.n_goals >= 2:
                threshold = (1.0 - q_est) / (exp.adapt.n_goals - 1)
                print(f"contraction threshold (1 - q_est)/(N - 1) = {threshold:.6f}")
            for warning in warnings:
                print(f"warning: {warning}")
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
