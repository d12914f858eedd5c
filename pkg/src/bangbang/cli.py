"""Command-line front end.

Usage::

    bangbang {simulate,adjoint,converge,gradcheck,optimize} [--config FILE]
             [--set section.key=value ...] [--out DIR] [--seed INT]

Runs are described by an INI file with sections ``problem``, ``mesh``,
``solver``, ``optimizer`` and ``output``; any key can be overridden with
``--set``. Unknown keys are rejected. Every table is written as CSV with a
header row and 12 significant digits; optimization results also go to JSON.

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adjoint import solve_adjoint_iim
from .errors import ConfigurationError, NumericalError
from .mesh import InterfaceMode, TimeMesh, build_mesh
from .objective import ReducedProblem, evaluate_gradient
from .optimizer import OptimizerConfig, relaxation_solve, round_relaxation, trust_region_solve
from .problem import (
    Constant,
    ControlPartition,
    PerIntervalConstant,
    ProblemSpec,
    ScalarField,
    Sinusoid,
    Tabulated,
    alternating_control,
    check_control,
)
from .state import TrajectorySolution, solve_state_euler, solve_state_iim
from .verification import (
    ConvergenceReport,
    backward_jumps,
    convergence_study,
    finite_difference_gradient,
    manufactured_adjoint,
    max_node_error,
    mms_source,
    closed_form_jumps,
    closed_form_solution,
    reference_integrator,
)

DEFAULTS = {
    "problem": {
        "K": "1.0",
        "C": "3.0",
        "T_s": "50.0",
        "T_0": "70.0",
        "t_final": "10.0",
        "N": "10",
        "partition": "equal",
        "forcing": "0",
        "target": "0",
        "adjoint_source": "0",
        "control": "alternating",
    },
    "mesh": {
        "N_t": "2048",
        "levels": "32..2048",
    },
    "solver": {
        "scheme": "iim",
        "mode": "continuous",
        "jumps": "closed-form",
        "reference": "closed-form",
        "fine_factor": "16",
        "epsilons": "1e-6",
        "adjoint_reference": "mms",
    },
    "optimizer": {
        "initial_radius": "auto",
        "rho_bar": "0.75",
        "max_iterations": "1000",
        "init": "rounded-relaxation",
        "control_path": "",
        "rounding_threshold": "0.5",
        "relax_step": "auto",
        "relax_tol": "1e-6",
        "relax_max_iterations": "200",
        "seed": "0",
    },
    "output": {
        "directory": "out",
        "formats": "csv,json",
    },
}


# --------------------------------------------------------------------------
# parsing helpers
# --------------------------------------------------------------------------


def _float(section, key, text) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigurationError(f"{key} must be a number, got {text!r}", section=section) from None


def _int(section, key, text) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigurationError(f"{key} must be an integer, got {text!r}", section=section) from None


def _floats(section, key, text) -> list:
    parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
    if not parts:
        raise ConfigurationError(f"{key} is empty", section=section)
    return [_float(section, key, p.strip()) for p in parts]


def _choice(section, key, text, options):
    if text not in options:
        raise ConfigurationError(
            f"{key} must be one of {', '.join(options)}, got {text!r}", section=section
        )
    return text


def parse_levels(text: str) -> list:
    """``"32,64,128"`` or ``"32..2048"`` (doubling from the first to the last)."""
    text = text.strip()
    if ".." in text:
        lo, hi = (_int("mesh", "levels", p.strip()) for p in text.split("..", 1))
        if lo < 1 or hi < lo:
            raise ConfigurationError(f"bad level range {text!r}", section="mesh")
        levels = []
        while lo <= hi:
            levels.append(lo)
            lo *= 2
        return levels
    levels = [_int("mesh", "levels", p.strip()) for p in text.split(",") if p.strip()]
    if not levels or min(levels) < 1:
        raise ConfigurationError("levels must be positive integers", section="mesh")
    return levels


def parse_field(text: str, partition: ControlPartition, key: str) -> ScalarField:
    """``3`` | ``constant:3`` | ``sinusoid:a,b[,omega]`` | ``intervals:v1,...,vN`` | ``table:PATH``."""
    text = text.strip()
    kind, _, args = text.partition(":")
    kind = kind.strip().lower()
    if not _:
        return Constant(_float("problem", key, text))
    if kind == "constant":
        return Constant(_float("problem", key, args))
    if kind == "sinusoid":
        vals = _floats("problem", key, args)
        if len(vals) not in (2, 3):
            raise ConfigurationError(f"{key}: sinusoid takes offset,amplitude[,omega]",
                                     section="problem")
        return Sinusoid(*vals)
    if kind == "intervals":
        try:
            return PerIntervalConstant(tuple(_floats("problem", key, args)), partition.breakpoints)
        except ConfigurationError as err:
            raise ConfigurationError(f"{key}: {err}", section="problem") from None
    if kind == "table":
        try:
            data = np.loadtxt(args.strip(), delimiter=",", skiprows=1, ndmin=2)
        except OSError as err:
            raise ConfigurationError(f"{key}: cannot read {args.strip()!r}: {err}",
                                     section="problem") from None
        try:
            return Tabulated(tuple(data[:, 0]), tuple(data[:, 1]), partition.breakpoints)
        except ConfigurationError as err:
            raise ConfigurationError(f"{key}: {err}", section="problem") from None
    raise ConfigurationError(f"{key}: unknown field kind {kind!r}", section="problem")


def parse_control(text: str, n: int) -> np.ndarray:
    text = text.strip()
    if text == "alternating":
        return alternating_control(n)
    if text == "zeros":
        return np.zeros(n)
    if text == "ones":
        return np.ones(n)
    v = np.asarray(_floats("problem", "control", text))
    try:
        return check_control(v, n, binary=True)
    except ValueError as err:
        raise ConfigurationError(f"control: {err}", section="problem") from None


def parse_mode(text: str, jumps: str, spec: ProblemSpec) -> InterfaceMode:
    _choice("solver", "mode", text, ("continuous", "prescribed", "augmented"))
    if text != "prescribed":
        return InterfaceMode(text)
    if jumps.strip() == "closed-form":
        return InterfaceMode.prescribed(_checked_closed_form_jumps(spec))
    q = _floats("solver", "jumps", jumps)
    if len(q) != spec.N - 1:
        raise ConfigurationError(f"jumps: {len(q)} values given for {spec.N - 1} interfaces",
                                 section="solver")
    return InterfaceMode.prescribed(q)


def _checked_closed_form_jumps(spec: ProblemSpec) -> np.ndarray:
    try:
        return closed_form_jumps(spec)
    except ValueError as err:
        raise ConfigurationError(f"closed form unavailable: {err}", section="solver") from None


# --------------------------------------------------------------------------
# run configuration
# --------------------------------------------------------------------------


@dataclass
class RunConfig:
    spec: ProblemSpec
    control: np.ndarray
    N_t: int
    levels: list
    scheme: str
    mode: InterfaceMode
    reference: str
    fine_factor: int
    epsilons: list
    adjoint_reference: str
    optimizer: OptimizerConfig
    init: str
    control_path: str
    seed: int
    out_dir: Path
    formats: tuple = ("csv", "json")
    raw: dict = field(default_factory=dict)


def read_config(path: str | None, overrides=()) -> dict:
    """Merge defaults, the config file and ``section.key=value`` overrides."""
    values = {s: dict(kv) for s, kv in DEFAULTS.items()}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as err:
            raise ConfigurationError(f"cannot read config {path!r}: {err}", section="config") from None
        except configparser.Error as err:
            raise ConfigurationError(f"cannot parse {path!r}: {err}", section="config") from None
        for section in parser.sections():
            for key, value in parser.items(section):
                _store(values, section, key, value)
    for item in overrides:
        lhs, eq, value = item.partition("=")
        section, dot, key = lhs.strip().partition(".")
        if not eq or not dot:
            raise ConfigurationError(f"--set expects section.key=value, got {item!r}",
                                     section="config")
        _store(values, section, key.strip(), value.strip())
    return values


def _store(values, section, key, value):
    if section not in values:
        raise ConfigurationError(f"unknown section [{section}]", section="config")
    if key not in values[section]:
        raise ConfigurationError(f"unknown key {key!r}", section=section)
    values[section][key] = value


def build_run(values: dict, out: str | None = None, seed: int | None = None) -> RunConfig:
    p, m, s, o = values["problem"], values["mesh"], values["solver"], values["optimizer"]

    t_final = _float("problem", "t_final", p["t_final"])
    if p["partition"].strip() == "equal":
        partition = ControlPartition.equal(t_final, _int("problem", "N", p["N"]))
    else:
        partition = ControlPartition(tuple(_floats("problem", "partition", p["partition"])))
        if partition.n_intervals != _int("problem", "N", p["N"]):
            raise ConfigurationError(
                f"partition has {partition.n_intervals} intervals but N = {p['N']}",
                section="problem",
            )
    spec = ProblemSpec(
        K=_float("problem", "K", p["K"]),
        C=_float("problem", "C", p["C"]),
        T_s=_float("problem", "T_s", p["T_s"]),
        T_0=_float("problem", "T_0", p["T_0"]),
        t_final=t_final,
        partition=partition,
        forcing=parse_field(p["forcing"], partition, "forcing"),
        target=parse_field(p["target"], partition, "target"),
        adjoint_source=parse_field(p["adjoint_source"], partition, "adjoint_source"),
    )
    control = parse_control(p["control"], spec.N)

    N_t = _int("mesh", "N_t", m["N_t"])
    build_mesh(spec, N_t)
    levels = parse_levels(m["levels"])

    scheme = _choice("solver", "scheme", s["scheme"], ("iim", "euler"))
    mode = parse_mode(s["mode"], s["jumps"], spec)
    reference = _choice("solver", "reference", s["reference"], ("closed-form", "continuous"))
    fine_factor = _int("solver", "fine_factor", s["fine_factor"])
    if fine_factor < 1:
        raise ConfigurationError("fine_factor must be ≥ 1", section="solver")
    epsilons = _floats("solver", "epsilons", s["epsilons"])
    if min(epsilons) <= 0:
        raise ConfigurationError("epsilons must be > 0", section="solver")
    adjoint_reference = _choice("solver", "adjoint_reference", s["adjoint_reference"],
                                ("mms", "fine"))

    radius = o["initial_radius"].strip()
    relax_step = o["relax_step"].strip()
    opt = OptimizerConfig(
        initial_radius=None if radius == "auto" else _int("optimizer", "initial_radius", radius),
        rho_bar=_float("optimizer", "rho_bar", o["rho_bar"]),
        max_iterations=_int("optimizer", "max_iterations", o["max_iterations"]),
        relax_step=None if relax_step == "auto" else _float("optimizer", "relax_step", relax_step),
        relax_tol=_float("optimizer", "relax_tol", o["relax_tol"]),
        relax_max_iterations=_int("optimizer", "relax_max_iterations", o["relax_max_iterations"]),
        rounding_threshold=_float("optimizer", "rounding_threshold", o["rounding_threshold"]),
    )
    init = _choice("optimizer", "init", o["init"], ("rounded-relaxation", "random", "given"))
    if init == "given" and not o["control_path"].strip():
        raise ConfigurationError("init = given needs control_path", section="optimizer")

    formats = tuple(f.strip() for f in values["output"]["formats"].split(",") if f.strip())
    for f in formats:
        _choice("output", "formats", f, ("csv", "json"))

    return RunConfig(
        spec=spec, control=control, N_t=N_t, levels=levels, scheme=scheme, mode=mode,
        reference=reference, fine_factor=fine_factor, epsilons=epsilons,
        adjoint_reference=adjoint_reference, optimizer=opt, init=init,
        control_path=o["control_path"].strip(),
        seed=seed if seed is not None else _int("optimizer", "seed", o["seed"]),
        out_dir=Path(out if out is not None else values["output"]["directory"]),
        formats=formats, raw=values,
    )


def load_run(path: str | None = None, overrides=(), out=None, seed=None) -> RunConfig:
    return build_run(read_config(path, overrides), out=out, seed=seed)


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return "%.12g" % float(x)


def write_csv(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(x) for x in row])
    return path


def write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _control_at_nodes(spec: ProblemSpec, v: np.ndarray, t: np.ndarray) -> np.ndarray:
    return v[spec.partition.interval_index(t, "left")]


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def _solve_state(run: RunConfig, mesh: TimeMesh, v=None) -> TrajectorySolution:
    v = run.control if v is None else v
    if run.scheme == "euler":
        return solve_state_euler(run.spec, v, mesh)
    return solve_state_iim(run.spec, v, mesh, run.mode)


def cmd_simulate(run: RunConfig) -> list:
    mesh = build_mesh(run.spec, run.N_t)
    state = _solve_state(run, mesh)
    t = mesh.nodes
    w = _control_at_nodes(run.spec, run.control, t)
    files = [write_csv(run.out_dir / "state.csv", ["t", "T", "w"], zip(t, state.values, w))]
    alphas = run.spec.partition.interfaces
    files.append(write_csv(run.out_dir / "state_jumps.csv", ["i", "alpha", "q"],
                           zip(range(alphas.size), alphas, state.augmented)))
    return files


def _adjoint_mode(run: RunConfig) -> InterfaceMode:
    return run.mode if run.mode.kind == "augmented" else InterfaceMode.continuous()


def cmd_adjoint(run: RunConfig) -> list:
    mesh = build_mesh(run.spec, run.N_t)
    state = _solve_state(run, mesh)
    adj = solve_adjoint_iim(run.spec, run.control, mesh, state, _adjoint_mode(run))
    grad = evaluate_gradient(run.spec, run.control, adj)
    alphas = run.spec.partition.interfaces
    return [
        write_csv(run.out_dir / "adjoint.csv", ["t", "lambda"], zip(mesh.nodes, adj.values)),
        write_csv(run.out_dir / "adjoint_jumps.csv", ["i", "alpha", "q_lambda"],
                  zip(range(alphas.size), alphas, adj.augmented)),
        write_csv(run.out_dir / "gradient.csv", ["i", "v", "gradient"],
                  zip(range(run.spec.N), run.control, grad)),
    ]


def _state_reference(run: RunConfig):
    if run.reference == "closed-form":
        _checked_closed_form_jumps(run.spec)
        if not np.array_equal(run.control, alternating_control(run.spec.N)):
            raise ConfigurationError("closed-form reference needs control = alternating",
                                     section="solver")
        return lambda mesh: closed_form_solution(run.spec, mesh.nodes)
    return lambda mesh: reference_integrator(run.spec, run.control, mesh, run.fine_factor).values


def _order_rows(reports):
    """Rows ``N_t, E_1, gamma_1, E_2, gamma_2, ...`` plus a ``mean`` row."""
    levels = reports[0].levels
    rows = []
    for k, n in enumerate(levels):
        row = [n]
        for rep in reports:
            row += [rep.errors[k], rep.orders[k]]
        rows.append(row)
    mean = ["mean"]
    for rep in reports:
        mean += [None, rep.mean_order]
    rows.append(mean)
    return rows


def cmd_converge(run: RunConfig) -> list:
    ref = _state_reference(run)
    tf = run.spec.t_final
    iim = convergence_study(lambda m: solve_state_iim(run.spec, run.control, m, run.mode),
                            ref, run.levels, tf)
    euler = convergence_study(lambda m: solve_state_euler(run.spec, run.control, m),
                              ref, run.levels, tf)
    return [write_csv(run.out_dir / "converge.csv",
                      ["N_t", "E_iim", "gamma_iim", "E_euler", "gamma_euler"],
                      _order_rows([iim, euler]))]


def _mms_adjoint_error(run: RunConfig, mesh: TimeMesh, state: TrajectorySolution) -> float:
    lam = manufactured_adjoint(run.spec)
    spec = run.spec.replace(adjoint_source=mms_source(run.spec, lam, state))
    sol = solve_adjoint_iim(spec, run.control, mesh, state,
                            InterfaceMode.prescribed(backward_jumps(lam, run.spec)))
    return max_node_error(sol, lam(mesh.nodes, "right"))


def _fine_adjoint_error(run: RunConfig, mesh: TimeMesh, adj: TrajectorySolution) -> float:
    fine = build_mesh(run.spec, mesh.N_t * run.fine_factor)
    fine_state = solve_state_iim(run.spec, run.control, fine, run.mode)
    fine_adj = solve_adjoint_iim(run.spec, run.control, fine, fine_state, _adjoint_mode(run))
    return max_node_error(adj, fine_adj.values[:: run.fine_factor])


def cmd_gradcheck(run: RunConfig) -> list:
    """State, adjoint and gradient errors per level with observed orders."""
    ref = _state_reference(run)
    if run.mode.kind == "prescribed":
        raise ConfigurationError("gradcheck needs mode = continuous or augmented",
                                 section="solver")
    reports = {"state": ConvergenceReport(), "adjoint": ConvergenceReport()}
    grad_reports = [ConvergenceReport() for _ in run.epsilons]
    for N_t in run.levels:
        mesh = build_mesh(run.spec, N_t)
        problem = ReducedProblem(run.spec, mesh, "iim", run.mode)
        state = problem.state(run.control)
        adj = problem.adjoint(run.control)
        grad = evaluate_gradient(run.spec, run.control, adj)
        if run.adjoint_reference == "mms":
            adj_err = _mms_adjoint_error(run, mesh, state)
        else:
            adj_err = _fine_adjoint_error(run, mesh, adj)
        for rep, err in ((reports["state"], max_node_error(state, ref(mesh))),
                         (reports["adjoint"], adj_err)):
            rep.levels.append(N_t)
            rep.errors.append(err)
        for rep, eps in zip(grad_reports, run.epsilons):
            fd = finite_difference_gradient(run.spec, mesh, run.control, eps, "iim", run.mode)
            rep.levels.append(N_t)
            rep.errors.append(float(np.max(np.abs(grad - fd))))

    header = ["N_t", "E_state", "gamma_state", "E_adjoint", "gamma_adjoint"]
    if len(run.epsilons) == 1:
        header += ["E_gradient", "gamma_gradient"]
    else:
        for eps in run.epsilons:
            header += [f"E_gradient_eps{eps:g}", f"gamma_gradient_eps{eps:g}"]
    rows = _order_rows([reports["state"], reports["adjoint"], *grad_reports])
    return [write_csv(run.out_dir / "gradcheck.csv", header, rows)]


def _read_given_control(path: str, n: int) -> np.ndarray:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigurationError(f"cannot read control_path {path!r}: {err}",
                                 section="optimizer") from None
    try:
        data = json.loads(text)
        values = data["control"] if isinstance(data, dict) else data
    except (json.JSONDecodeError, KeyError):
        values = text.replace("\n", ",").split(",")
        values = [x for x in values if x.strip()]
    try:
        return check_control(np.asarray(values, dtype=float), n, binary=True)
    except ValueError as err:
        raise ConfigurationError(f"control_path: {err}", section="optimizer") from None


def initial_control(run: RunConfig, problem: ReducedProblem) -> np.ndarray:
    n = run.spec.N
    if run.init == "random":
        return np.random.default_rng(run.seed).integers(0, 2, size=n).astype(float)
    if run.init == "given":
        return _read_given_control(run.control_path, n)
    relaxed = relaxation_solve(problem, n, run.optimizer)
    return round_relaxation(relaxed, run.optimizer.rounding_threshold)


def cmd_optimize(run: RunConfig) -> list:
    if run.mode.kind == "prescribed":
        raise ConfigurationError("optimize needs mode = continuous or augmented",
                                 section="solver")
    mesh = build_mesh(run.spec, run.N_t)
    problem = ReducedProblem(run.spec, mesh, run.scheme, run.mode)
    v0 = initial_control(run, problem)
    result = trust_region_solve(problem, v0, run.optimizer)
    state = problem.state(result.control)
    t = mesh.nodes

    files = []
    if "json" in run.formats:
        files.append(write_json(run.out_dir / "result.json", {
            "objective_initial": result.objective_initial,
            "objective_final": result.objective_final,
            "percent_reduction": result.percent_reduction,
            "iterations": result.iterations,
            "termination_reason": result.termination_reason,
            "truncated": result.truncated,
            "control": [int(x) for x in result.control],
        }))
    if "csv" in run.formats:
        files.append(write_csv(
            run.out_dir / "trace.csv", ["k", "delta", "objective", "rho", "accepted", "step_l1"],
            ([r.k, r.delta, r.objective, r.rho, r.accepted, r.step_l1] for r in result.trace),
        ))
        files.append(write_csv(
            run.out_dir / "state.csv", ["t", "T", "target", "w"],
            zip(t, state.values, run.spec.target(t, "left"),
                _control_at_nodes(run.spec, result.control, t)),
        ))
    return files


COMMANDS = {
    "simulate": cmd_simulate,
    "adjoint": cmd_adjoint,
    "converge": cmd_converge,
    "gradcheck": cmd_gradcheck,
    "optimize": cmd_optimize,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bangbang",
        description="Bang-bang control of a scalar linear ODE: simulation, "
                    "verification studies and binary trust-region optimization.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", metavar="PATH", help="INI run configuration")
    parser.add_argument("--set", metavar="SECTION.KEY=VALUE", action="append", default=[],
                        dest="overrides", help="override one config value (repeatable)")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--seed", type=int, help="seed for random initial controls")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run = load_run(args.config, args.overrides, out=args.out, seed=args.seed)
        files = COMMANDS[args.command](run)
    except ConfigurationError as err:
        print(err, file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 1
    except ValueError as err:
        print(err, file=sys.stderr)
        return 2
    for path in files:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
