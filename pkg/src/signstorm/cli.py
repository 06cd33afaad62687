"""Command-line front end.

Subcommands:
    run <config.json>                 experiment -> traces, report.json, SVG charts
    check <config.json>               diagnostic suite -> JSON verdict per checker
    report <report.json> --chart ...  re-render a chart from an existing report
    params ...                        print the horizon-tuned parameter choice

Exit codes: 0 success, 1 config error, 2 check failure, 3 I/O error.  The
worker pool is capped by the SIGNSTORM_THREADS environment variable.  Every
command is a thin shell over the library; outputs stay inside the configured
output directory.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import charts, diagnostics as diag
from .errors import (
    ConfigError,
    InvalidConstant,
    MalformedReport,
    PreconditionNotMet,
    RhoConstraintViolated,
    SignStormError,
)
from .harness import ExperimentSpec, run_experiment, run_trial, write_trace_csv
from .optim import OptimizerKind
from .problems import verify_assumptions
from .rngutil import derive_seed, make_rng
from .theory import TheoremInputs, theorem_bound, theorem_params

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CHECK = 2
EXIT_IO = 3

_TOP_KEYS = {
    "problem", "optimizers", "param_mode", "T_grid", "n_seeds", "delta",
    "master_seed", "output_dir", "diagnostics", "beta2", "alpha", "beta",
    "per_step", "eps_guard", "write_traces", "check",
}
_CHECK_KEYS = {"T", "n_seeds", "lemma1_trials", "lemma1_T", "mds", "fault_injection",
               "n_probes"}
_REQUIRED = ["problem", "optimizers", "T_grid", "n_seeds", "delta", "master_seed",
             "output_dir"]


@dataclasses.dataclass
class RunConfig:
    """Validated run configuration; see README for the JSON schema."""

    problem_name: str
    problem_params: dict
    optimizers: list[OptimizerKind]
    T_grid: list[int]
    n_seeds: int
    delta: float
    master_seed: int
    output_dir: str
    param_mode: str = "theorem"
    diagnostics: bool = False
    beta2: float = 0.0
    alpha: float = 1.0
    beta: float = 1.0
    per_step: bool = False
    eps_guard: float = 0.0
    write_traces: bool = True
    check: dict = dataclasses.field(default_factory=dict)

    @staticmethod
    def load(path: str) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}")
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        unknown = set(raw) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in _REQUIRED:
            if key not in raw:
                raise ConfigError(f"missing required field: {key}")
        problem = raw["problem"]
        if not isinstance(problem, dict) or "name" not in problem:
            raise ConfigError("problem must be an object with a 'name'")
        unknown = set(problem) - {"name", "params"}
        if unknown:
            raise ConfigError(f"unknown problem keys: {sorted(unknown)}")
        try:
            optimizers = [OptimizerKind(o) for o in raw["optimizers"]]
        except ValueError as exc:
            raise ConfigError(f"unknown optimizer: {exc}")
        check = raw.get("check", {})
        if not isinstance(check, dict) or set(check) - _CHECK_KEYS:
            raise ConfigError(f"check section allows keys {sorted(_CHECK_KEYS)}")
        cfg = RunConfig(
            problem_name=problem["name"],
            problem_params=dict(problem.get("params", {})),
            optimizers=optimizers,
            T_grid=[int(t) for t in raw["T_grid"]],
            n_seeds=int(raw["n_seeds"]),
            delta=float(raw["delta"]),
            master_seed=int(raw["master_seed"]),
            output_dir=str(raw["output_dir"]),
            param_mode=str(raw.get("param_mode", "theorem")),
            diagnostics=bool(raw.get("diagnostics", False)),
            beta2=float(raw.get("beta2", 0.0)),
            alpha=float(raw.get("alpha", 1.0)),
            beta=float(raw.get("beta", 1.0)),
            per_step=bool(raw.get("per_step", False)),
            eps_guard=float(raw.get("eps_guard", 0.0)),
            write_traces=bool(raw.get("write_traces", True)),
            check=check,
        )
        cfg.to_spec()  # run range validation early
        return cfg

    def to_spec(self) -> ExperimentSpec:
        try:
            return ExperimentSpec(
                problem_name=self.problem_name,
                problem_params=self.problem_params,
                optimizers=self.optimizers,
                T_grid=self.T_grid,
                n_seeds=self.n_seeds,
                delta=self.delta,
                param_mode=self.param_mode,
                master_seed=self.master_seed,
                beta2=self.beta2,
                alpha=self.alpha,
                beta=self.beta,
                per_step=self.per_step,
                collect_diagnostics=self.diagnostics,
            )
        except (ConfigError, InvalidConstant) as exc:
            raise ConfigError(str(exc))


def cmd_run(config_path: str) -> int:
    config = RunConfig.load(config_path)
    spec = config.to_spec()
    problem = spec.build_problem()  # fail fast on bad problem params
    del problem
    report = run_experiment(spec)
    out = config.output_dir
    try:
        os.makedirs(out, exist_ok=True)
        report_path = os.path.join(out, "report.json")
        with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(report.to_json())
        if config.write_traces:
            trace_dir = os.path.join(out, "traces")
            os.makedirs(trace_dir, exist_ok=True)
            _write_all_traces(config, spec, trace_dir)
        doc = json.loads(report.to_json())
        for name, render in (("convergence_bands", charts.convergence_bands_svg),
                             ("rate_fit", charts.rate_fit_svg)):
            with open(os.path.join(out, f"{name}.svg"), "w", encoding="utf-8") as fh:
                fh.write(render(doc))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"report written to {report_path}")
    return EXIT_OK


def _write_all_traces(config: RunConfig, spec: ExperimentSpec, trace_dir: str) -> None:
    from .harness import resolve_hyperparams

    problem = spec.build_problem()
    for oi, kind in enumerate(spec.optimizers):
        for ti, T in enumerate(spec.T_grid):
            hp = resolve_hyperparams(spec, problem, kind, T)
            for si in range(spec.n_seeds):
                seed = derive_seed(spec.master_seed, oi, ti, si)
                trace = run_trial(problem, kind, hp, T, seed,
                                  collect_diagnostics=spec.collect_diagnostics)
                path = os.path.join(trace_dir, f"{kind.value}_T{T}_s{si}.csv")
                write_trace_csv(trace, path)


def _check_verdicts(config: RunConfig) -> list[dict]:
    """Run the diagnostic suite; one verdict dict per checker.

    The lemma-level checks are statements about the variance-reduced
    estimator, so the diagnosed runs always use it (with the config's
    problem and parameter mode) regardless of which optimizers the
    experiment itself compares.
    """
    from .harness import resolve_hyperparams

    spec = config.to_spec()
    problem = spec.build_problem()
    check = config.check
    fault = check.get("fault_injection", {})
    scale = float(fault.get("L_scale", 1.0))
    if scale != 1.0:
        problem.constants = dataclasses.replace(
            problem.constants, L_vec=problem.constants.L_vec * scale)
    T = int(check.get("T", min(config.T_grid[0], 2000)))
    n_seeds = int(check.get("n_seeds", min(config.n_seeds, 20)))
    n_probes = int(check.get("n_probes", 2000))
    kind = OptimizerKind.SIGNSTORM
    hp = resolve_hyperparams(spec, problem, kind, T)
    if config.eps_guard > 0:
        hp = dataclasses.replace(hp, eps_guard=config.eps_guard)
    consts = problem.constants
    verdicts: list[dict] = []

    def verdict(name, kind_, status, **extra):
        verdicts.append({"checker": name, "kind": kind_, "status": status, **extra})

    rep = verify_assumptions(problem, n_probes, make_rng(derive_seed(config.master_seed, 101)))
    for c in rep.checks():
        verdict(f"assumption_{c.name}", "deterministic",
                "pass" if c.passed else "fail",
                worst_ratio=c.worst_ratio, detail=c.detail)

    runs = [diag.run_with_diagnostics(problem, hp, T,
                                      derive_seed(config.master_seed, 202, s), kind)
            for s in range(n_seeds)]

    for name, fn in (("movement_bound",
                      lambda r: diag.movement_bound_check(r.step_l2, r.hp, problem.d)),
                     ("representation",
                      lambda r: diag.representation_check(r.trace, r.hp.beta1)),
                     ("storm_decomposition", diag.decomposition_check),
                     ("estimator_ratio", diag.estimator_ratio_check)):
        worst = None
        skipped = None
        for r in runs:
            try:
                res = fn(r)
            except PreconditionNotMet as exc:
                skipped = str(exc)
                break
            if worst is None or res.worst_ratio > worst.worst_ratio:
                worst = res
        if skipped is not None:
            verdict(name, "deterministic", "skipped", reason=skipped)
        else:
            verdict(name, "deterministic", "pass" if worst.passed else "fail",
                    worst_ratio=worst.worst_ratio, worst_t=worst.worst_t)

    try:
        eps_rep = diag.epsilon_bound_frequency([r.trace for r in runs], hp,
                                               consts.L_vec, consts.sigma_vec,
                                               config.delta)
        dich_rep = diag.sign_dichotomy_frequency(runs, consts.L_vec,
                                                 consts.sigma_vec, config.delta)
        for rep_ in (eps_rep, dich_rep):
            verdict(rep_.name, "statistical", "pass" if rep_.passed else "fail",
                    violation_fraction=rep_.violation_fraction,
                    allowed_fraction=rep_.allowed_fraction, n_total=rep_.n_total)
    except (PreconditionNotMet, RhoConstraintViolated) as exc:
        verdict("epsilon_bound", "statistical", "skipped", reason=str(exc))
        verdict("sign_dichotomy", "statistical", "skipped", reason=str(exc))

    mds = diag.MdsKind(check.get("mds", "rademacher"))
    l1_rep, _ = diag.lemma1_montecarlo(int(check.get("lemma1_trials", 10000)),
                                       int(check.get("lemma1_T", 1000)),
                                       config.delta, mds,
                                       seed=derive_seed(config.master_seed, 303))
    verdict(l1_rep.name, "statistical", "pass" if l1_rep.passed else "fail",
            violation_fraction=l1_rep.violation_fraction,
            allowed_fraction=l1_rep.allowed_fraction, n_total=l1_rep.n_total)
    return verdicts


def cmd_check(config_path: str) -> int:
    config = RunConfig.load(config_path)
    verdicts = _check_verdicts(config)
    try:
        os.makedirs(config.output_dir, exist_ok=True)
        path = os.path.join(config.output_dir, "check.json")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps({"verdicts": verdicts}, sort_keys=True, indent=2) + "\n")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(json.dumps({"verdicts": verdicts}, sort_keys=True, indent=2))
    hard_fail = any(v["status"] == "fail" and v["kind"] == "deterministic"
                    for v in verdicts)
    return EXIT_CHECK if hard_fail else EXIT_OK


def cmd_report(report_path: str, chart: str, out_path: str | None) -> int:
    try:
        with open(report_path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"error: malformed report: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    render = {"convergence_bands": charts.convergence_bands_svg,
              "rate_fit": charts.rate_fit_svg}[chart]
    try:
        svg = render(doc)
    except MalformedReport as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    target = out_path or os.path.join(os.path.dirname(report_path) or ".", f"{chart}.svg")
    try:
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(svg)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"chart written to {target}")
    return EXIT_OK


def cmd_params(args: argparse.Namespace) -> int:
    inp = TheoremInputs(delta=args.delta, L1_norm=args.L1, sigma1_norm=args.sigma1,
                        T=args.T, beta2=args.beta2,
                        confidence_delta=args.confidence, d=args.d)
    choice = theorem_params(inp)
    bound = theorem_bound(inp, choice.rho)
    print(f"eta      = {choice.hp.eta!r}")
    print(f"beta1    = {choice.hp.beta1!r}")
    print(f"beta2    = {choice.hp.beta2!r}")
    print(f"rho      = {choice.rho!r}")
    print(f"c(rho)   = {choice.c_of_rho!r}")
    print(f"bound reference (big-O constants = 1) = {bound!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="signstorm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("config")

    p_check = sub.add_parser("check", help="run the diagnostic suite")
    p_check.add_argument("config")

    p_report = sub.add_parser("report", help="render a chart from a report")
    p_report.add_argument("report")
    p_report.add_argument("--chart", choices=["convergence_bands", "rate_fit"],
                          default="convergence_bands")
    p_report.add_argument("--out", default=None)

    p_params = sub.add_parser("params", help="print the horizon-tuned parameters")
    p_params.add_argument("--delta", type=float, required=True)
    p_params.add_argument("--L1", type=float, required=True)
    p_params.add_argument("--sigma1", type=float, required=True)
    p_params.add_argument("--T", type=int, required=True)
    p_params.add_argument("--beta2", type=float, default=0.0)
    p_params.add_argument("--confidence", type=float, default=0.05)
    p_params.add_argument("--d", type=int, default=1)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.config)
        if args.command == "check":
            return cmd_check(args.config)
        if args.command == "report":
            return cmd_report(args.report, args.chart, args.out)
        if args.command == "params":
            return cmd_params(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidConstant, RhoConstraintViolated) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SignStormError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
