"""Scenario runner: JSON config in, CSV trajectory and text reports out.

Usage::

    dampedosc run --config scenario.json [--config other.json] [--out DIR]
                  [--jobs N] [--seed N] [--quiet]
    dampedosc validate --config scenario.json
    dampedosc catalog
"""

from __future__ import annotations

import argparse
import ast
import io
import json
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core_state import GaussianState, PhysConstants, UncertaintyClass, ccs_state, uncertainty_class
from .dynamics import IntegratorOptions, Trajectory, integrate
from .entropy_rates import rate_fd_audit
from .errors import ConfigParseError, ConfigValidationError, DampedOscillatorError
from .model_zoo import (
    AgarwalModel,
    BathSpec,
    DrudeModel,
    KGCoefficients,
    LindbladParams,
    OhmicModel,
    ThermalKGModel,
    WeakCouplingModel,
    WeidlichHaakeModel,
    lindblad_constraint_check,
    purity_preserving_params,
)
from .purity_audit import audit_purity, purity_preserving_initial_state

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3
EXIT_IO = 4

CSV_COLUMNS = ("t", "mean_q", "mean_p", "var_qq", "var_pp", "cov_pq", "sigma_det", "nu",
               "S_l", "S", "purity_residual", "entropy_rate", "E_fluct", "E_total")
OUTPUT_KINDS = ("trajectory_csv", "purity_report", "entropy_audit", "summary")

# kind -> (required parameters, optional parameters with defaults, time-dependent ones)
MODEL_SCHEMAS: dict[str, tuple[tuple[str, ...], dict[str, float | None], tuple[str, ...]]] = {
    "kg": (("gamma_q", "gamma_p", "D_q", "D_p"), {"M": 1.0, "omega0": None},
           ("gamma_q", "gamma_p", "D_q", "D_p")),
    "kg_thermal": (("gamma_q", "gamma_p", "q2_eq", "p2_eq"),
                   {"temperature": 0.0, "M": 1.0, "omega0": None}, ("gamma_q", "gamma_p")),
    "ohmic": (("gamma", "omega0", "q2_eq", "p2_eq"), {"temperature": 0.0, "M": 1.0}, ()),
    "drude": (("alpha", "eta_d", "q2_eq", "p2_eq"),
              {"temperature": 0.0, "M": 1.0, "omega0": None}, ()),
    "weak_coupling": (("gamma_s", "gamma_c", "K_s", "K_c", "omega0"), {"M": 1.0}, ()),
    "agarwal": (("kappa", "omega0"), {"temperature": 0.0, "M": 1.0}, ()),
    "weidlich_haake": (("gamma_c", "omega0"), {"temperature": 0.0, "M": 1.0, "gamma_s": 0.0}, ()),
    "lindblad": (("omega", "lam", "mu", "D_pp", "D_qq", "D_pq"), {"m": 1.0}, ()),
    "lindblad_coepur": (("omega", "lam", "mu"), {"m": 1.0}, ()),
}

STATE_SCHEMAS = {
    "moments": "mean_q, mean_p (default 0), var_qq, var_pp, cov_pq",
    "ccs": "r, eta, mean_q, mean_p (default 0)",
    "auto": "no parameters; the model's purity-preserving state",
    "random_ccs": "r_max (0.9), eta_min (0.5), eta_max (2.0), mean_q, mean_p; drawn from --seed",
}


# --------------------------------------------------------------------------
# expression grammar for time-dependent coefficients

_FUNCTIONS = {
    "exp": math.exp,
    "sin": math.sin,
    "cos": math.cos,
    "coth": lambda x: 1.0 / math.tanh(x),
}
_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
}


def _check_expr(node: ast.AST) -> bool:
    """Validate the tree; return whether it depends on ``t``."""
    if isinstance(node, ast.Expression):
        return _check_expr(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        return False
    if isinstance(node, ast.Name) and node.id == "t":
        return True
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _check_expr(node.left) | _check_expr(node.right)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        return _check_expr(node.operand)
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCTIONS and len(node.args) == 1 and not node.keywords):
        return _check_expr(node.args[0])
    raise ValueError(f"unsupported syntax: {ast.dump(node)[:60]}")


def _eval_expr(node: ast.AST, t: float) -> float:
    if isinstance(node, ast.Expression):
        return _eval_expr(node.body, t)
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return t
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval_expr(node.left, t), _eval_expr(node.right, t))
    if isinstance(node, ast.UnaryOp):
        value = _eval_expr(node.operand, t)
        return -value if isinstance(node.op, ast.USub) else value
    return _FUNCTIONS[node.func.id](_eval_expr(node.args[0], t))


@dataclass(frozen=True)
class Expression:
    """A parsed coefficient ``f(t)``; callable, and printable as its source."""

    source: str
    tree: ast.Expression = field(repr=False, compare=False)

    def __call__(self, t: float) -> float:
        return _eval_expr(self.tree, float(t))


def parse_expression(source: str) -> Expression | float:
    """Parse ``source`` in the grammar ``t``, numbers, ``+ - * /``, unary
    minus, ``exp``, ``sin``, ``cos``, ``coth``.  Constant expressions are
    folded to a float."""
    try:
        tree = ast.parse(source, mode="eval")
        depends_on_t = _check_expr(tree)
    except (SyntaxError, ValueError) as exc:
        raise ValueError(f"bad expression {source!r}: {exc}") from None
    if not depends_on_t:
        return _eval_expr(tree, 0.0)
    return Expression(source, tree)


# --------------------------------------------------------------------------
# config parsing


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    model_kind: str
    model: object
    constants: PhysConstants
    initial_state: GaussianState
    initial_kind: str
    t_end: float
    sample_count: int
    integrator: IntegratorOptions
    outputs: tuple[str, ...]
    seed: int


def _line_of(text: str, *keys: str) -> int:
    """1-based line of the last key in ``keys``, searching each key after the previous one."""
    pos = 0
    for key in keys:
        m = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, pos)
        if m is None:
            break
        pos = m.start()
    return text.count("\n", 0, pos) + 1


class _Ctx:
    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source

    def parse_error(self, msg: str, *keys: str) -> ConfigParseError:
        return ConfigParseError(f"{self.source}:{_line_of(self.text, *keys)}: {msg}")

    def validation_error(self, msg: str, *keys: str) -> ConfigValidationError:
        return ConfigValidationError(f"{self.source}:{_line_of(self.text, *keys)}: {msg}")


def _section(ctx: _Ctx, doc: dict, key: str, required: bool = True) -> dict:
    value = doc.get(key)
    if value is None:
        if required:
            raise ctx.parse_error(f"missing required section {key!r}")
        return {}
    if not isinstance(value, dict):
        raise ctx.parse_error(f"section {key!r} must be an object", key)
    return value


def _number(ctx: _Ctx, sec: dict, key: str, path: tuple[str, ...], allow_expr: bool = False):
    value = sec[key]
    if isinstance(value, bool):
        raise ctx.parse_error(f"{key!r} must be a number", *path, key)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            parsed = parse_expression(value)
        except ValueError as exc:
            raise ctx.parse_error(str(exc), *path, key) from None
        if not allow_expr and not isinstance(parsed, float):
            raise ctx.parse_error(f"{key!r} must be constant for this model", *path, key)
        return parsed
    raise ctx.parse_error(f"{key!r} must be a number or expression", *path, key)


def _model_params(ctx: _Ctx, sec: dict, kind: str) -> dict:
    required, optional, timed = MODEL_SCHEMAS[kind]
    known = set(required) | set(optional) | {"kind"}
    for key in sec:
        if key not in known:
            raise ctx.parse_error(f"unknown parameter {key!r} for model {kind!r}", "model", key)
    params: dict = {}
    for key in required:
        if key not in sec:
            raise ctx.parse_error(f"model {kind!r} requires parameter {key!r}", "model")
        params[key] = _number(ctx, sec, key, ("model",), allow_expr=key in timed)
    for key, default in optional.items():
        params[key] = _number(ctx, sec, key, ("model",)) if sec.get(key) is not None else default
    return params


def _build_model(ctx: _Ctx, kind: str, p: dict, c: PhysConstants):
    def bath():
        return BathSpec(p["temperature"], p["q2_eq"], p["p2_eq"])

    if kind == "kg":
        return KGCoefficients(p["gamma_q"], p["gamma_p"], p["D_q"], p["D_p"], M=p["M"],
                              omega0=p["omega0"])
    if kind == "kg_thermal":
        return ThermalKGModel(p["gamma_q"], p["gamma_p"], bath(), M=p["M"], omega0=p["omega0"])
    if kind == "ohmic":
        return OhmicModel(p["gamma"], p["omega0"], bath(), M=p["M"])
    if kind == "drude":
        return DrudeModel(p["alpha"], p["eta_d"], bath(), M=p["M"], omega0=p["omega0"])
    if kind == "weak_coupling":
        return WeakCouplingModel(p["gamma_s"], p["gamma_c"], p["K_s"], p["K_c"], p["omega0"],
                                 M=p["M"])
    if kind == "agarwal":
        return AgarwalModel(p["kappa"], p["omega0"], p["temperature"], M=p["M"])
    if kind == "weidlich_haake":
        return WeidlichHaakeModel(p["gamma_c"], p["omega0"], p["temperature"], M=p["M"],
                                  gamma_s=p["gamma_s"])
    if kind == "lindblad":
        params = LindbladParams(p["m"], p["omega"], p["lam"], p["mu"], p["D_pp"], p["D_qq"],
                                p["D_pq"])
        check = lindblad_constraint_check(params, c)
        if not check.passed:
            raise ctx.validation_error(
                "constraint 'ineq' violated: D_pp*D_qq - D_pq^2 >= hbar^2 lambda^2/4 "
                f"(residual {check.residual:.6e}; failed: {', '.join(check.failures)})",
                "model", "D_pq")
        return params
    if not p["omega"] > abs(p["mu"]):
        raise ctx.validation_error(
            "constraint 'omega > |mu|' violated: purity-preserving diffusion needs an "
            "underdamped model", "model", "mu")
    return purity_preserving_params(p["lam"], p["mu"], p["omega"], p["m"], c)


def _initial_state(ctx: _Ctx, sec: dict, model, c: PhysConstants, seed: int) -> GaussianState:
    kind = sec.get("kind", "moments")
    path = ("initial_state",)

    def get(key, default=None):
        if key not in sec:
            if default is None:
                raise ctx.parse_error(f"initial_state {kind!r} requires {key!r}", *path)
            return default
        return _number(ctx, sec, key, path)

    try:
        if kind == "moments":
            state = GaussianState(get("mean_q", 0.0), get("mean_p", 0.0), get("var_qq"),
                                  get("var_pp"), get("cov_pq"))
            if uncertainty_class(state, c) is UncertaintyClass.VIOLATING:
                raise ctx.validation_error(
                    "initial_state: moments violate the uncertainty bound", *path)
            return state
        if kind == "ccs":
            return ccs_state(get("r"), get("eta"), get("mean_q", 0.0), get("mean_p", 0.0), c)
        if kind == "random_ccs":
            rng = np.random.default_rng(seed)
            r_max, lo, hi = get("r_max", 0.9), get("eta_min", 0.5), get("eta_max", 2.0)
            r = float(rng.uniform(-r_max, r_max))
            eta = float(rng.uniform(lo, hi))
            return ccs_state(r, eta, get("mean_q", 0.0), get("mean_p", 0.0), c)
        if kind == "auto":
            state = purity_preserving_initial_state(model, c)
            if state is None:
                raise ctx.validation_error(
                    "initial_state 'auto': this model has no purity-preserving state", *path)
            return state.with_means(get("mean_q", 0.0), get("mean_p", 0.0))
    except ConfigValidationError:
        raise
    except DampedOscillatorError as exc:
        raise ctx.validation_error(f"initial_state: {exc}", *path) from None
    raise ctx.parse_error(f"unknown initial_state kind {kind!r}", *path, "kind")


def parse_config(text: str, source: str = "<config>", seed: int | None = None) -> ScenarioConfig:
    """Parse and validate a scenario document.

    Raises :class:`ConfigParseError` for malformed or incomplete documents and
    :class:`ConfigValidationError` for physical constraint violations; both
    messages start with ``source:line``.
    """
    ctx = _Ctx(text, source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"{source}:{exc.lineno}: malformed JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigParseError(f"{source}:1: top level must be an object")

    seed = int(doc.get("seed", 0)) if seed is None else int(seed)
    name = doc.get("name") or Path(source).stem
    if not re.fullmatch(r"[A-Za-z0-9_.-]+", str(name)):
        raise ctx.parse_error(f"name {name!r} must be a plain file-name token", "name")

    const_sec = _section(ctx, doc, "constants", required=False)
    try:
        c = PhysConstants(float(const_sec.get("hbar", 1.0)), float(const_sec.get("kB", 1.0)))
    except (DampedOscillatorError, TypeError, ValueError) as exc:
        raise ctx.validation_error(f"constants: {exc}", "constants") from None

    model_sec = _section(ctx, doc, "model")
    kind = model_sec.get("kind")
    if kind not in MODEL_SCHEMAS:
        raise ctx.parse_error(f"unknown model kind {kind!r}; see 'dampedosc catalog'",
                              "model", "kind")
    params = _model_params(ctx, model_sec, kind)
    try:
        model = _build_model(ctx, kind, params, c)
    except ConfigValidationError:
        raise
    except DampedOscillatorError as exc:
        raise ctx.validation_error(f"model: {exc}", "model") from None

    state = _initial_state(ctx, _section(ctx, doc, "initial_state"), model, c, seed)

    time_sec = _section(ctx, doc, "time")
    for key in ("t_end", "sample_count"):
        if key not in time_sec:
            raise ctx.parse_error(f"time section requires {key!r}", "time")
    t_end = _number(ctx, time_sec, "t_end", ("time",))
    sample_count = time_sec["sample_count"]
    if not isinstance(sample_count, int) or isinstance(sample_count, bool):
        raise ctx.parse_error("'sample_count' must be an integer", "time", "sample_count")
    if not t_end > 0:
        raise ctx.validation_error("'t_end' must be positive", "time", "t_end")
    if sample_count < 2:
        raise ctx.validation_error("'sample_count' must be at least 2", "time", "sample_count")

    int_sec = _section(ctx, doc, "integrator", required=False)
    method = int_sec.get("method", "rk4")
    try:
        if method == "rk4":
            dt = _number(ctx, int_sec, "dt", ("integrator",)) if int_sec.get("dt") is not None \
                else None
            opts = IntegratorOptions("rk4", dt=dt)
        elif method == "rk45":
            rel = _number(ctx, int_sec, "rel_tol", ("integrator",)) if "rel_tol" in int_sec \
                else 1e-9
            opts = IntegratorOptions("rk45", rel_tol=rel)
        else:
            raise ctx.parse_error(f"unknown integrator method {method!r}", "integrator", "method")
    except DampedOscillatorError as exc:
        if isinstance(exc, ConfigParseError):
            raise
        raise ctx.validation_error(f"integrator: {exc}", "integrator") from None

    outputs = doc.get("outputs", list(OUTPUT_KINDS))
    if not isinstance(outputs, list) or any(o not in OUTPUT_KINDS for o in outputs):
        raise ctx.parse_error(f"'outputs' must be a list drawn from {OUTPUT_KINDS}", "outputs")

    return ScenarioConfig(name=str(name), model_kind=kind, model=model, constants=c,
                          initial_state=state,
                          initial_kind=doc["initial_state"].get("kind", "moments"), t_end=t_end,
                          sample_count=sample_count, integrator=opts, outputs=tuple(outputs),
                          seed=seed)


# --------------------------------------------------------------------------
# outputs


def _fmt(x: float) -> str:
    return "%.16e" % x


def emit_trajectory_csv(trajectory: Trajectory) -> bytes:
    """CSV bytes with :data:`CSV_COLUMNS`; LF newlines, 17 significant digits."""
    if len(trajectory) == 0:
        raise ValueError("empty trajectory")
    columns = [trajectory.column(name) for name in CSV_COLUMNS]
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for row in zip(*columns):
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue().encode("ascii")


def _purity_report_text(cfg: ScenarioConfig, report) -> str:
    lines = [
        f"scenario: {cfg.name}",
        f"condition: {report.condition.kind.value}",
        f"verdict: {report.verdict.value}",
        f"max_abs_residual: {_fmt(report.max_abs_residual)}",
        f"tolerance: {_fmt(report.tolerance)}",
        "t,residual",
    ]
    lines += [f"{_fmt(t)},{_fmt(r)}" for t, r in zip(report.times, report.residuals)]
    return "\n".join(lines) + "\n"


def _entropy_audit_text(audit) -> str:
    lines = ["t,rate_formula,rate_fd,gap"]
    lines += [f"{_fmt(r.t)},{_fmt(r.rate_formula)},{_fmt(r.rate_fd)},{_fmt(r.gap)}"
              for r in audit.records]
    return "\n".join(lines) + "\n"


def _summary_text(cfg: ScenarioConfig, traj: Trajectory, report, audit) -> str:
    first, last = traj.diagnostics[0], traj.diagnostics[-1]
    rows = [("nu", "nu"), ("S", "S"), ("S_l", "S_l"), ("E", "E_fluct"), ("<H>", "E_total")]
    lines = [
        f"scenario: {cfg.name}",
        f"model: {cfg.model_kind}",
        f"initial_state: {cfg.initial_kind}",
        f"samples: {cfg.sample_count}",
        f"t_end: {_fmt(cfg.t_end)}",
        f"{'quantity':<10}{'initial':>26}{'final':>26}",
    ]
    for label, attr in rows:
        lines.append(f"{label:<10}{_fmt(getattr(first, attr)):>26}{_fmt(getattr(last, attr)):>26}")
    lines.append(f"purity_verdict: {report.verdict.value}")
    lines.append(f"max_abs_purity_residual: {_fmt(report.max_abs_residual)}")
    gap = "n/a" if audit is None else _fmt(audit.max_gap)
    lines.append(f"max_entropy_rate_audit_gap: {gap}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RunResult:
    name: str
    exit_code: int
    summary: str
    message: str = ""


def run_scenario(cfg: ScenarioConfig, out_dir: Path | None = None) -> RunResult:
    """Integrate ``cfg`` and write its requested outputs to ``out_dir/<name>/``."""
    t_grid = np.linspace(0.0, cfg.t_end, cfg.sample_count)
    traj = integrate(cfg.model, cfg.initial_state, t_grid, cfg.integrator, cfg.constants)
    report = audit_purity(traj)
    audit = rate_fd_audit(traj) if cfg.sample_count >= 3 else None
    summary = _summary_text(cfg, traj, report, audit)
    if out_dir is not None:
        target = Path(out_dir) / cfg.name
        target.mkdir(parents=True, exist_ok=True)
        if "trajectory_csv" in cfg.outputs:
            (target / "trajectory.csv").write_bytes(emit_trajectory_csv(traj))
        if "purity_report" in cfg.outputs:
            (target / "purity_report.txt").write_bytes(
                _purity_report_text(cfg, report).encode("ascii"))
        if "entropy_audit" in cfg.outputs and audit is not None:
            (target / "entropy_audit.csv").write_bytes(_entropy_audit_text(audit).encode("ascii"))
        if "summary" in cfg.outputs:
            (target / "summary.txt").write_bytes(summary.encode("ascii"))
    return RunResult(cfg.name, EXIT_OK, summary)


def _run_path(path: str, out_dir: str | None, seed: int | None) -> RunResult:
    """Load, validate and run one config; map every failure to an exit code."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        return RunResult(path, EXIT_IO, "", f"{path}: cannot read config: {exc}")
    try:
        cfg = parse_config(text, path, seed)
    except (ConfigParseError, ConfigValidationError) as exc:
        return RunResult(path, EXIT_VALIDATION, "", str(exc))
    try:
        return run_scenario(cfg, Path(out_dir) if out_dir else None)
    except OSError as exc:
        return RunResult(cfg.name, EXIT_IO, "", f"{cfg.name}: output failed: {exc}")
    except (DampedOscillatorError, ArithmeticError, ValueError) as exc:
        return RunResult(cfg.name, EXIT_RUNTIME, "",
                         f"{cfg.name}: {type(exc).__name__}: {exc}")


def _catalog_text() -> str:
    lines = ["models:"]
    for kind, (required, optional, timed) in MODEL_SCHEMAS.items():
        opt = ", ".join(f"{k}={v}" for k, v in optional.items())
        line = f"  {kind}: required [{', '.join(required)}]"
        if opt:
            line += f"; optional [{opt}]"
        if timed:
            line += f"; may depend on t: [{', '.join(timed)}]"
        lines.append(line)
    lines.append("initial_state kinds:")
    lines += [f"  {k}: {v}" for k, v in STATE_SCHEMAS.items()]
    lines.append("expressions: numbers, t, + - * /, unary minus, exp, sin, cos, coth")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dampedosc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="integrate scenarios and write outputs")
    run.add_argument("--config", action="append", required=True, metavar="PATH")
    run.add_argument("--out", metavar="DIR", help="output root; one subdirectory per scenario")
    run.add_argument("--jobs", type=int, default=1, metavar="N")
    run.add_argument("--seed", type=int, default=None, metavar="N",
                     help="seed for random_ccs initial states (overrides the config)")
    run.add_argument("--quiet", action="store_true")
    val = sub.add_parser("validate", help="parse and validate configs only")
    val.add_argument("--config", action="append", required=True, metavar="PATH")
    sub.add_parser("catalog", help="list model variants and their parameters")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "catalog":
        sys.stdout.write(_catalog_text())
        return EXIT_OK
    if args.command == "validate":
        code = EXIT_OK
        for path in args.config:
            try:
                parse_config(Path(path).read_text(), path)
                print(f"{path}: ok")
            except OSError as exc:
                print(f"{path}: cannot read config: {exc}", file=sys.stderr)
                code = max(code, EXIT_IO)
            except (ConfigParseError, ConfigValidationError) as exc:
                print(str(exc), file=sys.stderr)
                code = max(code, EXIT_VALIDATION)
        return code

    jobs = max(1, args.jobs)
    calls = [(p, args.out, args.seed) for p in args.config]
    if jobs > 1 and len(calls) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_path, *zip(*calls)))
    else:
        results = [_run_path(*call) for call in calls]
    code = EXIT_OK
    for res in results:
        if res.exit_code != EXIT_OK:
            print(res.message, file=sys.stderr)
        elif not args.quiet:
            sys.stdout.write(res.summary)
        code = max(code, res.exit_code)
    return code


if __name__ == "__main__":
    sys.exit(main())
