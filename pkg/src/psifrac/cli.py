"""Command-line entry point ``psifrac``.

Subcommands::

    psifrac ml --alpha 0.5 --z 1
    psifrac oracle power1d --alpha 0.5 --delta 2.5 --x 1
    psifrac integrate --config problem.json --f "x*y" --out int.csv
    psifrac differentiate --config problem.json --u "x^2*y" --out d.csv
    psifrac gronwall --alpha 0.7 --n 256 --out gronwall.json
    psifrac solve --config problem.json --grid 128x128 --tol 1e-8 --out sol.csv
    psifrac stability uh --config problem.json --epsilon 0.01 --draws 20 --seed 7 --out report.json
    psifrac stability uhr --config problem.json --weight-expr "1+x+y" --out report.json

Exit codes: 0 success, 1 certificate failed, 2 configuration or validation
error, 3 numerical failure (no convergence). Errors print one line
``psifrac: error[<code>] <kind>: <message>`` on standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from psifrac import __version__
from psifrac.config import ProblemConfig, load_config
from psifrac.darboux import picard_solve, residual
from psifrac.exceptions import ConvergenceError, PsifracError
from psifrac.exprdsl import as_function
from psifrac.fracops import (
    frac_integral_2d,
    frac_integral_axis,
    hilfer_partial_2d,
    reduce_special_case,
)
from psifrac.grid import GridFn, graded_nodes
from psifrac.gronwall import picard_1d, verify_gronwall
from psifrac.oracle import PowerProfile, power_integral_1d, power_integral_nd, unit_integral_2d
from psifrac.psi import builtin
from psifrac.specfun import DEFAULT_REL_TOL, gamma, mittag_leffler
from psifrac.stability import (
    RassiasWeight,
    random_perturbations,
    uh_certify,
    uhr_certify,
)

__all__ = ["main", "run", "EXIT_OK", "EXIT_CERTIFICATE", "EXIT_CONFIG", "EXIT_NUMERICAL"]

EXIT_OK = 0
EXIT_CERTIFICATE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on its own; route through the common handler
    def error(self, message):
        raise _UsageError(message)


# -- output -------------------------------------------------------------------


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def grid_csv(fn: GridFn) -> str:
    """``x,y,value`` rows with 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "value"])
    g = fn.grid
    for i, x in enumerate(g.x):
        for j, y in enumerate(g.y):
            w.writerow([_fmt(x), _fmt(y), _fmt(fn.values[i, j])])
    return buf.getvalue()


def grid_json(fn: GridFn) -> dict:
    return {"x": fn.grid.x.tolist(), "y": fn.grid.y.tolist(), "values": fn.values.tolist()}


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_report(payload: dict) -> str:
    """Deterministic JSON text; only the ``timestamp`` field varies between runs."""
    doc = dict(_json_safe(payload))
    doc["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    doc["version"] = __version__
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_grid(fn: GridFn, args) -> None:
    if args.format == "json":
        _emit(json.dumps(grid_json(fn)) + "\n", args.out)
    else:
        _emit(grid_csv(fn), args.out)


# -- shared option groups -------------------------------------------------------


def _psi_from_args(name: str, params) -> object:
    return builtin(name, params or ())


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        nx, ny = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise _UsageError(f"--grid expects NXxNY, e.g. 128x128, got {text!r}") from None
    return nx, ny


def _config(args) -> ProblemConfig:
    cfg = load_config(args.config) if args.config else ProblemConfig.from_dict({})
    if getattr(args, "grid", None):
        nx, ny = _parse_grid(args.grid)
        cfg.set("grid.nx", nx)
        cfg.set("grid.ny", ny)
    if getattr(args, "tol", None) is not None:
        cfg.set("tol", args.tol)
    if getattr(args, "max_iter", None) is not None:
        cfg.set("max_iter", args.max_iter)
    return ProblemConfig.from_dict(cfg.to_dict())


# -- subcommands --------------------------------------------------------------


def cmd_ml(args) -> int:
    print(repr(mittag_leffler(args.alpha, args.z, args.rel_tol)))
    return EXIT_OK


def cmd_oracle(args) -> int:
    psi = _psi_from_args(args.psi, args.psi_param)
    if args.kind == "power1d":
        value = power_integral_1d(args.alpha, args.delta, psi, args.a, args.x)
    elif args.kind == "unit2d":
        value = unit_integral_2d((args.alpha1, args.alpha2), psi, args.x, args.y)
    elif args.kind == "powernd":
        value = power_integral_nd(args.alphas, PowerProfile(tuple(args.deltas), psi), args.at)
    else:
        value = gamma(args.x)
    print(repr(value))
    return EXIT_OK


def cmd_integrate(args) -> int:
    cfg = _config(args)
    grid, psi, order = cfg.grid(), cfg.psi(), cfg.order()
    u = grid.sample(as_function(args.f, ("x", "y")))
    if args.axis == "both":
        out = frac_integral_2d(u, psi, order)
    else:
        axis = 0 if args.axis == "x" else 1
        out = frac_integral_axis(u, psi, order.alpha[axis], axis)
    _emit_grid(out, args)
    return EXIT_OK


def cmd_differentiate(args) -> int:
    cfg = _config(args)
    grid, psi, order = cfg.grid(), cfg.psi(), cfg.order()
    u = grid.sample(as_function(args.u, ("x", "y")))
    if args.special == "classical":
        out = reduce_special_case("classical")(u)
    elif args.special:
        out = reduce_special_case(args.special)(u, psi, order.alpha1, order.alpha2)
    else:
        out = hilfer_partial_2d(u, psi, order)
    _emit_grid(out, args)
    return EXIT_OK


def cmd_gronwall(args) -> int:
    psi = _psi_from_args(args.psi, args.psi_param)
    ts = graded_nodes(args.a, args.t_max, args.n, args.grading)
    lam = 1.0 / gamma(args.alpha) if args.lam is None else args.lam
    u = picard_1d(args.v, lam, args.alpha, psi, ts)
    # u = v + lam I u  is the hypothesis with h = lam / Gamma(alpha)
    report = verify_gronwall(u, args.v, lam / gamma(args.alpha), args.alpha, psi, args.a, ts)
    payload = {
        "command": "gronwall",
        "config": {
            "alpha": args.alpha,
            "psi": psi.to_config(),
            "a": args.a,
            "t_max": args.t_max,
            "n": args.n,
            "grading": args.grading,
            "v": args.v,
            "lam": lam,
        },
        "pass": report.passed,
        "report": report.to_dict(),
    }
    _emit(dump_report(payload), args.out)
    return EXIT_OK if report.passed else EXIT_CERTIFICATE


def cmd_solve(args) -> int:
    cfg = _config(args)
    p, grid = cfg.problem(), cfg.grid()
    tol, max_iter = float(cfg.data["tol"]), int(cfg.data["max_iter"])
    sol, log = picard_solve(p, grid, tol, max_iter)
    if args.log:
        payload = {
            "command": "solve",
            "config": cfg.to_dict(),
            "log": log.to_dict(),
            "residual": residual(p, sol, tol).to_dict(),
        }
        Path(args.log).write_text(dump_report(payload))
    if not log.converged:
        raise ConvergenceError(
            f"no convergence in {max_iter} sweeps, last weighted distance {log.final_distance:.3e}"
        )
    component = {"u": sol.u, "u1": sol.u1, "u2": sol.u2}[args.component]
    _emit_grid(component, args)
    return EXIT_OK


def cmd_stability(args) -> int:
    cfg = _config(args)
    st = cfg.data["stability"]
    if args.epsilon is not None:
        st["epsilon"] = args.epsilon
    if args.draws is not None:
        st["draws"] = args.draws
    if args.seed is not None:
        st["seed"] = args.seed
    if args.mode == "uhr" and args.weight_expr is not None:
        cfg.data["uhr"]["weight"] = args.weight_expr
    if args.ml_order is not None:
        cfg.data["ml_order"] = args.ml_order
    cfg = ProblemConfig.from_dict(cfg.to_dict())
    p, grid = cfg.problem(), cfg.grid()
    tol, max_iter = float(cfg.data["tol"]), int(cfg.data["max_iter"])
    draws, seed = int(st["draws"]), int(st["seed"])
    ml_order = cfg.data["ml_order"]
    if args.mode == "uh":
        eps = float(st["epsilon"])
        perts = random_perturbations("uh", grid, draws, seed, epsilon=eps)
        report = uh_certify(p, eps, perts, grid, tol, max_iter=max_iter, ml_order=ml_order)
    else:
        u = cfg.data["uhr"]
        if not u.get("weight"):
            raise PsifracError("uhr mode needs a weight expression (--weight-expr or uhr.weight)")
        w = RassiasWeight(u["weight"], u.get("lambdas"))
        perts = random_perturbations("uhr", grid, draws, seed, weight=w)
        lf = cfg.data["Lf"]
        report = uhr_certify(
            p,
            w,
            perts,
            grid,
            tol,
            psi_sup=u.get("psi_sup"),
            Lf_field=lf if isinstance(lf, str) else None,
            max_iter=max_iter,
            ml_order=ml_order,
            c2c3=u.get("c2c3", "paper"),
        )
    payload = {
        "command": f"stability {args.mode}",
        "config": cfg.to_dict(),
        "seed": seed,
        "pass": report.passed,
        "report": report.to_dict(),
    }
    _emit(dump_report(payload), args.out)
    return EXIT_OK if report.passed else EXIT_CERTIFICATE


# -- parser -------------------------------------------------------------------


def _add_psi(sp) -> None:
    sp.add_argument("--psi", default="identity", help="builtin weight function name")
    sp.add_argument("--psi-param", type=float, nargs="*", default=None, help="builtin parameters")


def _add_config(sp, *, solver: bool = False) -> None:
    sp.add_argument("--config", default=None, help="problem configuration JSON")
    sp.add_argument("--grid", default=None, help="grid size NXxNY (overrides the config)")
    if solver:
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--max-iter", type=int, default=None)
    sp.add_argument("--out", default=None, help="output file (default: standard output)")


def _add_format(sp) -> None:
    sp.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="psifrac", description="psi-Hilfer fractional operators and stability certificates")
    ap.add_argument("--version", action="version", version=f"psifrac {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("ml", help="one-parameter Mittag-Leffler function")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--z", type=float, required=True)
    sp.add_argument("--rel-tol", type=float, default=DEFAULT_REL_TOL)
    sp.set_defaults(func=cmd_ml)

    sp = sub.add_parser("oracle", help="closed-form integrals of power profiles")
    osub = sp.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    o = osub.add_parser("power1d")
    o.add_argument("--alpha", type=float, required=True)
    o.add_argument("--delta", type=float, required=True)
    o.add_argument("--a", type=float, default=0.0)
    o.add_argument("--x", type=float, required=True)
    _add_psi(o)
    o = osub.add_parser("unit2d")
    o.add_argument("--alpha1", type=float, required=True)
    o.add_argument("--alpha2", type=float, required=True)
    o.add_argument("--x", type=float, required=True)
    o.add_argument("--y", type=float, required=True)
    _add_psi(o)
    o = osub.add_parser("powernd")
    o.add_argument("--alphas", type=float, nargs="+", required=True)
    o.add_argument("--deltas", type=float, nargs="+", required=True)
    o.add_argument("--at", type=float, nargs="+", required=True)
    _add_psi(o)
    o = osub.add_parser("gamma")
    o.add_argument("--x", type=float, required=True)
    _add_psi(o)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("integrate", help="fractional integral of a field on the config grid")
    _add_config(sp)
    _add_format(sp)
    sp.add_argument("--f", required=True, help="integrand expression in x, y")
    sp.add_argument("--axis", choices=("both", "x", "y"), default="both")
    sp.set_defaults(func=cmd_integrate)

    sp = sub.add_parser("differentiate", help="mixed Hilfer derivative of a field")
    _add_config(sp)
    _add_format(sp)
    sp.add_argument("--u", required=True, help="field expression in x, y")
    sp.add_argument("--special", choices=("rl_partial", "caputo_partial", "classical"), default=None)
    sp.set_defaults(func=cmd_differentiate)

    sp = sub.add_parser("gronwall", help="verify the Gronwall bound on u = v + lam I u")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--a", type=float, default=0.0)
    sp.add_argument("--t-max", type=float, default=1.0)
    sp.add_argument("--n", type=int, default=256)
    sp.add_argument("--grading", type=float, default=2.0)
    sp.add_argument("--v", type=float, default=1.0)
    sp.add_argument("--lam", type=float, default=None, help="default 1 / Gamma(alpha)")
    sp.add_argument("--out", default=None)
    _add_psi(sp)
    sp.set_defaults(func=cmd_gronwall)

    sp = sub.add_parser("solve", help="Picard solve of the Darboux problem")
    _add_config(sp, solver=True)
    _add_format(sp)
    sp.add_argument("--component", choices=("u", "u1", "u2"), default="u")
    sp.add_argument("--log", default=None, help="write the iteration log JSON here")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("stability", help="Ulam-Hyers(-Rassias) certificate")
    sp.add_argument("mode", choices=("uh", "uhr"))
    _add_config(sp, solver=True)
    sp.add_argument("--epsilon", type=float, default=None)
    sp.add_argument("--draws", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--weight-expr", default=None)
    sp.add_argument("--ml-order", choices=("min", "max", "axis"), default=None)
    sp.set_defaults(func=cmd_stability)
    return ap


def _fail(code: int, kind: str, message: str) -> int:
    line = " ".join(str(message).split())
    print(f"psifrac: error[{code}] {kind}: {line}", file=sys.stderr)
    return code


def run(argv=None) -> int:
    """Run the tool and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        return _fail(EXIT_CONFIG, "usage", str(exc))
    except ConvergenceError as exc:
        return _fail(EXIT_NUMERICAL, "convergence", str(exc))
    except PsifracError as exc:
        return _fail(EXIT_CONFIG, type(exc).__name__, str(exc))
    except (ValueError, KeyError, TypeError) as exc:
        return _fail(EXIT_CONFIG, type(exc).__name__, str(exc))
    except FloatingPointError as exc:
        return _fail(EXIT_NUMERICAL, "numerical", str(exc))


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
