"""Command-line interface.

Usage::

    mescale repr --model model.json
    mescale psi --model model.json
    mescale scale --model model.json --out table.csv
    mescale verify --model model.json --paths 100000
    mescale simulate --model model.json --seed 7 --paths 1000000

Exit codes: 0 success, 1 invalid model, 2 solver failure, 3 verification
outside tolerance, 4 I/O or parse error. Failures print a single
``ERROR <code>: <reason>`` line on standard error.
"""

import argparse
import io
import json
import sys
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ModelError, ScaleFnError
from .levy import LevyModel
from .medist import MERep, RationalLST, me_from_rational, validate
from .oracle.inversion import laplace_invert_scale
from .oracle.montecarlo import SimConfig, mc_hitting_probabilities
from .solver import DEFAULT_MAX_ITER, DEFAULT_TOL, solve

EXIT_OK = 0
EXIT_MODEL = 1
EXIT_SOLVER = 2
EXIT_VERIFY = 3
EXIT_IO = 4

CSV_FMT = "%.17g"


class ParseError(Exception):
    """Malformed input: unreadable file, bad JSON or wrong field types."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(message)


@dataclass
class ModelFile:
    jump: MERep
    rational: Optional[RationalLST]
    d: float
    sigma: float
    lam: float
    q: float
    grid: np.ndarray
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    mc: dict = field(default_factory=dict)
    inversion_terms: int = 50
    rtol: float = 1e-6

    def model(self):
        return LevyModel(d=self.d, sigma=self.sigma, lam=self.lam, jump=self.jump)


def _number(obj, key, default=None, kind=float):
    if key not in obj:
        if default is None:
            raise ParseError(f"missing field '{key}'")
        return default
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ParseError(f"field '{key}' must be a number")
    if kind is int and float(val) != int(val):
        raise ParseError(f"field '{key}' must be an integer")
    return kind(val)


def _array(obj, key):
    if key not in obj:
        raise ParseError(f"missing field '{key}'")
    try:
        return np.asarray(obj[key], dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"field '{key}' must be a numeric array") from None


def parse_model(doc):
    """Build a :class:`ModelFile` from a decoded JSON document."""
    if not isinstance(doc, dict):
        raise ParseError("model file must hold a JSON object")
    jump = doc.get("jump")
    if not isinstance(jump, dict):
        raise ParseError("missing object 'jump'")
    specs = [k for k in ("rational", "me") if k in jump]
    if len(specs) != 1:
        raise ModelError("jump must hold exactly one of 'rational' or 'me'")
    rational = None
    if specs[0] == "rational":
        entry = jump["rational"]
        a, b = _array(entry, "a"), _array(entry, "b")
        if "p" in entry and _number(entry, "p", kind=int) != a.size:
            raise ModelError("p does not match the length of 'a'")
        rational = RationalLST(den=a, num=b)
        rep = me_from_rational(rational)
    else:
        entry = jump["me"]
        t = _array(entry, "t") if "t" in entry else None
        rep = MERep(_array(entry, "alpha"), _array(entry, "T"), t)
    grid = doc.get("grid", {})
    n_points = _number(grid, "n_points", 101, int)
    if n_points < 1:
        raise ModelError("grid n_points must be at least 1")
    x_min = _number(grid, "x_min", 0.0)
    x_max = _number(grid, "x_max", 5.0)
    if x_min < 0 or x_max < x_min:
        raise ModelError("grid needs 0 <= x_min <= x_max")
    solver = doc.get("solver", {})
    oracle = doc.get("oracle", {})
    mc = dict(oracle.get("mc", {}))
    unknown = set(mc) - {"seed", "n_paths", "max_stages", "stream_id", "chunk_size"}
    if unknown:
        raise ParseError(f"unknown oracle.mc fields: {sorted(unknown)}")
    return ModelFile(
        jump=rep,
        rational=rational,
        d=_number(doc, "d"),
        sigma=_number(doc, "sigma", 0.0),
        lam=_number(doc, "lambda"),
        q=_number(doc, "q", 0.0),
        grid=np.linspace(x_min, x_max, n_points),
        tol=_number(solver, "tol", DEFAULT_TOL),
        max_iter=_number(solver, "max_iter", DEFAULT_MAX_ITER, int),
        mc=mc,
        inversion_terms=_number(oracle.get("inversion", {}), "terms", 50, int),
        rtol=_number(oracle, "rtol", 1e-6),
    )


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_model(doc)


def _sim_config(mf, args):
    cfg = SimConfig(**mf.mc)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.paths is not None:
        cfg = replace(cfg, n_paths=args.paths)
    return cfg


def _solve(mf, args):
    tol = args.tol if args.tol is not None else mf.tol
    max_iter = args.max_iter if args.max_iter is not None else mf.max_iter
    m = mf.model()
    return m, solve(m, mf.q, tol=tol, max_iter=max_iter)


def _write_csv(out, header, rows):
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(CSV_FMT % v for v in row) + "\n")


def _as_list(a):
    return np.asarray(a).tolist()


def cmd_repr(mf, args, out, log):
    rep = mf.jump
    report = validate(rep)
    doc = {"alpha": _as_list(rep.alpha), "T": _as_list(rep.T), "t": _as_list(rep.t),
           "phase_type": rep.is_phase_type(), "min_density": report.min_density}
    json.dump(doc, out, indent=2)
    out.write("\n")
    if not report.ok:
        log(f"warning: density dips to {report.min_density:.3e} on the validation grid")
    return EXIT_OK


def cmd_psi(mf, args, out, log):
    m, sol = _solve(mf, args)
    doc = {"regime": "bounded" if m.bounded_variation else "unbounded",
           "phi_q": sol.phi, "psi_prime": sol.slope, "Psi": _as_list(sol.Psi),
           "G": _as_list(sol.G), "nu": _as_list(sol.nu), "iterations": sol.iterations}
    if m.bounded_variation:
        doc["residual"] = sol.residual
    else:
        doc.update(a=sol.a, b=_as_list(sol.b), omega=sol.omega, eta=sol.eta,
                   residual_scalar=sol.residuals[0], residual_vector=sol.residuals[1])
    json.dump(doc, out, indent=2)
    out.write("\n")
    log(f"converged in {sol.iterations} iterations")
    return EXIT_OK


def cmd_scale(mf, args, out, log):
    _, sol = _solve(mf, args)
    x = mf.grid
    cols = (x, sol.scale_function(x), sol.scale_derivative(x), sol.scale_integral(x),
            sol.hitting_probability(x))
    _write_csv(out, ("x", "W", "Wprime", "Wint", "hitprob"), zip(*cols))
    return EXIT_OK


def cmd_simulate(mf, args, out, log):
    m = mf.model()
    cfg = _sim_config(mf, args)
    est = mc_hitting_probabilities(m, mf.q, mf.grid, cfg)
    rows = [(x, e.mean, e.stderr, e.n, e.truncated, e.bias_bound)
            for x, e in zip(mf.grid, est)]
    _write_csv(out, ("x", "mean", "stderr", "n", "truncated", "bias_bound"), rows)
    return EXIT_OK


def cmd_verify(mf, args, out, log):
    m, sol = _solve(mf, args)
    xs = mf.grid[mf.grid > 0]
    failed = False
    lines = []
    if xs.size:
        W = sol.scale_function(xs)
        inv = np.array([laplace_invert_scale(m, mf.q, x, terms=mf.inversion_terms)
                        for x in xs])
        dev = float(np.max(np.abs(inv - W) / np.maximum(np.abs(W), 1e-300)))
        ok = dev <= mf.rtol
        failed |= not ok
        lines.append(f"inversion max_rel_dev {dev:.3e} tol {mf.rtol:.1e} "
                     f"{'PASS' if ok else 'FAIL'}")
    if args.paths is not None or mf.mc:
        cfg = _sim_config(mf, args)
        est = mc_hitting_probabilities(m, mf.q, mf.grid, cfg)
        exact = sol.hitting_probability(mf.grid)
        z = max(abs(e.mean - h) / max(3.0 * e.stderr + e.bias_bound, 1e-300)
                for e, h in zip(est, exact))
        ok = all(e.within(h) for e, h in zip(est, exact))
        failed |= not ok
        lines.append(f"montecarlo max_dev_over_3se {z:.3f} n {cfg.n_paths} "
                     f"{'PASS' if ok else 'FAIL'}")
    res = sol.residual
    ok = res <= 1e-10
    failed |= not ok
    lines.append(f"residual {res:.3e} tol 1.0e-10 {'PASS' if ok else 'FAIL'}")
    out.write("\n".join(lines) + "\n")
    return EXIT_VERIFY if failed else EXIT_OK


COMMANDS = {
    "repr": (cmd_repr, "print the standardized ME representation"),
    "psi": (cmd_psi, "solve the fixed point and print Psi, G, nu and residuals"),
    "scale": (cmd_scale, "tabulate W, W', int W and the hitting probability"),
    "verify": (cmd_verify, "compare the solver with the independent oracles"),
    "simulate": (cmd_simulate, "Monte Carlo hitting probabilities with standard errors"),
}


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--model", required=True, help="JSON model file")
    common.add_argument("--out", help="write data here instead of stdout")
    common.add_argument("--tol", type=float, help="fixed-point tolerance")
    common.add_argument("--max-iter", type=int, help="fixed-point iteration cap")
    common.add_argument("--seed", type=int, help="Monte Carlo seed")
    common.add_argument("--paths", type=int, help="Monte Carlo path count")
    common.add_argument("--quiet", action="store_true", help="suppress diagnostics")
    parser = _Parser(prog="mescale", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def run(argv=None, stdout=None, stderr=None):
    """Execute one command and return its exit code."""
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr

    def fail(code, msg):
        stderr.write(f"ERROR {code}: {msg}\n")
        return code

    try:
        args = build_parser().parse_args(argv)
    except ParseError as exc:
        return fail(EXIT_IO, str(exc))

    def log(msg):
        if not args.quiet:
            stderr.write(msg + "\n")

    fn = COMMANDS[args.command][0]
    buf = io.StringIO()
    try:
        mf = load_model(args.model)
        code = fn(mf, args, buf, log)
    except ParseError as exc:
        return fail(EXIT_IO, str(exc))
    except ScaleFnError as exc:
        return fail(exc.exit_code, str(exc))
    except (TypeError, ValueError) as exc:
        return fail(EXIT_MODEL, str(exc))
    try:
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(buf.getvalue())
        else:
            stdout.write(buf.getvalue())
    except OSError as exc:
        return fail(EXIT_IO, f"cannot write output: {exc.strerror}")
    if code == EXIT_VERIFY:
        stderr.write("ERROR 3: verification outside tolerance\n")
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
