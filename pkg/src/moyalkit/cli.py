"""Command-line front end.

Every subcommand prints a JSON report (schema 1, sorted keys, 17 significant
digits) and writes it, together with any grid or matrix artifacts, to the
``--out`` directory. Exit codes: 0 success, 1 usage error, 2 invalid input,
3 numerical guard tripped, 4 a verification check failed.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from . import families as fam
from .errors import MoyalkitError, NumericalGuardError, ValidationError
from .gridfn import GridSpec, e_norm, fit_class_constants, gs_norm, s_norm, sample
from .io import read_gsgf, read_matrix_csv, write_csv, write_gsgf
from .report import SCHEMA_VERSION, dumps

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_GUARD, EXIT_CHECK = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# argument helpers


def _grid(text, L, d=None):
    parts = [int(v) for v in str(text).lower().split("x")]
    Ls = [float(v) for v in str(L).lower().split("x")]
    d = d or len(parts)
    return GridSpec.make(d, parts if len(parts) > 1 else parts[0], Ls if len(Ls) > 1 else Ls[0])


def _sequence_from_text(text, N_max):
    from .sequences import parse_sequence

    return parse_sequence(text, N_max)


def _json_arg(text):
    if text.startswith("@"):
        with open(text[1:]) as fh:
            return json.load(fh)
    return json.loads(text)


NAMED_FAMILIES = {
    "oscillator": lambda: fam.oscillator_symbol(),
    "one": lambda: fam.constant(1.0, 2),
    "chirp": lambda: fam.chirp([[0.0, 1.0], [1.0, 0.0]]),
    "polynomial": lambda: fam.polynomial({(0, 0): 1.0, (2, 0): 1.0, (0, 2): 1.0}),
}


def _family(text, dim=2):
    """Family from JSON (inline or ``@file``) or a short name."""
    if text in NAMED_FAMILIES:
        return NAMED_FAMILIES[text]()
    if text == "gaussian":
        return fam.gaussian(np.zeros(dim), np.eye(dim))
    try:
        spec = _json_arg(text)
    except (json.JSONDecodeError, OSError) as err:
        raise ValidationError(f"cannot read family {text!r}: {err}") from err
    return fam.family_from_dict(spec)


def _function(text, spec):
    """A grid function from a GSGF file or a family description."""
    if text.endswith(".gsgf") and os.path.exists(text):
        return read_gsgf(text)
    return sample(_family(text, spec.d), spec)


def _S(args):
    if getattr(args, "S", None) is None:
        return np.zeros((2, 2))
    if os.path.exists(args.S):
        return read_matrix_csv(args.S)
    vals = [float(v) for v in args.S.replace(";", ",").split(",")]
    if len(vals) != 4:
        raise ValidationError("S must have four entries q_q,q_p,p_q,p_p or be a CSV file")
    return np.array(vals).reshape(2, 2)


def _star_cfg(args):
    from .starprod import StarConfig

    return StarConfig(args.hbar, _S(args), getattr(args, "backend", "fourier"))


def _emit(args, payload, name):
    payload = {"schema": SCHEMA_VERSION, "command": args.command, "seed": args.seed, **payload}
    text = dumps(payload)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, name), "w") as fh:
        fh.write(text)
    sys.stdout.write(text)


def _save_grid(args, f, name):
    path = os.path.join(args.out, name)
    os.makedirs(args.out, exist_ok=True)
    write_gsgf(path, f)
    if args.csv:
        write_csv(path[:-5] + ".csv", f)
    return path


# ---------------------------------------------------------------------------
# subcommands


def cmd_seq(args):
    from .sequences import is_nontrivial_sampled

    seq = _seq_from_group(args)
    out = {"sequence": seq.to_dict(), "nontrivial_sampled": is_nontrivial_sampled(seq)}
    if args.values:
        out["log_values"] = seq.log_values
    _emit(args, out, "seq.json")


def _seq_from_group(args):
    if args.gevrey is not None:
        return _sequence_from_text(f"gevrey:{args.gevrey}", args.N_max)
    if args.explicit is not None:
        return _sequence_from_text(f"explicit:{args.explicit}", args.N_max)
    return _sequence_from_text("constant_one", args.N_max)


def cmd_weight(args):
    from .sequences import log_weight

    seq = _seq_from_group(args)
    t = np.asarray(args.t, dtype=float)
    lw, n = log_weight(seq, t)
    rows = []
    for ti, li, ni in zip(t, lw, n):
        inf = bool(np.isinf(li))
        rows.append({"t": ti, "infinite": inf, "log_value": None if inf else li,
                     "value": None if inf else float(np.exp(li)) if li < 700 else "overflow",
                     "argmax_n": int(ni)})
    _emit(args, {"sequence": seq.to_dict(), "weights": rows}, "weight.json")


def cmd_sample(args):
    spec = _grid(args.grid, args.L)
    f = sample(_family(args.family, spec.d), spec)
    path = _save_grid(args, f, args.name)
    _emit(args, {"grid": spec.to_dict(), "file": os.path.basename(path), "meta": f.meta,
                 "boundary_ratio": f.boundary_ratio, "sup": f.sup()}, "sample.json")


def cmd_norm(args):
    f = read_gsgf(args.input)
    a, b = _sequence_from_text(args.a, args.N_max), _sequence_from_text(args.b, args.N_max)
    fn = {"S_norm_weighted": gs_norm, "E_norm": e_norm, "S_norm": s_norm}[args.kind]
    rep = fn(f, a, b, args.A, args.B, args.M)
    _emit(args, {"norm": rep.to_dict(), "a": a.to_dict(), "b": b.to_dict()}, "norm.json")


def cmd_fit_class(args):
    f = read_gsgf(args.input)
    a, b = _sequence_from_text(args.a, args.N_max), _sequence_from_text(args.b, args.N_max)
    fit = fit_class_constants(f, a, b, args.M, args.target_C, require_interior=not args.allow_edge)
    _emit(args, {"fit": fit.to_dict(), "a": a.to_dict(), "b": b.to_dict()}, "fit_class.json")


def cmd_star(args):
    from .starprod import deformed_convolution, moyal, moyal_via_symplectic, star_S, twisted_convolution

    f, g = read_gsgf(args.f), read_gsgf(args.g)
    cfg = _star_cfg(args)
    if args.method == "moyal":
        r = moyal(f, g, cfg)
    elif args.method == "starS":
        r = star_S(f, g, cfg)
    elif args.method == "twisted":
        r = twisted_convolution(f, g, args.hbar)
    elif args.method == "deformed":
        r = deformed_convolution(f, g, cfg)
    else:
        f.require_decay("symplectic")
        g.require_decay("symplectic")
        r = moyal_via_symplectic(f, g, args.hbar, args.side)
    path = _save_grid(args, r, args.name)
    _emit(args, {"config": cfg.to_dict(), "method": args.method, "file": os.path.basename(path),
                 "sup": r.sup(), "boundary_ratio": r.boundary_ratio}, "star.json")


def cmd_approx_id(args):
    from .multipliers import approx_identity_errors, make_approx_identity

    spec = _grid(args.grid, args.L)
    s1 = args.width
    e1 = sample(fam.gaussian(np.zeros(2), np.eye(2) / s1**2, 1 / (np.pi * s1**2)), spec)
    g = _function(args.g, spec)
    ns = list(range(1, args.n_max + 1))
    out = {"grid": spec.to_dict(), "n": ns, "g_sup": g.sup(), "e1_width": s1,
           "raw_mass": [make_approx_identity(e1, n).raw_mass for n in ns]}
    for order in ("left", "right"):
        err = approx_identity_errors(e1, g, ns, args.hbar, order)
        out[order] = {"errors": err, "monotone_decreasing": bool(np.all(np.diff(err) < 0))}
    _emit(args, out, "approx_id.json")


def cmd_extend(args):
    from .multipliers import DualElement, extend_functional

    spec = _grid(args.grid, args.L)
    U = DualElement.from_family(_family(args.u, spec.d), spec)
    f0 = _function(args.f0, spec)
    h = _function(args.h, spec)
    res = extend_functional(U, f0, h)
    _emit(args, {"grid": spec.to_dict(), "result": res.to_dict(),
                 "relative_difference": abs(res.value - res.direct_pairing) / max(abs(res.direct_pairing), 1e-300)},
          "extend.json")


def cmd_multiplier(args):
    from .multipliers import multiplier_experiment, report_to_dict

    cfg = _star_cfg(args)
    a = _sequence_from_text(args.a, args.N_max)
    rep = multiplier_experiment(_family(args.h), _family(args.f), cfg, tuple(args.L_values), a=a, M=args.M)
    files = []
    os.makedirs(args.out, exist_ok=True)
    for run in rep["runs"]:
        for order, entry in run["orders"].items():
            prof = entry["profile"]
            name = f"profile_L{run['L']:g}_{order}.csv"
            table = np.column_stack([prof["q"], prof["abs_along_q"], prof["p"], prof["abs_along_p"]])
            np.savetxt(os.path.join(args.out, name), table, delimiter=",", fmt="%.17g",
                       header="q,abs_along_q,p,abs_along_p", comments="")
            files.append(name)
    _emit(args, {"experiment": report_to_dict(rep), "a": a.to_dict(), "profiles": files}, "multiplier.json")


def cmd_quantize(args):
    from .quantize import op_matrix

    spec = _grid(args.grid, args.L, d=2)
    f = sample(_family(args.symbol_family), spec)
    M = op_matrix(f, _star_cfg(args), args.basis)
    os.makedirs(args.out, exist_ok=True)
    E = M.entries
    inter = np.empty((E.shape[0], 2 * E.shape[1]))
    inter[:, 0::2], inter[:, 1::2] = E.real, E.imag
    np.savetxt(os.path.join(args.out, "operator.csv"), inter, delimiter=",", fmt="%.17g")
    _emit(args, {"grid": spec.to_dict(), "matrix_file": "operator.csv", "operator": M.to_dict()},
          "quantize.json")


def cmd_verify(args):
    from .verify import SUITES, RunConfig, run_suites

    tols = {}
    for item in args.tol or []:
        k, _, v = item.partition("=")
        tols[k] = float(v)
    N = int(str(args.grid).lower().split("x")[0])
    try:
        cfg = RunConfig(N=N, L=args.L, hbar=args.hbar, seed=args.seed, tolerances=tols, a=args.a, b=args.b,
                        **({"S": _S(args)} if args.S is not None else {}))
    except ValueError as err:
        raise ValidationError(str(err)) from err
    suites = list(SUITES) if args.suite == "all" else [args.suite]
    rep = run_suites(suites, cfg)
    _emit(args, {"report": rep}, "verify.json")
    return EXIT_OK if rep["passed"] else EXIT_CHECK


# ---------------------------------------------------------------------------
# parser


def _add_seq_group(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--gevrey", type=float, metavar="ALPHA", help="a_n = n^(alpha n)")
    g.add_argument("--constant-one", action="store_true", help="a_n = 1")
    g.add_argument("--explicit", metavar="LIST", help="comma separated a_0..a_N")
    p.add_argument("--N-max", dest="N_max", type=int, default=64)


def _add_class_args(p):
    p.add_argument("--a", default="gevrey:0.5", help="gevrey:<alpha> | constant_one | explicit:<list>")
    p.add_argument("--b", default="gevrey:0.5")
    p.add_argument("--N-max", dest="N_max", type=int, default=1024)
    p.add_argument("--M", type=int, default=4)


def build_parser():
    p = _Parser(prog="moyalkit", description="Numerical Weyl-Moyal calculus toolkit.")
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="directory for artifacts")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--csv", action="store_true", help="also write grid files as CSV")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("seq", parents=[common], help="defining sequence and its constants")
    _add_seq_group(s)
    s.add_argument("--values", action="store_true", help="include ln a_n")
    s.set_defaults(func=cmd_seq)

    s = sub.add_parser("weight", parents=[common], help="weight function values")
    _add_seq_group(s)
    s.add_argument("--t", type=float, nargs="+", required=True)
    s.set_defaults(func=cmd_weight)

    grid_args = argparse.ArgumentParser(add_help=False)
    grid_args.add_argument("--grid", default="128x128", help="samples per axis, e.g. 128x128 or 64")
    grid_args.add_argument("--L", default="12", help="half-width per axis, e.g. 12 or 12x8")

    s = sub.add_parser("sample", parents=[common, grid_args], help="sample a family to a GSGF file")
    s.add_argument("--family", required=True, help="JSON, @file.json, or gaussian|oscillator|one|chirp|polynomial")
    s.add_argument("--name", default="sample.gsgf")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("norm", parents=[common], help="truncated norm of a GSGF function")
    s.add_argument("input")
    s.add_argument("--kind", choices=["S_norm_weighted", "E_norm", "S_norm"], default="S_norm_weighted")
    s.add_argument("--A", type=float, required=True)
    s.add_argument("--B", type=float, required=True)
    _add_class_args(s)
    s.set_defaults(func=cmd_norm)

    s = sub.add_parser("fit-class", parents=[common], help="smallest class constants (A, B)")
    s.add_argument("input")
    s.add_argument("--target-C", dest="target_C", type=float, required=True)
    s.add_argument("--allow-edge", action="store_true", help="accept suprema attained at the box edge")
    _add_class_args(s)
    s.set_defaults(func=cmd_fit_class)

    star_args = argparse.ArgumentParser(add_help=False)
    star_args.add_argument("--hbar", type=float, default=1.0)
    star_args.add_argument("--S", help="ordering matrix: CSV file or four comma separated entries")

    s = sub.add_parser("star", parents=[common, star_args], help="star products and twisted convolutions")
    s.add_argument("f")
    s.add_argument("g")
    s.add_argument("--method", choices=["moyal", "starS", "twisted", "deformed", "symplectic"], default="moyal")
    s.add_argument("--side", choices=["left", "right"], default="left",
                   help="which factor is transformed for --method symplectic")
    s.add_argument("--backend", choices=["fourier", "direct_quadrature"], default="fourier")
    s.add_argument("--name", default="star.gsgf")
    s.set_defaults(func=cmd_star)

    s = sub.add_parser("approx-id", parents=[common, grid_args], help="approximate identity errors")
    s.add_argument("--g", default="gaussian", help="GSGF file or family")
    s.add_argument("--hbar", type=float, default=1.0)
    s.add_argument("--n-max", dest="n_max", type=int, default=32)
    s.add_argument("--width", type=float, default=2.0, help="width of the Gaussian e_1")
    s.set_defaults(func=cmd_approx_id)

    s = sub.add_parser("extend", parents=[common, grid_args], help="extension of a dual element")
    s.add_argument("--u", required=True, help="family of the dual element")
    s.add_argument("--f0", required=True, help="unit-integral GSGF file or family")
    s.add_argument("--h", required=True, help="GSGF file or family")
    s.set_defaults(func=cmd_extend)

    s = sub.add_parser("multiplier", parents=[common, star_args], help="multiplier experiment over boxes")
    s.add_argument("--h-family", "--h", dest="h", required=True, help="candidate multiplier family")
    s.add_argument("--f-family", "--f", dest="f", default="gaussian", help="decaying partner family")
    s.add_argument("--box-sweep", "--L-values", dest="L_values", type=float, nargs="+", default=[8.0, 12.0, 16.0],
                   help="box half-widths L")
    s.add_argument("--a", default="gevrey:0.5")
    s.add_argument("--N-max", dest="N_max", type=int, default=1024)
    s.add_argument("--M", type=int, default=2)
    s.set_defaults(func=cmd_multiplier)

    s = sub.add_parser("quantize", parents=[common, grid_args, star_args], help="operator matrix of a symbol")
    s.add_argument("--symbol-family", dest="symbol_family", required=True)
    s.add_argument("--basis", type=int, default=16)
    s.set_defaults(func=cmd_quantize)

    s = sub.add_parser("verify", parents=[common, star_args], help="run property suites")
    s.add_argument("--suite", default="all",
                   choices=["all", "sequences", "gridfn", "starprod", "multipliers", "quantize"])
    s.add_argument("--grid", default="128x128")
    s.add_argument("--L", type=float, default=12.0)
    s.add_argument("--tol", action="append", metavar="KEY=VALUE", help="override a tolerance")
    s.add_argument("--a", default="gevrey:0.5", help="sequence for the norm and class checks")
    s.add_argument("--b", default="gevrey:0.5")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as err:
        sys.stderr.write(f"{err}\n")
        return EXIT_USAGE
    try:
        code = args.func(args)
        return EXIT_OK if code is None else code
    except NumericalGuardError as err:
        _report_error(args, err, "guard")
        return EXIT_GUARD
    except (ValidationError, MoyalkitError) as err:
        _report_error(args, err, "validation")
        return EXIT_VALIDATION


def _report_error(args, err, kind):
    info = err.to_dict() if isinstance(err, NumericalGuardError) else {"type": type(err).__name__,
                                                                         "message": str(err)}
    sys.stderr.write(f"moyalkit {args.command}: {type(err).__name__}: {err}\n")
    try:
        _emit(args, {"error": {"kind": kind, **info}}, f"{args.command}.error.json")
    except OSError:
        pass


if __name__ == "__main__":
    sys.exit(main())
