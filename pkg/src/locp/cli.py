"""Command-line front end.

Subcommands: validate (structural + certificate checks of an instance
file), dilate (minimal dilation of a named map, with residual tables),
rn (Radon-Nikodym derivative of a dominated pair), module-rn (module
analogue), gen (deterministic fixtures).

Exit codes: 0 success, 1 mathematical failure (a certificate fails or a
construction precondition is violated), 2 input error (unreadable or
malformed file, bad parameters).  Tolerances come from the instance
file, overridden by --tol-* flags; the environment variables
LOCP_TOL_EQ, LOCP_TOL_PSD, LOCP_TOL_RANK supply defaults.
"""
from __future__ import annotations

import argparse
import sys

from .config import default_tolerances
from .cpmaps import verify_local_cc, verify_local_cp
from .errors import LocpError, ParamError, ParseError, PreconditionError
from .gen import generate
from .hilbert_module import module_rn, verify_phi_map
from .radon_nikodym import derivative
from .serialize import (Instance, encode_instance, encode_matrix,
                        encode_rep, encode_rn_certificate, dumps,
                        load_instance, write_json)
from .stinespring import dilate_minimal, verify_minimality, \
    verify_perp_identity

EXIT_OK = 0
EXIT_MATH = 1
EXIT_INPUT = 2


def _tol_overrides(args) -> dict:
    out = {}
    if args.tol_eq is not None:
        out["eq"] = args.tol_eq
    if args.tol_psd is not None:
        out["psd"] = args.tol_psd
    if args.tol_rank is not None:
        out["rank"] = args.tol_rank
    return out


def _load(args) -> Instance:
    return load_instance(args.path, overrides=_tol_overrides(args))


def _emit(args, payload: dict, text: str | None = None) -> None:
    if args.out:
        write_json(args.out, payload)
        return
    if args.format == "json":
        sys.stdout.write(dumps(payload))
    else:
        sys.stdout.write((text if text is not None else dumps(payload))
                         + ("\n" if text and not text.endswith("\n") else ""))


def cmd_validate(args) -> int:
    tols = None
    objects = []
    ok = True
    try:
        inst = _load(args)
        tols = inst.tolerances
    except ParseError:
        raise
    except LocpError as exc:
        payload = {"pass": False, "error": str(exc)}
        _emit(args, payload, f"[FAIL] {exc}")
        return EXIT_MATH
    for name in inst.flags:
        objects.append({"name": name, "kind": "flag", "pass": True})
    for name in inst.algebras:
        objects.append({"name": name, "kind": "algebra", "pass": True})
    texts = []
    for name, m in inst.maps.items():
        cp = verify_local_cp(m, tols=tols)
        entry = {"name": name, "kind": "map", "cp": cp.to_dict()}
        passed = cp.passed
        if cp.passed:
            cc = verify_local_cc(m, tols=tols, cp_report=cp)
            entry["cc"] = cc.to_dict()
            passed = passed and cc.passed
        entry["pass"] = passed
        objects.append(entry)
        texts.append(f"map {name}:\n{cp.summary()}")
        ok = ok and passed
    for name in inst.modules:
        objects.append({"name": name, "kind": "module", "pass": True})
    for name, cand in inst.inducing_maps.items():
        rep = verify_phi_map(cand, tols=tols)
        objects.append({"name": name, "kind": "inducing_map",
                        "pass": rep.passed, "report": rep.to_dict()})
        texts.append(f"inducing map {name}:\n{rep.summary()}")
        ok = ok and rep.passed
    payload = {"pass": ok, "objects": objects}
    header = f"[{'PASS' if ok else 'FAIL'}] {args.path}"
    _emit(args, payload, "\n".join([header] + texts))
    return EXIT_OK if ok else EXIT_MATH


def cmd_dilate(args) -> int:
    inst = _load(args)
    if args.map not in inst.maps:
        raise ParseError(f"no map named {args.map!r} in {args.path}")
    m = inst.maps[args.map]
    rep = dilate_minimal(m, tols=inst.tolerances)
    minim = verify_minimality(rep, tols=inst.tolerances)
    perp = verify_perp_identity(rep, tols=inst.tolerances)
    ok = rep.build_report.passed and minim.passed and perp.passed
    payload = {
        "map": args.map,
        "pass": ok,
        "rep": encode_rep(rep),
        "reports": {
            "build": rep.build_report.to_dict(),
            "minimality": minim.to_dict(),
            "perp_identity": perp.to_dict(),
        },
    }
    text = "\n".join([f"dilation of {args.map}: r = {rep.dil_dim}, "
                      f"levels {list(rep.dil_flag.dims)}",
                      rep.build_report.summary(), minim.summary(),
                      perp.summary()])
    _emit(args, payload, text)
    return EXIT_OK if ok else EXIT_MATH


def cmd_rn(args) -> int:
    inst = _load(args)
    for name in (args.phi, args.psi):
        if name not in inst.maps:
            raise ParseError(f"no map named {name!r} in {args.path}")
    rep = dilate_minimal(inst.maps[args.phi], tols=inst.tolerances)
    cert = derivative(rep, inst.maps[args.psi], tols=inst.tolerances)
    payload = {
        "phi": args.phi,
        "psi": args.psi,
        "pass": cert.passed,
        "certificate": encode_rn_certificate(cert),
    }
    text = (f"derivative of {args.psi} w.r.t. {args.phi}: "
            f"reconstruction {cert.residual_reconstruction:.3e}, "
            f"commutant {cert.residual_commutant:.3e}, spectrum "
            f"[{cert.spectrum_bounds[0]:.6f}, {cert.spectrum_bounds[1]:.6f}]"
            f" -> {'PASS' if cert.passed else 'FAIL'}")
    _emit(args, payload, text)
    return EXIT_OK if cert.passed else EXIT_MATH


def cmd_module_rn(args) -> int:
    inst = _load(args)
    for name in (args.dom, args.sub):
        if name not in inst.inducing_maps:
            raise ParseError(
                f"no inducing map named {name!r} in {args.path}")
    res = module_rn(inst.inducing_maps[args.dom], inst.inducing_maps[args.sub],
                    tols=inst.tolerances)
    payload = {
        "dom": args.dom,
        "sub": args.sub,
        "pass": res.report.passed,
        "t": encode_matrix(res.t_abs),
        "s": encode_matrix(res.s_abs),
        "report": res.report.to_dict(),
    }
    _emit(args, payload, res.report.summary())
    return EXIT_OK if res.report.passed else EXIT_MATH


def cmd_gen(args) -> int:
    tols = default_tolerances().with_overrides(**_tol_overrides(args))
    inst = generate(args.kind, seed=args.seed, n=args.n, dims=args.dims,
                    kraus=args.kraus, tols=tols)
    payload = encode_instance(inst)
    if args.out:
        write_json(args.out, payload)
        sys.stdout.write(f"wrote {args.kind} fixture to {args.out}\n")
    else:
        sys.stdout.write(dumps(payload))
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="locp",
        description="local CP map certificates, dilations and derivatives")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-eq", type=float, default=None,
                        help="relative equality tolerance")
    common.add_argument("--tol-psd", type=float, default=None,
                        help="relative PSD tolerance")
    common.add_argument("--tol-rank", type=float, default=None,
                        help="relative rank threshold")
    common.add_argument("--out", default=None, help="write JSON output here")
    common.add_argument("--format", choices=("json", "text"), default="text",
                        help="stdout format when --out is not given")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common],
                       help="validate an instance file")
    p.add_argument("path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("dilate", parents=[common],
                       help="minimal dilation of a named map")
    p.add_argument("path")
    p.add_argument("map")
    p.set_defaults(func=cmd_dilate)

    p = sub.add_parser("rn", parents=[common],
                       help="Radon-Nikodym derivative of psi w.r.t. phi")
    p.add_argument("path")
    p.add_argument("phi")
    p.add_argument("psi")
    p.set_defaults(func=cmd_rn)

    p = sub.add_parser("module-rn", parents=[common],
                       help="module Radon-Nikodym derivative")
    p.add_argument("path")
    p.add_argument("dom")
    p.add_argument("sub")
    p.set_defaults(func=cmd_module_rn)

    p = sub.add_parser("gen", parents=[common],
                       help="generate a deterministic fixture")
    p.add_argument("kind", choices=("schur", "random-cp", "dominated-pair",
                                    "module-pair"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=None,
                   help="ambient dimension (schur) or size cap (random)")
    p.add_argument("--dims", type=int, nargs="+", default=None,
                   help="explicit level dims (schur)")
    p.add_argument("--kraus", type=int, default=None,
                   help="number of Kraus operators")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ParamError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT
    except PreconditionError as exc:
        sys.stderr.write(f"precondition failed: {exc}\n")
        return EXIT_MATH
    except LocpError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return EXIT_MATH


if __name__ == "__main__":
    sys.exit(main())
