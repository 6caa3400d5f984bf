"""maasscert command line.

    maasscert certify [--input FILE] [--output CERT.json] ...
    maasscert domain --level N [--character INDEX]
    maasscert whittaker --r R --y Y

Exit codes: 0 certified, 1 usage or I/O error, 2 input fails validation,
3 numerical non-certification.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import flint

from .enclosure import EnclosureError, dumps, enclosure_strs, working_precision

EXIT_OK, EXIT_ERROR, EXIT_INVALID, EXIT_UNCERTIFIED = 0, 1, 2, 3
PRECISION_ENV = "MAASS_CERT_PRECISION"


@dataclass
class RunConfig:
    command: str
    input: Path | None = None
    output: Path | None = None
    precision: int = 128
    taylor_degree: int = 45
    n_samples: int = 100
    M0: int | None = None
    m: int | None = None
    delta_cap: str | None = None
    threads: int = 1
    quiet: bool = False

    def check(self):
        if self.taylor_degree < 2:
            raise ValueError("--taylor-degree must be >= 2")
        if self.n_samples < 4:
            raise ValueError("--samples must be >= 4")
        if self.precision < 64:
            raise ValueError("--precision must be >= 64")
        if self.threads < 1:
            raise ValueError("--threads must be >= 1")


def _default_precision() -> int:
    env = os.environ.get(PRECISION_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"{PRECISION_ENV} must be an integer, got {env!r}") from None
    return 128


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maasscert",
                                description="Certify eigenvalues of purported Maass forms.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", help="run the certification")
    c.add_argument("--input", type=Path, default=None,
                   help="form JSON (default: the shipped level 5 example)")
    c.add_argument("--output", type=Path, default=None, help="certificate JSON path")
    c.add_argument("--precision", type=int, default=None,
                   help=f"working bits (default ${PRECISION_ENV} or 128)")
    c.add_argument("--taylor-degree", type=int, default=45)
    c.add_argument("--samples", type=int, default=100, help="sample points per arc, N")
    c.add_argument("--M0", type=int, default=None, help="truncate the expansions at M0")
    c.add_argument("--m", type=int, default=None, help="Hecke index (default: least admissible)")
    c.add_argument("--delta-cap", default=None)
    c.add_argument("--threads", type=int, default=1)
    c.add_argument("--quiet", action="store_true")

    d = sub.add_parser("domain", help="print coset representatives and cusps")
    d.add_argument("--level", type=int, required=True)
    d.add_argument("--character", type=int, default=1, help="Conrey index (default trivial)")

    w = sub.add_parser("whittaker", help="print W_ir(y) and W'_ir(y) enclosures")
    w.add_argument("--r", required=True)
    w.add_argument("--y", required=True)
    w.add_argument("--precision", type=int, default=None)
    return p


def cmd_certify(cfg: RunConfig, out=None) -> int:
    from .certifier import CertificationError, CertifyOptions, ValidationError, certify
    from .forms import FormError, load_form, shipped_example_path

    out = out or sys.stdout

    path = cfg.input or shipped_example_path()
    with working_precision(cfg.precision):
        try:
            form = load_form(path)
        except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
            print(f"error: cannot read {path}: {exc}", file=sys.stderr)
            return EXIT_ERROR
        except FormError as exc:
            print(f"error: {path}: {exc}", file=sys.stderr)
            return EXIT_ERROR
        except (ValueError, EnclosureError) as exc:
            print(f"invalid input: {exc}", file=sys.stderr)
            return EXIT_INVALID
        opts = CertifyOptions(taylor_degree=cfg.taylor_degree, n_samples=cfg.n_samples,
                              m=cfg.m, delta_cap=cfg.delta_cap, threads=cfg.threads,
                              M0=cfg.M0, progress=not cfg.quiet)
        try:
            cert = certify(form, opts)
        except ValidationError as exc:
            print(str(exc), file=sys.stderr)
            return EXIT_INVALID
        except FormError as exc:
            print(f"invalid input: {exc}", file=sys.stderr)
            return EXIT_INVALID
        except (CertificationError, EnclosureError) as exc:
            print(f"not certified: {exc}", file=sys.stderr)
            return EXIT_UNCERTIFIED
        text = cert.to_json()
    if cfg.output is not None:
        try:
            cfg.output.write_text(text + "\n")
        except OSError as exc:
            print(f"error: cannot write {cfg.output}: {exc}", file=sys.stderr)
            return EXIT_ERROR
    else:
        print(text, file=out)
    c = cert.to_jsonable()
    print(f"certified: |lambda~ - lambda| <= {c['bound']}", file=out)
    print(f"  lambda in [{c['lambda'][0]}, {c['lambda'][1]}]", file=out)
    print(f"  m = {c['m']}, #Psi = {c['psi_count']}, delta = {c['delta'][0]}", file=out)
    print(f"  D >= {c['D'][0]}, max E <= {c['maxE'][1]}", file=out)
    print(f"  {cert.timings['total']} s", file=out)
    return EXIT_OK


def cmd_domain(level: int, character: int = 1, out=None) -> int:
    from .characters import conrey_character
    from .geometry import coset_representatives

    out = out or sys.stdout
    if level < 1:
        raise ValueError("--level must be positive")
    chi = conrey_character(level, character)
    system = coset_representatives(level, chi)
    data = {
        "level": level,
        "index": len(system),
        "representatives": [{"matrix": M.tolist(), "cusp": c.label()}
                            for M, c in zip(system.reps, system.cusp_of_rep)],
        "cusps": [{"cusp": c.label(), "width": c.width, "mu": str(c.mu)} for c in system.cusps],
        "hall_cusps": {str(d): c.label() for d, c in system.hall_cusps.items()},
    }
    print(dumps(data), file=out)
    return EXIT_OK


def cmd_whittaker(r: str, y: str, out=None) -> int:
    from .enclosure import ball
    from .special_functions import WhittakerEvaluator

    out = out or sys.stdout
    rb, yb = ball(r), ball(y)
    if not yb > 0:
        raise ValueError("--y must be positive")
    ev = WhittakerEvaluator(rb * rb + flint.arb(1) / 4)
    W, dW = ev.whittaker(yb)
    print(dumps({"r": r, "y": y, "precision": flint.ctx.prec,
                 "W": enclosure_strs(W), "dW": enclosure_strs(dW)}), file=out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        if args.command == "certify":
            prec = args.precision if args.precision is not None else _default_precision()
            cfg = RunConfig("certify", args.input, args.output, prec, args.taylor_degree,
                            args.samples, args.M0, args.m, args.delta_cap, args.threads,
                            args.quiet)
            cfg.check()
            return cmd_certify(cfg)
        if args.command == "domain":
            return cmd_domain(args.level, args.character)
        prec = args.precision if args.precision is not None else _default_precision()
        if prec < 64:
            raise ValueError("--precision must be >= 64")
        with working_precision(prec):
            return cmd_whittaker(args.r, args.y)
    except (ValueError, EnclosureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
