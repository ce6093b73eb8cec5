"""Command-line entry point: ``renyimps {entropy,verify,bounds,tprime,export}``.

Exit codes: 0 success, 2 bad input or parameters, 3 invariant or bound
violation, 4 budget exceeded, 5 not gapped or not primitive.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, gallery
from .channels import QuantumChannel, bounds_report, channel_to_mps
from .errors import (
    BudgetExceeded,
    InvariantViolation,
    NotGapped,
    NotPrimitive,
    RenyiMpsError,
    SchemaError,
)
from .io import digest, parse_tensor_file, payload_text, serialize, to_jsonable, write_tensor_file
from .mps import EXPANSION_BUDGET, MpsTensor, every_kth_site, expand_state, purity_oracle, reduced_density, renyi_entropy
from .transfer import build_transfer, canonicalize_primitive
from .twisted import (
    TWIST_BUDGET,
    density_limit_k,
    density_limit_km,
    entropy_density,
    finite_density_sequence,
    purity_via_transfer,
)

EXIT_OK, EXIT_SCHEMA, EXIT_VIOLATION, EXIT_BUDGET, EXIT_NOT_GAPPED = 0, 2, 3, 4, 5


@dataclass
class RunConfig:
    command: str
    source: str
    ks: list = field(default_factory=lambda: [2])
    ls: list = field(default_factory=lambda: [2])
    ms: list = field(default_factory=lambda: [1])
    ns: list = field(default_factory=list)
    alpha: float | None = None
    seed: int = 0
    sweep: int = 0
    dim: int = 2
    tol: float = 1e-10
    budget: int = EXPANSION_BUDGET
    twist_budget: int = TWIST_BUDGET
    out: str | None = None
    log2: bool = False

    def validate(self):
        def positive(name, values, low):
            for v in values:
                if v < low:
                    raise SchemaError(f"must be >= {low}, got {v}", field=name)

        positive("k", self.ks, 1)
        positive("l", self.ls, 2)
        positive("m", self.ms, 1)
        positive("n", self.ns, 1)
        positive("seed", [self.seed], 0)
        positive("sweep", [self.sweep], 0)
        positive("dim", [self.dim], 1)
        if self.alpha is not None and not self.alpha >= 0:
            raise SchemaError(f"must be >= 0, got {self.alpha}", field="alpha")
        if not self.tol > 0:
            raise SchemaError(f"must be > 0, got {self.tol}", field="tol")
        if self.command == "verify":
            if not self.ns:
                raise SchemaError("verify needs at least one --n", field="n")
            for n in self.ns:
                for k in self.ks:
                    if n % k:
                        raise SchemaError(f"k={k} does not divide n={n}", field="k")
        if self.command == "entropy":
            for n in self.ns:
                for k in self.ks:
                    if n % k:
                        raise SchemaError(f"k={k} does not divide n={n}", field="k")


def load_source(source: str):
    """Return ``(object, input_digest)`` for a gallery name or a file path."""
    if source.startswith("gallery:"):
        inst = gallery.instance(source[len("gallery:"):])
        obj = inst.channel if inst.channel is not None else inst.tensor
        return obj, digest(serialize(obj))
    obj = parse_tensor_file(source)
    return obj, digest(Path(source).read_bytes())


def _as_tensor(obj) -> MpsTensor:
    return channel_to_mps(obj) if isinstance(obj, QuantumChannel) else obj


def _as_channel(obj) -> QuantumChannel:
    return obj if isinstance(obj, QuantumChannel) else QuantumChannel(obj.matrices)


def cmd_entropy(cfg: RunConfig, obj) -> tuple[dict, int]:
    tensor = _as_tensor(obj)
    T = build_transfer(tensor)
    unit = 1 / math.log(2) if cfg.log2 else 1.0
    grid = []
    for k in cfg.ks:
        for l in cfg.ls:
            for m in cfg.ms:
                r = entropy_density(T, k, l, m, cfg.twist_budget)
                grid.append({"k": k, "l": l, "m": m, "density": r.density * unit, "t_hat": r.t_hat})
    _, canon = canonicalize_primitive(tensor)
    limits = [{"l": l, "density_limit_k": density_limit_k(T, l) * unit,
               "density_limit_km": density_limit_km(canon, l) * unit} for l in cfg.ls]
    results = {"units": "bits" if cfg.log2 else "nats", "gap": T.spectral.gap,
               "grid": grid, "limits": limits}
    if cfg.ns:
        results["finite_n"] = [
            {"k": k, "l": l, "sequence": [[n, v * unit] for n, v in finite_density_sequence(tensor, k, l, cfg.ns)]}
            for k in cfg.ks for l in cfg.ls]
    return results, EXIT_OK


def cmd_verify(cfg: RunConfig, obj) -> tuple[dict, int]:
    tensor = _as_tensor(obj)
    rows, worst = [], 0.0
    for n in cfg.ns:
        for k in cfg.ks:
            for l in cfg.ls:
                oracle = purity_oracle(tensor, n, k, l, cfg.budget)
                transfer = purity_via_transfer(tensor, n, k, l, cfg.twist_budget)
                row = {"n": n, "k": k, "l": l, "oracle": oracle, "transfer": transfer,
                       "residual": abs(oracle - transfer)}
                if cfg.alpha is not None:
                    rho = reduced_density(expand_state(tensor, n, cfg.budget), every_kth_site(n, k), cfg.budget)
                    row["oracle_renyi_alpha"] = renyi_entropy(rho, cfg.alpha)
                worst = max(worst, row["residual"])
                rows.append(row)
    results = {"rows": rows, "max_residual": worst, "tolerance": cfg.tol}
    return results, EXIT_OK if worst <= cfg.tol else EXIT_VIOLATION


def cmd_bounds(cfg: RunConfig, obj) -> tuple[dict, int]:
    if cfg.sweep:
        reports = []
        for i in range(cfg.sweep):
            rep = bounds_report(gallery.random_mixed_unitary(cfg.dim, cfg.seed + i))
            reports.append({"seed": cfg.seed + i, "violations": rep.violations})
        count = sum(len(r["violations"]) for r in reports)
        failing = [r for r in reports if r["violations"]]
        results = {"sweep": cfg.sweep, "dim": cfg.dim, "first_seed": cfg.seed,
                   "violation_count": count, "failing": failing}
        return results, EXIT_OK if count == 0 else EXIT_VIOLATION
    rep = bounds_report(_as_channel(obj))
    return rep.as_dict(), EXIT_OK if not rep.violations else EXIT_VIOLATION


def cmd_tprime(cfg: RunConfig, obj) -> tuple[dict, int]:
    rows = []
    for n in cfg.ns or [8]:
        rep = gallery.verify_tprime(n, cfg.budget)
        rows.append({"n": n, "deviations": rep.deviations, "max_deviation": rep.max_deviation})
    ok = all(r["max_deviation"] <= cfg.tol for r in rows)
    return {"rows": rows, "tolerance": cfg.tol}, EXIT_OK if ok else EXIT_VIOLATION


COMMANDS = {"entropy": cmd_entropy, "verify": cmd_verify, "bounds": cmd_bounds, "tprime": cmd_tprime}


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="renyimps", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("input", nargs="?", help="tensor or channel file (v1 JSON)")
    src.add_argument("--gallery", help='gallery instance: tprime, beta:<x>, depolarizing:<D>, random:<d>:<D>:<seed>')
    common.add_argument("--k", type=_int_list, default=[2], help="period(s), comma separated")
    common.add_argument("--l", type=_int_list, default=[2], help="Renyi order(s) >= 2")
    common.add_argument("--m", type=_int_list, default=[1], help="block size(s)")
    common.add_argument("--n", type=_int_list, default=[], help="system size(s)")
    common.add_argument("--alpha", type=float, help="extra Renyi index for oracle reductions")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-10, help="pass/fail tolerance")
    common.add_argument("--budget", type=int, default=EXPANSION_BUDGET, help="max amplitudes for exact expansion")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--log2", action="store_true", help="report entropies in bits")

    sub.add_parser("entropy", parents=[common], help="entropy densities from twisted operators")
    sub.add_parser("verify", parents=[common], help="oracle vs transfer purities")
    b = sub.add_parser("bounds", parents=[common], help="Kraus-rank bounds of a channel")
    b.add_argument("--sweep", type=int, default=0, help="audit this many random mixed-unitary channels")
    b.add_argument("--dim", type=int, default=2, help="bond dimension for --sweep")
    sub.add_parser("tprime", parents=[common], help="brute-force checks of the worked example")
    e = sub.add_parser("export", help="write a gallery instance as a v1 file")
    e.add_argument("--gallery", required=True)
    e.add_argument("--out", required=True)
    return p


def config_from_args(args) -> RunConfig:
    if args.gallery:
        source = "gallery:" + args.gallery
    elif args.input:
        source = args.input
    elif args.command == "tprime" or getattr(args, "sweep", 0):
        source = "gallery:tprime"
    else:
        raise SchemaError("give an input file or --gallery", field="input")
    cfg = RunConfig(command=args.command, source=source, ks=args.k, ls=args.l, ms=args.m,
                    ns=args.n, alpha=args.alpha, seed=args.seed, tol=args.tol, budget=args.budget,
                    out=args.out, log2=args.log2)
    if args.command == "bounds":
        cfg.sweep, cfg.dim = args.sweep, args.dim
    cfg.validate()
    return cfg


def run(cfg: RunConfig) -> tuple[dict, int]:
    """Execute one command and assemble its report."""
    t0 = time.perf_counter()
    obj, in_digest = load_source(cfg.source)
    t1 = time.perf_counter()
    results, code = COMMANDS[cfg.command](cfg, obj)
    t2 = time.perf_counter()
    payload = payload_text(results)
    echo = {k: v for k, v in cfg.__dict__.items() if k != "out"}
    report = {
        "version": "v1",
        "artifact_version": __version__,
        "command": echo,
        "input_digest": in_digest,
        "results": json.loads(payload),
        "payload_digest": digest(payload),
        "exit_code": code,
        "timings": {"load_s": t1 - t0, "compute_s": t2 - t1},
    }
    return report, code


def _error_report(exc: Exception, code: int) -> dict:
    out = {"version": "v1", "artifact_version": __version__, "error": type(exc).__name__,
           "message": str(exc), "exit_code": code}
    moduli = getattr(exc, "moduli", None)
    if moduli:
        out["leading_moduli"] = to_jsonable(np.asarray(moduli[:8], dtype=float))
    return out


def _emit(report: dict, out: str | None):
    text = json.dumps(to_jsonable(report), indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = getattr(args, "out", None)
    try:
        if args.command == "export":
            inst = gallery.instance(args.gallery)
            write_tensor_file(args.out, inst.channel if inst.channel is not None else inst.tensor)
            return EXIT_OK
        report, code = run(config_from_args(args))
    except InvariantViolation as exc:
        report, code = _error_report(exc, EXIT_VIOLATION), EXIT_VIOLATION
    except (SchemaError, ValueError) as exc:
        report, code = _error_report(exc, EXIT_SCHEMA), EXIT_SCHEMA
    except BudgetExceeded as exc:
        report, code = _error_report(exc, EXIT_BUDGET), EXIT_BUDGET
    except (NotGapped, NotPrimitive) as exc:
        report, code = _error_report(exc, EXIT_NOT_GAPPED), EXIT_NOT_GAPPED
    except RenyiMpsError as exc:
        report, code = _error_report(exc, EXIT_VIOLATION), EXIT_VIOLATION
    if code != EXIT_OK and "error" in report:
        sys.stderr.write(f"renyimps: {report['error']}: {report['message']}\n")
    _emit(report, out)
    return code


if __name__ == "__main__":
    sys.exit(main())
