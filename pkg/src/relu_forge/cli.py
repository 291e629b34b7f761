"""relu-forge command line.

Exit codes: 0 success, 2 usage/argument error, 3 input or parse error,
4 certification failure (a measured error exceeded its bound).
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile

import numpy as np

from . import approximator as ap
from .domain_ext import approximate_on_domain, read_domain_csv
from .errors import ArgumentError, CapabilityError, CapacityError, ParseError, ReluForgeError
from .fixtures import zoo
from .fnn_core import deserialize, serialize
from .manifold import PointCloud, accept_projector, build_manifold_approximant
from .modulus import ModulusOfContinuity, empirical_modulus
from .planner import CostQuery, plan, plan_csv

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_CERT = 0, 2, 3, 4


class UsageError(Exception):
    pass


def write_atomic(path: str, data) -> None:
    """Write via a temporary file in the target directory, then rename."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _norm(s: str) -> float:
    if s.lower() in ("inf", "infinity", "oo"):
        return math.inf
    try:
        return float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid norm {s!r}") from None


def _int_list(s: str) -> list:
    try:
        return [int(t) for t in s.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def _target(args):
    if not args.target:
        raise UsageError("--target is required")
    try:
        return zoo(args.target, d=args.d, seed=args.seed)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def _plan(args):
    return ap.SamplingPlan("auto", args.samples, args.seed)


def _read_network(path):
    try:
        with open(path, "rb") as fh:
            return deserialize(fh.read())
    except OSError as exc:
        raise ParseError(f"cannot read network document: {exc.strerror}", path) from None


# ----------------------------------------------------------------- commands

def cmd_build(args) -> int:
    f = _target(args)
    if args.d is not None and args.d != f.dim:
        raise UsageError(f"target {args.target!r} has d = {f.dim}")
    a = ap.build_approximant(f, args.N, args.L, args.norm, args.uniform, args.delta)
    doc = serialize(a.network)
    if args.out:
        write_atomic(args.out, doc)
    print(f"target={f.label} N={a.N} L={a.L} d={a.d} K={a.K} delta={a.delta!r} "
          f"width={a.network.width} depth={a.network.depth} "
          f"bound_out={a.bound_outside_trifling!r} bound_global={a.bound_global!r}")
    return EXIT_OK


def cmd_certify(args) -> int:
    if not args.network:
        raise UsageError("--network is required")
    net = _read_network(args.network)
    if not args.target and net.metadata.get("target") in ("abs", "holder_sqrt", "const", "linear"):
        args.target = net.metadata["target"]
        if args.d is None and "d" in net.metadata:
            args.d = int(net.metadata["d"])
    f = _target(args)
    a = ap.approximant_from_network(net, f)
    rep = ap.certify(a, f, _plan(args))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ap.CSV_HEADER)
    w.writerow(ap.report_row(a, rep))
    emit(buf.getvalue(), args.out)
    return EXIT_OK if rep.passed else EXIT_CERT


def cmd_sweep(args) -> int:
    f = _target(args)
    pairs = [(n, l) for n in args.Ns for l in args.Ls]
    rows = ap.rate_sweep(f, pairs, args.norm, _plan(args), args.uniform)
    emit(ap.rows_to_csv(rows), args.out)
    for r in rows:
        if r["error"]:
            print(f"N={r['N']} L={r['L']}: {r['error']}", file=sys.stderr)
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_CERT


def _modulus(args, dom):
    if args.lam is not None:
        return ModulusOfContinuity.holder(args.lam, args.alpha)
    print("warning: no modulus given; using an empirical (non-rigorous) estimate", file=sys.stderr)
    return empirical_modulus(dom.points, dom.values)


def cmd_extend(args) -> int:
    if not args.domain:
        raise UsageError("--domain is required")
    dom = read_domain_csv(args.domain, args.R)
    omega = _modulus(args, dom)
    res = approximate_on_domain(dom, omega, args.N, args.L, Delta=args.Delta)
    err = res.sup_error(dom.points, dom.values)
    ok = err <= res.bound
    if args.network_out:
        write_atomic(args.network_out, serialize(res.network))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["points", "d", "R", "N", "L", "K", "measured_sup", "bound", "rigorous", "pass"])
    w.writerow([dom.points.shape[0], dom.dim, repr(dom.R), args.N, args.L, res.inner.K, repr(err),
                repr(res.bound), "true" if res.rigorous else "false", "true" if ok else "false"])
    emit(buf.getvalue(), args.out)
    return EXIT_OK if ok else EXIT_CERT


def _read_cloud(path, d, eps):
    try:
        A = np.loadtxt(path, delimiter=",", ndmin=2)
    except OSError as exc:
        raise ParseError(f"cannot read cloud: {exc.strerror}", path) from None
    except ValueError as exc:
        raise ParseError(f"malformed cloud CSV: {exc}", path) from None
    if d is None:
        d = A.shape[1]
    if A.shape[1] == d + 1:
        return PointCloud(A[:, :d], eps, tags=A[:, d])
    if A.shape[1] != d:
        raise ParseError(f"cloud rows must have {d} or {d + 1} columns", path)
    return PointCloud(A, eps)


def cmd_manifold(args) -> int:
    if not args.cloud or args.d_low is None:
        raise UsageError("manifold needs --cloud and --d-low")
    cloud = _read_cloud(args.cloud, args.d, args.epsilon)
    args.d = cloud.dim
    f = _target(args)
    if f.dim != cloud.dim:
        raise UsageError(f"target dimension {f.dim} does not match cloud dimension {cloud.dim}")
    proj, stats = accept_projector(cloud.dim, args.d_low, args.distortion, cloud, seed=args.seed,
                                   retries=args.retries, min_fraction=args.min_fraction)
    res = build_manifold_approximant(f, cloud, proj, args.N, args.L)
    if args.network_out:
        write_atomic(args.network_out, serialize(res.network))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["d", "d_low", "delta", "epsilon", "N", "L", "K", "projector_seed", "fraction_within",
                "measured_sup", "bound", "pass"])
    w.writerow([cloud.dim, args.d_low, repr(proj.delta), repr(cloud.epsilon), args.N, args.L,
                res.report["K"], proj.seed, repr(stats.fraction_within), repr(res.measured_sup),
                repr(res.bound), "true" if res.passed else "false"])
    emit(buf.getvalue(), args.out)
    return EXIT_OK if res.passed else EXIT_CERT


def cmd_plan(args) -> int:
    if args.epsilon is None or args.p is None:
        raise UsageError("plan needs --epsilon and --p")
    q = CostQuery(args.epsilon, args.alpha, args.d or 1, args.p)
    emit(plan_csv(q, plan(q, args.threshold)), args.out)
    return EXIT_OK


def cmd_inspect(args) -> int:
    if not args.network:
        raise UsageError("--network is required")
    net = _read_network(args.network)
    lines = [f"input_dim: {net.input_dim}", f"output_dim: {net.output_dim}",
             f"depth: {net.depth}", f"width: {net.width}",
             f"hidden_widths: {','.join(map(str, net.widths))}",
             f"parameters: {sum(W.size + b.size for W, b in net.layers)}"]
    lines += [f"meta.{k}: {v}" for k, v in sorted(net.metadata.items()) if k != "projector"]
    emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--N", type=int, default=2, help="width parameter")
    common.add_argument("--L", type=int, default=2, help="depth parameter")
    common.add_argument("--d", type=int, default=None, help="input dimension")
    common.add_argument("--norm", type=_norm, default=math.inf, help="L^p norm (number or 'inf')")
    common.add_argument("--uniform", action="store_true", help="apply the uniform (sup-norm) lift")
    common.add_argument("--delta", type=float, default=None, help="override the trifling width")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=None, help="certification sample count")
    common.add_argument("--out", default=None, help="output path (default: stdout / no file)")
    common.add_argument("--target", default=None, help="fixture name")

    p = argparse.ArgumentParser(prog="relu-forge", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("build", parents=[common], help="build a network document")
    s.set_defaults(func=cmd_build)

    s = sub.add_parser("certify", parents=[common], help="certify a network document")
    s.add_argument("--network", default=None)
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("sweep", parents=[common], help="build+certify over an (N, L) grid")
    s.add_argument("--Ns", type=_int_list, default=[1, 2, 3])
    s.add_argument("--Ls", type=_int_list, default=[1, 2, 3])
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("extend", parents=[common], help="approximate on a sampled domain")
    s.add_argument("--domain", default=None, help="CSV rows x1,...,xd,value")
    s.add_argument("--R", type=float, default=None)
    s.add_argument("--lam", type=float, default=None, help="Hölder constant")
    s.add_argument("--alpha", type=float, default=1.0, help="Hölder exponent")
    s.add_argument("--Delta", type=float, default=0.0, help="extension slack")
    s.add_argument("--network-out", default=None)
    s.set_defaults(func=cmd_extend)

    s = sub.add_parser("manifold", parents=[common], help="approximate near a sampled manifold")
    s.add_argument("--cloud", default=None, help="CSV rows x1,...,xd[,tag]")
    s.add_argument("--d-low", type=int, default=None, help="projected dimension")
    s.add_argument("--distortion", type=float, default=0.5, help="distortion target in (0,1)")
    s.add_argument("--epsilon", type=float, default=0.0, help="neighbourhood radius of the cloud")
    s.add_argument("--retries", type=int, default=10)
    s.add_argument("--min-fraction", type=float, default=0.9)
    s.add_argument("--network-out", default=None)
    s.set_defaults(func=cmd_manifold)

    s = sub.add_parser("plan", parents=[common], help="choose (N, L) for accuracy and core count")
    s.add_argument("--epsilon", type=float, default=None)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--p", type=float, default=None, help="core count")
    s.add_argument("--threshold", type=float, default=8)
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("inspect", parents=[common], help="summarize a network document")
    s.add_argument("--network", default=None)
    s.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ArgumentError, CapacityError, CapabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ReluForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
