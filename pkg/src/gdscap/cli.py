"""Command line front end.

Global flags go before the subcommand::

    gdscap --seed 0 --restarts 32 bounds examples/pf_bf.json
    gdscap --out fig1.csv fig1 --p-rule "n^4" --n-max 20
    gdscap cdc --p 4 --n 1
    gdscap superadd --p 16 --n 1 --lambda 0.55

Exit codes: 0 success, 2 validation failure, 3 a required certificate was
infeasible, 4 a desk-scale guard was exceeded (closed forms are still
reported).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import capacity, cdc, channel, gds, singleletter, witness

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_GUARD = 0, 2, 3, 4


def _clean(obj):
    """Round floats to 12 significant digits so reports are byte-stable."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return None if math.isnan(x) else float(f"{x:.12g}")
    return obj


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}{k}.")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield prefix[:-1], obj


def emit(report, args) -> None:
    if isinstance(report, str):
        text = report
    elif args.format == "csv":
        rows = ["key,value"] + [f"{k},{'' if v is None else v}" for k, v in _flatten(_clean(report))]
        text = "\n".join(rows) + "\n"
    else:
        text = json.dumps(_clean(report), indent=2, sort_keys=False) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _load_gds(path, pad):
    spec = _load_json(path)
    if "subchannels" in spec:
        return gds.gds_from_dict(spec, pad=pad)
    return gds.build_gds([channel.channel_from_dict(spec)])


# --------------------------------------------------------------- commands


def cmd_validate(args):
    spec = _load_json(args.path)
    if "subchannels" in spec:
        g = gds.gds_from_dict(spec, pad=args.pad)
        check = gds.validate_block_structure(g.assembled, g.in_blocks, g.out_blocks)
        report = {
            "kind": "gds",
            "blocks": g.n_blocks,
            "dims_in": list(g.in_blocks.sizes),
            "dims_out": list(g.out_blocks.sizes),
            "kraus_count": g.assembled.dim_env,
            "cptp_residual": g.assembled.tp_residual(),
            "subchannel_cptp_residuals": [s.tp_residual() for s in g.subchannels],
            "block_structure_ok": check.ok,
        }
    else:
        ch = channel.channel_from_dict(spec)
        report = {"kind": "channel", "dim_in": ch.dim_in, "dim_out": ch.dim_out,
                  "kraus_count": ch.dim_env, "cptp_residual": ch.tp_residual()}
    return report, EXIT_OK


def _block_ensembles(g):
    mixed = [capacity.Ensemble((1.0,), (np.eye(s.dim_in) / s.dim_in,)) for s in g.subchannels]
    basis = [capacity.Ensemble(tuple([1.0 / s.dim_in] * s.dim_in),
                               tuple(np.diag(np.eye(s.dim_in)[k]) for k in range(s.dim_in))) for s in g.subchannels]
    return mixed, basis


def cmd_bounds(args):
    g = _load_gds(args.path, args.pad)
    opt = capacity.maximize_coherent_information_gds(g, restarts=args.restarts, tol=args.tol, seed=args.seed)
    per_block = []
    for s in g.subchannels:
        r = capacity.maximize_coherent_information(s, restarts=max(1, args.restarts // 4), seed=args.seed)
        rho = r.argument.block_states[0]
        per_block.append((rho, capacity.coherent_information(s, rho)))
    lower = capacity.q1_lower_bound_gds(g, per_block)
    w = witness.build_gds_transposition_witness(g)
    cert = witness.check_transposition_witness(g, w, tol=args.tol)
    mixed, basis = _block_ensembles(g)
    p1 = max(capacity.p1_lower_bound_gds(g, mixed, seed=args.seed), capacity.p1_lower_bound_gds(g, basis, seed=args.seed))
    c1 = max(capacity.c1_lower_bound_gds(g, mixed), capacity.c1_lower_bound_gds(g, basis))
    deg = gds.gds_is_degradable(g)
    sl = singleletter.check_single_letter(g, restarts=max(1, args.restarts // 2), seed=args.seed)
    report = {
        "channel": g.assembled.name,
        "q1_optimizer": opt.value,
        "q1_optimizer_note": "lower estimate",
        "q1_lower_analytic": lower.reported,
        "q_upper_certificate": cert.to_dict(),
        "p1_lower": p1,
        "c1_lower": c1,
        "degradable": {"holds": deg.holds, "residual": deg.residual},
        "single_letter": {"qualifies": sl.qualifies, "route": sl.route,
                          "match_residual": sl.match_residual, "capacity_bits": sl.capacity_bits},
    }
    code = EXIT_INFEASIBLE if args.require_certificate and not cert.feasible else EXIT_OK
    return report, code


def cmd_fig1(args):
    rows = cdc.fig1_data(args.p_rule, range(1, args.n_max + 1))
    return cdc.fig1_csv(rows), EXIT_OK


def cmd_superadd(args):
    params = cdc.CdcParams(args.p, args.n)
    lam = args.lam
    q_up = cdc.q_upper_closed_form(args.p, args.n)
    q_er = cdc.erasure_capacity(lam, cdc._dim_a(args.p, args.n))
    closed = (1 - lam) * math.log2(args.n + 1)
    report = {"p": args.p, "n": args.n, "lambda": lam, "joint_closed_form": closed,
              "q_upper_certificate": q_up, "q_erasure": q_er, "bound_sum": q_up + q_er}
    code = EXIT_OK
    try:
        joint = cdc.joint_coherent_information(params, lam)
        report["joint_numeric"] = joint
        report["mode"] = "numeric"
    except cdc.GuardExceeded as exc:
        joint = closed
        report["mode"] = "closed-form only"
        report["guard"] = str(exc)
        code = EXIT_GUARD
    report["margin"] = joint - (q_up + q_er)
    report["superadditive_certified"] = joint > q_up + q_er
    report["lambda_max"] = cdc.superadditivity_max_lambda(params)
    return report, code


def cmd_cdc(args):
    params = cdc.CdcParams(args.p, args.n, args.alpha)
    b = cdc.cdc_bounds(params, certify=not args.no_certify)
    report = {
        "p": params.p, "n": params.n, "alpha": params.alpha,
        "q1_lower": b.q1_lower, "q_upper": b.q_upper, "pc_exact": b.pc_exact,
        "q_certificate": b.q_certificate.to_dict() if b.q_certificate else "closed-form only",
        "c_certificate": b.c_certificate.to_dict() if b.c_certificate else "closed-form only",
    }
    code = EXIT_OK
    certs = [c for c in (b.q_certificate, b.c_certificate) if c is not None]
    if args.require_certificate and (not certs or not all(c.feasible for c in certs)):
        code = EXIT_INFEASIBLE
    return report, code


def cmd_single_letter(args):
    g = _load_gds(args.path, args.pad)
    candidates = None
    if args.candidates:
        candidates = [np.asarray(v, dtype=float)[..., 0] + 1j * np.asarray(v, dtype=float)[..., 1]
                      for v in _load_json(args.candidates)]
    v = singleletter.check_single_letter(g, candidates, restarts=args.restarts, seed=args.seed)
    report = {"qualifies": v.qualifies, "route": v.route, "match_residual": v.match_residual,
              "capacity_bits": v.capacity_bits,
              "matched_states": [[[z.real, z.imag] for z in s] for s in v.matched_states]}
    return report, EXIT_OK


def cmd_oracle(args):
    g = _load_gds(args.path, args.pad)
    ch = g.assembled
    j = witness.transpose_compose_choi(ch)
    est = witness.diamond_norm_oracle(j, (ch.dim_in, ch.dim_out), restarts=args.restarts, seed=args.seed)
    w = witness.build_gds_transposition_witness(g)
    cert = witness.check_transposition_witness(g, w, tol=args.tol)
    report = {"transpose_diamond_lower_estimate": est, "witness_y": w.y,
              "sandwich_ok": est <= w.y + 1e-7, "certificate": cert.to_dict()}
    return report, EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gdscap", description="Capacity bounds for generalized direct sum channels")
    p.add_argument("--seed", type=int, default=0, help="base seed; restart r uses seed + r")
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check a channel or GDS file")
    s.add_argument("path")
    s.add_argument("--pad", action="store_true", help="zero-pad subchannels to a common Kraus count")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("bounds", help="one-shot bounds and certificates for a GDS file")
    s.add_argument("path")
    s.add_argument("--pad", action="store_true")
    s.add_argument("--require-certificate", action="store_true")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("fig1", help="CSV of the quantum/private gap and the superadditivity window")
    s.add_argument("--p-rule", default="n^4", help="integer expression in n, e.g. 'n^4' or '16'")
    s.add_argument("--n-max", type=int, default=20)
    s.set_defaults(func=cmd_fig1)

    s = sub.add_parser("superadd", help="joint coherent information with an erasure channel")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.set_defaults(func=cmd_superadd)

    s = sub.add_parser("cdc", help="capacity sandwich of the completely depolarizing family")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--alpha", type=int, default=None)
    s.add_argument("--no-certify", action="store_true")
    s.add_argument("--require-certificate", action="store_true")
    s.set_defaults(func=cmd_cdc)

    s = sub.add_parser("single-letter", help="single-letter capacity conditions")
    s.add_argument("path")
    s.add_argument("--pad", action="store_true")
    s.add_argument("--candidates", default=None, help="JSON list of state vectors of [re, im] pairs")
    s.set_defaults(func=cmd_single_letter)

    s = sub.add_parser("oracle", help="diamond-norm lower estimate of T∘N next to the witness")
    s.add_argument("path")
    s.add_argument("--pad", action="store_true")
    s.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report, code = args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    emit(report, args)
    return code


if __name__ == "__main__":
    sys.exit(main())
