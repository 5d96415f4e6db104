"""Command-line front door.

Subcommands: norm, kfunc, ksweep, decompose, interp-norm, opnorm,
condexp, gen, verify.  Instances travel as JSON (see instances.py);
reports are JSON or CSV on stdout with floats rendered to 17 significant
digits, so identical invocations produce byte-identical output.  CSV
reports carry the instance hash and configuration as leading '#' lines.

Exit codes: 0 success, 1 verification failure or compute error, 2 usage
or malformed input.
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Sequence

from .condexp import condexp_condition_sup, condexp_decompose
from .instances import Instance, dump_json, format_float, gen_random
from .interp import closed_form_norm, k_envelope_sup, parse_t_grid, theta_norm_via_grid
from .kernelop import kernel_opnorm
from .kfun import k_decompose_gauge, k_exact, k_exact_sweep
from .lorentz import bracket_norm, lorentz_p1_norm, weak_quasinorm
from .measure import EnumerationLimitError, mask_indices
from .rectangle import ExponentConfig, gauge_rect_sup, rect_sup
from .simplex import LPError
from .verify import SUITE_NAMES, verify_suite

USAGE_ERROR = 2

CSV_COLUMNS = "t,k_t,K_t,ratio"


def _read_instance(path: str) -> Instance:
    if path == "-":
        text = sys.stdin.read()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return Instance.from_json(text)


def _emit(text: str) -> None:
    sys.stdout.write(text)
    if not text.endswith("\n"):
        sys.stdout.write("\n")


def _report_json(instance: Instance | None, config: dict, results: dict) -> str:
    payload: dict = {}
    if instance is not None:
        payload["instance_sha256"] = instance.sha256()
    payload["config"] = config
    payload.update(results)
    return dump_json(payload)


def _csv_header(instance: Instance, config: dict, columns: str) -> list[str]:
    return [
        f"# instance_sha256={instance.sha256()}",
        f"# config={dump_json(config)}",
        f"# columns={columns}",
    ]


def _exponents(instance: Instance, args) -> tuple[float, float]:
    p = instance.p
    p1 = args.p1 if getattr(args, "p1", None) is not None else p[0]
    p2 = args.p2 if getattr(args, "p2", None) is not None else (p[1] if len(p) > 1 else p[0])
    return float(p1), float(p2)


def _parse_exponent(text: str) -> float:
    return math.inf if text.strip().lower() in ("inf", "infinity") else float(text)


def _cmd_norm(args) -> int:
    inst = _read_instance(args.infile)
    config = {"functional": args.functional}
    if args.functional in ("weak", "bracket", "p1"):
        f = inst.scalar()
        p = _parse_exponent(args.p) if args.p is not None else inst.p[0]
        config["p"] = None if math.isinf(p) else p
        value = {
            "weak": weak_quasinorm,
            "bracket": bracket_norm,
            "p1": lorentz_p1_norm,
        }[args.functional](f, p)
        _emit(_report_json(inst, config, {"value": value}))
        return 0
    f = inst.kernel()
    scales = (
        tuple(float(s) for s in args.scales.split(","))
        if args.scales
        else (1.0,) * f.naxes
    )
    config["q"] = inst.q
    config["scales"] = list(scales)
    if args.functional == "rect":
        cfg = ExponentConfig(inst.q, inst.p)
        res = rect_sup(f, inst.q, cfg.alphas, scales)
    else:  # gauge-rect
        if inst.gauges is None:
            raise ValueError("instance carries no gauges")
        res = gauge_rect_sup(f, inst.q, inst.gauges, scales)
    _emit(
        _report_json(
            inst,
            config,
            {"value": res.value, "argmax": [list(mask_indices(m)) for m in res.masks]},
        )
    )
    return 0


def _decomposition_json(decomp) -> dict:
    return {
        "summands": [x.entries.tolist() for x in decomp.summands],
        "norms": list(decomp.norms),
        "weights": list(decomp.weights),
        "total": decomp.total,
        "certificate": decomp.certificate,
    }


def _cmd_kfunc(args) -> int:
    inst = _read_instance(args.infile)
    f = inst.kernel()
    p1, p2 = _exponents(inst, args)
    config = {"t": args.t, "p": [None if math.isinf(p) else p for p in (p1, p2)]}
    res = k_exact(f, args.t, p1, p2)
    lower = res.decomposition.certificate
    ratio = res.value / lower if lower > 0.0 else math.nan
    for line in _csv_header(inst, config, CSV_COLUMNS):
        _emit(line)
    _emit(
        ",".join(
            format_float(v).strip('"') for v in (args.t, lower, res.value, ratio)
        )
    )
    if args.dump_decomposition:
        with open(args.dump_decomposition, "w", encoding="utf-8") as fh:
            fh.write(dump_json(_decomposition_json(res.decomposition)))
    return 0


def _cmd_ksweep(args) -> int:
    inst = _read_instance(args.infile)
    f = inst.kernel()
    p1, p2 = _exponents(inst, args)
    ts = parse_t_grid(args.t_grid)
    config = {
        "t_grid": args.t_grid,
        "p": [None if math.isinf(p) else p for p in (p1, p2)],
    }
    results = k_exact_sweep(f, ts, p1, p2)
    cfg = ExponentConfig(1.0, (p1, p2))
    rows = []
    for t, res in zip(ts, results):
        lower = rect_sup(f, 1.0, cfg.alphas, (1.0, t)).value
        ratio = res.value / lower if lower > 0.0 else math.nan
        rows.append((t, lower, res.value, ratio))
    if args.out == "csv":
        for line in _csv_header(inst, config, CSV_COLUMNS):
            _emit(line)
        for row in rows:
            _emit(",".join(format_float(v).strip('"') for v in row))
    else:
        _emit(
            _report_json(
                inst,
                config,
                {
                    "rows": [
                        {"t": t, "k_t": lo, "K_t": val, "ratio": r}
                        for t, lo, val, r in rows
                    ]
                },
            )
        )
    return 0


def _cmd_decompose(args) -> int:
    inst = _read_instance(args.infile)
    f = inst.kernel()
    if inst.gauges is not None:
        res = k_decompose_gauge(f, inst.gauges, args.t)
        config = {"t": args.t, "gauges": [g.to_json_fragment() for g in inst.gauges]}
    else:
        p1, p2 = _exponents(inst, args)
        res = k_exact(f, args.t, p1, p2)
        config = {"t": args.t, "p": [None if math.isinf(p) else p for p in (p1, p2)]}
    _emit(
        _report_json(
            inst,
            config,
            {"value": res.value, "decomposition": _decomposition_json(res.decomposition)},
        )
    )
    return 0


def _cmd_interp_norm(args) -> int:
    inst = _read_instance(args.infile)
    f = inst.kernel()
    theta = args.theta if args.theta is not None else inst.theta
    if theta is None:
        raise ValueError("theta required (flag or instance field)")
    p1, p2 = _exponents(inst, args)
    grid_value = theta_norm_via_grid(f, theta, p1, p2, args.t_grid)
    envelope = k_envelope_sup(f, 1.0, theta, p1, p2)
    closed = closed_form_norm(f, 1.0, theta, p1, p2)
    slack = 2.0 ** max(theta, 1.0 - theta)
    config = {
        "theta": theta,
        "t_grid": args.t_grid,
        "p": [None if math.isinf(p) else p for p in (p1, p2)],
    }
    certified = (
        envelope / slack - 1e-9 <= grid_value <= 2.0 * envelope + 1e-9
    )
    _emit(
        _report_json(
            inst,
            config,
            {
                "grid_value": grid_value,
                "closed_form": closed,
                "envelope": envelope,
                "ratio": grid_value / envelope if envelope > 0.0 else math.nan,
                "certified_bracket": [envelope / slack, 2.0 * envelope],
                "certified": bool(certified),
            },
        )
    )
    return 0 if certified else 1


def _cmd_opnorm(args) -> int:
    inst = _read_instance(args.infile)
    f = inst.kernel()
    value = kernel_opnorm(f, args.r, args.s)
    _emit(_report_json(inst, {"r": args.r, "s": args.s}, {"value": value}))
    return 0


def _cmd_condexp(args) -> int:
    inst = _read_instance(args.infile)
    x = inst.scalar()
    if args.partitions:
        import json as _json

        from .condexp import partition_from_lists

        with open(args.partitions, "r", encoding="utf-8") as fh:
            raw = _json.load(fh)
        partitions = tuple(partition_from_lists(x.space, part) for part in raw)
    else:
        partitions = inst.to_partitions()
    condition, masks = condexp_condition_sup(x, partitions)
    results = {
        "condition": condition,
        "argmax": [list(mask_indices(m)) for m in masks],
    }
    if args.decompose:
        res = condexp_decompose(x, partitions)
        results["value"] = res.value
        results["norms"] = list(res.norms)
        results["ratio"] = res.value / condition if condition > 0.0 else math.nan
        results["summands"] = [s.values.tolist() for s in res.summands]
    _emit(_report_json(inst, {"partitions": len(partitions)}, results))
    return 0


def _cmd_gen(args) -> int:
    partitions = (
        tuple(int(x) for x in args.partitions.split(",")) if args.partitions else None
    )
    inst = gen_random(
        args.seed,
        args.shape,
        distribution=args.dist,
        weights=args.weights,
        total_mass=args.total_mass,
        partitions=partitions,
    )
    text = inst.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        _emit(dump_json({"written": args.out, "instance_sha256": inst.sha256()}))
    else:
        _emit(text)
    return 0


def _cmd_verify(args) -> int:
    report = verify_suite(args.suite, args.trials, args.seed, jobs=args.jobs)
    _emit(dump_json(report))
    return 0 if report["pass"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="interp-lab",
        description="Norms, K-functionals and decompositions on finite measure spaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_norm = sub.add_parser("norm", help="evaluate a norm or rectangle functional")
    p_norm.add_argument("--in", dest="infile", required=True, help="instance JSON ('-' for stdin)")
    p_norm.add_argument(
        "--functional",
        required=True,
        choices=("weak", "bracket", "p1", "rect", "gauge-rect"),
    )
    p_norm.add_argument("--p", help="exponent override for scalar norms ('inf' allowed)")
    p_norm.add_argument("--scales", help="comma-separated per-axis scales (rect)")
    p_norm.set_defaults(func=_cmd_norm)

    p_kfunc = sub.add_parser(
        "kfunc", help=f"K-functional at one t; CSV columns: {CSV_COLUMNS}"
    )
    p_kfunc.add_argument("--in", dest="infile", required=True)
    p_kfunc.add_argument("--t", type=float, required=True)
    p_kfunc.add_argument("--p1", type=_parse_exponent)
    p_kfunc.add_argument("--p2", type=_parse_exponent)
    p_kfunc.add_argument(
        "--dump-decomposition", help="write the optimal decomposition JSON here"
    )
    p_kfunc.set_defaults(func=_cmd_kfunc)

    p_sweep = sub.add_parser(
        "ksweep", help=f"K-functional over a t grid; CSV columns: {CSV_COLUMNS}"
    )
    p_sweep.add_argument("--in", dest="infile", required=True)
    p_sweep.add_argument("--t-grid", default="pow2:-10..10", help="e.g. pow2:-5..5")
    p_sweep.add_argument("--p1", type=_parse_exponent)
    p_sweep.add_argument("--p2", type=_parse_exponent)
    p_sweep.add_argument("--out", choices=("csv", "json"), default="csv")
    p_sweep.set_defaults(func=_cmd_ksweep)

    p_dec = sub.add_parser("decompose", help="optimal two-sided decomposition at t")
    p_dec.add_argument("--in", dest="infile", required=True)
    p_dec.add_argument("--t", type=float, default=1.0)
    p_dec.add_argument("--p1", type=_parse_exponent)
    p_dec.add_argument("--p2", type=_parse_exponent)
    p_dec.set_defaults(func=_cmd_decompose)

    p_interp = sub.add_parser(
        "interp-norm", help="theta-infinity norm: grid value vs closed form"
    )
    p_interp.add_argument("--in", dest="infile", required=True)
    p_interp.add_argument("--theta", type=float)
    p_interp.add_argument("--t-grid", default="pow2:-10..10")
    p_interp.add_argument("--p1", type=_parse_exponent)
    p_interp.add_argument("--p2", type=_parse_exponent)
    p_interp.set_defaults(func=_cmd_interp_norm)

    p_op = sub.add_parser("opnorm", help="kernel operator norm L_(r,1) -> weak-L_s")
    p_op.add_argument("--in", dest="infile", required=True)
    p_op.add_argument("--r", type=_parse_exponent, required=True)
    p_op.add_argument("--s", type=_parse_exponent, required=True)
    p_op.set_defaults(func=_cmd_opnorm)

    p_ce = sub.add_parser("condexp", help="conditional-expectation condition value")
    p_ce.add_argument("--in", dest="infile", required=True)
    p_ce.add_argument(
        "--partitions",
        help="JSON file of partitions (atom-index arrays); overrides the instance",
    )
    p_ce.add_argument("--decompose", action="store_true")
    p_ce.set_defaults(func=_cmd_condexp)

    p_gen = sub.add_parser("gen", help="generate a seeded random instance")
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--shape", required=True, help="e.g. 6x6 or 8")
    p_gen.add_argument(
        "--dist",
        default="uniform01",
        help="uniform01 | exp-tail | sparse:<density>",
    )
    p_gen.add_argument("--weights", default="counting", choices=("counting", "dirichlet"))
    p_gen.add_argument("--total-mass", type=float, default=1.0)
    p_gen.add_argument(
        "--partitions", help="comma-separated block counts (scalar instances)"
    )
    p_gen.add_argument("--out", help="write instance here instead of stdout")
    p_gen.set_defaults(func=_cmd_gen)

    p_ver = sub.add_parser("verify", help="run a named verification suite")
    p_ver.add_argument("suite", choices=SUITE_NAMES)
    p_ver.add_argument("--trials", type=int, default=100)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--jobs", type=int, default=1)
    p_ver.set_defaults(func=_cmd_verify)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (EnumerationLimitError, LPError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
