"""Command-line interface.

Exit codes: 0 success, 1 a validation check failed, 2 bad usage or input.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import benchmark as bench
from .baselines import segmentation_covering
from .raster_io import (
    QualityReport,
    dumps_json,
    load_image,
    load_label_map,
    write_gray_pgm,
    write_report,
    write_reports_csv,
)
from .regions import compact_labels
from .saliency import BORDERS, saliency_map
from .scale_quality import (
    IDEAL_FIT_CONSTANT,
    DEFAULT_FIT_CONSTANT,
    MetricConfig,
    evaluate,
    prepare_labels,
    to_spectral_space,
)
from .synthetic import TABLE1_SPLITS, fit_saliency_constant, table1_experiment

log = logging.getLogger("segeval")

# validate-model tolerances
INTRA_REL_TOL = 0.05
INTER_REL_TOL = 0.01
Q0_BAND = (0.95, 1.05)
SLOPE_BAND = (0.47, 0.53)
MIN_R2 = 0.99


class InputError(Exception):
    pass


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def _add_metric_flags(p: argparse.ArgumentParser, fit_default: float = DEFAULT_FIT_CONSTANT) -> None:
    p.add_argument("--saliency-mean", choices=("region", "global"), default="region")
    p.add_argument("--fit-constant", type=_positive_float, default=fit_default)
    p.add_argument("--space", choices=("native", "lab"), default=None,
                   help="spectral space (default: lab for colour, native for gray)")
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=4)
    p.add_argument("--enforce-connectivity", action="store_true")
    p.add_argument("--blur-border", choices=BORDERS, default=None)


def _config(args) -> MetricConfig:
    return MetricConfig(
        fit_constant=args.fit_constant,
        saliency_mode=args.saliency_mean,
        spectral_space=args.space,
        connectivity=args.connectivity,
        enforce_connectivity=args.enforce_connectivity,
        blur_border=args.blur_border,
    )


def _emit(data: bytes, output: str | None) -> None:
    if output:
        Path(output).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def cmd_evaluate(args) -> int:
    img = load_image(args.image)
    lm = load_label_map(args.labels, img.width, img.height)
    report = evaluate(
        img, lm, args.target_scale or [], _config(args),
        image_id=Path(args.image).stem, with_baselines=args.with_baselines,
    )
    _emit(write_report(report, args.format), args.output)
    return 0


def _rank(reports: list[QualityReport], sources: list[str], n_targets: int) -> list[dict]:
    rankings = []
    for t in range(n_targets):
        target = reports[0].relative[t][0]
        keyed = []
        for qr in reports:
            qt = qr.relative[t][1]
            keyed.append(-math.inf if qt is None else qt)
        best = max(range(len(keyed)), key=lambda i: (keyed[i], -i))
        best_value = keyed[best]
        tied = [
            i for i, v in enumerate(keyed)
            if v == best_value or (math.isfinite(v) and math.isfinite(best_value)
                                   and math.isclose(v, best_value, rel_tol=1e-9))
        ]
        rankings.append({
            "target_scale": target,
            "best": best,
            "best_source": sources[best],
            "tie": len(tied) > 1,
            "tied": tied,
            "qt": [None if v == -math.inf else v for v in keyed],
        })
    return rankings


def cmd_compare(args) -> int:
    if len(args.labels) < 2:
        raise InputError("compare needs at least two --labels")
    if not args.target_scale:
        raise InputError("compare needs at least one --target-scale")
    img = load_image(args.image)
    cfg = _config(args)
    reports = []
    for path in args.labels:
        lm = load_label_map(path, img.width, img.height)
        reports.append(evaluate(img, lm, args.target_scale, cfg, image_id=Path(path).name,
                                with_baselines=args.with_baselines))
    if args.format == "csv":
        _emit(write_reports_csv(reports), args.output)
        return 0
    out = {
        "image": Path(args.image).stem,
        "reports": [r.to_dict() for r in reports],
        "rankings": _rank(reports, list(args.labels), len(args.target_scale)),
    }
    _emit((dumps_json(out) + "\n").encode(), args.output)
    return 0


def cmd_covering(args) -> int:
    cands = [compact_labels(load_label_map(p))[0] for p in args.candidate]
    refs = [compact_labels(load_label_map(p))[0] for p in args.reference]
    shapes = {lm.labels.shape for lm in cands + refs}
    if len(shapes) > 1:
        raise InputError(f"label maps differ in size: {sorted(shapes)}")
    if len(cands) == 1 and len(refs) == 1:
        out = {"covering": segmentation_covering(cands[0], refs[0])}
    else:
        matrix = [[segmentation_covering(c, r) for c in cands] for r in refs]
        out = {
            "matrix": matrix,
            "rows": list(args.reference),
            "columns": list(args.candidate),
        }
    _emit((dumps_json(out) + "\n").encode(), args.output)
    return 0


def cmd_saliency(args) -> int:
    img = load_image(args.image)
    cfg = _config(args)
    lm = None
    if args.labels:
        lm = prepare_labels(load_label_map(args.labels, img.width, img.height), cfg)
    elif cfg.saliency_mode == "region":
        raise InputError("region-mode saliency needs --labels (or use --saliency-mean global)")
    sal = saliency_map(to_spectral_space(img, cfg), cfg.saliency_mode, lm, cfg.blur_border)
    write_gray_pgm(sal.values, args.output)
    return 0


def validate_model(fit_constant: float = IDEAL_FIT_CONSTANT) -> dict:
    cfg = MetricConfig(fit_constant=fit_constant, saliency_mode="region", spectral_space="native")
    table = table1_experiment(cfg)
    rows = []
    for n in TABLE1_SPLITS:
        d_intra, d_inter, q0 = table[n]
        want_intra, want_inter = 128.0 / n, 256.0 / n
        if n == 256:
            ok = d_intra == 0.0 and d_inter is not None and abs(d_inter - 1.0) <= 0.01
        else:
            ok = (
                d_inter is not None and q0 is not None
                and abs(d_intra - want_intra) <= INTRA_REL_TOL * want_intra
                and abs(d_inter - want_inter) <= INTER_REL_TOL * want_inter
                and Q0_BAND[0] <= q0 <= Q0_BAND[1]
            )
        rows.append({
            "n": n, "d_intra": d_intra, "d_inter": d_inter, "q0": q0,
            "expected_d_intra": 0.0 if n == 256 else want_intra,
            "expected_d_inter": want_inter, "pass": bool(ok),
        })
    slope, r2 = fit_saliency_constant(blur=True)
    slope0, r20 = fit_saliency_constant(blur=False)
    fit = {
        "slope": slope, "r_squared": r2,
        "pass": bool(SLOPE_BAND[0] <= slope <= SLOPE_BAND[1] and r2 >= MIN_R2),
    }
    oracle = {
        "slope": slope0, "r_squared": r20,
        "pass": bool(abs(slope0 - 0.5) <= 1e-12 and abs(r20 - 1.0) <= 1e-12),
    }
    return {
        "fit_constant": fit_constant,
        "table1": rows,
        "fit": fit,
        "fit_no_blur": oracle,
        "pass": all(r["pass"] for r in rows) and fit["pass"] and oracle["pass"],
    }


def _fmt(v) -> str:
    if v is None:
        return "n/a"
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return f"{v:.4f}"


def cmd_validate_model(args) -> int:
    result = validate_model(args.fit_constant)
    if args.json:
        _emit((dumps_json(result) + "\n").encode(), args.output)
    else:
        lines = [f"gradient fixture, fit constant {args.fit_constant}"]
        lines.append(f"{'n':>5} {'d_intra':>10} {'want':>8} {'d_inter':>10} {'want':>8} {'q0':>8}  ok")
        for r in result["table1"]:
            lines.append(
                f"{r['n']:>5} {_fmt(r['d_intra']):>10} {_fmt(r['expected_d_intra']):>8} "
                f"{_fmt(r['d_inter']):>10} {_fmt(r['expected_d_inter']):>8} {_fmt(r['q0']):>8}  "
                f"{'PASS' if r['pass'] else 'FAIL'}"
            )
        for key, label in (("fit", "saliency fit (blur)"), ("fit_no_blur", "saliency fit (no blur)")):
            f = result[key]
            lines.append(f"{label}: slope {f['slope']:.4f}, R^2 {f['r_squared']:.5f}  "
                         f"{'PASS' if f['pass'] else 'FAIL'}")
        lines.append("overall: " + ("PASS" if result["pass"] else "FAIL"))
        _emit(("\n".join(lines) + "\n").encode(), args.output)
    return 0 if result["pass"] else 1


def cmd_benchmark(args) -> int:
    if args.from_matrices:
        try:
            spec = json.loads(Path(args.from_matrices).read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.from_matrices}: invalid JSON ({exc})") from None
        result = bench.run_from_matrices(spec)
    else:
        if not args.dataset:
            raise InputError("benchmark needs --dataset or --from-matrices")
        result = bench.run_dataset(args.dataset, _config(args))
        if not result["images"]:
            raise InputError(f"no usable images under {args.dataset}")
    _emit((dumps_json(result) + "\n").encode(), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segeval",
        description="Scale-constrained unsupervised evaluation of image segmentations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="score one segmentation")
    p.add_argument("--image", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--target-scale", type=_positive_float, action="append")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--with-baselines", action="store_true")
    p.add_argument("-o", "--output")
    _add_metric_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="rank several segmentations of one image")
    p.add_argument("--image", required=True)
    p.add_argument("--labels", action="append", required=True)
    p.add_argument("--target-scale", type=_positive_float, action="append")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--with-baselines", action="store_true")
    p.add_argument("-o", "--output")
    _add_metric_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("covering", help="segmentation covering of references by candidates")
    p.add_argument("--candidate", action="append", required=True)
    p.add_argument("--reference", action="append", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_covering)

    p = sub.add_parser("saliency", help="write the saliency map as PGM")
    p.add_argument("--image", required=True)
    p.add_argument("--labels")
    p.add_argument("-o", "--output", required=True)
    _add_metric_flags(p)
    p.set_defaults(func=cmd_saliency)

    p = sub.add_parser("validate-model", help="reproduce the gradient calibration")
    p.add_argument("--fit-constant", type=_positive_float, default=IDEAL_FIT_CONSTANT)
    p.add_argument("--json", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_validate_model)

    p = sub.add_parser("benchmark", help="correlate methods with segmentation covering")
    p.add_argument("--dataset")
    p.add_argument("--from-matrices")
    p.add_argument("-o", "--output")
    _add_metric_flags(p)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, OSError, ValueError, KeyError) as exc:
        print(f"segeval {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
