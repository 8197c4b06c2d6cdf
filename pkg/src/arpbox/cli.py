"""Command-line surface: conversions, losses, NMS, evaluation, sweep, fit demo.

Exit codes: 0 success, 1 I/O error, 2 domain error (bad geometry, bad values,
malformed inputs).
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
from pathlib import Path

import numpy as np

from .arp import (
    ArpBox,
    arp_from_vector,
    decode_vertices,
    encode_arp,
    encode_arp_lenient,
    quad_to_rect,
    rect_to_quad,
)
from .config import PROFILES, Config, config_from_profile, load_config
from .dataio import ParseError, parse_detections, parse_dota, write_detections
from .evaluation import APMetric, GroundTruth, evaluate
from .fitting import random_arp_box, run_fit_runs
from .geometry import GeometryError, OrientedRect, QuadBox
from .losses import BoxLossKind, BoxPair, box_loss_smooth, r_eiou_loss
from .postprocess import r_nms, select_final

__all__ = ["main"]

_KINDS = ("doc", "quad", "arp")


def _box_from_values(kind: str, values: list[float]):
    if kind == "doc":
        if len(values) != 5:
            raise ValueError("doc boxes need 5 values: cx cy w h theta")
        return OrientedRect(*values)
    if kind == "quad":
        if len(values) != 8:
            raise ValueError("quad boxes need 8 values: x1 y1 ... x4 y4")
        return QuadBox.from_points(np.asarray(values, dtype=float).reshape(4, 2))
    if kind == "arp":
        if len(values) != 7:
            raise ValueError("arp boxes need 7 values: x y w h lam1 lam2 lam3")
        return arp_from_vector(values)
    raise ValueError(f"unknown box kind {kind!r}")


def _to_rect(box) -> OrientedRect:
    if isinstance(box, OrientedRect):
        return box
    if isinstance(box, QuadBox):
        return quad_to_rect(box)
    return quad_to_rect(decode_vertices(box))


def _convert(box, to_kind: str):
    if to_kind == "arp":
        return box if isinstance(box, ArpBox) else encode_arp(_to_rect(box))
    if to_kind == "doc":
        return _to_rect(box)
    if isinstance(box, QuadBox):
        return box
    if isinstance(box, OrientedRect):
        return rect_to_quad(box)
    return decode_vertices(box)


def _box_values(box) -> dict:
    if isinstance(box, OrientedRect):
        return {"kind": "doc", "values": [box.cx, box.cy, box.w, box.h, box.theta]}
    if isinstance(box, QuadBox):
        return {"kind": "quad", "values": [c for p in box.vertices for c in p]}
    return {
        "kind": "arp",
        "values": [box.x, box.y, box.w, box.h, box.lam1, box.lam2, box.lam3],
    }


def _parse_box_arg(text: str):
    obj = json.loads(text)
    if not isinstance(obj, dict) or "kind" not in obj or "values" not in obj:
        raise ValueError('box argument must be JSON like {"kind": ..., "values": [...]}')
    return _box_from_values(obj["kind"], [float(v) for v in obj["values"]])


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_gt_dir(path: str) -> dict[str, list]:
    gt_dir = Path(path)
    if not gt_dir.is_dir():
        raise FileNotFoundError(f"ground-truth directory not found: {path}")
    out: dict[str, list] = {}
    for file in sorted(gt_dir.glob("*.txt")):
        out[file.stem] = parse_dota(file.read_text(encoding="utf-8"))
    if not out:
        raise FileNotFoundError(f"no .txt annotation files under {path}")
    return out


def _gt_class_mapping(gts_by_image: dict[str, list]) -> dict[str, int]:
    names = sorted({rec.category for recs in gts_by_image.values() for rec in recs})
    return {name: i for i, name in enumerate(names)}


def _final_boxes(dets, lambda_thr: float) -> dict[str, list]:
    by_image: dict[str, list] = {}
    for image, det in dets:
        by_image.setdefault(image, []).append(select_final(det, lambda_thr=lambda_thr))
    return by_image


def _ground_truths(gts_by_image: dict[str, list], mapping: dict[str, int]) -> dict[str, list]:
    out: dict[str, list] = {}
    for image, recs in gts_by_image.items():
        out[image] = [
            GroundTruth(box=r.quad, class_id=mapping[r.category], difficult=bool(r.difficult))
            for r in recs
        ]
    return out


def _config_from_args(args: argparse.Namespace) -> Config:
    cfg = Config()
    if getattr(args, "config", None):
        cfg = load_config(args.config, base=cfg)
    if getattr(args, "profile", None):
        cfg = config_from_profile(args.profile, base=cfg)
    if getattr(args, "seed", None) is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    return cfg


def _cmd_convert(args: argparse.Namespace) -> int:
    values = json.loads(args.values)
    if not isinstance(values, list):
        raise ValueError("VALUES must be a JSON array")
    box = _box_from_values(args.from_kind, [float(v) for v in values])
    converted = _convert(box, args.to_kind)
    _emit(json.dumps(_box_values(converted), sort_keys=True) + "\n", args.out)
    return 0


def _cmd_loss(args: argparse.Namespace) -> int:
    pred = _parse_box_arg(args.pred)
    target = _parse_box_arg(args.target)

    def as_arp(box) -> ArpBox:
        if isinstance(box, ArpBox):
            return box
        return encode_arp_lenient(_to_rect(box))

    pair = BoxPair(pred=as_arp(pred), target=as_arp(target))
    if args.kind == "smooth":
        breakdown = box_loss_smooth(pair)
    else:
        breakdown = r_eiou_loss(pair, use_rotated_iou=args.rotated_iou)
    payload = {"kind": args.kind, "total": breakdown.total, "terms": dict(breakdown.terms)}
    _emit(json.dumps(payload, sort_keys=True) + "\n", args.out)
    return 0


def _cmd_nms(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    iou_thr = args.iou if args.iou is not None else cfg.nms_iou
    dets = parse_detections(Path(args.dets).read_text(encoding="utf-8"))
    by_image: dict[str, list] = {}
    image_order: list[str] = []
    for image, det in dets:
        if image not in by_image:
            image_order.append(image)
        by_image.setdefault(image, []).append(det)
    kept_pairs = []
    for image in image_order:
        kept = r_nms(
            by_image[image],
            iou_thr=iou_thr,
            score_thr=args.score_thr,
            per_class=not args.cross_class,
        )
        kept_pairs.extend((image, det) for det in kept)
    _emit(write_detections(kept_pairs), args.out)
    return 0


def _evaluate_from_files(
    args: argparse.Namespace, cfg: Config, lambda_thr: float
):
    gts_raw = _load_gt_dir(args.gt)
    mapping = _gt_class_mapping(gts_raw)
    dets = parse_detections(Path(args.dets).read_text(encoding="utf-8"))
    metric = APMetric.VOC12 if args.metric == "voc12" else APMetric.VOC07
    report = evaluate(
        dets_by_image=_final_boxes(dets, lambda_thr),
        gts_by_image=_ground_truths(gts_raw, mapping),
        iou_thr=cfg.match_iou,
        metric=metric,
    )
    return report, mapping


def _cmd_eval(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    report, mapping = _evaluate_from_files(args, cfg, cfg.lambda_thr)
    payload = {"categories": mapping, "report": report.to_json_dict()}
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    if args.csv:
        names = {cid: name for name, cid in mapping.items()}
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["class", "ap07", "ap12"])
        for cid, ce in sorted(report.per_class.items()):
            writer.writerow([names.get(cid, cid), f"{ce.ap07:.6f}", f"{ce.ap12:.6f}"])
        Path(args.csv).write_text(buf.getvalue(), encoding="utf-8")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    try:
        thresholds = [float(t) for t in args.thresholds.split(",") if t.strip()]
    except ValueError as exc:
        raise ValueError(f"bad threshold list: {exc}") from None
    if not thresholds:
        raise ValueError("threshold list is empty")
    for t in thresholds:
        if not 0 < t < 1:
            raise ValueError(f"thresholds must lie in (0, 1), got {t}")
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["threshold", "map"])
    for thr in thresholds:
        report, _ = _evaluate_from_files(args, cfg, thr)
        writer.writerow([f"{thr:.6g}", f"{report.mean_ap:.6f}"])
    _emit(buf.getvalue(), args.out)
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    rng = np.random.default_rng(cfg.seed)
    text = Path(args.targets).read_text(encoding="utf-8")
    pairs: list[tuple[ArpBox, ArpBox]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(line_no, f"invalid JSON: {exc}") from None
        if not isinstance(obj, dict) or "box" not in obj:
            raise ParseError(line_no, 'each target line needs a "box" entry')

        def read_box(entry) -> ArpBox:
            box = _box_from_values(entry["kind"], [float(v) for v in entry["values"]])
            return box if isinstance(box, ArpBox) else encode_arp_lenient(_to_rect(box))

        try:
            target = read_box(obj["box"])
            init = read_box(obj["init"]) if "init" in obj else random_arp_box(rng)
        except (GeometryError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(line_no, f"bad box: {exc}") from None
        pairs.append((init, target))
    if not pairs:
        raise ValueError("targets file holds no boxes")
    kind = BoxLossKind.SMOOTH_L1 if args.loss == "smooth" else BoxLossKind.R_EIOU
    results, traces = run_fit_runs(
        pairs,
        steps=cfg.fit.steps,
        lr=cfg.fit.lr,
        fd_step=cfg.fit.fd_step,
        box_loss_kind=kind,
        seed=cfg.seed,
    )
    trace_buf = _io.StringIO()
    writer = csv.writer(trace_buf, lineterminator="\n")
    writer.writerow(["run", "step", "loss"])
    for run, trace in enumerate(traces):
        for step, loss in enumerate(trace.losses):
            writer.writerow([run, step, f"{loss:.10g}"])
    _emit(trace_buf.getvalue(), args.out)
    summary_buf = _io.StringIO()
    writer = csv.writer(summary_buf, lineterminator="\n")
    writer.writerow(["run", "final_loss", "final_iou", "steps"])
    for res in results:
        writer.writerow(
            [res.run, f"{res.final_loss:.10g}", f"{res.final_iou:.6f}", res.steps]
        )
    if args.summary:
        Path(args.summary).write_text(summary_buf.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(summary_buf.getvalue())
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file overlaying the defaults")
    parser.add_argument(
        "--profile", choices=sorted(PROFILES), help="dataset profile (sets lambda_thr)"
    )
    parser.add_argument("--seed", type=int, help="seed for randomized steps")
    parser.add_argument("--out", help="output path (stdout when omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arpbox",
        description="Oriented-box toolkit: area-ratio encoding, losses, NMS, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert a box among doc/quad/arp forms")
    p.add_argument("--from", dest="from_kind", choices=_KINDS, required=True)
    p.add_argument("--to", dest="to_kind", choices=_KINDS, required=True)
    p.add_argument("values", help="box values as a JSON array")
    _add_common(p)
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("loss", help="box loss between a prediction and a target")
    p.add_argument("--kind", choices=("smooth", "reiou"), default="reiou")
    p.add_argument("--pred", required=True, help='JSON {"kind": ..., "values": [...]}')
    p.add_argument("--target", required=True, help='JSON {"kind": ..., "values": [...]}')
    p.add_argument(
        "--rotated-iou",
        action="store_true",
        help="use rotated IoU in the reiou overlap term",
    )
    _add_common(p)
    p.set_defaults(func=_cmd_loss)

    p = sub.add_parser("nms", help="rotated non-maximum suppression over a detection stream")
    p.add_argument("--dets", required=True, help="detections JSONL file")
    p.add_argument("--iou", type=float, help="suppression IoU threshold (default from config)")
    p.add_argument("--score-thr", type=float, default=0.0)
    p.add_argument("--cross-class", action="store_true", help="suppress across classes")
    _add_common(p)
    p.set_defaults(func=_cmd_nms)

    p = sub.add_parser("eval", help="evaluate detections against DOTA-format ground truth")
    p.add_argument("--gt", required=True, help="directory of <image>.txt annotation files")
    p.add_argument("--dets", required=True, help="detections JSONL file")
    p.add_argument("--metric", choices=("voc07", "voc12"), default="voc07")
    p.add_argument("--csv", help="also write per-class AP CSV here")
    _add_common(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="mAP across obliquity thresholds")
    p.add_argument("--gt", required=True)
    p.add_argument("--dets", required=True)
    p.add_argument("--thresholds", required=True, help="comma-separated list in (0, 1)")
    p.add_argument("--metric", choices=("voc07", "voc12"), default="voc07")
    _add_common(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("fit", help="gradient-descent fit demo over a targets file")
    p.add_argument("--targets", required=True, help="JSONL file of target boxes")
    p.add_argument("--loss", choices=("smooth", "reiou"), default="reiou")
    p.add_argument("--summary", help="summary CSV path (stdout when omitted)")
    _add_common(p)
    p.set_defaults(func=_cmd_fit)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, IsADirectoryError, PermissionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ParseError, GeometryError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
