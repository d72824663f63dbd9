"""Command-line front end.

JSON results go to stdout, logs to stderr, so commands compose in shell
pipelines. Exit codes: 0 success, 1 usage error, 2 data error (bad inputs,
unscorable samples asked to be scored, malformed files), 3 internal error.

A config file (``key = value`` lines, ``#`` comments) can seed any pipeline
option; explicit flags win. Keys: encoder, radial_res, angular_res,
max_shift, overlap_floor, pupil_r_min/max, iris_r_min/max,
gradient_threshold, accumulator_step, contrast_gamma, gabor_wavelengths,
gabor_sigma_ratio, gabor_orientations, gabor_stride, loggabor_wavelength,
loggabor_sigma_on_f, kernel_bank.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import ForensirisError
from .model import Segmentation

log = logging.getLogger("forensiris")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _emit(payload) -> None:
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def parse_config_file(path) -> dict:
    values = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ForensirisError(f"config line without '=': {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(",", " ").split())


def build_pipeline_config(args) -> "PipelineConfig":
    from .encoding import GaborBankConfig, LogGaborConfig, load_kernel_bank
    from .matching import PipelineConfig
    from .segmentation import HoughConfig

    cfg_file = parse_config_file(args.config) if getattr(args, "config", None) else {}

    def pick(name, default=None):
        flag = getattr(args, name, None)
        if flag is not None:
            return flag
        return cfg_file.get(name, default)

    hough_kwargs = {}
    pupil_lo, pupil_hi = pick("pupil_r_min"), pick("pupil_r_max")
    iris_lo, iris_hi = pick("iris_r_min"), pick("iris_r_max")
    if pupil_lo or pupil_hi:
        hough_kwargs["pupil_r_range"] = (int(pupil_lo or 20), int(pupil_hi or 80))
    if iris_lo or iris_hi:
        hough_kwargs["iris_r_range"] = (int(iris_lo or 60), int(iris_hi or 180))
    for key, cast in (("gradient_threshold", float), ("accumulator_step", int),
                      ("contrast_gamma", float)):
        val = pick(key)
        if val is not None:
            hough_kwargs[key] = cast(val)

    gabor_kwargs = {}
    if pick("gabor_wavelengths"):
        gabor_kwargs["wavelengths"] = _floats(str(pick("gabor_wavelengths")))
    if pick("gabor_sigma_ratio"):
        gabor_kwargs["sigma_ratio"] = float(pick("gabor_sigma_ratio"))
    if pick("gabor_orientations"):
        gabor_kwargs["orientations"] = _floats(str(pick("gabor_orientations")))
    if pick("gabor_stride"):
        stride = _floats(str(pick("gabor_stride")))
        gabor_kwargs["grid_stride"] = (int(stride[0]), int(stride[1]))

    loggabor_kwargs = {}
    if pick("loggabor_wavelength"):
        loggabor_kwargs["center_wavelength"] = float(pick("loggabor_wavelength"))
    if pick("loggabor_sigma_on_f"):
        loggabor_kwargs["sigma_on_f"] = float(pick("loggabor_sigma_on_f"))

    bank = None
    bank_path = pick("kernel_bank")
    if bank_path:
        bank = load_kernel_bank(bank_path)

    return PipelineConfig(
        encoder=str(pick("encoder", "bif")),
        hough=HoughConfig(**hough_kwargs),
        radial_res=int(pick("radial_res", 64)),
        angular_res=int(pick("angular_res", 512)),
        gabor=GaborBankConfig(**gabor_kwargs),
        loggabor=LogGaborConfig(**loggabor_kwargs),
        kernel_bank=bank,
        max_shift=int(pick("max_shift", 16)),
        overlap_floor=float(pick("overlap_floor", 0.10)),
    )


def _add_pipeline_flags(p: argparse.ArgumentParser, encoder: bool = True) -> None:
    p.add_argument("--config", help="key = value config file")
    if encoder:
        p.add_argument("--encoder", choices=["gabor2d", "loggabor1d", "bif"])
    p.add_argument("--radial-res", dest="radial_res", type=int)
    p.add_argument("--angular-res", dest="angular_res", type=int)
    p.add_argument("--max-shift", dest="max_shift", type=int)
    p.add_argument("--overlap-floor", dest="overlap_floor", type=float)
    p.add_argument("--kernel-bank", dest="kernel_bank")
    for name in ("pupil-r-min", "pupil-r-max", "iris-r-min", "iris-r-max"):
        p.add_argument(f"--{name}", dest=name.replace("-", "_"), type=int)
    p.add_argument("--gradient-threshold", dest="gradient_threshold", type=float)
    p.add_argument("--contrast-gamma", dest="contrast_gamma", type=float)


def _load_seg_arg(args, image):
    from .segmentation import segment

    if getattr(args, "seg", None):
        payload = json.loads(Path(args.seg).read_text(encoding="utf-8"))
        seg = Segmentation.from_dict(payload)
        mask_path = payload.get("mask_path")
        if mask_path:
            from .imageio import load_image
            from .segmentation import attach_mask

            seg = Segmentation(pupil=seg.pupil, iris=seg.iris, image_shape=image.pixels.shape)
            seg = attach_mask(seg, load_image(mask_path))
        return seg
    cfg = build_pipeline_config(args)
    return segment(image, cfg.hough)


# ---------------------------------------------------------------------------
# Subcommand handlers


def cmd_segment(args) -> int:
    from .imageio import load_image

    image = load_image(args.image, channel=args.channel)
    cfg = build_pipeline_config(args)
    from .segmentation import segment

    seg = segment(image, cfg.hough)
    payload = seg.to_dict()
    if args.mask:
        payload["mask_path"] = args.mask
    _emit(payload)
    return EXIT_OK


def cmd_normalize(args) -> int:
    from .imageio import load_image
    from .normalization import dump_polar, polar_mask_coverage, rubber_sheet

    image = load_image(args.image, channel=args.channel)
    seg = _load_seg_arg(args, image)
    cfg = build_pipeline_config(args)
    polar = rubber_sheet(image, seg, cfg.radial_res, cfg.angular_res)
    if args.out_texture and args.out_mask:
        dump_polar(polar, args.out_texture, args.out_mask)
    _emit({
        "rows": polar.rows,
        "cols": polar.cols,
        "mask_coverage": polar_mask_coverage(polar),
        "texture": args.out_texture,
        "mask": args.out_mask,
    })
    return EXIT_OK


def cmd_encode(args) -> int:
    from .imageio import load_image
    from .matching import encode_polar
    from .normalization import rubber_sheet
    from .templates import save_template

    image = load_image(args.image, channel=args.channel)
    seg = _load_seg_arg(args, image)
    cfg = build_pipeline_config(args)
    polar = rubber_sheet(image, seg, cfg.radial_res, cfg.angular_res)
    template = encode_polar(polar, cfg)
    save_template(args.out, template)
    _emit({
        "encoder": template.encoder_id,
        "rows": template.rows,
        "cols": template.cols,
        "bitplanes": template.bitplane_count,
        "params_digest": template.params_digest.hex(),
        "out": args.out,
    })
    return EXIT_OK


def cmd_match(args) -> int:
    from .imageio import load_image
    from .matching import match_images

    cfg = build_pipeline_config(args)
    img_a = load_image(args.image_a, channel=args.channel)
    img_b = load_image(args.image_b, channel=args.channel)
    record = match_images(img_a, img_b, cfg)
    payload = {
        "probe_id": record.probe_id,
        "gallery_id": record.gallery_id,
        "encoder": cfg.encoder,
        "score": record.score,
        "best_shift": record.best_shift,
        "ftm": record.ftm,
    }
    if args.heatmap and not record.ftm:
        from .matching import template_from_image, similarity_heatmap
        from .reporting import heatmap_to_png_bytes

        ta = template_from_image(img_a, cfg)
        tb = template_from_image(img_b, cfg)
        hm = similarity_heatmap(ta, tb, record.best_shift)
        Path(args.heatmap).write_bytes(heatmap_to_png_bytes(hm))
        payload["heatmap"] = args.heatmap
    _emit(payload)
    return EXIT_OK


def cmd_quality(args) -> int:
    from .imageio import load_image
    from .quality import compute_quality

    image = load_image(args.image, channel=args.channel)
    seg = _load_seg_arg(args, image)
    record = compute_quality(image, seg)
    _emit(record.to_dict())
    return EXIT_OK


def cmd_pairs(args) -> int:
    import csv as _csv

    from .evaluation import generate_pairs
    from .metadata import load_metadata_csv

    meta = load_metadata_csv(args.metadata)
    genuine, impostor = generate_pairs(meta)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["probe_id", "gallery_id", "label"])
            for a, b in genuine:
                writer.writerow([a.sample_id, b.sample_id, "genuine"])
            for a, b in impostor:
                writer.writerow([a.sample_id, b.sample_id, "impostor"])
    _emit({"n_genuine": len(genuine), "n_impostor": len(impostor), "out": args.out})
    return EXIT_OK


def cmd_run_eval(args) -> int:
    from .metadata import load_metadata_csv
    from .runner import run_evaluation

    meta = load_metadata_csv(args.metadata)
    cfg = build_pipeline_config(args)
    encoders = args.encoders.split(",") if args.encoders else ["gabor2d", "loggabor1d", "bif"]
    result = run_evaluation(
        meta, args.images, args.out, cfg,
        encoders=encoders, jobs=args.jobs, figures=not args.no_figures,
    )
    _emit({
        "encoders": encoders,
        "n_samples": len(meta),
        "template_failures": result.template_failures,
        "outputs": [str(p) for p in result.outputs],
    })
    return EXIT_OK


def cmd_balance(args) -> int:
    from .metadata import load_metadata_csv
    from .stats import balance_pmi, split_age_groups

    meta = load_metadata_csv(args.metadata)
    if args.group_by == "gender":
        groups = {}
        for m in meta:
            if m.gender in ("male", "female"):
                groups.setdefault(m.gender, []).append(m)
    else:
        split = split_age_groups(meta)
        groups = {k: v for k, v in split.groups.items() if v}
    result = balance_pmi(groups, tolerance=args.tolerance, min_size=args.min_size)
    _emit({
        "group_by": args.group_by,
        "means": result.means,
        "sizes": {k: len(v) for k, v in result.groups.items()},
        "removed": [{"group": g, "sample_id": s} for g, s in result.removed],
    })
    return EXIT_OK


def cmd_stats(args) -> int:
    from .evaluation import scored
    from .scores import read_score_csv
    from .stats import anova_oneway, bootstrap_dprime, kruskal_wallis

    records = read_score_csv(args.scores)
    group_values = {}
    labels = (("male", "female") if args.group_by == "gender"
              else ("1-33", "34-66", "67-99"))
    attr = args.group_by
    for label in labels:
        subset = [r for r in records if getattr(r, attr) == label]
        gen, imp = scored(subset, "genuine"), scored(subset, "impostor")
        if len(gen) >= 4 and len(imp) >= 4:
            group_values[label] = bootstrap_dprime(
                gen, imp, reps=args.reps, frac=args.frac, seed=args.seed)
    if len(group_values) < 2:
        raise ForensirisError(
            "need at least two groups with >= 4 genuine and impostor scores each")
    samples = [group_values[k] for k in sorted(group_values)]
    payload = {
        "group_by": args.group_by,
        "reps": args.reps,
        "frac": args.frac,
        "seed": args.seed,
        "d_prime": {k: v for k, v in sorted(group_values.items())},
        "anova": anova_oneway(samples).to_dict(),
        "kruskal_wallis": kruskal_wallis(samples).to_dict(),
    }
    if args.out_figure:
        from .reporting import bootstrap_dprime_figure

        bootstrap_dprime_figure(group_values, args.out_figure,
                                title=f"resampled d' by {args.group_by}")
        payload["figure"] = args.out_figure
    _emit(payload)
    return EXIT_OK


def _read_score_column(path) -> list[float]:
    values = []
    for row_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        line = raw.strip()
        if not line or (row_no == 0 and line.lower() in ("score", "scores")):
            continue
        values.append(float(line.split(",")[0]))
    return values


def cmd_pad_eval(args) -> int:
    from .evaluation import pad_metrics

    bona = _read_score_column(args.bona_fide)
    attacks = _read_score_column(args.attacks)
    levels = [float(v) for v in args.apcer.split(",")] if args.apcer else []
    summary = pad_metrics(bona, attacks, levels)
    payload = summary.to_dict()
    if args.out_figure:
        from .reporting import pad_distribution_figure

        pad_distribution_figure(summary, args.out_figure, title="PAD score distributions")
        payload["figure"] = args.out_figure
    _emit(payload)
    return EXIT_OK


def cmd_enroll(args) -> int:
    from .gallery import TemplateGallery
    from .imageio import load_image
    from .matching import template_from_image
    from .metadata import load_metadata_csv

    cfg = build_pipeline_config(args)
    gallery = TemplateGallery(args.gallery)
    meta = load_metadata_csv(args.metadata)
    images_dir = Path(args.images)
    enrolled, failed = [], {}
    for m in meta:
        try:
            image = load_image(images_dir / m.image_path, image_id=m.sample_id)
            template = template_from_image(image, cfg)
            gallery.enroll(template, m)
            enrolled.append(m.sample_id)
        except ForensirisError as exc:
            failed[m.sample_id] = f"{type(exc).__name__}: {exc}"
    _emit({"enrolled": enrolled, "failed": failed, "gallery_size": len(gallery)})
    return EXIT_OK if enrolled else EXIT_DATA


def cmd_identify(args) -> int:
    from .gallery import TemplateGallery
    from .imageio import load_image
    from .matching import template_from_image

    cfg = build_pipeline_config(args)
    gallery = TemplateGallery(args.gallery)
    image = load_image(args.image, channel=args.channel)
    probe = template_from_image(image, cfg)
    candidates, skipped = gallery.identify(probe, k=args.k,
                                           max_shift=cfg.max_shift,
                                           overlap_floor=cfg.overlap_floor)
    _emit({
        "query": image.id,
        "encoder": cfg.encoder,
        "candidates": [c.to_dict() for c in candidates],
        "skipped": skipped,
        "gallery_size": len(gallery),
    })
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    cfg = build_pipeline_config(args)
    app = create_app(state_dir=args.state_dir, cfg=cfg, static_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser assembly


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="forensiris",
                     description="Forensic iris recognition workbench")
    parser.add_argument("--version", action="version", version=f"forensiris {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logs to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(handler=handler)
        return p

    p = add("segment", cmd_segment, "locate pupil and iris circles")
    p.add_argument("image")
    p.add_argument("--channel", default="nir", choices=["nir", "rgb_red"])
    p.add_argument("--mask", help="occlusion mask path recorded in the output JSON")
    _add_pipeline_flags(p, encoder=False)

    p = add("normalize", cmd_normalize, "rubber-sheet unwrap to the polar grid")
    p.add_argument("image")
    p.add_argument("--channel", default="nir", choices=["nir", "rgb_red"])
    p.add_argument("--seg", help="segmentation JSON (otherwise segmented on the fly)")
    p.add_argument("--out-texture", dest="out_texture", help="texture PGM path")
    p.add_argument("--out-mask", dest="out_mask", help="mask PBM path")
    _add_pipeline_flags(p, encoder=False)

    p = add("encode", cmd_encode, "build a template from an image")
    p.add_argument("image")
    p.add_argument("--out", required=True, help="template output path (.pmit)")
    p.add_argument("--channel", default="nir", choices=["nir", "rgb_red"])
    p.add_argument("--seg")
    _add_pipeline_flags(p)

    p = add("match", cmd_match, "compare two images end to end")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.add_argument("--channel", default="nir", choices=["nir", "rgb_red"])
    p.add_argument("--heatmap", help="write the similarity heatmap PNG here")
    _add_pipeline_flags(p)

    p = add("quality", cmd_quality, "the seven quality metrics as JSON")
    p.add_argument("image")
    p.add_argument("--channel", default="nir", choices=["nir", "rgb_red"])
    p.add_argument("--seg")
    _add_pipeline_flags(p, encoder=False)

    p = add("pairs", cmd_pairs, "enumerate genuine/impostor pairs from metadata")
    p.add_argument("--metadata", required=True)
    p.add_argument("--out", help="pairs CSV output path")

    p = add("run-eval", cmd_run_eval, "batch match + evaluation reports")
    p.add_argument("--metadata", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--encoders", help="comma list (default all three)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-figures", action="store_true")
    _add_pipeline_flags(p, encoder=False)

    p = add("balance", cmd_balance, "equalize group mean PMIs by subsampling")
    p.add_argument("--metadata", required=True)
    p.add_argument("--group-by", dest="group_by", choices=["gender", "age_group"],
                   default="gender")
    p.add_argument("--tolerance", type=float, default=0.05)
    p.add_argument("--min-size", dest="min_size", type=int, default=5)

    p = add("stats", cmd_stats, "bootstrap d' + ANOVA/Kruskal-Wallis from a score CSV")
    p.add_argument("--scores", required=True)
    p.add_argument("--group-by", dest="group_by", choices=["gender", "age_group"],
                   default="gender")
    p.add_argument("--reps", type=int, default=30)
    p.add_argument("--frac", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-figure", dest="out_figure")

    p = add("pad-eval", cmd_pad_eval, "PAD operating points from score files")
    p.add_argument("--bona-fide", dest="bona_fide", required=True)
    p.add_argument("--attacks", required=True)
    p.add_argument("--apcer", help="extra APCER levels, comma separated")
    p.add_argument("--out-figure", dest="out_figure")

    p = add("enroll", cmd_enroll, "enroll a metadata sheet into a gallery")
    p.add_argument("--gallery", required=True)
    p.add_argument("--metadata", required=True)
    p.add_argument("--images", required=True)
    _add_pipeline_flags(p)

    p = add("identify", cmd_identify, "top-k search against a gallery")
    p.add_argument("--gallery", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("-k", type=int, default=5)
    p.add_argument("--channel", default="nir", choices=["nir", "rgb_red"])
    _add_pipeline_flags(p)

    p = add("serve", cmd_serve, "run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--state-dir", dest="state_dir", default="forensiris-state")
    p.add_argument("--ui", help="static UI build directory to serve at /")
    _add_pipeline_flags(p)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except ForensirisError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        print(json.dumps({"error_code": exc.error_code, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        log.error("%s", exc)
        print(json.dumps({"error_code": "io_error", "message": str(exc)}),
              file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        log.exception("internal error")
        print(json.dumps({"error_code": "internal", "message": str(exc)}),
              file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
