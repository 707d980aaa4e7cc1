"""Command-line front end: ``fractalmark <subcommand> ...``.

Exit codes: 0 success, 1 domain error (degenerate input, receipt mismatch,
bad parameter), 2 usage or I/O error. A watermark that is simply not
detected is a result, not an error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import attacks as A
from .errors import FractalMarkError, IoFailure, MethodUnknown
from .evaluation import EvalConfig, emit_report, run_eval, summary_table
from .evaluation.harness import CONFIG_VERSION, DEFAULT_METHODS, PROTOCOLS
from .fractal import analyze_fractal
from .imaging import psnr, mse, read_image, to_gray, write_png
from .provenance import (DEFAULT_ARTIST, emit_metadata, feature_leaves, fingerprint,
                         merkle_levels, merkle_prove, shamir_split)
from .style import style_metrics
from .turbulence import turbulence_stats
from .watermark import (DEFAULT_ALPHA, DEFAULT_THRESHOLD, EmbedConfig, EmbedReceipt,
                        build_watermark, embed, multiscale_features, verify)

log = logging.getLogger("fractalmark")

# 2**521 - 1 is prime and exceeds any SHA-256 token, so a token id can be shared as is
SHAMIR_PRIME = 2 ** 521 - 1

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


def _finite(obj):
    """JSON-safe copy: numpy scalars unwrap, non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _finite(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dump(obj) -> str:
    return json.dumps(_finite(obj), indent=2, sort_keys=True) + "\n"


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def _error_object(path, exc: FractalMarkError) -> dict:
    return {"file": str(path), "error": exc.code, "message": str(exc)}


def _exit_for(exc: FractalMarkError) -> int:
    return EXIT_USAGE if isinstance(exc, (IoFailure, MethodUnknown)) else EXIT_DOMAIN


# --------------------------------------------------------------------------
# config


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise IoFailure(f"cannot read config {path}: {exc}") from exc
    version = cfg.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise IoFailure(f"config version {version!r} is not {CONFIG_VERSION!r}")
    return cfg


def _embed_config(args, file_cfg: dict) -> EmbedConfig:
    d = dict(file_cfg.get("embed", {}))
    if getattr(args, "alpha", None) is not None:
        d["alpha_base"] = args.alpha
    if getattr(args, "gamma", None) is not None:
        d["gamma"] = args.gamma
    d.setdefault("assign_seed", args.seed)
    return EmbedConfig.from_dict(d)


# --------------------------------------------------------------------------
# subcommands


def cmd_analyze(args, file_cfg) -> int:
    out_dir = Path(args.output_dir)
    code = EXIT_OK
    reports = []
    for path in args.inputs:
        path = Path(path)
        try:
            img = read_image(path)
            gray = to_gray(img)
            rep = analyze_fractal(gray)
            turb = turbulence_stats(gray)
            report = {
                "file": str(path),
                "fractal_dimension": rep.dimension,
                "fractal": rep.to_dict(),
                "turbulence": turb.to_dict(),
                "style": style_metrics(img),
            }
        except FractalMarkError as exc:
            report = _error_object(path, exc)
            code = max(code, _exit_for(exc))
            log.error("%s: %s (%s)", path, exc.code, exc)
        else:
            _write(out_dir / f"{path.stem}.analysis.json", _dump(report))
        reports.append(report)
    sys.stdout.write(_dump(reports))
    return code


def cmd_embed(args, file_cfg) -> int:
    cfg = _embed_config(args, file_cfg)
    src = Path(args.image)
    gray = to_gray(read_image(src))
    marked, receipt = embed(gray, cfg=cfg)
    out_dir = Path(args.output_dir)
    img_path = Path(args.out) if args.out else out_dir / f"{src.stem}.wm.png"
    rec_path = Path(args.receipt) if args.receipt else img_path.parent / f"{src.stem}.receipt.json"
    img_path.parent.mkdir(parents=True, exist_ok=True)
    write_png(marked, img_path)
    _write(rec_path, receipt.to_json() + "\n")
    value = psnr(gray, marked)
    log.info("PSNR %s dB", "inf" if math.isinf(value) else f"{value:.2f}")
    sys.stdout.write(_dump({"image": str(img_path), "receipt": str(rec_path),
                            "psnr": "inf" if math.isinf(value) else value,
                            "watermark": receipt.original.to_list()}))
    return EXIT_OK


def cmd_detect(args, file_cfg) -> int:
    try:
        text = Path(args.receipt).read_text()
    except OSError as exc:
        raise IoFailure(f"cannot read receipt {args.receipt}: {exc}") from exc
    receipt = EmbedReceipt.from_json(text)
    if "embed" in file_cfg:
        cfg = _embed_config(args, file_cfg)
    else:
        cfg = EmbedConfig.from_dict(receipt.config)
    gray = to_gray(read_image(args.image))
    res = verify(gray, receipt, cfg, args.threshold)
    out = {"r": res.r, "detected": res.detected, "threshold": res.threshold}
    if res.diagnostic:
        out["diagnostic"] = res.diagnostic
    sys.stdout.write(_dump(out))
    return EXIT_OK


_KIND_ALIASES = {"noise": "gaussian_noise", "jpeg": "jpeg_rounds", "crop": "crop_inpaint",
                 "blur": "blur", "scale": "scale", "rotate": "rotate"}


def _attack_spec(args) -> A.AttackSpec:
    kind = _KIND_ALIASES[args.kind]
    if kind == "gaussian_noise":
        params = {"sigma": args.sigma, "intensity": args.intensity}
    elif kind == "jpeg_rounds":
        params = {"rounds": args.rounds, "quality": args.quality, "perturb": not args.no_perturb}
    elif kind == "crop_inpaint":
        params = {"area_fraction": args.area, "regions": args.regions}
    elif kind == "blur":
        params = {"ksize": args.ksize}
    elif kind == "scale":
        params = {"factor": args.factor}
    else:
        params = {"degrees": args.degrees}
    return A.AttackSpec(kind, params, args.seed)


def cmd_attack(args, file_cfg) -> int:
    spec = _attack_spec(args)
    src = Path(args.image)
    img = read_image(src)
    attacked = A.apply_attack(img, spec)
    out = Path(args.out) if args.out else Path(args.output_dir) / f"{src.stem}.{args.kind}.png"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_png(attacked, out)
    info = {"output": str(out), "spec": spec.to_dict(), "psnr": psnr(img, attacked)}
    if spec.kind == "crop_inpaint" and args.area > 0:
        cov = A.crop_mask(img.shape[:2], args.area, args.regions, args.seed).coverage
        info["coverage"] = cov
        log.info("crop coverage %.4f", cov)
    sys.stdout.write(_dump(info))
    return EXIT_OK


def cmd_bench(args, file_cfg) -> int:
    d = dict(file_cfg.get("bench", {}))
    protocol = args.protocol or d.pop("protocol", "desk")
    d.pop("protocol", None)
    d.pop("version", None)
    d.setdefault("master_seed", args.seed)
    for key in ("methods", "iterations", "images", "corpus", "negatives", "threshold"):
        v = getattr(args, key)
        if v is not None:
            d[key] = v
    d["threads"] = args.threads
    cfg = EvalConfig.preset(protocol, **d)
    report = run_eval(cfg)
    paths = emit_report(report, args.output_dir)
    for p in paths.values():
        log.info("wrote %s", p)
    sys.stdout.write(summary_table(report))
    return EXIT_OK


def _load_analysis(path: Path) -> dict:
    try:
        d = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise IoFailure(f"cannot read analysis {path}: {exc}") from exc
    need = ("features", "fractal_dimension", "turbulence_mean_power", "turbulence_variance_power")
    missing = [k for k in need if k not in d]
    if missing:
        raise IoFailure(f"analysis {path} lacks {', '.join(missing)}")
    return d


def cmd_fingerprint(args, file_cfg) -> int:
    src = Path(args.input)
    if src.suffix.lower() == ".json":
        d = _load_analysis(src)
        features = np.asarray(d["features"], dtype=np.float64)
        values = (d["fractal_dimension"], d["turbulence_mean_power"], d["turbulence_variance_power"])
        artist = args.artist or d.get("artist", DEFAULT_ARTIST)
        timestamp = args.timestamp or d.get("timestamp")
    else:
        gray = to_gray(read_image(src))
        features = multiscale_features(gray)
        W = build_watermark(gray)
        values = (W.D, W.mu, W.sigma)
        artist = args.artist or DEFAULT_ARTIST
        timestamp = args.timestamp
    fp = fingerprint(features)
    meta = emit_metadata(fp, *values, artist=artist, timestamp=timestamp)
    out_dir = Path(args.output_dir)
    stem = src.stem
    written = [_write(out_dir / f"{stem}.metadata.json", meta.to_json())]
    leaves = feature_leaves(features)
    levels = merkle_levels(leaves)
    merkle = {
        "root": fp.root_hex,
        "leaves": [leaf.hex() for leaf in leaves],
        "levels": [[h.hex() for h in lvl] for lvl in levels],
        "proofs": [merkle_prove(leaves, i).to_dict() for i in range(len(leaves))],
    }
    written.append(_write(out_dir / f"{stem}.merkle.json", _dump(merkle)))
    if args.shamir:
        k, n = args.shamir
        shares = shamir_split(int.from_bytes(fp.token_id, "big"), k, n, SHAMIR_PRIME, seed=args.seed)
        for i in range(n):
            written.append(_write(out_dir / f"{stem}.share{i + 1}.json", shares.share_json(i) + "\n"))
    for p in written:
        log.info("wrote %s", p)
    sys.stdout.write(_dump({"token_id": fp.token_hex, "merkle_root": fp.root_hex,
                            "files": [str(p) for p in written]}))
    return EXIT_OK


def cmd_metrics(args, file_cfg) -> int:
    """Style metrics per image, plus PSNR/MSE against ``--reference`` when given."""
    ref = read_image(args.reference) if args.reference else None
    rows = []
    for path in args.images:
        img = read_image(path)
        row = {"file": str(path), **style_metrics(img)}
        if ref is not None:
            p = psnr(ref, img)
            row["psnr"] = "inf" if math.isinf(p) else p
            row["mse"] = mse(ref, img)
        rows.append(row)
    if args.csv:
        cols = ["file", "tv_loss", "texture_loss", "drip_loss"] + (["psnr", "mse"] if ref is not None else [])
        lines = [",".join(cols)] + [",".join(str(r[c]) for c in cols) for r in rows]
        _write(Path(args.output_dir) / args.csv, "\n".join(lines) + "\n")
    sys.stdout.write(_dump(rows))
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _shamir_arg(text: str):
    try:
        k, n = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected K,N such as 2,3") from None
    if not 1 <= k <= n:
        raise argparse.ArgumentTypeError("need 1 <= K <= N")
    return k, n


def _quality_arg(text: str):
    vals = [int(v) for v in text.split(",")]
    return vals[0] if len(vals) == 1 else vals


GLOBAL_DEFAULTS = {"seed": 0, "threads": 1, "output_dir": "."}


def _global_flags(p, suppress: bool) -> None:
    # subcommands accept the global flags too; SUPPRESS keeps them from clobbering earlier values
    dflt = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=dflt, help="master seed for every random draw (default 0)")
    p.add_argument("--threads", type=int, default=dflt, help="worker processes for bench (default 1)")
    p.add_argument("--config", default=dflt, help=f"JSON config file ({CONFIG_VERSION}); flags override it")
    p.add_argument("--output-dir", default=dflt, help="where artifacts are written (default .)")
    p.add_argument("-v", "--verbose", action="store_true", default=dflt, help="debug logging")


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    # None defaults mean "resolved later from the config file", so they are not shown
    def _get_help_string(self, action):
        if action.default is None:
            return action.help
        return super()._get_help_string(action)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fractalmark", description=__doc__.splitlines()[0])
    _global_flags(p, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = p.add_subparsers(dest="command", required=True)
    fmt = _HelpFormatter

    a = sub.add_parser("analyze", parents=[common], help="fractal, turbulence and style report per image", formatter_class=fmt)
    a.add_argument("inputs", nargs="+")
    a.set_defaults(func=cmd_analyze)

    e = sub.add_parser("embed", parents=[common], help="embed the feature watermark", formatter_class=fmt)
    e.add_argument("image")
    e.add_argument("--alpha", type=float, default=None,
                   help=f"base strength in DCT units (default {DEFAULT_ALPHA:.6f} = 4/255)")
    e.add_argument("--gamma", type=float, default=None, help="texture adaptation in [0, 2] (default 0.5)")
    e.add_argument("--out", default=None, help="watermarked PNG (default <output-dir>/<stem>.wm.png)")
    e.add_argument("--receipt", default=None, help="receipt JSON (default next to the PNG)")
    e.set_defaults(func=cmd_embed)

    d = sub.add_parser("detect", parents=[common], help="verify a suspect image against a receipt", formatter_class=fmt)
    d.add_argument("image")
    d.add_argument("receipt")
    d.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    d.set_defaults(func=cmd_detect)

    t = sub.add_parser("attack", parents=[common], help="apply one attack", formatter_class=fmt)
    t.add_argument("image")
    t.add_argument("--kind", required=True, choices=sorted(_KIND_ALIASES))
    t.add_argument("--sigma", type=float, default=0.05, help="noise std, [0.03, 0.08]")
    t.add_argument("--intensity", type=float, default=0.4, help="noise intensity, [0.3, 0.5]")
    t.add_argument("--rounds", type=int, default=5, help="JPEG rounds, [4, 7]")
    t.add_argument("--quality", type=_quality_arg, default=5, help="JPEG quality or comma list, [1, 10]")
    t.add_argument("--no-perturb", action="store_true", help="skip the between-round perturbations")
    t.add_argument("--area", type=float, default=0.5, help="crop area fraction, [0.40, 0.60]")
    t.add_argument("--regions", type=int, default=8, help="crop rectangles, [7, 10]")
    t.add_argument("--ksize", type=int, default=3, help="blur kernel")
    t.add_argument("--factor", type=float, default=1.0, help="scale factor, [0.9, 1.1]")
    t.add_argument("--degrees", type=float, default=0.0, help="rotation, [-3, 3]")
    t.add_argument("--out", default=None)
    t.set_defaults(func=cmd_attack)

    b = sub.add_parser("bench", parents=[common], help="comparative robustness benchmark", formatter_class=fmt)
    b.add_argument("--protocol", choices=sorted(PROTOCOLS), default=None, help="preset (default desk)")
    b.add_argument("--methods", nargs="+", default=None, help=f"subset of {' '.join(DEFAULT_METHODS)}")
    b.add_argument("--iterations", type=int, default=None)
    b.add_argument("--images", type=int, default=None)
    b.add_argument("--corpus", default=None, help='"desk" (synthetic) or an image directory')
    b.add_argument("--negatives", type=int, default=None, help="negative controls per method")
    b.add_argument("--threshold", type=float, default=None)
    b.set_defaults(func=cmd_bench)

    f = sub.add_parser("fingerprint", parents=[common], help="token id, Merkle artifacts and NFT metadata", formatter_class=fmt)
    f.add_argument("input", help="image, or analysis JSON with features and the three metadata values")
    f.add_argument("--artist", default=None, help=f"artist tag (default {DEFAULT_ARTIST})")
    f.add_argument("--timestamp", default=None, help="ISO-8601 time (default now, UTC)")
    f.add_argument("--shamir", type=_shamir_arg, default=None, metavar="K,N",
                   help="split the token id into N share files, any K reconstruct")
    f.set_defaults(func=cmd_fingerprint)

    m = sub.add_parser("metrics", parents=[common], help="style metrics and optional PSNR/MSE per image",
                       formatter_class=fmt)
    m.add_argument("images", nargs="+")
    m.add_argument("--reference", default=None, help="reference image for PSNR/MSE")
    m.add_argument("--csv", default=None, help="also write a CSV with this name under --output-dir")
    m.set_defaults(func=cmd_metrics)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        file_cfg = load_config(args.config)
        for key, default in GLOBAL_DEFAULTS.items():
            if getattr(args, key) is None:
                setattr(args, key, type(default)(file_cfg.get(key, default)))
        if args.threads < 1:
            parser.error("--threads must be >= 1")
        return args.func(args, file_cfg)
    except FractalMarkError as exc:
        log.error("%s: %s", exc.code, exc)
        return _exit_for(exc)
    except ValueError as exc:
        log.error("ValueError: %s", exc)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
