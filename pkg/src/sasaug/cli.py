"""Command-line front end: preprocess, augment, clicks, eval.

Every subcommand writes into ``--output`` and finishes with a JSON sidecar
(``index.json``, ``augment_log.json``, ``sessions.json`` or ``report.json``)
that echoes the resolved config. The exit code is 0 only when no entry
failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import shlex
import shutil
import subprocess
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import pngio
from .clicks import ClickPrompt, Predictor, mock_for, simulate_session
from .config import RunConfig, load_config
from .errors import InvalidInput, PredictorContractViolation, SasError
from .metrics import dsc, evaluate_dataset
from .preprocess import RawPair, preprocess_pair
from .rng import AUGMENT, CLICKS, derive_rng, stream_id
from .sas import Sample, SizeClass, augment_one

log = logging.getLogger("sasaug")

SPLITS = ("train", "val", "test")
MANIFEST_COLUMNS = ("id", "image_path", "mask_path", "split")


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    image_path: Path
    mask_path: Path
    split: str


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    """Parse a CSV manifest with columns ``id,image_path,mask_path,split``.

    Relative paths are resolved against the manifest's directory.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInput(f"cannot read manifest {path}: {exc}") from exc
    reader = csv.DictReader(text.splitlines())
    missing = set(MANIFEST_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise InvalidInput(f"manifest {path} lacks column(s) {sorted(missing)}")
    entries, seen = [], set()
    for lineno, row in enumerate(reader, start=2):
        sample_id = (row["id"] or "").strip()
        if not sample_id:
            raise InvalidInput(f"{path}:{lineno}: empty id")
        if sample_id in seen:
            raise InvalidInput(f"{path}:{lineno}: duplicate id {sample_id!r}")
        if "/" in sample_id or "\\" in sample_id:
            raise InvalidInput(f"{path}:{lineno}: id {sample_id!r} must not contain path separators")
        split = (row["split"] or "").strip()
        if split not in SPLITS:
            raise InvalidInput(f"{path}:{lineno}: split must be one of {SPLITS}, got {split!r}")
        seen.add(sample_id)
        entries.append(ManifestEntry(
            sample_id,
            path.parent / row["image_path"].strip(),
            path.parent / row["mask_path"].strip(),
            split,
        ))
    return entries


def _run_parallel(fn: Callable[[Any], Any], items: Sequence[Any], workers: int) -> list[Any]:
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def _write_json(path: Path, payload: dict[str, Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


# -- preprocess ---------------------------------------------------------------

def _preprocess_entry(job: tuple[ManifestEntry, RunConfig]) -> dict[str, Any]:
    entry, cfg = job
    try:
        raw = RawPair(pngio.read_u8(entry.image_path), pngio.read_u8(entry.mask_path), entry.id)
        fraction = raw.mask_fraction
        size = SizeClass.SMALL if fraction <= cfg.sas.small_threshold else SizeClass.LARGE
        image, mask = preprocess_pair(raw, cfg.preproc)
    except SasError as exc:
        return {"id": entry.id, "error": str(exc)}
    image_rel, mask_rel = f"images/{entry.id}.png", f"masks/{entry.id}.png"
    pngio.write_image(cfg.output_dir / image_rel, image)
    pngio.write_mask(cfg.output_dir / mask_rel, mask)
    return {
        "id": entry.id,
        "split": entry.split,
        "image": image_rel,
        "mask": mask_rel,
        "original_mask_fraction": fraction,
        "size_class": size.value,
    }


def cmd_preprocess(manifest: str | Path, cfg: RunConfig) -> int:
    entries = read_manifest(manifest)
    results = _run_parallel(_preprocess_entry, [(e, cfg) for e in entries], cfg.workers)
    rows = [r for r in results if "error" not in r]
    failures = [{"id": r["id"], "reason": r["error"]} for r in results if "error" in r]
    for f in failures:
        log.error("preprocess %s: %s", f["id"], f["reason"])
    _write_json(cfg.output_dir / "index.json", {
        "command": "preprocess",
        "config": cfg.to_dict(),
        "entries": rows,
        "failures": failures,
    })
    log.info("preprocessed %d of %d entries", len(rows), len(entries))
    return 1 if failures else 0


# -- processed corpus ---------------------------------------------------------

@dataclass(frozen=True)
class CorpusEntry:
    id: str
    image_path: Path
    mask_path: Path
    original_mask_fraction: float
    size_class: SizeClass


def read_corpus(root: str | Path) -> list[CorpusEntry]:
    """Entries listed in a preprocessed corpus's ``index.json``."""
    root = Path(root)
    try:
        index = json.loads((root / "index.json").read_text(encoding="utf-8"))
        return [
            CorpusEntry(
                row["id"],
                root / row["image"],
                root / row["mask"],
                float(row["original_mask_fraction"]),
                SizeClass(row["size_class"]),
            )
            for row in index["entries"]
        ]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InvalidInput(f"{root} is not a preprocessed corpus: {exc}") from exc


def _load_sample(entry: CorpusEntry) -> Sample:
    image, mask = pngio.read_image(entry.image_path), pngio.read_mask(entry.mask_path)
    return Sample(image, mask, entry.id, entry.size_class, entry.original_mask_fraction)


# -- augment ------------------------------------------------------------------

def _augment_entry(job: tuple[int, int, CorpusEntry, RunConfig]) -> dict[str, Any]:
    epoch, index, entry, cfg = job
    rel = f"epoch_{epoch:03d}"
    record: dict[str, Any] = {
        "id": entry.id,
        "epoch": epoch,
        "stream": stream_id(cfg.sas.seed, AUGMENT, epoch, index),
        "image": f"{rel}/images/{entry.id}.png",
        "mask": f"{rel}/masks/{entry.id}.png",
    }
    try:
        sample = _load_sample(entry)
        out = augment_one(sample, index, cfg.sas, epoch)
    except SasError as exc:
        record["error"] = str(exc)
        return record
    image_out, mask_out = cfg.output_dir / record["image"], cfg.output_dir / record["mask"]
    record["applied"] = out.sas is not None
    if out.sas is None:
        image_out.parent.mkdir(parents=True, exist_ok=True)
        mask_out.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(entry.image_path, image_out)
        shutil.copyfile(entry.mask_path, mask_out)
    else:
        record.update(out.sas.to_dict())
        pngio.write_image(image_out, out.image)
        pngio.write_mask(mask_out, out.mask)
    return record


def cmd_augment(corpus: str | Path, cfg: RunConfig, n_epochs: int = 1) -> int:
    if n_epochs < 1:
        raise InvalidInput(f"n_epochs must be >= 1, got {n_epochs}")
    entries = read_corpus(corpus)
    jobs = [(epoch, i, e, cfg) for epoch in range(n_epochs) for i, e in enumerate(entries)]
    records = _run_parallel(_augment_entry, jobs, cfg.workers)
    failures = [{"id": r["id"], "epoch": r["epoch"], "reason": r["error"]} for r in records if "error" in r]
    for f in failures:
        log.error("augment %s (epoch %d): %s", f["id"], f["epoch"], f["reason"])
    _write_json(cfg.output_dir / "augment_log.json", {
        "command": "augment",
        "config": cfg.to_dict(),
        "n_epochs": n_epochs,
        "records": [r for r in records if "error" not in r],
        "failures": failures,
    })
    return 1 if failures else 0


# -- clicks -------------------------------------------------------------------

class ExternalPredictor:
    """Predictor backed by a subprocess, one invocation per prediction.

    The command receives a JSON request on stdin::

        {"id": ..., "image_path": ..., "shape": [h, w],
         "clicks": [{"x": .., "y": .., "label": "positive"}, ...]}

    and must print the path of a PNG mask (nonzero = foreground) on stdout.
    """

    def __init__(self, command: str, sample_id: str, image_path: Path, timeout: float) -> None:
        self.argv = shlex.split(command)
        self.sample_id = sample_id
        self.image_path = image_path
        self.timeout = timeout

    def __call__(self, image: Any, clicks: Sequence[ClickPrompt]) -> np.ndarray:
        request = {
            "id": self.sample_id,
            "image_path": str(self.image_path.resolve()),
            "shape": list(np.shape(image)),
            "clicks": [{"x": c.x, "y": c.y, "label": c.label.value} for c in clicks],
        }
        try:
            proc = subprocess.run(
                self.argv, input=json.dumps(request), capture_output=True,
                text=True, timeout=self.timeout, check=False,
            )
        except subprocess.TimeoutExpired as exc:
            raise PredictorContractViolation(f"predictor timed out after {self.timeout:g} s") from exc
        except OSError as exc:
            raise PredictorContractViolation(f"cannot run predictor: {exc}") from exc
        if proc.returncode != 0:
            raise PredictorContractViolation(
                f"predictor exited with code {proc.returncode}: {proc.stderr.strip()[:200]}"
            )
        lines = [ln.strip() for ln in proc.stdout.splitlines() if ln.strip()]
        if not lines:
            raise PredictorContractViolation("predictor printed no mask path")
        try:
            return pngio.read_mask(lines[0])
        except InvalidInput as exc:
            raise PredictorContractViolation(str(exc)) from exc


def _clicks_entry(job: tuple[int, CorpusEntry, RunConfig, str, int]) -> dict[str, Any]:
    index, entry, cfg, predictor_spec, max_clicks = job
    record: dict[str, Any] = {
        "id": entry.id,
        "stream": stream_id(cfg.seed, CLICKS, index),
    }
    try:
        image = pngio.read_image(entry.image_path)
        rs = pngio.read_mask(entry.mask_path)
        predictor: Predictor
        if predictor_spec == "mock":
            predictor = mock_for(rs)
        else:
            predictor = ExternalPredictor(predictor_spec, entry.id, entry.image_path, cfg.predictor_timeout)
        session = simulate_session(rs, predictor, max_clicks, derive_rng(cfg.seed, CLICKS, index), image)
    except SasError as exc:
        record.update(status="failed", reason=str(exc))
        return record
    record.update(
        status="ok",
        converged=session.converged,
        clicks=[c.to_dict() for c in session.clicks],
        dsc=[dsc(p, rs) for p in session.predictions],
    )
    return record


def dsc_curve(sessions: Iterable[dict[str, Any]], max_clicks: int) -> list[dict[str, Any]]:
    """Mean DSC after k clicks, k = 1..max_clicks.

    A session that converged early keeps its final DSC for later k.
    """
    per_k: list[list[float]] = [[] for _ in range(max_clicks)]
    for s in sessions:
        if s.get("status") != "ok" or not s["dsc"]:
            continue
        values = s["dsc"] + [s["dsc"][-1]] * (max_clicks - len(s["dsc"]))
        for k, v in enumerate(values[:max_clicks]):
            per_k[k].append(v)
    return [
        {"clicks": k + 1, "n": len(v), "mean_dsc": float(np.mean(v)) if v else None}
        for k, v in enumerate(per_k)
    ]


def cmd_clicks(corpus: str | Path, cfg: RunConfig, predictor: str = "mock", max_clicks: int = 10) -> int:
    if max_clicks < 1:
        raise InvalidInput(f"max_clicks must be >= 1, got {max_clicks}")
    entries = read_corpus(corpus)
    jobs = [(i, e, cfg, predictor, max_clicks) for i, e in enumerate(entries)]
    sessions = _run_parallel(_clicks_entry, jobs, cfg.workers)
    failed = [s for s in sessions if s["status"] != "ok"]
    for s in failed:
        log.error("clicks %s: %s", s["id"], s["reason"])
    _write_json(cfg.output_dir / "sessions.json", {
        "command": "clicks",
        "config": cfg.to_dict(),
        "predictor": predictor,
        "max_clicks": max_clicks,
        "sessions": sessions,
        "curve": dsc_curve(sessions, max_clicks),
    })
    return 1 if failed else 0


# -- eval ---------------------------------------------------------------------

def _mask_dir(root: Path) -> Path:
    return root / "masks" if (root / "masks").is_dir() else root


def _size_classes(root: Path) -> dict[str, SizeClass]:
    if not (root / "index.json").is_file():
        return {}
    return {e.id: e.size_class for e in read_corpus(root)}


def cmd_eval(pred_dir: str | Path, ref_dir: str | Path, cfg: RunConfig) -> int:
    """Score prediction masks against references matched by file stem.

    Either directory may be a preprocessed corpus (masks under ``masks/``).
    Size classes come from the reference corpus index when there is one.
    """
    pred_root, ref_root = Path(pred_dir), Path(ref_dir)
    preds = {p.stem: p for p in sorted(_mask_dir(pred_root).glob("*.png"))}
    refs = {p.stem: p for p in sorted(_mask_dir(ref_root).glob("*.png"))}
    matched = sorted(preds.keys() & refs.keys())
    unmatched = {
        "predictions_only": sorted(preds.keys() - refs.keys()),
        "references_only": sorted(refs.keys() - preds.keys()),
    }
    failures: list[dict[str, str]] = []

    def pairs() -> Iterable[tuple[np.ndarray, np.ndarray, str]]:
        for sample_id in matched:
            try:
                yield pngio.read_mask(preds[sample_id]), pngio.read_mask(refs[sample_id]), sample_id
            except InvalidInput as exc:
                failures.append({"id": sample_id, "reason": str(exc)})

    report = evaluate_dataset(pairs(), cfg.metric, _size_classes(ref_root), cfg.sas.small_threshold)
    body = report.to_dict()
    body["failures"] = failures + body["failures"]
    if not matched:
        log.error("no prediction id matches a reference id")
    for kind, ids in unmatched.items():
        if ids:
            log.error("%d unmatched ids (%s)", len(ids), kind)
    _write_json(cfg.output_dir / "report.json", {
        "command": "eval",
        "config": cfg.to_dict(),
        "tau": cfg.metric.tau,
        "unmatched": unmatched,
        **body,
    })
    ok = matched and not body["failures"] and not any(unmatched.values())
    return 0 if ok else 1


# -- argument parsing ---------------------------------------------------------

def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run")
    g.add_argument("--config", type=Path, help="JSON config file")
    g.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    g.add_argument("--workers", type=int, help="parallel worker processes (default: CPU count)")
    g.add_argument("--output", type=Path, required=True, help="output directory")
    g.add_argument("-v", "--verbose", action="store_true")

    g = common.add_argument_group("preprocessing")
    g.add_argument("--input-side", type=int)
    g.add_argument("--crop-window", action=argparse.BooleanOptionalAction, default=None)

    g = common.add_argument_group("augmentation")
    g.add_argument("--canvas-side", type=int)
    g.add_argument("--thumb-min", type=int)
    g.add_argument("--thumb-max", type=int)
    g.add_argument("--apply-prob", type=float)
    g.add_argument("--small-threshold", type=float)
    g.add_argument("--placement", choices=("random", "centered"))
    g.add_argument("--gaussian-sigma", type=float)
    g.add_argument("--speckle-sigma", type=float)
    g.add_argument("--sp-fraction", type=float)
    g.add_argument("--poisson-scale", type=float)

    g = common.add_argument_group("metrics")
    g.add_argument("--tau", type=float, help="surface tolerance in pixels (default 2)")
    g.add_argument("--bootstrap-n", type=int)
    g.add_argument("--alpha", type=float)
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sasaug", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_flags()

    p = sub.add_parser("preprocess", parents=[common], help="resize, normalize and pad a manifest's pairs")
    p.add_argument("manifest", type=Path)

    p = sub.add_parser("augment", parents=[common], help="apply the augmentation to a preprocessed corpus")
    p.add_argument("corpus", type=Path)
    p.add_argument("--epochs", type=int, default=1)

    p = sub.add_parser("clicks", parents=[common], help="simulate click sessions on a preprocessed corpus")
    p.add_argument("corpus", type=Path)
    p.add_argument("--predictor", default="mock",
                   help="'mock' or a shell command implementing the predictor contract")
    p.add_argument("--max-clicks", type=int, default=10)
    p.add_argument("--timeout", type=float, help="external predictor timeout in seconds (default 30)")

    p = sub.add_parser("eval", parents=[common], help="score predicted masks against references")
    p.add_argument("predictions", type=Path)
    p.add_argument("references", type=Path)
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(
        args.config,
        seed=args.seed,
        workers=args.workers,
        output_dir=args.output,
        overrides={
            "preproc": {"input_side": args.input_side, "crop_window": args.crop_window},
            "sas": {
                "canvas_side": args.canvas_side, "thumb_min": args.thumb_min,
                "thumb_max": args.thumb_max, "apply_prob": args.apply_prob,
                "small_threshold": args.small_threshold, "placement": args.placement,
            },
            "noise": {
                "gaussian_sigma": args.gaussian_sigma, "speckle_sigma": args.speckle_sigma,
                "sp_fraction": args.sp_fraction, "poisson_scale": args.poisson_scale,
            },
            "metric": {"tau": args.tau, "bootstrap_n": args.bootstrap_n, "alpha": args.alpha},
        },
    )
    if getattr(args, "timeout", None) is not None:
        cfg = replace(cfg, predictor_timeout=args.timeout)
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _resolve_config(args)
        if args.command == "preprocess":
            return cmd_preprocess(args.manifest, cfg)
        if args.command == "augment":
            return cmd_augment(args.corpus, cfg, args.epochs)
        if args.command == "clicks":
            return cmd_clicks(args.corpus, cfg, args.predictor, args.max_clicks)
        return cmd_eval(args.predictions, args.references, cfg)
    except InvalidInput as exc:
        print(f"sasaug: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
