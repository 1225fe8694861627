"""Command line entry point: ``c3``.

Exit codes: 0 success, 1 user error (flags, missing inputs), 2 data error
(integrity, checksum, evaluation failures) with a machine-readable error
list on stderr. All randomness flows through explicit ``--seed`` flags, and
machine output (``--machine``) is byte-stable across runs.
"""

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .errors import C3Error, MissingPredictions
from .sourcing import (
    DEFAULT_RADIUS_M,
    GeoPoint,
    filter_by_radius,
    infer_scene_name,
    is_scene_of_interest,
    load_scene_categories,
    read_geotag_manifest,
)

CONTEXT_SETTINGS = {
    "help_option_names": ["-h", "--help"],
    "auto_envvar_prefix": "C3",
}


def _machine_dump(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _load_config(ctx, param, value):
    """--config file values become defaults; explicit flags take precedence."""
    if value is None:
        return None
    data = json.loads(Path(value).read_text("utf-8"))
    if not isinstance(data, dict):
        raise click.BadParameter("config file must hold a JSON object")
    ctx.default_map = {**data, **(ctx.default_map or {})}
    return value


@click.group(context_settings=CONTEXT_SETTINGS)
@click.version_option(__version__, prog_name="c3")
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              callback=_load_config, expose_value=False, is_eager=True,
              help="JSON file with default option values.")
@click.option("-v", "--verbose", is_flag=True, default=False)
@click.pass_context
def cli(ctx, verbose):
    """Build and evaluate plan/photo correspondence datasets."""
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose


def _echo_config(ctx, **resolved):
    if ctx.obj.get("verbose"):
        click.echo(f"# config: {_machine_dump(resolved)}", err=True)


# -------------------------------------------------------------------- inspect

@cli.command()
@click.argument("model_dir", type=click.Path(exists=True, file_okay=False))
@click.option("-f", "--format", "fmt", default="auto",
              type=click.Choice(["auto", "binary", "text"]))
@click.option("-m", "--machine", is_flag=True, help="JSON output.")
@click.pass_context
def inspect(ctx, model_dir, fmt, machine):
    """Summarize a sparse-model directory."""
    from .colmap_io import parse_model

    _echo_config(ctx, model_dir=model_dir, format=fmt)
    model = parse_model(model_dir, fmt)
    n_obs = model.num_observations()
    cameras = [
        {
            "camera_id": cam.camera_id,
            "model": cam.model_name,
            "width": cam.width,
            "height": cam.height,
            "supported": cam.is_supported,
        }
        for cam in sorted(model.cameras.values(), key=lambda c: c.camera_id)
    ]
    if machine:
        click.echo(_machine_dump({
            "cameras": len(model.cameras),
            "images": len(model.images),
            "points": len(model.points),
            "observations": n_obs,
            "camera_details": cameras,
        }))
        return
    click.echo(f"cameras: {len(model.cameras)}")
    click.echo(f"images: {len(model.images)}")
    click.echo(f"points: {len(model.points)}")
    click.echo(f"observations: {n_obs}")
    for cam in cameras:
        flag = "" if cam["supported"] else " (unsupported for projection)"
        click.echo(f"  camera {cam['camera_id']}: {cam['model']} "
                   f"{cam['width']}x{cam['height']}{flag}")


# ---------------------------------------------------------------- align-serve

@cli.command("align-serve")
@click.option("--root", required=True, type=click.Path(exists=True, file_okay=False),
              envvar="C3_ROOT", help="Workspace/dataset root with a manifest.json.")
@click.option("--journal", required=True, type=click.Path(dir_okay=False),
              envvar="C3_JOURNAL", help="Alignment journal path (created if absent).")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8008, show_default=True, type=int)
@click.option("--ui", "ui_dir", type=click.Path(exists=True, file_okay=False),
              help="Built frontend directory to serve under /ui.")
@click.pass_context
def align_serve(ctx, root, journal, host, port, ui_dir):
    """Run the annotation HTTP service."""
    import uvicorn

    from .align_service import create_app

    _echo_config(ctx, root=root, journal=journal, host=host, port=port, ui=ui_dir)
    uvicorn.run(create_app(root, journal, ui_dir=ui_dir), host=host, port=port,
                log_level="info")


# --------------------------------------------------------------------- derive

def _alignments_for_scene(scene, journal):
    """Manifest alignments, with journal records (latest version) folded in."""
    from .geometry import PlanAlignment

    by_key = {(a.component_id, a.plan_id): a for a in scene.alignments}
    if journal is not None:
        for key, record in journal.records().items():
            if key[0] != scene.scene_id:
                continue
            plan = scene.plan(key[2])
            base = by_key.get((key[1], key[2]))
            if record.rectification is not None:
                rect = record.rectification
            elif base is not None:
                rect = base.rectification
            else:
                rect = None
            by_key[(key[1], key[2])] = PlanAlignment(
                rectification=np.eye(3) if rect is None else rect,
                similarity=record.similarity,
                plan_width=plan.width,
                plan_height=plan.height,
                component_id=key[1],
                plan_id=key[2],
            )
    return list(by_key.values())


@cli.command()
@click.option("--root", required=True, type=click.Path(exists=True, file_okay=False),
              envvar="C3_ROOT")
@click.option("--journal", type=click.Path(exists=True, dir_okay=False),
              envvar="C3_JOURNAL",
              help="Fold saved annotation records into the manifest alignments.")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--photo-source", default="reproject", show_default=True,
              type=click.Choice(["reproject", "observed"]))
@click.option("--max-reproj-error", default=4.0, show_default=True, type=float)
@click.option("--keep-outside-plan", is_flag=True,
              help="Keep records whose plan pixel leaves the plan canvas.")
@click.option("-j", "--jobs", default=1, show_default=True, type=int)
@click.option("-m", "--machine", is_flag=True)
@click.pass_context
def derive(ctx, root, journal, out, photo_source, max_reproj_error,
           keep_outside_plan, jobs, machine):
    """Derive correspondences for every aligned scene and export a dataset."""
    from concurrent.futures import ThreadPoolExecutor

    from .align_service.journal import AlignmentJournal
    from .colmap_io import parse_model
    from .correspondence import derive_scene
    from .dataset import export_dataset, import_dataset

    _echo_config(ctx, root=root, journal=journal, out=out,
                 photo_source=photo_source, max_reproj_error=max_reproj_error,
                 jobs=jobs)
    dataset = import_dataset(root, load_pairs=False)
    journal_store = AlignmentJournal(journal) if journal else None

    def run_scene(scene_id):
        scene = dataset.scenes[scene_id]
        scene.pairs = []
        results = []
        skipped = {}
        for alignment in _alignments_for_scene(scene, journal_store):
            component = scene.component(alignment.component_id)
            model_path = Path(component.model_path)
            if not model_path.is_absolute():
                model_path = Path(root) / model_path
            model = parse_model(model_path)
            derived = derive_scene(
                model, alignment,
                scene_id=scene_id,
                photo_source=photo_source,
                max_reproj_error_px=max_reproj_error,
                clip_to_plan=not keep_outside_plan,
            )
            results.extend(derived.sets)
            skipped.update({f"{alignment.plan_id}/{iid}": why
                            for iid, why in derived.skipped.items()})
        return scene_id, results, skipped

    scene_ids = sorted(dataset.scenes)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run_scene, scene_ids))
    else:
        outcomes = [run_scene(sid) for sid in scene_ids]

    all_skips = {}
    n_pairs = 0
    for scene_id, results, skipped in sorted(outcomes):  # canonical order
        for cset in results:
            dataset.pair_sets.pop(cset.key, None)
            dataset.add_pair(cset)
            n_pairs += 1
        if skipped:
            all_skips[scene_id] = skipped
    export_dataset(dataset, out)

    summary = {"scenes": len(scene_ids), "pairs": n_pairs, "skipped": all_skips}
    if machine:
        click.echo(_machine_dump(summary))
    else:
        click.echo(f"derived {n_pairs} pairs across {len(scene_ids)} scenes -> {out}")
        for scene_id, skips in sorted(all_skips.items()):
            for pair, why in sorted(skips.items()):
                click.echo(f"  skipped {scene_id}/{pair}: {why}")


# --------------------------------------------------------------------- export

@cli.command()
@click.option("--root", required=True, type=click.Path(exists=True, file_okay=False),
              envvar="C3_ROOT")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.pass_context
def export(ctx, root, out):
    """Re-export a dataset (normalizes layout, verifies every checksum)."""
    from .dataset import export_dataset, import_dataset

    _echo_config(ctx, root=root, out=out)
    dataset = import_dataset(root, load_pairs=True)
    export_dataset(dataset, out)
    click.echo(f"re-exported {len(dataset.pair_sets)} pairs -> {out}")


# ---------------------------------------------------------------------- stats

@cli.command()
@click.option("--root", required=True, type=click.Path(exists=True, file_okay=False),
              envvar="C3_ROOT")
@click.option("--split", default=None, type=click.Choice(["train", "test", "none"]))
@click.option("-m", "--machine", is_flag=True)
@click.pass_context
def stats(ctx, root, split, machine):
    """Dataset statistics by exact enumeration."""
    from .dataset import compute_stats, import_dataset

    _echo_config(ctx, root=root, split=split)
    dataset = import_dataset(root, load_pairs=True)
    s = compute_stats(dataset, split=split)
    payload = {
        "scenes": s.scene_count,
        "plans": s.plan_count,
        "photos": s.photo_count,
        "poses": s.pose_count,
        "pairs": s.pair_count,
        "correspondences": s.total_correspondences,
        "per_pair_min": s.min_per_pair,
        "per_pair_max": s.max_per_pair,
        "per_pair_mean": s.mean_per_pair,
    }
    if machine:
        click.echo(_machine_dump(payload))
        return
    for key, value in payload.items():
        click.echo(f"{key}: {'-' if value is None else value}")


# ---------------------------------------------------------------------- split

@cli.command()
@click.option("--root", required=True, type=click.Path(exists=True, file_okay=False),
              envvar="C3_ROOT")
@click.option("-s", "--seed", default=0, show_default=True, type=int)
@click.option("--test-fraction", default=0.2, show_default=True, type=float)
@click.option("--override", multiple=True, metavar="SCENE=SPLIT",
              help="Force a scene into train or test; repeatable.")
@click.option("--apply", "apply_", is_flag=True, help="Write back to the manifest.")
@click.option("-m", "--machine", is_flag=True)
@click.pass_context
def split(ctx, root, seed, test_fraction, override, apply_, machine):
    """Assign scene-level train/test splits deterministically."""
    from .dataset import apply_split, export_dataset, import_dataset, split_scenes

    _echo_config(ctx, root=root, seed=seed, test_fraction=test_fraction,
                 override=list(override), apply=apply_)
    overrides = {}
    for item in override:
        scene_id, _, value = item.partition("=")
        if not value:
            raise click.BadParameter(f"override {item!r} is not SCENE=SPLIT")
        overrides[scene_id] = value
    dataset = import_dataset(root, load_pairs=apply_)
    assignment = split_scenes(sorted(dataset.scenes), seed, test_fraction, overrides)
    if apply_:
        apply_split(dataset, assignment)
        export_dataset(dataset, root)
    if machine:
        click.echo(_machine_dump(assignment))
    else:
        for scene_id in sorted(assignment):
            click.echo(f"{scene_id}\t{assignment[scene_id]}")


# -------------------------------------------------------------------- augment

@cli.command()
@click.option("--root", required=True, type=click.Path(exists=True, file_okay=False),
              envvar="C3_ROOT")
@click.option("--scene", "scene_id", required=True)
@click.option("--plan", "plan_id", required=True)
@click.option("--image", "image_id", required=True, type=int)
@click.option("-s", "--seed", default=0, show_default=True, type=int)
@click.option("--jitter", default=0.0, show_default=True, type=float,
              help="Brightness/contrast/saturation jitter strength.")
@click.option("--crop-fraction", default=None, type=float)
@click.option("--rotation", default=None,
              help="0/90/180/270, an angle in degrees, 'quarter' or 'any'.")
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.pass_context
def augment(ctx, root, scene_id, plan_id, image_id, seed, jitter,
            crop_fraction, rotation, out_dir):
    """Augment one plan image together with one pair's records."""
    from PIL import Image

    from .dataset import AugmentParams, augment_plan, import_dataset
    from .dataset.blob import write_records

    _echo_config(ctx, root=root, scene=scene_id, plan=plan_id, image=image_id,
                 seed=seed, jitter=jitter, crop_fraction=crop_fraction,
                 rotation=rotation)
    dataset = import_dataset(root, load_pairs=True)
    cset = dataset.pair_sets.get((scene_id, plan_id, image_id))
    if cset is None:
        raise click.ClickException(f"pair {scene_id}/{plan_id}/{image_id} not found")
    scene = dataset.scenes[scene_id]
    fp = scene.plan(plan_id)
    plan_path = Path(fp.path)
    if not plan_path.is_absolute():
        plan_path = Path(root) / plan_path
    plan = np.asarray(Image.open(plan_path))

    if rotation is not None and rotation not in ("quarter", "any"):
        rotation = float(rotation)
    params = AugmentParams(
        brightness=jitter, contrast=jitter, saturation=jitter,
        crop_fraction=crop_fraction, rotation=rotation,
    )
    image, out_cset = augment_plan(plan, cset, params, seed)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    img_path = out_dir / f"{plan_id}_{image_id}_aug.png"
    Image.fromarray(image).save(img_path)
    blob_path = out_dir / f"{plan_id}_{image_id}_aug.c3c"
    write_records(blob_path, out_cset.photo_xy, out_cset.plan_xy,
                  out_cset.point3d_ids, out_cset.local_indices)
    click.echo(f"augmented {len(out_cset)}/{len(cset)} records -> "
               f"{img_path.name}, {blob_path.name}")


# ----------------------------------------------------------------------- eval

@cli.command("eval")
@click.option("--root", required=True, type=click.Path(exists=True, file_okay=False),
              envvar="C3_ROOT")
@click.option("--pred", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--split", default="test", show_default=True,
              type=click.Choice(["train", "test", "none", "all"]))
@click.option("--baseline", multiple=True, metavar="NAME=DIR",
              help="Additional prediction roots for signed-rank comparisons.")
@click.option("--correct-thresh", default=0.05, show_default=True, type=float)
@click.option("--allow-missing", is_flag=True)
@click.option("--curves-out", type=click.Path(dir_okay=False),
              help="Write PCK/PR curve points as TSV.")
@click.option("-m", "--machine", is_flag=True)
@click.pass_context
def eval_cmd(ctx, root, pred, split, baseline, correct_thresh, allow_missing,
             curves_out, machine):
    """Evaluate predictions against the dataset's ground truth."""
    from .dataset import import_dataset
    from .metrics import evaluate

    _echo_config(ctx, root=root, pred=pred, split=split,
                 baseline=list(baseline), correct_thresh=correct_thresh,
                 allow_missing=allow_missing)
    baselines = {}
    for item in baseline:
        name, _, path = item.partition("=")
        if not path:
            raise click.BadParameter(f"baseline {item!r} is not NAME=DIR")
        baselines[name] = path

    dataset = import_dataset(root, load_pairs=True)
    report = evaluate(
        dataset, pred,
        split=None if split == "all" else split,
        baselines=baselines or None,
        correct_thresh=correct_thresh,
        allow_missing=allow_missing,
    )

    payload = {
        "aggregate_rmse": report.aggregate_rmse,
        "pairs_evaluated": report.n_evaluated,
        "pairs_expected": report.n_expected,
        "pck": report.pck,
        "pck_per_pair": report.pck_per_pair,
        "pr": report.pr,
        "tests": {k: list(v) if isinstance(v, tuple) else v
                  for k, v in report.tests.items()},
        "per_pair": [
            {"scene_id": p.scene_id, "plan_id": p.plan_id, "image_id": p.image_id,
             "rmse": p.rmse, "n_records": p.n_records}
            for p in report.per_pair
        ],
        "failures": report.failures,
    }
    if curves_out:
        lines = ["curve\tthreshold\tvalue\textra"]
        for t, fraction in report.pck:
            lines.append(f"pck\t{t:.17g}\t{fraction:.17g}\t")
        for t, fraction in report.pck_per_pair:
            lines.append(f"pck_per_pair\t{t:.17g}\t{fraction:.17g}\t")
        for t, precision, recall in report.pr or []:
            lines.append(f"pr\t{t:.17g}\t{precision:.17g}\t{recall:.17g}")
        Path(curves_out).write_text("\n".join(lines) + "\n", encoding="utf-8")

    if machine:
        click.echo(_machine_dump(payload))
        return
    click.echo(f"pairs: {report.n_evaluated}/{report.n_expected}")
    click.echo(f"aggregate RMSE: {report.aggregate_rmse:.4f}")
    pck05 = next((f for t, f in report.pck if abs(t - 0.05) < 1e-12), None)
    if pck05 is not None:
        click.echo(f"PCK@0.05: {pck05:.4f}")
    if report.pr:
        click.echo(f"PR points: {len(report.pr)}")
    for name, result in sorted(report.tests.items()):
        if isinstance(result, tuple):
            click.echo(f"signed-rank vs {name}: W={result[0]:.1f} p={result[1]:.6g}")
        else:
            click.echo(f"signed-rank vs {name}: {result}")
    if report.failures:
        click.echo(f"failures: {len(report.failures)} (see --machine output)")


# --------------------------------------------------------------------- source

@cli.group()
def source():
    """Sourcing filters (category names, geotag radius)."""


@source.command("filter-categories")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="One category tag per line.")
@click.option("--categories", type=click.Path(exists=True, dir_okay=False),
              help="Scene-category list; defaults to the built-in list.")
@click.option("--types", "types_path", type=click.Path(exists=True, dir_okay=False),
              help="TSV mapping scene name to scene type for gating.")
@click.option("-m", "--machine", is_flag=True)
@click.pass_context
def filter_categories(ctx, input_path, categories, types_path, machine):
    """Infer structure names from category tags; optionally gate by type."""
    _echo_config(ctx, input=input_path, categories=categories, types=types_path)
    category_set = load_scene_categories(categories)
    types = {}
    if types_path:
        for line in Path(types_path).read_text("utf-8").splitlines():
            if line.strip() and not line.startswith("#"):
                name, _, scene_type = line.partition("\t")
                types[name.strip()] = scene_type.strip()

    rows = []
    for line in Path(input_path).read_text("utf-8").splitlines():
        tag = line.strip()
        if not tag or tag.startswith("#"):
            continue
        name = infer_scene_name(tag)
        row = {"tag": tag, "name": name}
        if types:
            scene_type = types.get(name, "")
            row["type"] = scene_type
            row["of_interest"] = bool(scene_type) and is_scene_of_interest(
                scene_type, category_set
            )
        rows.append(row)

    if machine:
        click.echo(_machine_dump(rows))
        return
    for row in rows:
        extra = ""
        if "of_interest" in row:
            extra = f"\t{row['type'] or '-'}\t{'yes' if row['of_interest'] else 'no'}"
        click.echo(f"{row['tag']}\t{row['name']}{extra}")


@source.command("geo-filter")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Delimited photo manifest: photo_id, lat, lon, url.")
@click.option("--lat", required=True, type=float)
@click.option("--lon", required=True, type=float)
@click.option("-r", "--radius", default=DEFAULT_RADIUS_M, show_default=True,
              type=float, help="Meters.")
@click.option("--delimiter", default=",", show_default=True)
@click.option("-m", "--machine", is_flag=True)
@click.pass_context
def geo_filter(ctx, manifest_path, lat, lon, radius, delimiter, machine):
    """Keep manifest photos within the radius of a scene location."""
    _echo_config(ctx, manifest=manifest_path, lat=lat, lon=lon, radius=radius)
    center = GeoPoint(lat, lon)
    records = read_geotag_manifest(manifest_path, delimiter=delimiter)
    kept = filter_by_radius(records, center, radius)
    if machine:
        click.echo(_machine_dump([
            {"photo_id": r.photo_id, "lat": r.point.lat, "lon": r.point.lon,
             "url": r.url}
            for r in kept
        ]))
        return
    for r in kept:
        click.echo(f"{r.photo_id}\t{r.point.lat}\t{r.point.lon}\t{r.url}")
    click.echo(f"# kept {len(kept)}/{len(records)}", err=True)


def main(argv=None):
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except MissingPredictions as exc:
        click.echo(_machine_dump({"error": str(exc), "missing": exc.missing}), err=True)
        return 2
    except C3Error as exc:
        click.echo(_machine_dump({"error": str(exc), "kind": type(exc).__name__}),
                   err=True)
        return 2
    except OSError as exc:
        click.echo(_machine_dump({"error": str(exc), "kind": "IoError"}), err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
