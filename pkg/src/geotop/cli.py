"""Command line entry point: ``geotop synth|extract|evaluate|toy|verify``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.
"""
from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import image_ingest
from .classifier.evaluation import bootstrap_evaluate, misclassification_report, reproduction_checks
from .config import METHOD_CHOICES, RunConfig
from .cubical_persistence import superlevel_diagram
from .features import extract_many, feature_matrices, read_feature_csv, write_feature_csv
from .lkc_features import lkc_curves
from .local_geometry import bars_csv, component_report, track_components, tracks_csv

logger = logging.getLogger("geotop")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3


class DataError(click.ClickException):
    exit_code = EXIT_DATA


class VerificationFailed(click.ClickException):
    exit_code = EXIT_VERIFY


def _config(ctx_config: Path | None, **overrides) -> RunConfig:
    base = RunConfig.load(ctx_config) if ctx_config else RunConfig()
    try:
        return base.with_overrides(**overrides)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc


_common = [
    click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path),
                 help="INI file with a [run] section; flags override it."),
    click.option("--seed", type=int, default=None),
    click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None),
]


def common_options(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


@click.group()
@click.option("-v", "--verbose", is_flag=True)
def cli(verbose: bool) -> None:
    """Topological and geometric image features with random-forest evaluation."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@cli.command()
@common_options
@click.option("--n-images", type=int, default=100, show_default=True)
@click.option("--size", type=int, default=64, show_default=True)
def synth(config_path, seed, out, n_images, size):
    """Write a synthetic two-class dataset as <out>/<class>/<id>.ppm."""
    cfg = _config(config_path, seed=seed, out=out)
    if n_images < 2:
        raise click.UsageError("--n-images must be at least 2")
    images, labels = image_ingest.synth_dataset(n_images, 2, cfg.seed, size=size)
    paths = image_ingest.write_dataset(cfg.out, images, labels)
    click.echo(f"wrote {len(paths)} images to {cfg.out}")


@cli.command()
@common_options
@click.option("--dataset", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--method", type=click.Choice(METHOD_CHOICES), default=None)
@click.option("--thresholds", "n_thresholds", type=int, default=None)
@click.option("--jobs", type=int, default=None)
def extract(config_path, seed, out, dataset, method, n_thresholds, jobs):
    """Extract feature CSVs (features_<method>.csv) from a dataset directory."""
    cfg = _config(config_path, seed=seed, out=out, dataset=dataset, method=method,
                  n_thresholds=n_thresholds, jobs=jobs)
    if cfg.dataset is None:
        raise click.UsageError("--dataset is required")
    try:
        pairs = list(image_ingest.iter_dataset(cfg.dataset))
    except FileNotFoundError as exc:
        raise DataError(str(exc)) from exc
    skipped = [e.source_id for e, img in pairs if img is None]
    good = [(e, img) for e, img in pairs if img is not None]
    if not good:
        raise DataError(f"no readable images under {cfg.dataset}")
    feats = extract_many([img for _, img in good], n_thresholds=cfg.n_thresholds,
                         amplitude_cfg=cfg.amplitude_config(), n_jobs=cfg.jobs)
    mats = feature_matrices(feats, [e.label for e, _ in good], cfg.methods)
    cfg.out.mkdir(parents=True, exist_ok=True)
    for m, mat in mats.items():
        write_feature_csv(cfg.out / f"features_{m}.csv", mat)
    if skipped:
        (cfg.out / "skipped.txt").write_text("\n".join(skipped) + "\n")
    click.echo(f"extracted {len(good)} images ({len(skipped)} skipped) into {cfg.out}")


@cli.command()
@common_options
@click.option("--method", type=click.Choice(METHOD_CHOICES), default=None)
@click.option("--rounds", type=int, default=None)
@click.option("--trees", type=int, default=None)
@click.option("--jobs", type=int, default=None)
@click.option("--features", "features_dir", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Directory holding features_<method>.csv (default: --out).")
def evaluate(config_path, seed, out, method, rounds, trees, jobs, features_dir):
    """Repeated 80/20 random-forest evaluation on the extracted features."""
    cfg = _config(config_path, seed=seed, out=out, method=method, rounds=rounds, trees=trees, jobs=jobs)
    src = features_dir or cfg.out
    mats = {}
    for m in cfg.methods:
        path = src / f"features_{m}.csv"
        if not path.is_file():
            raise DataError(f"missing {path}; run `geotop extract` first")
        try:
            mats[m] = read_feature_csv(path, m)
        except ValueError as exc:
            raise DataError(str(exc)) from exc
    first = next(iter(mats.values()))
    for m, mat in mats.items():
        if mat.ids != first.ids or not np.array_equal(mat.labels, first.labels):
            raise DataError(f"row set of features_{m}.csv differs from features_{first.method}.csv")
    report = bootstrap_evaluate(mats, n_rounds=cfg.rounds, train_frac=cfg.train_frac, seed=cfg.seed,
                                params=cfg.forest_params(), n_jobs=cfg.jobs)
    cfg.out.mkdir(parents=True, exist_ok=True)
    summary = report.summary()
    summary["reproduction_checks"] = reproduction_checks(report)
    if len(cfg.methods) == 3:
        summary["misclassification_last_round"] = misclassification_report(report)
    (cfg.out / "report.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    (cfg.out / "scores.csv").write_text(report.scores_csv())
    (cfg.out / "confusion.csv").write_text(report.confusion_csv())
    (cfg.out / "ari.csv").write_text(report.ari_csv())
    for m, stats in summary["methods"].items():
        click.echo(f"{m:7s} score {stats['score_mean']:.3f} ({stats['score_std']:.3f})  "
                   f"f1 {stats['f1_mean']:.3f}  precision {stats['precision_mean']:.3f}")
    for pair, stats in summary["ari"].items():
        click.echo(f"ARI {pair:12s} {stats['mean']:.3f} ({stats['std']:.3f})")


@cli.command()
@common_options
@click.option("--size", type=int, default=200, show_default=True)
@click.option("--square", type=int, default=10, show_default=True)
@click.option("--thresholds", "n_thresholds", type=int, default=None)
def toy(config_path, seed, out, size, square, n_thresholds):
    """Gaussian bump plus bright square: barcode and per-component tracks."""
    cfg = _config(config_path, seed=seed, out=out, n_thresholds=n_thresholds)
    try:
        field = image_ingest.gaussian_square_field(size, square, cfg.seed)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    cfg.out.mkdir(parents=True, exist_ok=True)
    image_ingest.save_image(np.round(field / field.max() * 65535), cfg.out / "gaussian_square.pgm")
    diagram = superlevel_diagram(field)
    (cfg.out / "barcode.csv").write_text(diagram.to_csv())
    (cfg.out / "diagram.json").write_text(diagram.to_json())
    tracks = track_components(field, cfg.n_thresholds)
    (cfg.out / "tracks.csv").write_text(tracks_csv(tracks))
    (cfg.out / "track_bars.csv").write_text(bars_csv(tracks))
    curves = lkc_curves(field, cfg.n_thresholds)
    rows = ["threshold,area,perimeter,euler"]
    rows += [",".join(repr(float(x)) for x in r) for r in zip(curves.thresholds, curves.raw("area"),
                                                              curves.raw("perimeter"), curves.raw("euler"))]
    (cfg.out / "global_curves.csv").write_text("\n".join(rows) + "\n")
    report = component_report(tracks)
    (cfg.out / "components.json").write_text(json.dumps(report, indent=2))
    for row in report:
        click.echo(f"track {row['track_id']}: persistence {row['persistence']:.4g}  "
                   f"max area {row['max_area']}  max perimeter {row['max_perimeter']}")


@cli.command()
@click.option("--seed", type=int, default=0, show_default=True)
def verify(seed):
    """Run the oracle, Euler-bridge and additivity suites."""
    from .verify import run_verify

    result = run_verify(seed, log=click.echo)
    if not result.ok:
        raise VerificationFailed(f"{len(result.failures)} invariant violations")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="geotop", standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
