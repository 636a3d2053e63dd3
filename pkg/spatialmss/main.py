# Command-line front end: generates toy scenes, trains spatially conditioned
# separators, separates and evaluates, and renders embedding demos.
# Exit codes: 0 success, 1 other error, 2 configuration error, 3 divergence.

import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Annotated, List, Optional

import typer
from loguru import logger
from pydantic import ValidationError

from spatialmss.encoding.positional import DEFAULT_DIM, EmbeddingConfig, NoiseSpec
from spatialmss.errors import ConfigError, DivergenceError, SpatialSeparationError
from spatialmss.experiment import pipeline
from spatialmss.experiment.config import OUTPUT_DIR_ENV, load_config

EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

app = typer.Typer(
    name="spatialmss",
    help="Spatially informed music source separation on toy stereo scenes.",
    no_args_is_help=True,
    pretty_exceptions_enable=False,
)

_state = {"progress": True}

ConfigOpt = Annotated[
    Optional[Path],
    typer.Option("--config", "-c", help="JSON experiment config; flags override it"),
]
RunOpt = Annotated[
    Optional[str],
    typer.Option("--run", "-r", help='run label, e.g. "4S2G-D1-CAT-α_Tr-ᾱ_Te"'),
]
OutOpt = Annotated[
    Path,
    typer.Option("--out-dir", "-o", envvar=OUTPUT_DIR_ENV, help="output directory"),
]
SeedOpt = Annotated[Optional[int], typer.Option(help="master seed")]


def parse_angles(text: Optional[str]) -> Optional[List[float]]:
    """comma separated degrees, e.g. "-30,-10,30,0" """
    if text is None or not text.strip():
        return None
    try:
        return [float(a) for a in text.split(",")]
    except ValueError as e:
        raise ConfigError(f"cannot parse angles {text!r}") from e


@contextmanager
def exit_codes():
    """maps package errors onto the documented exit codes"""
    try:
        yield
    except (ConfigError, ValidationError) as e:
        logger.error(f"configuration error: {e}")
        raise typer.Exit(EXIT_CONFIG)
    except DivergenceError as e:
        logger.error(str(e))
        raise typer.Exit(EXIT_DIVERGED)
    except (SpatialSeparationError, ValueError, OSError) as e:
        logger.error(str(e))
        raise typer.Exit(EXIT_ERROR)


@app.callback()
def configure(
    verbose: Annotated[bool, typer.Option("--verbose", "-v")] = False,
    quiet: Annotated[bool, typer.Option("--quiet", "-q")] = False,
):
    logger.remove()
    level = "DEBUG" if verbose else "WARNING" if quiet else "INFO"
    logger.add(sys.stderr, level=level)
    _state["progress"] = not quiet


@app.command()
def mix(
    out_dir: OutOpt = Path("runs"),
    config: ConfigOpt = None,
    run: RunOpt = None,
    task: Annotated[Optional[str], typer.Option(help="4S or 4S2G")] = None,
    seed: SeedOpt = None,
    seconds: Annotated[Optional[float], typer.Option(help="scene length")] = None,
    sample_rate: Annotated[Optional[int], typer.Option()] = None,
    angles: Annotated[
        Optional[str], typer.Option(help="per-source degrees, default -30,-10,30,0")
    ] = None,
):
    """Write a toy evaluation scene: mixture, targets and scene JSON."""
    with exit_codes():
        cfg = load_config(
            config,
            run,
            task=task,
            seed=seed,
            test_seconds=seconds,
            sample_rate=sample_rate,
        )
        pipeline.cmd_mix(cfg, out_dir, parse_angles(angles))


@app.command()
def train(
    out_dir: OutOpt = Path("runs"),
    config: ConfigOpt = None,
    run: RunOpt = None,
    task: Annotated[Optional[str], typer.Option(help="4S or 4S2G")] = None,
    condition: Annotated[Optional[str], typer.Option(help="D0, D1-CAT, ...")] = None,
    noisy_train: Annotated[
        Optional[bool], typer.Option("--noisy-train/--clean-train")
    ] = None,
    delta: Annotated[Optional[float], typer.Option(help="angle noise half-width")] = None,
    seed: SeedOpt = None,
    epochs: Annotated[Optional[int], typer.Option()] = None,
    learning_rate: Annotated[Optional[float], typer.Option("--lr")] = None,
    hidden_size: Annotated[Optional[int], typer.Option()] = None,
    frame_size: Annotated[Optional[int], typer.Option()] = None,
    hop: Annotated[Optional[int], typer.Option()] = None,
    batch_frames: Annotated[Optional[int], typer.Option()] = None,
    batch_segments: Annotated[Optional[int], typer.Option()] = None,
    n_train_scenes: Annotated[Optional[int], typer.Option()] = None,
    scene_seconds: Annotated[Optional[float], typer.Option()] = None,
    workers: Annotated[Optional[int], typer.Option(help="gradient threads")] = None,
    plot: Annotated[bool, typer.Option(help="also write the loss curve PNG")] = False,
):
    """Train a separator on generated toy scenes and save its checkpoint."""
    with exit_codes():
        cfg = load_config(
            config,
            run,
            task=task,
            condition=condition,
            train_noise=noisy_train,
            delta=delta,
            seed=seed,
            epochs=epochs,
            learning_rate=learning_rate,
            hidden_size=hidden_size,
            frame_size=frame_size,
            hop=hop,
            batch_frames=batch_frames,
            batch_segments=batch_segments,
            n_train_scenes=n_train_scenes,
            scene_seconds=scene_seconds,
            workers=workers,
        )
        pipeline.cmd_train(cfg, out_dir, progress=_state["progress"], plot=plot)


@app.command()
def separate(
    checkpoint: Annotated[Path, typer.Argument(exists=True, dir_okay=False)],
    mixture: Annotated[Path, typer.Argument(exists=True, dir_okay=False)],
    out_dir: OutOpt = Path("runs"),
    angles: Annotated[
        Optional[str], typer.Option(help="per-stream degrees; ignored by D0 models")
    ] = None,
    noisy_test: Annotated[
        bool, typer.Option("--noisy-test/--clean-test", help="perturb the given angles")
    ] = False,
    delta: Annotated[float, typer.Option(help="angle noise half-width")] = 8.0,
    noise_seed: Annotated[int, typer.Option()] = 0,
):
    """Separate a stereo mixture WAV into one estimate per stream."""
    with exit_codes():
        noise = NoiseSpec(delta, noise_seed) if noisy_test else None
        pipeline.cmd_separate(checkpoint, mixture, parse_angles(angles), out_dir, noise)


@app.command()
def evaluate(
    mixture: Annotated[Path, typer.Argument(exists=True, dir_okay=False)],
    estimate: Annotated[List[Path], typer.Option(help="estimate WAV, once per source")],
    target: Annotated[List[Path], typer.Option(help="target WAV, same order")],
    out: Annotated[Path, typer.Option("--out", help="report CSV")] = Path("eval.csv"),
    label: Annotated[Optional[List[str]], typer.Option(help="source label")] = None,
):
    """Score estimates against targets; writes SDR and SI-SDR with improvements."""
    with exit_codes():
        pipeline.cmd_evaluate(estimate, target, mixture, out, label or None)


@app.command("encode-demo")
def encode_demo(
    out: Annotated[Path, typer.Option("--out")] = Path("embeddings.csv"),
    dim: Annotated[int, typer.Option(help="embedding dimension D")] = DEFAULT_DIM,
    mode: Annotated[str, typer.Option(help="sinusoidal or raw")] = "sinusoidal",
    unit: Annotated[
        str,
        typer.Option(
            help="radian or degree; the mirror distance grows monotonically "
            "with |angle| over the whole panorama only in degree"
        ),
    ] = "radian",
    step: Annotated[float, typer.Option(help="angle grid step in degrees")] = 1.0,
    plot: Annotated[Optional[Path], typer.Option(help="heatmap PNG path")] = None,
):
    """Embed the angle grid -45..45 and write it as CSV.

    Use --unit degree to see the monotone mirror distance across the panorama.
    """
    with exit_codes():
        try:
            cfg = EmbeddingConfig(dim=dim, mode=mode, unit=unit)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        pipeline.encode_demo(cfg, out, step, plot)


@app.command()
def grid(
    runs: Annotated[List[str], typer.Argument(help="run labels, e.g. 4S-D0 4S-D1-CAT-α_Tr")],
    out_dir: OutOpt = Path("runs"),
    config: ConfigOpt = None,
    seed: SeedOpt = None,
    epochs: Annotated[Optional[int], typer.Option()] = None,
    delta: Annotated[Optional[float], typer.Option()] = None,
    workers: Annotated[Optional[int], typer.Option()] = None,
):
    """Train and evaluate several run labels; writes a summary CSV."""
    with exit_codes():
        base = load_config(
            config, seed=seed, epochs=epochs, delta=delta, workers=workers
        )
        summary = pipeline.run_grid(runs, base, out_dir, progress=_state["progress"])
        typer.echo(summary.to_string(index=False))


def main():
    app()


if __name__ == "__main__":
    main()
