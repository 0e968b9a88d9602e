"""
artigen command line - articulated-object generation from the terminal

Usage:
    artigen <command> [options]

Commands:
    synth            Write a synthetic dataset (manifest, graph JSON, binary clouds)
    train-extract    Train the hypergraph vertex extractor
    train-diffuse    Train the edge denoiser
    generate         Generate objects for a template label or a text prompt
    eval             Compare generated graphs with reference graphs (COV / MMD / 1-NNA)
    export           Convert a graph JSON file to URDF
    selfcheck        Run the numerical self-checks

Common options:
    --config PATH    Path to YAML configuration file
    --seed INT       Root seed; every stage derives its own stream from it

Exit codes: 0 success, 1 bad input, 2 numerical failure or failed self-check.
"""
import argparse
import os
import sys
from typing import Optional

from rich.console import Console
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeRemainingColumn
from rich.table import Table

from ..config import Config, ConfigManager
from ..core.tensor import NumericalError
from ..logger_config import setup_logger
from ..metrics.report import HEADERS, METRICS
from ..pipeline import Pipeline, StageError
from ..pipeline.selfcheck import run_selfcheck
from ..pipeline.utils import format_system_info, get_system_info

console = Console()
logger = setup_logger('console')

EXIT_OK = 0
EXIT_USER_ERROR = 1
EXIT_NUMERICAL = 2


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="Path to YAML configuration file")
    parser.add_argument("--seed", type=int, help="Root seed")
    parser.add_argument("--dataset", help="Dataset directory")
    parser.add_argument("--checkpoints", help="Checkpoint directory")
    parser.add_argument("--output", help="Output directory")


def _add_training(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--iterations", type=int, help="Total training iterations")
    parser.add_argument("--batch-size", type=int, help="Minibatch size")
    parser.add_argument("--lr", type=float, help="Base learning rate")
    parser.add_argument("--resume", action="store_true", help="Continue from the stage's checkpoint")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="artigen", description="Articulated-object generation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="Write a synthetic dataset")
    _add_common(p)
    p.add_argument("--count", type=int, help="Number of objects")
    p.add_argument("--n-points", type=int, help="Surface points per object")

    p = sub.add_parser("train-extract", help="Train the vertex extractor")
    _add_common(p)
    _add_training(p)
    p.add_argument("--C", type=int, help="Number of k-means clusters (hyperedges)")
    p.add_argument("--no-hypergraph", action="store_true", help="Skip hypergraph propagation")
    p.add_argument("--loss-terms", help="Comma-separated subset of matrix,bbox,exist")
    p.set_defaults(stage="extractor")

    p = sub.add_parser("train-diffuse", help="Train the edge denoiser")
    _add_common(p)
    _add_training(p)
    p.add_argument("--T", type=int, help="Diffusion steps")
    p.add_argument("--sigma-rule", choices=["beta", "posterior"], help="Reverse-step noise rule")
    p.set_defaults(stage="diffusion")

    p = sub.add_parser("generate", help="Generate articulated objects")
    _add_common(p)
    p.add_argument("prompt", help="Template label (e.g. laptop_lid) or prompt such as 'a 3D laptop model type 2'")
    p.add_argument("--count", dest="num_samples", type=int, default=1, help="Objects to generate")
    p.add_argument("--urdf", action="store_true", help="Also write one URDF per object")
    p.add_argument("--cloud", help="Condition on this point cloud (.txt or .bin) instead of a synthetic one")
    p.add_argument("--untrained-denoiser", action="store_true", help="Sample with initial denoiser weights")
    p.add_argument("--sample-stride", type=int, help="Sample every k-th diffusion step")

    p = sub.add_parser("eval", help="Evaluate generated graphs against references")
    _add_common(p)
    p.add_argument("gen_dir", help="Directory of generated graph JSON")
    p.add_argument("ref_dir", help="Directory of reference graph JSON (or a dataset directory)")
    p.add_argument("--regime", help="Name of the prompt regime being evaluated")
    p.add_argument("--poses", type=int, help="Pose samples per object")
    p.add_argument("--surface-points", type=int, help="Surface points per instantiation")
    p.add_argument("--seeds", type=int, nargs="+", help="Evaluation seeds")
    p.add_argument("--workers", type=int, help="Threads for distance matrices")

    p = sub.add_parser("export", help="Convert a graph JSON file")
    _add_common(p)
    p.add_argument("graph", help="Graph JSON file")
    p.add_argument("--format", dest="fmt", choices=["urdf", "json"], default="urdf")
    p.add_argument("--out", help="Output path")

    p = sub.add_parser("selfcheck", help="Run the numerical self-checks")
    _add_common(p)
    return parser


def _training_progress(label: str, total: int, start: int):
    progress = Progress(TextColumn(f"[bold blue]{label}"), BarColumn(), MofNCompleteColumn(),
                        TextColumn("loss {task.fields[loss]}"), TimeRemainingColumn(), console=console)
    task = progress.add_task(label, total=total, completed=start, loss="-")

    def on_step(iteration, record):
        progress.update(task, completed=iteration, loss=f"{record['total']:.5g}")

    return progress, on_step


def cmd_synth(pipeline: Pipeline, args) -> int:
    path = pipeline.synth()
    console.print(f"[bold green]Wrote {pipeline.config.synth.count} objects[/bold green] ({path})")
    return EXIT_OK


def cmd_train_extract(pipeline: Pipeline, args) -> int:
    cfg = pipeline.config.extractor
    progress, on_step = _training_progress("extractor", cfg.iterations, 0)
    with progress:
        result = pipeline.train_extractor(resume=args.resume, on_step=on_step)
    last = result.history[-1] if result.history else None
    if last:
        console.print(f"[bold green]Extractor trained[/bold green]: loss {last['total']:.5g} "
                      f"(matrix {last['matrix']:.4g}, bbox {last['bbox']:.4g}, exist {last['exist']:.4g})")
    return EXIT_OK


def cmd_train_diffuse(pipeline: Pipeline, args) -> int:
    cfg = pipeline.config.diffusion
    progress, on_step = _training_progress("denoiser", cfg.iterations, 0)
    with progress:
        result = pipeline.train_denoiser(resume=args.resume, on_step=on_step)
    if result.history:
        console.print(f"[bold green]Denoiser trained[/bold green]: loss {result.history[-1]['total']:.5g}")
    return EXIT_OK


def cmd_generate(pipeline: Pipeline, args) -> int:
    results = pipeline.generate(args.prompt, args.num_samples, urdf=args.urdf,
                                untrained=args.untrained_denoiser, cloud_path=args.cloud)
    table = Table(title=f"Generated '{results[0].label}'" if results else "Generated")
    for column in ("#", "parts", "joints", "valid", "file"):
        table.add_column(column)
    for r in results:
        table.add_row(str(r.index), str(r.graph.part_count), str(len(r.graph.edges)),
                      "[green]yes[/green]" if r.valid else "[red]no[/red]",
                      str(r.json_path or "-"))
    console.print(table)
    return EXIT_OK


def print_report(report: dict) -> None:
    table = Table(title=f"Evaluation over seeds {report['seeds']}")
    table.add_column("Regime")
    for k in METRICS:
        table.add_column(HEADERS[k], justify="right")
    summary = report["summary"]
    table.add_row(report.get("regime") or "-",
                  *(f"{summary[k]['mean']:.4f}±{summary[k]['std']:.2f}" for k in METRICS))
    console.print(table)


def cmd_eval(pipeline: Pipeline, args) -> int:
    report = pipeline.evaluate(args.gen_dir, args.ref_dir, regime=args.regime)
    print_report(report)
    console.print(f"Report written to {report['path']}")
    return EXIT_OK


def cmd_export(pipeline: Pipeline, args) -> int:
    path = pipeline.export(args.graph, args.fmt, args.out)
    console.print(f"[bold green]Exported[/bold green] {path}")
    return EXIT_OK


def cmd_selfcheck(pipeline: Optional[Pipeline], args) -> int:
    console.print(format_system_info(get_system_info()))
    table = Table(title="Self-checks")
    for column in ("check", "status", "time", "detail"):
        table.add_column(column)
    results = run_selfcheck()
    for r in results:
        table.add_row(r.name, "[green]ok[/green]" if r.passed else "[red]FAILED[/red]",
                      f"{r.seconds:.1f}s", r.detail)
    console.print(table)
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERICAL


COMMANDS = {
    "synth": cmd_synth,
    "train-extract": cmd_train_extract,
    "train-diffuse": cmd_train_diffuse,
    "generate": cmd_generate,
    "eval": cmd_eval,
    "export": cmd_export,
    "selfcheck": cmd_selfcheck,
}


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = ConfigManager.from_args(args, Config())
        os.environ.setdefault("ARTIGEN_LOG_DIR", config.paths.log_dir)
        pipeline = Pipeline(config)
        return COMMANDS[args.command](pipeline, args)
    except StageError as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        return EXIT_NUMERICAL if isinstance(e.cause, NumericalError) else EXIT_USER_ERROR
    except NumericalError as e:
        logger.error(f"Numerical failure in '{args.command}': {e}")
        console.print(f"[bold red]Numerical failure:[/bold red] {e}")
        return EXIT_NUMERICAL
    except (ValueError, FileNotFoundError, KeyError) as e:
        logger.error(f"'{args.command}' failed: {e}")
        console.print(f"[bold red]Error:[/bold red] {e}")
        return EXIT_USER_ERROR


def main():
    """Console entry point"""
    sys.exit(run())


if __name__ == "__main__":
    main()
