import argparse
import sys
import time

from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import DomainError
from app.core.logger import logger
from app.core.storage import metadata_lines, read_grid, resolve_output_path, write_grid
from app.core.utils import parse_pair, parse_range, render_json, render_table
from app.models.external import CurveResponse, GridSummaryResponse, OutputRecord
from app.models.internal import EquivalenceCurve, Ensemble, SimConfig
from app.services.curve_service import ANALYTIC_TASKS, CurveFactory, band_to_external
from app.services.purification import classify_region
from app.services.tomography import extract_contour, simulate_grid
from app.services.verdicts import (
    all_curves,
    ambiguity_band,
    rank_ensembles,
    ranking_to_external,
    region_to_external,
    trade_to_external,
    trade_verdict,
)

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_IO = 3

TASK_CHOICES = ["rtp", "qcb", "purification", "qst", "all"]

# Build an ensemble from an "N,F" flag, naming the flag on failure
def make_ensemble(text: str, flag: str, d: int = 2) -> Ensemble:
    n, f = parse_pair(text, flag)
    try:
        return Ensemble(n=n, f=f, d=d)
    except ValidationError as e:
        messages = "; ".join(err["msg"] for err in e.errors())
        raise DomainError(f"{flag}: {messages}", field=flag) from e

# `blocks` holds (name, columns, rows, notes) for csv; json dumps `payload`
def _emit(args, command: str, params: dict, payload, blocks: list[tuple[str | None, list[str], list[dict], list[str]]]) -> None:
    if args.format == "json":
        record = OutputRecord(params=params, payload=payload)
        sys.stdout.write(render_json(record.model_dump(mode="json")))
        return

    out = ["\n".join(metadata_lines(command, params)) + "\n"]
    for name, columns, rows, notes in blocks:
        header = [f"# block={name}"] if name else []
        out.append(render_table(columns, rows, header + notes))
    sys.stdout.write("".join(out))

def _dump(model) -> dict:
    return model.model_dump(mode="json")

def _curve_block(curve: EquivalenceCurve) -> tuple[str, list[str], list[dict], list[str]]:
    notes = [f"# semantics={curve.metadata.semantics}"]
    notes += [f"# truncated g={p.g!r} m=inf singular=true" for p in curve.truncated]
    notes += [f"# gap g={g!r}" for g in curve.gaps]
    rows = [{"g": p.g, "m": p.m} for p in curve.points]
    return curve.task.value.lower(), ["g", "m"], rows, notes

# Curve command: one task or all four plus the ambiguity band
def cmd_curve(args) -> int:
    logger.info("⚪ [cli][cmd_curve]: Task %s, reference %s.", args.task, args.ref)
    g_grid = parse_range(args.g, "--g")
    ref = make_ensemble(args.ref, "--ref", d=args.d if args.task == "rtp" else 2)
    params = {"task": args.task, "ref": list(parse_pair(args.ref)), "d": args.d, "theta": args.theta, "g": g_grid}

    if args.task == "all":
        curves = all_curves(ref, g_grid, theta=args.theta, d=args.d)
        band = ambiguity_band(curves)
        builders = [CurveFactory.get_builder(c.task) for c in curves]
        payload = {
            "curves": [_dump(b.to_external(c)) for b, c in zip(builders, curves)],
            "band": _dump(band_to_external(band)),
        }
        blocks = [_curve_block(c) for c in curves]
        blocks.append((
            "band",
            ["g", "m_low", "m_high", "low_task", "high_task"],
            [{"g": p.g, "m_low": p.m_low, "m_high": p.m_high, "low_task": p.low_task.value.lower(), "high_task": p.high_task.value.lower()} for p in band.points],
            [],
        ))
    else:
        builder = CurveFactory.get_builder(args.task)
        curve = builder.build(ref, g_grid, theta=args.theta)
        payload = _dump(builder.to_external(curve))
        blocks = [_curve_block(curve)]

    _emit(args, "curve", params, payload, blocks)
    logger.info("🟢 [cli][cmd_curve]: Curve output written.")
    return EXIT_OK

def cmd_trade(args) -> int:
    logger.info("⚪ [cli][cmd_trade]: Reference %s, offer %s.", args.ref, args.offer)
    ref = make_ensemble(args.ref, "--ref")
    offer = make_ensemble(args.offer, "--offer")
    params = {"ref": list(parse_pair(args.ref)), "offer": list(parse_pair(args.offer, "--offer")), "d": args.d, "theta": args.theta}

    report = trade_verdict(ref, offer, theta=args.theta, d=args.d)
    rows = [
        {
            "task": c.task.value.lower(),
            "verdict": c.verdict.value,
            "m_required": c.m_required,
            "m_offered": c.m_offered,
            "copies_required": c.copies_required,
        } for c in report.per_task.values()
    ]
    summary = {
        "overall": report.overall.value,
        "indifferent": report.indifferent,
        "region": report.region.region.value,
        "region_strength": report.region.strength.value,
    }
    blocks = [
        ("tasks", ["task", "verdict", "m_required", "m_offered", "copies_required"], rows, []),
        ("overall", list(summary), [summary], []),
    ]
    _emit(args, "trade", params, _dump(trade_to_external(report)), blocks)
    return EXIT_OK

REGION_COLUMNS = ["region", "strength", "on_copies", "on_fidelity", "on_separation", "separation_m", "favours"]

def cmd_region(args) -> int:
    ref = make_ensemble(args.ref, "--ref")
    query = make_ensemble(args.query, "--query")
    params = {"ref": list(parse_pair(args.ref)), "query": list(parse_pair(args.query, "--query"))}

    verdict = region_to_external(classify_region(ref, query))
    _emit(args, "region", params, _dump(verdict), [(None, REGION_COLUMNS, [_dump(verdict)], [])])
    return EXIT_OK

def cmd_simulate(args) -> int:
    n_grid = parse_range(args.n, "--n", integer=True)
    g_grid = parse_range(args.g, "--g")
    trials = settings.SIM_TRIALS if args.trials is None else args.trials
    config = SimConfig(n_grid=n_grid, g_grid=g_grid, trials=trials, master_seed=args.seed)
    path = resolve_output_path(args.out, f"grid_seed{args.seed}.csv")

    # Thread count and output path stay out of the echo so grid files are byte-identical
    params = {"n": n_grid, "g": g_grid, "trials": trials, "seed": args.seed, "shot_split": config.shot_split}

    started = time.perf_counter()
    grid = simulate_grid(config, threads=args.threads)
    runtime = time.perf_counter() - started
    write_grid(path, grid, "simulate", params)

    summary = GridSummaryResponse(
        path=str(path),
        n_count=len(grid.n_grid),
        g_count=len(grid.g_grid),
        trials=grid.trials,
        seed=grid.master_seed,
        degenerate_trials=int(grid.degenerate.sum()),
        runtime_seconds=runtime,
    )
    _emit(args, "simulate", params, _dump(summary), [(None, list(GridSummaryResponse.model_fields), [_dump(summary)], [])])
    logger.info("🟢 [cli][cmd_simulate]: %sx%s grid in %.2fs, seed %s.", summary.n_count, summary.g_count, runtime, args.seed)
    return EXIT_OK

def cmd_contour(args) -> int:
    grid = read_grid(args.grid)
    ref = make_ensemble(args.ref, "--ref")
    params = {"grid": args.grid, "ref": list(parse_pair(args.ref)), "metric": args.metric, "seed": grid.master_seed, "trials": grid.trials}

    curve = extract_contour(grid, ref, metric=args.metric)
    payload = CurveResponse(
        task=curve.task.value,
        reference={"n": ref.n, "f": ref.f, "d": ref.d},
        semantics=curve.metadata.semantics,
        d=curve.metadata.d,
        metric=curve.metadata.metric,
        rows=[{"g": p.g, "m": p.m} for p in curve.points],
        gaps=curve.gaps,
    )
    rows = [{"g": p.g, "m": p.m, "gap": False} for p in curve.points]
    rows += [{"g": g, "m": None, "gap": True} for g in curve.gaps]
    rows.sort(key=lambda row: row["g"])
    _emit(args, "contour", params, _dump(payload), [("simulated", ["g", "m", "gap"], rows, [])])
    return EXIT_OK

def cmd_rank(args) -> int:
    if not args.ens:
        raise DomainError("--ens: give at least one ensemble", field="--ens")
    candidates = [make_ensemble(text, "--ens") for text in args.ens]
    params = {"ens": [list(parse_pair(text, "--ens")) for text in args.ens], "d": args.d, "theta": args.theta}

    report = rank_ensembles(candidates, theta=args.theta, d=args.d)
    tasks = [task.value.lower() for task in ANALYTIC_TASKS]
    columns = ["n", "f"] + [f"score_{t}" for t in tasks] + [f"rank_{t}" for t in tasks]
    rows = []
    for entry in report.entries:
        row = {"n": entry.ensemble.n, "f": entry.ensemble.f}
        for task in ANALYTIC_TASKS:
            row[f"score_{task.value.lower()}"] = entry.scores[task]
            row[f"rank_{task.value.lower()}"] = entry.ranks[task]
        rows.append(row)
    _emit(args, "rank", params, _dump(ranking_to_external(report)), [(None, columns, rows, [])])
    return EXIT_OK

def _add_common(sub: argparse.ArgumentParser, d: bool = True, theta: bool = True) -> None:
    if d:
        sub.add_argument("--d", type=int, default=settings.DEFAULT_DIMENSION, help="Hilbert-space dimension for the RTP task")
    if theta:
        sub.add_argument("--theta", type=float, default=settings.DEFAULT_THETA, help="Discrimination angle for the QCB task (radians)")
    sub.add_argument("--format", choices=["csv", "json"], default="csv", help="Output format")

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="python -m app", description=settings.PROJECT_NAME)
    commands = parser.add_subparsers(dest="command", required=True)

    curve = commands.add_parser("curve", help="Equivalence curves through a reference ensemble")
    curve.add_argument("--task", choices=TASK_CHOICES, default="all", type=str.lower)
    curve.add_argument("--ref", required=True, help="Reference ensemble as N,F")
    curve.add_argument("--g", default="0.55:1.0:46", help="Fidelity grid lo:hi:count[log]")
    _add_common(curve)
    curve.set_defaults(handler=cmd_curve)

    trade = commands.add_parser("trade", help="Accept or reject an offered ensemble")
    trade.add_argument("--ref", required=True, help="Reference ensemble as N,F")
    trade.add_argument("--offer", required=True, help="Offered ensemble as M,G")
    _add_common(trade)
    trade.set_defaults(handler=cmd_trade)

    region = commands.add_parser("region", help="Purification region of a query ensemble")
    region.add_argument("--ref", required=True, help="Reference ensemble as N,F")
    region.add_argument("--query", required=True, help="Query ensemble as M,G")
    _add_common(region, d=False, theta=False)
    region.set_defaults(handler=cmd_region)

    simulate = commands.add_parser("simulate", help="Monte Carlo tomography over an (n, g) grid")
    simulate.add_argument("--n", required=True, help="Copy-count grid lo:hi:count[log] or a single value")
    simulate.add_argument("--g", required=True, help="Fidelity grid lo:hi:count[log] or a single value")
    simulate.add_argument("--trials", type=int, default=None, help=f"Trials per cell (default {settings.SIM_TRIALS})")
    simulate.add_argument("--seed", type=int, default=0, help="Master seed")
    simulate.add_argument("--out", default=None, help=f"Grid file path (default under {settings.OUTPUT_DIR}/)")
    simulate.add_argument("--threads", type=int, default=settings.SIM_THREADS, help="Worker cap; results do not depend on it")
    _add_common(simulate, d=False, theta=False)
    simulate.set_defaults(handler=cmd_simulate)

    contour = commands.add_parser("contour", help="Simulated equivalence curve from a grid file")
    contour.add_argument("--grid", required=True, help="Grid file written by simulate")
    contour.add_argument("--ref", required=True, help="Reference ensemble as N,F")
    contour.add_argument("--metric", choices=["infidelity", "bures_sq"], default="infidelity")
    _add_common(contour, d=False, theta=False)
    contour.set_defaults(handler=cmd_contour)

    rank = commands.add_parser("rank", help="Rank ensembles per task")
    rank.add_argument("--ens", action="append", default=[], help="Ensemble as N,F; repeat for each candidate")
    _add_common(rank)
    rank.set_defaults(handler=cmd_rank)

    return parser

def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_DOMAIN

    try:
        return args.handler(args)
    except OSError as e:
        logger.error("🔴 [cli][%s]: I/O failure: %s", args.command, e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        # DomainError, pydantic ValidationError and bad task names all land here
        logger.error("🔴 [cli][%s]: %s", args.command, e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN
