import json
from pathlib import Path

import numpy as np
import pandas as pd

from app.core.config import settings
from app.core.exceptions import DomainError, GridFileError
from app.core.logger import logger
from app.models.internal import SimGrid

GRID_COLUMNS = ["n", "g", "mean_infidelity", "mean_bures_sq", "stderr", "stderr_bures_sq", "trials", "flags"]
# Full precision so that re-reading a grid reproduces in-process results
GRID_FLOAT_FORMAT = "%.17g"

# Resolve output path: explicit path, else OUTPUT_DIR from settings
def resolve_output_path(path: str | None, default_name: str) -> Path:
    if path:
        return Path(path)
    return Path(settings.OUTPUT_DIR) / default_name

def metadata_lines(command: str, params: dict) -> list[str]:
    return [
        f"# schema_version={settings.SCHEMA_VERSION}",
        f"# command={command}",
        f"# params={json.dumps(params, sort_keys=True)}",
    ]

def grid_to_frame(grid: SimGrid) -> pd.DataFrame:
    rows = []
    for j, n in enumerate(grid.n_grid):
        for k, g in enumerate(grid.g_grid):
            rows.append({
                "n": int(n),
                "g": float(g),
                "mean_infidelity": float(grid.mean_infidelity[j, k]),
                "mean_bures_sq": float(grid.mean_bures_sq[j, k]),
                "stderr": float(grid.stderr[j, k]),
                "stderr_bures_sq": float(grid.stderr_bures_sq[j, k]),
                "trials": int(grid.trials),
                "flags": f"degenerate={int(grid.degenerate[j, k])}",
            })
    return pd.DataFrame(rows, columns=GRID_COLUMNS)

def write_grid(path: str | Path, grid: SimGrid, command: str, params: dict) -> Path:
    path = Path(path)
    logger.info("⚪ [storage][write_grid]: Writing %s grid rows to %s.", len(grid.n_grid) * len(grid.g_grid), path)

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            handle.write("\n".join(metadata_lines(command, params)) + "\n")
            grid_to_frame(grid).to_csv(handle, index=False, float_format=GRID_FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        logger.error("🔴 [storage][write_grid]: Could not write %s: %s", path, e)
        raise GridFileError(f"cannot write grid file {path}: {e}") from e

    logger.info("🟢 [storage][write_grid]: Grid saved to %s.", path)
    return path

def read_metadata(path: str | Path) -> dict[str, str]:
    metadata = {}
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            metadata[key.strip()] = value
    return metadata

def read_grid(path: str | Path) -> SimGrid:
    path = Path(path)
    logger.info("⚪ [storage][read_grid]: Reading grid file %s.", path)

    try:
        metadata = read_metadata(path)
        frame = pd.read_csv(path, comment="#", float_precision="round_trip")
    except OSError as e:
        logger.error("🔴 [storage][read_grid]: Could not read %s: %s", path, e)
        raise GridFileError(f"cannot read grid file {path}: {e}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DomainError(f"grid file {path} is not a valid table: {e}", field="grid") from e

    missing = [c for c in GRID_COLUMNS if c not in frame.columns]
    if missing or frame.empty:
        raise DomainError(f"grid file {path} lacks columns {missing or GRID_COLUMNS}", field="grid")

    n_grid = list(dict.fromkeys(int(n) for n in frame["n"]))
    g_grid = list(dict.fromkeys(float(g) for g in frame["g"]))
    if len(frame) != len(n_grid) * len(g_grid):
        raise DomainError(f"grid file {path} is not a complete rectangular grid", field="grid")

    def pivot(column: str) -> np.ndarray:
        return frame.pivot(index="n", columns="g", values=column).loc[n_grid, g_grid].to_numpy()

    degenerate = frame["flags"].str.extract(r"degenerate=(\d+)")[0].fillna(0).astype(int)
    frame = frame.assign(degenerate=degenerate)

    try:
        params = json.loads(metadata.get("params", "{}"))
    except json.JSONDecodeError:
        params = {}

    grid = SimGrid(
        n_grid=n_grid,
        g_grid=g_grid,
        trials=int(frame["trials"].iloc[0]),
        master_seed=int(params.get("seed", 0)),
        mean_infidelity=pivot("mean_infidelity"),
        mean_bures_sq=pivot("mean_bures_sq"),
        stderr=pivot("stderr"),
        stderr_bures_sq=pivot("stderr_bures_sq"),
        degenerate=pivot("degenerate").astype(int),
    )
    logger.info("🟢 [storage][read_grid]: Loaded %sx%s grid.", len(n_grid), len(g_grid))
    return grid
