import json
import math
import re

import numpy as np
import pandas as pd

from app.core.config import settings
from app.core.exceptions import DomainError
from app.core.logger import logger

RANGE_PATTERN = re.compile(r"^\s*([^:]+):([^:]+):\s*(\d+)\s*(log)?\s*$")

# Parse "lo:hi:count[log]" or a single number into a sorted grid
def parse_range(text: str, flag: str = "--g", integer: bool = False) -> list[float] | list[int]:
    logger.debug("⚪ [utils][parse_range]: Parsing %s=%s.", flag, text)

    match = RANGE_PATTERN.match(text)
    try:
        if match is None:
            values = [float(text)]
        else:
            lo, hi, count = float(match.group(1)), float(match.group(2)), int(match.group(3))
            if count < 1:
                raise DomainError(f"{flag}: count must be >= 1, got {count}", field=flag)
            if match.group(4):
                if lo <= 0 or hi <= 0:
                    raise DomainError(f"{flag}: log spacing needs positive bounds", field=flag)
                values = [lo] if count == 1 else np.geomspace(lo, hi, count).tolist()
            else:
                values = [lo] if count == 1 else np.linspace(lo, hi, count).tolist()
    except ValueError as e:
        if isinstance(e, DomainError):
            raise
        raise DomainError(f"{flag}: cannot parse range {text!r}, expected lo:hi:count[log]", field=flag) from e

    if not all(math.isfinite(v) for v in values):
        raise DomainError(f"{flag}: range bounds must be finite", field=flag)

    if integer:
        return sorted(set(int(round(v)) for v in values))
    return sorted(set(values))

# Parse "N,F" into a pair of floats
def parse_pair(text: str, flag: str = "--ref") -> tuple[float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise DomainError(f"{flag}: expected N,F, got {text!r}", field=flag)
    try:
        n, f = float(parts[0]), float(parts[1])
    except ValueError as e:
        raise DomainError(f"{flag}: expected numeric N,F, got {text!r}", field=flag) from e
    if not (math.isfinite(n) and math.isfinite(f)):
        raise DomainError(f"{flag}: N and F must be finite", field=flag)
    return n, f

# Bools as lowercase literals, everything else left to pandas
def _csv_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    return value

# Comma-separated table after the `#` metadata lines; None renders empty, floats with SIG_DIGITS
def render_table(columns: list[str], rows: list[dict], metadata: list[str] | None = None) -> str:
    frame = pd.DataFrame([{c: _csv_cell(row.get(c)) for c in columns} for row in rows], columns=columns)
    table = frame.to_csv(index=False, float_format=f"%.{settings.SIG_DIGITS}g", lineterminator="\n")
    lines = list(metadata or [])
    return "".join(line + "\n" for line in lines) + table

def render_json(record: dict) -> str:
    return json.dumps(record, indent=2, sort_keys=False, allow_nan=True) + "\n"
