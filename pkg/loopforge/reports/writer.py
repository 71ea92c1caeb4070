"""Deterministic report writers.

JSON keys are sorted and floats go through the models' rounding, so two runs
with the same configuration and seed produce byte-identical files.
"""
import csv
import io
import json
import sys
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

from pydantic import BaseModel

from loopforge.constants import REPORT_FLOAT_DIGITS
from loopforge.logging_config import get_logger

logger = get_logger(__name__)


def to_json(model: Union[BaseModel, dict]) -> str:
    """Serialize a model (or plain dict) as sorted, indented JSON."""
    data = model.model_dump(mode="json") if isinstance(model, BaseModel) else model
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=True) + "\n"


def write_json(model: Union[BaseModel, dict], path: Optional[Path]) -> None:
    """Write JSON to ``path`` or stdout when ``path`` is None."""
    text = to_json(model)
    if path is None:
        sys.stdout.write(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info(f"Wrote JSON report {path}")


def format_cell(value) -> str:
    """Stable text form of a CSV cell."""
    if isinstance(value, float):
        return f"{value:.{REPORT_FLOAT_DIGITS}e}"
    return str(value)


def to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buffer.getvalue()


def write_csv(header: Sequence[str], rows: List[Sequence], path: Optional[Path]) -> None:
    """Write rows as CSV to ``path`` or stdout when ``path`` is None."""
    text = to_csv(header, rows)
    if path is None:
        sys.stdout.write(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info(f"Wrote CSV {path} ({len(rows)} rows)")
