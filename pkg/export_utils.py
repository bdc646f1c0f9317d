"""
Writers for tables and reports produced by the lab commands
"""
import json
import logging
import os
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import pandas as pd
from dotenv import load_dotenv
from pydantic import BaseModel

from models import DiscreteMeasure, ScheduleRow, fraction_text

logger = logging.getLogger(__name__)

DEFAULT_OUTPUT_DIR = "output"

load_dotenv()


def output_dir(override: Optional[str] = None) -> Path:
    """Output directory from the argument or SARD_LAB_OUTPUT_DIR, created on demand"""
    path = Path(override or os.getenv("SARD_LAB_OUTPUT_DIR", DEFAULT_OUTPUT_DIR))
    path.mkdir(parents=True, exist_ok=True)
    return path


def rational_text(value: Any) -> str:
    """num/den for exact values, empty for floats"""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, (int, Fraction)):
        return fraction_text(Fraction(value))
    return ""


def with_rational_columns(df: pd.DataFrame, columns: Sequence[str]) -> pd.DataFrame:
    """Replace exact columns by "num/den" text and add a rounded <name>_decimal column"""
    out = df.copy()
    for name in columns:
        exact = out[name]
        out[name] = [rational_text(v) if rational_text(v) else repr(float(v)) for v in exact]
        out.insert(out.columns.get_loc(name) + 1, f"{name}_decimal", [round(float(v), 15) for v in exact])
    return out


def schedule_frame(rows: Iterable[ScheduleRow]) -> pd.DataFrame:
    df = pd.DataFrame([{"n": r.n, "alpha": r.alpha, "a": r.a, "s": r.s, "r": r.r} for r in rows])
    return with_rational_columns(df, ["alpha", "a", "s", "r"])


def measure_frame(measure: DiscreteMeasure) -> pd.DataFrame:
    df = pd.DataFrame(
        {
            "location": [atom.location for atom in measure.atoms],
            "mass": [atom.mass for atom in measure.atoms],
        }
    )
    return with_rational_columns(df, ["location", "mass"])


def write_table(df: pd.DataFrame, path: Path, output_format: str = "csv") -> Path:
    """Export a table as CSV or as a JSON list of records"""
    path = Path(path).with_suffix(f".{output_format}")
    if output_format == "csv":
        df.to_csv(path, index=False)
    elif output_format == "json":
        path.write_text(df.to_json(orient="records", indent=2), encoding="utf-8")
    else:
        raise ValueError(f"Unknown output format {output_format!r}")
    logger.info("Exported %d rows to %s", len(df), path)
    return path


def write_report(report: BaseModel, path: Path) -> Path:
    path = Path(path).with_suffix(".json")
    path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
    logger.info("Wrote report to %s", path)
    return path


def write_reports(reports: List[BaseModel], path: Path) -> Path:
    path = Path(path).with_suffix(".json")
    payload = [json.loads(r.model_dump_json()) for r in reports]
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    logger.info("Wrote %d reports to %s", len(reports), path)
    return path


def load_jsonl(path: Path) -> List[Dict[str, Any]]:
    """Read a JSON-lines file, skipping blank lines"""
    items = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        items.append(json.loads(line))
    return items
