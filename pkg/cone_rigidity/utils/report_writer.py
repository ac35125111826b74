"""
Report emission: canonical JSON, flattened CSV and plain tables
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

import pandas as pd

from cone_rigidity.schemas import RunReport

logger = logging.getLogger(__name__)


def render_json(payload: Dict[str, Any]) -> str:
    """sort_keys and repr floats keep the output byte-stable"""
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _frame(report: RunReport) -> pd.DataFrame:
    rows = report.table_rows()
    if not rows:
        return pd.DataFrame()
    return pd.json_normalize(rows, sep=".")


def render_report(report: RunReport, fmt: str = "json") -> str:
    if fmt == "json":
        return render_json(report.model_dump(mode="json"))
    frame = _frame(report)
    if fmt == "csv":
        return frame.to_csv(index=False)
    if fmt == "table":
        return (frame.to_string(index=False) if not frame.empty else "(no rows)") + "\n"
    raise ValueError(f"Unknown report format: {fmt}")


def write_report(report: RunReport, fmt: str = "json", path: Optional[str] = None) -> str:
    """Render the report and write it to path (if given); returns the rendered text"""
    text = render_report(report, fmt)
    if path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
        logger.info(f"Report written to {target}")
    return text
