"""
Report Writer for the approximation toolkit
JSON results with exact integers as strings, CSV tables and run manifests
"""
import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from src.config import RunConfig
from src.enclosure import Enclosure

logger = logging.getLogger(__name__)


def to_jsonable(value: Any) -> Any:
    """Integers become decimal strings; enclosures become {lo, hi}"""
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, Enclosure):
        return value.to_dict()
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [to_jsonable(v) for v in value]
    raise TypeError(f"cannot serialise {type(value).__name__}")


def dumps(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), indent=2, sort_keys=True)


def write_json(path: str, payload: Any) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(dumps(payload) + "\n", encoding="utf-8")
    logger.info("wrote %s", target)
    return target


def write_csv(path: str, frame: pd.DataFrame) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(target, index=False)
    logger.info("wrote %s (%d rows)", target, len(frame))
    return target


def write_text(path: str, text: str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")
    return target


def manifest_path(run: RunConfig) -> Path:
    """<out>.manifest.json next to the first artefact, else <command>[-<subcommand>].manifest.json in the cwd"""
    anchor = run.out or run.csv or run.svg or run.html
    if anchor is None:
        name = run.command if run.subcommand is None else f"{run.command}-{run.subcommand}"
        return Path(f"{name}.manifest.json")
    return Path(str(anchor) + ".manifest.json")


def write_manifest(run: RunConfig, extra: Optional[Dict[str, Any]] = None) -> Path:
    target = manifest_path(run)
    manifest = run.to_manifest()
    if extra:
        manifest["summary"] = extra
    return write_json(str(target), manifest)


def hits_frame(hits) -> pd.DataFrame:
    rows = [
        {
            "N": str(h.N),
            "numerator": str(h.numerator),
            "m": str(h.m),
            "n": str(h.n),
            "quality_lo": float(h.quality.lo),
            "quality_hi": float(h.quality.hi),
        }
        for h in hits
    ]
    return pd.DataFrame(rows, columns=["N", "numerator", "m", "n", "quality_lo", "quality_hi"])


def sums_frame(rows) -> pd.DataFrame:
    """(parameter, exact, main term, error) rows of the sums commands"""
    return pd.DataFrame(
        [{"parameter": p, "exact": str(e), "main_term": float(m), "error": float(err)} for p, e, m, err in rows],
        columns=["parameter", "exact", "main_term", "error"],
    )
