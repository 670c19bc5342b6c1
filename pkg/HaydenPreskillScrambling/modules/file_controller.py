"""Result tables, config files and text dumps."""
import json
import logging
import os
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd

from .config import DIAGNOSTIC_COLUMNS, RESULT_COLUMNS

logger = logging.getLogger(__name__)


def resolve_output_path(path: str) -> Path:
    """Make ``path`` absolute against the project root and create its parent directory."""
    output_path = Path(path)
    if not output_path.is_absolute():
        project_root = Path(__file__).parent.parent.parent
        output_path = project_root / output_path
    output_path.parent.mkdir(parents=True, exist_ok=True)
    return output_path


def results_frame(rows: Sequence[Dict], extra_columns: Optional[List[str]] = None) -> pd.DataFrame:
    """Put result rows into the fixed column order.

    Diagnostic and extra columns follow the base columns, and only when at
    least one row carries them.
    """
    df = pd.DataFrame(list(rows))
    missing = [col for col in RESULT_COLUMNS if col not in df.columns]
    if missing:
        raise ValueError(f"Result rows lack required columns: {missing}")
    columns = list(RESULT_COLUMNS)
    for col in DIAGNOSTIC_COLUMNS + list(extra_columns or []):
        if col in df.columns and col not in columns:
            columns.append(col)
    return df[columns]


def save_results_csv(rows: Sequence[Dict], csv_path: str,
                     extra_columns: Optional[List[str]] = None) -> Path:
    """Write result rows as CSV with a stable float format.

    Returns:
        Absolute path of the written file

    Raises:
        RuntimeError: if the file cannot be written
    """
    output_path = resolve_output_path(csv_path)
    try:
        results_frame(rows, extra_columns).to_csv(output_path, index=False, float_format='%.12g')
    except OSError as e:
        logger.error(f"Failed to write results to {output_path}: {e}")
        raise RuntimeError(f"Failed to write results to {output_path}: {e}")
    logger.info(f"Results saved to: {output_path}")
    return output_path


def save_results_json(payload: Dict, json_path: str) -> Path:
    """Dump ``payload`` (config echo plus rows) as indented JSON."""
    output_path = resolve_output_path(json_path)
    try:
        with open(output_path, 'w', encoding='utf-8') as f:
            json.dump(payload, f, indent=2, ensure_ascii=False, sort_keys=False)
    except OSError as e:
        logger.error(f"Failed to write results to {output_path}: {e}")
        raise RuntimeError(f"Failed to write results to {output_path}: {e}")
    logger.info(f"Results saved to: {output_path}")
    return output_path


def load_results_csv(csv_path: str) -> pd.DataFrame:
    try:
        return pd.read_csv(csv_path)
    except FileNotFoundError:
        logger.error(f"CSV file '{csv_path}' not found")
        raise


def load_config_file(path: str) -> Dict:
    """Read a JSON experiment config.

    Raises:
        ValueError: if the file is not a JSON object
    """
    with open(path, 'r', encoding='utf-8') as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"Config file {path} is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise ValueError(f"Config file {path} must hold a JSON object")
    logger.debug(f"Loaded config from {path}")
    return data


def write_text(text: str, path: str) -> Path:
    """Write a text dump (circuit, Hamiltonian, basis listing)."""
    output_path = resolve_output_path(path)
    with open(output_path, 'w', encoding='utf-8') as f:
        f.write(text)
    logger.info(f"Wrote {len(text.splitlines())} lines to {output_path}")
    return output_path


def sibling_path(path: str, suffix: str) -> str:
    """``outputs/run.csv`` + ``_basis.txt`` → ``outputs/run_basis.txt``."""
    root, _ = os.path.splitext(path)
    return f"{root}{suffix}"
