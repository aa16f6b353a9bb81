import csv
import json
import os
import platform
import time
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence

import numpy as np


def _plain(value: Any) -> Any:
    """Convert numpy scalars and arrays into JSON-serialisable Python values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


def write_json(data: Dict[str, Any], filename: str, directory: str) -> str:
    """Write JSON with sorted keys and two-space indentation. Returns the path."""
    os.makedirs(directory, exist_ok=True)
    filepath = os.path.join(directory, filename)
    with open(filepath, 'w', encoding='utf-8') as f:
        json.dump(_plain(data), f, indent=2, sort_keys=True)
        f.write("\n")
    return filepath


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def write_csv(rows: Sequence[Dict[str, Any]], filename: str, directory: str,
              columns: Optional[List[str]] = None) -> str:
    """Write rows in a fixed column order; floats use repr so they round-trip exactly."""
    os.makedirs(directory, exist_ok=True)
    filepath = os.path.join(directory, filename)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(filepath, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])
    return filepath


def save_to_file(content: str, filename: str, directory: str) -> str:
    """
    Save text content to a timestamped file.

    Args:
        content: Content to save
        filename: Name of the file
        directory: Directory to save the file in

    Returns:
        Path to the saved file
    """
    os.makedirs(directory, exist_ok=True)
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    filepath = os.path.join(directory, f"{timestamp}_{filename}")

    with open(filepath, 'w', encoding='utf-8') as f:
        f.write(content)

    return filepath


def build_manifest(subcommand: str, config_echo: Dict[str, Any], seed: int,
                   started: float, files: Sequence[str] = ()) -> Dict[str, Any]:
    """Run manifest: config echo, seed, code version, platform and wall time."""
    from experiments import __version__

    return {
        "subcommand": subcommand,
        "config": config_echo,
        "seed": seed,
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "platform": platform.platform(),
        "files": sorted(os.path.basename(f) for f in files),
        "wall_time_seconds": time.perf_counter() - started,
    }
