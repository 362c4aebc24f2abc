"""
Writers for result files: CSV tables, JSON reports and two-column .dat files
"""
import csv
import json
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple, Union

from pydantic import BaseModel

from .contours import Segment


def _prepare(path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """
    Write a CSV table with a header line.

    Args:
        path: Output file; parent directories are created
        header: Column names
        rows: One sequence of values per line

    Returns:
        The path written
    """
    path = _prepare(path)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_json(path: Union[str, Path], payload: Union[BaseModel, dict, list]) -> Path:
    """Write a model (via model_dump), a dict or a list of models as indented JSON"""
    path = _prepare(path)
    if isinstance(payload, BaseModel):
        payload = payload.model_dump()
    elif isinstance(payload, list):
        payload = [item.model_dump() if isinstance(item, BaseModel) else item for item in payload]
    with open(path, 'w') as f:
        json.dump(payload, f, indent=2)
    return path


def write_dat(path: Union[str, Path], columns: Tuple[str, str], rows: Iterable[Tuple[float, float]],
              comment: str = "") -> Path:
    """Whitespace-separated two-column text with '#' header lines, for plotting"""
    path = _prepare(path)
    with open(path, 'w') as f:
        if comment:
            f.write(f"# {comment}\n")
        f.write(f"# {columns[0]} {columns[1]}\n")
        for a, b in rows:
            f.write(f"{a:.12g} {b:.12g}\n")
    return path


def write_contours(path: Union[str, Path], segments: List[Segment], level: float) -> Path:
    """Contour segments as x y pairs, one blank line between segments"""
    path = _prepare(path)
    with open(path, 'w') as f:
        f.write(f"# level {level:.12g}\n# x y\n")
        for (x0, y0), (x1, y1) in segments:
            f.write(f"{x0:.12g} {y0:.12g}\n{x1:.12g} {y1:.12g}\n\n")
    return path
