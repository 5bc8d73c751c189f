import csv
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

logger = logging.getLogger(__name__)


def _format(value: Any) -> Any:
    if isinstance(value, float):
        return f"{value:.6f}"
    return "" if value is None else value


def writeCsv(path, fieldNames: Sequence[str], rows: Iterable[Dict[str, Any]]) -> Path:
    """Write rows to a fresh CSV file with a header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(fieldNames))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _format(row.get(k)) for k in fieldNames})
    return path


def appendCsv(path, fieldNames: Sequence[str], rows: Iterable[Dict[str, Any]]) -> Path:
    """Append rows, writing the header only when the file is new."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    isNew = not path.is_file() or path.stat().st_size == 0
    with open(path, "a", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(fieldNames))
        if isNew:
            writer.writeheader()
        for row in rows:
            writer.writerow({k: _format(row.get(k)) for k in fieldNames})
    return path


def readCsv(path) -> List[Dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))
