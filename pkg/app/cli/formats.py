"""Сериализация результатов: CSV, JSON и markdown-таблицы.

CSV: UTF-8, LF, заголовок всегда, числа с 9 значащими цифрами.
JSON: порядок ключей как в исходных словарях, отступ 2.
"""
import json
import math
import sys
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from app.utils import logger

FLOAT_FORMAT = "%.9g"


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return "" if math.isnan(value) else FLOAT_FORMAT % value
    return str(value)


def to_csv(rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> str:
    frame = pd.DataFrame(list(rows), columns=list(columns))
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def to_json(document: Any) -> str:
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


def to_markdown(rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> str:
    lines = [
        "| " + " | ".join(columns) + " |",
        "|" + "---|" * len(columns),
    ]
    for row in rows:
        lines.append("| " + " | ".join(_cell(row.get(c)) for c in columns) + " |")
    return "\n".join(lines) + "\n"


def render(rows: List[Dict[str, Any]], columns: Sequence[str], fmt: str, document: Optional[Any] = None) -> str:
    """Таблица в выбранном формате; для JSON можно передать готовый документ."""
    if fmt == "csv":
        return to_csv(rows, columns)
    if fmt == "json":
        return to_json(rows if document is None else document)
    if fmt == "markdown":
        return to_markdown(rows, columns)
    raise ValueError(f"Unknown output format '{fmt}'")


def emit(text: str, output: Optional[str] = None) -> None:
    if output is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(output, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    logger.info(f"Wrote {output}")
