import json
import logging
import os
from pathlib import Path
from typing import Any

import pandas as pd
from pydantic import BaseModel

logger = logging.getLogger(__name__)


def write_text_atomic(path: str | Path, text: str) -> Path:
    """Записывает текст в файл атомарно (временный файл + замена)."""
    path = Path(path)
    temp_path = path.with_name(path.name + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(temp_path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        # Атомарно заменяем файл
        os.replace(temp_path, path)
    except Exception:
        if temp_path.exists():
            temp_path.unlink()
        logger.exception("Ошибка записи файла %s", path)
        raise
    return path


def dumps_json(payload: BaseModel | dict[str, Any]) -> str:
    """Детерминированная сериализация отчёта в JSON."""
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


def write_json(path: str | Path, payload: BaseModel | dict[str, Any]) -> Path:
    return write_text_atomic(path, dumps_json(payload))


def write_csv(path: str | Path, frame: pd.DataFrame) -> Path:
    return write_text_atomic(path, frame.to_csv(index=False, lineterminator="\n"))
