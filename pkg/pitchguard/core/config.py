"""
Модуль конфигурации приложения.
Значения по умолчанию берутся из файла CONF.py в корне проекта,
переменные окружения с префиксом PITCHGUARD_ имеют приоритет.
Файлы конфигурации запусков читаются в формате `ключ = значение`.
"""
import sys
import typing
from pathlib import Path
from typing import Any, Iterable, Optional, Type

from pydantic import BaseModel, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from pitchguard.core.errors import ConfigError

# Добавляем корневую директорию проекта в путь для импорта CONF
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

# Импортируем настройки из CONF.py
try:
    import CONF
except ImportError:
    raise ImportError(
        "Не удалось импортировать CONF.py. Убедитесь, что файл CONF.py находится в корне проекта."
    )


class Settings(BaseSettings):
    """
    Настройки приложения.
    Значения по умолчанию загружаются из CONF.py.
    """

    model_config = SettingsConfigDict(env_prefix="PITCHGUARD_", case_sensitive=False)

    # Общие настройки запуска
    LOG_LEVEL: str = getattr(CONF, "LOG_LEVEL", "INFO")
    JOBS: Optional[int] = getattr(CONF, "JOBS", None)
    SEED: int = getattr(CONF, "SEED", 1)

    # Сетка поиска гауссовского процесса
    GAMMA_MIN: float = getattr(CONF, "GAMMA_MIN", 0.00002)
    GAMMA_MAX: float = getattr(CONF, "GAMMA_MAX", 0.2)
    GAMMA_COUNT: int = getattr(CONF, "GAMMA_COUNT", 1000)
    EPSILON_MIN: float = getattr(CONF, "EPSILON_MIN", 0.0001)
    EPSILON_MAX: float = getattr(CONF, "EPSILON_MAX", 0.01)
    EPSILON_STEP: float = getattr(CONF, "EPSILON_STEP", 0.0001)
    MAX_TRUNCATION: int = getattr(CONF, "MAX_TRUNCATION", 12)
    NEGATIVE_VARIANCE_TOL: float = getattr(CONF, "NEGATIVE_VARIANCE_TOL", 1e-8)
    PSD_TOL: float = getattr(CONF, "PSD_TOL", 1e-8)

    # Правила отбора игроков
    EARLY_INJURY_DAYS: int = getattr(CONF, "EARLY_INJURY_DAYS", 3)
    EXCLUDE_POSITIONS: list[str] = list(getattr(CONF, "EXCLUDE_POSITIONS", ["goalkeeper"]))

    # Генетический алгоритм
    GA_POPULATION: int = getattr(CONF, "GA_POPULATION", 50)
    GA_GENERATIONS: int = getattr(CONF, "GA_GENERATIONS", 1000)
    GA_CROSSOVER_P: float = getattr(CONF, "GA_CROSSOVER_P", 0.7)
    GA_MUTATION_P: float = getattr(CONF, "GA_MUTATION_P", 0.05)

    # Кросс-валидация
    CV_REPEATS: int = getattr(CONF, "CV_REPEATS", 10)
    CV_FOLDS: int = getattr(CONF, "CV_FOLDS", 10)
    CV_STRATIFIED: bool = getattr(CONF, "CV_STRATIFIED", True)

    # IRLS
    IRLS_TOL: float = getattr(CONF, "IRLS_TOL", 1e-10)
    IRLS_MAX_ITER: int = getattr(CONF, "IRLS_MAX_ITER", 100)
    IRLS_MAX_HALVINGS: int = getattr(CONF, "IRLS_MAX_HALVINGS", 20)
    RIDGE_FALLBACK: float = getattr(CONF, "RIDGE_FALLBACK", 1e-6)


# Создаем экземпляр настроек
settings = Settings()


def parse_key_value(text: str, source: str = "<config>") -> dict[str, str]:
    """
    Разбирает текст конфигурации в формате `ключ = значение`.

    Args:
        text: содержимое файла
        source: имя источника для сообщений об ошибках

    Returns:
        Словарь ключ -> строковое значение (ключи в нижнем регистре)
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: ожидается строка вида 'ключ = значение'", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if not key.isidentifier():
            raise ConfigError(f"{source}:{lineno}: недопустимый ключ '{key}'", line=lineno)
        if key in values:
            raise ConfigError(f"{source}:{lineno}: ключ '{key}' указан повторно", line=lineno)
        values[key] = value
    return values


def _is_list(annotation: Any) -> bool:
    if typing.get_origin(annotation) is list:
        return True
    return any(typing.get_origin(arg) is list for arg in typing.get_args(annotation))


def _is_optional(annotation: Any) -> bool:
    return type(None) in typing.get_args(annotation)


def _coerce(annotation: Any, raw: str) -> Any:
    if _is_optional(annotation) and raw.lower() in ("", "none"):
        return None
    if _is_list(annotation):
        return [item.strip() for item in raw.split(",") if item.strip()]
    return raw


def build_configs(values: dict[str, str], *models: Type[BaseModel], source: str = "<config>") -> tuple:
    """
    Валидирует разобранные значения набором pydantic-моделей.
    Ключ, неизвестный всем моделям, считается ошибкой.
    """
    known = set()
    for model in models:
        known.update(model.model_fields)
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"{source}: неизвестные ключи: {', '.join(unknown)}", keys=unknown)

    result = []
    for model in models:
        data = {
            key: _coerce(model.model_fields[key].annotation, raw)
            for key, raw in values.items()
            if key in model.model_fields
        }
        try:
            result.append(model(**data))
        except ValidationError as e:
            raise ConfigError(f"{source}: некорректные значения для {model.__name__}: {e}") from e
    return tuple(result)


def load_config(path: Optional[str | Path], *models: Type[BaseModel]) -> tuple:
    """
    Загружает файл конфигурации и валидирует его моделями.
    Без файла возвращает модели со значениями по умолчанию.
    """
    if path is None:
        return build_configs({}, *models)
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Файл конфигурации не найден: {path}")
    return build_configs(parse_key_value(path.read_text(encoding="utf-8"), str(path)), *models, source=str(path))


def _render_value(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ", ".join(_render_value(item) for item in value)
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "isoformat"):
        return value.isoformat()
    return str(value)


def render_config(configs: Iterable[BaseModel]) -> str:
    """Выводит конфигурацию обратно в формате `ключ = значение`."""
    lines = []
    seen = set()
    for config in configs:
        for key, value in config.model_dump().items():
            if key in seen:
                continue
            seen.add(key)
            lines.append(f"{key} = {_render_value(value)}")
    return "\n".join(lines) + "\n"


def config_echo(configs: Iterable[BaseModel]) -> dict[str, Any]:
    """Плоский словарь конфигурации для встраивания в отчёты."""
    echo: dict[str, Any] = {}
    for config in configs:
        for key, value in config.model_dump(mode="json").items():
            echo.setdefault(key, value)
    return echo
