"""
Singleton для записи результатов (JSON, CSV) и чтения файлов состояний
"""

import csv
import json
import os
import threading
from typing import Any, Iterable, Optional, Sequence, Tuple

import numpy as np

from randcorr_hub.logging_config import get_logger

logger = get_logger(__name__)


def format_number(value: Any) -> Any:
    """Числа с плавающей точкой записываются с 17 значащими цифрами"""
    if isinstance(value, float):
        return f"{value:.17g}"
    return value


def to_builtin(value: Any) -> Any:
    """Скаляры и массивы numpy для json.dump"""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} не сериализуется в JSON")


def _file_stamp(filepath: str) -> Tuple[int, int]:
    """Время изменения и размер: кеш сбрасывается при внешней перезаписи"""
    stat = os.stat(filepath)
    return stat.st_mtime_ns, stat.st_size


class ResultStorage:

    _instance = None
    _initialized = False
    _lock = threading.Lock()

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(ResultStorage, cls).__new__(cls)
        return cls._instance

    def __init__(self):
        if not self._initialized:
            self._cache = {}
            self._initialized = True

    def load_json(self, filepath: str, default: Any = None) -> Any:
        """
        Загружает данные из JSON файла

        Raises:
            json.JSONDecodeError, OSError: если файл повреждён или недоступен
        """
        if not os.path.exists(filepath):
            self._cache.pop(filepath, None)
            if default is None:
                raise FileNotFoundError(filepath)
            return default

        stamp = _file_stamp(filepath)
        cached = self._cache.get(filepath)
        if cached is not None and cached[0] == stamp:
            return cached[1]

        with open(filepath, 'r', encoding='utf-8') as f:
            data = json.load(f)
        self._cache[filepath] = (stamp, data)
        return data

    def save_json(self, filepath: str, data: Any) -> bool:
        """
        Атомарно сохраняет данные в JSON файл
        """
        with self._lock:
            try:
                directory = os.path.dirname(filepath)
                if directory:
                    os.makedirs(directory, exist_ok=True)

                temp_filepath = filepath + '.tmp'
                with open(temp_filepath, 'w', encoding='utf-8') as f:
                    json.dump(data, f, ensure_ascii=False, indent=2,
                              default=to_builtin)

                os.replace(temp_filepath, filepath)

                self._cache.pop(filepath, None)
                logger.debug(f"Сохранён файл {filepath}")
                return True

            except (IOError, OSError) as e:
                logger.error(f"Ошибка сохранения {filepath}: {e}")
                return False

    def save_csv(self, filepath: str, header: Sequence[str],
                 rows: Iterable[Sequence[Any]]) -> bool:
        """
        Атомарно сохраняет таблицу в CSV с полной двойной точностью
        """
        with self._lock:
            try:
                directory = os.path.dirname(filepath)
                if directory:
                    os.makedirs(directory, exist_ok=True)

                temp_filepath = filepath + '.tmp'
                with open(temp_filepath, 'w', encoding='utf-8', newline='') as f:
                    writer = csv.writer(f)
                    writer.writerow(header)
                    for row in rows:
                        writer.writerow([format_number(v) for v in row])

                os.replace(temp_filepath, filepath)
                logger.debug(f"Сохранена таблица {filepath}")
                return True

            except (IOError, OSError) as e:
                logger.error(f"Ошибка сохранения {filepath}: {e}")
                return False

    def clear_cache(self, filepath: Optional[str] = None) -> None:
        """
        Очищает кеш
        """
        if filepath:
            self._cache.pop(filepath, None)
        else:
            self._cache.clear()

    def file_exists(self, filepath: str) -> bool:
        """Проверяет существование файла"""
        return os.path.exists(filepath)


storage = ResultStorage()
