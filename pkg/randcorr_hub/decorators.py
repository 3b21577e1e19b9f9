import functools
import logging
import time
from typing import Any, Callable, Dict, Optional, Tuple

from .logging_config import get_logger

logger = get_logger()

_CONTEXT_KEYS = ("seed", "trials", "samples", "shots", "restarts", "max_n", "p_steps")


def log_action(action_name: Optional[str] = None, verbose: bool = False,
               level: int = logging.INFO):

    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            nonlocal action_name
            if action_name is None:
                action_name = func.__name__.upper()

            start_time = time.time()
            error_info = None
            success = False

            state_info = _extract_state_info(args, kwargs)
            run_info = _extract_run_info(kwargs)
            context_info = {}

            try:
                result = func(*args, **kwargs)
                success = True

                if verbose and result is not None:
                    context_info = _extract_context_info(result)

                return result

            except Exception as e:
                error_info = {
                    'type': e.__class__.__name__,
                    'message': str(e)
                }
                raise

            finally:
                execution_time = time.time() - start_time
                timestamp = time.strftime('%Y-%m-%dT%H:%M:%S', time.localtime())

                log_data = {
                    'timestamp': timestamp,
                    'action': action_name,
                    'execution_time_ms': round(execution_time * 1000, 2),
                    'result': 'OK' if success else 'ERROR',
                }
                log_data.update(state_info)
                log_data.update(run_info)

                if verbose and context_info:
                    for key, value in context_info.items():
                        log_data[f'ctx_{key}'] = value

                if error_info:
                    log_data['error_type'] = error_info['type']
                    log_data['error_message'] = error_info['message']

                log_message = _format_log_message(log_data)

                if success:
                    logger.log(level, log_message)
                else:
                    logger.error(log_message)

        return wrapper

    return decorator


def _extract_state_info(args: Tuple, kwargs: Dict) -> Dict[str, Any]:
    """
    Извлекает форму системы из первого аргумента-состояния.

    Args:
        args: Позиционные аргументы
        kwargs: Именованные аргументы

    Returns:
        Словарь с числом частиц и локальными размерностями
    """
    for arg in list(args) + list(kwargs.values()):
        shape = getattr(arg, 'shape', None)
        dims = getattr(shape, 'local_dims', None)
        if dims is not None:
            return {'parties': len(dims), 'dims': 'x'.join(map(str, dims))}
    return {}


def _extract_run_info(kwargs: Dict) -> Dict[str, Any]:
    """
    Извлекает параметры запуска (seed, число испытаний и т.п.).
    """
    return {key: kwargs[key] for key in _CONTEXT_KEYS
            if key in kwargs and kwargs[key] is not None}


def _extract_context_info(result: Any) -> Dict[str, Any]:
    """
    Извлекает краткую сводку из результата функции.
    """
    context_info = {}

    if isinstance(result, (int, float)):
        context_info['value'] = result
    elif isinstance(result, dict):
        for key in ('C', 'probability', 'E_or_W', 'passed'):
            if key in result:
                context_info[key] = result[key]
    elif hasattr(result, 'probability'):
        context_info['probability'] = result.probability
    elif hasattr(result, 'passed'):
        context_info['passed'] = result.passed

    return context_info


def _format_log_message(log_data: Dict[str, Any]) -> str:
    """
    Форматирует данные логирования в строку.

    Args:
        log_data: Данные для логирования

    Returns:
        Отформатированная строка лога
    """
    parts = []

    parts.append(f"{log_data['timestamp']}")
    parts.append(f"{log_data['action']}")

    if 'parties' in log_data:
        parts.append(f"parties={log_data['parties']}")
        parts.append(f"dims='{log_data['dims']}'")

    for key in _CONTEXT_KEYS:
        if key in log_data:
            parts.append(f"{key}={log_data[key]}")

    parts.append(f"result={log_data['result']}")

    for key, value in log_data.items():
        if key.startswith('ctx_'):
            ctx_key = key[4:]
            if isinstance(value, (int, float)):
                parts.append(f"{ctx_key}={value}")
            else:
                parts.append(f"{ctx_key}='{value}'")

    parts.append(f"exec_time={log_data['execution_time_ms']}ms")

    if log_data['result'] == 'ERROR':
        if 'error_type' in log_data:
            parts.append(f"error_type='{log_data['error_type']}'")
        if 'error_message' in log_data:
            error_msg = log_data['error_message']
            if len(error_msg) > 100:
                error_msg = error_msg[:97] + "..."
            parts.append(f"error='{error_msg}'")

    return " ".join(parts)
