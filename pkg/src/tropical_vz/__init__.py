import os
from typing import Any

from pinjected import IProxy, design, injected, instance
from pinjected.test import test_tree

DEFAULT_THREADS = 4


def read_env(key: str, default: Any = None, log=None) -> Any:
    from loguru import logger

    log = log or logger
    if key in os.environ:
        log.info(f"Using env var {key} from env: {os.environ[key]}")
        return os.environ[key]
    else:
        log.info(f"Env var {key} not found in env. using default:{default}")
        return default


def threads_from_env(log=None) -> int:
    """Parallelism cap from TVZ_THREADS, at least one."""
    from tropical_vz.errors import DomainError

    raw = read_env("TVZ_THREADS", DEFAULT_THREADS, log)
    try:
        return max(1, int(raw))
    except ValueError as e:
        raise DomainError(f"TVZ_THREADS must be an integer, got {raw!r}") from e


@instance
def tvz_logger():
    from loguru import logger

    return logger


@injected
def tvz_get_env(tvz_logger, /, key: str, default: Any = None) -> Any:
    return read_env(key, default, tvz_logger)


@instance
def tvz_threads(tvz_logger) -> int:
    return threads_from_env(tvz_logger)


@injected
async def a_tvz_fan(tvz_threads: int, tvz_logger, /, cover, coarsen: bool = False):
    from tropical_vz.fan_engine import a_align
    from tropical_vz.fan_engine import coarsen as coarsen_fan

    tvz_logger.info(f"building the fan of {cover.name} with {tvz_threads} threads")
    fan = await a_align(cover, threads=tvz_threads)
    return coarsen_fan(fan) if coarsen else fan


@injected
def tvz_germ_report(tvz_truncation_order: int, /, kind: str, m: int = 1):
    from tropical_vz.local_algebra import germ_report, table_germ

    return germ_report(table_germ(kind, m, tvz_truncation_order))


@instance
def __load_default_design():
    from tropical_vz.local_algebra import DEFAULT_TRUNCATION

    default_design = design(
        tvz_truncation_order=DEFAULT_TRUNCATION,
        tvz_threads=tvz_threads,
    )

    return default_design


load_env_design = __load_default_design

run_tests: IProxy = test_tree()

__all__ = ["load_env_design", "read_env", "threads_from_env"]

__meta_design__ = design(
    overrides=load_env_design,
)
