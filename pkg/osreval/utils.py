import logging
from collections.abc import Callable
from typing import Any

import typer
from rich.console import Console
from rich.logging import RichHandler

from osreval.__version__ import __version__
from osreval.config import cfg

stderr_console = Console(stderr=True)


def option_callback(func: Callable) -> Callable:  # type: ignore
    def wrapper(cls: Any, value: str) -> None:
        if not value:
            return
        func(cls, value)
        raise typer.Exit()

    return wrapper


@option_callback
def get_osreval_version(*_args: Any) -> None:
    """
    Displays the embedded semantic version.
    """
    typer.echo(f"osreval {__version__}")


def configure_logging(verbose: bool = False) -> None:
    """
    Routes every ``osreval`` logger to a rich handler on standard error.

    Library modules only create loggers; handlers are installed here, once,
    by the command line entry point.

    :param verbose: Force INFO level regardless of ``LOG_LEVEL``.
    """
    level = logging.INFO if verbose else cfg.get("LOG_LEVEL").upper()
    logger = logging.getLogger("osreval")
    logger.handlers.clear()
    logger.addHandler(
        RichHandler(
            console=stderr_console,
            show_time=False,
            show_path=False,
            markup=False,
        )
    )
    logger.setLevel(level)
    logger.propagate = False


def notice(message: str) -> None:
    """Prints a short user-facing note on standard error."""
    typer.secho(message, fg=cfg.get("DEFAULT_COLOR"), err=True)
