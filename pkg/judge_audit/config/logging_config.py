import logging

from rich.console import Console
from rich.logging import RichHandler

from judge_audit.config.settings import LOG_LEVEL


def configure_logging(level: str | int = LOG_LEVEL) -> None:
    """Route all library loggers through a single stderr RichHandler."""
    handler = RichHandler(
        console=Console(stderr=True),
        show_path=False,
        rich_tracebacks=True,
    )
    logging.basicConfig(
        level=level,
        format="%(name)s: %(message)s",
        datefmt="[%X]",
        handlers=[handler],
        force=True,
    )
