"""
Console output helpers

Colour-coded status lines on stderr so stdout stays free for CSV and reports.
"""

import sys
import threading

# Colors for output
class Colors:
    RED = '\033[0;31m'
    GREEN = '\033[0;32m'
    YELLOW = '\033[1;33m'
    BLUE = '\033[0;34m'
    NC = '\033[0m'  # No Color


_state = {'quiet': False}
_lock = threading.Lock()


def set_quiet(quiet: bool) -> None:
    """Suppress info and progress lines (warnings and errors still print)."""
    _state['quiet'] = bool(quiet)


def is_quiet() -> bool:
    return _state['quiet']


def _emit(color: str, message: str, end: str = "\n") -> None:
    with _lock:
        print(f"{color}{message}{Colors.NC}", file=sys.stderr, end=end, flush=True)


def info(message: str) -> None:
    if not _state['quiet']:
        _emit(Colors.BLUE, message)


def success(message: str) -> None:
    if not _state['quiet']:
        _emit(Colors.GREEN, message)


def progress(message: str) -> None:
    """Overwrite the current line with a progress message."""
    if not _state['quiet']:
        _emit(Colors.BLUE, f"\r{message}", end="")


def warning(message: str) -> None:
    _emit(Colors.YELLOW, f"Warning: {message}")


def error(message: str) -> None:
    _emit(Colors.RED, f"Error: {message}")


def banner(title: str, width: int = 80) -> str:
    """Report header in the '=' framed style."""
    return f"{'=' * width}\n{title}\n{'=' * width}"
