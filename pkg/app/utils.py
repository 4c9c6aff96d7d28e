import time
import logging
from typing import List

from app.core.config import settings
from app.core.exceptions import UsageError

logging.basicConfig(
    level=getattr(logging, settings.LOG_LEVEL, logging.INFO),
    format="%(asctime)s [%(levelname)s] %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S"
)
logger = logging.getLogger("teleport")


def parse_grid(text: str) -> List[float]:
    """Разбирает сетку вида `lo:hi:n` (концы включены, n точек)."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"Grid must look like lo:hi:n, got '{text}'")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"Grid must look like lo:hi:n, got '{text}'")
    if n < 0:
        raise UsageError(f"Grid size must be non-negative, got {n}")
    if hi < lo:
        raise UsageError(f"Grid upper bound {hi} is below lower bound {lo}")
    if n == 0:
        return []
    if n == 1:
        return [lo]
    step = (hi - lo) / (n - 1)
    # последний узел ровно hi, без накопления ошибки округления
    return [lo + i * step for i in range(n - 1)] + [hi]


def parse_window(text: str) -> tuple:
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"Window must look like lo:hi, got '{text}'")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise UsageError(f"Window must look like lo:hi, got '{text}'")
    if hi <= lo:
        raise UsageError(f"Window upper bound {hi} must exceed lower bound {lo}")
    return lo, hi


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        self.end = None
        return self

    def __exit__(self, *args):
        self.end = time.perf_counter()

    @property
    def elapsed(self) -> float:
        """Elapsed milliseconds since context start.

        Works both inside the context (live duration) and after it ends
        (fixed duration).
        """
        end = self.end if self.end is not None else time.perf_counter()
        return (end - self.start) * 1000
