"""
Common definitions

"""

#
# _|_|_|_|_|  _|_|_|    _|_|_|  _|_|_|
#     _|      _|    _|    _|    _|    _|
#     _|      _|_|_|      _|    _|_|_|
#     _|      _|    _|    _|    _|
#     _|      _|    _|  _|_|_|  _|
#
#

from __future__ import annotations
from typing import Callable
from typing import TypeVar
from concurrent.futures import ThreadPoolExecutor

# very small numbers used for comparing floats
EPSILON = 1.00e-6
TINY = 1.0e-12

# separations at or below this are treated as the same point (m)
SEPARATION_TOL = 1.0e-9

# relative eigenvalue threshold below which a PCA window is degenerate
DEGENERACY_RATIO = 1.0e-6

# names of the terrain map layers, in export order
LAYERS = ("h_max", "h_min", "n_z", "r_step", "r_incl", "r_coll")
GAUSSIAN_LAYERS = ("h_max", "h_min", "n_z", "r_step", "r_incl")
UNIT_LAYERS = ("n_z", "r_step", "r_incl", "r_coll")

# height measures of the collision risk: largest in-cell span, or the
# relief max(h_max) - min(h_min) of the whole window
COLLISION_MODES = ("span", "relief")

T = TypeVar("T")


def chunk_bounds(num: int, threads: int) -> list[tuple[int, int]]:
    """
    Splits `range(num)` into at most `threads` contiguous chunks.

    Example:
        >>> chunk_bounds(10, 3)
        [(0, 4), (4, 7), (7, 10)]
        >>> chunk_bounds(2, 8)
        [(0, 1), (1, 2)]
        >>> chunk_bounds(0, 4)
        []

    """
    if num <= 0:
        return []
    threads = max(1, min(threads, num))
    base, extra = divmod(num, threads)
    bounds = []
    start = 0
    for i in range(threads):
        stop = start + base + (1 if i < extra else 0)
        bounds.append((start, stop))
        start = stop
    return bounds


def chunked_map(
    func: Callable[[int, int], T], num: int, threads: int = 1
) -> list[T]:
    """
    Applies `func(start, stop)` to contiguous chunks of `range(num)`
    and returns the results in chunk order.

    The chunks are independent, so the concatenated result does not
    depend on the thread count as long as `func` computes each index
    on its own.

    Example:
        >>> chunked_map(lambda a, b: list(range(a, b)), 5, threads=2)
        [[0, 1, 2], [3, 4]]

    """
    bounds = chunk_bounds(num, threads)
    if threads <= 1 or len(bounds) <= 1:
        return [func(start, stop) for start, stop in bounds]
    with ThreadPoolExecutor(max_workers=len(bounds)) as executor:
        futures = [
            executor.submit(func, start, stop) for start, stop in bounds
        ]
        return [future.result() for future in futures]
