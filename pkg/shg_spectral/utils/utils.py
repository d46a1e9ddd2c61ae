from __future__ import annotations # Enable type annotation to be stored as string
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from pathlib import Path
from typing import Callable, Iterable, Sequence, TypeVar
import logging

from numpy.typing import ArrayLike, NDArray
import numpy as np


T = TypeVar('T')
R = TypeVar('R')

# Setup logging
logger = logging.getLogger(__name__)


def as_complex_array(values: ArrayLike) -> NDArray[np.complex128]:
    """Return a 1D complex array view of a scalar or sequence of spectral parameters."""
    return np.atleast_1d(np.asarray(values, dtype=complex)).ravel()

def chunked(items: Sequence[T] | NDArray, chunk_size: int) -> list[Sequence[T] | NDArray]:
    """Split a sequence into consecutive chunks of at most chunk_size elements. The boundaries only depend on chunk_size."""
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    return [items[i:i + chunk_size] for i in range(0, len(items), chunk_size)]

def ordered_map(func: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """
    Apply func to every item, in parallel threads if threads > 1. Results are returned in input order.

    Args:
        func (Callable): Pure function applied to each item.
        items (Iterable): Work items, e.g. chunks of spectral parameters.
        threads (int): Number of worker threads, 1 means sequential execution in the calling thread.

    Returns:
        list: func(item) for every item, in the order of items.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(func, items))

def create_date_savedir(parent_path: Path, folder_name: str | None = None, dated: bool = True)-> Path:
    """
    Create a folder in the parent_path. If dated, the actual date is prepended to the folder_name.
    Deterministic runs use dated=False so that the output path does not depend on the clock.
    """
    parent_path.mkdir(parents=True, exist_ok=True)
    if not dated:
        savedir = parent_path.joinpath(folder_name) if folder_name else parent_path
        savedir.mkdir(exist_ok=True)
        return savedir

    # Create folder with actual date
    now = datetime.now()
    folder_name = f'_{folder_name}' if folder_name else ''
    new_folder_name = f'{now.year}{now.month:02d}{now.day:02d}{folder_name}'
    savedir = parent_path.joinpath(new_folder_name)
    savedir.mkdir(exist_ok=True)
    return savedir

def relative_error(value: ArrayLike, reference: ArrayLike, floor: float = 1e-300) -> NDArray[np.float64]:
    """Elementwise |value - reference| / max(|reference|, floor)."""
    value = np.asarray(value)
    reference = np.asarray(reference)
    return np.abs(value - reference) / np.maximum(np.abs(reference), floor)
