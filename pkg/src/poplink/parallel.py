"""Order-preserving process-pool map used by the parallel pipeline stages."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Iterable, Sequence

_STATE: dict[str, Any] = {}


def _install(state: dict[str, Any]) -> None:
    _STATE.clear()
    _STATE.update(state)


def shared(name: str) -> Any:
    """Fetch a value installed for the current worker (or the inline run)."""
    return _STATE[name]


def chunks(items: Sequence, n_chunks: int) -> list[Sequence]:
    n_chunks = max(1, min(n_chunks, len(items)))
    size, extra = divmod(len(items), n_chunks)
    out, start = [], 0
    for i in range(n_chunks):
        stop = start + size + (1 if i < extra else 0)
        out.append(items[start:stop])
        start = stop
    return out


def map_chunks(
    func: Callable[[Sequence], Any],
    items: Sequence,
    *,
    workers: int = 1,
    state: dict[str, Any] | None = None,
    chunks_per_worker: int = 4,
) -> list[Any]:
    """Apply ``func`` to contiguous chunks of ``items``; results come back in chunk order.

    ``state`` is made available to ``func`` through :func:`shared`, once per
    worker process rather than once per chunk.
    """
    state = state or {}
    if workers <= 1 or len(items) < 2:
        previous = dict(_STATE)
        _install(state)
        try:
            return [func(items)] if items else []
        finally:
            _install(previous)
    parts = chunks(items, workers * chunks_per_worker)
    with ProcessPoolExecutor(max_workers=workers, initializer=_install, initargs=(state,)) as pool:
        return list(pool.map(func, parts))


def flatten(parts: Iterable[Iterable]) -> list:
    return [x for part in parts for x in part]
