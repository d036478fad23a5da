"""Counter-based random streams for reproducible parallel particle runs.

Draws for particle ``i`` at step ``k`` come from a Philox generator keyed by
``(seed, stream)`` with counter ``(0, 0, k, i // BLOCK_SIZE)``. Every block of
particles therefore gets the same numbers no matter how blocks are spread
over threads.
"""

from concurrent.futures import Executor
from enum import Enum

import numpy as np

BLOCK_SIZE = 8192
_U64 = (1 << 64) - 1


class Stream(Enum):
    """Independent purposes of random draws."""

    INITIAL = 0
    INCREMENTS = 1
    BRIDGE = 2


def block_generator(seed: int, stream: Stream, step: int, block: int) -> np.random.Generator:
    """Generator for one ``(seed, stream, step, block)`` cell."""
    key = (stream.value << 64) | (int(seed) & _U64)
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, step, block]))


def _blocks(n: int) -> list[tuple[int, int]]:
    return [(start, min(start + BLOCK_SIZE, n)) for start in range(0, n, BLOCK_SIZE)]


def draw(
    kind: str,
    seed: int,
    stream: Stream,
    step: int,
    n: int,
    executor: Executor | None = None,
) -> np.ndarray:
    """Draw ``n`` standard normals (``kind="normal"``) or uniforms (``kind="uniform"``).

    Blocks are filled in parallel when an executor is given and assembled in
    index order.
    """
    if kind not in ("normal", "uniform"):
        raise ValueError(f"Unknown draw kind: {kind}")
    out = np.empty(n)

    def fill(bounds: tuple[int, int]) -> None:
        start, stop = bounds
        gen = block_generator(seed, stream, step, start // BLOCK_SIZE)
        if kind == "normal":
            out[start:stop] = gen.standard_normal(stop - start)
        else:
            out[start:stop] = gen.random(stop - start)

    blocks = _blocks(n)
    if executor is None or len(blocks) == 1:
        for bounds in blocks:
            fill(bounds)
    else:
        list(executor.map(fill, blocks))
    return out


def stream_layout() -> dict[str, object]:
    """Description of the key/counter layout for meta records."""
    return {
        "bit_generator": "Philox4x64",
        "key": "(stream << 64) | seed",
        "counter": "[0, 0, step, particle_index // block_size]",
        "block_size": BLOCK_SIZE,
        "streams": {s.name.lower(): s.value for s in Stream},
    }
