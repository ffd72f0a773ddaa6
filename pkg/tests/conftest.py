import numpy as np
import pytest

from lodegen.levels import SYMBOLS, TileGrid, grid_from_rows


def random_grid(rng: np.random.Generator, height: int, width: int, symbols="..bB#-G") -> TileGrid:
    """Random level over a subset of the alphabet (no player by default)."""
    idx = [SYMBOLS.index(s) for s in symbols]
    cells = rng.choice(idx, size=(height, width)).astype(np.uint8)
    return TileGrid(height, width, cells)


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


@pytest.fixture
def tiny_training_level() -> TileGrid:
    """A small, regular level with one spawn, used as a corpus by many tests.

    The spawn and gold sit in otherwise empty surroundings so their windows
    border multi-anchor patterns, which keeps player placement flexible.
    """
    return grid_from_rows(
        [
            "................",
            "................",
            "................",
            "................",
            "................",
            "....M.....G.....",
            "BBBBBBBBBBBBBBBB",
            "BBBBBBBBBBBBBBBB",
        ]
    )
