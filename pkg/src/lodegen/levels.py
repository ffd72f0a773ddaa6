"""Tile alphabet, level grids, and text/image round-tripping.

Levels use the 8-symbol VGLC Lode Runner alphabet, one character per tile,
newline-terminated rows:

    ``.`` empty   ``b`` diggable brick   ``B`` solid block   ``#`` ladder
    ``-`` rope    ``G`` gold             ``E`` enemy         ``M`` player spawn
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import RaggedRowsError, UnknownSymbolError

SYMBOLS = (".", "b", "B", "#", "-", "G", "E", "M")
SYMBOL_INDEX = {s: i for i, s in enumerate(SYMBOLS)}

EMPTY, BRICK, BLOCK, LADDER, ROPE, GOLD, ENEMY, PLAYER = range(8)

# Fixed RGB palette for image rendering, keyed by symbol index.
PALETTE = {
    EMPTY: (12, 12, 12),
    BRICK: (178, 86, 48),
    BLOCK: (120, 120, 120),
    LADDER: (222, 184, 60),
    ROPE: (196, 196, 150),
    GOLD: (255, 215, 0),
    ENEMY: (214, 60, 60),
    PLAYER: (80, 160, 255),
}


@dataclass(frozen=True)
class TileGrid:
    """A rectangular level of tile symbols, row 0 at the top.

    ``cells`` is a read-only (height, width) uint8 array of symbol indices.
    """

    height: int
    width: int
    cells: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.cells.shape != (self.height, self.width):
            raise ValueError("cells shape does not match height/width")
        self.cells.setflags(write=False)

    def symbol_at(self, row: int, col: int) -> str:
        return SYMBOLS[self.cells[row, col]]

    def count(self, symbol: str) -> int:
        return int(np.count_nonzero(self.cells == SYMBOL_INDEX[symbol]))

    def to_text(self) -> str:
        return "".join(
            "".join(SYMBOLS[v] for v in row) + "\n" for row in self.cells
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TileGrid)
            and self.height == other.height
            and self.width == other.width
            and bool(np.array_equal(self.cells, other.cells))
        )

    def __hash__(self):
        return hash((self.height, self.width, self.cells.tobytes()))


def grid_from_rows(rows: list[str]) -> TileGrid:
    """Build a TileGrid from a list of equal-length symbol strings."""
    return parse_level("\n".join(rows) + "\n")


def parse_level(text: str) -> TileGrid:
    """Parse level text into a TileGrid.

    Windows line endings and a trailing newline are normalized away. Raises
    RaggedRowsError for unequal line lengths and UnknownSymbolError (with the
    offending row/col) for characters outside the alphabet.
    """
    normalized = text.replace("\r\n", "\n").replace("\r", "\n")
    lines = normalized.split("\n")
    while lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise RaggedRowsError("empty level text")
    width = len(lines[0])
    if width == 0:
        raise RaggedRowsError("empty first row")
    cells = np.zeros((len(lines), width), dtype=np.uint8)
    for r, line in enumerate(lines):
        if len(line) != width:
            raise RaggedRowsError(
                f"row {r} has length {len(line)}, expected {width}"
            )
        for c, ch in enumerate(line):
            idx = SYMBOL_INDEX.get(ch)
            if idx is None:
                raise UnknownSymbolError(ch, r, c)
            cells[r, c] = idx
    return TileGrid(len(lines), width, cells)


def render_level(grid: TileGrid, format: str = "text", scale: int = 8) -> bytes:
    """Render a grid as UTF-8 text or as a PNG image.

    Text output round-trips through parse_level exactly. Image output maps
    each symbol to its PALETTE color, one tile = scale x scale pixels.
    """
    if format == "text":
        return grid.to_text().encode("utf-8")
    if format == "image":
        from PIL import Image

        rgb = np.zeros((grid.height, grid.width, 3), dtype=np.uint8)
        for idx, color in PALETTE.items():
            rgb[grid.cells == idx] = color
        rgb = np.repeat(np.repeat(rgb, scale, axis=0), scale, axis=1)
        img = Image.fromarray(rgb, mode="RGB")
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return buf.getvalue()
    raise ValueError(f"unknown render format: {format!r}")
