"""Exception types shared across the package."""

from __future__ import annotations


class LodegenError(Exception):
    """Base class for all errors raised by this package."""


class RaggedRowsError(LodegenError):
    """Level text has rows of unequal length."""


class UnknownSymbolError(LodegenError):
    """Level text contains a character outside the tile alphabet."""

    def __init__(self, char: str, row: int, col: int):
        super().__init__(f"unknown tile symbol {char!r} at ({row}, {col})")
        self.char = char
        self.row = row
        self.col = col


class InputTooSmallError(LodegenError):
    """An input grid is smaller than the pattern window."""


class EmptyAfterExclusionError(LodegenError):
    """Rare-pattern exclusion removed every pattern."""


class NoPlayerPatternsError(LodegenError):
    """The pattern set contains no pattern with a player tile."""


class GridTooSmallError(LodegenError):
    """A grid is too small for the requested window size."""


class TooFewLevelsError(LodegenError):
    """Pairwise diversity needs at least two levels."""


class ContradictionError(LodegenError):
    """A cell's domain became empty during propagation.

    Terminal for the episode; there is no backtracking.
    """

    def __init__(self, cell: tuple[int, int], triggering_action: int | None = None):
        detail = f"domain emptied at lattice cell {cell}"
        if triggering_action is not None:
            detail += f" (after applying pattern {triggering_action})"
        super().__init__(detail)
        self.cell = cell
        self.triggering_action = triggering_action


class InvalidPatternError(LodegenError):
    """Pattern is not in the target cell's domain."""


class AllCollapsedError(LodegenError):
    """No uncollapsed cell remains."""


class NotFullyCollapsedError(LodegenError):
    """Decoding requires a fully collapsed wave."""


class PlacementFailedError(LodegenError):
    """Player placement failed for every retry."""


class RetryBudgetExceededError(LodegenError):
    """Episode initialization kept contradicting past the retry budget."""


class MultipleSpawnsError(LodegenError):
    """A grid contains more than one player spawn."""


class MaskedActionError(LodegenError):
    """A policy chose an action whose mask bit is unset."""


class EpisodeFinishedError(LodegenError):
    """step() was called after the episode terminated."""


class ConfigError(LodegenError):
    """Invalid or unknown configuration entry."""


class DivergedParamsError(LodegenError):
    """Training produced non-finite parameters."""
