"""Bundled example levels and input-set manifests."""

from importlib import resources
from pathlib import Path


def levels_dir() -> Path:
    return Path(resources.files(__package__)) / "levels"


def manifest_path(name: str) -> Path:
    """Path of a bundled input-set manifest: 'si', 'mi', or 'div_mi'."""
    path = Path(resources.files(__package__)) / "manifests" / f"{name}.txt"
    if not path.exists():
        raise FileNotFoundError(f"no bundled manifest named {name!r}")
    return path
