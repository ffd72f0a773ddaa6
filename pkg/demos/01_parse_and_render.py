"""Load a bundled level, inspect it, and render it as text and PNG."""

from pathlib import Path

from lodegen import analyze, parse_level, render_level
from lodegen import data

level_path = data.levels_dir() / "level_1.txt"
grid = parse_level(level_path.read_text())
print(f"loaded {level_path.name}: {grid.height} rows x {grid.width} cols")

report = analyze(grid)
print(f"spawn at {report.spawn}, gold {report.gold_reachable}/{report.gold_total} reachable")
print(f"playable: {report.playable}")

print("\nthe level itself:")
print(render_level(grid, "text").decode())

out = Path("level_1.png")
out.write_bytes(render_level(grid, "image", scale=8))
print(f"wrote {out} ({grid.width * 8}x{grid.height * 8} px)")
