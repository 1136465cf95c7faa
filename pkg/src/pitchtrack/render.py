"""Frame stills from track rows, written as binary PPM (P6).

No imaging dependency: pixels are a numpy uint8 array serialized with the
three-line PPM header. Box colors come from a fixed palette (team color
once a team is known, otherwise a class color), labels from an embedded
5x7 bitmap font, so output bytes depend only on the rows drawn.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import ClassMap, DEFAULT_CLASS_MAP
from .errors import ConfigError

BACKGROUND = (30, 110, 45)  # pitch green

TEAM_COLORS = {
    0: (220, 40, 40),  # red kits
    1: (40, 80, 220),  # blue kits
}

CLASS_COLORS = {
    "ball": (250, 220, 40),
    "goalkeeper": (250, 140, 30),
    "player": (240, 240, 240),
    "referee": (240, 60, 200),
}

# 5x7 glyphs, one string row per scanline, '#' marks a lit pixel
_GLYPHS = {
    "0": (" ### ", "#   #", "#  ##", "# # #", "##  #", "#   #", " ### "),
    "1": ("  #  ", " ##  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "),
    "2": (" ### ", "#   #", "    #", "   # ", "  #  ", " #   ", "#####"),
    "3": (" ### ", "#   #", "    #", "  ## ", "    #", "#   #", " ### "),
    "4": ("   # ", "  ## ", " # # ", "#  # ", "#####", "   # ", "   # "),
    "5": ("#####", "#    ", "#### ", "    #", "    #", "#   #", " ### "),
    "6": (" ### ", "#    ", "#    ", "#### ", "#   #", "#   #", " ### "),
    "7": ("#####", "    #", "   # ", "  #  ", "  #  ", "  #  ", "  #  "),
    "8": (" ### ", "#   #", "#   #", " ### ", "#   #", "#   #", " ### "),
    "9": (" ### ", "#   #", "#   #", " ####", "    #", "    #", " ### "),
    "T": ("#####", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  "),
    "-": ("     ", "     ", "     ", "#####", "     ", "     ", "     "),
    " ": ("     ", "     ", "     ", "     ", "     ", "     ", "     "),
}

_GLYPH_W, _GLYPH_H = 5, 7


def write_ppm(pixels: np.ndarray, path) -> None:
    """Serialize an (h, w, 3) uint8 array as binary PPM."""
    if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
        raise ConfigError(f"expected (h, w, 3) uint8 pixels, got {pixels.shape} {pixels.dtype}")
    h, w = pixels.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def _draw_rect(pixels, x1, y1, x2, y2, color, thickness=2):
    h, w = pixels.shape[:2]
    x1, y1 = max(int(round(x1)), 0), max(int(round(y1)), 0)
    x2, y2 = min(int(round(x2)), w - 1), min(int(round(y2)), h - 1)
    if x2 <= x1 or y2 <= y1:
        return
    t = thickness
    pixels[y1 : min(y1 + t, y2 + 1), x1 : x2 + 1] = color
    pixels[max(y2 - t + 1, y1) : y2 + 1, x1 : x2 + 1] = color
    pixels[y1 : y2 + 1, x1 : min(x1 + t, x2 + 1)] = color
    pixels[y1 : y2 + 1, max(x2 - t + 1, x1) : x2 + 1] = color


def _draw_text(pixels, text, x, y, color, scale=2):
    h, w = pixels.shape[:2]
    cx = int(round(x))
    cy = int(round(y))
    for ch in text:
        glyph = _GLYPHS.get(ch)
        if glyph is None:
            glyph = _GLYPHS["-"]
        for gy, line in enumerate(glyph):
            for gx, cell in enumerate(line):
                if cell != "#":
                    continue
                py = cy + gy * scale
                px = cx + gx * scale
                pixels[
                    max(py, 0) : max(min(py + scale, h), 0),
                    max(px, 0) : max(min(px + scale, w), 0),
                ] = color
        cx += (_GLYPH_W + 1) * scale


def row_color(row, class_map: ClassMap = DEFAULT_CLASS_MAP) -> tuple[int, int, int]:
    if row.team in TEAM_COLORS:
        return TEAM_COLORS[row.team]
    return CLASS_COLORS[class_map.name_of(row.class_id)]


def render_frame(
    rows,
    width: int,
    height: int,
    class_map: ClassMap = DEFAULT_CLASS_MAP,
) -> np.ndarray:
    """Draw one frame's rows onto a fresh pitch-colored canvas."""
    if width <= 0 or height <= 0:
        raise ConfigError(f"frame size must be positive, got {width}x{height}")
    pixels = np.empty((height, width, 3), dtype=np.uint8)
    pixels[:] = BACKGROUND
    for row in rows:
        color = row_color(row, class_map)
        box = row.box
        _draw_rect(pixels, box.x1, box.y1, box.x2, box.y2, color)
        label = str(row.track_id)
        if row.team is not None:
            label += f"-T{row.team}"
        _draw_text(pixels, label, box.x1, box.y1 - _GLYPH_H * 2 - 4, color)
    return pixels


def render_sequence(
    rows,
    out_dir,
    width: int,
    height: int,
    class_map: ClassMap = DEFAULT_CLASS_MAP,
    max_frames: int | None = None,
) -> list[Path]:
    """One PPM per frame, named frame_<index>.ppm; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_frame: dict[int, list] = {}
    for row in rows:
        by_frame.setdefault(row.frame, []).append(row)

    written = []
    for n, frame in enumerate(sorted(by_frame)):
        if max_frames is not None and n >= max_frames:
            break
        pixels = render_frame(by_frame[frame], width, height, class_map)
        path = out_dir / f"frame_{frame:06d}.ppm"
        write_ppm(pixels, path)
        written.append(path)
    return written
