"""Binary PBM (P4) reading and writing.

Stimuli are stored as 1-bit-per-pixel portable bitmaps so regeneration
with the same seed is byte-identical and nothing lossy ever touches the
dot patterns.  White (foreground) pixels are stored as PBM "black" bits
(1), matching the usual convention of these datasets being sparse.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def write_pbm(path: str | Path, image: np.ndarray) -> None:
    """Write a boolean (height, width) array as a binary P4 bitmap."""
    image = np.asarray(image, dtype=bool)
    if image.ndim != 2:
        raise ValueError("image must be 2-D")
    h, w = image.shape
    header = f"P4\n{w} {h}\n".encode("ascii")
    packed = np.packbits(image, axis=1)
    with open(path, "wb") as f:
        f.write(header)
        f.write(packed.tobytes())


def read_pbm(path: str | Path) -> np.ndarray:
    """Read a binary P4 bitmap into a boolean (height, width) array."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P4"):
        raise ValueError(f"{path}: not a binary PBM (P4) file")
    # Header: magic, then whitespace-separated width and height; '#'
    # starts a comment running to end of line.
    pos = 2
    fields: list[int] = []
    while len(fields) < 2:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace byte after the header
    w, h = fields
    row_bytes = (w + 7) // 8
    raster = np.frombuffer(data, dtype=np.uint8, count=h * row_bytes, offset=pos)
    bits = np.unpackbits(raster.reshape(h, row_bytes), axis=1)[:, :w]
    return bits.astype(bool)
