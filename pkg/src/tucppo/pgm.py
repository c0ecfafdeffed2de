"""Binary PGM (P5) writers for strategy snapshots and payoff heatmaps."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def write_pgm(path, pixels: np.ndarray) -> None:
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise ValueError("PGM image must be 2-D")
    h, w = pixels.shape
    data = np.ascontiguousarray(pixels, dtype=np.uint8).tobytes()
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data)


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    fields = []
    pos = 0
    while len(fields) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        end = pos
        while not raw[end:end + 1].isspace():
            end += 1
        fields.append(raw[pos:end])
        pos = end
    magic, w, h, maxval = fields[0], int(fields[1]), int(fields[2]), int(fields[3])
    if magic != b"P5" or maxval != 255:
        raise ValueError(f"unsupported PGM header in {path}")
    pos += 1
    return np.frombuffer(raw[pos:pos + w * h], dtype=np.uint8).reshape(h, w)


def write_snapshot(out_dir, iteration: int, grid: np.ndarray) -> Path:
    """Cooperators white (255), defectors black (0)."""
    path = Path(out_dir) / f"snap_t{iteration}.pgm"
    write_pgm(path, np.where(np.asarray(grid) == 1, 255, 0))
    return path


def normalize_heatmap(values: np.ndarray) -> tuple[np.ndarray, float, float]:
    values = np.asarray(values, dtype=np.float64)
    lo, hi = float(values.min()), float(values.max())
    if hi > lo:
        pixels = np.rint((values - lo) / (hi - lo) * 255.0)
    else:
        pixels = np.zeros_like(values)
    return pixels.astype(np.uint8), lo, hi


def write_heatmap(out_dir, iteration: int, payoffs: np.ndarray) -> Path:
    """Min-max scaled payoff image plus a ``.txt`` sidecar holding ``min max`` in game units."""
    out_dir = Path(out_dir)
    pixels, lo, hi = normalize_heatmap(payoffs)
    path = out_dir / f"heat_t{iteration}.pgm"
    write_pgm(path, pixels)
    (out_dir / f"heat_t{iteration}.txt").write_text(f"{lo!r} {hi!r}\n")
    return path
