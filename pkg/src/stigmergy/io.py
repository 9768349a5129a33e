"""File formats: kernel/agent/trace CSV, ASCII PBM targets and PGM frames."""

from __future__ import annotations

import csv
from importlib import resources
from pathlib import Path

import numpy as np

from stigmergy.errors import ConfigError

GRID = (28, 28)
BUNDLED_TARGETS = {"4": "four.pbm", "8": "eight.pbm"}


def write_csv(path, header, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_kernel_csv(path, kernel):
    return write_csv(path, ("distance", "value"), zip(kernel.distances, kernel.values))


def read_kernel_csv(path):
    from stigmergy.kernel import KernelTable

    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    distances, values = data[:, 0], data[:, 1]
    # tables end with a zero row at the support radius
    return KernelTable(distances=distances, values=values, d_th=float(distances[-1]))


def _tokens(text):
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        yield from line.split()


def parse_pbm(text, shape=GRID):
    """Parse a plain (``P1``) PBM; 1 marks an excitatory pixel."""
    toks = list(_tokens(text))
    if not toks or toks[0] != "P1":
        raise ConfigError("not an ASCII PBM (missing P1 magic)")
    try:
        width, height = int(toks[1]), int(toks[2])
    except (IndexError, ValueError) as exc:
        raise ConfigError("malformed PBM header") from exc
    if (height, width) != tuple(shape):
        raise ConfigError(f"PBM is {width}x{height}, expected {shape[1]}x{shape[0]}")
    # P1 allows the bits to run together without separators
    bits = "".join(toks[3:])
    if len(bits) != width * height or set(bits) - {"0", "1"}:
        raise ConfigError("PBM body must hold exactly width*height bits")
    return np.array([int(b) for b in bits], dtype=np.int8).reshape(height, width)


def read_pbm(path, shape=GRID):
    return parse_pbm(Path(path).read_text(), shape)


def load_target(spec, shape=GRID):
    """Bundled glyph name ("4" or "8") or a path to a PBM file."""
    name = str(spec)
    if name in BUNDLED_TARGETS:
        text = resources.files("stigmergy.assets").joinpath(BUNDLED_TARGETS[name]).read_text()
        return parse_pbm(text, shape)
    return read_pbm(name, shape)


def format_pbm(grid):
    grid = np.asarray(grid)
    h, w = grid.shape
    lines = ["P1", f"{w} {h}"]
    lines += [" ".join(str(int(v)) for v in row) for row in grid]
    return "\n".join(lines) + "\n"


def write_pgm(path, grid):
    """Binary state grid as plain PGM: excitatory 255, inhibitory 0."""
    grid = np.asarray(grid)
    h, w = grid.shape
    lines = ["P2", f"{w} {h}", "255"]
    lines += [" ".join("255" if v else "0" for v in row) for row in grid]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_pgm(path):
    toks = list(_tokens(Path(path).read_text()))
    if toks[0] != "P2":
        raise ConfigError("not an ASCII PGM")
    w, h, maxval = int(toks[1]), int(toks[2]), int(toks[3])
    vals = np.array([int(t) for t in toks[4:4 + w * h]])
    return (vals.reshape(h, w) * 2 > maxval).astype(np.int8)
