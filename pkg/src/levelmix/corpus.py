"""Level-corpus handling: parse character-grid level files, build tile
vocabularies, slide 16x16 windows into chunks, and convert chunks to and
from flat one-hot vectors.

Levels are plain text, one character per tile, rows separated by newlines
(the format used by the common level-corpus repositories). A JSON manifest
describes one game: its level files, optional per-level type labels, the
tile solidity map and the traversal axis.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DataError,
    EmptyLevel,
    IdOutOfRange,
    LengthMismatch,
    LevelTooSmall,
    MissingLabels,
    RaggedRows,
)

CHUNK_SIZE = 16
AXES = ("horizontal", "vertical", "both")


@dataclass
class LevelGrid:
    rows: int
    cols: int
    tiles: list  # list of row strings, row 0 = top
    level_id: str = ""
    level_type: Optional[str] = None

    def char_at(self, r, c):
        return self.tiles[r][c]


def parse_level(text, level_id="", level_type=None):
    """Parse raw level file contents into a rectangular LevelGrid."""
    if text is None:
        raise EmptyLevel(f"{level_id or 'level'}: empty input")
    lines = text.split("\n")
    # tolerate a trailing newline / trailing blank lines
    while lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise EmptyLevel(f"{level_id or 'level'}: no rows")
    width = len(lines[0])
    if width == 0:
        raise EmptyLevel(f"{level_id or 'level'}: empty first row")
    for i, line in enumerate(lines):
        if len(line) != width:
            raise RaggedRows(
                f"{level_id or 'level'}: row {i} has {len(line)} chars, expected {width}"
            )
    return LevelGrid(rows=len(lines), cols=width, tiles=lines, level_id=level_id, level_type=level_type)


def pad_level(level, rows_to, side="top", fill="-"):
    """Pad a level with rows of `fill` until it is `rows_to` rows tall."""
    if level.rows >= rows_to:
        return level
    extra = [fill * level.cols] * (rows_to - level.rows)
    tiles = extra + list(level.tiles) if side == "top" else list(level.tiles) + extra
    return LevelGrid(rows_to, level.cols, tiles, level.level_id, level.level_type)


@dataclass(frozen=True)
class TileVocab:
    game: str
    chars: tuple  # ascending character code; index == tile id
    background_char: str = "-"

    @property
    def size(self):
        return len(self.chars)

    @property
    def char_to_id(self):
        return {c: i for i, c in enumerate(self.chars)}

    def id_of(self, char):
        try:
            return self.chars.index(char)
        except ValueError:
            raise IdOutOfRange(f"character {char!r} not in vocab for {self.game}") from None

    def char_of(self, tile_id):
        if not 0 <= tile_id < len(self.chars):
            raise IdOutOfRange(f"tile id {tile_id} out of range [0, {len(self.chars)})")
        return self.chars[tile_id]

    @property
    def background_id(self):
        return self.id_of(self.background_char)


def build_vocab(levels, game="", background_char="-"):
    """Vocabulary over every character in the given levels.

    Ids are assigned by ascending character code so the mapping does not
    depend on file order or platform.
    """
    if not levels:
        raise EmptyLevel("need at least one level to build a vocab")
    chars = set()
    for level in levels:
        for row in level.tiles:
            chars.update(row)
    return TileVocab(game=game, chars=tuple(sorted(chars)), background_char=background_char)


@dataclass
class Chunk:
    tiles: np.ndarray  # (16, 16) integer tile ids
    level_id: str = ""
    offset: tuple = (0, 0)  # (row, col) of the window's top-left corner
    level_type: Optional[str] = None

    def __post_init__(self):
        self.tiles = np.asarray(self.tiles, dtype=np.int64)
        if self.tiles.shape != (CHUNK_SIZE, CHUNK_SIZE):
            raise LengthMismatch(f"chunk must be 16x16, got {self.tiles.shape}")


def chunk_to_lines(chunk, vocab):
    """Render a chunk back to its 16 row strings."""
    return ["".join(vocab.char_of(int(t)) for t in row) for row in chunk.tiles]


def level_to_ids(level, vocab):
    lookup = vocab.char_to_id
    try:
        return np.array([[lookup[c] for c in row] for row in level.tiles], dtype=np.int64)
    except KeyError as exc:
        raise IdOutOfRange(f"{level.level_id}: character {exc.args[0]!r} not in vocab") from None


def extract_chunks(level, vocab, axis="horizontal", window=CHUNK_SIZE, stride=1):
    """All window x window chunks of a level, advancing `stride` tiles at a time.

    The traversal axis orders the sweep (columns first for horizontal levels,
    rows first for vertical ones); every anchor position where the window
    fits is visited exactly once, so identical window contents from
    overlapping positions are retained, never deduplicated. Levels smaller
    than the window in either dimension are rejected.
    """
    if axis not in AXES:
        raise DataError(f"unknown traversal axis {axis!r}")
    if level.rows < window or level.cols < window:
        raise LevelTooSmall(
            f"{level.level_id}: {level.rows}x{level.cols} cannot fit a {window}x{window} window"
        )
    ids = level_to_ids(level, vocab)
    row_anchors = range(0, level.rows - window + 1, stride)
    col_anchors = range(0, level.cols - window + 1, stride)
    if axis == "vertical":
        anchors = [(r, c) for c in col_anchors for r in row_anchors]
    else:
        # horizontal sweeps advance along columns; "both" visits the same
        # full anchor grid, ordered row-major
        anchors = [(r, c) for r in row_anchors for c in col_anchors]
    return [
        Chunk(
            tiles=ids[r : r + window, c : c + window].copy(),
            level_id=level.level_id,
            offset=(r, c),
            level_type=level.level_type,
        )
        for r, c in anchors
    ]


def one_hot_encode(chunk, vocab):
    """Flatten a chunk to a one-hot vector of length 256 * vocab size.

    Layout is cell-major: entry [cell * T + tile_id] with cell = row * 16 + col.
    This ordering is part of the checkpoint format and must not change.
    """
    t = vocab.size
    ids = chunk.tiles.reshape(-1)
    if np.any(ids < 0) or np.any(ids >= t):
        raise IdOutOfRange(f"chunk ids outside [0, {t})")
    flat = np.zeros(ids.size * t, dtype=np.float64)
    flat[np.arange(ids.size) * t + ids] = 1.0
    return flat


def encode_chunks(chunks, vocab):
    """Stack one-hot encodings into an (n, d) matrix."""
    return np.stack([one_hot_encode(c, vocab) for c in chunks])


def decode(values, vocab, level_id="", offset=(0, 0), level_type=None):
    """Per-cell argmax of a flat vector back to a 16x16 integer chunk.

    Ties break toward the lowest tile id.
    """
    values = np.asarray(values, dtype=np.float64)
    t = vocab.size
    d = CHUNK_SIZE * CHUNK_SIZE * t
    if values.shape != (d,):
        raise LengthMismatch(f"expected length {d}, got {values.shape}")
    ids = np.argmax(values.reshape(CHUNK_SIZE * CHUNK_SIZE, t), axis=1)
    return Chunk(
        tiles=ids.reshape(CHUNK_SIZE, CHUNK_SIZE),
        level_id=level_id,
        offset=offset,
        level_type=level_type,
    )


def classify_level_type(level, ground_char="X"):
    """Heuristic level-type label: ground in the top row means underworld,
    no ground in the bottom row means jumpy, anything else overworld."""
    if ground_char in level.tiles[0]:
        return "underworld"
    if ground_char not in level.tiles[-1]:
        return "jumpy"
    return "overworld"


class BalancedSampler:
    """Infinite index sampler weighting each chunk by 1 / (count of its type),
    so the expected draw frequency is equal across level types. Owns a seeded
    RNG; intended for a single consumer."""

    def __init__(self, level_types, rng_seed):
        if any(t is None for t in level_types):
            raise MissingLabels("every chunk needs a level_type label")
        self.level_types = list(level_types)
        counts = {}
        for t in self.level_types:
            counts[t] = counts.get(t, 0) + 1
        weights = np.array([1.0 / counts[t] for t in self.level_types], dtype=np.float64)
        self.probabilities = weights / weights.sum()
        self.rng = np.random.default_rng(rng_seed)

    def draw(self, n):
        return self.rng.choice(len(self.level_types), size=n, p=self.probabilities)

    def __iter__(self):
        while True:
            yield int(self.draw(1)[0])


@dataclass
class DatasetManifest:
    game: str
    level_paths: list
    level_types: list  # parallel to level_paths, entries may be None
    solidity: dict = field(default_factory=dict)  # char -> solid|passable|hazard
    axis: str = "horizontal"
    background: str = "-"
    pad_rows_to: Optional[int] = None
    pad_side: str = "top"
    jump_max_height: int = 4
    jump_max_span: int = 5
    path: Optional[str] = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise DataError(f"manifest axis must be one of {AXES}, got {self.axis!r}")


def load_manifest(path):
    with open(path) as f:
        raw = json.load(f)
    base = os.path.dirname(os.path.abspath(path))
    level_paths, level_types = [], []
    for entry in raw.get("levels", []):
        if isinstance(entry, str):
            rel, ltype = entry, None
        else:
            rel, ltype = entry["path"], entry.get("type")
        rel = os.path.expandvars(rel)
        level_paths.append(rel if os.path.isabs(rel) else os.path.join(base, rel))
        level_types.append(ltype)
    if not level_paths:
        raise DataError(f"{path}: manifest lists no levels")
    pad = raw.get("pad") or {}
    return DatasetManifest(
        game=raw.get("game", ""),
        level_paths=level_paths,
        level_types=level_types,
        solidity=raw.get("solidity", {}),
        axis=raw.get("axis", "horizontal"),
        background=raw.get("background", "-"),
        pad_rows_to=pad.get("rows_to"),
        pad_side=pad.get("side", "top"),
        jump_max_height=(raw.get("jump") or {}).get("max_height", 4),
        jump_max_span=(raw.get("jump") or {}).get("max_span", 5),
        path=os.path.abspath(path),
    )


def load_levels(manifest, heuristic_types=False):
    """Parse every level in the manifest; missing files are a DataError.

    With heuristic_types, unlabeled levels get classify_level_type labels.
    """
    levels = []
    for lv_path, lv_type in zip(manifest.level_paths, manifest.level_types):
        if not os.path.exists(lv_path):
            raise DataError(f"level file not found: {lv_path}")
        with open(lv_path) as f:
            text = f.read()
        level = parse_level(text, level_id=os.path.basename(lv_path), level_type=lv_type)
        if level.level_type is None and heuristic_types:
            # classify before padding: added background rows would hide a ceiling
            level.level_type = classify_level_type(level)
        if manifest.pad_rows_to:
            level = pad_level(level, manifest.pad_rows_to, manifest.pad_side, manifest.background)
        levels.append(level)
    return levels


def load_corpus(manifest, heuristic_types=False):
    """Manifest -> (levels, vocab, chunks)."""
    levels = load_levels(manifest, heuristic_types=heuristic_types)
    vocab = build_vocab(levels, game=manifest.game, background_char=manifest.background)
    chunks = []
    for level in levels:
        chunks.extend(extract_chunks(level, vocab, axis=manifest.axis))
    return levels, vocab, chunks


def write_chunk_dump(path, chunks, vocab):
    """JSON lines, one chunk per line as 16 strings of 16 characters."""
    with open(path, "w") as f:
        for chunk in chunks:
            record = {
                "level_id": chunk.level_id,
                "offset": list(chunk.offset),
                "type": chunk.level_type,
                "rows": chunk_to_lines(chunk, vocab),
            }
            f.write(json.dumps(record) + "\n")


def read_chunk_dump(path, vocab):
    chunks = []
    with open(path) as f:
        for line in f:
            if not line.strip():
                continue
            record = json.loads(line)
            ids = np.array(
                [[vocab.id_of(c) for c in row] for row in record["rows"]], dtype=np.int64
            )
            chunks.append(
                Chunk(
                    tiles=ids,
                    level_id=record.get("level_id", ""),
                    offset=tuple(record.get("offset", (0, 0))),
                    level_type=record.get("type"),
                )
            )
    return chunks
