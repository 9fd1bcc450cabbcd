"""Plain-text input/output formats.

Transect CSV::

    group,road,age,y1,y2,y3,y4,y5,y6
    1,11,26,1,1,0,0,1,0

Temporal data: one spread rate (m/yr) per line.

Config: flat ``key = value`` lines, ``#`` starts a comment.

Road network CSV: ``id,age,x0,y0,x1,y1,...`` one segment per line, optional
header line starting with ``id``.

Habitat raster::

    origin <x0> <y0>
    cell_size <metres>
    dims <rows> <cols>
    0011...          # one line per row, row 0 first (smallest y)

Floats are written with ``repr`` so every writer/parser pair round-trips
exactly.
"""
from __future__ import annotations

import csv
import dataclasses
import logging
import math
from pathlib import Path

import numpy as np

from .geometry import pattern_bits, pattern_from_bits
from .model import Dataset, RoadRecord, TemporalData
from .projection import HabitatRaster, RoadNetwork, RoadSegment
from .samplers import ChainConfig

logger = logging.getLogger(__name__)

__all__ = [
    "FormatError",
    "TRANSECT_HEADER",
    "RUN_KEYS",
    "parse_transect_csv",
    "write_transect_csv",
    "parse_temporal",
    "write_temporal",
    "load_dataset",
    "parse_config",
    "format_config",
    "parse_network_csv",
    "write_network_csv",
    "parse_raster",
    "write_raster",
]

TRANSECT_HEADER = ["group", "road", "age", "y1", "y2", "y3", "y4", "y5", "y6"]


class FormatError(ValueError):
    """Malformed input file; the message names the file and line."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        where = f"{path}:{line}" if line else str(path)
        super().__init__(f"{where}: {message}")


def _int(text, what):
    try:
        v = float(text)
    except ValueError:
        raise ValueError(f"{what} {text!r} is not a number") from None
    if not v.is_integer():
        raise ValueError(f"{what} {text!r} is not an integer")
    return int(v)


def _float(text, what):
    try:
        v = float(text)
    except ValueError:
        raise ValueError(f"{what} {text!r} is not a number") from None
    if not math.isfinite(v):
        raise ValueError(f"{what} {text!r} is not finite")
    return v


# -- transects --------------------------------------------------------------

def parse_transect_csv(path) -> list[RoadRecord]:
    """Read survey records; raises :class:`FormatError` with a line number.

    Blank lines and lines starting with ``#`` are skipped.
    """
    path = Path(path)
    records = []
    seen = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = None
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row) or row[0].lstrip().startswith("#"):
                continue
            cells = [c.strip() for c in row]
            if header is None:
                if [c.lower() for c in cells] != TRANSECT_HEADER:
                    raise FormatError(path, line, f"expected header {','.join(TRANSECT_HEADER)}")
                header = cells
                continue
            if len(cells) != len(TRANSECT_HEADER):
                raise FormatError(path, line, f"expected {len(TRANSECT_HEADER)} columns, got {len(cells)}")
            try:
                group = _int(cells[0], "group")
                road = _int(cells[1], "road")
                age = _float(cells[2], "age")
                bits = []
                for i, c in enumerate(cells[3:], start=1):
                    if c not in ("0", "1"):
                        raise ValueError(f"y{i} must be 0 or 1, got {c!r}")
                    bits.append(int(c))
                rec = RoadRecord(group, road, age, pattern_from_bits(bits)).validate()
            except ValueError as exc:
                raise FormatError(path, line, str(exc)) from None
            key = (group, road)
            if key in seen:
                raise FormatError(path, line, f"duplicate road (group {group}, road {road}); first seen on line {seen[key]}")
            seen[key] = line
            records.append(rec)
    if not records:
        raise FormatError(path, 0, "no records")
    return records


def write_transect_csv(path, records) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRANSECT_HEADER)
        for r in records:
            w.writerow([r.group, r.road, repr(float(r.age)), *pattern_bits(r.observed)])


# -- temporal data ----------------------------------------------------------

def parse_temporal(path) -> TemporalData:
    path = Path(path)
    values = []
    with path.open() as fh:
        for line, text in enumerate(fh, start=1):
            text = text.strip()
            if not text or text.startswith("#"):
                continue
            try:
                values.append(_float(text, "spread rate"))
            except ValueError as exc:
                raise FormatError(path, line, str(exc)) from None
    if len(values) < 2:
        raise FormatError(path, 0, f"need at least two temporal values, got {len(values)}")
    if any(v < 0 for v in values):
        logger.warning("%s: negative spread rates present (retreat); kept as data", path)
    return TemporalData(np.array(values))


def write_temporal(path, temporal: TemporalData) -> None:
    with Path(path).open("w") as fh:
        for v in temporal.z:
            fh.write(f"{float(v)!r}\n")


def load_dataset(transects, temporal) -> Dataset:
    return Dataset(tuple(parse_transect_csv(transects)), parse_temporal(temporal))


# -- config -----------------------------------------------------------------

def _bool(text, what):
    t = text.lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ValueError(f"{what} {text!r} is not a boolean")


def _floats(text, what):
    return tuple(_float(x, what) for x in text.replace(",", " ").split())


def _optional_float(text, what):
    return None if text.lower() == "none" else _float(text, what)


def _str(text, what):
    return text


_CHAIN_TYPES = {
    "iterations": _int,
    "burn_in": _int,
    "seed": _int,
    "epsilon": _float,
    "kernel": _str,
    "nu_update_mode": _str,
    "position_move_scale": _floats,
    "record_latents": _bool,
    "fixed_nu": _optional_float,
    "nu_retry_cap": _int,
    "init_max_attempts": _int,
    "batch_size": _int,
}

# subcommand keys: name -> (parser, default, help)
RUN_KEYS = {
    "lambdas": (_floats, (4.03e-5,), "true group rates for simulate/study"),
    "nu": (_float, 13.93, "true spread rate (simulate/study) or fixed spread rate (oracle)"),
    "sigma2": (_float, 25.0, "true temporal-data variance"),
    "n_z": (_int, 26, "number of temporal observations to simulate"),
    "roads_per_group": (_int, 10, "roads simulated per group"),
    "age_min": (_int, 6, "smallest simulated road age"),
    "age_max": (_int, 56, "largest simulated road age"),
    "replicates": (_int, 50, "coverage-study replicates"),
    "level": (_float, 0.95, "credible level"),
    "grid_min": (_float, 1e-6, "smallest rate on the oracle grid"),
    "grid_max": (_float, 2e-4, "largest rate on the oracle grid"),
    "grid_points": (_int, 200, "oracle grid size"),
    "lam": (_float, 4.03e-5, "introduction rate for project and the oracle likelihood table"),
    "horizon_years": (_float, 0.0, "years projected beyond the road ages"),
    "spacing": (_float, 10.0, "seed point spacing along roads (m)"),
}


def parse_config(path):
    """Read a ``key = value`` file into ``(ChainConfig, descriptors)``.

    Unknown keys, duplicate keys and malformed values are errors.  Keys not
    given keep their defaults; ``descriptors`` holds every run key with its
    resolved value.
    """
    path = Path(path)
    chain = {}
    run = {k: v[1] for k, v in RUN_KEYS.items()}
    seen = {}
    with path.open() as fh:
        for line, text in enumerate(fh, start=1):
            text = text.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise FormatError(path, line, f"expected 'key = value', got {text!r}")
            key, value = (x.strip() for x in text.split("=", 1))
            if key in seen:
                raise FormatError(path, line, f"key {key!r} already set on line {seen[key]}")
            seen[key] = line
            try:
                if key in _CHAIN_TYPES:
                    chain[key] = _CHAIN_TYPES[key](value, key)
                elif key in RUN_KEYS:
                    run[key] = RUN_KEYS[key][0](value, key)
                else:
                    raise ValueError(f"unknown key {key!r}")
            except ValueError as exc:
                raise FormatError(path, line, str(exc)) from None
    try:
        config = ChainConfig(**chain)
    except (ValueError, TypeError) as exc:
        raise FormatError(path, 0, str(exc)) from None
    return config, run


def _fmt(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def format_config(config: ChainConfig, run: dict | None = None) -> str:
    """Resolved config in the same ``key = value`` format, keys in fixed order."""
    lines = [f"{f.name} = {_fmt(getattr(config, f.name))}" for f in dataclasses.fields(config)]
    for k in RUN_KEYS:
        if run and k in run:
            lines.append(f"{k} = {_fmt(run[k])}")
    return "\n".join(lines) + "\n"


# -- road network -----------------------------------------------------------

def parse_network_csv(path) -> RoadNetwork:
    path = Path(path)
    segments = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        for row in reader:
            line = reader.line_num
            cells = [c.strip() for c in row]
            if not cells or all(not c for c in cells) or cells[0].startswith("#"):
                continue
            if cells[0].lower() == "id":
                continue
            try:
                if len(cells) < 6 or (len(cells) - 2) % 2:
                    raise ValueError("need id, age and at least two x,y vertices")
                coords = [_float(c, "coordinate") for c in cells[2:]]
                poly = tuple(zip(coords[0::2], coords[1::2]))
                segments.append(RoadSegment(cells[0], _float(cells[1], "age"), poly))
            except ValueError as exc:
                raise FormatError(path, line, str(exc)) from None
    if not segments:
        raise FormatError(path, 0, "no road segments")
    try:
        return RoadNetwork(tuple(segments))
    except ValueError as exc:
        raise FormatError(path, 0, str(exc)) from None


def write_network_csv(path, network: RoadNetwork) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "age", "x0", "y0", "..."])
        for s in network.segments:
            w.writerow([s.id, repr(float(s.age)), *(repr(float(c)) for xy in s.polyline for c in xy)])


# -- raster -----------------------------------------------------------------

def parse_raster(path) -> HabitatRaster:
    path = Path(path)
    with path.open() as fh:
        lines = [(i, t.strip()) for i, t in enumerate(fh, start=1)]
    lines = [(i, t) for i, t in lines if t and not t.startswith("#")]
    head = {}
    for i, t in lines[:3]:
        parts = t.split()
        head[parts[0].lower()] = (i, parts[1:])
    try:
        for key, n in (("origin", 2), ("cell_size", 1), ("dims", 2)):
            if key not in head or len(head[key][1]) != n:
                raise FormatError(path, 0, f"header needs '{key}' with {n} value(s)")
        ox, oy = (_float(x, "origin") for x in head["origin"][1])
        cell = _float(head["cell_size"][1][0], "cell size")
        ny, nx = (_int(x, "dims") for x in head["dims"][1])
    except ValueError as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(path, 0, str(exc)) from None
    body = lines[3:]
    if len(body) != ny:
        raise FormatError(path, 0, f"dims say {ny} rows, found {len(body)}")
    grid = np.zeros((ny, nx), dtype=bool)
    for r, (i, t) in enumerate(body):
        digits = t.replace(" ", "")
        if len(digits) != nx or set(digits) - {"0", "1"}:
            raise FormatError(path, i, f"row must be {nx} characters of 0/1")
        grid[r] = np.frombuffer(digits.encode(), dtype=np.uint8) == ord("1")
    try:
        return HabitatRaster((ox, oy), cell, grid)
    except ValueError as exc:
        raise FormatError(path, 0, str(exc)) from None


def write_raster(path, origin, cell_size: float, grid) -> None:
    grid = np.asarray(grid, dtype=bool)
    with Path(path).open("w") as fh:
        fh.write(f"origin {float(origin[0])!r} {float(origin[1])!r}\n")
        fh.write(f"cell_size {float(cell_size)!r}\n")
        fh.write(f"dims {grid.shape[0]} {grid.shape[1]}\n")
        for row in grid:
            fh.write("".join("1" if v else "0" for v in row) + "\n")
