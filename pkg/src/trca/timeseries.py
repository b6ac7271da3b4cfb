"""Raw and binarized multivariate time series.

A panel stores ``d`` named series as a ``(d, T)`` array. Lags everywhere in the
package count samples, so timestamps are kept only for round-tripping files.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DimensionError, ParseError

#: normalize() maps every series onto [0, 1 - SHRINK] so values stay strictly below 1.
SHRINK = 2.0**-20

TIMESTAMP_HEADERS = ("t", "timestamp")


def _frozen(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeriesPanel:
    names: tuple
    values: np.ndarray
    timestamps: np.ndarray | None = None

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != len(names):
            raise DimensionError(
                f"values must have shape (d, T) with d={len(names)}, got {values.shape}"
            )
        if values.shape[1] < 1:
            raise DimensionError("T must be ≥ 1")
        _check_unique(names)
        if not np.all(np.isfinite(values)):
            raise ParseError("panel values must be finite")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", _frozen(values))
        if self.timestamps is not None:
            ts = np.asarray(self.timestamps, dtype=np.int64)
            if ts.shape != (values.shape[1],):
                raise DimensionError("timestamps must have one entry per column")
            if np.any(np.diff(ts) <= 0):
                raise ParseError("timestamps must be strictly increasing")
            object.__setattr__(self, "timestamps", _frozen(ts))

    @property
    def d(self) -> int:
        return len(self.names)

    @property
    def T(self) -> int:
        return self.values.shape[1]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ConfigError(f"unknown series {name!r}") from None

    def series(self, name: str) -> np.ndarray:
        return self.values[self.index(name)]

    def time_index(self) -> np.ndarray:
        if self.timestamps is not None:
            return self.timestamps
        return np.arange(self.T)

    def __eq__(self, other):
        if not isinstance(other, TimeSeriesPanel):
            return NotImplemented
        return (
            self.names == other.names
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.time_index(), other.time_index())
        )


@dataclass(frozen=True)
class ThresholdSpec:
    """One threshold per series, with a note on how it was chosen.

    ``provenance`` values are ``"fixed"`` or ``"quantile(p)"``.
    """

    values: Mapping[str, float]
    provenance: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        vals = {str(k): float(v) for k, v in self.values.items()}
        for name, r in vals.items():
            if not (0.0 <= r <= 1.0) or math.isnan(r):
                raise ConfigError(f"threshold for {name!r} must lie in [0, 1], got {r}")
        prov = {k: self.provenance.get(k, "fixed") for k in vals}
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "provenance", prov)

    @classmethod
    def fixed(cls, values: Mapping[str, float]) -> "ThresholdSpec":
        return cls(dict(values), {k: "fixed" for k in values})

    def __getitem__(self, name):
        return self.values[name]

    def __contains__(self, name):
        return name in self.values

    def vector(self, names: Sequence[str]) -> np.ndarray:
        missing = [n for n in names if n not in self.values]
        if missing:
            raise ConfigError(f"missing threshold for series: {', '.join(missing)}")
        return np.array([self.values[n] for n in names])

    def to_toml(self) -> str:
        """Flat ``"name" = value`` table; keys sorted for byte-stable output."""
        lines = [f"{_toml_key(k)} = {self.values[k]!r}" for k in sorted(self.values)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_mapping(cls, table: Mapping[str, object]) -> "ThresholdSpec":
        try:
            return cls.fixed({k: float(v) for k, v in table.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"threshold table must map names to numbers: {exc}") from None


def _toml_key(key: str) -> str:
    escaped = key.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


@dataclass(frozen=True, eq=False)
class BinaryPanel:
    names: tuple
    bits: np.ndarray
    thresholds: ThresholdSpec | None = None

    def __post_init__(self):
        names = tuple(self.names)
        bits = np.asarray(self.bits)
        if bits.ndim != 2 or bits.shape[0] != len(names):
            raise DimensionError(f"bits must have shape (d, T) with d={len(names)}")
        if bits.shape[1] < 1:
            raise DimensionError("T must be ≥ 1")
        if not np.all((bits == 0) | (bits == 1)):
            raise ParseError("bits must be 0 or 1")
        _check_unique(names)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "bits", _frozen(bits.astype(np.uint8)))

    @property
    def d(self) -> int:
        return len(self.names)

    @property
    def T(self) -> int:
        return self.bits.shape[1]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ConfigError(f"unknown series {name!r}") from None

    def series(self, name: str) -> np.ndarray:
        return self.bits[self.index(name)]

    def replace_bits(self, bits) -> "BinaryPanel":
        return BinaryPanel(self.names, bits, self.thresholds)

    def __eq__(self, other):
        if not isinstance(other, BinaryPanel):
            return NotImplemented
        return self.names == other.names and np.array_equal(self.bits, other.bits)


def _check_unique(names):
    seen = set()
    for n in names:
        if n in seen:
            raise ParseError(f"duplicate series name {n!r}")
        seen.add(n)


def load_panel(path, format: str = "wide-csv") -> TimeSeriesPanel:
    """Read a wide CSV: optional ``t``/``timestamp`` column, then one column per series."""
    if format != "wide-csv":
        raise ConfigError(f"unsupported panel format {format!r}")
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise ParseError(f"{path}: empty file", row=1)
    header = [h.strip() for h in rows[0]]
    has_time = header[0].lower() in TIMESTAMP_HEADERS
    names = header[1:] if has_time else header
    if not names:
        raise ParseError(f"{path}: no series columns", row=1)
    if any(not n for n in names):
        raise ParseError(f"{path}: empty series name in header", row=1)
    _check_unique(names)
    data = rows[1:]
    if not data:
        raise DimensionError(f"{path}: T must be ≥ 1 (header only)")
    width = len(header)
    values = np.empty((len(names), len(data)))
    stamps = [] if has_time else None
    offset = 1 if has_time else 0
    for r, row in enumerate(data, start=2):
        if len(row) != width:
            raise DimensionError(
                f"{path}: ragged row with {len(row)} cells, expected {width} (row {r})"
            )
        if has_time:
            try:
                stamps.append(int(row[0]))
            except ValueError:
                raise ParseError(f"{path}: non-integer timestamp {row[0]!r}", row=r, column=1) from None
        for c, cell in enumerate(row[offset:]):
            text = cell.strip()
            if not text:
                raise ParseError(f"{path}: missing value", row=r, column=c + offset + 1)
            try:
                values[c, r - 2] = float(text)
            except ValueError:
                raise ParseError(f"{path}: non-numeric cell {text!r}", row=r, column=c + offset + 1) from None
    return TimeSeriesPanel(tuple(names), values, None if stamps is None else np.array(stamps))


def save_panel(panel: TimeSeriesPanel | BinaryPanel, path) -> None:
    path = Path(path)
    if isinstance(panel, BinaryPanel):
        matrix, fmt = panel.bits, str
        stamps = np.arange(panel.T)
    else:
        matrix, fmt = panel.values, repr
        stamps = panel.time_index()
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", *panel.names])
        for j in range(matrix.shape[1]):
            writer.writerow([int(stamps[j]), *(fmt(matrix[i, j].item()) for i in range(matrix.shape[0]))])


def normalize(panel: TimeSeriesPanel, reference: TimeSeriesPanel | None = None) -> TimeSeriesPanel:
    """Min-max scale each series onto ``[0, 1 - SHRINK]``.

    Constant series become all zeros. With ``reference`` the scaling constants
    come from that panel instead, and the result is clipped to the same range;
    this keeps an online window on the scale its offline thresholds were set on.
    """
    source = panel if reference is None else reference
    if reference is not None and reference.names != panel.names:
        raise ConfigError("reference panel must have the same series names")
    top = 1.0 - SHRINK
    lo = source.values.min(axis=1, keepdims=True)
    hi = source.values.max(axis=1, keepdims=True)
    span = hi - lo
    out = np.zeros_like(panel.values)
    for i in range(panel.d):
        if span[i, 0] <= 0:
            continue
        if reference is None and lo[i, 0] == 0.0 and hi[i, 0] == top:
            # already in normalized form; rescaling could move values by an ulp
            out[i] = panel.values[i]
            continue
        out[i] = (panel.values[i] - lo[i, 0]) / span[i, 0] * top
    if reference is not None:
        np.clip(out, 0.0, top, out=out)
    return TimeSeriesPanel(panel.names, out, panel.timestamps)


def quantile_threshold(values: np.ndarray, proportion: float) -> float:
    """The (floor(p*T) + 1)-th smallest value.

    Exactly floor(p*T) values sit strictly below it when values are distinct.
    """
    ordered = np.sort(np.asarray(values, dtype=float))
    k = math.floor(proportion * len(ordered) + 1e-9)
    return float(ordered[min(k, len(ordered) - 1)])


def select_thresholds(panel: TimeSeriesPanel, proportion: float) -> ThresholdSpec:
    if not 0.0 < proportion < 1.0:
        raise ConfigError(f"proportion must be in (0, 1), got {proportion}")
    values, prov = {}, {}
    for name, row in zip(panel.names, panel.values):
        r = quantile_threshold(row, proportion)
        values[name] = min(max(r, 0.0), 1.0)
        prov[name] = f"quantile({proportion:g})"
    return ThresholdSpec(values, prov)


def shift_thresholds(spec: ThresholdSpec, delta: float) -> tuple[ThresholdSpec, list[str]]:
    """Add ``delta`` to every threshold, clamping into [0, 1].

    Returns the new spec and the names whose threshold had to be clamped.
    """
    values, clamped = {}, []
    for name, r in spec.values.items():
        v = r + delta
        if v < 0.0 or v > 1.0:
            clamped.append(name)
            v = min(max(v, 0.0), 1.0)
        values[name] = v
    return ThresholdSpec(values, {k: f"offset({delta:+g})" for k in values}), sorted(clamped)


def binarize(panel: TimeSeriesPanel, thresholds: ThresholdSpec) -> BinaryPanel:
    r = thresholds.vector(panel.names)
    bits = (panel.values >= r[:, None]).astype(np.uint8)
    return BinaryPanel(panel.names, bits, thresholds)
