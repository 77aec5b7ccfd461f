"""Configuration ingestion, field serialization, and result documents.

Configs are one-experiment JSON files.  Complex field samples are serialized
as interleaved real/imaginary pairs in delimited text with an explicit grid
header; the round trip is bit-exact (%.17g).  Result documents are
deterministic JSON (sorted keys, shortest-round-trip floats), so identical
configs and seeds produce byte-identical payloads.
"""

from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from .channel import ChannelParams
from .errors import GuardViolation
from .grid import GridSpec, SpectralField
from .qpsk import ConstellationSpec, SymbolPerturbation

METHODS = ("pathint", "series0", "series1", "smallq", "forward-mc", "demo")

_GRID_KEYS = ("m", "n", "delta", "dz", "omega_min", "omega_max", "length")


def interleave(values: np.ndarray) -> list[float]:
    out = np.empty(2 * len(values))
    out[0::2] = values.real
    out[1::2] = values.imag
    return out.tolist()


def deinterleave(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.ndim != 1 or arr.size % 2:
        raise GuardViolation("field-samples",
                             "complex samples must be interleaved re/im pairs")
    return arr[0::2] + 1j * arr[1::2]


def save_fields(path, grid: GridSpec, x: SpectralField,
                y: SpectralField | None = None) -> None:
    """Write fields as delimited text with a self-describing grid header."""
    cols = "re_x\tim_x" + ("\tre_y\tim_y" if y is not None else "")
    header = " ".join(f"{k}={getattr(grid, k)!r}" for k in _GRID_KEYS)
    lines = ["# nlsepdf-fields v1", f"# {header}", f"# {cols}"]
    for j in range(grid.m):
        row = [x.values[j].real, x.values[j].imag]
        if y is not None:
            row += [y.values[j].real, y.values[j].imag]
        lines.append("\t".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_fields(path) -> tuple[GridSpec, SpectralField, SpectralField | None]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != "# nlsepdf-fields v1":
        raise GuardViolation("field-file", f"{path} is not a field file")
    meta = {}
    for tok in lines[1].lstrip("# ").split():
        key, _, val = tok.partition("=")
        meta[key] = val
    try:
        grid = GridSpec(m=int(meta["m"]), n=int(meta["n"]),
                        delta=float(meta["delta"]), dz=float(meta["dz"]),
                        omega_min=float(meta["omega_min"]),
                        omega_max=float(meta["omega_max"]),
                        length=float(meta["length"]))
    except (KeyError, ValueError) as exc:
        raise GuardViolation("field-file", f"bad grid header in {path}: {exc}")
    data = np.loadtxt([ln for ln in lines if not ln.startswith("#")], ndmin=2)
    if data.shape[0] != grid.m or data.shape[1] not in (2, 4):
        raise GuardViolation("field-file",
                             f"expected {grid.m} rows of 2 or 4 columns in {path}")
    x = SpectralField(data[:, 0] + 1j * data[:, 1], grid)
    y = None
    if data.shape[1] == 4:
        y = SpectralField(data[:, 2] + 1j * data[:, 3], grid)
    return grid, x, y


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """A validated experiment: method, lattice, channel, input and options."""

    method: str
    seed: int
    grid: GridSpec
    params: ChannelParams
    x: SpectralField | None
    y: SpectralField | None
    constellation: ConstellationSpec | None
    symbols: np.ndarray | None
    perturbation: SymbolPerturbation | None
    options: dict
    raw: dict


def _require(doc: dict, key: str, kind, guard: str):
    if key not in doc:
        raise GuardViolation(guard, f"missing required key {key!r}")
    val = doc[key]
    if kind is float and isinstance(val, int):
        val = float(val)
    if not isinstance(val, kind):
        raise GuardViolation(guard, f"key {key!r} must be {kind}, got {type(val).__name__}")
    return val


def parse_config(doc: dict, base_dir: Path | str = ".") -> RunConfig:
    """Validate a config document; violations name the violated guard."""
    method = _require(doc, "method", str, "method")
    if method not in METHODS:
        raise GuardViolation("method", f"unknown method {method!r}; "
                             f"expected one of {METHODS}")
    seed = _require(doc, "seed", int, "seed")
    if seed < 0:
        raise GuardViolation("seed", "seed must be >= 0")

    gdoc = _require(doc, "grid", dict, "grid")
    try:
        if "dz" in gdoc or "omega_max" in gdoc:
            grid = GridSpec(**{k: (int(gdoc[k]) if k in ("m", "n") else float(gdoc[k]))
                               for k in _GRID_KEYS})
        else:
            grid = GridSpec.create(m=int(gdoc["m"]), n=int(gdoc["n"]),
                                   delta=float(gdoc["delta"]),
                                   length=float(gdoc["length"]),
                                   omega_min=(float(gdoc["omega_min"])
                                              if "omega_min" in gdoc else None))
    except (KeyError, TypeError, ValueError) as exc:
        raise GuardViolation("grid", str(exc))

    cdoc = _require(doc, "channel", dict, "channel")
    try:
        params = ChannelParams(beta2=float(cdoc["beta2"]), gamma=float(cdoc["gamma"]),
                               q=float(cdoc["q"]), length=float(cdoc["length"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise GuardViolation("channel", str(exc))
    if abs(grid.length - params.length) > 1e-9 * max(1.0, grid.length):
        raise GuardViolation("length-mismatch",
                             "grid.length and channel.length differ")

    idoc = _require(doc, "input", dict, "input")
    kind = _require(idoc, "kind", str, "input")
    x = y = constellation = symbols = perturbation = None
    if kind == "samples":
        x = SpectralField(deinterleave(_require(idoc, "x", list, "input")), grid)
        if "y" in idoc:
            y = SpectralField(deinterleave(idoc["y"]), grid)
    elif kind == "file":
        fgrid, x, y = load_fields(Path(base_dir) / _require(idoc, "path", str, "input"))
        if fgrid != grid:
            raise GuardViolation("input", "field-file grid differs from config grid")
    elif kind == "constellation":
        try:
            constellation = ConstellationSpec(
                n_side=int(idoc["n_side"]), t_symbol=float(idoc["t_symbol"]),
                tau=float(idoc["tau"]), amplitude=float(idoc["amplitude"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise GuardViolation("input", str(exc))
        symbols = np.asarray(_require(idoc, "symbols", list, "input"), dtype=np.float64)
        if "perturbation" in idoc:
            pdoc = _require(idoc, "perturbation", dict, "input")
            perturbation = SymbolPerturbation(
                rho=np.asarray(pdoc.get("rho", []), dtype=np.float64),
                phi=np.asarray(pdoc.get("phi", []), dtype=np.float64))
    else:
        raise GuardViolation("input", f"unknown input kind {kind!r}")

    options = doc.get("options", {})
    if not isinstance(options, dict):
        raise GuardViolation("options", "options must be a mapping")

    needs_xy = method in ("pathint", "series0", "series1", "smallq")
    if needs_xy and kind == "constellation" and perturbation is None:
        raise GuardViolation("input", f"method {method!r} on a constellation "
                             "input needs a perturbation to define the output")
    if needs_xy and kind != "constellation" and y is None:
        raise GuardViolation("input", f"method {method!r} needs both x and y")
    if method in ("forward-mc",) and kind != "constellation" and x is None:
        raise GuardViolation("input", "forward-mc needs an input field")
    if method == "demo" and kind != "constellation":
        raise GuardViolation("input", "demo needs a constellation input")
    if method == "pathint":
        n_samples = options.get("n_samples", 0)
        if not isinstance(n_samples, int) or n_samples < 2:
            raise GuardViolation("sample-count",
                                 "pathint needs options.n_samples >= 2")
    return RunConfig(method=method, seed=seed, grid=grid, params=params, x=x, y=y,
                     constellation=constellation, symbols=symbols,
                     perturbation=perturbation, options=options, raw=doc)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise GuardViolation("config-syntax", f"{path}: {exc}")
    if not isinstance(doc, dict):
        raise GuardViolation("config-syntax", f"{path}: top level must be an object")
    return parse_config(doc, base_dir=path.parent)


def dump_document(doc: dict) -> str:
    """Deterministic JSON serialization of a result document."""
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


_DOC_SCHEMA = {
    "tool": str, "version": str, "method": str, "seed": int,
    "config": dict, "results": dict,
}


def validate_document(doc: dict) -> None:
    """Structural validation of an emitted result document."""
    for key, kind in _DOC_SCHEMA.items():
        if key not in doc:
            raise GuardViolation("document", f"missing key {key!r}")
        if not isinstance(doc[key], kind):
            raise GuardViolation("document", f"key {key!r} must be {kind.__name__}")
    res = doc["results"]
    for key, val in res.items():
        if isinstance(val, float) and not math.isfinite(val):
            raise GuardViolation("document", f"non-finite result field {key!r}")
    parse_config(doc["config"])  # echo must re-ingest


def set_by_path(doc: dict, dotted: str, value) -> dict:
    """Return a copy of `doc` with the dotted path replaced by `value`."""
    out = json.loads(json.dumps(doc))
    parts = dotted.split(".")
    node = out
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise GuardViolation("sweep-axis", f"no config node {dotted!r}")
        node = node[part]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise GuardViolation("sweep-axis", f"no config leaf {dotted!r}")
    if not isinstance(node[parts[-1]], (int, float)):
        raise GuardViolation("sweep-axis", f"{dotted!r} is not numeric")
    node[parts[-1]] = value
    return out
