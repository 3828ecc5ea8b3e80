"""Batch front door: JSON config in, CSV/JSON artifacts out.

One experiment per invocation. Every output file embeds the resolved
config and the tool version, so a run is reproducible from its artifact
alone. Rationals are always emitted as separate numerator/denominator
integers plus a 12-place half-even decimal convenience field; downstream
comparisons must use the integer fields.

Exit codes: 0 success, 2 invalid config (message names the field),
3 budget exceeded (message states the required budget), 4 internal
invariant violation (a repro bundle is written and its path printed).
"""

from __future__ import annotations

import copy
import csv
import io
import json
import os
import sys
import tempfile
import time
import traceback
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import click

from . import __version__
from .augment import AugmentPlan, LemmaChainReport, augment_set, lemma_chain_report, witness_family
from .basis import (
    BasisElement,
    BasisFamily,
    Box,
    DEFAULT_ELEMENT_BUDGET,
    JumpParams,
    enumerate_elements,
)
from .errors import (
    BudgetExceededError,
    ConfigError,
    EmptyWitnessFamilyError,
    GeometryMismatchError,
    RasterizeError,
)
from .grid import CellSet, GridGeometry, parse_rational, random_set
from .halo import (
    DEFAULT_SEARCH_BUDGET,
    DEFAULT_SUBSET_BUDGET,
    HaloCurve,
    HaloPoint,
    exact_discrete_halo,
    halo_curve,
    halo_ratio,
)
from .maximal import MaximalField, SummedAreaTable, maximal_field, superlevel_direct
from .tauber import (
    ChainedBoundReport,
    ContainmentReport,
    GapReport,
    HaloOrbit,
    IterationParams,
    containment_experiment,
    halo_orbit,
    strict_gap_report,
)

DECIMAL_PLACES = 12


# -- rational formatting -------------------------------------------------


def decimal_string(value, places: int = DECIMAL_PLACES) -> str:
    """Round a rational to a fixed-point decimal string, ties to even.

    Pure integer arithmetic: no float and no decimal context is involved,
    so the same rational always yields the same bytes.
    """
    value = Fraction(value)
    scaled = value * 10**places
    q, r = divmod(scaled.numerator, scaled.denominator)
    double = 2 * r
    if double > scaled.denominator or (double == scaled.denominator and q % 2):
        q += 1
    sign = "-" if q < 0 else ""
    whole, frac = divmod(abs(q), 10**places)
    return f"{sign}{whole}.{frac:0{places}d}"


def rational_object(value) -> dict:
    value = Fraction(value)
    return {
        "num": value.numerator,
        "den": value.denominator,
        "dec": decimal_string(value),
    }


# -- config plumbing -----------------------------------------------------

COMMON_DEFAULTS: dict = {
    "seed": 0,
    "workers": None,
    "format": None,
    "output": None,
    "budgets": {
        "element": DEFAULT_ELEMENT_BUDGET,
        "subset": DEFAULT_SUBSET_BUDGET,
        "search": DEFAULT_SEARCH_BUDGET,
    },
}

SUBCOMMAND_DEFAULTS: dict[str, dict] = {
    "maximal": {
        "geometry": {"extent": [6], "cell_width": "1"},
        "family": {"kind": "intervals"},
        "set": {"cells": [0]},
    },
    "halo-curve": {
        "geometry": {"extent": [12], "cell_width": "1"},
        "family": {"kind": "intervals"},
        "u_grid": ["11/10", "3/2", "2", "3"],
        "strategy": "structured",
    },
    "jump-demo": {
        "geometry": {"extent": [2000], "cell_width": "1/1000"},
        "family": {
            "kind": "jump_example",
            "jump": {"scales": [1000], "gaps": [1, 2, 4], "stride": 1},
        },
        "set": {"ranges": [[[0], [1000]]]},
        "u_grid": ["101/100", "11/10", "3/2"],
    },
    "iterate": {
        "geometry": {"extent": [64], "cell_width": "1/64"},
        "family": {"kind": "intervals"},
        "set": {"cells": list(range(0, 32, 2))},
        "element": {"boxes": [[[0], [32]]]},
        "alpha": "1/4",
        "gamma": "1/2",
        "k": None,
        "aux_output": None,
    },
    "augment-check": {
        "geometry": {"extent": [64], "cell_width": "1/64"},
        "family": {"kind": "intervals"},
        "set": {"random": {"density": "1/2", "seed": 0}},
        "alpha": "3/4",
        "eps": "1/32",
    },
    "strict-gap": {
        "dimension": 1,
        "family": {"kind": "intervals", "scale_max_frac": "1/2"},
        "gamma": "1/2",
        "ladder": [16, 64, 256],
        "shape": [[["1/4"], ["3/4"]]],
    },
    "oracle": {
        "geometry": {"extent": [12], "cell_width": "1"},
        "family": {"kind": "intervals"},
        "u": "5/2",
    },
    "bench": {
        "bench": {"grid": 128, "oracle_cells": 14, "sat_cells": 65536},
    },
}

DEFAULT_FORMAT = {
    "maximal": "csv",
    "halo-curve": "csv",
    "jump-demo": "csv",
    "iterate": "csv",
    "augment-check": "json",
    "strict-gap": "csv",
    "oracle": "json",
    "bench": "csv",
}


def _deep_merge(base: dict, override: dict) -> dict:
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_merge(base[key], value)
        else:
            base[key] = value
    return base


def _apply_set(config: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError("set", f"expected key=value, got {assignment!r}")
    key, _, raw = assignment.partition("=")
    key = key.strip()
    if not key:
        raise ConfigError("set", f"empty key in {assignment!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = config
    parts = key.split(".")
    for part in parts[:-1]:
        nxt = node.get(part)
        if not isinstance(nxt, dict):
            nxt = {}
            node[part] = nxt
        node = nxt
    node[parts[-1]] = value


def resolve_config(
    subcommand: str,
    config_path: str | None,
    assignments: tuple[str, ...],
    output: str | None,
    output_format: str | None,
) -> dict:
    """Defaults, then the config file, then --set overrides, then flags."""
    config = copy.deepcopy(COMMON_DEFAULTS)
    _deep_merge(config, copy.deepcopy(SUBCOMMAND_DEFAULTS[subcommand]))
    allowed = set(config) | {"subcommand"}
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError("config", f"cannot read {config_path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"{config_path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config", "top level of the config file must be an object")
        _deep_merge(config, loaded)
    for assignment in assignments:
        _apply_set(config, assignment)
    if output is not None:
        config["output"] = output
    if output_format is not None:
        config["format"] = output_format
    config["subcommand"] = subcommand
    unknown = set(config) - allowed
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown configuration field")
    if config["format"] not in (None, "csv", "json"):
        raise ConfigError("format", f"must be csv or json, got {config['format']!r}")
    if not isinstance(config["seed"], int) or isinstance(config["seed"], bool):
        raise ConfigError("seed", f"must be an integer, got {config['seed']!r}")
    workers = config["workers"]
    if workers is not None and (not isinstance(workers, int) or workers < 1):
        raise ConfigError("workers", f"must be a positive integer, got {workers!r}")
    budgets = config["budgets"]
    if not isinstance(budgets, dict):
        raise ConfigError("budgets", "must be an object")
    for name in ("element", "subset", "search"):
        value = budgets.get(name)
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise ConfigError(f"budgets.{name}", f"must be a positive integer, got {value!r}")
    return config


# -- builders ------------------------------------------------------------


def build_geometry(spec, field: str = "geometry") -> GridGeometry:
    if not isinstance(spec, dict):
        raise ConfigError(field, "must be an object")
    unknown = set(spec) - {"dimension", "extent", "cell_width", "cell_budget"}
    if unknown:
        raise ConfigError(f"{field}.{sorted(unknown)[0]}", "unknown geometry field")
    extent = spec.get("extent")
    if not isinstance(extent, list) or not extent:
        raise ConfigError(f"{field}.extent", f"must be a nonempty list, got {extent!r}")
    dimension = spec.get("dimension", len(extent))
    width = parse_rational(spec.get("cell_width", "1"), f"{field}.cell_width")
    kwargs = {}
    if "cell_budget" in spec:
        kwargs["cell_budget"] = spec["cell_budget"]
    return GridGeometry(dimension, tuple(extent), width, **kwargs)


def build_family(spec, field: str = "family") -> BasisFamily:
    if not isinstance(spec, dict):
        raise ConfigError(field, "must be an object")
    unknown = set(spec) - {"kind", "scale_min", "scale_max", "scale_max_frac", "jump", "explicit"}
    if unknown:
        raise ConfigError(f"{field}.{sorted(unknown)[0]}", "unknown family field")
    kind = spec.get("kind", "intervals")
    jump = None
    if spec.get("jump") is not None:
        j = spec["jump"]
        if not isinstance(j, dict):
            raise ConfigError(f"{field}.jump", "must be an object")
        jump = JumpParams(
            tuple(j.get("scales", ())), tuple(j.get("gaps", ())), j.get("stride", 1)
        )
    explicit = ()
    if spec.get("explicit"):
        elements = []
        for boxes in spec["explicit"]:
            elements.append(tuple(Box(tuple(b["lo"]), tuple(b["hi"])) for b in boxes))
        explicit = tuple(elements)
    frac = spec.get("scale_max_frac")
    return BasisFamily(
        kind=kind,
        scale_min=spec.get("scale_min", 1),
        scale_max=spec.get("scale_max"),
        scale_max_frac=parse_rational(frac, f"{field}.scale_max_frac") if frac is not None else None,
        jump=jump,
        explicit=explicit,
    )


def build_cellset(geometry: GridGeometry, spec, field: str = "set") -> CellSet:
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError(
            field,
            "must be an object with exactly one of: cells, ranges, fractions, random, serialized",
        )
    (key, value), = spec.items()
    try:
        if key == "cells":
            return CellSet.from_cells(geometry, value)
        if key == "ranges":
            return CellSet.from_ranges(geometry, [(tuple(lo), tuple(hi)) for lo, hi in value])
        if key == "fractions":
            boxes = [
                (
                    tuple(parse_rational(c, f"{field}.fractions") for c in lo),
                    tuple(parse_rational(c, f"{field}.fractions") for c in hi),
                )
                for lo, hi in value
            ]
            return CellSet.from_fractions(geometry, boxes)
        if key == "random":
            density = parse_rational(value.get("density", "1/2"), f"{field}.random.density")
            return random_set(geometry, density, value.get("seed", 0))
        if key == "serialized":
            cells = CellSet.parse(value)
            if cells.geometry != geometry:
                raise ConfigError(field, "serialized set was built on a different grid")
            return cells
    except (TypeError, ValueError, IndexError, KeyError, AttributeError) as exc:
        raise ConfigError(f"{field}.{key}", str(exc)) from exc
    raise ConfigError(field, f"unknown set constructor {key!r}")


def build_element(geometry: GridGeometry, spec, field: str = "element") -> BasisElement:
    if not isinstance(spec, dict) or "boxes" not in spec:
        raise ConfigError(field, "must be an object with a 'boxes' list")
    try:
        boxes = tuple(Box(tuple(lo), tuple(hi)) for lo, hi in spec["boxes"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{field}.boxes", str(exc)) from exc
    for box in boxes:
        box.validate_in(geometry)
    return BasisElement(boxes)


# -- report payloads and serialization ------------------------------------


@dataclass(frozen=True)
class OracleReport:
    u: Fraction
    ratio: Fraction
    witness: CellSet
    subsets_scanned: int


@dataclass(frozen=True)
class BenchReport:
    rows: tuple[tuple[str, str, int, float], ...]


def _curve_rows(curve: HaloCurve) -> tuple[list[str], list[list]]:
    columns = [
        "u_num", "u_den", "ratio_num", "ratio_den",
        "method", "seed", "witness_cells", "witness_hex",
    ]
    rows = []
    for p in curve.points:
        rows.append([
            p.u.numerator, p.u.denominator,
            p.ratio.numerator, p.ratio.denominator,
            p.method, p.seed,
            p.witness.cell_count if p.witness is not None else 0,
            p.witness.hex_mask if p.witness is not None else "",
        ])
    return columns, rows


def _field_rows(fieldv: MaximalField) -> tuple[list[str], list[list]]:
    columns = ["cell_index", "value_num", "value_den"]
    rows = [
        [i, v.numerator, v.denominator] for i, v in enumerate(fieldv.values)
    ]
    return columns, rows


def _orbit_rows(orbit: HaloOrbit) -> tuple[list[str], list[list]]:
    columns = ["step", "measure_num", "measure_den", "grew", "set_hex"]
    rows = []
    for step, (cells, measure, grew) in enumerate(zip(orbit.sets, orbit.measures, orbit.grew)):
        rows.append([
            step, measure.numerator, measure.denominator,
            "true" if grew else "false", cells.hex_mask,
        ])
    return columns, rows


def _gap_rows(report: GapReport) -> tuple[list[str], list[list]]:
    columns = [
        "extent", "cell_width_num", "cell_width_den", "set_cells",
        "ge_num", "ge_den", "gt_num", "gt_den", "gap_num", "gap_den", "gap_cells",
    ]
    rows = []
    for rung in report.rungs:
        rows.append([
            "x".join(str(n) for n in rung.extent),
            rung.cell_width.numerator, rung.cell_width.denominator,
            rung.set_cells,
            rung.measure_ge.numerator, rung.measure_ge.denominator,
            rung.measure_gt.numerator, rung.measure_gt.denominator,
            rung.gap.numerator, rung.gap.denominator,
            rung.gap_cells,
        ])
    return columns, rows


def _bench_rows(report: BenchReport) -> tuple[list[str], list[list]]:
    columns = ["kernel", "unit", "items", "seconds", "items_per_second"]
    rows = []
    for kernel, unit, items, seconds in report.rows:
        rate = items / seconds if seconds > 0 else 0.0
        rows.append([kernel, unit, items, f"{seconds:.6f}", f"{rate:.1f}"])
    return columns, rows


def _curve_payload(curve: HaloCurve) -> dict:
    return {
        "geometry": {"extent": list(curve.geometry.extent)},
        "family": curve.family,
        "points": [
            {
                "u": rational_object(p.u),
                "ratio": rational_object(p.ratio),
                "method": p.method,
                "seed": p.seed,
                "witness_cells": p.witness.cell_count if p.witness is not None else 0,
                "witness_hex": p.witness.hex_mask if p.witness is not None else "",
            }
            for p in curve.points
        ],
    }


def _field_payload(fieldv: MaximalField) -> dict:
    return {
        "geometry": {"extent": list(fieldv.geometry.extent)},
        "uncovered_cells": fieldv.uncovered_count,
        "values": [rational_object(v) for v in fieldv.values],
    }


def _orbit_payload(orbit: HaloOrbit) -> dict:
    return {
        "gamma": rational_object(orbit.gamma),
        "steps": [
            {
                "step": j,
                "measure": rational_object(m),
                "grew": g,
                "set_hex": s.hex_mask,
            }
            for j, (s, m, g) in enumerate(zip(orbit.sets, orbit.measures, orbit.grew))
        ],
    }


def _containment_payload(report: ContainmentReport) -> dict:
    return {
        "alpha": rational_object(report.params.alpha),
        "gamma": rational_object(report.params.gamma),
        "dimension": report.params.n,
        "depth": report.depth,
        "element_average": rational_object(report.element_average),
        "contained": report.contained,
        "first_step": report.first_step,
        "measures": [rational_object(m) for m in report.orbit.measures],
        "grew": list(report.orbit.grew),
    }


def _chained_payload(report: ChainedBoundReport) -> dict:
    return {
        "alpha": rational_object(report.params.alpha),
        "gamma": rational_object(report.params.gamma),
        "gamma_up": rational_object(report.gamma_up),
        "depth": report.depth,
        "c_probe": rational_object(report.c_probe),
        "step_ratios": [None if r is None else rational_object(r) for r in report.step_ratios],
        "steps_within": list(report.steps_within),
        "superlevel_measure": rational_object(report.superlevel_measure),
        "seed_measure": rational_object(report.seed_measure),
        "bound_value": rational_object(report.bound_value),
        "bound_holds": report.bound_holds,
        "notes": report.notes,
    }


def _lemma_payload(report: LemmaChainReport) -> dict:
    return {
        "witness_count": report.witness_count,
        "per_witness": [
            {
                "id": w.element_id,
                "avg_E": rational_object(w.avg_before),
                "avg_Etilde": rational_object(w.avg_after),
                "strict": w.strict,
            }
            for w in report.per_witness
        ],
        "e_prime_cells": report.e_prime_cells,
        "size_bound": {
            "lhs": rational_object(report.size_lhs),
            "rhs": rational_object(report.size_rhs),
            "pass": report.size_pass,
        },
        "superlevel_bound": {
            "lhs": rational_object(report.superlevel_lhs),
            "rhs": rational_object(report.superlevel_rhs),
            "pass": report.superlevel_pass,
        },
        "notes": report.notes,
    }


def _oracle_payload(report: OracleReport) -> dict:
    return {
        "u": rational_object(report.u),
        "ratio": rational_object(report.ratio),
        "witness": {
            "cell_count": report.witness.cell_count,
            "cells": list(report.witness.iter_cells()),
            "serialized": report.witness.serialize(),
        },
        "subsets_scanned": report.subsets_scanned,
    }


def _gap_payload(report: GapReport) -> dict:
    return {
        "gamma": rational_object(report.gamma),
        "rungs": [
            {
                "extent": list(r.extent),
                "cell_width": rational_object(r.cell_width),
                "set_cells": r.set_cells,
                "measure_ge": rational_object(r.measure_ge),
                "measure_gt": rational_object(r.measure_gt),
                "gap": rational_object(r.gap),
                "gap_cells": r.gap_cells,
            }
            for r in report.rungs
        ],
        "skipped": [
            {"extent": list(extent), "reason": reason} for extent, reason in report.skipped
        ],
    }


def _bench_payload(report: BenchReport) -> dict:
    return {
        "kernels": [
            {"kernel": k, "unit": u, "items": n, "seconds": s}
            for k, u, n, s in report.rows
        ]
    }


_TABLE_BUILDERS = {
    HaloCurve: _curve_rows,
    MaximalField: _field_rows,
    HaloOrbit: _orbit_rows,
    GapReport: _gap_rows,
    BenchReport: _bench_rows,
}

_PAYLOAD_BUILDERS = {
    HaloCurve: _curve_payload,
    MaximalField: _field_payload,
    HaloOrbit: _orbit_payload,
    GapReport: _gap_payload,
    BenchReport: _bench_payload,
    ContainmentReport: _containment_payload,
    ChainedBoundReport: _chained_payload,
    LemmaChainReport: _lemma_payload,
    OracleReport: _oracle_payload,
}


def _flatten(payload, prefix: str = "") -> list[tuple[str, str]]:
    rows: list[tuple[str, str]] = []
    if isinstance(payload, dict):
        for key, value in payload.items():
            rows.extend(_flatten(value, f"{prefix}{key}."))
    elif isinstance(payload, (list, tuple)):
        for i, value in enumerate(payload):
            rows.extend(_flatten(value, f"{prefix}{i}."))
    else:
        if isinstance(payload, bool):
            payload = "true" if payload else "false"
        rows.append((prefix[:-1], "" if payload is None else str(payload)))
    return rows


def serialize_report(report, output_format: str, config: dict | None = None) -> bytes:
    """Render a module report as deterministic CSV or JSON bytes.

    Identical reports and configs always produce identical bytes; there
    are no timestamps and no environment-dependent fields.
    """
    if output_format not in ("csv", "json"):
        raise ConfigError("format", f"must be csv or json, got {output_format!r}")
    if output_format == "json":
        builder = _PAYLOAD_BUILDERS.get(type(report))
        if builder is None:
            raise ConfigError("report", f"cannot serialize {type(report).__name__}")
        document = {"tool": "halolab", "version": __version__, "report": builder(report)}
        if config is not None:
            document["config"] = config
        return (json.dumps(document, sort_keys=True, indent=2) + "\n").encode()

    comments = [f"halolab {__version__}"]
    if config is not None:
        comments.append("config " + json.dumps(config, sort_keys=True, separators=(",", ":")))
    if isinstance(report, GapReport):
        for extent, reason in report.skipped:
            comments.append(f"skipped extent={'x'.join(str(n) for n in extent)}: {reason}")
    table = _TABLE_BUILDERS.get(type(report))
    if table is not None:
        columns, rows = table(report)
    else:
        builder = _PAYLOAD_BUILDERS.get(type(report))
        if builder is None:
            raise ConfigError("report", f"cannot serialize {type(report).__name__}")
        columns = ["key", "value"]
        rows = [list(pair) for pair in _flatten(builder(report))]
    buffer = io.StringIO()
    for line in comments:
        buffer.write(f"# {line}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buffer.getvalue().encode()


def atomic_write(path: Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


# -- subcommand handlers ---------------------------------------------------


def _output_path(config: dict, extension: str, suffix: str = "") -> Path:
    base = config.get("output")
    if base:
        path = Path(base)
        if suffix:
            path = path.with_name(path.stem + suffix + path.suffix)
        return path
    return Path(f"halolab-{config['subcommand']}{suffix}.{extension}")


def _format_for(config: dict) -> str:
    return config["format"] or DEFAULT_FORMAT[config["subcommand"]]


def _fraction_str(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def _run_maximal(config: dict) -> str:
    geometry = build_geometry(config["geometry"])
    family = build_family(config["family"])
    cells = build_cellset(geometry, config["set"])
    workers = config["workers"] or 1
    fieldv = maximal_field(cells, family, config["budgets"]["element"], workers)
    fmt = _format_for(config)
    path = _output_path(config, fmt)
    atomic_write(path, serialize_report(fieldv, fmt, config))
    peak = max(fieldv.values) if fieldv.values else Fraction(0)
    return (
        f"maximal: peak value {_fraction_str(peak)} over {geometry.cell_count} cells "
        f"({fieldv.uncovered_count} uncovered); wrote {path}"
    )


def _run_halo_curve(config: dict) -> str:
    geometry = build_geometry(config["geometry"])
    family = build_family(config["family"])
    levels = [parse_rational(u, "u_grid") for u in config["u_grid"]]
    strategy = config["strategy"]
    budgets = config["budgets"]
    budget = budgets["subset"] if strategy == "exhaustive" else budgets["search"]
    curve = halo_curve(
        levels, family, geometry, strategy, config["seed"], budget, budgets["element"]
    )
    fmt = _format_for(config)
    path = _output_path(config, fmt)
    atomic_write(path, serialize_report(curve, fmt, config))
    first = next((p for p in curve.points if p.method != "identity"), curve.points[0])
    return (
        f"halo-curve: ratio at u={_fraction_str(first.u)} is {_fraction_str(first.ratio)} "
        f"({len(curve.points)} points, {strategy}); wrote {path}"
    )


def _run_jump_demo(config: dict) -> str:
    geometry = build_geometry(config["geometry"])
    family = build_family(config["family"])
    cells = build_cellset(geometry, config["set"])
    levels = [parse_rational(u, "u_grid") for u in config["u_grid"]]
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ConfigError("u_grid", "levels must be strictly increasing")
    seed = config["seed"]
    points = []
    for u in levels:
        if u <= 1:
            points.append(HaloPoint(u, u, None, "identity", seed))
        else:
            ratio = halo_ratio(cells, u, family, config["budgets"]["element"])
            points.append(HaloPoint(u, ratio, cells, "candidate", seed))
    curve = HaloCurve(geometry, tuple(points), family.descriptor())
    fmt = _format_for(config)
    path = _output_path(config, fmt)
    atomic_write(path, serialize_report(curve, fmt, config))
    first = next((p for p in curve.points if p.method == "candidate"), curve.points[0])
    return (
        f"jump-demo: ratio at u={_fraction_str(first.u)} is {_fraction_str(first.ratio)}; "
        f"wrote {path}"
    )


def _run_iterate(config: dict) -> str:
    geometry = build_geometry(config["geometry"])
    family = build_family(config["family"])
    cells = build_cellset(geometry, config["set"])
    element = build_element(geometry, config["element"])
    params = IterationParams(
        parse_rational(config["alpha"], "alpha"),
        parse_rational(config["gamma"], "gamma"),
        geometry.dimension,
    )
    budget = config["budgets"]["element"]
    report = containment_experiment(element, cells, params, family, budget)
    if config.get("k") is not None:
        workers = config["workers"] or 1
        orbit = halo_orbit(cells, params.gamma, config["k"], family, budget, workers)
    else:
        orbit = report.orbit
    fmt = _format_for(config)
    orbit_path = _output_path(config, fmt)
    atomic_write(orbit_path, serialize_report(orbit, fmt, config))
    aux = config.get("aux_output")
    aux_path = Path(aux) if aux else _output_path(config, "json", suffix="-containment")
    atomic_write(aux_path, serialize_report(report, "json", config))
    where = f"step {report.first_step}" if report.first_step is not None else "never"
    return (
        f"iterate: final orbit measure {_fraction_str(orbit.measures[-1])}; element "
        f"contained at {where} (depth {report.depth}); wrote {orbit_path} and {aux_path}"
    )


def _run_augment_check(config: dict) -> str:
    geometry = build_geometry(config["geometry"])
    family = build_family(config["family"])
    cells = build_cellset(geometry, config["set"])
    plan = AugmentPlan(
        parse_rational(config["alpha"], "alpha"), parse_rational(config["eps"], "eps")
    )
    budget = config["budgets"]["element"]
    witnesses = witness_family(cells, plan, family, budget)
    e_tilde, _ = augment_set(cells, witnesses.elements, plan, config["seed"])
    report = lemma_chain_report(cells, e_tilde, witnesses.elements, plan, family, budget)
    fmt = _format_for(config)
    path = _output_path(config, fmt)
    atomic_write(path, serialize_report(report, fmt, config))
    lifted = min(w.avg_after for w in report.per_witness)
    return (
        f"augment-check: {report.witness_count} witnesses, min lifted average "
        f"{_fraction_str(lifted)} vs alpha {_fraction_str(plan.alpha)}; wrote {path}"
    )


def _run_strict_gap(config: dict) -> str:
    family = build_family(config["family"])
    dimension = config["dimension"]
    ladder = []
    for n in config["ladder"]:
        if not isinstance(n, int) or n < 1:
            raise ConfigError("ladder", f"rung sizes must be positive integers, got {n!r}")
        ladder.append(GridGeometry(dimension, (n,) * dimension, Fraction(1, n)))
    shape = [
        (
            tuple(parse_rational(c, "shape") for c in lo),
            tuple(parse_rational(c, "shape") for c in hi),
        )
        for lo, hi in config["shape"]
    ]
    gamma = parse_rational(config["gamma"], "gamma")
    report = strict_gap_report(shape, gamma, family, ladder, config["budgets"]["element"])
    fmt = _format_for(config)
    path = _output_path(config, fmt)
    atomic_write(path, serialize_report(report, fmt, config))
    if report.rungs:
        finest = report.rungs[-1]
        head = f"gap at extent {'x'.join(str(n) for n in finest.extent)} is " \
               f"{_fraction_str(finest.gap)} ({finest.gap_cells} cells)"
    else:
        head = "every rung was skipped"
    return f"strict-gap: {head}; wrote {path}"


def _run_oracle(config: dict) -> str:
    geometry = build_geometry(config["geometry"])
    family = build_family(config["family"])
    u = parse_rational(config["u"], "u")
    budgets = config["budgets"]
    ratio, witness = exact_discrete_halo(
        u, family, geometry, budgets["subset"], budgets["element"]
    )
    report = OracleReport(u, ratio, witness, (1 << geometry.cell_count) - 1)
    fmt = _format_for(config)
    path = _output_path(config, fmt)
    atomic_write(path, serialize_report(report, fmt, config))
    return (
        f"oracle: exact ratio {_fraction_str(ratio)} at u={_fraction_str(u)} "
        f"with a {witness.cell_count}-cell witness; wrote {path}"
    )


def _run_bench(config: dict) -> str:
    spec = config["bench"]
    rows = []

    sat_cells = int(spec.get("sat_cells", 65536))
    grid = GridGeometry(1, (sat_cells,), Fraction(1))
    cells = random_set(grid, Fraction(1, 2), config["seed"])
    start = time.perf_counter()
    SummedAreaTable(cells)
    rows.append(("summed_area_table", "cells", sat_cells, time.perf_counter() - start))

    n = int(spec.get("grid", 128))
    geometry = GridGeometry(1, (n,), Fraction(1))
    family = BasisFamily("intervals")
    sample = random_set(geometry, Fraction(1, 2), config["seed"])
    touched = sum(
        el.cell_count for el in enumerate_elements(family, geometry, DEFAULT_ELEMENT_BUDGET)
    )
    start = time.perf_counter()
    maximal_field(sample, family)
    rows.append(("maximal_field", "cells", touched, time.perf_counter() - start))

    big = GridGeometry(1, (4 * n,), Fraction(1))
    sample_big = random_set(big, Fraction(1, 2), config["seed"])
    element_count = sum(
        1 for _ in enumerate_elements(family, big, DEFAULT_ELEMENT_BUDGET)
    )
    start = time.perf_counter()
    superlevel_direct(sample_big, family, Fraction(1, 2), strict=True)
    rows.append(("superlevel_direct", "elements", element_count, time.perf_counter() - start))

    oracle_cells = int(spec.get("oracle_cells", 14))
    tiny = GridGeometry(1, (oracle_cells,), Fraction(1))
    subsets = (1 << oracle_cells) - 1
    start = time.perf_counter()
    exact_discrete_halo(Fraction(3, 2), family, tiny, subset_budget=max(subsets, 1))
    rows.append(("exhaustive_subsets", "subsets", subsets, time.perf_counter() - start))

    report = BenchReport(tuple(rows))
    fmt = _format_for(config)
    path = _output_path(config, fmt)
    atomic_write(path, serialize_report(report, fmt, config))
    total = sum(r[3] for r in rows)
    return f"bench: {len(rows)} kernels in {total:.3f}s; wrote {path}"


HANDLERS = {
    "maximal": _run_maximal,
    "halo-curve": _run_halo_curve,
    "jump-demo": _run_jump_demo,
    "iterate": _run_iterate,
    "augment-check": _run_augment_check,
    "strict-gap": _run_strict_gap,
    "oracle": _run_oracle,
    "bench": _run_bench,
}


def run(config: dict) -> str:
    """Dispatch a resolved config to its handler; returns the summary line."""
    subcommand = config.get("subcommand")
    handler = HANDLERS.get(subcommand)
    if handler is None:
        raise ConfigError("subcommand", f"unknown subcommand {subcommand!r}")
    return handler(config)


def _write_repro_bundle(config, exc: BaseException) -> Path:
    base = None
    if isinstance(config, dict) and config.get("output"):
        base = Path(config["output"]).parent
    path = (base or Path.cwd()) / "halolab-repro.json"
    bundle = {
        "tool": "halolab",
        "version": __version__,
        "config": config if isinstance(config, dict) else None,
        "error": repr(exc),
        "traceback": traceback.format_exception(type(exc), exc, exc.__traceback__),
    }
    try:
        atomic_write(path, (json.dumps(bundle, sort_keys=True, indent=2) + "\n").encode())
    except OSError:
        return path
    return path


def _execute(
    subcommand: str,
    config_path: str | None,
    assignments: tuple[str, ...],
    output: str | None,
    output_format: str | None,
) -> None:
    config: dict | None = None
    try:
        config = resolve_config(subcommand, config_path, assignments, output, output_format)
        click.echo(run(config))
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    except (RasterizeError, GeometryMismatchError) as exc:
        click.echo(f"config error in field 'set': {exc}", err=True)
        sys.exit(2)
    except EmptyWitnessFamilyError as exc:
        click.echo(f"config error in field 'alpha': {exc}", err=True)
        sys.exit(2)
    except BudgetExceededError as exc:
        click.echo(
            f"budget exceeded: {exc.what} requires a budget of {exc.required}, "
            f"configured budget is {exc.budget}",
            err=True,
        )
        sys.exit(3)
    except (KeyboardInterrupt, SystemExit):
        raise
    except BaseException as exc:
        bundle = _write_repro_bundle(config, exc)
        click.echo(f"internal error: {exc!r}; repro bundle written to {bundle}", err=True)
        sys.exit(4)


def _common_options(fn):
    fn = click.option(
        "--config", "config_path", type=click.Path(), default=None,
        help="JSON config file; fields override the subcommand defaults.",
    )(fn)
    fn = click.option(
        "--set", "assignments", multiple=True, metavar="KEY=VALUE",
        help="Override one config field (dotted keys, JSON values).",
    )(fn)
    fn = click.option("--output", "-o", type=click.Path(), default=None,
                      help="Primary output path.")(fn)
    fn = click.option("--format", "output_format", type=click.Choice(["csv", "json"]),
                      default=None, help="Primary output format.")(fn)
    return fn


@click.group()
@click.version_option(version=__version__, prog_name="halolab")
def main():
    """Exact-rational experiments with maximal averages over box families."""


def _register(name: str, help_text: str) -> None:
    @main.command(name, help=help_text)
    @_common_options
    def _cmd(config_path, assignments, output, output_format, _name=name):
        _execute(_name, config_path, assignments, output, output_format)


_register("maximal", "Per-cell maximal averages of a set; writes the field table.")
_register("halo-curve", "Best found superlevel ratios across a grid of levels.")
_register("jump-demo", "Evaluate the two-block family on its canonical candidate set.")
_register("iterate", "Iterated superlevel orbit plus the element containment report.")
_register("augment-check", "Witness selection, density augmentation, and exact checks.")
_register("strict-gap", "Strict vs non-strict superlevel measures across resolutions.")
_register("oracle", "Exact subset-exhaustive superlevel ratio on a tiny grid.")
_register("bench", "Time the main kernels; throughput table.")


if __name__ == "__main__":
    main()
