"""JSON wire formats for maps, surfaces, and reports.

Two rules hold everywhere.  Exact documents carry rationals as "p/q"
strings, never as floats, so a file round-trips to the same Fraction it
came from.  The conjugacy report is the one document built from
floating-point diagnostics; it says so with an "approx": true marker and
keeps only its extracted exchange in exact form.

Serialization is canonical: sorted keys, two-space indent, trailing
newline.  Equal in-memory values therefore produce byte-identical files,
which is what makes the round-trip and determinism checks meaningful.

Decoders are strict.  A field the format does not define is an error, not
a warning; silently dropped typos in hand-edited fixtures cost more than
the strictness does.  The single exception is the optional "notes" field
on surfaces, reserved for fixture provenance.
"""

from __future__ import annotations

import json
from fractions import Fraction
from importlib import resources
from typing import Any

from .attractor import CantorApprox
from .errors import IoError, SchemaViolation
from .gutierrez import ConjugacyApprox, DisplacementReport, ExtractionReport, OrbitSample
from .iet import AffinePiece, Aiet, PartialAiet
from .interval import Interval
from .planar import PlanarPoint
from .rational import format_rat, parse_rat
from .rauzy import ClassificationReport
from .surface import (
    CLOSED,
    Direction,
    EdgePairing,
    LeafTrace,
    Polygon,
    Surface,
    ValidationReport,
    classify_closed_leaf,
    holonomy_of_closed_trace,
)

Doc = dict[str, Any]


def dumps_canonical(doc: Doc) -> str:
    """Render a document in the one canonical byte form."""
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_doc(path: str) -> Doc:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaViolation(f"{path}: top level must be an object")
    return doc


def write_text(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None


def schema(name: str) -> Doc:
    """A published schema by base name, e.g. schema("aiet")."""
    ref = resources.files("folia").joinpath("schemas", f"{name}.schema.json")
    try:
        return json.loads(ref.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise SchemaViolation(f"no published schema named {name!r}") from None


# -- primitives -------------------------------------------------------------


def _check_keys(
    doc: Any, what: str, required: tuple[str, ...], optional: tuple[str, ...] = ()
) -> None:
    if not isinstance(doc, dict):
        raise SchemaViolation(f"{what}: expected an object, got {type(doc).__name__}")
    missing = [k for k in required if k not in doc]
    if missing:
        raise SchemaViolation(f"{what}: missing field(s) {', '.join(missing)}")
    unknown = sorted(k for k in doc if k not in required and k not in optional)
    if unknown:
        raise SchemaViolation(f"{what}: unknown field(s) {', '.join(unknown)}")


def _rat_in(value: Any, what: str) -> Fraction:
    if not isinstance(value, str):
        raise SchemaViolation(
            f'{what}: rationals travel as "p/q" strings, got {value!r}'
        )
    try:
        return parse_rat(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise SchemaViolation(f"{what}: {value!r} is not a rational: {exc}") from None


def _point_out(p: PlanarPoint) -> list[str]:
    return [format_rat(p.x), format_rat(p.y)]


def _point_in(value: Any, what: str) -> PlanarPoint:
    if not isinstance(value, list) or len(value) != 2:
        raise SchemaViolation(f"{what}: a point is a two-element array")
    return PlanarPoint(_rat_in(value[0], what), _rat_in(value[1], what))


def _interval_out(iv: Interval) -> list[str]:
    return [format_rat(iv.lo), format_rat(iv.hi)]


def _interval_in(value: Any, what: str) -> Interval:
    if not isinstance(value, list) or len(value) != 2:
        raise SchemaViolation(f"{what}: an interval is a two-element array")
    lo, hi = _rat_in(value[0], what), _rat_in(value[1], what)
    if lo >= hi:
        raise SchemaViolation(f"{what}: empty interval [{lo}, {hi})")
    return Interval(lo, hi)


def _index_in(value: Any, what: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise SchemaViolation(f"{what}: expected a nonnegative integer, got {value!r}")
    return value


# -- affine exchanges -------------------------------------------------------


def _piece_out(p: AffinePiece) -> Doc:
    return {
        "lo": format_rat(p.domain.lo),
        "hi": format_rat(p.domain.hi),
        "slope": format_rat(p.slope),
        "offset": format_rat(p.offset),
    }


def _piece_in(doc: Any, what: str) -> AffinePiece:
    _check_keys(doc, what, ("lo", "hi", "slope", "offset"))
    lo, hi = _rat_in(doc["lo"], what), _rat_in(doc["hi"], what)
    if lo >= hi:
        raise SchemaViolation(f"{what}: empty interval [{lo}, {hi})")
    domain = Interval(lo, hi)
    try:
        return AffinePiece(
            domain, _rat_in(doc["slope"], what), _rat_in(doc["offset"], what)
        )
    except ValueError as exc:
        raise SchemaViolation(f"{what}: {exc}") from None


_PARTIAL_KEYS = ("undefinedIntervals", "undefinedPoints", "unresolved")


def map_to_doc(T: Aiet | PartialAiet) -> Doc:
    """Serialize an exchange; partial-map fields appear only when used.

    A PartialAiet with nothing undefined therefore writes the same bytes
    as the equal total exchange, which is what makes the suspension
    round trip byte-exact.
    """
    doc: Doc = {
        "ambient": _interval_out(T.ambient),
        "pieces": [_piece_out(p) for p in T.pieces],
    }
    if isinstance(T, PartialAiet):
        if T.undefined_intervals:
            doc["undefinedIntervals"] = [
                _interval_out(iv) for iv in T.undefined_intervals
            ]
        if T.undefined_points:
            doc["undefinedPoints"] = [format_rat(x) for x in T.undefined_points]
        if T.unresolved:
            doc["unresolved"] = [_interval_out(iv) for iv in T.unresolved]
    return doc


def map_from_doc(doc: Doc) -> Aiet | PartialAiet:
    _check_keys(doc, "map", ("ambient", "pieces"), _PARTIAL_KEYS)
    ambient = _interval_in(doc["ambient"], "map.ambient")
    if not isinstance(doc["pieces"], list):
        raise SchemaViolation("map.pieces: expected an array")
    pieces = [
        _piece_in(p, f"map.pieces[{i}]") for i, p in enumerate(doc["pieces"])
    ]
    partial = any(k in doc for k in _PARTIAL_KEYS)
    try:
        if not partial:
            return Aiet(pieces, ambient)
        return PartialAiet(
            pieces,
            ambient,
            undefined_intervals=[
                _interval_in(iv, "map.undefinedIntervals")
                for iv in doc.get("undefinedIntervals", [])
            ],
            undefined_points=[
                _rat_in(x, "map.undefinedPoints")
                for x in doc.get("undefinedPoints", [])
            ],
            unresolved=[
                _interval_in(iv, "map.unresolved") for iv in doc.get("unresolved", [])
            ],
        )
    except ValueError as exc:
        raise SchemaViolation(f"map: {exc}") from None


def total_map_from_doc(doc: Doc) -> Aiet:
    """Like map_from_doc but insists the exchange is total."""
    T = map_from_doc(doc)
    if isinstance(T, PartialAiet):
        raise SchemaViolation("map: a total exchange is required here")
    return T


# -- surfaces ---------------------------------------------------------------


def surface_to_doc(s: Surface, notes: str | None = None) -> Doc:
    polygons = []
    for poly in s.polygons:
        entry: Doc = {"vertices": [_point_out(v) for v in poly.vertices]}
        if poly.name:
            entry["name"] = poly.name
        polygons.append(entry)
    pairings = [
        {
            "a": list(pairing.a),
            "b": list(pairing.b),
            "lambda": format_rat(pairing.lam),
            "v": _point_out(pairing.v),
        }
        for pairing in s.pairings
    ]
    doc: Doc = {"polygons": polygons, "pairings": pairings}
    if notes is not None:
        doc["notes"] = notes
    return doc


def _edge_ref_in(value: Any, what: str) -> tuple[int, int]:
    if not isinstance(value, list) or len(value) != 2:
        raise SchemaViolation(f"{what}: an edge reference is [polygon, edge]")
    return _index_in(value[0], what), _index_in(value[1], what)


def surface_from_doc(doc: Doc) -> Surface:
    _check_keys(doc, "surface", ("polygons", "pairings"), ("notes",))
    if not isinstance(doc["polygons"], list) or not isinstance(doc["pairings"], list):
        raise SchemaViolation("surface: polygons and pairings are arrays")
    polygons = []
    for i, entry in enumerate(doc["polygons"]):
        what = f"surface.polygons[{i}]"
        _check_keys(entry, what, ("vertices",), ("name",))
        if not isinstance(entry["vertices"], list):
            raise SchemaViolation(f"{what}.vertices: expected an array")
        vertices = tuple(_point_in(v, what) for v in entry["vertices"])
        name = entry.get("name", "")
        if not isinstance(name, str):
            raise SchemaViolation(f"{what}.name: expected a string")
        polygons.append(Polygon(vertices, name=name))
    pairings = []
    for i, entry in enumerate(doc["pairings"]):
        what = f"surface.pairings[{i}]"
        _check_keys(entry, what, ("a", "b", "lambda", "v"))
        try:
            pairings.append(
                EdgePairing(
                    _edge_ref_in(entry["a"], what),
                    _edge_ref_in(entry["b"], what),
                    _rat_in(entry["lambda"], what),
                    _point_in(entry["v"], what),
                )
            )
        except ValueError as exc:
            raise SchemaViolation(f"{what}: {exc}") from None
    return Surface(tuple(polygons), tuple(pairings))


def surface_notes(doc: Doc) -> str | None:
    note = doc.get("notes")
    return note if isinstance(note, str) else None


# -- reports ----------------------------------------------------------------


def validation_to_doc(report: ValidationReport) -> Doc:
    doc: Doc = {
        "ok": report.ok,
        "errors": list(report.errors),
        "coneAngles": [
            {"corners": [list(c) for c in corners], "turns": turns}
            for corners, turns in report.cone_angles
        ],
    }
    if report.genus is not None:
        doc["genus"] = report.genus
    return doc


def classification_to_doc(report: ClassificationReport) -> Doc:
    """Everything exact from the verdict; the working state stays in memory."""
    doc: Doc = {"outcome": report.outcome, "word": report.word}
    if report.step is not None:
        doc["step"] = report.step
    if report.depth is not None:
        doc["depth"] = report.depth
    if report.cycle is not None:
        doc["cycle"] = [format_rat(x) for x in report.cycle]
    if report.period is not None:
        doc["period"] = report.period
    if report.multiplier is not None:
        doc["multiplier"] = format_rat(report.multiplier)
    if report.cycle_verification is not None:
        doc["cycleVerification"] = report.cycle_verification
    return doc


def cantor_to_doc(approx: CantorApprox) -> Doc:
    doc: Doc = {
        "L": _interval_out(approx.L),
        "depth": approx.depth,
        "gaps": [
            {
                "n": gap.level,
                "lo": format_rat(gap.interval.lo),
                "hi": format_rat(gap.interval.hi),
            }
            for gap in approx.gap_list.gaps
        ],
        "residualMeasure": format_rat(approx.residual_measure),
    }
    if approx.gap_list.source_hole is not None:
        doc["sourceHole"] = _interval_out(approx.gap_list.source_hole)
    if approx.singular_encounter is not None:
        doc["singularEncounter"] = {
            "level": approx.singular_encounter.level,
            "point": format_rat(approx.singular_encounter.point),
        }
    return doc


def direction_str(d: Direction) -> str:
    return f"{d.dx}/{d.dy}"


def trace_to_doc(trace: LeafTrace) -> Doc:
    doc: Doc = {
        "status": trace.status,
        "direction": direction_str(trace.direction),
        "start": {
            "polygon": trace.start_polygon,
            "point": _point_out(trace.start_point),
        },
        "end": {"polygon": trace.end_polygon, "point": _point_out(trace.end_point)},
        "crossings": len(trace.events),
        "accumulatedFactor": format_rat(trace.accumulated_factor),
        "events": [
            {
                "polygon": ev.from_polygon,
                "edge": ev.edge_index,
                "point": _point_out(ev.point),
                "toPolygon": ev.to_polygon,
                "toPoint": _point_out(ev.to_point),
                "lambda": format_rat(ev.lam),
            }
            for ev in trace.events
        ],
    }
    if trace.status == CLOSED:
        doc["holonomy"] = format_rat(holonomy_of_closed_trace(trace))
    if trace.singular_vertex is not None:
        doc["singularVertex"] = list(trace.singular_vertex)
    return doc


def cylinder_to_doc(trace: LeafTrace) -> Doc:
    """Holonomy verdict for a closed trace; raises NotClosed otherwise."""
    cyl = classify_closed_leaf(trace)
    return {
        "direction": direction_str(trace.direction),
        "crossings": len(trace.events),
        "holonomy": format_rat(cyl.rho),
        "kind": cyl.kind,
    }


def conjugacy_to_doc(
    sample: OrbitSample,
    approx: ConjugacyApprox,
    displacement: DisplacementReport,
    extraction: ExtractionReport | None = None,
    include_tables: bool = False,
) -> Doc:
    """The one floating-point document; "approx": true says so up front.

    Diagnostics are floats because that is all a reader ever does with
    them; the extracted exchange stays exact so it can feed back into the
    exact pipeline.
    """
    doc: Doc = {
        "approx": True,
        "basepoint": format_rat(approx.basepoint),
        "betas": [format_rat(b) for b in approx.betas],
        "count": len(sample),
        "maxGap": format_rat(sample.max_gap),
        "cauchyMax": [float(c) for c in approx.cauchy_max],
        "displacement": {
            "pairCount": displacement.pair_count,
            "perBetaMax": [float(v) for v in displacement.per_beta_max],
            "maxViolation": float(displacement.final_max),
            "tolerance": format_rat(displacement.tolerance),
            "improving": displacement.improving,
            "passed": displacement.passed,
        },
    }
    if extraction is not None:
        doc["extraction"] = {
            "cuts": [float(c) for c in extraction.cuts],
            "medians": [float(m) for m in extraction.medians],
            "medianError": float(extraction.median_error),
            "snapped": extraction.snapped,
            "pullbackFound": extraction.pullback_found,
            "iet": map_to_doc(extraction.iet),
        }
    if include_tables:
        doc["h"] = [[float(v) for v in table] for table in approx.tables]
    return doc
