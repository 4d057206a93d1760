"""Command-line front end.

Each subcommand reads exact-rational JSON, runs one library operation,
and emits a canonical JSON (or SVG) artifact.  Exit codes are part of the
contract: 0 on success, 1 when the domain said no (the module's error
message is passed through verbatim), 2 when the invocation itself is
wrong (the offending flag is named).

Every flag value is parsed exactly; a rational arrives as "p/q" and a
direction as "dx/dy".  Nothing here rounds, so a pipeline of subcommands
(suspend, then first-return) reproduces its input byte for byte.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import io_json
from .attractor import build_attractor
from .disco import two_branch_family
from .errors import DirectionOutsideSector, FoliaError, NonStandardState, NotFound
from .gutierrez import (
    build_h,
    extract_iet,
    sample_orbit,
    sampled_pairs,
    verify_displacement,
)
from .iet import AffinePiece, Aiet, PartialAiet
from .interval import Interval
from .rational import parse_rat
from .rauzy import TwoBranchMap, classify
from .surface import (
    Direction,
    PlanarPoint,
    Transversal,
    first_return_on_transversal,
    suspend,
    trace_leaf,
    validate,
)
from .svg import render_svg
from .sweep import parse_grid, sweep_disco, sweep_to_doc

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2

_F = Fraction


class UsageError(Exception):
    """A well-formed parse of a badly used invocation."""

    def __init__(self, flag: str, message: str):
        super().__init__(f"argument {flag}: {message}")
        self.flag = flag


# -- exact flag parsing -----------------------------------------------------


def _rat_arg(text: str, flag: str) -> Fraction:
    try:
        return parse_rat(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(flag, f"{text!r} is not a rational: {exc}") from None


def _direction_arg(text: str, flag: str = "--dir") -> Direction:
    head, sep, tail = text.partition("/")
    if not sep:
        raise UsageError(flag, f"expected dx/dy, got {text!r}")
    try:
        dx, dy = int(head), int(tail)
    except ValueError:
        raise UsageError(flag, f"expected integer dx/dy, got {text!r}") from None
    if dx == 0 and dy == 0:
        raise UsageError(flag, "direction needs a nonzero vector")
    return Direction(dx, dy)


def _point_arg(text: str, flag: str) -> PlanarPoint:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(flag, f"expected x,y with rational parts, got {text!r}")
    return PlanarPoint(_rat_arg(parts[0], flag), _rat_arg(parts[1], flag))


def _transversal_arg(text: str, flag: str = "--transversal") -> Transversal:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(flag, f"expected POLY:X1,Y1:X2,Y2, got {text!r}")
    try:
        polygon = int(parts[0])
    except ValueError:
        raise UsageError(flag, f"polygon index must be an integer in {text!r}") from None
    try:
        return Transversal(
            polygon, _point_arg(parts[1], flag), _point_arg(parts[2], flag)
        )
    except ValueError as exc:
        raise UsageError(flag, str(exc)) from None


def _betas_arg(text: str, flag: str = "--betas") -> tuple[Fraction, ...]:
    return tuple(_rat_arg(part, flag) for part in text.split(","))


def _grid_arg(text: str, flag: str = "--grid") -> tuple[Fraction, Fraction, int]:
    try:
        return parse_grid(text)
    except ValueError as exc:
        raise UsageError(flag, str(exc)) from None


def _slope_of(d: Direction) -> Fraction:
    """Direction (dx, dy) as the slope of a leaf leaning dx per unit rise."""
    if d.dy == 0:
        raise DirectionOutsideSector(
            "horizontal directions have no finite slope; the return family "
            "needs dy != 0"
        )
    return _F(d.dx, d.dy)


@dataclass(frozen=True)
class CommandConfig:
    """One invocation, parsed exactly.  Field = flag; None = not given."""

    subcommand: str
    path: str | None = None
    out: str | None = None
    svg: str | None = None
    direction: Direction | None = None
    polygon: int = 0
    point: PlanarPoint | None = None
    transversals: tuple[Transversal, ...] = ()
    bottom: bool = False
    budget: int | None = None
    depth: int | None = None
    jobs: int = 1
    grid: tuple[Fraction, Fraction, int] | None = None
    disco: bool = False
    rotation: Fraction | None = None
    start: Fraction | None = None
    count: int | None = None
    betas: tuple[Fraction, ...] | None = None
    basepoint: Fraction | None = None
    density: Fraction | None = None
    tolerance: Fraction = _F(1, 1000)
    snap: bool = False
    tables: bool = False
    seed: int | None = None
    draws: int = 100

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "CommandConfig":
        fields: dict = {"subcommand": ns.subcommand}

        def take(name: str, parse=None, flag: str | None = None):
            value = getattr(ns, name, None)
            if value is None:
                return
            fields[name] = parse(value, flag) if parse else value

        take("path")
        take("out")
        take("svg")
        take("direction", _direction_arg, "--dir")
        take("polygon")
        take("point", _point_arg, "--point")
        take("budget")
        take("depth")
        take("jobs")
        take("grid", _grid_arg, "--grid")
        take("disco")
        take("bottom")
        take("rotation", _rat_arg, "--rotation")
        take("start", _rat_arg, "--start")
        take("count")
        take("betas", _betas_arg, "--betas")
        take("basepoint", _rat_arg, "--basepoint")
        take("density", _rat_arg, "--density")
        take("tolerance", _rat_arg, "--tolerance")
        take("snap")
        take("tables")
        take("seed")
        take("draws")
        if getattr(ns, "transversal", None):
            fields["transversals"] = tuple(
                _transversal_arg(text) for text in ns.transversal
            )
        return cls(**fields)


# -- subcommands ------------------------------------------------------------


def _load_surface(cfg: CommandConfig):
    if cfg.path is None:
        raise UsageError("--disco", "either --disco or a surface file is required")
    return io_json.surface_from_doc(io_json.load_doc(cfg.path))


def _bottom_transversals(surface) -> list[Transversal]:
    """The floor edges of polygon 0, left to right.

    On a suspension these are exactly the marked bottom pieces, so the
    vertical first return reads back the suspended exchange.
    """
    poly = surface.polygons[0]
    floor = min(v.y for v in poly.vertices)
    spans = []
    for i in range(poly.n):
        a, b = poly.edge(i)
        if a.y == floor and b.y == floor and b.x > a.x:
            spans.append(Transversal(0, a, b))
    if not spans:
        raise NotFound("polygon 0 has no left-to-right edges along its floor")
    spans.sort(key=lambda t: t.start.x)
    return spans


def _spans(cfg: CommandConfig, surface) -> list[Transversal]:
    if cfg.bottom and cfg.transversals:
        raise UsageError("--bottom", "give either --bottom or --transversal, not both")
    if cfg.bottom:
        return _bottom_transversals(surface)
    if not cfg.transversals:
        raise UsageError(
            "--transversal", "give at least one transversal, or --bottom"
        )
    return list(cfg.transversals)


def _as_two_branch(pieces, ambient) -> TwoBranchMap:
    if len(pieces) != 2:
        raise NonStandardState(
            f"return map has {len(pieces)} branches; a two-branch state is needed"
        )
    first, second = pieces
    try:
        return TwoBranchMap(ambient, second.domain.lo, first, second)
    except ValueError as exc:
        raise NonStandardState(str(exc)) from None


def _family_from(cfg: CommandConfig) -> TwoBranchMap:
    """The map a dynamics subcommand runs on: built-in family or a file."""
    if cfg.disco:
        if cfg.direction is None:
            raise UsageError("--dir", "required with --disco")
        return two_branch_family(_slope_of(cfg.direction))
    if cfg.path is None:
        raise UsageError("--disco", "either --disco or a map file is required")
    T = io_json.map_from_doc(io_json.load_doc(cfg.path))
    if isinstance(T, PartialAiet) and (
        T.undefined_intervals or T.undefined_points or T.unresolved
    ):
        raise NonStandardState("map is partial; a total two-branch map is needed")
    return _as_two_branch(tuple(T.pieces), T.ambient)


def cmd_validate(cfg: CommandConfig) -> tuple[str, int]:
    report = validate(_load_surface(cfg))
    text = io_json.dumps_canonical(io_json.validation_to_doc(report))
    return text, EXIT_OK if report.ok else EXIT_DOMAIN


def cmd_suspend(cfg: CommandConfig) -> tuple[str, int]:
    T = io_json.total_map_from_doc(io_json.load_doc(cfg.path))
    doc = io_json.surface_to_doc(suspend(T))
    return io_json.dumps_canonical(doc), EXIT_OK


def cmd_trace(cfg: CommandConfig) -> tuple[str, int]:
    surface = _load_surface(cfg)
    trace = trace_leaf(
        surface,
        cfg.polygon,
        cfg.point,
        cfg.direction,
        budget=cfg.budget if cfg.budget is not None else 1000,
    )
    if cfg.svg is not None:
        render_svg(surface, [trace], out_path=cfg.svg)
    return io_json.dumps_canonical(io_json.trace_to_doc(trace)), EXIT_OK


def cmd_first_return(cfg: CommandConfig) -> tuple[str, int]:
    surface = _load_surface(cfg)
    result = first_return_on_transversal(
        surface,
        _spans(cfg, surface),
        cfg.direction,
        budget=cfg.budget if cfg.budget is not None else 64,
    ).normalized()
    return io_json.dumps_canonical(io_json.map_to_doc(result)), EXIT_OK


def cmd_classify(cfg: CommandConfig) -> tuple[str, int]:
    if cfg.disco:
        m = two_branch_family(_slope_of(cfg.direction))
    else:
        surface = _load_surface(cfg)
        part = first_return_on_transversal(
            surface,
            _spans(cfg, surface),
            cfg.direction,
            budget=cfg.budget if cfg.budget is not None else 64,
        ).normalized()
        if part.undefined_intervals or part.undefined_points or part.unresolved:
            raise NonStandardState(
                "return map is partial; classification needs a total two-branch state"
            )
        m = _as_two_branch(tuple(part.pieces), part.ambient)
    report = classify(m, cfg.depth)
    return io_json.dumps_canonical(io_json.classification_to_doc(report)), EXIT_OK


def cmd_sweep(cfg: CommandConfig) -> tuple[str, int]:
    if not cfg.disco:
        raise UsageError("--disco", "sweep runs on the built-in family; pass --disco")
    lo, hi, count = cfg.grid
    result = sweep_disco(lo, hi, count, cfg.depth, jobs=cfg.jobs)
    print(
        f"swept {len(result.slopes)} directions in {result.elapsed:.2f}s",
        file=sys.stderr,
    )
    return io_json.dumps_canonical(sweep_to_doc(result)), EXIT_OK


def cmd_attractor(cfg: CommandConfig) -> tuple[str, int]:
    fam = _family_from(cfg)
    approx = build_attractor(fam, fam.hole, cfg.depth)
    return io_json.dumps_canonical(io_json.cantor_to_doc(approx)), EXIT_OK


def _rotation_aiet(a: Fraction) -> Aiet:
    pieces = [
        AffinePiece(Interval(_F(0), 1 - a), _F(1), a),
        AffinePiece(Interval(1 - a, _F(1)), _F(1), a - 1),
    ]
    return Aiet(pieces, Interval(_F(0), _F(1)))


def cmd_conjugate(cfg: CommandConfig) -> tuple[str, int]:
    if cfg.rotation is not None:
        if not (0 < cfg.rotation < 1):
            raise UsageError(
                "--rotation", f"rotation amount must be in (0, 1), got {cfg.rotation}"
            )
        T = _rotation_aiet(cfg.rotation)
    elif cfg.path is not None:
        T = io_json.map_from_doc(io_json.load_doc(cfg.path))
    else:
        raise UsageError("--rotation", "either --rotation or a map file is required")
    start = cfg.start if cfg.start is not None else T.ambient.lo
    sample = sample_orbit(T, start, cfg.count)
    approx = build_h(
        sample,
        betas=cfg.betas,
        basepoint=cfg.basepoint,
        density_threshold=cfg.density,
    )
    pairs = None
    if cfg.seed is not None:
        pairs = sampled_pairs(approx, T, seed=cfg.seed, draws=cfg.draws)
    report = verify_displacement(approx, T, pairs=pairs, tolerance=cfg.tolerance)
    extraction = extract_iet(
        approx, T, tolerance=cfg.tolerance, snap=cfg.snap, pairs=pairs, gate=report
    )
    doc = io_json.conjugacy_to_doc(
        sample, approx, report, extraction, include_tables=cfg.tables
    )
    return io_json.dumps_canonical(doc), EXIT_OK


def cmd_holonomy(cfg: CommandConfig) -> tuple[str, int]:
    surface = _load_surface(cfg)
    trace = trace_leaf(
        surface,
        cfg.polygon,
        cfg.point,
        cfg.direction,
        budget=cfg.budget if cfg.budget is not None else 1000,
    )
    return io_json.dumps_canonical(io_json.cylinder_to_doc(trace)), EXIT_OK


_HANDLERS = {
    "validate": cmd_validate,
    "suspend": cmd_suspend,
    "trace": cmd_trace,
    "first-return": cmd_first_return,
    "classify": cmd_classify,
    "sweep": cmd_sweep,
    "attractor": cmd_attractor,
    "conjugate": cmd_conjugate,
    "holonomy": cmd_holonomy,
}


# -- wiring -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="folia",
        description="Exact foliation dynamics on dilation surfaces.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, out: bool = True):
        if out:
            p.add_argument("--out", help="write the JSON artifact here instead of stdout")

    p = sub.add_parser("validate", help="check a surface file and report geometry")
    p.add_argument("path", help="surface JSON file")
    common(p)

    p = sub.add_parser("suspend", help="suspension surface of a bijective exchange")
    p.add_argument("path", help="map JSON file")
    common(p)

    p = sub.add_parser("trace", help="follow one leaf until it closes or stops")
    p.add_argument("path", help="surface JSON file")
    p.add_argument("--polygon", type=int, default=0, help="start polygon index")
    p.add_argument("--point", required=True, help="start point as x,y")
    p.add_argument("--dir", dest="direction", required=True, help="direction dx/dy")
    p.add_argument("--budget", type=int, help="max crossings (default 1000)")
    p.add_argument("--svg", help="also render the surface with this trace")
    common(p)

    p = sub.add_parser("first-return", help="first-return exchange on a transversal")
    p.add_argument("path", help="surface JSON file")
    p.add_argument("--dir", dest="direction", required=True, help="direction dx/dy")
    p.add_argument(
        "--transversal",
        action="append",
        help="segment POLY:X1,Y1:X2,Y2; repeat for a multi-piece cross-cut",
    )
    p.add_argument(
        "--bottom",
        action="store_true",
        help="use the floor edges of polygon 0 as the cross-cut",
    )
    p.add_argument("--budget", type=int, help="per-leaf crossing budget (default 64)")
    common(p)

    p = sub.add_parser("classify", help="run the induction on a two-branch return map")
    p.add_argument("path", nargs="?", help="surface JSON file (omit with --disco)")
    p.add_argument("--disco", action="store_true", help="use the built-in family")
    p.add_argument("--dir", dest="direction", required=True, help="direction dx/dy")
    p.add_argument("--depth", type=int, default=60, help="max induction steps")
    p.add_argument("--transversal", action="append", help="as in first-return")
    p.add_argument("--bottom", action="store_true", help="as in first-return")
    p.add_argument("--budget", type=int, help="tracing budget (default 64)")
    common(p)

    p = sub.add_parser("sweep", help="classify a whole grid of directions")
    p.add_argument("--disco", action="store_true", help="use the built-in family")
    p.add_argument("--grid", required=True, help="slope grid a/b:c/d:n")
    p.add_argument("--depth", type=int, default=60, help="max induction steps")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    common(p)

    p = sub.add_parser("attractor", help="gap structure of the attracting set")
    p.add_argument("path", nargs="?", help="two-branch map JSON (omit with --disco)")
    p.add_argument("--disco", action="store_true", help="use the built-in family")
    p.add_argument("--dir", dest="direction", help="direction dx/dy (with --disco)")
    p.add_argument("--depth", type=int, default=20, help="hole-image depth")
    common(p)

    p = sub.add_parser("conjugate", help="rebuild an exchange from one orbit")
    p.add_argument("path", nargs="?", help="map JSON file (omit with --rotation)")
    p.add_argument("--rotation", help="sample the rotation by this amount p/q")
    p.add_argument("--start", help="orbit start point (default: ambient left end)")
    p.add_argument("--count", type=int, required=True, help="orbit length")
    p.add_argument("--betas", help="comma-separated decreasing betas")
    p.add_argument("--basepoint", help="mass-coordinate origin (default: widest gap)")
    p.add_argument("--density", help="max allowed sample-free arc length")
    p.add_argument("--tolerance", help="displacement tolerance (default 1/1000)")
    p.add_argument("--snap", action="store_true", help="snap cuts to small rationals")
    p.add_argument("--tables", action="store_true", help="include the full h tables")
    p.add_argument("--seed", type=int, help="draw extra random verification pairs")
    p.add_argument("--draws", type=int, default=100, help="random pairs with --seed")
    common(p)

    p = sub.add_parser("holonomy", help="holonomy of one closed leaf")
    p.add_argument("path", help="surface JSON file")
    p.add_argument("--polygon", type=int, default=0, help="start polygon index")
    p.add_argument("--point", required=True, help="start point as x,y")
    p.add_argument("--dir", dest="direction", required=True, help="direction dx/dy")
    p.add_argument("--budget", type=int, help="max crossings (default 1000)")
    common(p)

    return parser


def _apply_memory_cap(text: str | None) -> None:
    """Best-effort RLIMIT_AS soft cap from FOLIA_MAX_MEM (bytes; K/M/G ok)."""
    if not text:
        return
    raw = text.strip()
    mult = 1
    if raw[-1:].upper() in ("K", "M", "G"):
        mult = {"K": 2**10, "M": 2**20, "G": 2**30}[raw[-1].upper()]
        raw = raw[:-1]
    try:
        cap = int(raw) * mult
    except ValueError:
        raise UsageError(
            "FOLIA_MAX_MEM", f"expected a byte count (K/M/G suffix allowed), got {text!r}"
        ) from None
    if cap <= 0:
        raise UsageError("FOLIA_MAX_MEM", f"cap must be positive, got {text!r}")
    try:
        import resource

        _, hard = resource.getrlimit(resource.RLIMIT_AS)
        resource.setrlimit(resource.RLIMIT_AS, (cap, hard))
    except (ImportError, OSError, ValueError):
        # a cap the platform refuses is a lost optimization, not an error
        print("FOLIA_MAX_MEM: cannot apply the cap here; continuing", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    try:
        _apply_memory_cap(os.environ.get("FOLIA_MAX_MEM"))
        ns = build_parser().parse_args(argv)
        cfg = CommandConfig.from_args(ns)
        text, code = _HANDLERS[cfg.subcommand](cfg)
        if cfg.out is not None:
            io_json.write_text(cfg.out, text)
        else:
            sys.stdout.write(text)
        return code
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FoliaError, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    raise SystemExit(main())
