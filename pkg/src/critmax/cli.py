"""Command line interface: one JSON document per invocation on stdout (or --json-out)."""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from fractions import Fraction
from pathlib import Path

from .angles import Angle
from .boettcher import INFINITY, ZERO, BoettcherError, Undecidable
from .family import DomainError, FamilyContext
from .param import ParameterError, classify_parameter, trace_param_ray
from .puzzle import GraphError, GraphSpec, build_graph, detect_renormalization, locate_critical_value_piece
from .rays import RayError, land_ray, trace_ray
from .render import DYNAMICAL, PARAMETER, PALETTES, RasterSpec, overlay, render, write_ppm
from .special import SolverError, classify_ray_landing, find_misiurewicz, find_parabolic, satellite_cusp

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

KIND_NAMES = {"h_infinity": "HInfinity", "h_zero": "HZero", "capture": "Capture", "undecided": "Undecided"}

NUMERIC_ERRORS = (RayError, ParameterError, SolverError, GraphError, BoettcherError, Undecidable, ArithmeticError)


class UsageError(Exception):
    pass


# values such as -0.9i or -1.5e-3+2j are arguments, not options
NEGATIVE_VALUE = re.compile(r"^-(\d|\.\d|inf|nan)", re.IGNORECASE)


class Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._negative_number_matcher = NEGATIVE_VALUE

    def error(self, message):
        raise UsageError(message)


def complex_arg(text: str) -> complex:
    s = text.strip().replace(" ", "")
    if "," in s:
        re, im = s.split(",")
        return complex(float(re), float(im))
    try:
        return complex(s.replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}")


def angle_arg(text: str) -> Angle:
    try:
        return Angle.parse(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational angle: {text!r}")


def pixels_arg(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}")


def pole_arg(text: str) -> str:
    text = text.lower()
    aliases = {"0": ZERO, "zero": ZERO, "inf": INFINITY, "infinity": INFINITY}
    if text not in aliases:
        raise argparse.ArgumentTypeError(f"pole must be zero or infinity, got {text!r}")
    return aliases[text]


def cplx(z) -> list[float] | None:
    if z is None:
        return None
    z = complex(z)
    return [z.real, z.imag]


def _clean(obj):
    """Replace non-finite floats so the output is strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    if isinstance(obj, (Angle, Fraction)):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# subcommands


def _raster(args, plane) -> RasterSpec:
    return RasterSpec(plane, args.d, args.center, args.width, tuple(args.px), args.budget, args.palette,
                      a=getattr(args, "a", None), threads=args.threads)


def _ray_lines(args, plane):
    lines = []
    for item in args.ray or []:
        where, _, ang = item.partition(":")
        t = angle_arg(ang)
        if plane == PARAMETER:
            tr = trace_param_ray(args.d, pole_arg(where), t, 1e-8)
            lines.append(tr.points)
        else:
            tr = trace_ray(FamilyContext(args.d, args.a), pole_arg(where), t, 1e-8)
            lines.append(tr.points)
    return lines


def cmd_render(args, plane):
    spec = _raster(args, plane)
    img, kind = render(spec)
    lines = _ray_lines(args, plane)
    if plane == DYNAMICAL and args.graph is not None:
        g = build_graph(FamilyContext(args.d, args.a), GraphSpec(args.d, args.graph, 1, args.graph_depth))
        lines += [[z for _, z in arm.internal] + [z for _, z in arm.external] for arm in g.arms()]
    if lines:
        img = overlay(spec, img, lines)
    write_ppm(args.output, img)
    counts = {name: int((kind == k).sum()) for k, name in ((0, "undecided"), (1, "escape"), (2, "basin"))}
    out = {"image": str(args.output), "plane": plane, "d": args.d, "center": cplx(spec.center),
           "width": spec.width, "pixels": list(spec.pixels), "budget": spec.budget, "counts": counts}
    if plane == DYNAMICAL:
        out["a"] = cplx(spec.a)
    return out


def cmd_trace_ray(args):
    ctx = FamilyContext(args.d, args.a)
    tr = trace_ray(ctx, args.pole, args.angle, args.s_min, args.s_max, args.ratio)
    return tr.to_json()


def cmd_trace_param_ray(args):
    tr = trace_param_ray(args.d, args.locus, args.angle, args.s_min, args.s_max, args.sector, args.hint)
    return tr.to_json()


def cmd_land(args):
    rec = land_ray(FamilyContext(args.d, args.a), args.pole, args.angle)
    return {"angle": str(args.angle), "pole": args.pole, **rec.to_json()}


def cmd_classify(args):
    if args.angle is not None:
        return classify_ray_landing(args.d, args.angle, args.locus, args.sector).to_json()
    if args.a is None:
        raise UsageError("classify needs --a or --angle")
    out = classify_parameter(FamilyContext(args.d, args.a), args.budget).to_json()
    out["kind"] = KIND_NAMES[out["kind"]]
    return {"a": cplx(args.a), "d": args.d, **out}


def cmd_misiurewicz(args):
    return find_misiurewicz(args.d, args.l, args.p, args.seed).to_json()


def cmd_parabolic(args):
    return find_parabolic(args.d, args.p, args.seed_a, args.seed_z, args.multiplier).to_json()


def cmd_cusp(args):
    return satellite_cusp(args.d, args.angle, args.sector).to_json()


def cmd_puzzle(args):
    ctx = FamilyContext(args.d, args.a)
    graph = build_graph(ctx, GraphSpec(args.d, args.l, args.epsilon, args.depth))
    out = graph.to_json()
    if not args.arms:
        out.pop("arms")
    pieces = []
    for n in range(args.depth + 1):
        try:
            pieces.append(locate_critical_value_piece(ctx, graph, n).to_json())
        except GraphError as e:
            pieces.append({"depth": n, "error": str(e), **e.diagnostic})
            break
    out["critical_value_pieces"] = pieces
    return out


def cmd_renorm(args):
    rep = detect_renormalization(FamilyContext(args.d, args.a), args.l, args.epsilon, args.max_depth, args.budget)
    return rep.to_json()


def cmd_verify(args):
    from .acceptance import run

    results = run(args.only, args.data)
    for r in results:
        print(r.line(), file=sys.stderr)
    return {"passed": all(r.ok for r in results), "checks": [r.to_json() for r in results]}


# ---------------------------------------------------------------------------


def build_parser() -> Parser:
    p = Parser(prog="critmax", description="Cubic-like polynomial family z^(d-1)(z + d a/(d-1)).")
    p.add_argument("--config", type=Path, help="JSON file with default option values")
    p.add_argument("--json-out", type=Path, help="write the JSON result here instead of stdout")
    sub = p.add_subparsers(dest="command", parser_class=Parser)

    def add(name, fn, help):
        s = sub.add_parser(name, help=help)
        s.set_defaults(func=fn)
        s.add_argument("--d", type=int, default=3)
        return s

    for name, plane in (("render-param", PARAMETER), ("render-julia", DYNAMICAL)):
        s = add(name, lambda a, plane=plane: cmd_render(a, plane), f"render the {plane} plane as PPM")
        if plane == DYNAMICAL:
            s.add_argument("--a", type=complex_arg, required=True)
            s.add_argument("--graph", type=int, metavar="L", help="overlay the puzzle graph with this l")
            s.add_argument("--graph-depth", type=int, default=0)
        s.add_argument("--center", type=complex_arg, default=0j)
        s.add_argument("--width", type=float, default=4.0)
        s.add_argument("--px", type=pixels_arg, default=(800, 800))
        s.add_argument("--budget", type=int, default=200)
        s.add_argument("--palette", choices=sorted(PALETTES), default="classic")
        s.add_argument("--threads", type=int, help="thread hint (output does not depend on it)")
        s.add_argument("--ray", action="append", metavar="POLE:ANGLE", help="overlay a ray, e.g. infinity:0")
        s.add_argument("-o", "--output", type=Path, required=True)

    s = add("trace-ray", cmd_trace_ray, "trace a dynamical ray")
    s.add_argument("--a", type=complex_arg, required=True)
    s.add_argument("--pole", type=pole_arg, default=INFINITY)
    s.add_argument("--angle", type=angle_arg, required=True)
    s.add_argument("--s-min", type=float, default=1e-8)
    s.add_argument("--s-max", type=float)
    s.add_argument("--ratio", type=float, default=2.0)

    s = add("trace-param-ray", cmd_trace_param_ray, "trace a parameter ray")
    s.add_argument("--locus", type=pole_arg, default=INFINITY)
    s.add_argument("--angle", type=angle_arg, required=True)
    s.add_argument("--sector", choices=("id", "tau_sigma"), default="id")
    s.add_argument("--s-min", type=float, default=1e-10)
    s.add_argument("--s-max", type=float)
    s.add_argument("--hint", type=complex_arg)

    s = add("land", cmd_land, "land a rational dynamical ray")
    s.add_argument("--a", type=complex_arg, required=True)
    s.add_argument("--pole", type=pole_arg, default=INFINITY)
    s.add_argument("--angle", type=angle_arg, required=True)

    s = add("classify", cmd_classify, "classify a parameter, or a parameter ray's landing with --angle")
    s.add_argument("--a", type=complex_arg)
    s.add_argument("--budget", type=int, default=10_000)
    s.add_argument("--angle", type=angle_arg)
    s.add_argument("--locus", type=pole_arg, default=INFINITY)
    s.add_argument("--sector", choices=("id", "tau_sigma"), default="id")

    s = add("misiurewicz", cmd_misiurewicz, "solve for a Misiurewicz parameter")
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--seed", type=complex_arg, required=True)

    s = add("parabolic", cmd_parabolic, "solve for a parabolic parameter")
    s.add_argument("--p", type=int, default=1)
    s.add_argument("--seed-a", type=complex_arg, required=True)
    s.add_argument("--seed-z", type=complex_arg)
    s.add_argument("--multiplier", type=complex_arg, default=1 + 0j)

    s = add("cusp", cmd_cusp, "cusp of the satellite copy at an internal parameter angle")
    s.add_argument("--angle", type=angle_arg, required=True)
    s.add_argument("--sector", choices=("id", "tau_sigma"), default="id")

    s = add("puzzle", cmd_puzzle, "build the puzzle graph and locate the critical value")
    s.add_argument("--a", type=complex_arg, required=True)
    s.add_argument("--l", type=int, default=2)
    s.add_argument("--epsilon", type=int, choices=(1, -1), default=1)
    s.add_argument("--depth", type=int, default=1)
    s.add_argument("--arms", action="store_true", help="include ray samples")

    s = add("renorm", cmd_renorm, "detect renormalization")
    s.add_argument("--a", type=complex_arg, required=True)
    s.add_argument("--l", type=int, default=2)
    s.add_argument("--epsilon", type=int, choices=(1, -1), default=1)
    s.add_argument("--max-depth", type=int, default=5)
    s.add_argument("--budget", type=int, default=200)

    s = add("verify", cmd_verify, "run the acceptance checks")
    s.add_argument("--only", type=int, nargs="*", metavar="N")
    s.add_argument("--data", type=Path, help="directory holding the golden images")
    # required options may also come from the config file, so check them after merging
    p.required_options = {}
    for name, sp in sub.choices.items():
        p.required_options[name] = [a.dest for a in sp._actions if a.option_strings and a.required]
        for a in sp._actions:
            a.required = False
    return p


def _load_config(argv) -> dict:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return {}
    try:
        data = json.loads(known.config.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read config {known.config}: {e}")
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    return data


def _apply_config(args, config: dict, argv) -> None:
    """Config values fill options that were not given on the command line."""
    section = dict(config.get("defaults", {}))
    section.update(config.get(args.command, {}))
    given = {a.split("=")[0] for a in argv if a.startswith("--")}
    converters = {"a": complex_arg, "center": complex_arg, "seed": complex_arg, "seed_a": complex_arg,
                  "seed_z": complex_arg, "hint": complex_arg, "multiplier": complex_arg, "angle": angle_arg,
                  "px": pixels_arg, "pole": pole_arg, "locus": pole_arg, "output": Path}
    for key, value in section.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest) or "--" + dest.replace("_", "-") in given:
            continue
        conv = converters.get(dest)
        if conv is not None and value is not None:
            value = conv(value if isinstance(value, str) else str(value))
        setattr(args, dest, value)


def _emit(doc, path):
    text = json.dumps(_clean(doc), indent=2)
    if path is None:
        print(text)
    else:
        Path(path).write_text(text + "\n")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    json_out = None
    try:
        config = _load_config(argv)
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        _apply_config(args, config, argv)
        json_out = args.json_out
        missing = [d for d in parser.required_options[args.command] if getattr(args, d, None) is None]
        if missing:
            raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))
        doc = args.func(args)
    except UsageError as e:
        print(f"critmax: {e}", file=sys.stderr)
        return EXIT_USAGE
    except argparse.ArgumentTypeError as e:
        print(f"critmax: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, DomainError) as e:
        _emit({"error": str(e), "kind": "invalid input"}, json_out)
        return EXIT_USAGE
    except NUMERIC_ERRORS as e:
        _emit({"error": str(e), "kind": type(e).__name__, "diagnostic": getattr(e, "diagnostic", {})}, json_out)
        return EXIT_NUMERIC
    _emit(doc, json_out)
    if args.command == "verify" and not doc["passed"]:
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
