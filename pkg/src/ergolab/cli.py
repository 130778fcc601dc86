"""Batch experiment driver.

Subcommands: construct, correlate, weak-limit, mixing-scan, ledrappier,
cascade, props, repro.  Structured results are JSON (rationals as "p/q"
strings), scan grids can be CSV.  Identical configuration and seed give
byte-identical output.  Exit codes: 0 ok, 2 configuration error,
3 precondition error, 4 budget error (1 for a failed repro run).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import re
import sys
from fractions import Fraction

from . import acceptance, cascade, ledrappier, props, rank_one
from .errors import BudgetExceeded, ConfigError, ErgolabError

Q = Fraction


def _parse_fraction(text: str) -> Fraction:
    text = text.strip().strip('"').strip("'")
    if re.fullmatch(r"-?\d+(/\d+)?", text) is None:
        raise ConfigError(f"not an exact rational: {text!r} (floats rejected)")
    return Fraction(text)


def frac_str(x: Fraction) -> str:
    return str(Fraction(x))


def _load_construction(args) -> rank_one.Construction:
    if getattr(args, "recipe", None):
        return rank_one.preset("custom", path=args.recipe)
    if getattr(args, "preset", None):
        return rank_one.preset(args.preset, args.stages)
    raise ConfigError("need --preset or --recipe")


def _load_sets(path: str) -> list[rank_one.LevelSet]:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ConfigError("sets file must be a JSON list")
    out = []
    for entry in data:
        try:
            out.append(
                rank_one.LevelSet.from_levels(int(entry["stage"]), entry["levels"])
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad set entry {entry!r}: {exc}")
    return out


def _emit(args, payload: dict, csv_rows=None, csv_header=None) -> None:
    if args.format == "csv":
        if csv_rows is None:
            raise ConfigError("this command has no CSV form")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if csv_header:
            writer.writerow(csv_header)
        writer.writerows(csv_rows)
        text = buf.getvalue()
    else:
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------

def cmd_construct(args) -> int:
    c = _load_construction(args)
    depth = args.depth or c.top_stage
    view = rank_one.build(c, depth)
    table = [
        {
            "stage": j,
            "height": c.height(j),
            "width": frac_str(c.width(j)),
            "tower_mass": frac_str(c.tower_mass(j)),
        }
        for j in range(1, depth + 1)
    ]
    payload = {
        "depth": view.stage,
        "total_mass": frac_str(view.total_mass),
        "stages": table,
    }
    rows = [
        (r["stage"], r["height"], r["width"], r["tower_mass"]) for r in table
    ]
    _emit(args, payload, rows, ("stage", "height", "width", "tower_mass"))
    return 0


def _parse_shift_rows(text: str) -> list[list[int]]:
    rows = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        try:
            rows.append([int(x) for x in part.split(",")])
        except ValueError:
            raise ConfigError(f"bad shift list {part!r}")
    if not rows:
        raise ConfigError("no shifts given")
    return rows


def cmd_correlate(args) -> int:
    c = _load_construction(args)
    sets = _load_sets(args.sets)
    shift_rows = _parse_shift_rows(args.shifts)
    tol = _parse_fraction(args.tolerance) if args.tolerance else None
    results = []
    for shifts in shift_rows:
        if len(shifts) != len(sets):
            raise ConfigError(
                f"shift row {shifts} does not match {len(sets)} sets"
            )
        bound = rank_one.correlation(
            c,
            sets,
            shifts,
            eval_stage=args.stage,
            tol=tol,
            budget=args.budget_levels,
        )
        results.append((shifts, bound))
    payload = {
        "rows": [
            {
                "shifts": shifts,
                "lower": frac_str(b.lower),
                "upper": frac_str(b.upper),
                "eval_stage": b.eval_stage,
            }
            for shifts, b in results
        ]
    }
    rows = [
        tuple(shifts) + (frac_str(b.lower), frac_str(b.upper), b.eval_stage)
        for shifts, b in results
    ]
    header = tuple(f"k{i}" for i in range(len(sets))) + (
        "lower",
        "upper",
        "eval_stage",
    )
    _emit(args, payload, rows, header)
    return 0


def cmd_weak_limit(args) -> int:
    c = _load_construction(args)
    family = rank_one.single_level_pairs(c, args.family_stage)
    mix = []
    if args.mix:
        for part in args.mix.split(","):
            power, weight = part.split(":")
            mix.append((int(power), _parse_fraction(weight)))
    theta = _parse_fraction(args.theta) if args.theta else Q(0)
    results = []
    if args.js:
        lo, hi = (int(x) for x in args.js.split(".."))
        for j in range(lo, hi + 1):
            ks = [c.height(j) - 1, c.height(j), c.height(j) + 1]
            scan = rank_one.scan_weak_limit(
                c, ks, mix, theta, family,
                eval_stage=args.stage, budget=args.budget_levels,
            )
            best_k, best = min(scan, key=lambda t: t[1].deviation)
            results.append(
                {
                    "j": j,
                    "candidates": {
                        str(k): frac_str(r.deviation) for k, r in scan
                    },
                    "best_k": best_k,
                    "deviation": frac_str(best.deviation),
                    "width": frac_str(best.width),
                    "eval_stage": best.eval_stage,
                }
            )
    else:
        for k in _parse_shift_rows(args.ks)[0]:
            res = rank_one.weak_limit_deviation(
                c, k, mix, theta, family,
                eval_stage=args.stage, budget=args.budget_levels,
            )
            results.append(
                {
                    "k": k,
                    "deviation": frac_str(res.deviation),
                    "width": frac_str(res.width),
                    "eval_stage": res.eval_stage,
                }
            )
    _emit(args, {"scan": results})
    return 0


def cmd_mixing_scan(args) -> int:
    c = _load_construction(args)
    sets = _load_sets(args.sets)
    if len(sets) != 3:
        raise ConfigError("mixing-scan needs exactly three sets")
    eps = _parse_fraction(args.eps)
    res = rank_one.mixing_scan(
        c, *sets, h=args.h, eps=eps,
        eval_stage=args.stage, budget=args.budget_levels,
    )
    payload = {
        "d": frac_str(res.d),
        "offenders": [list(p) for p in res.offenders],
        "eval_stage": res.eval_stage,
        "pairs_scanned": res.pairs_scanned,
    }
    rows = list(res.offenders)
    _emit(args, payload, rows, ("z", "w"))
    return 0


_SITE_RE = re.compile(r"\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)")


def _parse_site(text: str):
    m = _SITE_RE.fullmatch(text.strip())
    if not m:
        raise ConfigError(f"bad site {text!r}; expected (x,y)")
    return (int(m.group(1)), int(m.group(2)))


def cmd_ledrappier(args) -> int:
    sys_ = ledrappier.build_system(args.n)
    constraints = []
    for part in args.cyl.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ConfigError(f"bad constraint {part!r}; expected (x,y)=bit")
        site_text, bit_text = part.rsplit("=", 1)
        constraints.append((_parse_site(site_text), int(bit_text)))
    cyl = ledrappier.Cylinder(tuple(constraints))
    shifts = [(0, 0)]
    if args.shifts:
        shifts += [_parse_site(p) for p in args.shifts.split(";") if p.strip()]
    joint = ledrappier.shifted_correlation(sys_, cyl, shifts)
    product = Q(1)
    for vec in shifts:
        product *= ledrappier.cylinder_measure(sys_, cyl.shifted(vec))
    sites = sorted(
        {
            (site[0] + vec[0], site[1] + vec[1])
            for vec in shifts
            for site, _ in cyl.constraints
        }
    )
    deps = (
        ledrappier.dependency_scan(sys_, [sites])[0] if len(sites) <= 8 else []
    )
    payload = {
        "measure": frac_str(joint),
        "product": frac_str(product),
        "dependencies": [[list(s) for s in dep] for dep in deps],
    }
    _emit(args, payload)
    return 0


def cmd_cascade(args) -> int:
    kind, _, base_arg = args.base.partition(":")
    if kind != "odometer":
        raise ConfigError(f"unknown base {args.base!r}; use odometer:<b>")
    try:
        b = int(base_arg)
    except ValueError:
        raise ConfigError(f"bad odometer base {base_arg!r}")
    base = cascade.Odometer.b_adic(b, args.depth)
    values = _load_cocycle(args.cocycle)
    f = cascade.CocycleFunction(args.cocycle_stage, values)
    rng = random.Random(args.seed)
    sample = base.sample_positions(args.samples, rng)
    res = cascade.recurrence_statistic(
        base, f, sample, args.length, args.min_returns
    )
    payload = {
        "fraction": frac_str(res.fraction),
        "included": res.included,
        "excluded": res.excluded,
        "per_point": [
            {"position": p, "zero_returns": z} for p, z in res.per_point
        ],
    }
    _emit(args, payload)
    return 0


def _load_cocycle(path: str) -> tuple[int, ...]:
    rows = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#") or line.startswith("level"):
                continue
            try:
                level_text, value_text = line.split(",")
                rows[int(level_text)] = int(value_text)
            except ValueError:
                raise ConfigError(f"bad cocycle row {line!r}")
    if sorted(rows) != list(range(len(rows))):
        raise ConfigError("cocycle rows must cover levels 0..h-1")
    return tuple(rows[i] for i in range(len(rows)))


def cmd_asym5_asymmetry(args) -> int:
    lo, hi = (int(x) for x in args.stages_range.split(".."))
    offset = args.stage_offset
    rows = []
    for i in range(lo, hi + 1):
        j = i + offset
        c = rank_one.preset("asym5", j - 1)
        if c.height(j) > args.budget_levels:
            raise BudgetExceeded(
                f"stage {j} has {c.height(j)} levels, budget "
                f"{args.budget_levels}; raise --budget-levels"
            )
        n = c.height(i) + 1
        a_fwd = rank_one.LevelSet.full(c, 4)
        a_bwd = rank_one.LevelSet.from_levels(4, range(0, 88, 3))
        fwd = rank_one.correlation(
            c, [a_fwd] * 3, [0, n, 3 * n], eval_stage=j
        )
        bwd = rank_one.correlation(
            c, [a_bwd] * 3, [0, -n, -3 * n], eval_stage=j
        )
        mu = rank_one.measure(c, a_fwd)
        rows.append(
            {
                "i": i,
                "n": n,
                "eval_stage": j,
                "forward_ratio_lower": frac_str(fwd.lower / mu),
                "forward_ratio_upper": frac_str(min(fwd.upper / mu, Q(1))),
                "backward_lower": frac_str(bwd.lower),
                "backward_upper": frac_str(bwd.upper),
            }
        )
    csv_rows = [
        (
            r["i"], r["n"], r["eval_stage"],
            r["forward_ratio_lower"], r["forward_ratio_upper"],
            r["backward_lower"], r["backward_upper"],
        )
        for r in rows
    ]
    _emit(
        args,
        {"table": rows},
        csv_rows,
        ("i", "n", "eval_stage", "fwd_ratio_lower", "fwd_ratio_upper",
         "bwd_lower", "bwd_upper"),
    )
    return 0


def cmd_props(args) -> int:
    result = props.run_props(args.seed)
    _emit(args, result)
    return 0 if result["all_pass"] else 3


def cmd_repro(args) -> int:
    results = acceptance.run_all(verbose=True)
    ok = all(r.passed for r in results)
    if args.out:
        payload = {
            "criteria": [
                {
                    "number": r.number,
                    "name": r.name,
                    "passed": r.passed,
                    "elapsed": round(r.elapsed, 3),
                }
                for r in results
            ],
            "all_pass": ok,
        }
        with open(args.out, "w") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="ergolab", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, recipe=True):
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--out", help="output file (default stdout)")
        if recipe:
            p.add_argument("--preset", help="chacon | asym5 | staircase")
            p.add_argument("--recipe", help="construction file")
            p.add_argument(
                "--stages", type=int, default=12, help="preset recipe length"
            )
            p.add_argument(
                "--budget-levels",
                type=int,
                default=rank_one.DEFAULT_LEVEL_BUDGET,
            )

    p = sub.add_parser("construct", help="realize a construction")
    common(p)
    p.add_argument("--depth", type=int, help="stage to realize (default top)")
    p.set_defaults(fn=cmd_construct)

    p = sub.add_parser("correlate", help="certified shifted correlations")
    common(p)
    p.add_argument("--sets", required=True, help="JSON file of level sets")
    p.add_argument("--shifts", required=True, help='"k0,k1[,...][;row2...]"')
    p.add_argument("--stage", type=int, help="evaluation stage")
    p.add_argument("--tolerance", help="auto-refine until width below this")
    p.set_defaults(fn=cmd_correlate)

    p = sub.add_parser("weak-limit", help="deviation from a mixture operator")
    common(p)
    p.add_argument("--js", help='scan heights h_j for j in "lo..hi"')
    p.add_argument("--ks", help="explicit comma-separated powers")
    p.add_argument("--family-stage", type=int, default=5)
    p.add_argument("--mix", default="0:1/2,1:1/2", help='"power:weight,..."')
    p.add_argument("--theta", help="weight of the mean projection")
    p.add_argument("--stage", type=int, help="evaluation stage")
    p.set_defaults(fn=cmd_weak_limit)

    p = sub.add_parser("mixing-scan", help="triple-correlation deviation scan")
    common(p)
    p.add_argument("--sets", required=True, help="JSON file with three sets")
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--eps", required=True)
    p.add_argument("--stage", type=int)
    p.set_defaults(fn=cmd_mixing_scan)

    p = sub.add_parser("ledrappier", help="lattice cylinder measures")
    common(p, recipe=False)
    p.add_argument("--n", type=int, default=16, help="site window bound")
    p.add_argument("--cyl", required=True, help='"(x,y)=bit;..."')
    p.add_argument("--shifts", help='"(dx,dy);..." translates of the cylinder')
    p.set_defaults(fn=cmd_ledrappier)

    p = sub.add_parser("cascade", help="zero-sum recurrence statistics")
    common(p, recipe=False)
    p.add_argument("--base", default="odometer:2")
    p.add_argument("--depth", type=int, default=18)
    p.add_argument("--cocycle", required=True, help="CSV of level,value rows")
    p.add_argument("--cocycle-stage", type=int, required=True)
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--length", type=int, default=2**14)
    p.add_argument("--min-returns", type=int, default=10)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(fn=cmd_cascade)

    p = sub.add_parser(
        "asym5-asymmetry",
        help="forward vs reversed triple recurrence of the asym5 preset",
    )
    common(p, recipe=False)
    p.add_argument("--stages", dest="stages_range", default="6..9",
                   help='representation stages "lo..hi"')
    p.add_argument("--stage-offset", type=int, default=4,
                   help="evaluate at stage i + offset")
    p.add_argument("--budget-levels", type=int,
                   default=rank_one.DEFAULT_LEVEL_BUDGET)
    p.set_defaults(fn=cmd_asym5_asymmetry)

    p = sub.add_parser("props", help="run the module property suites")
    common(p, recipe=False)
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(fn=cmd_props)

    p = sub.add_parser("repro", help="run the acceptance suite end to end")
    p.add_argument("--out", help="also write a JSON summary here")
    p.set_defaults(fn=cmd_repro)

    return top


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        _error(exc)
        return 2
    except BudgetExceeded as exc:
        _error(exc)
        return 4
    except (ErgolabError, FileNotFoundError, ValueError) as exc:
        _error(exc)
        return 3


def _error(exc) -> None:
    sys.stdout.write(
        json.dumps(
            {"error": type(exc).__name__, "message": str(exc)}, sort_keys=True
        )
        + "\n"
    )


if __name__ == "__main__":
    sys.exit(main())
