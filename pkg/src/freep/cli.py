"""Command-line entry point ``freep``."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import campaign as camp
from .constants import audit_all
from .errors import FreepError
from .extend import extension_report
from .freenorm import distortion, norm
from .grid import commuting_square_check, retraction_identity_check, tau_lip_check
from .jsonio import dumps, map_from_json, molecule_from_json, read_json, space_from_json, subset_from_json
from .molecule import Molecule
from .whitney import NagataProvider, partition_of_unity, verify_pou, verify_whitney, whitney_build


def _load_space(args):
    space, tree = space_from_json(read_json(args.space))
    if args.p is not None and args.p != space.p:
        space = space.with_exponent(args.p)
    return space, tree


def _load_subset(args, space, tree):
    if args.subset is None:
        raise ValueError("--subset is required")
    return subset_from_json(space, read_json(args.subset), tree)


def _emit(args, payload: dict, ok: bool = True) -> int:
    text = dumps(payload) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


def _provider(args) -> NagataProvider:
    n = args.n
    if args.nagata == "exhaustive" and n is None:
        n = 1
    return NagataProvider(args.nagata, n=n, lam=args.lam)


def cmd_norm(args) -> int:
    space, _ = _load_space(args)
    mu = molecule_from_json(space, read_json(args.molecule))
    kw = {}
    if args.method == "search":
        kw = {"restarts": args.trials or 20, "seed": args.seed}
    res = norm(mu, space.p, args.method, **kw)
    return _emit(args, res.to_dict())


def cmd_distortion(args) -> int:
    space, tree = _load_space(args)
    sub = _load_subset(args, space, tree)
    bound = camp.A_min().A_primitive ** (1 / space.p)
    rng = np.random.default_rng(args.seed)
    rows = []
    if args.molecule:
        mols = [molecule_from_json(space, read_json(args.molecule))]
    else:
        pts = [x for x in sub.ordered if x != space.base]
        mols = [Molecule(space, {x: float(v) for x, v in zip(pts, rng.normal(size=len(pts)))})
                for _ in range(args.trials or 10)]
    ok = True
    for i, mu in enumerate(mols):
        rep = distortion(space, sub, mu, space.p, bound)
        ok &= not rep.counterexample and rep.ratio >= 1 - 1e-9
        rows.append((i, rep))
    if args.format == "json":
        return _emit(args, {"bound": bound, "trials": [dict(r.to_dict(), index=i) for i, r in rows]}, ok)
    lines = ["index,norm_sub,norm_parent,ratio,bound"]
    lines += [f"{i},{r.norm_sub!r},{r.norm_parent!r},{r.ratio!r},{bound!r}" for i, r in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


def _whitney(args):
    space, tree = _load_space(args)
    sub = _load_subset(args, space, tree)
    wc = whitney_build(space, sub, args.R, _provider(args))
    return space, sub, wc


def cmd_whitney(args) -> int:
    space, sub, wc = _whitney(args)
    rep = verify_whitney(space, sub, wc)
    d = wc.to_dict()
    return _emit(args, {"cover": d["sets"], "params": d["params"], "report": rep.to_dict()}, rep.ok)


def _nu(args, wc) -> float:
    return args.nu if args.nu is not None else 2 + wc.params[2] + 1e-6


def cmd_pou(args) -> int:
    space, sub, wc = _whitney(args)
    pou = partition_of_unity(space, sub, wc, _nu(args, wc))
    rep = verify_pou(pou, space, sub)
    d = pou.to_dict()
    return _emit(args, {"phi": d["phi"], "V": d["V"], "labels": d["labels"], "anchors": d["anchors"],
                        "constants": d["constants"], "report": rep.to_dict()}, rep.ok)


def cmd_extend(args) -> int:
    space, sub, wc = _whitney(args)
    pou = partition_of_unity(space, sub, wc, _nu(args, wc))
    if args.f:
        f = map_from_json(space, read_json(args.f))
    else:
        f = camp.random_lipschitz_map(sub.space(), 1, np.random.default_rng(args.seed))
    rep = extension_report(f, pou)
    return _emit(args, rep.to_dict(), rep.ok)


def cmd_grid(args) -> int:
    q = args.q if args.q is not None else 1.0
    p = args.p if args.p is not None else 1.0
    rep = tau_lip_check(p, q, args.d, pairs=args.pairs, window=args.window, seed=args.seed)
    radius = args.window if args.window is not None else 2
    ident = retraction_identity_check(args.d, q, p, radius)
    square = commuting_square_check(p, q, q, args.d, seed=args.seed)
    out = dict(rep.to_dict(), retraction_identity=ident, commuting_square=square.to_dict())
    return _emit(args, out, rep.ok and ident and square.ok)


def cmd_constants(args) -> int:
    p = args.p if args.p is not None else 1.0
    return _emit(args, {"audit": [a.to_dict() for a in audit_all(p, args.q, args.d)]})


def cmd_campaign(args) -> int:
    cfg = camp.ExperimentConfig(
        suite=args.suite,
        family=args.family,
        seed=args.seed,
        trials=args.trials or 10,
        size=args.size,
        p=args.p if args.p is not None else 1.0,
        q=args.q if args.q is not None else 1.0,
        R=args.R,
        pairs=args.pairs,
        planted=args.planted,
        out=args.out,
    )
    rep = camp.run_campaign(cfg)
    if not args.out:
        sys.stdout.write(rep.csv_text() if args.format == "csv" else dumps(rep.to_dict()) + "\n")
    summary = rep.summary()
    if not summary["all_pass"]:
        sys.stderr.write("failed instance digests: " + " ".join(summary["failed_digests"]) + "\n")
    return 0 if rep.ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="freep", description="Exact computations in Lipschitz-free p-spaces.")
    sp = ap.add_subparsers(dest="command", required=True)

    def common(p, *extra):
        p.add_argument("--p", type=float, default=None, help="exponent in (0, 1]")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output path (prefix for campaign)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        if "space" in extra:
            p.add_argument("--space", required=True, help="space JSON")
        if "subset" in extra:
            p.add_argument("--subset", help="subset JSON or 'leaves'")
        if "whitney" in extra:
            p.add_argument("--R", type=float, default=2.0)
            p.add_argument("--nagata", choices=("greedy", "tree", "exhaustive", "singleton", "whole"),
                           default="greedy")
            p.add_argument("--n", type=int, default=None, help="Nagata multiplicity parameter")
            p.add_argument("--lam", type=float, default=None, help="Nagata diameter factor")
        return p

    p = common(sp.add_parser("norm", help="free-space norm of a molecule"), "space")
    p.add_argument("--molecule", required=True)
    p.add_argument("--method", choices=("exact", "search", "dual"), default="exact")
    p.add_argument("--trials", type=int, default=None, help="search restarts")
    p.set_defaults(func=cmd_norm)

    p = common(sp.add_parser("distortion", help="subset-to-parent norm ratios"), "space", "subset")
    p.add_argument("--molecule", default=None)
    p.add_argument("--trials", type=int, default=None)
    p.set_defaults(func=cmd_distortion, format="csv")

    p = common(sp.add_parser("whitney", help="build and verify a Whitney cover"), "space", "subset", "whitney")
    p.set_defaults(func=cmd_whitney)

    p = common(sp.add_parser("pou", help="partition of unity on a Whitney cover"), "space", "subset", "whitney")
    p.add_argument("--nu", type=float, default=None)
    p.set_defaults(func=cmd_pou)

    p = common(sp.add_parser("extend", help="extend a Lipschitz map and measure it"), "space", "subset", "whitney")
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--f", default=None, help="map JSON {point: [coords]}")
    p.set_defaults(func=cmd_extend)

    p = common(sp.add_parser("grid", help="Lipschitz check of the grid embedding"))
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--pairs", type=int, default=1000)
    p.add_argument("--window", type=int, default=None)
    p.set_defaults(func=cmd_grid)

    p = common(sp.add_parser("constants", help="audit of all closed-form constants"))
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--d", type=int, default=2)
    p.set_defaults(func=cmd_constants)

    p = common(sp.add_parser("campaign", help="seeded experiment campaign"))
    p.add_argument("--suite", choices=camp.SUITES, default="distortion")
    p.add_argument("--family", choices=camp.FAMILIES, default="random-metric")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--size", type=int, default=7)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--R", type=float, default=2.0)
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--planted", action="store_true", help="understate kappa to plant a Whitney violation")
    p.set_defaults(func=cmd_campaign)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FreepError, ValueError, OSError) as exc:
        sys.stderr.write(f"freep {args.command}: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
