"""Seeded instance families and experiment campaigns with JSON/CSV reports."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .constants import A_min
from .errors import FreepError, SizeCapError
from .extend import extension_report, random_lipschitz_map
from .freenorm import EXACT_CAP, distortion, dual_lower_bound, norm_exact, norm_search
from .grid import tau_lip_check
from .jsonio import digest, dumps
from .molecule import Molecule
from .space import (
    QuasiMetricSpace,
    SubsetSelection,
    WeightedTree,
    ensure_valid,
    grid_space,
    leaves,
    skeleton_tree_space,
)
from .whitney import NagataProvider, partition_of_unity, verify_whitney, whitney_build

FAMILIES = ("random-metric", "snowflake", "tree-leaves", "grid")
SUITES = ("norm", "distortion", "whitney", "extension", "grid")
CSV_COLUMNS = ("instance_digest", "p", "q", "value_a", "value_b", "bound", "margin")


@dataclass(frozen=True)
class ExperimentConfig:
    suite: str = "distortion"
    family: str = "random-metric"
    seed: int = 0
    trials: int = 10
    size: int = 7
    p: float = 1.0
    q: float = 1.0
    R: float = 2.0
    nu_slack: float = 1e-6
    pairs: int = 100
    planted: bool = False
    out: str | None = None

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ValueError(f"unknown suite {self.suite!r}; choose from {SUITES}")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.suite in ("norm", "distortion") and self.size > EXACT_CAP:
            raise SizeCapError(f"certified norms need at most {EXACT_CAP} points, got size {self.size}")
        if self.size < 2:
            raise ValueError("instances need at least two points")
        if not 0 < self.p <= 1 or not 0 < self.q <= 1:
            raise ValueError("exponents must lie in (0, 1]")


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def random_metric(n: int, rng, extra: float = 0.4) -> np.ndarray:
    """Shortest-path metric of a random connected weighted graph."""
    W = np.zeros((n, n))
    for i in range(1, n):
        j = int(rng.integers(0, i))
        W[i, j] = W[j, i] = rng.uniform(0.5, 2.0)
    for i in range(n):
        for j in range(i + 1, n):
            if W[i, j] == 0 and rng.random() < extra:
                W[i, j] = W[j, i] = rng.uniform(0.5, 2.0)
    D = shortest_path(W, directed=False)
    upper = np.triu(D, 1)
    return upper + upper.T


def random_tree(n: int, rng) -> WeightedTree:
    edges = [(i, int(rng.integers(0, i)), float(rng.uniform(0.3, 2.0))) for i in range(1, n)]
    return WeightedTree(tuple(range(n)), tuple(edges), 0)


def _random_subset(space: QuasiMetricSpace, rng) -> SubsetSelection:
    others = list(space.nonbase)
    k = int(rng.integers(1, max(2, len(others))))
    picks = rng.choice(len(others), size=k, replace=False)
    return SubsetSelection(space, frozenset([space.base] + [others[i] for i in picks]))


def generate_instance(config: ExperimentConfig, index: int):
    """Deterministic ``(space, subset, molecule)`` for ``(config.seed, index)``.

    The molecule is supported on the subset.
    """
    rng = _rng(config.seed, index)
    n, p = config.size, config.p
    if config.family == "random-metric":
        rho = random_metric(n, rng)
        space = ensure_valid(QuasiMetricSpace(range(n), 0, rho ** (1 / p), p))
        subset = _random_subset(space, rng)
    elif config.family == "snowflake":
        X = rng.random((n, 2)) * 4
        s = float(rng.uniform(0.3, 1.0))
        D = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))
        upper = np.triu(D**s, 1)
        space = ensure_valid(QuasiMetricSpace(range(n), 0, (upper + upper.T) ** (1 / p), p))
        subset = _random_subset(space, rng)
    elif config.family == "tree-leaves":
        tree = random_tree(n, rng)
        space = ensure_valid(skeleton_tree_space(tree, p))
        subset = SubsetSelection(space, leaves(tree))
    else:
        dim = 1 if n < 9 else 2
        radius = max(1, (n - 1) // 2) if dim == 1 else 1
        space = grid_space(dim, p, radius=radius)
        subset = _random_subset(space, rng)
    coeffs = {x: float(rng.normal()) for x in subset.ordered if x != space.base}
    mol = Molecule(space, coeffs)
    return space, subset, mol


def instance_digest(space, subset, mol) -> str:
    return digest(space.to_dict(), subset.to_dict(), mol.to_dict())


def _record(index, dg, p, q, a, b, bound, margin, ok, extra=None):
    return {
        "index": index,
        "instance_digest": dg,
        "p": p,
        "q": q,
        "value_a": a,
        "value_b": b,
        "bound": bound,
        "margin": margin,
        "ok": bool(ok),
        "extra": extra or {},
    }


def _trial(config: ExperimentConfig, index: int, A_prim: float) -> dict:
    space, subset, mol = generate_instance(config, index)
    dg = instance_digest(space, subset, mol)
    p, q = config.p, config.q
    suite = config.suite
    if suite == "norm":
        a = norm_exact(mol, p).value
        if p == 1:
            b = dual_lower_bound(mol, 1.0)
            tol = 1e-7 * max(1.0, a)
            return _record(index, dg, p, q, a, b, tol, tol - abs(a - b), abs(a - b) <= tol)
        b = norm_search(mol, p, restarts=200, seed=index, support="any").value
        tol = 1e-7 * max(1.0, a)
        return _record(index, dg, p, q, a, b, tol, b - a + tol, b >= a - tol)
    if suite == "distortion":
        rep = distortion(space, subset, mol, p, bound=A_prim ** (1 / p))
        if p == 1:
            bound, low = 1 + 1e-7, 1 - 1e-7
        else:
            bound, low = A_prim ** (1 / p), 1 - 1e-9
        ok = low <= rep.ratio <= bound
        margin = min(bound - rep.ratio, rep.ratio - low)
        return _record(index, dg, p, q, rep.norm_sub, rep.norm_parent, bound, margin, ok,
                       {"ratio": rep.ratio})
    if not subset.complement:
        return _record(index, dg, p, q, 0.0, 0.0, 0.0, 0.0, True, {"skipped": "empty complement"})
    provider = NagataProvider("tree", n=1, lam=6.0) if config.family == "tree-leaves" else NagataProvider("greedy")
    wc = whitney_build(space, subset, config.R, provider)
    if suite == "whitney":
        params = wc.params
        if config.planted:
            counts = max(sum(1 for U in wc.sets if x in U) for x in subset.complement)
            params = (counts - 1,) + tuple(params[1:])
        rep = verify_whitney(space, subset, wc, params)
        rel = min((c.bound - c.worst) / c.bound if c.bound else -c.worst for c in rep.checks)
        mult = rep["a: multiplicity"]
        return _record(index, dg, p, q, mult.worst, float(len(wc.sets)), mult.bound, rel, rep.ok,
                       {"failed": rep.failed()})
    if suite == "extension":
        if wc.params[0] < 2:
            return _record(index, dg, p, q, 0.0, 0.0, 0.0, 0.0, True, {"skipped": "kappa < 2"})
        pou = partition_of_unity(space, subset, wc, nu=2 + wc.params[2] + config.nu_slack)
        f = random_lipschitz_map(subset.space(), 3, _rng(config.seed, 10_000 + index))
        rep = extension_report(f, pou)
        bound = rep.bound_D * rep.lip_f
        return _record(index, dg, p, q, rep.measured_lip, rep.lip_f, bound, bound - rep.measured_lip, rep.ok,
                       {k: v["worst_ratio"] for k, v in rep.cases.items()})
    raise ValueError(suite)


def _grid_trial(config: ExperimentConfig, index: int) -> dict:
    d = 1 if config.size < 4 else 2
    rep = tau_lip_check(config.p, config.q, d, pairs=config.pairs, seed=int(_rng(config.seed, index).integers(2**31)))
    dg = digest({"d": d, "p": config.p, "q": config.q, "seed": config.seed, "index": index})
    return _record(index, dg, config.p, config.q, rep.max_ratio, float(d), rep.bound,
                   rep.bound - rep.max_ratio, rep.ok)


@dataclass
class CampaignReport:
    config: ExperimentConfig
    records: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r["ok"] for r in self.records)

    def summary(self) -> dict:
        ratios = [r["value_a"] / r["value_b"] for r in self.records
                  if self.config.suite == "distortion" and r["value_b"]]
        margins = [r["margin"] for r in self.records]
        return {
            "trials": len(self.records),
            "passed": sum(r["ok"] for r in self.records),
            "all_pass": self.ok,
            "min_margin": min(margins) if margins else None,
            "max_ratio": max(ratios) if ratios else None,
            "failed_digests": [r["instance_digest"] for r in self.records if not r["ok"]],
        }

    def to_dict(self) -> dict:
        return {"config": asdict(self.config), "summary": self.summary(), "records": self.records}

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.records:
            w.writerow([r["instance_digest"]] + [repr(float(r[c])) for c in CSV_COLUMNS[1:]])
        return buf.getvalue()

    def write(self, prefix) -> tuple[Path, Path]:
        prefix = Path(prefix)
        js, cs = prefix.with_suffix(".json"), prefix.with_suffix(".csv")
        try:
            prefix.parent.mkdir(parents=True, exist_ok=True)
            js.write_text(dumps(self.to_dict()) + "\n")
            cs.write_text(self.csv_text())
        except OSError as exc:
            raise OSError(f"cannot write report to {js} / {cs}: {exc.strerror}") from exc
        return js, cs


def threads() -> int:
    try:
        return max(1, int(os.environ.get("FREEP_THREADS", "1")))
    except ValueError:
        return 1


def run_campaign(config: ExperimentConfig) -> CampaignReport:
    """Run ``config.trials`` seeded trials; records are sorted by index."""
    A_prim = A_min().A_primitive if config.suite == "distortion" else math.nan

    def one(i):
        if config.suite == "grid":
            return _grid_trial(config, i)
        try:
            return _trial(config, i, A_prim)
        except FreepError as exc:
            space, subset, mol = generate_instance(config, i)
            return _record(i, instance_digest(space, subset, mol), config.p, config.q,
                           math.nan, math.nan, math.nan, -math.inf, False, {"error": str(exc)})

    n = threads()
    if n > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            records = list(pool.map(one, range(config.trials)))
    else:
        records = [one(i) for i in range(config.trials)]
    report = CampaignReport(config, sorted(records, key=lambda r: r["index"]))
    if config.out:
        report.write(config.out)
    return report
