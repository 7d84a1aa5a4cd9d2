"""Nagata covers, Whitney covers and the induced partition of unity.

Everything here runs in the metricized space ``(M, rho)`` with
``rho = d**p``, which is a genuine metric when ``d`` is a p-metric.  On a
finite space every subset is open, so the construction reduces to set
membership tests with the strict and non-strict inequalities kept exactly
as in the interval choices ``[R^j, R^(j+1))`` and ``[0, (R-1) R^(j-1))``.

All builders verify their output before returning it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .errors import AnchorError, ConstructionError
from .space import QuasiMetricSpace, SubsetSelection, label_str

RTOL = 1e-9
EXHAUSTIVE_CAP = 9


@dataclass(frozen=True)
class Check:
    """Outcome of one inequality family: ``worst`` is compared with ``bound``."""

    name: str
    ok: bool
    worst: float
    bound: float
    witness: object = None

    @property
    def margin(self) -> float:
        return self.bound - self.worst

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "ok": self.ok,
            "worst": self.worst,
            "bound": self.bound,
            "margin": self.margin,
            "witness": _jsonable(self.witness),
        }


def _jsonable(w):
    if w is None:
        return None
    if isinstance(w, (tuple, list)):
        return [_jsonable(v) for v in w]
    if isinstance(w, (int, float, str)):
        return w
    return label_str(w)


def _check(name, worst, bound, witness=None) -> Check:
    return Check(name, bool(worst <= bound * (1 + RTOL) + 1e-15), float(worst), float(bound), witness)


@dataclass(frozen=True)
class Report:
    checks: tuple

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def __bool__(self) -> bool:
        return self.ok

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed(self) -> list:
        return [c.name for c in self.checks if not c.ok]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": [c.to_dict() for c in self.checks]}


def metricize(space: QuasiMetricSpace) -> np.ndarray:
    """The metric table ``rho = d**p``."""
    return space.dist**space.p


# --------------------------------------------------------------------------
# Nagata covers


@dataclass(frozen=True)
class NagataCover:
    """Cover of N at scale ``s`` with Nagata parameters ``(n, lam)``."""

    s: float
    sets: tuple
    n: int
    lam: float
    strategy: str = ""

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "n": self.n,
            "lambda": self.lam,
            "strategy": self.strategy,
            "sets": [sorted(label_str(x) for x in K) for K in self.sets],
        }


def _metric_on(N: QuasiMetricSpace | SubsetSelection):
    if isinstance(N, SubsetSelection):
        N = N.space()
    return N.points, metricize(N)


def multiplicity(points, rho: np.ndarray, sets, s: float) -> tuple[int, tuple]:
    """Largest number of sets met by a subset of diameter at most ``s``.

    Subsets of diameter ``<= s`` are exactly the cliques of the graph joining
    points at distance ``<= s``; it suffices to test maximal cliques.
    Returns the multiplicity and a witnessing clique.
    """
    n = len(points)
    member = np.zeros((len(sets), n), dtype=bool)
    index = {x: i for i, x in enumerate(points)}
    for k, K in enumerate(sets):
        for x in K:
            member[k, index[x]] = True
    G = nx.Graph()
    G.add_nodes_from(range(n))
    close = np.argwhere(np.triu(rho <= s, k=1))
    G.add_edges_from(map(tuple, close))
    best, where = 0, ()
    for clique in nx.find_cliques(G):
        m = int(np.count_nonzero(member[:, clique].any(axis=1)))
        if m > best:
            best, where = m, tuple(sorted(clique))
    return best, tuple(points[i] for i in where)


def verify_nagata(N, cover: NagataCover, s: float | None = None, n: int | None = None,
                  lam: float | None = None) -> Report:
    """Check covering, the diameter bound and the multiplicity bound."""
    points, rho = _metric_on(N)
    s = cover.s if s is None else s
    n = cover.n if n is None else n
    lam = cover.lam if lam is None else lam
    index = {x: i for i, x in enumerate(points)}
    covered = set().union(*cover.sets) if cover.sets else set()
    missing = [x for x in points if x not in covered]
    empty = sum(1 for K in cover.sets if not K)
    worst_diam, where = 0.0, None
    for K in cover.sets:
        idx = [index[x] for x in K]
        dK = float(rho[np.ix_(idx, idx)].max()) if idx else 0.0
        if dK > worst_diam:
            worst_diam, where = dK, tuple(sorted(K, key=index.get))
    m, clique = multiplicity(points, rho, cover.sets, s)
    return Report((
        _check("covers", len(missing) + empty, 0, tuple(missing)),
        _check("diameter", worst_diam, lam * s, where),
        _check("multiplicity", m, n + 1, clique),
    ))


def _greedy(points, rho, s, lam):
    net = []
    for i in range(len(points)):
        if all(rho[i, c] > s for c in net):
            net.append(i)
    r = lam * s / 2
    return [frozenset(points[i] for i in np.flatnonzero(rho[c] <= r)) for c in net]


def _tree_bands(points, rho, s, root_index):
    r0 = rho[root_index]
    band = np.floor(r0 / (2 * s)).astype(int)
    sets = []
    for k in np.unique(band):
        idx = np.flatnonzero(band == k)
        G = nx.Graph()
        G.add_nodes_from(idx.tolist())
        for a in range(len(idx)):
            for b in range(a + 1, len(idx)):
                x, y = idx[a], idx[b]
                gromov = (r0[x] + r0[y] - rho[x, y]) / 2
                if gromov >= 2 * k * s - s:
                    G.add_edge(int(x), int(y))
        for comp in nx.connected_components(G):
            sets.append(frozenset(points[i] for i in sorted(comp)))
    return sets


def set_partitions(items):
    """All set partitions of ``items``; no external dependency needed."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]
        yield [[first]] + part


def _exhaustive(points, rho, s, n, lam):
    if len(points) > EXHAUSTIVE_CAP:
        return None
    parts = sorted(set_partitions(range(len(points))), key=len)
    for part in parts:
        sets = [frozenset(points[i] for i in block) for block in part]
        if all(rho[np.ix_(b, b)].max() <= lam * s * (1 + RTOL) for b in part):
            if multiplicity(points, rho, sets, s)[0] <= n + 1:
                return sets
    return None


DEFAULT_LAMBDA = {"singleton": 1.0, "whole": 1.0, "greedy": 2.0, "tree": 6.0, "exhaustive": 1.0}


def raw_family(N, s: float, strategy: str, lam: float | None = None, base=None) -> list:
    """The unverified family a strategy proposes at scale ``s``."""
    points, rho = _metric_on(N)
    lam = DEFAULT_LAMBDA.get(strategy, 1.0) if lam is None else lam
    if strategy == "singleton":
        return [frozenset([x]) for x in points]
    if strategy == "whole":
        return [frozenset(points)]
    if strategy == "greedy":
        return _greedy(points, rho, s, lam)
    if strategy == "tree":
        root = base
        if root is None:
            root = N.parent.base if isinstance(N, SubsetSelection) else N.base
        return _tree_bands(points, rho, s, points.index(root))
    raise ValueError(f"unknown Nagata strategy {strategy!r}")


def nagata_cover(N, s: float, n: int, lam: float, strategy: str = "greedy",
                 fallback: bool = True) -> NagataCover:
    """A verified Nagata cover of ``N`` at scale ``s``.

    Tries ``strategy`` and, if its family fails verification, an exhaustive
    search over set partitions of small ``N``.  Never returns an unverified
    family; raises :class:`ConstructionError` instead.
    """
    points, rho = _metric_on(N)
    if not points:
        raise ConstructionError("cannot cover an empty set")
    if not s > 0:
        raise ValueError("scale must be positive")
    tried = []
    if strategy != "exhaustive":
        cover = NagataCover(float(s), tuple(raw_family(N, s, strategy, lam)), n, lam, strategy)
        report = verify_nagata(N, cover)
        if report.ok:
            return cover
        tried.append((strategy, report.failed()))
    if strategy == "exhaustive" or fallback:
        sets = _exhaustive(points, rho, s, n, lam)
        if sets is not None:
            cover = NagataCover(float(s), tuple(sets), n, lam, "exhaustive")
            if verify_nagata(N, cover).ok:
                return cover
        tried.append(("exhaustive", "no partition found" if len(points) <= EXHAUSTIVE_CAP else "too large"))
    raise ConstructionError(f"no verified Nagata ({n}, {lam}) cover at scale {s}: {tried}")


@dataclass
class NagataProvider:
    """Supplies Nagata covers of N at a list of scales with common ``(n, lam)``.

    When ``n`` is None it is fitted as the largest multiplicity (minus one)
    the strategy attains over the requested scales.
    """

    strategy: str = "greedy"
    n: int | None = None
    lam: float | None = None
    fallback: bool = True

    def __call__(self, N, scales) -> list:
        lam = DEFAULT_LAMBDA.get(self.strategy, 1.0) if self.lam is None else self.lam
        n = self.n
        if n is None:
            if self.strategy == "exhaustive":
                raise ValueError("the exhaustive strategy needs an explicit n")
            points, rho = _metric_on(N)
            n = 0
            for s in scales:
                fam = raw_family(N, s, self.strategy, lam)
                n = max(n, multiplicity(points, rho, fam, s)[0] - 1)
        return [nagata_cover(N, s, n, lam, self.strategy, self.fallback) for s in scales]


# --------------------------------------------------------------------------
# Whitney covers


@dataclass(frozen=True)
class WhitneyCover:
    """Whitney cover of ``V = M \\ N`` in ``(M, d**p)``.

    ``sets`` are in construction order (scale index ``j`` ascending, then
    Nagata set index), labelled by ``labels[i] = (j, k)``.
    """

    space: QuasiMetricSpace
    subset: SubsetSelection
    sets: tuple
    labels: tuple
    params: tuple
    R: float | None = None
    n: int | None = None
    lam: float | None = None
    nagata: dict = field(default_factory=dict)

    @property
    def kappa(self) -> int:
        return self.params[0]

    def to_dict(self) -> dict:
        order = {x: i for i, x in enumerate(self.space.points)}
        return {
            "R": self.R,
            "n": self.n,
            "lambda": self.lam,
            "params": {k: v for k, v in zip(("kappa", "gamma", "beta", "alpha"), self.params)},
            "sets": [
                {"j": j, "k": k, "members": [label_str(x) for x in sorted(U, key=order.get)]}
                for (j, k), U in zip(self.labels, self.sets)
            ],
        }


def whitney_params(R: float, n: int, lam: float) -> tuple:
    """``(kappa, gamma, beta, alpha)`` attached to the construction."""
    a = R * R + R - 1
    return (3 * (n + 1), R * R / (R - 1), 2 * a * (lam + 1), a)


def scale(R: float, j: int) -> float:
    return 2 * (R * R + R - 1) * R ** (j - 1)


def _distances_to(rho, rows, cols):
    if len(cols) == 0:
        return np.full(len(rows), np.inf)
    return rho[np.ix_(rows, cols)].min(axis=1)


def whitney_build(M: QuasiMetricSpace, N: SubsetSelection, R: float,
                  provider=None) -> WhitneyCover:
    """Whitney cover of ``M \\ N`` from Nagata covers of N at scales ``s_j``.

    For each ``j`` in the finite range where annuli ``[R^j, R^(j+1))`` can be
    populated, and each Nagata set ``K`` at scale ``s_j``, the points of the
    annulus whose distance to N is attained on K form ``A_{j,K}``; its open
    ``(R-1) R^(j-1)``-neighbourhood is ``U_{j,K}``.  Empty sets are dropped.
    """
    if not R > 1:
        raise ValueError("R must exceed 1")
    if not M.same_as(N.parent):
        raise ValueError("subset does not belong to this space")
    provider = NagataProvider() if provider is None else provider
    rho = metricize(M)
    Vi = np.array([M.index(x) for x in N.complement], dtype=int)
    Ni = np.array([M.index(x) for x in N.ordered], dtype=int)
    if Vi.size == 0:
        raise ConstructionError("nothing to cover: the subset is the whole space")
    rN = _distances_to(rho, Vi, Ni)
    j_lo = math.floor(math.log(rN.min(), R)) - 1
    j_hi = math.ceil(math.log(rN.max(), R)) + 1
    js = list(range(j_lo, j_hi + 1))
    covers = provider(N, [scale(R, j) for j in js])
    n_fit = covers[0].n
    lam = covers[0].lam
    if any(c.n != n_fit or c.lam != lam for c in covers):
        raise ConstructionError("provider returned covers with different Nagata parameters")
    sets, labels = [], []
    for j, cover in zip(js, covers):
        lo, hi = R**j, R ** (j + 1)
        in_annulus = (rN >= lo) & (rN < hi)
        radius = (R - 1) * R ** (j - 1)
        for k, K in enumerate(cover.sets):
            Ki = np.array([M.index(x) for x in K], dtype=int)
            attained = _distances_to(rho, Vi, Ki) == rN
            A = Vi[in_annulus & attained]
            if A.size == 0:
                continue
            U = np.flatnonzero(rho[:, A].min(axis=1) < radius)
            if np.isin(U, Ni).any():
                raise ConstructionError(f"U_({j},{k}) meets N")
            sets.append(frozenset(M.points[i] for i in U))
            labels.append((j, k))
    wc = WhitneyCover(
        M, N, tuple(sets), tuple(labels), whitney_params(R, n_fit, lam), float(R), n_fit, lam,
        dict(zip(js, covers)),
    )
    report = verify_whitney(M, N, wc)
    if not report.ok:
        raise ConstructionError(f"constructed cover fails {report.failed()}", report)
    return wc


def verify_whitney(M: QuasiMetricSpace, N: SubsetSelection, cover, params=None) -> Report:
    """Exhaustive check of the four Whitney conditions (and the two claims
    about the Nagata data, when the cover carries it)."""
    sets = cover.sets if hasattr(cover, "sets") else tuple(cover)
    if params is None:
        params = cover.params
    kappa, gamma, beta, alpha = params
    rho = metricize(M)
    V = N.complement
    Vi = np.array([M.index(x) for x in V], dtype=int)
    Ni = np.array([M.index(x) for x in N.ordered], dtype=int)
    rN_all = _distances_to(rho, np.arange(len(M)), Ni)
    member = np.zeros((len(sets), len(M)), dtype=bool)
    for u, U in enumerate(sets):
        for x in U:
            member[u, M.index(x)] = True
    bad = [u for u in range(len(sets)) if not member[u].any() or member[u, Ni].any()]

    counts = member[:, Vi].sum(axis=0) if len(sets) else np.zeros(len(Vi), int)
    k = int(np.argmax(counts)) if len(Vi) else 0
    mult = _check("a: multiplicity", float(counts.max()) if len(Vi) else 0.0, kappa,
                  V[k] if len(Vi) else None)

    worst_b, where_b = 0.0, None
    for i, x in zip(Vi, V):
        best = np.inf
        for u in np.flatnonzero(member[:, i]):
            outside = np.flatnonzero(~member[u])
            best = min(best, rN_all[i] / rho[i, outside].min())
        if best > worst_b:
            worst_b, where_b = best, x
    cond_b = _check("b: neighbourhood", worst_b, gamma, where_b)

    worst_c, where_c, worst_d, where_d = 0.0, None, 0.0, None
    for u in range(len(sets)):
        idx = np.flatnonzero(member[u])
        if idx.size == 0:
            continue
        diam = float(rho[np.ix_(idx, idx)].max())
        lo, hi = rN_all[idx].min(), rN_all[idx].max()
        if lo > 0:
            if diam / lo > worst_c:
                worst_c, where_c = diam / lo, u
            if hi / lo > worst_d:
                worst_d, where_d = hi / lo, u
    checks = [
        _check("sets in V and nonempty", len(bad), 0, tuple(bad)),
        mult,
        cond_b,
        _check("c: diameter", worst_c, beta, where_c),
        _check("d: comparability", worst_d, alpha, where_d),
    ]
    if getattr(cover, "nagata", None):
        checks.extend(_claims(M, N, cover, rho, Vi, rN_all))
    return Report(tuple(checks))


def _claims(M, N, cover, rho, Vi, rN_all):
    """Attainment of the distance to N on some Nagata set within s/2, and the
    bound on how many Nagata sets come within s/2 of a point."""
    misses, worst_count, where = 0, 0, None
    for j, nc in sorted(cover.nagata.items()):
        s = nc.s
        dK = np.array([
            _distances_to(rho, Vi, np.array([M.index(x) for x in K], dtype=int)) for K in nc.sets
        ])
        rN = rN_all[Vi]
        near = 2 * rN < s
        attained = (dK == rN[None, :]).any(axis=0)
        misses += int(np.count_nonzero(near & ~attained))
        cnt = (dK < s / 2).sum(axis=0)
        if cnt.size and cnt.max() > worst_count:
            worst_count, where = int(cnt.max()), (j, M.points[Vi[int(np.argmax(cnt))]])
    n = cover.n if cover.n is not None else max(nc.n for nc in cover.nagata.values())
    return [
        _check("claim: distance attained on a Nagata set", misses, 0),
        _check("claim: Nagata sets near a point", worst_count, n + 1, where),
    ]


# --------------------------------------------------------------------------
# Partition of unity


def mu_constant(kappa: float, gamma: float) -> float:
    """``2 e ln 2 * gamma * ln(2 kappa)``."""
    return 2 * math.e * math.log(2) * gamma * math.log(2 * kappa)


@dataclass(frozen=True)
class PartitionOfUnity:
    """Functions ``phi[j, i]`` on the points ``V[i]``, one row per Whitney set.

    ``centers[j]`` is the point of ``U_j`` closest to N; ``anchors[j]`` is
    the point of N nearest to that center, used as the value point of
    ``U_j`` by the extension operator.
    """

    V: tuple
    sets: tuple
    labels: tuple
    phi: np.ndarray
    centers: tuple
    anchors: tuple
    mu: float
    nu: float
    q: float
    kappa: int
    gamma: float
    beta: float
    alpha: float
    space: QuasiMetricSpace = field(repr=False, default=None)
    subset: SubsetSelection = field(repr=False, default=None)

    def active(self, x) -> np.ndarray:
        """Row indices ``j`` with ``phi_j(x) > 0``."""
        return np.flatnonzero(self.phi[:, self.V.index(x)] > 0)

    def to_dict(self) -> dict:
        return {
            "V": [label_str(x) for x in self.V],
            "phi": self.phi.tolist(),
            "labels": [list(l) for l in self.labels],
            "centers": [label_str(x) for x in self.centers],
            "anchors": [label_str(x) for x in self.anchors],
            "constants": {
                "mu": self.mu,
                "nu": self.nu,
                "q": self.q,
                "kappa": self.kappa,
                "gamma": self.gamma,
                "beta": self.beta,
                "alpha": self.alpha,
            },
        }


def partition_of_unity(M: QuasiMetricSpace, N: SubsetSelection, cover, nu: float) -> PartitionOfUnity:
    """Normalized powers of the distance to the complement of each Whitney set.

    ``psi(t) = t**q`` with ``q = ln(2 kappa)``, ``phi_U = psi_U / sum psi``.
    """
    kappa, gamma, beta, alpha = cover.params
    if kappa < 2:
        raise ConstructionError(f"the multiplicity bound kappa must be at least 2, got {kappa}")
    if not nu > 2 + beta:
        raise ConstructionError(f"nu must exceed 2 + beta = {2 + beta}, got {nu}")
    rho = metricize(M)
    V = N.complement
    Vi = np.array([M.index(x) for x in V], dtype=int)
    Ni = np.array([M.index(x) for x in N.ordered], dtype=int)
    rN = _distances_to(rho, np.arange(len(M)), Ni)
    q = math.log(2 * kappa)
    J = len(cover.sets)
    psi = np.zeros((J, len(Vi)))
    centers, anchors = [], []
    for u, U in enumerate(cover.sets):
        idx = np.array(sorted(M.index(x) for x in U), dtype=int)
        inside = np.zeros(len(M), dtype=bool)
        inside[idx] = True
        to_out = rho[:, ~inside].min(axis=1)
        psi[u] = np.where(inside[Vi], to_out[Vi] ** q, 0.0)
        c = idx[int(np.argmin(rN[idx]))]
        diam = float(rho[np.ix_(idx, idx)].max())
        slack = (nu - 1) * rN[idx].min() - diam
        if rN[c] > slack:
            raise AnchorError(
                f"no anchor for set {cover.labels[u] if hasattr(cover, 'labels') else u} at nu={nu}; "
                "try a larger nu",
                None,
            )
        centers.append(M.points[c])
        anchors.append(M.points[Ni[int(np.argmin(rho[c, Ni]))]])
    total = psi.sum(axis=0)
    if np.any(total <= 0):
        raise ConstructionError("some point of V is not covered")
    pou = PartitionOfUnity(
        V=V,
        sets=tuple(cover.sets),
        labels=tuple(getattr(cover, "labels", range(J))),
        phi=psi / total,
        centers=tuple(centers),
        anchors=tuple(anchors),
        mu=mu_constant(kappa, gamma),
        nu=float(nu),
        q=q,
        kappa=kappa,
        gamma=gamma,
        beta=beta,
        alpha=alpha,
        space=M,
        subset=N,
    )
    report = verify_pou(pou, M, N)
    if not report.ok:
        raise ConstructionError(f"partition of unity fails {report.failed()}", report)
    return pou


def verify_pou(pou: PartitionOfUnity, M: QuasiMetricSpace, N: SubsetSelection) -> Report:
    """Exhaustive check of the partition-of-unity properties over V and V x V."""
    rho = metricize(M)
    Vi = np.array([M.index(x) for x in pou.V], dtype=int)
    Ni = np.array([M.index(x) for x in N.ordered], dtype=int)
    rN = _distances_to(rho, Vi, Ni)
    phi = pou.phi
    supp = phi > 0
    member = np.zeros_like(supp)
    for u, U in enumerate(pou.sets):
        member[u] = [x in U for x in pou.V]
    sums = np.abs(phi.sum(axis=0) - 1).max() if phi.size else 0.0

    counts = supp.sum(axis=0)
    k = int(np.argmax(counts)) if counts.size else 0
    b4 = _check("B4: active count", float(counts.max()) if counts.size else 0.0, pou.kappa,
                pou.V[k] if counts.size else None)

    worst2, where2 = 0.0, None
    for j in range(phi.shape[0]):
        idx = np.flatnonzero(supp[j])
        if idx.size == 0:
            continue
        a = M.index(pou.anchors[j])
        r = rho[Vi[idx], a].max() / (pou.nu * rN[idx].min())
        if r > worst2:
            worst2, where2 = r, j
    b2 = _check("B2: anchor distance", worst2, 1.0, where2)

    nV = len(Vi)
    R = rho[np.ix_(Vi, Vi)]
    off = ~np.eye(nV, dtype=bool)
    disjoint = ~((supp[:, :, None] & supp[:, None, :]).any(axis=0)) & off
    with np.errstate(divide="ignore", invalid="ignore"):
        r3 = np.where(disjoint, rN[:, None] / (pou.gamma * np.where(off, R, 1.0)), 0.0)
    i3 = np.unravel_index(int(np.argmax(r3)), r3.shape) if nV else (0, 0)
    b3 = _check("B3: separation", float(r3.max()) if nV else 0.0, 1.0,
                (pou.V[i3[0]], pou.V[i3[1]]) if nV else None)

    lhs = np.abs(phi[:, :, None] - phi[:, None, :]).sum(axis=0)
    rhs = pou.mu * R * (1 / rN[:, None] + 1 / rN[None, :])
    r1 = np.where(off, lhs / np.where(off, rhs, 1.0), 0.0)
    i1 = np.unravel_index(int(np.argmax(r1)), r1.shape) if nV else (0, 0)
    b1 = _check("B1: variation", float(r1.max()) if nV else 0.0, 1.0,
                (pou.V[i1[0]], pou.V[i1[1]]) if nV else None)

    return Report((
        _check("sum to one", float(sums), 0.0 + 1e-12 / (1 + RTOL)),
        _check("support equals set", float(np.count_nonzero(supp != member)), 0),
        _check("nonnegative", float(-phi.min()) if phi.size else 0.0, 0),
        b4,
        b2,
        b3,
        b1,
    ))
