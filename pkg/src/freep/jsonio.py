"""JSON readers and writers for spaces, subsets, molecules and maps."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .molecule import Molecule
from .space import (
    QuasiMetricSpace,
    SubsetSelection,
    WeightedTree,
    ensure_valid,
    from_points,
    leaves,
    skeleton_tree_space,
)


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc


def space_from_json(data: dict) -> tuple[QuasiMetricSpace, WeightedTree | None]:
    """Accepts a distance table ``{points, base, p, dist}``, labelled
    coordinates ``{coords, base, p, ord?, power?}`` or a tree ``{tree, p}``."""
    if "tree" in data:
        tree = WeightedTree.from_dict(data["tree"])
        return ensure_valid(skeleton_tree_space(tree, float(data.get("p", 1.0)))), tree
    if "coords" in data:
        coords = {str(k): v for k, v in data["coords"].items()}
        ord_ = data.get("ord", "inf")
        ord_ = np.inf if ord_ in ("inf", None) else float(ord_)
        space = from_points(coords, str(data["base"]), float(data.get("p", 1.0)), ord_,
                            float(data.get("power", 1.0)))
        return ensure_valid(space), None
    return ensure_valid(QuasiMetricSpace.from_dict(data)), None


def subset_from_json(space: QuasiMetricSpace, data, tree: WeightedTree | None = None) -> SubsetSelection:
    """``{"members": [...]}``, a bare list, or ``"leaves"`` for tree inputs."""
    if data == "leaves" or (isinstance(data, dict) and data.get("members") == "leaves"):
        if tree is None:
            raise ValueError("'leaves' needs a tree space")
        return SubsetSelection(space, leaves(tree))
    return SubsetSelection.from_dict(space, data)


def molecule_from_json(space: QuasiMetricSpace, data: dict) -> Molecule:
    return Molecule.from_dict(space, data)


def map_from_json(space: QuasiMetricSpace, data: dict) -> dict:
    """``{point: [coords]}`` -> label -> vector."""
    return {space.lookup(str(k)): np.atleast_1d(np.asarray(v, dtype=float)) for k, v in data.items()}


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def digest(*objs) -> str:
    """Short content hash of JSON-serialisable objects."""
    h = hashlib.sha256()
    for o in objs:
        h.update(canonical(o).encode())
    return h.hexdigest()[:16]


class Encoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (set, frozenset)):
            return sorted(map(str, o))
        return str(o)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, cls=Encoder)
