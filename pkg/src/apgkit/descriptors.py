"""JSON problem descriptors: {A: kind + data, b, U: representation + data, lip}.

Vectors and matrices are referenced by file (CSV or .bin, relative to the
descriptor) or inlined as value lists. Operator kinds cover what the
experiments need: dense files, row sampling, identity, the 2-D DCT, and
DCT row subsets.
"""

import json
import os

import numpy as np

from . import io as _io
from .errors import ConstructionError
from .operators import (AffineSubspace, LinearMap, dct2d_map, dense_map,
                        identity_map, row_sampling_map,
                        sampled_orthonormal_rows)
from .problem import AffineQuadraticProblem

__all__ = ["problem_from_json", "problem_to_json"]


def _load_vector(spec, base):
    if "values" in spec:
        return np.asarray(spec["values"], dtype=float)
    return _io.read_vector(os.path.join(base, spec["file"]))


def _load_matrix(spec, base):
    if "values" in spec:
        return np.asarray(spec["values"], dtype=float)
    return _io.read_matrix(os.path.join(base, spec["file"]))


def _load_map(spec, base) -> LinearMap:
    kind = spec["kind"]
    if kind == "dense":
        return dense_map(_load_matrix(spec, base))
    if kind == "row-sampling":
        return row_sampling_map(spec["total"], spec["indices"])
    if kind == "identity":
        return identity_map(spec["n"])
    if kind == "dct2d":
        return dct2d_map(spec["n"])
    if kind == "dct2d-rows":
        return sampled_orthonormal_rows(dct2d_map(spec["n"]), spec["indices"])
    raise ConstructionError(f"unknown operator kind {kind!r}")


def _load_subspace(spec, base) -> AffineSubspace:
    rep = spec["representation"]
    if rep == "hyperplane":
        return AffineSubspace.from_hyperplane(_load_vector(spec["normal"], base),
                                              spec["offset"])
    if rep == "orthonormal-rows":
        return AffineSubspace.from_orthonormal_rows(
            _load_map(spec["C"], base), _load_vector(spec["d"], base))
    if rep == "basis":
        return AffineSubspace.from_basis(_load_vector(spec["anchor"], base),
                                         _load_matrix(spec["basis"], base))
    if rep == "whole-space":
        return AffineSubspace.whole_space(spec["n"])
    raise ConstructionError(f"unknown subspace representation {rep!r}")


def problem_from_json(path) -> AffineQuadraticProblem:
    with open(path, encoding="utf-8") as fh:
        spec = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))
    A = _load_map(spec["A"], base)
    b = _load_vector(spec["b"], base)
    U = _load_subspace(spec["U"], base)
    lip = spec.get("lip", "auto")
    return AffineQuadraticProblem(A, b, U, lip=lip)


def _dump_map(A: LinearMap, directory, stem):
    if A.kind == "row-sampling":
        return {"kind": "row-sampling", "total": A.total,
                "indices": [int(i) for i in A.indices]}
    if A.kind == "dct2d":
        return {"kind": "dct2d", "n": A.image_side}
    if A.kind == "orthonormal-rows" and hasattr(A, "base") \
            and A.base.kind == "dct2d":
        return {"kind": "dct2d-rows", "n": A.base.image_side,
                "indices": [int(i) for i in A.indices]}
    fname = f"{stem}.csv"
    _io.write_matrix_csv(os.path.join(directory, fname), A.as_matrix())
    return {"kind": "dense", "file": fname}


def _dump_vector(v, directory, fname):
    _io.write_vector_csv(os.path.join(directory, fname), v)
    return {"file": fname}


def problem_to_json(p: AffineQuadraticProblem, directory, stem="problem") -> str:
    """Write the descriptor plus side files into a directory; return the JSON path."""
    os.makedirs(directory, exist_ok=True)
    spec = {
        "A": _dump_map(p.A, directory, f"{stem}_A"),
        "b": _dump_vector(p.b, directory, f"{stem}_b.csv"),
        "lip": p.lip,
    }
    U = p.U
    if U.representation == "hyperplane":
        spec["U"] = {"representation": "hyperplane",
                     "normal": {"values": [float(v) for v in U._payload["normal"]]},
                     "offset": U._payload["offset"]}
    elif U.representation == "orthonormal-rows":
        spec["U"] = {"representation": "orthonormal-rows",
                     "C": _dump_map(U._payload["C"], directory, f"{stem}_C"),
                     "d": _dump_vector(U._payload["d"], directory,
                                       f"{stem}_d.csv")}
    else:
        spec["U"] = {"representation": "basis",
                     "anchor": _dump_vector(U._payload["anchor"], directory,
                                            f"{stem}_anchor.csv"),
                     "basis": {"file": f"{stem}_basis.csv"}}
        _io.write_matrix_csv(os.path.join(directory, f"{stem}_basis.csv"),
                             U._payload["basis"])
    path = os.path.join(directory, f"{stem}.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec, fh, indent=1)
        fh.write("\n")
    return path
