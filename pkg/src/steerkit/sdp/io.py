"""JSON round trip for block programs (the solver's debug/fixture format).

Document layout::

    {
      "blocks": [{"size": 2, "cone": "psd"}, ...],
      "objective": [null | [[re, im], ...], ...],      # one per block
      "constraints": [
        {"coeffs": [{"block": 0, "matrix": [[re, im], ...]}, ...], "rhs": 1.0},
        ...
      ]
    }

Matrices are flattened row-major as ``n*n`` ``[re, im]`` pairs.
"""

import json

import numpy as np

from .problem import BlockSdpProblem, BlockSpec


def encode_matrix(m):
    m = np.asarray(m, dtype=complex)
    return [[float(z.real), float(z.imag)] for z in m.ravel()]


def decode_matrix(pairs, n):
    arr = np.asarray(pairs, dtype=float)
    if arr.shape != (n * n, 2):
        raise ValueError(f"expected {n * n} [re, im] pairs, got shape {arr.shape}")
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(n, n)


def encode_nested(m):
    """Nested ``[[[re, im], ...], ...]`` form used for assemblage output."""
    m = np.asarray(m, dtype=complex)
    if m.ndim == 0:
        return [float(m.real), float(m.imag)]
    return [encode_nested(row) for row in m]


def problem_to_dict(problem):
    objective, constraints = problem.to_operators()
    return {
        "blocks": [{"size": bl.size, "cone": bl.cone} for bl in problem.blocks],
        "objective": [None if c is None else encode_matrix(c) for c in objective],
        "constraints": [
            {"coeffs": [{"block": int(k), "matrix": encode_matrix(mat)} for k, mat in coeffs.items()], "rhs": float(rhs)}
            for coeffs, rhs in constraints
        ],
    }


def problem_from_dict(doc):
    blocks = [BlockSpec(int(b["size"]), b.get("cone", "psd")) for b in doc["blocks"]]
    objective = doc.get("objective")
    if objective is not None:
        if len(objective) != len(blocks):
            raise ValueError("objective must list one entry per block")
        objective = [None if c is None else decode_matrix(c, blocks[k].size) for k, c in enumerate(objective)]
    constraints = []
    for con in doc["constraints"]:
        coeffs = {}
        for term in con["coeffs"]:
            k = int(term["block"])
            if not 0 <= k < len(blocks):
                raise ValueError(f"constraint references unknown block {k}")
            coeffs[k] = decode_matrix(term["matrix"], blocks[k].size)
        constraints.append((coeffs, float(con["rhs"])))
    return BlockSdpProblem.from_operators(blocks, objective, constraints, tol=1e-9)


def load_problem(path):
    with open(path) as fh:
        doc = json.load(fh)
    return problem_from_dict(doc.get("problem", doc))


def dump_problem(problem, path, **extra):
    doc = {"problem": problem_to_dict(problem), **extra}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def solution_to_dict(sol, include_blocks=True):
    out = sol.summary()
    if include_blocks and sol.blocks is not None:
        out["blocks"] = [encode_matrix(b) for b in sol.blocks]
    return out
