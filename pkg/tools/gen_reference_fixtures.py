#!/usr/bin/env python3
"""Generate the committed reference optima for the weight SDP.

Runs an independent convex-optimization toolchain (cvxpy + CLARABEL) on the
five canonical assemblages and freezes the optima into
tests/fixtures/reference_weights.json. The in-repo interior-point solver is
validated against these numbers, so this script deliberately shares no code
with the package: assemblages, deterministic-strategy tables, and the SDP
are all restated here from scratch.

Usage:  python tools/gen_reference_fixtures.py
Requires cvxpy (not a package dependency; install separately).
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import cvxpy as cp
import numpy as np

I2 = np.eye(2, dtype=complex)
SIGMA = {
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[0, -1j], [1j, 0]], dtype=complex),
    3: np.array([[1, 0], [0, -1]], dtype=complex),
}

# Deterministic assignments D_gamma(a | basis position); row order
# (-1|1st, +1|1st, -1|2nd, ...), column order fixed by the fixture contract.
TABLE = {
    2: {
        (-1, 1): [0, 0, 1, 1],
        (1, 1): [1, 1, 0, 0],
        (-1, 2): [1, 0, 1, 0],
        (1, 2): [0, 1, 0, 1],
    },
    3: {
        (-1, 1): [0, 0, 0, 0, 1, 1, 1, 1],
        (1, 1): [1, 1, 1, 1, 0, 0, 0, 0],
        (-1, 2): [0, 0, 1, 1, 0, 0, 1, 1],
        (1, 2): [1, 1, 0, 0, 1, 1, 0, 0],
        (-1, 3): [0, 1, 0, 1, 0, 1, 0, 1],
        (1, 3): [1, 0, 1, 0, 1, 0, 1, 0],
    },
}

BASES = {2: (1, 3), 3: (1, 2, 3)}


def depolarized_members(v: float, bases) -> dict:
    """Members (1/2) * (I + a*v*sigma_i)/2 of the shrunk-eigenstate assemblage."""
    return {
        (i, a): 0.5 * (I2 + a * v * SIGMA[i]) / 2
        for i in bases
        for a in (1, -1)
    }


def _build_problem(members: dict, n_bases: int) -> cp.Problem:
    bases = BASES[n_bases]
    table = TABLE[n_bases]
    n_strategies = 2 ** n_bases
    rho = [cp.Variable((2, 2), hermitian=True) for _ in range(n_strategies)]
    constraints = [r >> 0 for r in rho]
    for pos, basis in enumerate(bases, start=1):
        for a in (1, -1):
            mixture = sum(
                table[(a, pos)][g] * rho[g] for g in range(n_strategies)
            )
            constraints.append(members[(basis, a)] - mixture >> 0)
    objective = cp.Maximize(cp.real(sum(cp.trace(r) for r in rho)))
    return cp.Problem(objective, constraints)


def solve_weight(members: dict, n_bases: int) -> float:
    """Solve with two independent packages and insist they agree."""
    primary = _build_problem(members, n_bases)
    for tol in (1e-11, 1e-10, 1e-9):
        primary.solve(
            solver=cp.CLARABEL, tol_gap_abs=tol, tol_gap_rel=tol, tol_feas=tol
        )
        if primary.status == "optimal":
            break
    if primary.status != "optimal":
        raise RuntimeError(f"CLARABEL failed with status {primary.status}")
    check = _build_problem(members, n_bases)
    check.solve(solver=cp.SCS, eps=1e-9, max_iters=200_000)
    if check.status != "optimal":
        raise RuntimeError(f"SCS cross-check failed with status {check.status}")
    if abs(float(primary.value) - float(check.value)) > 1e-7:
        raise RuntimeError(
            f"solver disagreement: CLARABEL {primary.value} vs SCS {check.value}"
        )
    return float(primary.value)


def matrix_json(m: np.ndarray) -> list:
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def main() -> int:
    cases = [
        ("identity-n2", 2, {"kind": "identity"}, 1.0),
        ("identity-n3", 3, {"kind": "identity"}, 1.0),
        ("depolarizing-0.6-n2", 2, {"kind": "depolarizing", "v": 0.6}, 0.6),
        ("depolarizing-sqrt-half-n2", 2, {"kind": "depolarizing", "v": 2 ** -0.5}, 2 ** -0.5),
        ("depolarizing-0.9-n2", 2, {"kind": "depolarizing", "v": 0.9}, 0.9),
    ]
    fixtures = []
    for name, n_bases, channel, v in cases:
        members = depolarized_members(v, BASES[n_bases])
        primal = solve_weight(members, n_bases)
        w_t = max(0.0, 1.0 - primal)
        fixtures.append({
            "name": name,
            "n_bases": n_bases,
            "bases": list(BASES[n_bases]),
            "channel": channel,
            "members": [
                {"i": i, "a": a, "matrix": matrix_json(members[(i, a)])}
                for i in BASES[n_bases]
                for a in (1, -1)
            ],
            "primal_value": primal,
            "w_t": w_t,
        })
        print(f"{name}: primal={primal:.12f} w_t={w_t:.12f}")
    payload = {
        "schema_version": 1,
        "generator": "tools/gen_reference_fixtures.py",
        "solver": f"cvxpy-{cp.__version__}/CLARABEL",
        "fixtures": fixtures,
    }
    out = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "reference_weights.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
