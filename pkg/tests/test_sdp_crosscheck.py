"""Optional cross-validation of the in-repo solver against cvxpy.

Skipped when cvxpy is not installed (it is not a package dependency); the
committed fixtures in tests/fixtures/ carry the reference role in that
case. Here random assemblages - including rotated and noisy ones - are
solved both ways and the optima compared.
"""
import numpy as np
import pytest

cp = pytest.importorskip("cvxpy")

from tempsteer.assemblage import Assemblage, build_assemblage, strategy_table
from tempsteer.channels import make_channel
from tempsteer.sdp import build_weight_sdp, solve


def cvxpy_primal(asm):
    table = strategy_table(asm.n_bases)
    rho = [cp.Variable((2, 2), hermitian=True) for _ in range(table.n_strategies)]
    constraints = [r >> 0 for r in rho]
    for pos, basis in enumerate(asm.bases, start=1):
        for a in (1, -1):
            mixture = sum(
                int(table.matrix[table.row_index(a, pos), g]) * rho[g]
                for g in range(table.n_strategies)
            )
            constraints.append(asm.members[(basis, a)] - mixture >> 0)
    problem = cp.Problem(
        cp.Maximize(cp.real(sum(cp.trace(r) for r in rho))), constraints
    )
    problem.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10,
                  tol_feas=1e-10)
    assert problem.status in ("optimal", "optimal_inaccurate")
    return float(problem.value)


def haar_unitary(rng):
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_assemblages(count=8):
    rng = np.random.default_rng(20240811)
    out = []
    for n in range(count):
        n_bases = 2 if n % 2 == 0 else 3
        weights = rng.dirichlet(np.ones(4))
        channel = make_channel({
            "kind": "pauli",
            "px": weights[0], "py": weights[1], "pz": weights[2],
        })
        asm = build_assemblage(channel, n_bases)
        if n % 3 == 0:
            asm = asm.conjugate(haar_unitary(rng))
        out.append(asm)
    return out


@pytest.mark.parametrize("asm", random_assemblages(), ids=lambda a: f"n{a.n_bases}")
def test_random_assemblages_match_cvxpy(asm):
    ours = solve(build_weight_sdp(asm))
    assert ours.status == "optimal"
    reference = cvxpy_primal(asm)
    assert ours.primal_value == pytest.approx(reference, abs=2e-6)


def test_noisy_tomographic_assemblage_matches_cvxpy():
    # Members with tomography-like jitter: full rank, no facial reduction.
    rng = np.random.default_rng(5)
    base = build_assemblage(make_channel({"kind": "depolarizing", "v": 0.85}), 3)
    members = {}
    for (i, a), m in base.members.items():
        r = np.array([2 * m[0, 1].real, -2 * m[0, 1].imag,
                      (m[0, 0] - m[1, 1]).real]) / 0.5
        r = np.clip(r + rng.normal(scale=0.01, size=3), -0.99, 0.99)
        eye = np.eye(2, dtype=complex)
        paulis = [
            np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]),
            np.array([[1, 0], [0, -1]]),
        ]
        members[(i, a)] = 0.5 * (eye + sum(c * p for c, p in zip(r, paulis))) / 2
    # Restore exact consistency basis by basis.
    for i in (1, 2, 3):
        total = sum((members[(i, a)][0, 0] + members[(i, a)][1, 1]).real
                    for a in (1, -1))
        for a in (1, -1):
            members[(i, a)] = members[(i, a)] / total
    asm = Assemblage((1, 2, 3), members)
    ours = solve(build_weight_sdp(asm))
    assert ours.status == "optimal"
    assert ours.primal_value == pytest.approx(cvxpy_primal(asm), abs=2e-6)
