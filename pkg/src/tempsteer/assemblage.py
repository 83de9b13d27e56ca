"""Assemblages: the conditional states Bob holds, indexed by Alice's
basis choice and outcome.

An assemblage maps (i, a) to a subnormalized 2x2 PSD matrix whose trace is
P(a | A_i); consistency demands tr sum_a rho_{a|A_i} = 1 for every basis.
This module constructs assemblages from channels (members are
prior * evolved eigenstate), from deterministic-strategy mixtures (the
local-hidden-state form, unsteerable by construction), and from tomography
counts via linear inversion with a closed-form PSD projection.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channels import Channel
from .metrics import resolve_bases
from .qubit import (
    HERM_TOL,
    IDENTITY,
    OUTCOMES,
    PSD_TOL,
    ValidationError,
    hermitian_eigvals,
    mub_ket,
    pauli,
)
from .serialize import matrix_from_json, matrix_to_json

CONSISTENCY_TOL = 1e-8

# Deterministic response functions D_gamma(a | A_position): one row per
# (outcome, basis position) in the order (-1|1st, +1|1st, -1|2nd, ...),
# one column per strategy gamma. Column order is part of the fixture
# contract, so both tables are written out literally.
_ROWS_2 = ((-1, 1), (1, 1), (-1, 2), (1, 2))
_TABLE_2 = np.array([
    [0, 0, 1, 1],
    [1, 1, 0, 0],
    [1, 0, 1, 0],
    [0, 1, 0, 1],
])

_ROWS_3 = ((-1, 1), (1, 1), (-1, 2), (1, 2), (-1, 3), (1, 3))
_TABLE_3 = np.array([
    [0, 0, 0, 0, 1, 1, 1, 1],
    [1, 1, 1, 1, 0, 0, 0, 0],
    [0, 0, 1, 1, 0, 0, 1, 1],
    [1, 1, 0, 0, 1, 1, 0, 0],
    [0, 1, 0, 1, 0, 1, 0, 1],
    [1, 0, 1, 0, 1, 0, 1, 0],
])
for _t in (_TABLE_2, _TABLE_3):
    _t.setflags(write=False)


@dataclass(frozen=True)
class StrategyTable:
    """All 2^N deterministic assignments of outcomes to basis positions."""

    n_bases: int
    rows: tuple[tuple[int, int], ...]  # (outcome, basis position), printed order
    matrix: np.ndarray                 # shape (2N, 2^N), entries 0/1

    @property
    def n_strategies(self) -> int:
        return self.matrix.shape[1]

    def row_index(self, a: int, position: int) -> int:
        return self.rows.index((a, position))

    def value(self, a: int, position: int, gamma: int) -> int:
        """D_gamma(a | A_position); gamma is 0-based."""
        return int(self.matrix[self.row_index(a, position), gamma])

    def assignment(self, gamma: int) -> dict[int, int]:
        """The outcome each basis position is mapped to under strategy gamma."""
        out = {}
        for (a, pos), row in zip(self.rows, self.matrix):
            if row[gamma]:
                out[pos] = a
        return out

    def to_json(self) -> dict:
        return {
            "n_bases": self.n_bases,
            "rows": [list(r) for r in self.rows],
            "matrix": self.matrix.tolist(),
        }


def strategy_table(n_bases: int) -> StrategyTable:
    if n_bases == 2:
        return StrategyTable(2, _ROWS_2, _TABLE_2)
    if n_bases == 3:
        return StrategyTable(3, _ROWS_3, _TABLE_3)
    raise ValidationError(f"number of bases must be 2 or 3, got {n_bases!r}")


class Assemblage:
    """Validated assemblage: PSD members satisfying the consistency relation.

    ``bases`` records the physical Pauli indices in protocol order; members
    are keyed by (basis index, outcome).
    """

    __slots__ = ("bases", "members")

    def __init__(self, bases, members, *, psd_tol: float = PSD_TOL,
                 herm_tol: float = HERM_TOL, consistency_tol: float = CONSISTENCY_TOL):
        bases = resolve_bases(len(tuple(bases)), bases)
        expected = {(i, a) for i in bases for a in OUTCOMES}
        if set(members) != expected:
            raise ValidationError(f"assemblage must have exactly the keys {sorted(expected)}")
        clean = {}
        for key, m in members.items():
            arr = np.array(getattr(m, "matrix", m), dtype=complex)
            if arr.shape != (2, 2):
                raise ValidationError(f"member {key} has shape {arr.shape}, expected 2x2")
            if np.abs(arr - arr.conj().T).max() > herm_tol:
                raise ValidationError(f"member {key} is not Hermitian")
            low, _ = hermitian_eigvals(arr)
            if low < -psd_tol:
                raise ValidationError(f"member {key} has negative eigenvalue {low:.3e}")
            arr.setflags(write=False)
            clean[key] = arr
        residual = check_consistency(clean, bases)
        if residual > consistency_tol:
            raise ValidationError(f"assemblage violates consistency by {residual:.3e}")
        self.bases = bases
        self.members = clean

    @property
    def n_bases(self) -> int:
        return len(self.bases)

    def member(self, i: int, a: int) -> np.ndarray:
        return self.members[(i, a)]

    def conjugate(self, u) -> "Assemblage":
        """Apply rho -> U rho U^dagger to every member (U must be unitary)."""
        u = np.asarray(u, dtype=complex)
        if u.shape != (2, 2) or np.abs(u @ u.conj().T - IDENTITY).max() > 1e-10:
            raise ValidationError("conjugation requires a 2x2 unitary matrix")
        return Assemblage(
            self.bases,
            {key: u @ m @ u.conj().T for key, m in self.members.items()},
        )

    def to_json(self) -> dict:
        return {
            "N": self.n_bases,
            "bases": list(self.bases),
            "members": [
                {"i": i, "a": a, "matrix": matrix_to_json(self.members[(i, a)])}
                for i in self.bases
                for a in OUTCOMES
            ],
        }

    @classmethod
    def from_json(cls, data, **tols) -> "Assemblage":
        try:
            bases = data.get("bases") or DEFAULTS_FOR_N[int(data["N"])]
            members = {
                (int(entry["i"]), int(entry["a"])): matrix_from_json(entry["matrix"])
                for entry in data["members"]
            }
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed assemblage document: {exc}") from exc
        return cls(bases, members, **tols)


DEFAULTS_FOR_N = {2: (1, 3), 3: (1, 2, 3)}


def check_consistency(members, bases=None) -> float:
    """Max over bases of |tr sum_a rho_{a|A_i} - 1|.

    Accepts an Assemblage or a raw {(i, a): matrix} mapping.
    """
    if isinstance(members, Assemblage):
        bases = members.bases
        members = members.members
    if bases is None:
        bases = sorted({i for (i, _a) in members})
    worst = 0.0
    for i in bases:
        total = 0.0
        for a in OUTCOMES:
            m = np.asarray(members[(i, a)])
            total += (m[0, 0] + m[1, 1]).real
        worst = max(worst, abs(total - 1.0))
    return worst


def build_assemblage(channel: Channel, n_bases: int, bases=None) -> Assemblage:
    """Assemblage just before Bob's measurements: (1/2) * channel(eigenstate).

    Equal priors P(a|A_i) = 1/2 are fixed by the protocol construction, so
    consistency holds automatically for any trace-preserving channel.
    """
    bases = resolve_bases(n_bases, bases)
    from .qubit import mub_state  # local import keeps module deps one-way

    members = {
        (i, a): channel.apply(mub_state(i, a)).matrix / 2
        for i in bases
        for a in OUTCOMES
    }
    return Assemblage(bases, members)


def lhs_assemblage(table: StrategyTable, states, bases=None) -> Assemblage:
    """Mix hidden states through deterministic response functions: the
    local-hidden-state form, unsteerable by construction.

    ``states`` lists one PSD matrix per strategy column, total trace 1.
    """
    states = [np.asarray(getattr(s, "matrix", s), dtype=complex) for s in states]
    if len(states) != table.n_strategies:
        raise ValidationError(
            f"need {table.n_strategies} hidden states, got {len(states)}"
        )
    total_trace = 0.0
    for n, s in enumerate(states):
        if s.shape != (2, 2):
            raise ValidationError(f"hidden state {n} has shape {s.shape}, expected 2x2")
        if np.abs(s - s.conj().T).max() > HERM_TOL:
            raise ValidationError(f"hidden state {n} is not Hermitian")
        low, _ = hermitian_eigvals(s)
        if low < -PSD_TOL:
            raise ValidationError(f"hidden state {n} has negative eigenvalue {low:.3e}")
        total_trace += (s[0, 0] + s[1, 1]).real
    if abs(total_trace - 1.0) > 1e-9:
        raise ValidationError(f"hidden states must have total trace 1, got {total_trace}")
    bases = resolve_bases(table.n_bases, bases)
    members = {}
    for pos, i in enumerate(bases, start=1):
        for a in OUTCOMES:
            row = table.matrix[table.row_index(a, pos)]
            member = np.zeros((2, 2), dtype=complex)
            for gamma, picked in enumerate(row):
                if picked:
                    member = member + states[gamma]
            members[(i, a)] = member
    return Assemblage(bases, members)


@dataclass(frozen=True)
class TomographyCounts:
    """Bob's tomography tallies: per preparation (i, a), counts[j-1][b-index]
    of outcome b when measuring sigma_j (b-index 0 for +1, 1 for -1)."""

    counts: dict

    def __post_init__(self):
        clean = {}
        for key, arr in self.counts.items():
            arr = np.asarray(arr, dtype=float)
            if arr.shape != (3, 2):
                raise ValidationError(
                    f"counts for preparation {key} must have shape (3, 2), got {arr.shape}"
                )
            if (arr < 0).any():
                raise ValidationError(f"negative count for preparation {key}")
            arr = arr.copy()
            arr.setflags(write=False)
            clean[key] = arr
        object.__setattr__(self, "counts", clean)

    def preparations(self) -> list[tuple[int, int]]:
        return sorted(self.counts, key=lambda key: (key[0], -key[1]))

    def total(self, i: int, a: int, j: int) -> float:
        return float(self.counts[(i, a)][j - 1].sum())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "a", "j", "b", "count"])
            for (i, a) in self.preparations():
                for j in (1, 2, 3):
                    for b_idx, b in enumerate(OUTCOMES):
                        writer.writerow([i, a, j, b, self.counts[(i, a)][j - 1, b_idx]])

    @classmethod
    def from_csv(cls, path) -> "TomographyCounts":
        counts: dict = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"i", "a", "j", "b", "count"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise ValidationError(
                    f"{Path(path).name}: expected CSV columns {sorted(required)}"
                )
            for row in reader:
                key = (int(row["i"]), int(row["a"]))
                j, b = int(row["j"]), int(row["b"])
                arr = counts.setdefault(key, np.zeros((3, 2)))
                arr[j - 1, 0 if b == 1 else 1] += float(row["count"])
        return cls(counts)


@dataclass(frozen=True)
class Reconstruction:
    """Tomographic estimate plus flags for preparations that needed the PSD
    projection."""

    assemblage: Assemblage
    projected: tuple[tuple[int, int], ...]


def reconstruct(counts: TomographyCounts, priors=None, bases=None) -> Reconstruction:
    """Linear-inversion tomography of each conditional state.

    Per preparation, the Bloch components are the empirical outcome means;
    if the estimate lands outside the Bloch ball the negative eigenvalue is
    clipped and the state renormalized (for 2x2 that is exactly shrinking
    the Bloch vector onto the sphere), and the preparation is flagged.

    ``priors`` supplies P(a|A_i) (default 1/2 each, the protocol value);
    pass empirical sifted-round frequencies when analyzing simulation data.
    """
    if not counts.counts:
        raise ValidationError("empty tomography counts")
    keys = set(counts.counts)
    if bases is None:
        bases = sorted({i for (i, _a) in keys})
    bases = resolve_bases(len(tuple(bases)), bases)
    expected = {(i, a) for i in bases for a in OUTCOMES}
    if keys != expected:
        raise ValidationError(f"tomography counts must cover exactly {sorted(expected)}")
    if priors is None:
        priors = {key: 0.5 for key in expected}
    members = {}
    projected = []
    for key in sorted(expected, key=lambda k: (k[0], -k[1])):
        if key not in priors:
            raise ValidationError(f"missing prior for preparation {key}")
        tallies = counts.counts[key]
        r = np.zeros(3)
        for j in (1, 2, 3):
            total = tallies[j - 1].sum()
            if total <= 0:
                raise ValidationError(
                    f"no tomography counts for preparation {key}, basis {j}"
                )
            r[j - 1] = (tallies[j - 1, 0] - tallies[j - 1, 1]) / total
        norm = float(np.linalg.norm(r))
        if norm > 1.0:
            r /= norm
            projected.append(key)
        rho = IDENTITY.copy()
        for j in (1, 2, 3):
            rho = rho + r[j - 1] * pauli(j)
        members[key] = priors[key] * rho / 2
    asm = Assemblage(bases, members)
    return Reconstruction(assemblage=asm, projected=tuple(projected))


def offdiagonal_remainder(asm: Assemblage) -> dict:
    """Frobenius norm of each member's off-diagonal block in its own
    measurement eigenbasis.

    Zero exactly when the steering parameter captures the member fully;
    unitary rotations of the assemblage show up here while leaving the
    steerable weight unchanged.
    """
    out = {}
    for (i, a), m in asm.members.items():
        v = np.column_stack([mub_ket(i, 1), mub_ket(i, -1)])
        in_eigenbasis = v.conj().T @ m @ v
        out[(i, a)] = float(
            np.sqrt(abs(in_eigenbasis[0, 1]) ** 2 + abs(in_eigenbasis[1, 0]) ** 2)
        )
    return out
