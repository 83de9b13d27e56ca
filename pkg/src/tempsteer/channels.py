"""Qubit channels as Kraus-operator maps with named branches.

A channel is an ordered list of (branch label, Kraus operator) pairs that is
trace preserving. Branch labels are human-readable strings so simulation
records and reports can expose which classical branch a transmission took
(for the intercept-resend eavesdropper the label carries Eve's basis choice
and outcome).

Channels are built from JSON-serializable spec dicts: {"kind": ..., params}.
Supported kinds: identity, unitary, depolarizing, phase_damping,
amplitude_damping, pauli, intercept_resend, universal_cloner,
phase_covariant, composite, kraus.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qubit import (
    BASES,
    IDENTITY,
    OUTCOMES,
    DensityMatrix,
    mub_projector,
    pauli,
)
from .serialize import matrix_from_json

TP_TOL = 1e-10
BRANCH_PROB_FLOOR = 1e-14

_AXIS_INDEX = {"x": 1, "y": 2, "z": 3}


class ChannelError(ValueError):
    """Raised for malformed channel specs or non-trace-preserving Kraus sets."""


@dataclass(frozen=True)
class BranchOutcome:
    """One realized Kraus branch: label, its Born probability, and the
    conditional post-branch state."""

    label: str
    probability: float
    state: DensityMatrix


@dataclass(frozen=True)
class ChannelReport:
    """Validation summary; carries pass/fail instead of raising."""

    tp_residual: float
    n_branches: int
    trace_preserving: bool

    def to_json(self) -> dict:
        return {
            "tp_residual": self.tp_residual,
            "n_branches": self.n_branches,
            "trace_preserving": self.trace_preserving,
        }


class Channel:
    """Completely positive map given by labelled Kraus operators.

    Immutable; ``apply`` and ``branch_decompose`` are pure functions, safe
    for parallel mapping over states.
    """

    __slots__ = ("kraus", "_tp_residual")

    def __init__(self, kraus, *, require_tp: bool = True, tp_tol: float = TP_TOL):
        ops = []
        for label, op in kraus:
            m = np.array(op, dtype=complex)
            if m.shape != (2, 2):
                raise ChannelError(f"Kraus operator {label!r} has shape {m.shape}, expected 2x2")
            m.setflags(write=False)
            ops.append((str(label), m))
        if not ops:
            raise ChannelError("a channel needs at least one Kraus operator")
        total = sum(m.conj().T @ m for _, m in ops)
        self._tp_residual = float(np.abs(total - IDENTITY).max())
        if require_tp and self._tp_residual > tp_tol:
            raise ChannelError(
                f"Kraus operators are not trace preserving (residual {self._tp_residual:.3e})"
            )
        self.kraus = tuple(ops)

    @property
    def n_branches(self) -> int:
        return len(self.kraus)

    @property
    def tp_residual(self) -> float:
        return self._tp_residual

    def apply(self, rho: DensityMatrix) -> DensityMatrix:
        """Total map: sum_k K_k rho K_k^dagger."""
        if self._tp_residual > TP_TOL:
            raise ChannelError("cannot apply a non-trace-preserving channel")
        out = np.zeros((2, 2), dtype=complex)
        for _, k in self.kraus:
            out += k @ rho.matrix @ k.conj().T
        out = (out + out.conj().T) / 2  # kill rounding asymmetry
        return DensityMatrix(out)

    def branch_decompose(self, rho: DensityMatrix) -> list[BranchOutcome]:
        """Per-branch probabilities and conditional states.

        Branches with probability below 1e-14 are omitted; the returned
        mixture reproduces ``apply``.
        """
        outcomes = []
        for label, k in self.kraus:
            m = k @ rho.matrix @ k.conj().T
            q = float((m[0, 0] + m[1, 1]).real)
            if q < BRANCH_PROB_FLOOR:
                continue
            m = (m + m.conj().T) / (2 * q)
            outcomes.append(BranchOutcome(label, q, DensityMatrix(m)))
        return outcomes


def validate(channel: Channel) -> ChannelReport:
    """Report trace-preservation residual and branch count without raising."""
    return ChannelReport(
        tp_residual=channel.tp_residual,
        n_branches=channel.n_branches,
        trace_preserving=channel.tp_residual <= TP_TOL,
    )


def _unit_param(spec: dict, key: str) -> float:
    if key not in spec:
        raise ChannelError(f"channel kind {spec['kind']!r} requires parameter {key!r}")
    value = float(spec[key])
    if not 0.0 <= value <= 1.0:
        raise ChannelError(f"parameter {key}={value} outside [0, 1]")
    return value


def _axis_vector(axis) -> np.ndarray:
    if isinstance(axis, str):
        if axis not in _AXIS_INDEX:
            raise ChannelError(f"axis must be 'x', 'y', 'z', or a 3-vector, got {axis!r}")
        n = np.zeros(3)
        n[_AXIS_INDEX[axis] - 1] = 1.0
        return n
    n = np.asarray(axis, dtype=float)
    if n.shape != (3,):
        raise ChannelError(f"rotation axis must have 3 components, got shape {n.shape}")
    norm = float(np.linalg.norm(n))
    if norm == 0.0:
        raise ChannelError("rotation axis must be nonzero")
    return n / norm


def _pauli_kraus(weights: dict[str, float], prefix: str) -> list:
    """Kraus set of a Pauli channel from weights on I, x, y, z."""
    ops = []
    for name, w in weights.items():
        if w < -1e-12:
            raise ChannelError(f"Pauli weight on {name} is negative ({w:.3e}): not completely positive")
        if w <= 0.0:
            continue
        op = IDENTITY if name == "i" else pauli(_AXIS_INDEX[name])
        ops.append((f"{prefix}:{name}", math.sqrt(w) * op))
    return ops


def _depolarizing_kraus(v: float, prefix: str = "depol") -> list:
    # Parameterized by Bloch visibility v: r -> v*r. Kraus weights
    # (1+3v)/4 on I and (1-v)/4 on each Pauli.
    return _pauli_kraus(
        {"i": (1 + 3 * v) / 4, "x": (1 - v) / 4, "y": (1 - v) / 4, "z": (1 - v) / 4},
        prefix,
    )


_PHASE_COVARIANT_MULTIPLIERS = {
    # In-plane axes shrink by 1/sqrt(2); the out-of-plane multiplier 1/2 is a
    # CP-consistent modeling choice (1 + l_k >= l_i + l_j holds).
    "xz": (1 / math.sqrt(2), 0.5, 1 / math.sqrt(2)),
    "xy": (1 / math.sqrt(2), 1 / math.sqrt(2), 0.5),
    "yz": (0.5, 1 / math.sqrt(2), 1 / math.sqrt(2)),
}


def _multiplier_weights(lams) -> dict[str, float]:
    l1, l2, l3 = lams
    return {
        "i": (1 + l1 + l2 + l3) / 4,
        "x": (1 + l1 - l2 - l3) / 4,
        "y": (1 - l1 + l2 - l3) / 4,
        "z": (1 - l1 - l2 + l3) / 4,
    }


def make_channel(spec: dict) -> Channel:
    """Build a trace-preserving channel from a spec dict (parsed JSON)."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ChannelError("channel spec must be a dict with a 'kind' field")
    kind = spec["kind"]

    if kind == "identity":
        return Channel([("id", IDENTITY)])

    if kind == "unitary":
        n = _axis_vector(spec.get("axis", "z"))
        angle = float(spec.get("angle", 0.0))
        gen = sum(n[k] * pauli(k + 1) for k in range(3))
        u = math.cos(angle / 2) * IDENTITY - 1j * math.sin(angle / 2) * gen
        return Channel([("u", u)])

    if kind == "depolarizing":
        return Channel(_depolarizing_kraus(_unit_param(spec, "v")))

    if kind == "phase_damping":
        p = _unit_param(spec, "p")
        axis = spec.get("axis", "z")
        if axis not in _AXIS_INDEX:
            raise ChannelError(f"phase_damping axis must be 'x', 'y', or 'z', got {axis!r}")
        ops = []
        if p < 1.0:
            ops.append(("pd:keep", math.sqrt(1 - p) * IDENTITY))
        if p > 0.0:
            ops.append((f"pd:{axis}", math.sqrt(p) * pauli(_AXIS_INDEX[axis])))
        return Channel(ops)

    if kind == "amplitude_damping":
        g = _unit_param(spec, "g")
        hold = np.array([[1, 0], [0, math.sqrt(1 - g)]], dtype=complex)
        decay = np.array([[0, math.sqrt(g)], [0, 0]], dtype=complex)
        ops = [("ad:hold", hold)]
        if g > 0.0:
            ops.append(("ad:decay", decay))
        return Channel(ops)

    if kind == "pauli":
        px = _unit_param(spec, "px")
        py = _unit_param(spec, "py")
        pz = _unit_param(spec, "pz")
        p0 = 1.0 - px - py - pz
        if p0 < -1e-12:
            raise ChannelError(f"Pauli weights sum to {px + py + pz} > 1: not completely positive")
        return Channel(_pauli_kraus({"i": max(p0, 0.0), "x": px, "y": py, "z": pz}, "pauli"))

    if kind == "intercept_resend":
        bases = spec.get("bases")
        if not bases:
            raise ChannelError("intercept_resend needs a nonempty 'bases' list")
        bases = sorted(set(int(b) for b in bases))
        if any(b not in BASES for b in bases):
            raise ChannelError(f"intercept_resend bases must be within {BASES}, got {bases}")
        # Nonselective measure-and-resend in a uniformly random basis from
        # the set: one projector branch per (basis, outcome).
        scale = 1 / math.sqrt(len(bases))
        ops = [
            (f"eve:basis={k},a={a:+d}", scale * mub_projector(k, a))
            for k in bases
            for a in OUTCOMES
        ]
        return Channel(ops)

    if kind in ("universal_cloner", "universal_cloner_preset"):
        # Isotropic shrink to v = 2/3: every eigenstate fidelity is 5/6.
        return Channel(_depolarizing_kraus(2 / 3, prefix="ucl"))

    if kind in ("phase_covariant", "phase_covariant_preset"):
        plane = spec.get("plane", "xz")
        if plane not in _PHASE_COVARIANT_MULTIPLIERS:
            raise ChannelError(f"phase_covariant plane must be one of xy, xz, yz, got {plane!r}")
        weights = _multiplier_weights(_PHASE_COVARIANT_MULTIPLIERS[plane])
        return Channel(_pauli_kraus(weights, "pcc"))

    if kind == "composite":
        parts = spec.get("parts")
        if not parts:
            raise ChannelError("composite needs a nonempty 'parts' list")
        stages = [make_channel(p) for p in parts]
        ops = stages[0].kraus
        for stage in stages[1:]:
            ops = [
                (f"{la}>{lb}", kb @ ka)
                for la, ka in ops
                for lb, kb in stage.kraus
            ]
        return Channel(ops)

    if kind == "kraus":
        operators = spec.get("operators")
        if not operators:
            raise ChannelError("kraus spec needs a nonempty 'operators' list")
        ops = [(f"k{n}", matrix_from_json(op)) for n, op in enumerate(operators)]
        return Channel(ops)

    raise ChannelError(f"unknown channel kind {kind!r}")


def preset_catalog() -> list[tuple[str, dict]]:
    """Named channel specs exercised by the self-test and convergence gates."""
    return [
        ("identity", {"kind": "identity"}),
        ("depolarizing(v=0.8)", {"kind": "depolarizing", "v": 0.8}),
        ("depolarizing(v=0.5)", {"kind": "depolarizing", "v": 0.5}),
        ("phase_damping(p=0.25,z)", {"kind": "phase_damping", "p": 0.25, "axis": "z"}),
        ("amplitude_damping(g=0.3)", {"kind": "amplitude_damping", "g": 0.3}),
        ("pauli(0.1,0.05,0.15)", {"kind": "pauli", "px": 0.1, "py": 0.05, "pz": 0.15}),
        ("unitary(y,pi/4)", {"kind": "unitary", "axis": "y", "angle": math.pi / 4}),
        ("intercept_resend({1,3})", {"kind": "intercept_resend", "bases": [1, 3]}),
        ("intercept_resend({1,2,3})", {"kind": "intercept_resend", "bases": [1, 2, 3]}),
        ("universal_cloner", {"kind": "universal_cloner"}),
        ("phase_covariant(xz)", {"kind": "phase_covariant", "plane": "xz"}),
        (
            "composite(depol 0.9 > pd 0.1)",
            {
                "kind": "composite",
                "parts": [
                    {"kind": "depolarizing", "v": 0.9},
                    {"kind": "phase_damping", "p": 0.1, "axis": "z"},
                ],
            },
        ),
    ]
