"""Seeded Monte Carlo simulation of the BB84 (two-basis) and B98 (six-state,
three-basis) key-distribution sessions over a configured channel.

Each round: Alice draws a basis and bit uniformly, the corresponding
eigenstate is pushed through one sampled Kraus branch of the channel, and
Bob measures - the pre-agreed matching basis on key rounds (or a random one
in ``bob_random_basis`` mode), a uniformly random Pauli basis on tomography
rounds. Randomness comes from a counter-based Philox stream: all variates
for round r live in row r of one fixed-shape array, so results are a pure
function of (config, seed) no matter how rounds are processed.

``analyze`` turns a finished session into a full SteeringReport: empirical
fidelity table and steering parameters (observed, statistics-based, and
branch-resolved with debiased squares), tomographic assemblage
reconstruction, steerable weight, bounds, and verdicts, plus
empirical-vs-analytic deltas when the true channel is disclosed.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .assemblage import Reconstruction, TomographyCounts, reconstruct
from .channels import BRANCH_PROB_FLOOR, make_channel
from .metrics import (
    FidelityTable,
    branch_resolved_steering,
    fidelity_table,
    qber,
    resolve_bases,
    steering_parameter,
    steering_parameter_from_statistics,
)
from .qubit import OUTCOMES, ValidationError, mub_state
from .report import SteeringReport, analytic_report, report_from_table
from .sdp import SDP_TOL, steerable_weight
from .serialize import SCHEMA_VERSION

PROTOCOLS = {"BB84": 2, "B98": 3}
MAX_SEED = 2**64


@dataclass(frozen=True)
class SessionConfig:
    """Everything a session run depends on; identical configs (seed included)
    reproduce bit-identical results."""

    protocol: str
    channel: dict
    rounds: int
    seed: int
    tomography_fraction: float = 0.25
    basis_pair: tuple[int, int] = (1, 3)
    bob_random_basis: bool = False

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValidationError(
                f"protocol must be one of {sorted(PROTOCOLS)}, got {self.protocol!r}"
            )
        if not isinstance(self.channel, dict) or "kind" not in self.channel:
            raise ValidationError("channel must be a spec dict with a 'kind' field")
        if int(self.rounds) < 1:
            raise ValidationError(f"rounds must be >= 1, got {self.rounds}")
        object.__setattr__(self, "rounds", int(self.rounds))
        if not 0 <= int(self.seed) < MAX_SEED:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "seed", int(self.seed))
        if not 0.0 < self.tomography_fraction <= 1.0:
            raise ValidationError(
                f"tomography_fraction must lie in (0, 1], got {self.tomography_fraction}"
            )
        object.__setattr__(self, "basis_pair", resolve_bases(2, self.basis_pair))

    @property
    def n_bases(self) -> int:
        return PROTOCOLS[self.protocol]

    @property
    def bases(self) -> tuple[int, ...]:
        return self.basis_pair if self.n_bases == 2 else (1, 2, 3)

    def to_json(self) -> dict:
        return {
            "protocol": self.protocol,
            "channel": self.channel,
            "rounds": self.rounds,
            "seed": self.seed,
            "tomography_fraction": self.tomography_fraction,
            "basis_pair": list(self.basis_pair),
            "bob_random_basis": self.bob_random_basis,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SessionConfig":
        try:
            return cls(
                protocol=data["protocol"],
                channel=data["channel"],
                rounds=data["rounds"],
                seed=data["seed"],
                tomography_fraction=data.get("tomography_fraction", 0.25),
                basis_pair=tuple(data.get("basis_pair", (1, 3))),
                bob_random_basis=data.get("bob_random_basis", False),
            )
        except KeyError as exc:
            raise ValidationError(f"session config is missing field {exc}") from exc


@dataclass(frozen=True)
class RoundRecord:
    """One protocol round: Alice's preparation, the realized channel branch,
    and Bob's measurement."""

    index: int
    alice_basis: int
    alice_bit: int
    branch: str
    bob_basis: int
    outcome: int
    purpose: str  # "key" or "tomography"


class RoundLog:
    """Columnar store of round records (arrays instead of object lists so
    100k-round sessions stay cheap); iterate ``records()`` for the row view."""

    __slots__ = ("alice_basis", "alice_bit", "branch_index", "branch_labels",
                 "bob_basis", "outcome", "is_key")

    def __init__(self, alice_basis, alice_bit, branch_index, branch_labels,
                 bob_basis, outcome, is_key):
        self.alice_basis = np.asarray(alice_basis, dtype=np.int64)
        self.alice_bit = np.asarray(alice_bit, dtype=np.int64)
        self.branch_index = np.asarray(branch_index, dtype=np.int64)
        self.branch_labels = tuple(branch_labels)
        self.bob_basis = np.asarray(bob_basis, dtype=np.int64)
        self.outcome = np.asarray(outcome, dtype=np.int64)
        self.is_key = np.asarray(is_key, dtype=bool)

    def __len__(self) -> int:
        return self.alice_basis.shape[0]

    def subset(self, mask) -> "RoundLog":
        return RoundLog(
            self.alice_basis[mask], self.alice_bit[mask], self.branch_index[mask],
            self.branch_labels, self.bob_basis[mask], self.outcome[mask],
            self.is_key[mask],
        )

    def records(self):
        for n in range(len(self)):
            yield RoundRecord(
                index=n,
                alice_basis=int(self.alice_basis[n]),
                alice_bit=int(self.alice_bit[n]),
                branch=self.branch_labels[self.branch_index[n]],
                bob_basis=int(self.bob_basis[n]),
                outcome=int(self.outcome[n]),
                purpose="key" if self.is_key[n] else "tomography",
            )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["round", "i", "a", "j", "b", "purpose", "branch"])
            for rec in self.records():
                writer.writerow([
                    rec.index, rec.alice_basis, rec.alice_bit, rec.bob_basis,
                    rec.outcome, rec.purpose, rec.branch,
                ])


@dataclass
class SessionResult:
    config: SessionConfig
    log: RoundLog
    sifted_length: int
    qber_hat: float | None
    qber_stderr: float | None
    counts: TomographyCounts
    report: SteeringReport | None = None

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_json(),
            "rounds": len(self.log),
            "sifted_length": self.sifted_length,
            "qber_hat": self.qber_hat,
            "qber_stderr": self.qber_stderr,
            "tomography_counts": [
                {"i": i, "a": a, "counts": self.counts.counts[(i, a)].tolist()}
                for (i, a) in self.counts.preparations()
            ],
            "report": self.report.to_json() if self.report is not None else None,
        }


def _branch_tables(channel, preps):
    """Per preparation: branch probabilities (cumulative), global Kraus
    indices, and P(b=+1) for each of Bob's three bases."""
    cum, gidx, pplus = [], [], []
    for (i, a) in preps:
        rho = mub_state(i, a).matrix
        probs, indices, rows = [], [], []
        for idx, (_label, k) in enumerate(channel.kraus):
            m = k @ rho @ k.conj().T
            q = float((m[0, 0] + m[1, 1]).real)
            if q < BRANCH_PROB_FLOOR:
                continue
            r = np.array([
                2 * m[0, 1].real, -2 * m[0, 1].imag, (m[0, 0] - m[1, 1]).real,
            ]) / q
            probs.append(q)
            indices.append(idx)
            rows.append((1.0 + r) / 2.0)
        cum.append(np.cumsum(probs))
        gidx.append(np.array(indices, dtype=np.int64))
        pplus.append(np.array(rows))
    return cum, gidx, pplus


def run_session(cfg: SessionConfig) -> SessionResult:
    """Run one session; deterministic given (config, seed)."""
    channel = make_channel(cfg.channel)
    bases = cfg.bases
    preps = [(i, a) for i in bases for a in OUTCOMES]
    cum, gidx, pplus = _branch_tables(channel, preps)

    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    # Row r holds every variate round r needs: preparation, purpose,
    # Bob's basis, branch, outcome.
    u = rng.random((cfg.rounds, 5))

    prep_idx = np.minimum((u[:, 0] * len(preps)).astype(np.int64), len(preps) - 1)
    basis_arr = np.array([p[0] for p in preps], dtype=np.int64)
    bit_arr = np.array([p[1] for p in preps], dtype=np.int64)
    alice_basis = basis_arr[prep_idx]
    alice_bit = bit_arr[prep_idx]

    is_tomo = u[:, 1] < cfg.tomography_fraction
    bob_basis = np.empty(cfg.rounds, dtype=np.int64)
    bob_basis[is_tomo] = np.minimum((u[is_tomo, 2] * 3).astype(np.int64), 2) + 1
    key_mask = ~is_tomo
    if cfg.bob_random_basis:
        pick = np.minimum((u[key_mask, 2] * len(bases)).astype(np.int64), len(bases) - 1)
        bob_basis[key_mask] = np.array(bases, dtype=np.int64)[pick]
    else:
        bob_basis[key_mask] = alice_basis[key_mask]

    branch_index = np.empty(cfg.rounds, dtype=np.int64)
    outcome = np.empty(cfg.rounds, dtype=np.int64)
    for p in range(len(preps)):
        mask = prep_idx == p
        if not mask.any():
            continue
        local = np.searchsorted(cum[p], u[mask, 3], side="right")
        local = np.minimum(local, len(cum[p]) - 1)
        branch_index[mask] = gidx[p][local]
        p_plus = pplus[p][local, bob_basis[mask] - 1]
        outcome[mask] = np.where(u[mask, 4] < p_plus, 1, -1)

    log = RoundLog(
        alice_basis, alice_bit, branch_index,
        tuple(label for label, _ in channel.kraus),
        bob_basis, outcome, key_mask,
    )

    sifted = sift(log)
    if len(sifted):
        qber_hat, qber_stderr = estimate_qber(sifted)
    else:
        qber_hat = qber_stderr = None

    counts = {}
    n_prep = len(preps)
    tomo = is_tomo
    code = (prep_idx[tomo] * 3 + (bob_basis[tomo] - 1)) * 2 + (outcome[tomo] == -1)
    tallies = np.bincount(code, minlength=n_prep * 6).reshape(n_prep, 3, 2)
    for p, key in enumerate(preps):
        counts[key] = tallies[p].astype(float)

    return SessionResult(
        config=cfg,
        log=log,
        sifted_length=len(sifted),
        qber_hat=qber_hat,
        qber_stderr=qber_stderr,
        counts=TomographyCounts(counts),
    )


def sift(records):
    """Keep key-purpose rounds where the bases matched, order preserved.

    Accepts a RoundLog (returns a RoundLog) or any iterable of RoundRecord
    (returns a list).
    """
    if isinstance(records, RoundLog):
        return records.subset(records.is_key & (records.alice_basis == records.bob_basis))
    return [
        r for r in records
        if r.purpose == "key" and r.alice_basis == r.bob_basis
    ]


def estimate_qber(sifted):
    """(error fraction, binomial standard error) over a sifted set."""
    if isinstance(sifted, RoundLog):
        n = len(sifted)
        errors = int((sifted.outcome != sifted.alice_bit).sum())
    else:
        sifted = list(sifted)
        n = len(sifted)
        errors = sum(1 for r in sifted if r.outcome != r.alice_bit)
    if n == 0:
        raise ValidationError("cannot estimate QBER from an empty sifted set")
    q = errors / n
    return q, math.sqrt(q * (1.0 - q) / n)


def _empirical_table(sifted: RoundLog, bases) -> tuple[FidelityTable, dict, dict, dict]:
    """Empirical fidelities, conditional statistics, priors, and per-prep
    sifted counts."""
    values, cond, priors, n_prep = {}, {}, {}, {}
    for i in bases:
        in_basis = sifted.alice_basis == i
        n_i = int(in_basis.sum())
        for a in OUTCOMES:
            mask = in_basis & (sifted.alice_bit == a)
            n = int(mask.sum())
            if n == 0 or n_i == 0:
                raise ValidationError(
                    f"no sifted rounds for preparation ({i}, {a:+d}); "
                    "increase rounds or lower tomography_fraction"
                )
            match = int((sifted.outcome[mask] == a).sum())
            f = match / n
            values[(i, a)] = f
            cond[(i, a)] = {a: f, -a: 1.0 - f}
            priors[(i, a)] = n / n_i
            n_prep[(i, a)] = n
    return FidelityTable(tuple(bases), values), cond, priors, n_prep


def steering_sigma(table: FidelityTable, n_per_prep: dict) -> float:
    """Delta-method standard error of the observed steering parameter."""
    var = 0.0
    for key, f in table.values.items():
        var += (2 * (2 * f - 1)) ** 2 * f * (1 - f) / n_per_prep[key]
    return math.sqrt(var)


def empirical_branch_steering(sifted: RoundLog, bases, debias: bool = True):
    """Branch-resolved steering estimate from retained branch labels.

    Uses debiased squared conditional means ((n m^2 - 1)/(n - 1) is unbiased
    for the squared mean of +/-1 outcomes) and returns a delta-method
    standard error combining multinomial branch-weight noise with the
    per-branch mean-square noise.
    """
    total = 0.0
    var_total = 0.0
    for i in bases:
        for a in OUTCOMES:
            mask = (sifted.alice_basis == i) & (sifted.alice_bit == a)
            n_prep = int(mask.sum())
            if n_prep == 0:
                raise ValidationError(f"no sifted rounds for preparation ({i}, {a:+d})")
            branches = sifted.branch_index[mask]
            corr = (sifted.outcome[mask] * a).astype(float)
            t_prep = 0.0
            sq_weighted = 0.0
            mean_var = 0.0
            for b in np.unique(branches):
                sel = branches == b
                n = int(sel.sum())
                m_hat = float(corr[sel].mean())
                if debias and n > 1:
                    v = (n * m_hat**2 - 1.0) / (n - 1.0)
                else:
                    v = m_hat**2
                q_hat = n / n_prep
                t_prep += q_hat * v
                sq_weighted += q_hat * v**2
                spread = max(1.0 - m_hat**2, 0.0)
                mean_var += q_hat**2 * (4 * m_hat**2 * spread / n + 2 * spread**2 / n**2)
            total += t_prep
            var_total += max(sq_weighted - t_prep**2, 0.0) / n_prep + mean_var
    return total / 2.0, math.sqrt(var_total) / 2.0


def analyze(result: SessionResult, known_channel: dict | None = None,
            sdp_tol: float = SDP_TOL, q_override: float | None = None) -> SteeringReport:
    """Full steering report from a finished session.

    Reconstructs the assemblage from tomography counts (with priors taken
    from the sifted rounds), computes both steering estimators, the weight,
    all bounds and verdicts; with ``known_channel`` the analytic values and
    deltas are appended.
    """
    cfg = result.config
    bases = cfg.bases
    sifted = sift(result.log)
    table, cond, priors, n_prep = _empirical_table(sifted, bases)

    s_obs = steering_parameter(table)
    s_stat = steering_parameter_from_statistics(cond, priors)
    branch_s, branch_sigma = empirical_branch_steering(sifted, bases)

    recon: Reconstruction = reconstruct(result.counts, priors=priors, bases=bases)
    weight = steerable_weight(recon.assemblage, tol=sdp_tol)

    details = {
        "qber_hat": result.qber_hat,
        "qber_stderr": result.qber_stderr,
        "s_sigma": steering_sigma(table, n_prep),
        "s_from_statistics": s_stat,
        "branch_resolved_sigma": branch_sigma,
        # Real adversaries do not disclose their branch; the estimator is a
        # diagnostic unless the channel is the classical intercept-resend.
        "branch_estimator_diagnostic": cfg.channel.get("kind") != "intercept_resend",
        "projected_preparations": [list(k) for k in recon.projected],
        "sifted_length": result.sifted_length,
    }

    if known_channel is not None:
        reference = analytic_report(
            known_channel, cfg.n_bases, bases, sdp_tol=sdp_tol,
            q_override=q_override,
        )
        pairs = {
            "s": (s_obs, reference.summary.s),
            "qber": (result.qber_hat, reference.summary.qber),
            "f_mean": (table.f_mean(), reference.summary.f_mean),
            "branch_resolved_s": (branch_s, reference.summary.branch_resolved_s),
            "w_t": (weight.w_t, reference.weight.w_t),
        }
        details["empirical_vs_analytic"] = {
            name: {
                "empirical": emp,
                "analytic": ana,
                "delta": None if emp is None else emp - ana,
            }
            for name, (emp, ana) in pairs.items()
        }

    report = report_from_table(
        table,
        source="simulation",
        branch_resolved_s=branch_s,
        weight=weight,
        q_override=q_override,
        details=details,
    )
    result.report = report
    return report


def run_and_analyze(cfg: SessionConfig, known_channel: bool = True,
                    sdp_tol: float = SDP_TOL,
                    q_override: float | None = None) -> SessionResult:
    """Convenience wrapper: simulate, then attach the report (the configured
    channel is treated as disclosed when ``known_channel``)."""
    result = run_session(cfg)
    analyze(
        result,
        known_channel=cfg.channel if known_channel else None,
        sdp_tol=sdp_tol,
        q_override=q_override,
    )
    return result


def analytic_session_values(cfg: SessionConfig) -> dict:
    """Closed-form per-channel values the simulation should converge to."""
    channel = make_channel(cfg.channel)
    table = fidelity_table(channel, cfg.n_bases, cfg.bases)
    return {
        "qber": qber(table),
        "s": steering_parameter(table),
        "branch_resolved_s": branch_resolved_steering(channel, cfg.n_bases, cfg.bases),
    }
