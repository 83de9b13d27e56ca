"""Steering parameter, QBER, and the analytic security bounds.

The central object is the fidelity table: the 2N transmission fidelities
F_{i,a} of the MUB eigenstates through a channel. From it follow

  * the steering parameter  S = (1/2) sum_{i,a} (2 F_{i,a} - 1)^2,
  * QBER = 1 - mean(F),
  * the lower bound   QBER >= (1 - sqrt(S/N)) / 2,
  * the upper bound   QBER <= (M - S/N) / (4 m)  with m/M the extreme
    fidelities (a Bhatia-Davis variance bound in disguise),
  * the exact variance identity
    var(F) = QBER (1 - QBER) + (S - N) / (4 N),

and the security verdicts: a protocol with N unbiased bases survives an
individual attack iff S > N (1 - 2 q_N)^2, with q_2 = (1 - 1/sqrt(2))/2
(phase-covariant cloning) and q_3 = 1/6 (universal cloning). The stronger
monogamy condition is S > 2^(N-1) / N.

Two estimators of S are exposed: the observed one above, and a
branch-resolved one that keeps the channel's classical branch label inside
the square. The branch-resolved estimator dominates the observed one
(Jensen) and is what saturates S = 1 for the classical measure-and-resend
strategy; real adversaries do not disclose their branch, so it is a
diagnostic quantity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .channels import Channel
from .qubit import BASES, OUTCOMES, ValidationError, fidelity_to_pure, mub_state

DEFAULT_BASES = {2: (1, 3), 3: (1, 2, 3)}

PROB_TOL = 1e-9


def resolve_bases(n_bases: int, bases=None) -> tuple[int, ...]:
    """Validate and normalize the measured basis set for N in {2, 3}."""
    if n_bases not in (2, 3):
        raise ValidationError(f"number of bases must be 2 or 3, got {n_bases!r}")
    if bases is None:
        return DEFAULT_BASES[n_bases]
    bases = tuple(int(b) for b in bases)
    if len(bases) != n_bases or len(set(bases)) != n_bases:
        raise ValidationError(f"need {n_bases} distinct bases, got {bases}")
    if any(b not in BASES for b in bases):
        raise ValidationError(f"bases must be within {BASES}, got {bases}")
    return bases


@dataclass(frozen=True)
class FidelityTable:
    """The 2N transmission fidelities F_{i,a}, keyed by (basis, outcome)."""

    bases: tuple[int, ...]
    values: dict

    def __post_init__(self):
        bases = resolve_bases(len(self.bases), self.bases)
        object.__setattr__(self, "bases", bases)
        expected = {(i, a) for i in bases for a in OUTCOMES}
        if set(self.values) != expected:
            raise ValidationError(
                f"fidelity table must have exactly the keys {sorted(expected)}"
            )
        vals = {}
        for key, f in self.values.items():
            f = float(f)
            if not -PROB_TOL <= f <= 1 + PROB_TOL:
                raise ValidationError(f"fidelity F{key} = {f} outside [0, 1]")
            vals[key] = f
        object.__setattr__(self, "values", vals)

    @property
    def n_bases(self) -> int:
        return len(self.bases)

    def ordered(self) -> list[float]:
        """Fidelities in the fixed (basis, outcome) order used everywhere."""
        return [self.values[(i, a)] for i in self.bases for a in OUTCOMES]

    def f_mean(self) -> float:
        vals = self.ordered()
        return sum(vals) / len(vals)

    def f_variance(self) -> float:
        """Population variance of the 2N fidelities."""
        vals = self.ordered()
        mean = sum(vals) / len(vals)
        return sum((v - mean) ** 2 for v in vals) / len(vals)

    def f_min(self) -> float:
        return min(self.ordered())

    def f_max(self) -> float:
        return max(self.ordered())

    def to_json(self) -> dict:
        return {
            "bases": list(self.bases),
            "entries": [
                {"i": i, "a": a, "fidelity": self.values[(i, a)]}
                for i in self.bases
                for a in OUTCOMES
            ],
        }


def fidelity_table(channel: Channel, n_bases: int, bases=None) -> FidelityTable:
    """Transmission fidelities of every MUB eigenstate through the channel."""
    bases = resolve_bases(n_bases, bases)
    values = {
        (i, a): fidelity_to_pure(channel.apply(mub_state(i, a)), i, a)
        for i in bases
        for a in OUTCOMES
    }
    return FidelityTable(bases, values)


def steering_parameter(table: FidelityTable) -> float:
    """Observed steering parameter S = (1/2) sum_{i,a} (2 F_{i,a} - 1)^2."""
    return sum((2 * f - 1) ** 2 for f in table.ordered()) / 2


def steering_parameter_from_statistics(cond, priors) -> float:
    """S from raw conditional statistics.

    Parameters
    ----------
    cond : mapping (i, a) -> {b: P(b | A_i = a, B_i)}
        Bob's outcome distribution per preparation; must be normalized.
    priors : mapping (i, a) -> P(a | A_i)
        Alice's outcome probabilities; must be normalized per basis.

    Equals ``steering_parameter`` of the corresponding fidelity table
    whenever the statistics come from a fixed channel with uniform priors.
    """
    if not cond:
        raise ValidationError("empty conditional statistics")
    bases = sorted({i for (i, _a) in cond})
    for i in bases:
        total = 0.0
        for a in OUTCOMES:
            if (i, a) not in priors:
                raise ValidationError(f"missing prior for preparation ({i}, {a:+d})")
            total += priors[(i, a)]
        if abs(total - 1.0) > PROB_TOL:
            raise ValidationError(f"priors for basis {i} sum to {total}, expected 1")
    s = 0.0
    for i in bases:
        for a in OUTCOMES:
            dist = cond.get((i, a))
            if dist is None:
                raise ValidationError(f"missing statistics for preparation ({i}, {a:+d})")
            norm = sum(dist.get(b, 0.0) for b in OUTCOMES)
            if abs(norm - 1.0) > PROB_TOL:
                raise ValidationError(
                    f"conditional distribution for ({i}, {a:+d}) sums to {norm}"
                )
            expectation = sum(b * dist.get(b, 0.0) for b in OUTCOMES)
            s += priors[(i, a)] * expectation**2
    return s


def channel_statistics(channel: Channel, n_bases: int, bases=None):
    """Exact Born-rule statistics (cond, priors) for a channel with
    uniform preparation priors; the inputs ``steering_parameter_from_statistics``
    expects."""
    table = fidelity_table(channel, n_bases, bases)
    cond = {
        (i, a): {a: f, -a: 1.0 - f}
        for (i, a), f in table.values.items()
    }
    priors = {key: 0.5 for key in table.values}
    return cond, priors


def branch_resolved_steering(channel: Channel, n_bases: int, bases=None) -> float:
    """S with the channel branch label kept inside the square.

    (1/2) sum_{i,a} sum_branches q * (2 F_branch - 1)^2, where F_branch is
    the fidelity of the conditional post-branch state. Dominates the
    observed S by convexity; reaches 1 for measure-and-resend over all
    bases.
    """
    bases = resolve_bases(n_bases, bases)
    total = 0.0
    for i in bases:
        for a in OUTCOMES:
            for branch in channel.branch_decompose(mub_state(i, a)):
                f = fidelity_to_pure(branch.state, i, a)
                total += branch.probability * (2 * f - 1) ** 2
    return total / 2


def qber(table: FidelityTable) -> float:
    """Average quantum bit error rate, 1 - mean fidelity."""
    return 1.0 - table.f_mean()


def qber_lower_bound(s: float, n_bases: int) -> float:
    """(1 - sqrt(S/N)) / 2; tight exactly for isotropic noise."""
    if n_bases not in (2, 3):
        raise ValidationError(f"number of bases must be 2 or 3, got {n_bases!r}")
    if not -PROB_TOL <= s <= n_bases + PROB_TOL:
        raise ValidationError(f"steering parameter {s} outside [0, {n_bases}]")
    s = min(max(s, 0.0), float(n_bases))
    return (1.0 - math.sqrt(s / n_bases)) / 2.0


def qber_upper_bound(s: float, n_bases: int, f_min: float, f_max: float = 1.0) -> float:
    """(M - S/N) / (4 m), the variance-bound ceiling on QBER.

    ``f_min`` is the smallest observed fidelity; ``f_max`` is the largest
    *allowed* one. With f_max = 1 (the default: a noiseless transmission is
    always allowed) the bound holds for every fidelity table and saturates
    when all fidelities coincide; feeding an observed maximum below 1 gives
    a tighter expression that is only valid while the table still attains
    it. Undefined (domain error) when the smallest fidelity is zero.
    """
    if n_bases not in (2, 3):
        raise ValidationError(f"number of bases must be 2 or 3, got {n_bases!r}")
    if f_min <= 0.0:
        raise ValidationError("upper bound undefined for zero minimum fidelity")
    if not f_min <= f_max <= 1 + PROB_TOL:
        raise ValidationError(f"need 0 < f_min <= f_max <= 1, got ({f_min}, {f_max})")
    return (f_max - s / n_bases) / (4.0 * f_min)


def variance_identity_residual(table: FidelityTable) -> float:
    """|var(F) - [QBER(1-QBER) + (S-N)/(4N)]|; identically ~0 for any table."""
    q = qber(table)
    s = steering_parameter(table)
    n = table.n_bases
    predicted = q * (1.0 - q) + (s - n) / (4.0 * n)
    return abs(table.f_variance() - predicted)


def bhatia_davis_slack(table: FidelityTable) -> float:
    """(M - mean)(mean - m) - var(F); nonnegative for every table."""
    mean = table.f_mean()
    return (table.f_max() - mean) * (mean - table.f_min()) - table.f_variance()


def symmetric_noise_s(qber_value: float, n_bases: int) -> float:
    """S under isotropic noise: 4 N (1/2 - QBER)^2; inverts the lower bound."""
    if n_bases not in (2, 3):
        raise ValidationError(f"number of bases must be 2 or 3, got {n_bases!r}")
    if not -PROB_TOL <= qber_value <= 1 + PROB_TOL:
        raise ValidationError(f"QBER {qber_value} outside [0, 1]")
    return 4.0 * n_bases * (0.5 - qber_value) ** 2


def individual_attack_qber(n_bases: int) -> float:
    """Critical QBER for individual attacks: optimal-cloner noise levels."""
    if n_bases == 2:
        return (1.0 - 1.0 / math.sqrt(2.0)) / 2.0  # phase-covariant cloning
    if n_bases == 3:
        return 1.0 / 6.0  # universal cloning
    raise ValidationError(f"number of bases must be 2 or 3, got {n_bases!r}")


def s_threshold(n_bases: int, q: float) -> float:
    """Steering threshold N (1 - 2q)^2 equivalent to QBER < q."""
    return n_bases * (1.0 - 2.0 * q) ** 2


def monogamy_threshold(n_bases: int) -> float:
    """2^(N-1) / N: above it no third party can out-steer Bob."""
    if n_bases not in (2, 3):
        raise ValidationError(f"number of bases must be 2 or 3, got {n_bases!r}")
    return 2.0 ** (n_bases - 1) / n_bases


PROTOCOL_NAMES = {2: "BB84", 3: "B98"}
MODES = ("individual", "unconditional")
DEFAULT_UNCONDITIONAL_QBER = 0.1


@dataclass(frozen=True)
class SecurityVerdict:
    """Security decision for one attack model, with threshold provenance."""

    protocol: str
    mode: str
    q_threshold: float
    s_threshold: float
    monogamy_threshold: float
    secure: bool
    monogamous: bool

    def to_json(self) -> dict:
        return {
            "protocol": self.protocol,
            "mode": self.mode,
            "q_threshold": self.q_threshold,
            "s_threshold": self.s_threshold,
            "monogamy_threshold": self.monogamy_threshold,
            "secure": self.secure,
            "monogamous": self.monogamous,
        }


def security_verdict(s: float, n_bases: int, mode: str = "individual",
                     q_override: float | None = None) -> SecurityVerdict:
    """Strict-inequality verdict: secure iff S > N(1-2q)^2.

    ``individual`` mode pins q to the optimal-cloning values; ``unconditional``
    uses ``q_override`` (default 0.1). Sitting exactly on a threshold counts
    as insecure.
    """
    if n_bases not in (2, 3):
        raise ValidationError(f"number of bases must be 2 or 3, got {n_bases!r}")
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "individual":
        q = individual_attack_qber(n_bases)
        # N(1-2q_N)^2 collapses exactly (1-2q_2 = 1/sqrt(2), 1-2q_3 = 2/3);
        # using the closed form keeps "sitting on the threshold" insecure
        # instead of leaking 2 ulp through the squared round trip.
        s_thr = 1.0 if n_bases == 2 else 4.0 / 3.0
    else:
        q = DEFAULT_UNCONDITIONAL_QBER if q_override is None else float(q_override)
        if not 0.0 < q < 0.5:
            raise ValidationError(f"q_override must lie in (0, 0.5), got {q}")
        s_thr = s_threshold(n_bases, q)
    mono_thr = monogamy_threshold(n_bases)
    return SecurityVerdict(
        protocol=PROTOCOL_NAMES[n_bases],
        mode=mode,
        q_threshold=q,
        s_threshold=s_thr,
        monogamy_threshold=mono_thr,
        secure=s > s_thr,
        monogamous=s > mono_thr,
    )


@dataclass(frozen=True)
class SteeringSummary:
    """S, QBER, and the fidelity statistics they are built from."""

    s: float
    n_bases: int
    qber: float
    f_mean: float
    variance: float
    f_min: float
    f_max: float
    branch_resolved_s: float | None = None

    def __post_init__(self):
        if not (self.f_min <= self.f_mean + PROB_TOL
                and self.f_mean <= self.f_max + PROB_TOL):
            raise ValidationError("fidelity statistics violate min <= mean <= max")
        if not -PROB_TOL <= self.s <= self.n_bases + PROB_TOL:
            raise ValidationError(f"S = {self.s} outside [0, {self.n_bases}]")
        if not -PROB_TOL <= self.qber <= 1 + PROB_TOL:
            raise ValidationError(f"QBER = {self.qber} outside [0, 1]")

    def to_json(self) -> dict:
        # Threshold constants echoed for auditability.
        payload = {
            "s": self.s,
            "n_bases": self.n_bases,
            "qber": self.qber,
            "f_mean": self.f_mean,
            "variance": self.variance,
            "f_min": self.f_min,
            "f_max": self.f_max,
            "individual_q_threshold": individual_attack_qber(self.n_bases),
            "individual_s_threshold": 1.0 if self.n_bases == 2 else 4.0 / 3.0,
            "monogamy_threshold": monogamy_threshold(self.n_bases),
        }
        if self.branch_resolved_s is not None:
            payload["branch_resolved_s"] = self.branch_resolved_s
        return payload


def summarize_table(table: FidelityTable, branch_resolved_s: float | None = None) -> SteeringSummary:
    return SteeringSummary(
        s=steering_parameter(table),
        n_bases=table.n_bases,
        qber=qber(table),
        f_mean=table.f_mean(),
        variance=table.f_variance(),
        f_min=table.f_min(),
        f_max=table.f_max(),
        branch_resolved_s=branch_resolved_s,
    )


def summarize(channel: Channel, n_bases: int, bases=None) -> SteeringSummary:
    """Full steering summary of a channel, both estimators included."""
    table = fidelity_table(channel, n_bases, bases)
    return summarize_table(
        table, branch_resolved_s=branch_resolved_steering(channel, n_bases, bases)
    )
