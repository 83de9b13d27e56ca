"""Steering reports: every metric, bound, residual, weight, and verdict for
one channel or one simulated session, in a single JSON-serializable bundle.

Thresholds are always echoed alongside verdicts so reports are auditable
without re-deriving constants.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .assemblage import build_assemblage
from .channels import Channel, make_channel
from .metrics import (
    FidelityTable,
    SecurityVerdict,
    SteeringSummary,
    bhatia_davis_slack,
    branch_resolved_steering,
    channel_statistics,
    fidelity_table,
    qber_lower_bound,
    qber_upper_bound,
    security_verdict,
    steering_parameter,
    steering_parameter_from_statistics,
    summarize_table,
    variance_identity_residual,
)
from .sdp import SDP_TOL, WeightResult, steerable_weight
from .serialize import SCHEMA_VERSION


@dataclass
class SteeringReport:
    """Full analysis bundle around one fidelity table."""

    source: str  # "analytic" or "simulation"
    bases: tuple[int, ...]
    fidelity_table: FidelityTable
    summary: SteeringSummary
    qber_lower: float
    qber_upper: float | None
    variance_residual: float
    bd_slack: float
    weight: WeightResult | None
    verdicts: tuple[SecurityVerdict, ...]
    details: dict = field(default_factory=dict)

    @property
    def n_bases(self) -> int:
        return len(self.bases)

    def verdict(self, mode: str) -> SecurityVerdict:
        for v in self.verdicts:
            if v.mode == mode:
                return v
        raise KeyError(mode)

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "source": self.source,
            "n_bases": self.n_bases,
            "bases": list(self.bases),
            "fidelity_table": self.fidelity_table.to_json(),
            "summary": self.summary.to_json(),
            "qber_lower_bound": self.qber_lower,
            "qber_upper_bound": self.qber_upper,
            "variance_identity_residual": self.variance_residual,
            "bhatia_davis_slack": self.bd_slack,
            "weight": self.weight.to_json() if self.weight is not None else None,
            "verdicts": [v.to_json() for v in self.verdicts],
            "details": self.details,
        }


def report_from_table(table: FidelityTable, *, source: str,
                      branch_resolved_s: float | None = None,
                      weight: WeightResult | None = None,
                      q_override: float | None = None,
                      details: dict | None = None) -> SteeringReport:
    """Assemble the report scaffolding shared by the analytic and simulated
    paths; verdicts use the observed steering parameter."""
    s = steering_parameter(table)
    summary = summarize_table(table, branch_resolved_s=branch_resolved_s)
    f_min = table.f_min()
    # Upper bound evaluated at the largest allowed fidelity (1), which is
    # valid for every table; the observed-range form fails for
    # fidelity-inverting channels.
    upper = qber_upper_bound(s, table.n_bases, f_min, 1.0) if f_min > 0 else None
    verdicts = (
        security_verdict(s, table.n_bases, "individual"),
        security_verdict(s, table.n_bases, "unconditional", q_override),
    )
    return SteeringReport(
        source=source,
        bases=table.bases,
        fidelity_table=table,
        summary=summary,
        qber_lower=qber_lower_bound(s, table.n_bases),
        qber_upper=upper,
        variance_residual=variance_identity_residual(table),
        bd_slack=bhatia_davis_slack(table),
        weight=weight,
        verdicts=verdicts,
        details=details or {},
    )


def analytic_report(channel, n_bases: int, bases=None, *,
                    q_override: float | None = None,
                    sdp_tol: float = SDP_TOL,
                    compute_weight: bool = True) -> SteeringReport:
    """Exact report for a known channel (spec dict or Channel)."""
    if not isinstance(channel, Channel):
        channel = make_channel(channel)
    table = fidelity_table(channel, n_bases, bases)
    weight = None
    if compute_weight:
        weight = steerable_weight(
            build_assemblage(channel, n_bases, bases), tol=sdp_tol
        )
    cond, priors = channel_statistics(channel, n_bases, bases)
    details = {
        "s_from_statistics": steering_parameter_from_statistics(cond, priors),
    }
    return report_from_table(
        table,
        source="analytic",
        branch_resolved_s=branch_resolved_steering(channel, n_bases, bases),
        weight=weight,
        q_override=q_override,
        details=details,
    )
