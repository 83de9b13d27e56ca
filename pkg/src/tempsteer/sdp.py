"""Steerable weight via an in-repo primal-dual interior-point solver.

The weight SDP asks for the largest total trace of hidden states rho_gamma
subject to

    rho_{a|A_i} - sum_gamma D_gamma(a|A_i) rho_gamma  >=  0   for all (i, a),
    rho_gamma >= 0                                            for all gamma,

and the temporal steerable weight is w_t = 1 - optimum. All matrix blocks
are 2x2 Hermitian, which this solver exploits twice over:

* In the Pauli basis a Hermitian matrix H = h0 I + h.sigma is the real
  4-vector (h0, h) and the PSD cone is exactly the Lorentz cone h0 >= |h|,
  so every Jordan-algebra operation the interior-point method needs
  (square roots, inverses, quadratic representations, Nesterov-Todd
  scaling) has a closed form. Newton steps reduce to a dense
  positive-definite solve of at most 8N equations (N = number of bases),
  with Mehrotra predictor-corrector and a 0.98 fraction-to-boundary rule,
  run in extended precision because degenerate optimal faces (see below)
  push the normal equations' conditioning like 1/mu^2.

* Rank-one assemblage members (pure conditional states - identity-like
  channels, dephasing axes) make the feasible region lose its interior:
  any PSD matrix dominated by a rank-one matrix is a multiple of it. A
  facial-reduction presolve therefore pins the affected hidden states to
  scalar multiples of the member's range projector (or to zero when two
  incompatible rays pin the same state), turning those blocks into
  nonnegative scalars and the singular constraints into scalar
  inequalities. The reduced problem is a mixed cone program over 2x2
  blocks and nonnegative scalars with a genuine interior, which the same
  interior-point loop handles (a scalar is a one-dimensional Jordan
  algebra). Without this step no double-precision solver certifies tight
  gaps on such instances.

Weak duality holds at every iterate; at convergence the dual variables are
returned as an explicit certificate (Z_{a|A_i} >= 0 with
sum_i D_gamma(a|A_i) Z_{a|A_i} >= I for every gamma, and dual objective
sum tr(Z_{a|A_i} rho_{a|A_i}) meeting the primal optimum). For reduced
singular constraints the certificate is lifted back to the full space by
adding multiples of the complementary projector, which costs nothing in
the dual objective.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assemblage import Assemblage, StrategyTable, check_consistency, strategy_table
from .qubit import IDENTITY, ValidationError, hermitian_eigvals
from .serialize import SCHEMA_VERSION, matrix_to_json

SDP_TOL = 1e-8
MAX_ITER = 200
WEIGHT_ZERO_TOL = 1e-6
FACIAL_TOL = 1e-10
_STEP_FRACTION = 0.98
_HUGE_STEP = 1e30


class SolverError(RuntimeError):
    """Raised when the interior-point solve cannot certify an optimum."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


# ---------------------------------------------------------------------------
# Pauli (spin) coordinates: Hermitian 2x2 <-> R^4
# ---------------------------------------------------------------------------

def spin_from_herm(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    return np.array([
        (m[0, 0] + m[1, 1]).real / 2,
        m[0, 1].real,
        -m[0, 1].imag,
        (m[0, 0] - m[1, 1]).real / 2,
    ])


def herm_from_spin(v) -> np.ndarray:
    h0, h1, h2, h3 = (float(t) for t in v)
    return np.array(
        [[h0 + h3, h1 - 1j * h2], [h1 + 1j * h2, h0 - h3]], dtype=complex
    )


# ---------------------------------------------------------------------------
# Jordan-algebra primitives for stacks of 4-dim spin cones, shape (K, 4)
# ---------------------------------------------------------------------------

def _jdet(x):
    return x[:, 0] ** 2 - (x[:, 1:] ** 2).sum(axis=1)


def _jmin_eig(x):
    return x[:, 0] - np.sqrt((x[:, 1:] ** 2).sum(axis=1))


def _jmul(x, y):
    out = np.empty_like(x)
    out[:, 0] = (x * y).sum(axis=1)
    out[:, 1:] = x[:, :1] * y[:, 1:] + y[:, :1] * x[:, 1:]
    return out


def _jsolve(lam, d):
    """z with lam o z = d (lam interior)."""
    det = _jdet(lam)
    z0 = (lam[:, 0] * d[:, 0] - (lam[:, 1:] * d[:, 1:]).sum(axis=1)) / det
    zvec = (d[:, 1:] - z0[:, None] * lam[:, 1:]) / lam[:, :1]
    return np.concatenate([z0[:, None], zvec], axis=1)


def _jsqrt(x):
    """Square root of PSD elements (eigenvalues clipped at 0 for safety)."""
    r = np.sqrt((x[:, 1:] ** 2).sum(axis=1))
    lo = np.sqrt(np.clip(x[:, 0] - r, 0.0, None))
    hi = np.sqrt(np.clip(x[:, 0] + r, 0.0, None))
    out = np.empty_like(x)
    out[:, 0] = (hi + lo) / 2
    coeff = np.where(r > 0, (hi - lo) / (2 * np.where(r > 0, r, 1.0)), 0.0)
    out[:, 1:] = coeff[:, None] * x[:, 1:]
    return out


def _jinv(x):
    det = _jdet(x)
    out = np.empty_like(x)
    out[:, 0] = x[:, 0] / det
    out[:, 1:] = -x[:, 1:] / det[:, None]
    return out


def _quad_apply(x, y):
    """Quadratic representation Q_x y = 2 (x.y) x - det(x) J y."""
    dot = (x * y).sum(axis=1)
    det = _jdet(x)
    out = 2 * dot[:, None] * x
    out[:, 0] -= det * y[:, 0]
    out[:, 1:] += det[:, None] * y[:, 1:]
    return out


def _quad_matrices(x):
    """Q_x as explicit 4x4 blocks, shape (K, 4, 4)."""
    k = x.shape[0]
    det = _jdet(x)
    jmat = np.diag([1.0, -1.0, -1.0, -1.0]).astype(x.dtype)
    out = 2 * np.einsum("ki,kj->kij", x, x)
    out -= det[:, None, None] * jmat[None, :, :]
    return out.reshape(k, 4, 4)


# ---------------------------------------------------------------------------
# Mixed-cone points: a stack of spin blocks plus a nonnegative-orthant tail.
# A scalar cone is the one-dimensional Jordan algebra (det t = t, Q_t = t^2).
# ---------------------------------------------------------------------------

class _Point:
    __slots__ = ("sp", "ln")

    def __init__(self, sp, ln):
        self.sp = sp  # (K, 4)
        self.ln = ln  # (L,)

    @classmethod
    def identity(cls, n_spin, n_lin, dtype=np.longdouble):
        sp = np.zeros((n_spin, 4), dtype=dtype)
        sp[:, 0] = 1.0
        return cls(sp, np.ones(n_lin, dtype=dtype))

    def copy(self):
        return _Point(self.sp.copy(), self.ln.copy())

    def flat(self):
        return np.concatenate([self.sp.ravel(), self.ln])

    def axpy(self, alpha, other):
        return _Point(self.sp + alpha * other.sp, self.ln + alpha * other.ln)

    def dot(self, other) -> float:
        return float((self.sp * other.sp).sum() + (self.ln * other.ln).sum())

    def min_eig(self):
        vals = [np.inf]
        if self.sp.size:
            vals.append(float(_jmin_eig(self.sp).min()))
        if self.ln.size:
            vals.append(float(self.ln.min()))
        return min(vals)

    def min_det(self):
        vals = [np.inf]
        if self.sp.size:
            vals.append(float(_jdet(self.sp).min()))
        if self.ln.size:
            vals.append(float(self.ln.min()))
        return min(vals)

    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.sp)) and np.all(np.isfinite(self.ln)))


def _p_mul(x, y):
    return _Point(_jmul(x.sp, y.sp), x.ln * y.ln)


def _p_solve(lam, d):
    return _Point(_jsolve(lam.sp, d.sp), d.ln / lam.ln)


def _p_sqrt(x):
    return _Point(_jsqrt(x.sp), np.sqrt(np.clip(x.ln, 0.0, None)))


def _p_inv(x):
    return _Point(_jinv(x.sp), 1.0 / x.ln)


def _p_quad(x, y):
    return _Point(_quad_apply(x.sp, y.sp), x.ln**2 * y.ln)


def _p_max_step(x, dx):
    """Largest alpha with x + alpha*dx still in the cone (x interior)."""
    best = _HUGE_STEP
    if x.sp.size:
        u = _quad_apply(_jsqrt(_jinv(x.sp)), dx.sp)
        worst = float(_jmin_eig(u).min())
        if worst < 0:
            best = min(best, 1.0 / (-worst))
    if x.ln.size:
        ratio = dx.ln / x.ln
        worst = float(ratio.min())
        if worst < 0:
            best = min(best, 1.0 / (-worst))
    return best


def _cholesky_solve_extended(mat, rhs):
    """Cholesky solve in extended precision (n <= 24, so the Python-level
    factor loop is cheap). Raises LinAlgError if the matrix is not PD."""
    a = mat.astype(np.longdouble)
    r = rhs.astype(np.longdouble)
    n = a.shape[0]
    chol = np.zeros_like(a)
    for j in range(n):
        diag = a[j, j] - (chol[j, :j] ** 2).sum()
        if not diag > 0:
            raise np.linalg.LinAlgError("normal equations not positive definite")
        chol[j, j] = np.sqrt(diag)
        if j + 1 < n:
            chol[j + 1:, j] = (a[j + 1:, j] - chol[j + 1:, :j] @ chol[j, :j]) / chol[j, j]
    z = np.zeros_like(r)
    for j in range(n):
        z[j] = (r[j] - chol[j, :j] @ z[:j]) / chol[j, j]
    out = np.zeros_like(r)
    for j in range(n - 1, -1, -1):
        out[j] = (z[j] - chol[j + 1:, j] @ out[j + 1:]) / chol[j, j]
    return out


@dataclass
class _IterateMetrics:
    primal_residual: float
    dual_residual: float
    gap: float
    mu: float

    def worst(self) -> float:
        return max(self.primal_residual, self.dual_residual, self.gap)


def _solve_cone_program(a_sp, a_ln, b, c_sp, c_ln, tol, max_iter):
    """min <c, x>  s.t.  A x = b  over spin blocks x.sp and nonnegative
    scalars x.ln. a_sp has shape (m, K, 4), a_ln shape (m, L). Returns
    (x, y, s, status, iterations, metrics), everything float64.
    """
    a_sp = a_sp.astype(np.longdouble)
    a_ln = a_ln.astype(np.longdouble)
    b = b.astype(np.longdouble)
    c = _Point(c_sp.astype(np.longdouble), c_ln.astype(np.longdouble))
    m = b.shape[0]
    n_spin, n_lin = a_sp.shape[1], a_ln.shape[1]
    rank = 2 * n_spin + n_lin
    x = _Point.identity(n_spin, n_lin)
    s = _Point.identity(n_spin, n_lin)
    y = np.zeros(m, dtype=np.longdouble)
    e = _Point.identity(n_spin, n_lin)
    b_scale = 1.0 + float(np.abs(b).max()) if m else 1.0
    c_scale = 1.0 + max(
        float(np.abs(c.sp).max()) if c.sp.size else 0.0,
        float(np.abs(c.ln).max()) if c.ln.size else 0.0,
    )
    status = "numerical-failure"
    best = None
    metrics = None

    def apply_a(p):
        out = np.zeros(m, dtype=np.longdouble)
        if n_spin:
            out += np.einsum("mki,ki->m", a_sp, p.sp)
        if n_lin:
            out += a_ln @ p.ln
        return out

    def apply_at(vec):
        sp = np.einsum("mki,m->ki", a_sp, vec) if n_spin else np.zeros((0, 4), dtype=np.longdouble)
        ln = vec @ a_ln if n_lin else np.zeros(0, dtype=np.longdouble)
        return _Point(sp, ln)

    for it in range(1, max_iter + 1):
        rp = b - apply_a(x)
        aty = apply_at(y)
        rd = _Point(c.sp - aty.sp - s.sp, c.ln - aty.ln - s.ln)
        cx = c.dot(x)
        by = float(b @ y)
        mu = x.dot(s) / rank
        rd_norm = max(
            float(np.abs(rd.sp).max()) if rd.sp.size else 0.0,
            float(np.abs(rd.ln).max()) if rd.ln.size else 0.0,
        )
        metrics = _IterateMetrics(
            primal_residual=(float(np.abs(rp).max()) if m else 0.0) / b_scale,
            dual_residual=rd_norm / c_scale,
            gap=abs(cx - by) / (1.0 + abs(cx) + abs(by)),
            mu=mu,
        )
        if best is None or metrics.worst() < best[0].worst():
            best = (metrics, x.copy(), y.copy(), s.copy(), it)
        if metrics.primal_residual <= tol and metrics.dual_residual <= tol \
                and abs(cx - by) <= tol and mu <= tol:
            status = "optimal"
            break
        # Primal infeasibility certificate: y with A^T y + s ~ 0, s in cone,
        # b.y > 0.
        cert = _Point(aty.sp + s.sp, aty.ln + s.ln)
        cert_norm = max(
            float(np.abs(cert.sp).max()) if cert.sp.size else 0.0,
            float(np.abs(cert.ln).max()) if cert.ln.size else 0.0,
        )
        if by > 1.0 and cert_norm <= 1e-9 * by:
            status = "infeasible"
            break

        # Nesterov-Todd scaling point w: Q_w s = x.
        u = _p_sqrt(x)
        v = _p_quad(u, s)
        w = _p_quad(u, _p_sqrt(_p_inv(v)))
        whalf = _p_sqrt(w)
        whalf_inv = _p_inv(whalf)
        lam = _p_quad(whalf, s)
        if not w.finite() or lam.min_det() <= 0:
            break
        qw_sp = _quad_matrices(w.sp) if n_spin else np.zeros((0, 4, 4), dtype=np.longdouble)
        w_ln_sq = w.ln**2

        schur = np.zeros((m, m), dtype=np.longdouble)
        if n_spin:
            aq = np.einsum("mki,kij->mkj", a_sp, qw_sp)
            schur += np.einsum("mkj,nkj->mn", aq, a_sp)
        if n_lin:
            schur += np.einsum("mk,k,nk->mn", a_ln, w_ln_sq, a_ln)

        def apply_qw(p):
            sp = np.einsum("kij,kj->ki", qw_sp, p.sp) if n_spin else p.sp
            return _Point(sp, w_ln_sq * p.ln)

        a_qw_rd = apply_a(apply_qw(rd))

        def newton(d_compl):
            dtil = _p_solve(lam, d_compl)
            wh_d = _p_quad(whalf, dtil)
            rhs = rp - apply_a(wh_d) + a_qw_rd
            dy = _cholesky_solve_extended(schur, rhs)
            atdy = apply_at(dy)
            ds = _Point(rd.sp - atdy.sp, rd.ln - atdy.ln)
            qw_ds = apply_qw(ds)
            dx = _Point(wh_d.sp - qw_ds.sp, wh_d.ln - qw_ds.ln)
            return dx, dy, ds

        try:
            lam_sq = _p_mul(lam, lam)
            neg_lam_sq = _Point(-lam_sq.sp, -lam_sq.ln)
            dx_aff, dy_aff, ds_aff = newton(neg_lam_sq)
            alpha_aff = min(1.0, _p_max_step(x, dx_aff), _p_max_step(s, ds_aff))
            mu_aff = x.axpy(alpha_aff, dx_aff).dot(s.axpy(alpha_aff, ds_aff)) / rank
            sigma = min(max((mu_aff / mu) ** 3, 0.0), 1.0) if mu > 0 else 0.0

            cross = _p_mul(_p_quad(whalf_inv, dx_aff), _p_quad(whalf, ds_aff))
            target = _Point(
                sigma * mu * e.sp - lam_sq.sp - cross.sp,
                sigma * mu * e.ln - lam_sq.ln - cross.ln,
            )
            dx, dy, ds = newton(target)
        except np.linalg.LinAlgError:
            break
        if not (dx.finite() and ds.finite()):
            break
        alpha = min(1.0, _STEP_FRACTION * min(_p_max_step(x, dx), _p_max_step(s, ds)))
        # Rounding in the step bound can overshoot on nearly singular
        # blocks; back off until both iterates stay strictly interior.
        while alpha > 1e-14:
            x_new = x.axpy(alpha, dx)
            s_new = s.axpy(alpha, ds)
            if x_new.min_det() > 0 and s_new.min_det() > 0 \
                    and x_new.min_eig() > 0 and s_new.min_eig() > 0:
                break
            alpha *= 0.9
        if alpha <= 1e-14:
            break
        x = x.axpy(alpha, dx)
        s = s.axpy(alpha, ds)
        y = y + alpha * dy
    else:
        it = max_iter

    if status not in ("optimal", "infeasible"):
        metrics, x, y, s, it = best
    x64 = _Point(x.sp.astype(np.float64), x.ln.astype(np.float64))
    s64 = _Point(s.sp.astype(np.float64), s.ln.astype(np.float64))
    return x64, y.astype(np.float64), s64, status, it, metrics


# ---------------------------------------------------------------------------
# Weight SDP: problem container, facial reduction, solution, public API
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SdpProblem:
    """Weight SDP data: one variable block per deterministic strategy, one
    PSD constraint per assemblage member (plus variable positivity)."""

    bases: tuple[int, ...]
    table: StrategyTable
    members: dict  # (i, a) -> 2x2 Hermitian constant

    @property
    def n_bases(self) -> int:
        return len(self.bases)

    @property
    def n_variables(self) -> int:
        return self.table.n_strategies

    @property
    def n_lmi_constraints(self) -> int:
        return 2 * self.n_bases

    def member_order(self) -> list[tuple[int, int]]:
        """Members in strategy-table row order."""
        return [(self.bases[pos - 1], a) for (a, pos) in self.table.rows]

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "steerable_weight",
            "n_bases": self.n_bases,
            "bases": list(self.bases),
            "objective": "maximize total trace of hidden states",
            "members": [
                {"i": i, "a": a, "matrix": matrix_to_json(self.members[(i, a)])}
                for (i, a) in self.member_order()
            ],
            "strategy_table": self.table.to_json(),
        }


@dataclass(frozen=True)
class SdpSolution:
    """Primal-dual pair with certificate and solver metadata."""

    rho_gamma: tuple
    slacks: tuple
    dual_certificate: tuple
    primal_value: float
    dual_value: float
    gap: float
    status: str
    iterations: int
    primal_residual: float
    dual_residual: float
    mu: float

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "status": self.status,
            "primal_value": self.primal_value,
            "dual_value": self.dual_value,
            "gap": self.gap,
            "iterations": self.iterations,
            "kkt_residuals": {
                "primal": self.primal_residual,
                "dual": self.dual_residual,
                "complementarity": self.mu,
            },
            "rho_gamma": [matrix_to_json(r) for r in self.rho_gamma],
            "dual_certificate": [matrix_to_json(z) for z in self.dual_certificate],
        }


def build_weight_sdp(asm: Assemblage) -> SdpProblem:
    """Assemble the weight SDP for a consistent assemblage."""
    residual = check_consistency(asm)
    if residual > 1e-8:
        raise ValidationError(f"assemblage violates consistency by {residual:.3e}")
    table = strategy_table(asm.n_bases)
    return SdpProblem(bases=asm.bases, table=table, members=dict(asm.members))


def _bloch_direction(member):
    """Unit Bloch vector of a (near-)rank-one member's range projector."""
    v = spin_from_herm(member)
    norm = float(np.linalg.norm(v[1:]))
    if norm == 0.0:
        return None
    return v[1:] / norm


def _projector_from_direction(n_hat):
    h = np.concatenate([[0.5], 0.5 * np.asarray(n_hat)])
    return herm_from_spin(h)


@dataclass
class _Reduction:
    """Facial-reduction bookkeeping.

    kinds[gamma]: "free" | "ray" | "zero"; directions[gamma] is the pinned
    unit Bloch direction for "ray" variables. singular_rows maps row index
    to (direction, trace) for rows reduced to scalar inequalities; rows in
    dropped_rows had (numerically) zero members.
    """

    kinds: list
    directions: list
    singular_rows: dict
    dropped_rows: set


def _presolve(problem: SdpProblem, facial_tol: float = FACIAL_TOL) -> _Reduction:
    table = problem.table
    kinds = ["free"] * table.n_strategies
    directions = [None] * table.n_strategies
    singular_rows = {}
    dropped_rows = set()
    for r, (a, pos) in enumerate(table.rows):
        member = problem.members[(problem.bases[pos - 1], a)]
        low, high = hermitian_eigvals(member)
        if low < -facial_tol or low > facial_tol:
            continue  # full-rank (or not PSD; the solver will certify that)
        if high <= facial_tol:
            # Zero member: every contributing hidden state vanishes.
            dropped_rows.add(r)
            for gamma in range(table.n_strategies):
                if table.matrix[r, gamma]:
                    kinds[gamma] = "zero"
                    directions[gamma] = None
            continue
        n_hat = _bloch_direction(member)
        trace = float((member[0, 0] + member[1, 1]).real)
        singular_rows[r] = (n_hat, trace)
        for gamma in range(table.n_strategies):
            if not table.matrix[r, gamma]:
                continue
            if kinds[gamma] == "zero":
                continue
            if kinds[gamma] == "free":
                kinds[gamma] = "ray"
                directions[gamma] = n_hat
            elif float(np.dot(directions[gamma], n_hat)) < 1.0 - 1e-9:
                # Pinned to two incompatible rays: only zero fits both.
                kinds[gamma] = "zero"
                directions[gamma] = None
    return _Reduction(kinds, directions, singular_rows, dropped_rows)


def _dual_lift(problem: SdpProblem, base_certificate: dict) -> list:
    """Complete the dual certificate on reduced rows.

    Singular rows carry z * projector from the scalar dual; adding
    kappa * (complementary projector) costs nothing in the dual objective
    (the member has no weight there) but restores
    sum_i D_gamma Z >= identity, which the reduced problem only enforced
    on the pinned rays. kappa is grown until a direct eigenvalue check
    passes.
    """
    table = problem.table
    lifts = {
        r: np.eye(2, dtype=complex) - _projector_from_direction(n_hat)
        for r, (n_hat, _f) in base_certificate["lift_projectors"].items()
    }
    for r in base_certificate["dropped"]:
        lifts[r] = np.eye(2, dtype=complex)
    zs = dict(base_certificate["z"])
    if not lifts:
        return [zs[r] for r in range(len(table.rows))]
    kappa = 1.0
    for _ in range(80):
        ok = True
        for gamma in range(table.n_strategies):
            total = np.zeros((2, 2), dtype=complex)
            for r in range(len(table.rows)):
                if not table.matrix[r, gamma]:
                    continue
                total = total + zs[r] + kappa * lifts.get(r, 0.0)
            if hermitian_eigvals(total - IDENTITY)[0] < -1e-9:
                ok = False
                break
        if ok:
            break
        kappa *= 2.0
    return [
        zs[r] + (kappa * lifts[r] if r in lifts else 0.0)
        for r in range(len(table.rows))
    ]


def solve(problem: SdpProblem, tol: float = SDP_TOL, max_iter: int = MAX_ITER) -> SdpSolution:
    """Solve the weight SDP; deterministic given identical inputs."""
    table = problem.table
    rows = table.rows
    n_rows = len(rows)
    members_in_order = [
        problem.members[(problem.bases[pos - 1], a)] for (a, pos) in rows
    ]
    reduction = _presolve(problem)

    free_vars = [g for g, kind in enumerate(reduction.kinds) if kind == "free"]
    ray_vars = [g for g, kind in enumerate(reduction.kinds) if kind == "ray"]
    spin_rows = [
        r for r in range(n_rows)
        if r not in reduction.singular_rows and r not in reduction.dropped_rows
    ]
    scalar_rows = sorted(reduction.singular_rows)

    # Column layout: [free gamma blocks, spin slacks][ray gammas, scalar slacks].
    n_spin = len(free_vars) + len(spin_rows)
    n_lin = len(ray_vars) + len(scalar_rows)
    m = 4 * len(spin_rows) + len(scalar_rows)

    a_sp = np.zeros((m, n_spin, 4))
    a_ln = np.zeros((m, n_lin))
    b = np.zeros(m)
    c_sp = np.zeros((n_spin, 4))
    c_ln = np.zeros(n_lin)
    for col, _g in enumerate(free_vars):
        c_sp[col, 0] = -2.0  # maximize total trace
    for col, _g in enumerate(ray_vars):
        c_ln[col] = -1.0  # trace of t * projector is t

    ray_proj_spin = {
        g: np.concatenate([[0.5], 0.5 * np.asarray(reduction.directions[g])])
        for g in ray_vars
    }
    eye4 = np.eye(4)
    for row_idx, r in enumerate(spin_rows):
        sl = slice(4 * row_idx, 4 * row_idx + 4)
        b[sl] = spin_from_herm(members_in_order[r])
        for col, g in enumerate(free_vars):
            if table.matrix[r, g]:
                a_sp[sl, col] = eye4
        for col, g in enumerate(ray_vars):
            if table.matrix[r, g]:
                a_ln[sl, col] = ray_proj_spin[g]
        a_sp[sl, len(free_vars) + row_idx] = eye4
    offset = 4 * len(spin_rows)
    for row_idx, r in enumerate(scalar_rows):
        eq = offset + row_idx
        _n_hat, trace = reduction.singular_rows[r]
        b[eq] = trace
        for col, g in enumerate(ray_vars):
            # Compatible rays contribute their full weight; incompatible
            # ones were zeroed in the presolve.
            if table.matrix[r, g]:
                a_ln[eq, col] = 1.0
        a_ln[eq, len(ray_vars) + row_idx] = 1.0

    if not free_vars and not ray_vars:
        # Every hidden state pinned to zero (all members pure, incompatible
        # rays): the optimum is exactly 0 and w_t = 1, no iterations needed.
        x = _Point(np.zeros((0, 4)), np.zeros(0))
        status, iterations = "optimal", 0
        metrics = _IterateMetrics(0.0, 0.0, 0.0, 0.0)
        y = np.zeros(m)
    else:
        x, y, _s, status, iterations, metrics = _solve_cone_program(
            a_sp, a_ln, b, c_sp, c_ln, tol, max_iter
        )

    # Postsolve: hidden states back in matrix form.
    rho_gamma = [np.zeros((2, 2), dtype=complex) for _ in range(table.n_strategies)]
    for col, g in enumerate(free_vars):
        rho_gamma[g] = herm_from_spin(x.sp[col])
    for col, g in enumerate(ray_vars):
        rho_gamma[g] = float(x.ln[col]) * _projector_from_direction(reduction.directions[g])

    slacks = []
    for r in range(n_rows):
        used = np.zeros((2, 2), dtype=complex)
        for g in range(table.n_strategies):
            if table.matrix[r, g]:
                used = used + rho_gamma[g]
        slacks.append(members_in_order[r] - used)

    # Dual certificate: spin rows carry -y/2; scalar rows carry the scalar
    # dual on the pinned projector, lifted by the complementary projector.
    z_map = {}
    for row_idx, r in enumerate(spin_rows):
        z_map[r] = herm_from_spin(-y[4 * row_idx:4 * row_idx + 4] / 2)
    for row_idx, r in enumerate(scalar_rows):
        n_hat, _f = reduction.singular_rows[r]
        z_scalar = max(float(-y[offset + row_idx]), 0.0)
        z_map[r] = z_scalar * _projector_from_direction(n_hat)
    for r in reduction.dropped_rows:
        z_map[r] = np.zeros((2, 2), dtype=complex)
    dual_certificate = _dual_lift(problem, {
        "z": z_map,
        "lift_projectors": reduction.singular_rows,
        "dropped": reduction.dropped_rows,
    })

    primal_value = sum(float(np.trace(r).real) for r in rho_gamma)
    dual_value = sum(
        float(np.trace(z @ f).real)
        for z, f in zip(dual_certificate, members_in_order)
    )
    return SdpSolution(
        rho_gamma=tuple(rho_gamma),
        slacks=tuple(slacks),
        dual_certificate=tuple(dual_certificate),
        primal_value=primal_value,
        dual_value=dual_value,
        gap=abs(dual_value - primal_value),
        status=status,
        iterations=iterations,
        primal_residual=metrics.primal_residual,
        dual_residual=metrics.dual_residual,
        mu=metrics.mu,
    )


def lmi_min_eigenvalues(problem: SdpProblem, rho_gamma) -> list[float]:
    """Smallest eigenvalue of each constraint residual
    rho_{a|A_i} - sum_gamma D_gamma rho_gamma, checked directly."""
    out = []
    for r, (a, pos) in enumerate(problem.table.rows):
        member = problem.members[(problem.bases[pos - 1], a)]
        used = np.zeros((2, 2), dtype=complex)
        for gamma in range(problem.table.n_strategies):
            if problem.table.matrix[r, gamma]:
                used = used + rho_gamma[gamma]
        out.append(hermitian_eigvals(member - used)[0])
    return out


@dataclass(frozen=True)
class WeightResult:
    """Steerable weight with its certificate.

    ``w_t`` is the reported weight (values below the zero tolerance are
    reported as exactly 0); ``w_raw`` retains the unrounded 1 - optimum.
    ``lhs_witness`` is the optimal unsteerable part.
    """

    w_t: float
    w_raw: float
    solution: SdpSolution
    lhs_witness: tuple
    min_variable_eig: float
    min_lmi_eig: float

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "w_t": self.w_t,
            "w_raw": self.w_raw,
            "min_variable_eig": self.min_variable_eig,
            "min_lmi_eig": self.min_lmi_eig,
            "solution": self.solution.to_json(),
        }


def steerable_weight(asm: Assemblage, tol: float = SDP_TOL,
                     zero_tol: float = WEIGHT_ZERO_TOL,
                     max_iter: int = MAX_ITER) -> WeightResult:
    """Temporal steerable weight w_t = 1 - (best unsteerable fraction).

    Zero iff the assemblage admits a local-hidden-state model; the optimal
    hidden states are returned as an explicit witness and re-verified by
    direct eigenvalue checks, independent of the solver's internal state.
    """
    problem = build_weight_sdp(asm)
    solution = solve(problem, tol=tol, max_iter=max_iter)
    if solution.status != "optimal":
        raise SolverError(
            f"weight SDP did not reach an optimum (status {solution.status})",
            solution=solution,
        )
    min_var = min(hermitian_eigvals(r)[0] for r in solution.rho_gamma)
    min_lmi = min(lmi_min_eigenvalues(problem, solution.rho_gamma))
    feas_tol = 1e3 * max(tol, solution.primal_residual)
    if min_var < -feas_tol or min_lmi < -feas_tol:
        raise SolverError(
            f"solver iterate violates positivity (var {min_var:.3e}, lmi {min_lmi:.3e})",
            solution=solution,
        )
    w_raw = 1.0 - solution.primal_value
    if solution.primal_value >= 1.0 - zero_tol:
        w_t = 0.0
    else:
        w_t = min(max(w_raw, 0.0), 1.0)
    return WeightResult(
        w_t=w_t,
        w_raw=w_raw,
        solution=solution,
        lhs_witness=solution.rho_gamma,
        min_variable_eig=min_var,
        min_lmi_eig=min_lmi,
    )


def unitary_invariance_check(asm: Assemblage, u, tol: float = SDP_TOL) -> float:
    """|w_t(asm) - w_t(U asm U^dagger)|.

    Conjugating every member while keeping the same strategy tables (i.e.
    co-rotating Bob's reference frame) must leave the weight unchanged; the
    returned difference is solver noise only.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or np.abs(u @ u.conj().T - IDENTITY).max() > 1e-10:
        raise ValidationError("expected a 2x2 unitary matrix")
    original = steerable_weight(asm, tol=tol)
    rotated = steerable_weight(asm.conjugate(u), tol=tol)
    return abs(original.w_t - rotated.w_t)


__all__ = [
    "SDP_TOL",
    "MAX_ITER",
    "WEIGHT_ZERO_TOL",
    "SolverError",
    "SdpProblem",
    "SdpSolution",
    "WeightResult",
    "build_weight_sdp",
    "solve",
    "steerable_weight",
    "unitary_invariance_check",
    "lmi_min_eigenvalues",
    "spin_from_herm",
    "herm_from_spin",
]
