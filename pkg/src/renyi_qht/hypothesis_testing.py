"""Exact finite-n hypothesis testing between ``rho^{(x)n}`` and ``sigma^{(x)n}``.

Tests are dense operators ``0 <= T <= I`` on the n-fold tensor power. The
optimal constrained tests come from the Neyman-Pearson family
``{rho_n - lambda sigma_n > 0}``, randomized between the two tests that
bracket the constraint; the error probabilities are affine in ``T`` so the
mixture meets the constraint exactly.
"""

import functools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .divergences import classical_f_alpha
from .exponents import ExponentContext, phi
from .operator_core import (
    DEFAULT_TOL,
    cluster_eigenvalues,
    max_dim,
    SizeCapError,
    spectral_projector_pos,
    tensor_power,
    tensor_power_eig,
)

BOUND_SLACK = 1e-9
_MAX_ITER = 200
_LOG_LAMBDA_XTOL = 1e-8
_CROSSING_OFFSET = 1e-7
# Eigenvalues of rho_n - lambda sigma_n above this multiple of ||A|| count as
# positive. ||A|| is dominated by lambda sigma_n at large lambda, so a wider
# cut would drop the (small but resolved) positive part of the test.
NP_FLOOR = 64 * np.finfo(float).eps
SCHUR_RATIO = 1e4
_CACHE_SIZE = 32  # eigenvector blocks kept per tensor power


@dataclass
class BinaryTest:
    """A test operator with its error probabilities on ``n`` copies.

    ``success`` is ``Tr rho_n T`` computed directly, so that small values
    keep full relative precision (``alpha_err = 1 - success``).
    """

    operator: np.ndarray
    n: int
    alpha_err: float
    beta_err: float
    success: float
    weight: float = 1.0  # randomization weight on the lower-lambda test, 1 if deterministic
    log_lambda: float = math.nan

    def __post_init__(self):
        for name in ("alpha_err", "beta_err", "success"):
            v = getattr(self, name)
            if not -1e-9 <= v <= 1 + 1e-9:
                raise ValueError(f"{name}={v!r} is not a probability")

    @property
    def log_success_rate(self):
        return math.log(self.success) / self.n if self.success > 0 else -math.inf

    @property
    def log_type2_rate(self):
        return math.log(self.beta_err) / self.n if self.beta_err > 0 else -math.inf


def _real_if_possible(a):
    return a.real.copy() if np.all(a.imag == 0) else a


@dataclass(eq=False)
class _Powers:
    """n-copy data in the product eigenbasis of ``sigma_n``."""

    n: int
    rho_n: np.ndarray  # rho^{(x)n} in the sigma_n eigenbasis
    log_s: np.ndarray  # log eigenvalues of sigma_n, -inf off the support
    basis: np.ndarray  # single-copy eigenvectors of sigma
    rho_norm: float
    log_crossings: np.ndarray  # log of the distinct eigenvalues of sigma_n^{-1/2} rho_n sigma_n^{-1/2}
    cache: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.rho_n.shape[0]

    def to_standard(self, x):
        """Map columns from the sigma_n eigenbasis to the standard basis."""
        out = x.reshape((self.basis.shape[0],) * self.n + (x.shape[1],))
        for axis in range(self.n):
            out = np.tensordot(self.basis, out, axes=([1], [axis]))
            out = np.moveaxis(out, 0, axis)
        return out.reshape(self.dim, x.shape[1])


def _check_size(ctx, n):
    if n < 1:
        raise ValueError("n must be a positive integer")
    dim = ctx.pair.dim ** n
    cap = max_dim()
    if dim > cap:
        raise SizeCapError(dim, cap)


@functools.lru_cache(maxsize=4)
def _powers(ctx, n, cap):
    pair = ctx.pair
    w, v = pair.sigma_eig
    r1 = v.conj().T @ pair.rho @ v
    r1 = (r1 + r1.conj().T) / 2
    rho_n = _real_if_possible(tensor_power(r1, n, cap=cap))
    with np.errstate(divide="ignore"):
        log_w = np.where(pair._sigma_support(), np.log(np.clip(w, 1e-300, None)), -np.inf)
    log_s = log_w
    for _ in range(n - 1):
        log_s = np.add.outer(log_s, log_w).ravel()
    mu = np.linalg.eigvalsh(pair.sandwiched(-0.5))
    mu = mu[mu > pair.tol.tau_supp * mu[-1]]
    logs = np.log(mu)
    acc = logs
    for _ in range(n - 1):
        acc = np.add.outer(acc, logs).ravel()
    acc = np.sort(acc)
    keep = np.concatenate(([True], np.diff(acc) > 1e-9 * np.maximum(1.0, np.abs(acc[1:]))))
    rho_norm = float(np.max(pair.rho_eig.eigenvalues)) ** n
    return _Powers(n, rho_n, log_s, _real_if_possible(v), rho_norm, acc[keep])


def tensor_powers(ctx, n):
    """``(rho^{(x)n}, sigma^{(x)n})`` in the standard basis."""
    _check_size(ctx, n)
    return tensor_power(ctx.pair.rho, n), tensor_power(ctx.pair.sigma, n)


def _positive_eigvecs(pw, log_lam):
    """Orthonormal basis (sigma_n eigenbasis) of the positive part of ``rho_n - lambda sigma_n``.

    Rows where ``lambda s_i`` exceeds ``SCHUR_RATIO * ||rho_n||`` form a
    strongly negative definite block; it is eliminated through a Schur
    complement so that the remaining eigenproblem has norm of order
    ``||rho_n||`` and small positive eigenvalues stay resolved. The
    dependence of the complement on the eigenvalue is kept to first order
    as a generalized eigenproblem; the neglected term is below
    ``||rho_n|| / SCHUR_RATIO**3``.
    """
    with np.errstate(over="ignore"):
        g = np.exp(log_lam + pw.log_s)
    heavy = g > SCHUR_RATIO * pw.rho_norm
    r = pw.rho_n
    if not heavy.any():
        a = r - np.diag(g)
        try:
            w, v = np.linalg.eigh(a)
        except np.linalg.LinAlgError:
            w, v = scipy.linalg.eigh(a, driver="evr")
        return v[:, w > NP_FLOOR * np.max(np.abs(w))]
    light = ~heavy
    li, hi = np.flatnonzero(light), np.flatnonzero(heavy)
    if li.size == 0:
        return np.zeros((pw.dim, 0), dtype=r.dtype)
    dh = 1.0 / np.sqrt(g[hi])
    m = np.eye(hi.size) - dh[:, None] * r[np.ix_(hi, hi)] * dh[None, :]
    chol = scipy.linalg.cho_factor(m)
    r_hl = r[np.ix_(hi, li)]
    z = dh[:, None] * scipy.linalg.cho_solve(chol, dh[:, None] * r_hl)  # -A_HH^{-1} A_HL
    z2 = dh[:, None] * scipy.linalg.cho_solve(chol, dh[:, None] * z)  # A_HH^{-2} A_HL
    s0 = r[np.ix_(li, li)] - np.diag(g[li]) + r_hl.conj().T @ z
    k = r_hl.conj().T @ z2
    s0 = (s0 + s0.conj().T) / 2
    b = np.eye(li.size) + (k + k.conj().T) / 2
    theta, xl = scipy.linalg.eigh(s0, b)
    pos = theta > NP_FLOOR * max(np.max(np.abs(theta)), pw.rho_norm)
    theta, xl = theta[pos], xl[:, pos]
    x = np.zeros((pw.dim, xl.shape[1]), dtype=np.result_type(r, xl))
    x[li] = xl
    x[hi] = z @ xl - (z2 @ xl) * theta[None, :]
    if x.shape[1]:
        x, _ = np.linalg.qr(x)
    return x


def _np_eval(ctx, pw, log_lam):
    """Positive-part basis of ``rho_n - e^{log_lam} sigma_n`` and its errors."""
    hit = pw.cache.get(log_lam)
    if hit is not None:
        return hit
    x = _positive_eigvecs(pw, log_lam)
    success = float(np.sum(x.conj() * (pw.rho_n @ x)).real)
    with np.errstate(under="ignore"):
        s = np.exp(pw.log_s)
    beta = float(np.sum(s[:, None] * np.abs(x) ** 2))
    out = (x, min(max(success, 0.0), 1.0), min(max(beta, 0.0), 1.0))
    if len(pw.cache) >= _CACHE_SIZE:
        pw.cache.pop(next(iter(pw.cache)))
    pw.cache[log_lam] = out
    return out


def _projector(pw, x):
    y = pw.to_standard(x)
    return y @ y.conj().T


def np_test(ctx, n, a):
    """The Neyman-Pearson test ``S_n(a) = {rho_n - e^{na} sigma_n > 0}``."""
    _check_size(ctx, n)
    pw = _powers(ctx, n, max_dim())
    if a >= ctx.a_max:
        return BinaryTest(np.zeros((pw.dim, pw.dim)), n, 1.0, 0.0, 0.0, log_lambda=n * a)
    x, success, beta = _np_eval(ctx, pw, n * a)
    return BinaryTest(_projector(pw, x), n, 1.0 - success, beta, success, log_lambda=n * a)


def np_test_operator(rho_n, sigma_n, log_lam, tau_eq=NP_FLOOR):
    """Projector ``{rho_n - e^{log_lam} sigma_n > 0}`` by a direct dense eigensolve."""
    a = rho_n - math.exp(log_lam) * sigma_n
    p_pos, _ = spectral_projector_pos(a, tau_eq)
    return p_pos


def _bracket(ctx, pw):
    lo = pw.log_crossings[0] - 1.0
    hi = pw.log_crossings[-1] + 1.0
    return lo, hi


def _search(g, target, lo, hi, crossings):
    """Bracket ``target`` for the non-decreasing step-plus-smooth ``g(log lambda)``.

    ``g`` jumps only at ``crossings`` and is smooth in between. Crossings
    are split discretely; a single enclosed crossing is resolved by probing
    just either side of it; a crossing-free segment uses Illinois false
    position. Returns ``(lo, hi)`` with ``g(lo) <= target <= g(hi)``.
    """
    glo, ghi = g(lo), g(hi)
    side = 0
    for _ in range(_MAX_ITER):
        if hi - lo <= _LOG_LAMBDA_XTOL or glo == target:
            return lo, lo if glo == target else hi
        if ghi == target:
            return hi, hi
        inside = crossings[(crossings > lo) & (crossings < hi)]
        if inside.size > 1:
            k = inside.size // 2
            mid = 0.5 * (inside[k - 1] + inside[k])
        elif inside.size == 1:
            c = inside[0]
            d = min(_CROSSING_OFFSET, 0.25 * (c - lo), 0.25 * (hi - c))
            gm, gp = g(c - d), g(c + d)
            if gm <= target <= gp:
                return c - d, c + d
            if gm > target:
                hi, ghi = c - d, gm
            else:
                lo, glo = c + d, gp
            continue
        else:
            mid = hi - (ghi - target) * (hi - lo) / (ghi - glo) if ghi > glo else 0.5 * (lo + hi)
            # keep away from the ends so the bracket always shrinks
            w = hi - lo
            mid = min(max(mid, lo + 1e-3 * w), hi - 1e-3 * w)
        gmid = g(mid)
        if gmid <= target:
            lo, glo = mid, gmid
            if side == -1 and inside.size == 0:
                ghi = target + 0.5 * (ghi - target)
            side = -1
        else:
            hi, ghi = mid, gmid
            if side == 1 and inside.size == 0:
                glo = target - 0.5 * (target - glo)
            side = 1
    return lo, hi


def _grow_down(ctx, pw, lo, ok):
    # A rank-deficient rho needs lambda -> 0 before the test reaches supp rho.
    while not ok(_np_eval(ctx, pw, lo)) and lo > -700:
        lo -= 10.0
    return lo


def _mixture(ctx, pw, lo, hi, x):
    vlo, slo, blo = _np_eval(ctx, pw, lo)
    vhi, shi, bhi = _np_eval(ctx, pw, hi)
    op = x * _projector(pw, vlo) + (1.0 - x) * _projector(pw, vhi)
    success = x * slo + (1.0 - x) * shi
    beta = x * blo + (1.0 - x) * bhi
    return op, success, beta


def type2_optimal(ctx, n, eps):
    """Minimal type-II error over tests with type-I error at most ``eps``.

    Returns ``(beta_star, test)``; ``test`` is randomized so that its
    type-I error equals ``eps``.
    """
    if not 0 <= eps <= 1:
        raise ValueError(f"eps={eps} must lie in [0, 1]")
    _check_size(ctx, n)
    pw = _powers(ctx, n, max_dim())
    dim = pw.dim
    if eps >= 1:
        return 0.0, BinaryTest(np.zeros((dim, dim)), n, 1.0, 0.0, 0.0, weight=0.0)

    def alpha_of(log_lam):
        return 1.0 - _np_eval(ctx, pw, log_lam)[1]

    lo, hi = _bracket(ctx, pw)
    lo = _grow_down(ctx, pw, lo, lambda e: 1.0 - e[1] <= eps)
    if alpha_of(lo) > eps:
        raise ValueError("type-I error target is below what any finite lambda reaches")
    lo, hi = _search(alpha_of, eps, lo, hi, pw.log_crossings)
    a_lo, a_hi = alpha_of(lo), alpha_of(hi)
    x = 1.0 if a_hi - a_lo <= 0 else (a_hi - eps) / (a_hi - a_lo)
    x = min(max(x, 0.0), 1.0)
    op, success, beta = _mixture(ctx, pw, lo, hi, x)
    test = BinaryTest(op, n, 1.0 - success, beta, success, weight=x, log_lambda=0.5 * (lo + hi))
    return beta, test


@functools.lru_cache(maxsize=512)
def _constrained_search(ctx, n, r, cap):
    """``(lo, hi, x)`` of the optimal mixture, or ``None`` when ``T = I`` is feasible."""
    pw = _powers(ctx, n, cap)
    target = math.exp(-n * r)
    if target >= 1.0:
        return None

    def neg_beta(log_lam):
        return -_np_eval(ctx, pw, log_lam)[2]

    lo, hi = _bracket(ctx, pw)
    if -neg_beta(lo) < target:
        # lambda below every crossing: the test is already feasible
        _, s, b = _np_eval(ctx, pw, lo)
        if s >= 1.0 - 1e-15:
            return None
        lo = _grow_down(ctx, pw, lo, lambda e: e[2] >= target)
    lo, hi = _search(neg_beta, -target, lo, hi, pw.log_crossings)
    b_lo, b_hi = -neg_beta(lo), -neg_beta(hi)
    x = 0.0 if b_lo - b_hi <= 0 else (target - b_hi) / (b_lo - b_hi)
    return lo, hi, min(max(x, 0.0), 1.0)


def success_under_constraint(ctx, n, r, with_operator=True):
    """Maximal ``Tr rho_n T`` subject to ``Tr sigma_n T <= e^{-nr}``.

    Returns ``(success, test)``; ``success = 1 - alpha_{n,r}``.
    ``with_operator=False`` skips building the dense test operator.
    """
    if r < 0:
        raise ValueError("r must be non-negative")
    _check_size(ctx, n)
    cap = max_dim()
    found = _constrained_search(ctx, n, float(r), cap)
    dim = ctx.pair.dim ** n
    if found is None:
        op = np.eye(dim) if with_operator else None
        return 1.0, BinaryTest(op, n, 0.0, 1.0, 1.0)
    lo, hi, x = found
    pw = _powers(ctx, n, cap)
    _, slo, blo = _np_eval(ctx, pw, lo)
    _, shi, bhi = _np_eval(ctx, pw, hi)
    success = x * slo + (1.0 - x) * shi
    beta = x * blo + (1.0 - x) * bhi
    op = _mixture(ctx, pw, lo, hi, x)[0] if with_operator else None
    test = BinaryTest(op, n, 1.0 - success, beta, success, weight=x, log_lambda=0.5 * (lo + hi))
    return success, test


def scaled_test(ctx, n, r, a):
    """``T_n(r, a) = e^{-n(r - a - phi(a))} S_n(a)`` for ``r >= a + phi(a)``."""
    ph = phi(ctx, a)
    gap = r - a - ph
    if not math.isfinite(ph) or gap < -1e-12:
        raise ValueError(f"need r >= a + phi(a) = {a + ph}, got r={r}")
    gap = max(gap, 0.0)
    base = np_test(ctx, n, a)
    c = math.exp(-n * gap)
    return BinaryTest(
        c * base.operator, n, 1.0 - c * base.success, c * base.beta_err, c * base.success,
        weight=c, log_lambda=base.log_lambda,
    )


def pinched_classical_pair(ctx, n):
    """Joint eigenvalues ``(p, q)`` of the pinched ``rho_n`` and ``sigma_n``.

    Uses the Kronecker structure of the eigenbasis of ``sigma_n``: the
    pinching keeps the blocks of ``rho_n`` inside each eigenspace of
    ``sigma_n``, and each block is diagonalized separately.
    """
    pair = ctx.pair if isinstance(ctx, ExponentContext) else ctx
    if pair.dim ** n > max_dim():
        raise SizeCapError(pair.dim ** n, max_dim())
    w, v = pair.sigma_eig
    r1 = v.conj().T @ pair.rho @ v
    r1 = (r1 + r1.conj().T) / 2
    sn = tensor_power_eig((w, np.eye(len(w))), n).eigenvalues.real
    rn = _real_if_possible(tensor_power(r1, n))
    # product eigenvalues are exact, so tiny but nonzero ones are kept
    labels = cluster_eigenvalues(sn, pair.tol.tau_cluster, 0.0)
    ps, qs = [], []
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        block = rn[np.ix_(idx, idx)]
        ev = np.linalg.eigvalsh(block)
        ps.append(np.clip(ev, 0.0, None))
        qs.append(np.full(len(idx), float(np.mean(sn[idx]))))
    return np.concatenate(ps), np.concatenate(qs)


def pinched_count(ctx, n):
    """``v_n``: the number of distinct eigenvalues of ``sigma^{(x)n}``."""
    pair = ctx.pair if isinstance(ctx, ExponentContext) else ctx
    w = pair.sigma_eig.eigenvalues
    sn = tensor_power_eig((w, np.eye(len(w))), n).eigenvalues.real
    return int(cluster_eigenvalues(sn, pair.tol.tau_cluster, 0.0).max()) + 1


def pinched_f_alpha(ctx, n, alpha):
    p, q = pinched_classical_pair(ctx, n)
    return classical_f_alpha(p, q, alpha)


@dataclass
class RateRow:
    n: int
    rate_success: float
    rate_type2: float
    limit_success: float
    limit_type2: float
    dev_success: float
    dev_type2: float
    ok_success_bound: bool
    ok_type2_bound: bool
    ok_positive_part: bool

    @property
    def ok(self):
        return self.ok_success_bound and self.ok_type2_bound and self.ok_positive_part


@dataclass
class RateTable:
    a: float
    rows: list

    columns = (
        "n", "rate_success", "rate_type2", "limit_success", "limit_type2",
        "dev_success", "dev_type2", "ok_success_bound", "ok_type2_bound", "ok_positive_part",
    )

    @property
    def all_ok(self):
        return all(row.ok for row in self.rows)

    def as_records(self):
        return [{c: getattr(row, c) for c in self.columns} for row in self.rows]


def exponent_convergence(ctx, a, n_list, slack=BOUND_SLACK):
    """Per-n rates of ``S_n(a)`` against their limits ``-phi(a)`` and ``-(phi(a)+a)``."""
    if not ctx.d_umegaki < a < ctx.a_max:
        raise ValueError(f"a={a} must lie in (D, D_max) = ({ctx.d_umegaki}, {ctx.a_max})")
    ph = phi(ctx, a)
    rows = []
    for n in sorted(n_list):
        t = np_test(ctx, n, a)
        rs, rb = t.log_success_rate, t.log_type2_rate
        scale = 1.0 + math.exp(n * a)
        ok39 = t.success - math.exp(n * a) * t.beta_err >= -slack * scale
        rows.append(RateRow(
            n, rs, rb, -ph, -(ph + a), abs(rs + ph), abs(rb + ph + a),
            rs <= -ph + slack, rb <= -(ph + a) + slack, bool(ok39),
        ))
    return RateTable(a, rows)
