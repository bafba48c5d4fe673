"""Error-exponent calculus for binary quantum hypothesis testing.

``psi(s) = F_{1+s}(rho||sigma)`` is the log moment generating function of the
sandwiched quasi-entropy. Its Legendre-Fenchel transform ``phi`` on
``s >= 0`` governs the Neyman-Pearson tests, and the converse Hoeffding
divergence ``H*_r`` is the polar of ``tilde_psi(u) = (1-u) psi(u/(1-u))``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._numerics import bisect_increasing, central_derivative, golden_max, golden_min
from .divergences import (
    StatePair,
    d_max,
    f_alpha,
    log_schatten,
    renyi_new,
    renyi_old,
    umegaki,
)
from .operator_core import DEFAULT_TOL

_S_CAP = 1e8


class ExponentDomainError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ExponentContext:
    """A pair of distinct states with ``supp rho`` inside ``supp sigma``.

    ``a_max`` is the max-relative entropy and ``r_max = phi(a_max) + a_max``
    is the slope of ``tilde_psi`` at ``u = 1``.
    """

    pair: StatePair
    d_umegaki: float = field(init=False)
    d_max_val: float = field(init=False)
    r_max: float = field(init=False)

    def __post_init__(self):
        p = self.pair
        if not p.supp_ok:
            raise ExponentDomainError("supp rho is not contained in supp sigma")
        for name, tr in (("rho", p.trace_rho), ("sigma", p.trace_sigma)):
            if abs(tr - 1.0) > 1e-9:
                raise ExponentDomainError(f"{name} must have unit trace, got {tr!r}")
        if np.max(np.abs(p.rho - p.sigma)) <= 1e-8:
            raise ExponentDomainError("rho and sigma coincide; all exponents are trivial")
        object.__setattr__(self, "d_umegaki", umegaki(p))
        object.__setattr__(self, "d_max_val", d_max(p))
        object.__setattr__(self, "r_max", _slope_at_one(p, self.d_max_val))

    @classmethod
    def from_states(cls, rho, sigma, tol=DEFAULT_TOL):
        return cls(StatePair(rho, sigma, tol))

    @property
    def a_max(self):
        return self.d_max_val

    @property
    def phi_at_a_max(self):
        return self.r_max - self.d_max_val


def _slope_at_one(pair, dmax):
    """``lim_{u->1} tilde_psi'(u)`` by Richardson extrapolation of one-sided slopes.

    ``tilde_psi(1 - eps) = d_max - r_max eps + O(eps^2)`` up to terms of order
    ``(lambda_2/lambda_1)^(1/eps)``; ``eps`` is chosen small enough that
    those are below double precision.
    """
    w = np.linalg.eigvalsh(pair.sandwiched(-0.5))
    top = w[-1]
    rest = w[:-1][w[:-1] > pair.tol.tau_supp * top]
    gap = math.log(top / rest[-1]) if rest.size else math.inf
    eps = max(min(1e-3, gap / 40.0), 1e-6)

    def q(e):
        return (log_schatten(pair, 1.0 / e) - dmax) / e

    q0, q1, q2 = q(eps), q(eps / 2), q(eps / 4)
    r1a = 2 * q1 - q0
    r1b = 2 * q2 - q1
    return -(4 * r1b - r1a) / 3


def _check_ctx(ctx):
    if not isinstance(ctx, ExponentContext):
        raise TypeError("expected an ExponentContext")


def psi(ctx, s):
    """``psi(s) = F_{s+1}(rho||sigma)``; defined for ``s > -1``."""
    _check_ctx(ctx)
    if s <= -1:
        raise ExponentDomainError("psi is evaluated for s > -1")
    if s == 0:
        return 0.0
    return f_alpha(ctx.pair, 1.0 + s)


def psi_prime(ctx, s):
    h = 1e-5 * max(1.0, abs(s))
    return central_derivative(lambda t: psi(ctx, t), s, h)


def _tilde_psi(ctx, u):
    if u == 0:
        return 0.0
    if u >= 1:
        return ctx.d_max_val
    return log_schatten(ctx.pair, 1.0 / (1.0 - u))


def tilde_psi(ctx, u):
    """``(1-u) psi(u/(1-u))`` for ``u`` in ``[0, 1)``."""
    _check_ctx(ctx)
    if not 0 <= u < 1:
        raise ExponentDomainError(f"u={u} must lie in [0, 1)")
    return _tilde_psi(ctx, u)


def tilde_psi_prime(ctx, u):
    h = min(1e-5, (1.0 - u) / 4, max(u, 1e-5) / 4) if u > 0 else 1e-5
    return central_derivative(lambda t: _tilde_psi(ctx, t), u, h)


def phi(ctx, a):
    """``phi(a) = sup_{s >= 0} {a s - psi(s)}`` (``math.inf`` beyond ``d_max``)."""
    _check_ctx(ctx)
    if a <= ctx.d_umegaki:
        return 0.0
    if a > ctx.a_max:
        return math.inf
    if a >= ctx.a_max - 1e-14:
        return ctx.phi_at_a_max
    return _phi_interior(ctx, a)


def _phi_interior(ctx, a):
    def objective(s):
        return a * s - psi(ctx, s)

    # psi' increases from D(rho||sigma) at 0 to d_max at infinity.
    hi = 1.0
    while psi_prime(ctx, hi) < a:
        hi *= 2.0
        if hi > _S_CAP:
            return max(objective(_S_CAP), 0.0)
    lo = 0.0 if hi == 1.0 else hi / 2.0
    lo, hi = bisect_increasing(lambda s: psi_prime(ctx, s), a, lo, hi,
                               xtol=1e-9 * max(1.0, hi))
    s0 = 0.5 * (lo + hi)
    delta = 0.05 * max(1.0, s0)
    _, val = golden_max(objective, max(0.0, s0 - delta), s0 + delta,
                        n_grid=16, tol=1e-10 * max(1.0, s0))
    return max(val, 0.0)


def phi_argmax(ctx, a):
    """The maximizing ``s`` in the definition of ``phi`` (``inf`` at ``a_max``)."""
    if a <= ctx.d_umegaki:
        return 0.0
    if a >= ctx.a_max:
        return math.inf
    lo, hi = 0.0, 1.0
    while psi_prime(ctx, hi) < a:
        lo, hi = hi, hi * 2.0
    lo, hi = bisect_increasing(lambda s: psi_prime(ctx, s), a, lo, hi, xtol=1e-9 * max(1.0, hi))
    return 0.5 * (lo + hi)


def hoeffding(ctx, r, eps=1e-6):
    """Hoeffding divergence ``sup_{0<a<1} (a-1)/a [r - D_a^old]``."""
    _check_ctx(ctx)
    if r < 0:
        raise ExponentDomainError("r must be non-negative")

    def objective(alpha):
        return (alpha - 1.0) / alpha * (r - renyi_old(ctx.pair, alpha))

    _, val = golden_max(objective, eps, 1.0 - eps, tol=1e-8)
    return max(val, 0.0)


def converse_hoeffding(ctx, r):
    """``H*_r = sup_{0 <= u < 1} {u r - tilde_psi(u)}``.

    The supremum is taken over the closed interval using the continuous
    extension ``tilde_psi(1) = d_max``.
    """
    _check_ctx(ctx)
    if r < 0:
        raise ExponentDomainError("r must be non-negative")
    _, val = golden_max(lambda u: u * r - _tilde_psi(ctx, u), 0.0, 1.0)
    return max(val, 0.0)


def solve_ar(ctx, r):
    """The unique ``a_r`` with ``phi(a_r) + a_r = r``, for ``0 < r < r_max``."""
    _check_ctx(ctx)
    if not 0 < r < ctx.r_max:
        raise ExponentDomainError(f"r={r} must lie in (0, r_max={ctx.r_max})")
    if r <= ctx.d_umegaki:
        return float(r)
    lo, hi = bisect_increasing(lambda a: phi(ctx, a) + a, r, ctx.d_umegaki, ctx.a_max, xtol=1e-13)
    return 0.5 * (lo + hi)


def converse_hoeffding_branch(ctx, r):
    """``phi(a_r)`` below ``r_max`` and ``r - d_max`` above."""
    _check_ctx(ctx)
    if r >= ctx.r_max:
        return r - ctx.d_max_val
    if r <= ctx.d_umegaki:
        return 0.0
    return phi(ctx, solve_ar(ctx, r))


def converse_hoeffding_minimax(ctx, r):
    """``inf_a max{phi(a), r - a}``."""
    _check_ctx(ctx)
    lo = min(r, ctx.d_umegaki)
    _, val = golden_min(lambda a: max(phi(ctx, a), r - a), lo, ctx.a_max)
    return val


def cutoff_rate(ctx, kappa):
    """Generalized kappa-cutoff rate and its touching rate ``tilde_psi'(kappa)``."""
    _check_ctx(ctx)
    if not 0 < kappa < 1:
        raise ExponentDomainError(f"kappa={kappa} must lie in (0, 1)")
    c = renyi_new(ctx.pair, 1.0 / (1.0 - kappa))
    return c, tilde_psi_prime(ctx, kappa)


def bipolar_check(ctx, u, r_grid, h_values=None):
    """``max_r {u r - H*_r}`` over a grid of rates.

    ``h_values`` may carry precomputed ``H*_r`` on ``r_grid``.
    """
    _check_ctx(ctx)
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.size == 0:
        raise ExponentDomainError("empty r grid")
    if h_values is None:
        h_values = [converse_hoeffding(ctx, r) for r in r_grid]
    return float(np.max(u * r_grid - np.asarray(h_values)))


@dataclass
class ExponentReport:
    """Evaluated exponent curves for one state pair."""

    d_umegaki: float
    d_max: float
    r_max: float
    r: list = field(default_factory=list)
    hr_star: list = field(default_factory=list)
    a_r: list = field(default_factory=list)
    phi_a_r: list = field(default_factory=list)
    hoeffding: list = field(default_factory=list)

    def rows(self):
        return list(zip(self.r, self.hr_star, self.a_r, self.phi_a_r, self.hoeffding))


def exponent_report(ctx, r_grid):
    rep = ExponentReport(ctx.d_umegaki, ctx.d_max_val, ctx.r_max)
    for r in sorted(float(x) for x in r_grid):
        rep.r.append(r)
        rep.hr_star.append(converse_hoeffding(ctx, r))
        if 0 < r < ctx.r_max:
            ar = solve_ar(ctx, r)
            rep.a_r.append(ar)
            rep.phi_a_r.append(phi(ctx, ar))
        else:
            rep.a_r.append(math.nan)
            rep.phi_a_r.append(math.nan)
        rep.hoeffding.append(hoeffding(ctx, r))
    return rep
