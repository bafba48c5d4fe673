"""Quantum Renyi divergences and related functionals.

All quantities are in nats. Divergence values live on the extended real
line: ``math.inf`` is returned in-band (support violations are not
exceptions), and ``log 0 = -inf`` is used throughout.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .operator_core import (
    DEFAULT_TOL,
    EigenDecomposition,
    ToleranceConfig,
    as_psd,
    eig_hermitian,
    support_contained,
)

__all__ = [
    "StatePair",
    "Povm",
    "f_alpha",
    "q_new",
    "log_schatten",
    "renyi_new",
    "renyi_old",
    "renyi_recommended",
    "umegaki",
    "d_max",
    "fidelity",
    "f_alpha_measured",
    "measured_dmax",
    "classical_f_alpha",
    "classical_renyi",
    "classical_kl",
]


@dataclass(frozen=True)
class StatePair:
    """A pair ``(rho, sigma)`` of positive semidefinite operators.

    Eigendecompositions and the support flag are computed on construction,
    so instances are read-only afterwards.
    """

    rho: np.ndarray
    sigma: np.ndarray
    tol: ToleranceConfig = DEFAULT_TOL
    rho_eig: EigenDecomposition = field(init=False, repr=False)
    sigma_eig: EigenDecomposition = field(init=False, repr=False)
    supp_ok: bool = field(init=False)
    _rho_sb: np.ndarray = field(init=False, repr=False, compare=False)
    _sigma_mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rho = as_psd(self.rho)
        sigma = as_psd(self.sigma)
        if rho.shape != sigma.shape:
            raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "rho_eig", eig_hermitian(rho))
        object.__setattr__(self, "sigma_eig", eig_hermitian(sigma))
        object.__setattr__(
            self, "supp_ok", support_contained(rho, sigma, self.tol, sigma_eig=self.sigma_eig)
        )
        v = self.sigma_eig.eigenvectors
        object.__setattr__(self, "_rho_sb", v.conj().T @ rho @ v)
        object.__setattr__(self, "_sigma_mask", self._support(self.sigma_eig.eigenvalues))

    @property
    def dim(self):
        return self.rho.shape[0]

    @property
    def trace_rho(self):
        return float(np.trace(self.rho).real)

    @property
    def trace_sigma(self):
        return float(np.trace(self.sigma).real)

    def swapped(self):
        return StatePair(self.sigma, self.rho, self.tol)

    def _support(self, w):
        top = w[-1] if w.size else 0.0
        return w > self.tol.tau_supp * top if top > 0 else np.zeros(w.shape, dtype=bool)

    def _sigma_support(self):
        return self._sigma_mask

    def _rho_support(self):
        return self._support(self.rho_eig.eigenvalues)

    def sandwiched(self, p):
        """``sigma^p rho sigma^p`` expressed in the eigenbasis of sigma."""
        w = self.sigma_eig.eigenvalues
        mask = self._sigma_mask
        d = np.zeros_like(w)
        d[mask] = w[mask] ** p
        m = d[:, None] * self._rho_sb * d[None, :]
        return (m + m.conj().T) / 2


@dataclass(frozen=True)
class Povm:
    """A finite POVM ``{M_x}`` on one system."""

    elements: tuple

    def __post_init__(self):
        els = tuple(as_psd(m) for m in self.elements)
        if not els:
            raise ValueError("a POVM needs at least one element")
        total = sum(els)
        err = np.max(np.abs(total - np.eye(total.shape[0])))
        if err > 1e-10:
            raise ValueError(f"POVM elements do not sum to the identity (error {err:.2e})")
        object.__setattr__(self, "elements", els)

    def probabilities(self, a):
        return np.array([max(np.trace(m @ a).real, 0.0) for m in self.elements])


def _log_sum_pow(w, alpha, tau_supp):
    """``log sum_i w_i^alpha`` over the support of a PSD spectrum ``w``."""
    w = np.asarray(w, dtype=float)
    top = np.max(w) if w.size else 0.0
    if top <= 0:
        return -math.inf
    pos = w[w > tau_supp * top]
    if alpha == 0:
        return math.log(len(pos))
    return alpha * math.log(top) + math.log(np.sum((pos / top) ** alpha))


def f_alpha(pair, alpha):
    """``log Tr (sigma^{(1-a)/2a} rho sigma^{(1-a)/2a})^a`` for ``a > 0``."""
    if alpha <= 0:
        raise ValueError("f_alpha needs alpha > 0")
    m = pair.sandwiched((1.0 - alpha) / (2.0 * alpha))
    return _log_sum_pow(np.linalg.eigvalsh(m), alpha, pair.tol.tau_supp)


def log_schatten(pair, alpha):
    """``f_alpha / alpha``, the log of the Schatten alpha-norm of the sandwich.

    Stable for very large ``alpha``; tends to ``d_max`` as ``alpha -> inf``.
    """
    if alpha <= 0:
        raise ValueError("log_schatten needs alpha > 0")
    m = pair.sandwiched((1.0 - alpha) / (2.0 * alpha))
    w = np.linalg.eigvalsh(m)
    top = np.max(w)
    if top <= 0:
        return -math.inf
    pos = w[w > pair.tol.tau_supp * top]
    return math.log(top) + math.log(np.sum((pos / top) ** alpha)) / alpha


def q_new(pair, alpha):
    """``Q_alpha^(new) = exp(f_alpha)``."""
    v = f_alpha(pair, alpha)
    return 0.0 if v == -math.inf else math.exp(v)


def _check_alpha(alpha):
    if alpha < 0:
        raise ValueError(f"alpha={alpha} must be non-negative")
    if alpha == 1:
        raise ValueError("alpha=1 is the Umegaki relative entropy; use umegaki()")


def _from_log_quasi(log_q, log_tr_rho, alpha):
    # (log Q - log Tr rho) / (alpha - 1) with log 0 = -inf: for alpha < 1 a
    # vanishing quasi-entropy gives +inf.
    if log_q == -math.inf:
        return math.inf if alpha < 1 else -math.inf
    return (log_q - log_tr_rho) / (alpha - 1.0)


def renyi_new(pair, alpha):
    """Sandwiched Renyi divergence."""
    _check_alpha(alpha)
    if alpha == 0:
        raise ValueError("the sandwiched divergence is defined for alpha > 0")
    if alpha > 1 and not pair.supp_ok:
        return math.inf
    return _from_log_quasi(f_alpha(pair, alpha), math.log(pair.trace_rho), alpha)


def _log_tr_old(pair, alpha):
    """``log Tr rho^alpha sigma^{1-alpha}`` on the supports."""
    r, u = pair.rho_eig
    s, v = pair.sigma_eig
    mr, ms = pair._rho_support(), pair._sigma_support()
    if not mr.any() or not ms.any():
        return -math.inf
    overlap = np.abs(u[:, mr].conj().T @ v[:, ms]) ** 2
    with np.errstate(divide="ignore"):
        terms = (
            alpha * np.log(r[mr])[:, None]
            + (1.0 - alpha) * np.log(s[ms])[None, :]
            + np.log(overlap)
        )
    if np.all(terms == -np.inf):
        return -math.inf
    return float(logsumexp(terms))


def renyi_old(pair, alpha):
    """Traditional (Petz) Renyi divergence."""
    _check_alpha(alpha)
    if alpha > 1 and not pair.supp_ok:
        return math.inf
    return _from_log_quasi(_log_tr_old(pair, alpha), math.log(pair.trace_rho), alpha)


def renyi_recommended(pair, alpha):
    """Traditional divergence below 1, sandwiched above 1."""
    _check_alpha(alpha)
    return renyi_old(pair, alpha) if alpha < 1 else renyi_new(pair, alpha)


def umegaki(pair):
    """Umegaki relative entropy ``Tr rho (log rho - log sigma) / Tr rho``."""
    if not pair.supp_ok:
        return math.inf
    r, u = pair.rho_eig
    s, v = pair.sigma_eig
    mr, ms = pair._rho_support(), pair._sigma_support()
    overlap = np.abs(u[:, mr].conj().T @ v[:, ms]) ** 2
    rr = r[mr]
    tr_rho_log_rho = float(np.sum(rr * np.log(rr)))
    tr_rho_log_sigma = float(rr @ overlap @ np.log(s[ms]))
    return (tr_rho_log_rho - tr_rho_log_sigma) / pair.trace_rho


def _whitened(pair):
    """``sigma^{-1/2} rho sigma^{-1/2}`` on the support of sigma (sigma eigenbasis)."""
    return pair.sandwiched(-0.5)


def d_max(pair):
    """Max-relative entropy ``log lambda_max(sigma^{-1/2} rho sigma^{-1/2})``."""
    if not pair.supp_ok:
        return math.inf
    top = np.linalg.eigvalsh(_whitened(pair))[-1]
    return math.log(top) if top > 0 else -math.inf


def fidelity(pair):
    """Uhlmann fidelity ``Tr |sqrt(rho) sqrt(sigma)|``."""
    w = np.linalg.eigvalsh(pair.sandwiched(0.5))
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))))


def classical_f_alpha(p, q, alpha):
    """``log sum_x p_x^alpha q_x^{1-alpha}`` with the support convention."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if alpha > 1 and np.any((q <= 0) & (p > 0)):
        return math.inf
    keep = (p > 0) & (q > 0)
    if not keep.any():
        return -math.inf
    return float(logsumexp(alpha * np.log(p[keep]) + (1.0 - alpha) * np.log(q[keep])))


def classical_renyi(p, q, alpha):
    _check_alpha(alpha)
    p = np.asarray(p, dtype=float)
    if alpha > 1 and np.any((np.asarray(q) <= 0) & (p > 0)):
        return math.inf
    return _from_log_quasi(classical_f_alpha(p, q, alpha), math.log(p.sum()), alpha)


def classical_kl(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any((q <= 0) & (p > 0)):
        return math.inf
    keep = p > 0
    return float(np.sum(p[keep] * (np.log(p[keep]) - np.log(q[keep])))) / p.sum()


def f_alpha_measured(pair, povm, alpha):
    """The classical ``F_alpha`` of the post-measurement distributions."""
    povm = povm if isinstance(povm, Povm) else Povm(tuple(povm))
    return classical_f_alpha(povm.probabilities(pair.rho), povm.probabilities(pair.sigma), alpha)


def _classical_dmax(p, q):
    best = -math.inf
    for px, qx in zip(p, q):
        if px <= 0:
            continue
        if qx <= 0:
            return math.inf
        best = max(best, math.log(px / qx))
    return best


def dmax_povm(pair):
    """The binary POVM that attains the max-relative entropy."""
    dim = pair.dim
    if not pair.supp_ok:
        p0 = pair.sigma_eig.eigenvectors[:, pair._sigma_support()]
        proj = p0 @ p0.conj().T
        return Povm((np.eye(dim) - proj, proj))
    s, v = pair.sigma_eig
    mask = pair._sigma_support()
    d = np.zeros_like(s)
    d[mask] = s[mask] ** -0.5
    w, x = np.linalg.eigh(_whitened(pair))
    top = d * x[:, -1]  # sigma^{-1/2}|v> in the sigma eigenbasis
    m = v @ np.outer(top, top.conj()) @ v.conj().T
    m = (m + m.conj().T) / 2
    m /= np.linalg.eigvalsh(m)[-1]
    return Povm((m, np.eye(dim) - m))


def measured_dmax(pair, povm=None):
    """``max_x log(Tr M_x rho / Tr M_x sigma)`` for a POVM (optimal one by default)."""
    povm = dmax_povm(pair) if povm is None else (povm if isinstance(povm, Povm) else Povm(tuple(povm)))
    return _classical_dmax(povm.probabilities(pair.rho), povm.probabilities(pair.sigma))
