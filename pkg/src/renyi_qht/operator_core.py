"""Dense Hermitian linear algebra with the support convention.

Operators are plain complex ``numpy`` arrays. Powers of positive
semidefinite operators act on the support only, so ``A**0`` is the support
projector and negative powers never blow up on the kernel.
"""

import os
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

DEFAULT_MAX_DIM = 4096
HERMITIAN_ATOL = 1e-10
PSD_TOL = 1e-10


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical cut-offs used across the package.

    tau_supp: eigenvalues below ``tau_supp * lambda_max`` count as zero.
    tau_cluster: relative gap under which eigenvalues are merged.
    tau_eq: eigenvalues with ``|lambda| <= tau_eq * ||A||`` are treated as
        exactly zero by the positive-part projector.
    """

    tau_supp: float = 1e-12
    tau_cluster: float = 1e-10
    tau_eq: float = 1e-10

    def __post_init__(self):
        for name in ("tau_supp", "tau_cluster", "tau_eq"):
            v = getattr(self, name)
            if not (0.0 < v < 1e-3):
                raise ValueError(f"{name}={v!r} must lie in (0, 1e-3)")


DEFAULT_TOL = ToleranceConfig()


class NotHermitianError(ValueError):
    def __init__(self, asymmetry):
        self.asymmetry = float(asymmetry)
        super().__init__(f"matrix is not Hermitian: max |A - A^dagger| = {self.asymmetry:.3e}")


class SizeCapError(ValueError):
    """Raised when a tensor power would exceed the configured dimension cap."""

    def __init__(self, dim, cap):
        self.dim = dim
        self.cap = cap
        mib = dim * dim * 16 / 2**20
        super().__init__(
            f"tensor power dimension {dim} exceeds cap {cap} "
            f"(one dense complex matrix needs {mib:.1f} MiB; set RENYI_MAX_DIM to raise the cap)"
        )


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns

    def reconstruct(self):
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


@dataclass(frozen=True)
class Channel:
    """A CPTP map given by Kraus operators ``K_i`` of shape (dim_out, dim_in)."""

    kraus: tuple

    def __post_init__(self):
        ks = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise ValueError("a channel needs at least one Kraus operator")
        shape = ks[0].shape
        if any(k.shape != shape for k in ks):
            raise ValueError("Kraus operators must share one shape")
        completeness = sum(k.conj().T @ k for k in ks)
        err = np.max(np.abs(completeness - np.eye(shape[1])))
        if err > 1e-10:
            raise ValueError(f"Kraus operators are not trace preserving (error {err:.2e})")
        object.__setattr__(self, "kraus", ks)

    @property
    def dim_in(self):
        return self.kraus[0].shape[1]

    @property
    def dim_out(self):
        return self.kraus[0].shape[0]

    def __call__(self, a):
        return apply_channel(self, a)


def max_dim():
    """Tensor-power dimension cap, overridable through ``RENYI_MAX_DIM``."""
    env = os.environ.get("RENYI_MAX_DIM")
    return int(env) if env else DEFAULT_MAX_DIM


def as_hermitian(a, atol=HERMITIAN_ATOL):
    """Validate a square Hermitian matrix and return its symmetrized copy."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    asym = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if asym > atol * max(1.0, np.max(np.abs(a))):
        raise NotHermitianError(asym)
    return (a + a.conj().T) / 2


def as_psd(a, tol=PSD_TOL):
    """Validate a positive semidefinite matrix (up to ``tol * lambda_max``)."""
    a = as_hermitian(a)
    w = np.linalg.eigvalsh(a)
    scale = max(abs(w[-1]), abs(w[0]), np.finfo(float).tiny)
    if w[0] < -tol * scale:
        raise ValueError(f"matrix is not positive semidefinite: min eigenvalue {w[0]:.3e}")
    return a


def eig_hermitian(a):
    """Ascending eigenvalues and orthonormal eigenvectors of a Hermitian matrix."""
    a = as_hermitian(a)
    w, v = np.linalg.eigh(a)
    return EigenDecomposition(w, v)


def _support_mask(w, tau_supp):
    top = np.max(w) if w.size else 0.0
    if top <= 0:
        return np.zeros(w.shape, dtype=bool)
    return w > tau_supp * top


def frac_power(a, p, tol=DEFAULT_TOL, eig=None):
    """``A**p`` on the support of ``A``; zero on its kernel for every ``p``."""
    w, v = eig if eig is not None else eig_hermitian(a)
    mask = _support_mask(w, tol.tau_supp)
    wp = np.zeros_like(w)
    wp[mask] = w[mask] ** p
    return (v * wp) @ v.conj().T


def support_projector(a, tol=DEFAULT_TOL, eig=None):
    return frac_power(a, 0.0, tol=tol, eig=eig)


def positive_part_trace(a):
    """``Tr A{A>0}``, the sum of the strictly positive eigenvalues."""
    w = np.linalg.eigvalsh(as_hermitian(a))
    return float(np.sum(w[w > 0]))


def spectral_projector_pos(a, tau_eq=DEFAULT_TOL.tau_eq, eig=None):
    """Projectors onto the positive and the (numerically) null eigenspaces.

    Eigenvalues above ``tau_eq * ||A||`` are positive; those with
    ``|lambda| <= tau_eq * ||A||`` are null.
    """
    w, v = eig if eig is not None else eig_hermitian(a)
    norm = np.max(np.abs(w)) if w.size else 0.0
    cut = tau_eq * norm
    pos = w > cut
    zero = np.abs(w) <= cut
    vp, vz = v[:, pos], v[:, zero]
    return vp @ vp.conj().T, vz @ vz.conj().T


def cluster_eigenvalues(w, tau_cluster=DEFAULT_TOL.tau_cluster, tau_supp=DEFAULT_TOL.tau_supp):
    """Group sorted eigenvalues into clusters of numerically equal values.

    Neighbours merge when their gap is below ``tau_cluster`` times the larger
    magnitude of the two; everything within ``tau_supp * ||A||`` of zero is
    one cluster. Returns an integer label per eigenvalue, labels ascending.
    """
    w = np.asarray(w, dtype=float)
    order = np.argsort(w, kind="stable")
    ws = w[order]
    labels_sorted = np.zeros(len(ws), dtype=int)
    norm = np.max(np.abs(ws)) if ws.size else 0.0
    floor = tau_supp * norm
    for i in range(1, len(ws)):
        gap = ws[i] - ws[i - 1]
        near_zero = abs(ws[i]) <= floor and abs(ws[i - 1]) <= floor
        same = near_zero or gap <= tau_cluster * max(abs(ws[i]), abs(ws[i - 1]))
        labels_sorted[i] = labels_sorted[i - 1] + (0 if same else 1)
    labels = np.empty_like(labels_sorted)
    labels[order] = labels_sorted
    return labels


def distinct_eigenvalue_count(a, tol=DEFAULT_TOL, eig=None):
    """``v(A)``, the number of distinct eigenvalues of ``A``."""
    w = eig.eigenvalues if eig is not None else np.linalg.eigvalsh(as_hermitian(a))
    if w.size == 0:
        return 0
    return int(cluster_eigenvalues(w, tol.tau_cluster, tol.tau_supp).max()) + 1


def pinch(b, a, tol=DEFAULT_TOL, eig=None):
    """Pinching of ``B`` by the eigenprojections of ``A``: ``sum_i E_i B E_i``."""
    b = np.asarray(b, dtype=complex)
    w, v = eig if eig is not None else eig_hermitian(a)
    if b.shape != (len(w), len(w)):
        raise ValueError(f"dimension mismatch: B has shape {b.shape}, A has dimension {len(w)}")
    labels = cluster_eigenvalues(w, tol.tau_cluster, tol.tau_supp)
    bb = v.conj().T @ b @ v
    bb = np.where(labels[:, None] == labels[None, :], bb, 0.0)
    return v @ bb @ v.conj().T


def tensor_power(a, n, cap=None):
    """``A`` Kronecker-multiplied with itself ``n`` times."""
    a = np.asarray(a, dtype=complex)
    if n < 1:
        raise ValueError("n must be a positive integer")
    cap = max_dim() if cap is None else cap
    dim = a.shape[0] ** n
    if dim > cap:
        raise SizeCapError(dim, cap)
    out = a
    for _ in range(n - 1):
        out = np.kron(out, a)
    return out


def tensor_power_eig(eig, n, cap=None):
    """Eigendecomposition of ``A^{(x) n}`` assembled from that of ``A``.

    Eigenvalues are products of single-copy eigenvalues in Kronecker order
    (not sorted); eigenvectors are Kronecker products of eigenvectors.
    """
    w, v = eig
    cap = max_dim() if cap is None else cap
    dim = len(w) ** n
    if dim > cap:
        raise SizeCapError(dim, cap)
    wn, vn = w, v
    for _ in range(n - 1):
        wn = np.kron(wn, w)
        vn = np.kron(vn, v)
    return EigenDecomposition(wn, vn)


def support_contained(rho, sigma, tol=DEFAULT_TOL, sigma_eig=None):
    """Whether ``supp rho`` lies inside ``supp sigma``."""
    rho = np.asarray(rho, dtype=complex)
    p0 = support_projector(sigma, tol=tol, eig=sigma_eig)
    q = np.eye(len(rho)) - p0
    leak = np.linalg.norm(q @ rho @ q, 2)
    return bool(leak <= tol.tau_supp * max(abs(np.trace(rho).real), np.finfo(float).tiny))


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _ginibre(rng, rows, cols):
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_density(dim, rank=None, seed=None):
    """Random density matrix ``G G^dagger / Tr`` with ``G`` a dim x rank Ginibre matrix."""
    rank = dim if rank is None else rank
    if dim < 1 or not 1 <= rank <= dim:
        raise ValueError(f"need 1 <= rank <= dim, got dim={dim}, rank={rank}")
    g = _ginibre(_rng(seed), dim, rank)
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def random_unitary(dim, seed=None):
    q, r = np.linalg.qr(_ginibre(_rng(seed), dim, dim))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_isometry(dim_in, dim_out, seed=None):
    q, r = np.linalg.qr(_ginibre(_rng(seed), dim_out, dim_in))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_channel(dim_in, dim_out, kraus_count, seed=None):
    """Random CPTP map: a random isometry ``C^dim_in -> C^(k dim_out)`` cut into blocks."""
    if dim_in < 1 or dim_out < 1 or kraus_count < 1:
        raise ValueError("dimensions and kraus_count must be positive")
    if kraus_count * dim_out < dim_in:
        raise ValueError("kraus_count * dim_out must be at least dim_in")
    v = random_isometry(dim_in, kraus_count * dim_out, seed)
    return Channel(tuple(v[i * dim_out:(i + 1) * dim_out, :] for i in range(kraus_count)))


def apply_channel(channel, a):
    a = np.asarray(a, dtype=complex)
    out = sum(k @ a @ k.conj().T for k in channel.kraus)
    return (out + out.conj().T) / 2


def identity_channel(dim):
    return Channel((np.eye(dim),))


def unitary_channel(u):
    return Channel((np.asarray(u, dtype=complex),))


def partial_trace_channel(dim_keep, dim_drop, keep_first=True):
    """Trace out one tensor factor of ``C^dim_keep (x) C^dim_drop``."""
    kraus = []
    for j in range(dim_drop):
        e = np.zeros((1, dim_drop))
        e[0, j] = 1.0
        kraus.append(np.kron(np.eye(dim_keep), e) if keep_first else np.kron(e, np.eye(dim_keep)))
    return Channel(tuple(kraus))


def pinching_channel(a, tol=DEFAULT_TOL):
    """The pinching by the eigenprojections of ``A`` as a channel."""
    w, v = eig_hermitian(a)
    labels = cluster_eigenvalues(w, tol.tau_cluster, tol.tau_supp)
    kraus = []
    for lab in np.unique(labels):
        vc = v[:, labels == lab]
        kraus.append(vc @ vc.conj().T)
    return Channel(tuple(kraus))


def measurement_channel(elements):
    """``X -> sum_x Tr(M_x X) |x><x|`` for a POVM ``{M_x}``."""
    kraus = []
    m = len(elements)
    for x, el in enumerate(elements):
        w, v = eig_hermitian(el)
        w = np.clip(w, 0.0, None)
        for k in range(len(w)):
            if w[k] <= 0:
                continue
            op = np.zeros((m, len(w)), dtype=complex)
            op[x, :] = np.sqrt(w[k]) * v[:, k].conj()
            kraus.append(op)
    return Channel(tuple(kraus))


def replacer_channel(dim_in, omega):
    """``X -> Tr(X) omega``."""
    w, v = eig_hermitian(omega)
    w = np.clip(w, 0.0, None)
    kraus = []
    for i in range(len(w)):
        for j in range(dim_in):
            op = np.zeros((len(w), dim_in), dtype=complex)
            op[:, j] = np.sqrt(w[i]) * v[:, i]
            kraus.append(op)
    return Channel(tuple(kraus))


def random_povm(dim, outcomes, seed=None):
    """Random POVM from the blocks of a random isometry: ``M_x = K_x^dagger K_x``."""
    ch = random_channel(dim, dim, outcomes, seed)
    out = [k.conj().T @ k for k in ch.kraus]
    return [(m + m.conj().T) / 2 for m in out]


def block_mixture(probs: Sequence[float], ops: Sequence[np.ndarray]):
    """``sum_i p_i |i><i| (x) A_i``, the classical-quantum block embedding."""
    r = len(ops)
    d = ops[0].shape[0]
    out = np.zeros((r * d, r * d), dtype=complex)
    for i, (p, a) in enumerate(zip(probs, ops)):
        out[i * d:(i + 1) * d, i * d:(i + 1) * d] = p * np.asarray(a)
    return out
