"""Truncated Fourier loop space and the spectral splitting of the action form.

A loop on [0, 1) is z(t) = (v + x~(t), y(t)) with v in the torus and x~ of
zero mean.  The coefficient vector ``e`` is laid out as

    [ y_bar (N) | mode 1: xc (N), xs (N), yc (N), ys (N) | mode 2: ... | mode K ]

so that truncating to fewer modes is a prefix of ``e``.  Mode k basis
functions are ``sqrt(2 / w_k) cos(2 pi k t)`` and ``sqrt(2 / w_k) sin(2 pi k t)``,
orthonormal for the inner product that weights the L2 pairing of mode k by
``w_k``.  The default weight ``w_k = max(1, 2 pi k)`` is the H^{1/2} one; the
alternative ``"l2"`` weight (``w_k = 1``) leaves the form unnormalized.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..errors import AssemblyError
from ..hamiltonian import TWO_PI

WEIGHTS = ("h12", "l2")


@dataclass(frozen=True)
class LoopPoint:
    v: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        v = np.mod(np.asarray(self.v, dtype=float), TWO_PI)
        v[np.isclose(v, TWO_PI, rtol=0, atol=1e-12)] = 0.0
        e = np.asarray(self.e, dtype=float)
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(e))):
            raise ValueError("loop point must be finite")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "e", e)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.e, self.v])


@dataclass(frozen=True, eq=False)
class TruncatedLoopSpace:
    n_dof: int
    cutoff: int
    n_nodes: int
    weight: str = "h12"

    def __post_init__(self):
        if self.cutoff < 1:
            raise ValueError("cutoff K must be >= 1")
        if self.n_nodes < 2 * self.cutoff + 1:
            raise ValueError("need at least 2K + 1 quadrature nodes")
        if self.weight not in WEIGHTS:
            raise ValueError(f"weight must be one of {WEIGHTS}")

    @property
    def dim_e(self) -> int:
        return self.n_dof * (4 * self.cutoff + 1)

    @property
    def dim(self) -> int:
        """Dimension of the full unknown (e, v)."""
        return self.dim_e + self.n_dof

    def dim_low(self, k_low: int) -> int:
        return self.n_dof * (4 * k_low + 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_nodes) / self.n_nodes

    def mode_weight(self, k):
        k = np.asarray(k, dtype=float)
        if self.weight == "l2":
            return np.ones_like(k)
        return np.maximum(1.0, TWO_PI * k)

    @cached_property
    def coefficient_weights(self) -> np.ndarray:
        """w_k for every entry of e (1 for y_bar)."""
        n, K = self.n_dof, self.cutoff
        w = [np.ones(n)]
        for k in range(1, K + 1):
            w.append(np.full(4 * n, float(self.mode_weight(k))))
        return np.concatenate(w)

    @cached_property
    def modes(self) -> np.ndarray:
        n, K = self.n_dof, self.cutoff
        return np.concatenate([np.zeros(n, int)] + [np.full(4 * n, k) for k in range(1, K + 1)])

    def index(self, k: int, part: str) -> slice:
        """Slice of e holding part 'xc', 'xs', 'yc' or 'ys' of mode k (or 'ybar')."""
        n = self.n_dof
        if part == "ybar":
            return slice(0, n)
        off = n + (k - 1) * 4 * n + ("xc", "xs", "yc", "ys").index(part) * n
        return slice(off, off + n)

    @cached_property
    def eval_matrix(self) -> np.ndarray:
        """Phi of shape (M, 2N, dim_e): z~(t_j) = Phi[j] @ e (x part excludes v)."""
        n, K, M = self.n_dof, self.cutoff, self.n_nodes
        t = self.nodes
        P = np.zeros((M, 2 * n, self.dim_e))
        eye = np.eye(n)
        P[:, n:, self.index(0, "ybar")] = eye
        for k in range(1, K + 1):
            a = np.sqrt(2.0 / self.mode_weight(k))
            c = a * np.cos(TWO_PI * k * t)[:, None, None]
            s = a * np.sin(TWO_PI * k * t)[:, None, None]
            P[:, :n, self.index(k, "xc")] = c * eye
            P[:, :n, self.index(k, "xs")] = s * eye
            P[:, n:, self.index(k, "yc")] = c * eye
            P[:, n:, self.index(k, "ys")] = s * eye
        return P

    @cached_property
    def full_eval_matrix(self) -> np.ndarray:
        """(M, 2N, dim_e + N): z(t_j) = P[j] @ (e, v)."""
        n = self.n_dof
        P = np.zeros((self.n_nodes, 2 * n, self.dim))
        P[:, :, : self.dim_e] = self.eval_matrix
        P[:, :n, self.dim_e:] = np.eye(n)
        return P

    def synthesize(self, e, v=None) -> np.ndarray:
        """Loop values at the nodes, shape (..., M, 2N)."""
        e = np.asarray(e, dtype=float)
        z = np.einsum("mid,...d->...mi", self.eval_matrix, e)
        if v is not None:
            z[..., : self.n_dof] += np.asarray(v, dtype=float)[..., None, :]
        return z

    def analyze(self, values) -> np.ndarray:
        """Coefficients of a loop sampled at the nodes (inverse of synthesize with v = 0)."""
        values = np.asarray(values, dtype=float)
        proj = np.einsum("mid,...mi->...d", self.eval_matrix, values) / self.n_nodes
        return proj * self.coefficient_weights

    def evaluate(self, e, v, t) -> np.ndarray:
        """Loop value at arbitrary times t (shape (..., 2N) per time)."""
        n, K = self.n_dof, self.cutoff
        t = np.atleast_1d(np.asarray(t, dtype=float))
        e = np.asarray(e, dtype=float)
        x = np.broadcast_to(np.asarray(v, dtype=float), t.shape + (n,)).copy()
        y = np.broadcast_to(e[self.index(0, "ybar")], t.shape + (n,)).copy()
        for k in range(1, K + 1):
            a = np.sqrt(2.0 / self.mode_weight(k))
            c = a * np.cos(TWO_PI * k * t)[:, None]
            s = a * np.sin(TWO_PI * k * t)[:, None]
            x += c * e[self.index(k, "xc")] + s * e[self.index(k, "xs")]
            y += c * e[self.index(k, "yc")] + s * e[self.index(k, "ys")]
        return np.concatenate([x, y], axis=-1)

    def state_at_zero(self, p: LoopPoint) -> np.ndarray:
        return self.evaluate(p.e, p.v, 0.0)[0]

    def gram(self) -> np.ndarray:
        """Gram matrix of the basis in the weighted inner product (by quadrature)."""
        P = self.eval_matrix
        G = np.einsum("mid,mie->de", P, P) / self.n_nodes
        sw = np.sqrt(self.coefficient_weights)
        return sw[:, None] * G * sw[None, :]

    def truncate(self, e, k_low: int) -> np.ndarray:
        return np.asarray(e)[..., : self.dim_low(k_low)]


def build_loop_space(n_dof: int, cutoff: int, n_nodes: int | None = None,
                     weight: str = "h12") -> TruncatedLoopSpace:
    M = 8 * cutoff + 1 if n_nodes is None else int(n_nodes)
    if M < 8 * cutoff + 1:
        raise ValueError("quadrature needs M >= 8K + 1 nodes")
    return TruncatedLoopSpace(int(n_dof), int(cutoff), M, weight)


# ---------------------------------------------------------------------------
# spectral splitting


def form_matrix(space: TruncatedLoopSpace) -> np.ndarray:
    """Matrix of B(z, w) = int <J z', w> dt in the coefficients of e."""
    n, D = space.n_dof, space.dim_e
    B = np.zeros((D, D))
    for k in range(1, space.cutoff + 1):
        # B(z, z) = 2 (2 pi k / w_k) (xc . ys - xs . yc) for mode k
        val = TWO_PI * k / float(space.mode_weight(k))
        xc, xs = space.index(k, "xc"), space.index(k, "xs")
        yc, ys = space.index(k, "yc"), space.index(k, "ys")
        B[xc, ys] = B[ys, xc] = val * np.eye(n)
        B[xs, yc] = B[yc, xs] = -val * np.eye(n)
    return B


@dataclass(frozen=True, eq=False)
class SpectralSplitting:
    L_matrix: np.ndarray
    proj_minus: np.ndarray
    proj_zero: np.ndarray
    proj_plus: np.ndarray
    eps0: float
    form: np.ndarray = field(repr=False)
    eps0_raw: float = 1.0
    eigenvalues: np.ndarray = field(default=None, repr=False)

    @property
    def dims(self):
        tr = lambda P: int(round(np.trace(P)))
        return tr(self.proj_minus), tr(self.proj_zero), tr(self.proj_plus)


def build_splitting(space: TruncatedLoopSpace, zero_tol: float = 1e-8) -> SpectralSplitting:
    """Eigen-split of the action form and its renormalization L = pi_+ - pi_-.

    In the H^{1/2} weight the form already has eigenvalues exactly -1, 0, +1,
    so renormalizing changes nothing; in the L2 weight the eigenvalues are
    +-2 pi k and the renormalized operator is the sign of the form.
    """
    B = form_matrix(space)
    if np.max(np.abs(B - B.T)) > 1e-12:
        raise AssemblyError("form matrix is not symmetric")
    evals, evecs = np.linalg.eigh(B)
    zero = np.abs(evals) < zero_tol
    if int(zero.sum()) != space.n_dof:
        raise AssemblyError(f"kernel dimension {int(zero.sum())} != N = {space.n_dof}")
    kernel_basis = evecs[:, zero]
    ybar = np.zeros((space.dim_e, space.n_dof))
    ybar[space.index(0, "ybar"), :] = np.eye(space.n_dof)
    if np.linalg.norm(kernel_basis @ kernel_basis.T - ybar @ ybar.T) > 1e-10:
        raise AssemblyError("kernel is not spanned by the constant-y modes")
    near = (~zero) & (np.abs(evals) < 1e-8 * max(1.0, np.abs(evals).max()))
    if near.any():
        raise AssemblyError("eigenvalue numerically indistinguishable from 0 outside the kernel")
    minus, plus = evals < -zero_tol, evals > zero_tol
    Pm = evecs[:, minus] @ evecs[:, minus].T
    Pp = evecs[:, plus] @ evecs[:, plus].T
    P0 = evecs[:, zero] @ evecs[:, zero].T
    L = Pp - Pm
    eps0_raw = float(np.min(np.abs(evals[~zero])))
    return SpectralSplitting(L, Pm, P0, Pp, 1.0, B, eps0_raw, evals)
