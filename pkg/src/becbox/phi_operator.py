"""The modified box Laplacian assembled through its explicitly known inverse.

The operator never exists as a matrix of its own: its inverse is the Dirichlet
Green operator plus a rank-K update by the sampled harmonic columns,

    A^-1 = G + h^d * sum_k |v_k><v_k|,

which in the orthonormal sine basis is diagonal(1/lambda) plus a rank-K
congruence of the transformed columns.  The dense backend eigendecomposes that
matrix (operator eigenvalues are reported as 1/mu); the Lanczos backend only
ever applies it.  All inner products, normalizations and orthogonalizations
use the h^d-weighted inner product, which in sine coefficients is the plain
dot product.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .harmonics import HarmonicFamily, sample_family
from .lattice import (
    DirichletSpectrum,
    Grid,
    GridField,
    inner_product,
    sine_transform,
)

__all__ = [
    "Bose",
    "BoseRegular",
    "SimpleResolvent",
    "ShiftedInverse",
    "CondensateBasis",
    "PhiOperator",
    "TwoPointLhs",
    "LanczosResult",
    "DENSE_LIMIT",
    "RANK_RTOL",
    "green_apply",
    "build_condensate_basis",
    "build_phi_operator",
    "eigendecompose_symmetric",
    "apply_inverse",
    "apply_forward",
    "shifted_solve",
    "quadratic_form",
    "two_point_lhs",
    "lanczos_quadratic_form",
]

DENSE_LIMIT = 4096
RANK_RTOL = 1e-10

logger = logging.getLogger(__name__)


# --- spectral functions --------------------------------------------------------


@dataclass(frozen=True)
class Bose:
    """x -> 1/(e^(beta x) - 1), the Bose occupation at inverse temperature beta."""

    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        t = self.beta * np.asarray(x, dtype=float)
        out = np.zeros_like(t)
        mod = t < 700.0
        out[mod] = 1.0 / np.expm1(t[mod])
        return out


@dataclass(frozen=True)
class BoseRegular:
    """x -> 1/(e^(beta x) - 1) - 1/(beta x), bounded and continuous on [0, inf).

    The value tends to -1/2 at 0 and to 0 at infinity; small arguments use the
    Bernoulli series to avoid the 1/t - 1/t cancellation.
    """

    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        t = self.beta * np.asarray(x, dtype=float)
        out = np.empty_like(t)
        small = t < 0.5
        ts = t[small]
        out[small] = (
            -0.5
            + ts / 12.0
            - ts**3 / 720.0
            + ts**5 / 30240.0
            - ts**7 / 1209600.0
            + ts**9 / 47900160.0
            - ts**11 * 5.284190138687493e-10
            + ts**13 * 1.3382536530684679e-11
        )
        tl = t[~small]
        with np.errstate(over="ignore"):
            e = np.expm1(tl)
        inv = np.where(np.isinf(e), 0.0, 1.0 / np.where(np.isinf(e), 1.0, e))
        out[~small] = inv - 1.0 / tl
        return out


@dataclass(frozen=True)
class SimpleResolvent:
    """x -> 1/(1 + x)."""

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return 1.0 / (1.0 + np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ShiftedInverse:
    """x -> 1/(x - z) for a spectral parameter z < 0."""

    z: float

    def __post_init__(self):
        if not self.z < 0:
            raise ValueError("shift z must be negative")

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return 1.0 / (np.asarray(x, dtype=float) - self.z)


# --- assembly -------------------------------------------------------------------


def green_apply(grid: Grid, spectrum: DirichletSpectrum, u: GridField) -> GridField:
    """Inverse Dirichlet Laplacian: sine transform, divide by the eigenvalues,
    transform back."""
    if spectrum.grid != grid:
        raise ValueError("spectrum belongs to a different grid")
    chat = sine_transform(grid, u, "forward")
    return sine_transform(grid, GridField(grid, chat.values / spectrum.tensor()), "inverse")


@dataclass
class CondensateBasis:
    """Sampled harmonic columns with an orthonormal basis of their span.

    ``weights`` maps columns to the orthonormal basis (basis = columns @
    weights in the weighted inner product); ``r_matrix`` represents the
    positive operator whose inverse, compressed to the span, is the rank-K
    column sum.  Rank-deficient families are deflated at relative threshold
    RANK_RTOL, never rejected.
    """

    columns: list[GridField]
    col_hat: np.ndarray
    gram: np.ndarray
    rank: int
    weights: np.ndarray
    basis_hat: np.ndarray
    r_matrix: np.ndarray

    @property
    def deflated(self) -> bool:
        return self.rank < len(self.columns)

    def orthonormal_fields(self, grid: Grid) -> list[GridField]:
        return [
            sine_transform(grid, GridField(grid, np.ascontiguousarray(self.basis_hat[:, i])), "inverse")
            for i in range(self.rank)
        ]


def build_condensate_basis(grid: Grid, columns: list[GridField]) -> CondensateBasis:
    N = grid.total
    K = len(columns)
    if K == 0:
        empty = np.zeros((N, 0))
        return CondensateBasis(
            columns=[], col_hat=empty, gram=np.zeros((0, 0)), rank=0,
            weights=np.zeros((0, 0)), basis_hat=empty, r_matrix=np.zeros((0, 0)),
        )
    col_hat = np.column_stack([sine_transform(grid, c, "forward").values for c in columns])
    gram = np.empty((K, K), dtype=complex)
    for i in range(K):
        for j in range(K):
            gram[i, j] = inner_product(columns[i], columns[j])
    if np.all(gram.imag == 0):
        gram = gram.real
    g, U = np.linalg.eigh(gram)
    gmax = g[-1]
    if gmax <= 0:  # all columns vanish
        keep = np.array([], dtype=int)
    else:
        keep = np.nonzero(g > RANK_RTOL * gmax)[0][::-1]  # descending
    rank = len(keep)
    weights = U[:, keep] / np.sqrt(g[keep])
    basis_hat = col_hat @ weights
    r_matrix = np.diag(1.0 / g[keep])
    return CondensateBasis(
        columns=list(columns), col_hat=col_hat, gram=gram, rank=rank,
        weights=weights, basis_hat=basis_hat, r_matrix=r_matrix,
    )


@dataclass
class PhiOperator:
    """Discrete modified Laplacian held through its inverse.

    ``lam`` is the tensor Dirichlet spectrum in coefficient layout; the dense
    backend also stores the eigenpairs (mu ascending, columns of ``vecs``) of
    the inverse in the sine basis, so operator eigenvalues are 1/mu.
    """

    grid: Grid
    spectrum: DirichletSpectrum
    family: HarmonicFamily
    mode: str
    backend: str
    basis: CondensateBasis
    lam: np.ndarray
    mu: np.ndarray | None = None
    vecs: np.ndarray | None = None

    @property
    def operator_eigenvalues(self) -> np.ndarray:
        """Eigenvalues of the modified Laplacian, ascending."""
        if self.mu is None:
            raise ValueError("operator eigenvalues need the dense backend")
        return np.sort(1.0 / self.mu)

    def _hat(self, f: GridField) -> np.ndarray:
        if f.grid != self.grid:
            raise ValueError("field lives on a different grid")
        return sine_transform(self.grid, f, "forward").values

    def _unhat(self, chat: np.ndarray) -> GridField:
        return sine_transform(self.grid, GridField(self.grid, np.ascontiguousarray(chat)), "inverse")

    def inverse_matvec(self, chat: np.ndarray) -> np.ndarray:
        """A^-1 acting on sine coefficients."""
        out = chat / self.lam
        C = self.basis.col_hat
        if C.shape[1]:
            out = out + C @ (C.conj().T @ chat)
        return out


def eigendecompose_symmetric(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a symmetric (or Hermitian) dense matrix, ascending.

    Rejects inputs whose asymmetry exceeds 1e-12 relative to the largest
    entry.  Backed by LAPACK through numpy; the contract (residual and
    orthonormality at 1e-10) is what the tests pin down.
    """
    A = np.asarray(matrix)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    scale = float(np.abs(A).max()) if A.size else 0.0
    asym = float(np.abs(A - A.conj().T).max()) if A.size else 0.0
    if asym > 1e-12 * max(scale, 1e-300):
        raise ValueError(f"matrix is not symmetric: asymmetry {asym:.3e} vs scale {scale:.3e}")
    w, V = np.linalg.eigh(A)
    return w, V


def build_phi_operator(
    grid: Grid,
    spectrum: DirichletSpectrum,
    family: HarmonicFamily,
    mode: str = "sampled",
    backend: str = "auto",
) -> PhiOperator:
    """Assemble the operator; dense backends eigendecompose the inverse.

    backend "auto" picks dense for N <= DENSE_LIMIT and Lanczos above.
    """
    if spectrum.grid != grid:
        raise ValueError("spectrum belongs to a different grid")
    if backend not in ("auto", "dense", "lanczos"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "auto":
        backend = "dense" if grid.total <= DENSE_LIMIT else "lanczos"
    columns = sample_family(family, grid, mode)
    basis = build_condensate_basis(grid, columns)
    if basis.deflated:
        logger.info(
            "family of %d columns deflated to numerical rank %d (threshold %g)",
            len(columns), basis.rank, RANK_RTOL,
        )
    lam = spectrum.tensor()
    op = PhiOperator(
        grid=grid, spectrum=spectrum, family=family, mode=mode, backend=backend,
        basis=basis, lam=lam,
    )
    if backend == "dense":
        M = np.diag(1.0 / lam)
        C = basis.col_hat
        if C.shape[1]:
            update = C @ C.conj().T
            if np.iscomplexobj(update) and np.all(update.imag == 0):
                update = update.real
            M = M + update
        op.mu, op.vecs = eigendecompose_symmetric(M)
    return op


def apply_inverse(op: PhiOperator, f: GridField) -> GridField:
    """Apply A^-1 (Green operator plus rank-K update)."""
    return op._unhat(op.inverse_matvec(op._hat(f)))


def _solve_diag_plus_lowrank(d: np.ndarray, C: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve (diag(d) + C C^H) x = b by the Woodbury identity."""
    bd = b / d
    if C.shape[1] == 0:
        return bd
    Cd = C / d[:, None]
    S = np.eye(C.shape[1], dtype=np.result_type(C.dtype, float)) + C.conj().T @ Cd
    return bd - Cd @ np.linalg.solve(S, C.conj().T @ bd)


def apply_forward(op: PhiOperator, f: GridField) -> GridField:
    """Apply the modified Laplacian itself, i.e. solve A^-1 x = f."""
    chat = op._hat(f)
    x = _solve_diag_plus_lowrank(1.0 / op.lam, op.basis.col_hat, chat)
    return op._unhat(x)


def shifted_solve(op: PhiOperator, f: GridField, shift: float = 1.0) -> GridField:
    """Apply (shift + A)^-1 without any eigendecomposition.

    Uses (s + A)^-1 = s^-1 (I - (I + s A^-1)^-1) with a Woodbury solve for the
    diagonal-plus-low-rank middle matrix, so it scales to Lanczos-sized grids.
    """
    if not shift > 0:
        raise ValueError("shift must be positive")
    chat = op._hat(f)
    d = 1.0 + shift / op.lam
    C = np.sqrt(shift) * op.basis.col_hat
    t = _solve_diag_plus_lowrank(d, C, chat)
    return op._unhat((chat - t) / shift)


# --- quadratic forms -------------------------------------------------------------


@dataclass(frozen=True)
class LanczosResult:
    """Outcome of a Lanczos quadratic-form evaluation."""

    value: float
    steps: int
    converged: bool
    breakdown: bool = False


def lanczos_quadratic_form(
    op: PhiOperator,
    F,
    f: GridField,
    steps: int = 200,
    tolerance: float = 1e-10,
) -> LanczosResult:
    """<f, F(-Delta_Phi) f> by Lanczos on the inverse, started from f.

    Runs the weighted-inner-product Lanczos recursion on A^-1 with full
    (double Gram-Schmidt) reorthogonalization; the quadratic form of
    g(mu) = F(1/mu) is read off the tridiagonal eigendecomposition.
    Convergence is declared when two successive step counts agree to
    ``tolerance`` relative; a near-zero new Lanczos vector (breakdown: f lay
    in an invariant subspace) returns the exact current value with a flag.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    v = op._hat(f)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValueError("starting field must be nonzero")
    q = v / nrm
    Q = [q]
    alphas: list[float] = []
    betas: list[float] = []
    value = None
    for j in range(steps):
        w = op.inverse_matvec(Q[j])
        if j > 0:
            w = w - betas[j - 1] * Q[j - 1]
        alpha = float(np.vdot(Q[j], w).real)
        alphas.append(alpha)
        w = w - alpha * Q[j]
        Qm = np.column_stack(Q)
        w = w - Qm @ (Qm.conj().T @ w)
        w = w - Qm @ (Qm.conj().T @ w)
        theta, S = scipy.linalg.eigh_tridiagonal(np.array(alphas), np.array(betas))
        if theta.min() <= 0:
            raise RuntimeError("Ritz values left the positive axis; the inverse is not PD")
        new_value = float(nrm**2 * np.sum(F.evaluate(1.0 / theta) * np.abs(S[0, :]) ** 2))
        if value is not None and abs(new_value - value) <= tolerance * max(abs(new_value), 1e-300):
            return LanczosResult(value=new_value, steps=j + 1, converged=True)
        value = new_value
        beta = float(np.linalg.norm(w))
        scale = max(map(abs, alphas)) + (max(betas) if betas else 0.0)
        if beta <= 1e-13 * max(scale, 1e-300):
            return LanczosResult(value=new_value, steps=j + 1, converged=True, breakdown=True)
        betas.append(beta)
        Q.append(w / beta)
    return LanczosResult(value=value, steps=steps, converged=False)


def _dense_bilinear(op: PhiOperator, F, fhat: np.ndarray, ghat: np.ndarray) -> complex:
    a = op.vecs.conj().T @ fhat
    b = op.vecs.conj().T @ ghat
    vals = F.evaluate(1.0 / op.mu)
    return complex(np.sum(np.conj(a) * vals * b))


def quadratic_form(op: PhiOperator, F, f: GridField, g: GridField | None = None) -> complex:
    """<f, F(-Delta_Phi) g> in the weighted inner product.

    Dense backends sum over eigenpairs; the Lanczos backend recovers bilinear
    forms from quadratic ones by polarization.  Conjugate symmetry
    result(f, g) = conj(result(g, f)) holds by construction.
    """
    if f.grid != op.grid or (g is not None and g.grid != op.grid):
        raise ValueError("fields live on a different grid")
    same = g is None or g is f or np.array_equal(f.values, g.values)
    if op.backend == "dense":
        fhat = op._hat(f)
        ghat = fhat if same else op._hat(g)
        return _dense_bilinear(op, F, fhat, ghat)
    if same:
        return complex(lanczos_quadratic_form(op, F, f).value)
    w = op.grid.weight

    def q(values: np.ndarray) -> float:
        if not np.any(values):
            return 0.0
        return lanczos_quadratic_form(op, F, GridField(op.grid, values)).value

    fv, gv = f.values, g.values
    if np.iscomplexobj(fv) or np.iscomplexobj(gv):
        total = 0.0 + 0.0j
        for k in range(4):
            total += (-1j) ** k * q(fv + (1j**k) * gv)
        return complex(total / 4.0)
    return complex((q(fv + gv) - q(fv - gv)) / 4.0)


@dataclass(frozen=True)
class TwoPointLhs:
    """Finite-volume two-point value, both directly and through the split.

    ``direct`` applies the Bose function to the whole spectrum; ``split`` is
    the bounded-regular part plus beta^-1 times the explicit inverse pairing
    (Green term plus condensate overlaps).  The two must agree to roundoff.
    """

    direct: complex
    regular_term: complex
    green_term: complex
    condensate_term: complex

    @property
    def split(self) -> complex:
        return self.regular_term + self.green_term + self.condensate_term

    @property
    def split_agreement(self) -> float:
        denom = max(abs(self.direct), 1e-300)
        return abs(self.direct - self.split) / denom


def two_point_lhs(op: PhiOperator, beta: float, f: GridField, g: GridField | None = None) -> TwoPointLhs:
    """<f | (e^(-beta Delta_Phi) - 1)^-1 g> on the grid, with its term split."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    if f.grid != op.grid or (g is not None and g.grid != op.grid):
        raise ValueError("fields live on a different grid")
    same = g is None or g is f or np.array_equal(f.values, g.values)
    fhat = op._hat(f)
    ghat = fhat if same else op._hat(g)
    green = complex(np.vdot(fhat, ghat / op.lam)) / beta
    C = op.basis.col_hat
    if C.shape[1]:
        cond = complex(np.vdot(C.conj().T @ fhat, C.conj().T @ ghat)) / beta
    else:
        cond = 0.0 + 0.0j
    if op.backend == "dense":
        direct = _dense_bilinear(op, Bose(beta), fhat, ghat)
        regular = _dense_bilinear(op, BoseRegular(beta), fhat, ghat)
    else:
        direct = quadratic_form(op, Bose(beta), f, g)
        regular = quadratic_form(op, BoseRegular(beta), f, g)
    return TwoPointLhs(direct=direct, regular_term=regular, green_term=green,
                       condensate_term=cond)
