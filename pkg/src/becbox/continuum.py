"""Continuum-side reference values: test functions, Fourier tables, and the
momentum-space form of the two-point function.

Everything here is independent of the lattice modules so it can serve as an
oracle for them.  The Fourier convention is unitary,
fhat(p) = (2pi)^(-d/2) * integral f(x) e^(-ip.x) dx, which makes
<f, F(-Delta) f> = integral F(|p|^2) |fhat|^2 dp without extra factors.

Test functions are built from the smooth compactly supported bump
psi(t) = exp(-1/(1-t^2)) on |t| < 1, tensorized per axis, so trapezoidal
quadrature over the support converges faster than any power of the step.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "HypothesisError",
    "Bump",
    "Dipole",
    "Combination",
    "TestFunctionSpec",
    "FourierTable",
    "RhsValue",
    "evaluate",
    "support_bounds",
    "spatial_norm_sq",
    "fourier_oracle",
    "free_gas_integral",
    "regular_part_integral",
    "green_integral",
    "overlap_integral",
    "condensate_term",
    "two_point_rhs",
    "resolvent_reference",
    "permanent_ryser",
    "permanent_enumerate",
    "wick_npoint",
    "parse_test_function",
    "format_test_function",
]

ZERO_MEAN_RTOL = 1e-8


class HypothesisError(ValueError):
    """An input violates a hypothesis of the evaluated formula
    (e.g. nonzero mean in d <= 2, where the Green integral diverges)."""


def bump_profile(t: np.ndarray) -> np.ndarray:
    """The standard bump exp(-1/(1-t^2)) on |t| < 1, exactly 0 outside."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ti * ti))
    return out


@dataclass(frozen=True)
class Bump:
    """amplitude * prod_i psi((x_i - c_i)/a_i); support is the box |x_i - c_i| < a_i."""

    center: tuple[float, ...]
    halfwidth: tuple[float, ...]
    amplitude: complex = 1.0

    def __post_init__(self):
        if len(self.center) != len(self.halfwidth):
            raise ValueError("center and halfwidth must have equal length")
        if any(a <= 0 for a in self.halfwidth):
            raise ValueError("halfwidths must be positive")

    @property
    def dim(self) -> int:
        return len(self.center)


@dataclass(frozen=True)
class Dipole:
    """Bump shifted by -offset minus bump shifted by +offset along one axis.

    The difference is odd about the center along that axis, so the integral
    (and hence fhat(0)) vanishes exactly.
    """

    center: tuple[float, ...]
    offset: float
    halfwidth: tuple[float, ...]
    axis: int = 0
    amplitude: complex = 1.0

    def __post_init__(self):
        if len(self.center) != len(self.halfwidth):
            raise ValueError("center and halfwidth must have equal length")
        if not 0 <= self.axis < len(self.center):
            raise ValueError("dipole axis out of range")
        if self.offset <= 0:
            raise ValueError("offset must be positive")

    @property
    def dim(self) -> int:
        return len(self.center)


@dataclass(frozen=True)
class Combination:
    """Finite linear combination of bumps/dipoles of a common dimension."""

    terms: tuple[tuple[complex, Union[Bump, Dipole]], ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("combination needs at least one term")
        dims = {spec.dim for _, spec in self.terms}
        if len(dims) != 1:
            raise ValueError("combination mixes dimensions")

    @property
    def dim(self) -> int:
        return self.terms[0][1].dim


TestFunctionSpec = Union[Bump, Dipole, Combination]


def _tensor_terms(spec: TestFunctionSpec):
    """Decompose into (coefficient, per-axis (center, halfwidth) factors)."""
    if isinstance(spec, Bump):
        return [(complex(spec.amplitude), tuple(zip(spec.center, spec.halfwidth)))]
    if isinstance(spec, Dipole):
        minus = list(spec.center)
        plus = list(spec.center)
        minus[spec.axis] -= spec.offset
        plus[spec.axis] += spec.offset
        amp = complex(spec.amplitude)
        return [
            (amp, tuple(zip(minus, spec.halfwidth))),
            (-amp, tuple(zip(plus, spec.halfwidth))),
        ]
    if isinstance(spec, Combination):
        out = []
        for coeff, sub in spec.terms:
            for c, factors in _tensor_terms(sub):
                out.append((complex(coeff) * c, factors))
        return out
    raise TypeError(f"unknown test function {spec!r}")


def evaluate(spec: TestFunctionSpec, *coords) -> np.ndarray:
    """Evaluate at broadcastable coordinate arrays; exactly 0 outside support."""
    if len(coords) != spec.dim:
        raise ValueError(f"expected {spec.dim} coordinates, got {len(coords)}")
    coords = [np.asarray(c, dtype=float) for c in coords]
    total = None
    for coeff, factors in _tensor_terms(spec):
        term = coeff
        for x, (c, a) in zip(coords, factors):
            term = term * bump_profile((x - c) / a)
        total = term if total is None else total + term
    return total


def support_bounds(spec: TestFunctionSpec) -> list[tuple[float, float]]:
    """Per-axis interval containing the support."""
    los = [np.inf] * spec.dim
    his = [-np.inf] * spec.dim
    for _, factors in _tensor_terms(spec):
        for i, (c, a) in enumerate(factors):
            los[i] = min(los[i], c - a)
            his[i] = max(his[i], c + a)
    return list(zip(los, his))


def _axis_quadrature(lo: float, hi: float, quad_points: int):
    x = np.linspace(lo, hi, quad_points)
    w = np.full(quad_points, x[1] - x[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    return x, w


def _support_mesh(spec: TestFunctionSpec, quad_points: int):
    """Tensor trapezoid rule over the support bounding box."""
    axes = []
    weights = []
    for lo, hi in support_bounds(spec):
        x, w = _axis_quadrature(lo, hi, quad_points)
        axes.append(x)
        weights.append(w)
    return axes, weights


def spatial_norm_sq(spec: TestFunctionSpec, quad_points: int = 2048) -> float:
    """integral |f|^2 by trapezoid quadrature over the support."""
    axes, weights = _support_mesh(spec, quad_points)
    mesh = np.meshgrid(*axes, indexing="ij")
    vals = np.abs(evaluate(spec, *mesh)) ** 2
    for w in reversed(weights):
        vals = vals @ w if vals.ndim > 1 else np.dot(vals, w)
    return float(vals)


def overlap_integral(spec: TestFunctionSpec, fn, quad_points: int = 2048) -> complex:
    """integral conj(f(x)) * fn(x) dx over the support of f.

    ``fn`` takes the per-axis mesh arrays and must broadcast.
    """
    axes, weights = _support_mesh(spec, quad_points)
    mesh = np.meshgrid(*axes, indexing="ij")
    vals = np.conj(evaluate(spec, *mesh)) * np.asarray(fn(*mesh))
    for w in reversed(weights):
        vals = vals @ w if vals.ndim > 1 else np.dot(vals, w)
    return complex(vals)


# --- Fourier tables ----------------------------------------------------------


@dataclass(frozen=True)
class FourierTable:
    """Tabulated unitary Fourier transform on a symmetric uniform p-grid.

    ``p`` is the common per-axis momentum grid (0 sits at index len(p)//2);
    values has shape (len(p),) in 1d and (len(p), len(p)) in 2d.
    """

    dim: int
    p: np.ndarray
    values: np.ndarray
    provenance: dict

    @property
    def p_spacing(self) -> float:
        return float(self.p[1] - self.p[0])

    @property
    def zero_index(self) -> int:
        return len(self.p) // 2

    def value_at_zero(self) -> complex:
        idx = (self.zero_index,) * self.dim
        return complex(self.values[idx])

    def parseval_sum(self) -> float:
        """delta_p-weighted sum of |fhat|^2 (should match integral |f|^2)."""
        return float(self.p_spacing**self.dim * np.sum(np.abs(self.values) ** 2))

    def is_zero_mean(self) -> bool:
        top = float(np.abs(self.values).max())
        return abs(self.value_at_zero()) <= ZERO_MEAN_RTOL * max(top, 1e-300)


def _axis_transform_centered(a: float, p: np.ndarray, quad_points: int) -> np.ndarray:
    """(2pi)^(-1/2) integral psi(x/a) e^(-ipx) dx on the given p grid (real, even)."""
    x, w = _axis_quadrature(-a, a, quad_points)
    fw = w * bump_profile(x / a)
    out = np.empty(len(p))
    chunk = 512
    for i in range(0, len(p), chunk):
        pi = p[i : i + chunk]
        out[i : i + chunk] = np.cos(np.outer(pi, x)) @ fw
    return out / np.sqrt(2.0 * np.pi)


def fourier_oracle(
    spec: TestFunctionSpec,
    cutoff: float,
    p_spacing: float,
    quad_points: int = 2048,
) -> FourierTable:
    """Tabulate fhat on the symmetric grid {-M dp, ..., M dp}, M = round(P/dp).

    Trapezoid quadrature over the support is spectrally accurate for the
    smooth bump family; the result is deterministic for fixed parameters.
    """
    if cutoff <= 0 or p_spacing <= 0 or quad_points < 8:
        raise ValueError("cutoff, p_spacing must be positive and quad_points >= 8")
    M = int(round(cutoff / p_spacing))
    p = p_spacing * np.arange(-M, M + 1)
    cache: dict[float, np.ndarray] = {}

    def axis_hat(c, a):
        # shift theorem: the centered transform is real and even, and a
        # common center cancels exactly in antisymmetric combinations
        if a not in cache:
            cache[a] = _axis_transform_centered(a, p, quad_points)
        base = cache[a]
        if c == 0.0:
            return base
        return np.exp(-1j * p * c) * base

    shape = (len(p),) * spec.dim
    values = np.zeros(shape, dtype=complex)
    for coeff, factors in _tensor_terms(spec):
        hats = [axis_hat(c, a) for c, a in factors]
        if spec.dim == 1:
            values += coeff * hats[0]
        else:
            values += coeff * np.outer(hats[0], hats[1])
    prov = {"cutoff": float(cutoff), "p_spacing": float(p_spacing), "quad_points": int(quad_points)}
    return FourierTable(dim=spec.dim, p=p, values=values, provenance=prov)


def _check_compatible(table_f: FourierTable, table_g: FourierTable) -> None:
    if table_f.dim != table_g.dim or len(table_f.p) != len(table_g.p):
        raise ValueError("tables live on different momentum grids")
    if not np.array_equal(table_f.p, table_g.p):
        raise ValueError("tables live on different momentum grids")


def _grid_pieces(table: FourierTable):
    p = table.p
    if table.dim == 1:
        psq = p**2
        w = np.full(len(p), table.p_spacing)
        w[0] *= 0.5
        w[-1] *= 0.5
        return psq, w
    psq = p[:, None] ** 2 + p[None, :] ** 2
    w1 = np.full(len(p), table.p_spacing)
    w1[0] *= 0.5
    w1[-1] *= 0.5
    return psq, np.outer(w1, w1)


def _bose_regular_scalar(t: np.ndarray) -> np.ndarray:
    """1/(e^t - 1) - 1/t, evaluated stably for t > 0 (limit -1/2 at 0)."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    small = t < 0.5
    ts = t[small]
    # Bernoulli series; next omitted term is < 1e-16 at t = 0.5
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
    out[~small] = np.where(np.isinf(e), 0.0, 1.0 / np.where(np.isinf(e), 1.0, e)) - 1.0 / tl
    return out


def _bose_scalar(t: np.ndarray) -> np.ndarray:
    """1/(e^t - 1) for t > 0, overflow-safe."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    mod = t < 700.0
    out[mod] = 1.0 / np.expm1(t[mod])
    return out


def _green_zero_limit(table_f: FourierTable, table_g: FourierTable) -> complex:
    """Limit of conj(fhat) ghat / |p|^2 at p = 0 by symmetric parabolic fit."""
    z = np.conj(table_f.values) * table_g.values
    m = table_f.zero_index
    dp2 = table_f.p_spacing**2
    if table_f.dim == 1:
        g1 = 0.5 * (z[m + 1] + z[m - 1]) / dp2
        g2 = 0.5 * (z[m + 2] + z[m - 2]) / (4.0 * dp2)
        return complex((4.0 * g1 - g2) / 3.0)
    limits = []
    for sel1, sel2 in (
        ((m + 1, m), (m + 2, m)),
        ((m - 1, m), (m - 2, m)),
        ((m, m + 1), (m, m + 2)),
        ((m, m - 1), (m, m - 2)),
    ):
        g1 = z[sel1] / dp2
        g2 = z[sel2] / (4.0 * dp2)
        limits.append((4.0 * g1 - g2) / 3.0)
    return complex(np.mean(limits))


def _bilinear_integral(table_f, table_g, kernel, zero_value):
    _check_compatible(table_f, table_g)
    psq, w = _grid_pieces(table_f)
    z = np.conj(table_f.values) * table_g.values
    integrand = np.zeros_like(z)
    m = table_f.zero_index
    zero_idx = (m,) * table_f.dim
    mask = np.ones(z.shape, dtype=bool)
    mask[zero_idx] = False
    integrand[mask] = z[mask] * kernel(psq[mask])
    integrand[zero_idx] = zero_value
    return complex(np.sum(integrand * w))


def free_gas_integral(table_f: FourierTable, beta: float, table_g: FourierTable | None = None):
    """integral conj(fhat) ghat / (e^(beta |p|^2) - 1) dp.

    The p = 0 cell uses the analytic limit (regular part plus Green limit over
    beta), which requires fhat(0) = ghat(0) = 0 in d <= 2.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    table_g = table_f if table_g is None else table_g
    zf = table_f.value_at_zero()
    zg = table_g.value_at_zero()
    zero_value = -np.conj(zf) * zg / 2.0 + _green_zero_limit(table_f, table_g) / beta
    out = _bilinear_integral(table_f, table_g, lambda q: _bose_scalar(beta * q), zero_value)
    return out.real if table_g is table_f else out


def regular_part_integral(table_f: FourierTable, beta: float, table_g: FourierTable | None = None):
    """integral conj(fhat) ghat F(beta |p|^2) dp with F(x) = 1/(e^x-1) - 1/x."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    table_g = table_f if table_g is None else table_g
    zero_value = -np.conj(table_f.value_at_zero()) * table_g.value_at_zero() / 2.0
    out = _bilinear_integral(
        table_f, table_g, lambda q: _bose_regular_scalar(beta * q), zero_value
    )
    return out.real if table_g is table_f else out


def green_integral(table_f: FourierTable, table_g: FourierTable | None = None):
    """integral conj(fhat) ghat / |p|^2 dp, requiring zero mean in d <= 2."""
    table_g = table_f if table_g is None else table_g
    if table_f.dim <= 2:
        for name, t in (("f", table_f), ("g", table_g)):
            if not t.is_zero_mean():
                raise HypothesisError(
                    f"{name}hat(0) = {t.value_at_zero():.3e} is not zero; the Green "
                    f"integral needs zero mean in d <= 2"
                )
    zero_value = _green_zero_limit(table_f, table_g)
    out = _bilinear_integral(table_f, table_g, lambda q: 1.0 / q, zero_value)
    return out.real if table_g is table_f else out


# --- right-hand side of the two-point formula --------------------------------


@dataclass(frozen=True)
class RhsValue:
    """Right side of the two-point formula split into its named terms."""

    free_gas: complex
    condensate: complex
    regular: complex
    green: complex

    @property
    def total(self) -> complex:
        return self.free_gas + self.condensate


def condensate_term(family, f: TestFunctionSpec, g: TestFunctionSpec, beta: float,
                    quad_points: int = 2048) -> complex:
    """beta^-1 sum_k (integral conj(f) phi_k) (integral conj(phi_k) g)."""
    from . import harmonics

    if not beta > 0:
        raise ValueError("beta must be positive")
    total = 0.0 + 0.0j
    for spec in family.specs:
        if f.dim == 1:
            fn = lambda x: harmonics.eval_harmonic(spec, x)
        else:
            fn = lambda x, y: harmonics.eval_harmonic(spec, (x, y))
        a = overlap_integral(f, fn, quad_points)          # integral conj(f) phi
        b = overlap_integral(g, fn, quad_points)          # integral conj(g) phi
        total += a * np.conj(b)
    return complex(total) / beta


def two_point_rhs(
    family,
    f: TestFunctionSpec,
    g: TestFunctionSpec,
    beta: float,
    table_f: FourierTable,
    table_g: FourierTable | None = None,
    quad_points: int = 2048,
) -> RhsValue:
    """Momentum-space two-point value plus condensate overlaps."""
    table_g = table_f if table_g is None else table_g
    if table_f.dim <= 2 and not (table_f.is_zero_mean() and table_g.is_zero_mean()):
        raise HypothesisError("fhat(0) = ghat(0) = 0 is required in d <= 2")
    same = table_g is table_f
    free = free_gas_integral(table_f, beta, None if same else table_g)
    reg = regular_part_integral(table_f, beta, None if same else table_g)
    grn = green_integral(table_f, None if same else table_g)
    cond = condensate_term(family, f, g, beta, quad_points)
    return RhsValue(free_gas=complex(free), condensate=cond,
                    regular=complex(reg), green=complex(grn))


# --- resolvent reference ------------------------------------------------------


def resolvent_reference(u: TestFunctionSpec, points, table: FourierTable | None = None):
    """(1 - Delta)^-1 u on R^d at the given points.

    d=1 convolves with the kernel e^(-|x-y|)/2 by Gauss-Legendre panels split
    at the kink; d=2 synthesizes from a Fourier table of u.
    """
    if u.dim == 1:
        pts = np.atleast_1d(np.asarray(points, dtype=float))
        (lo, hi), = support_bounds(u)
        nodes, wts = np.polynomial.legendre.leggauss(64)

        def panel(a, b, x):
            if b <= a:
                return 0.0
            y = 0.5 * (b - a) * nodes + 0.5 * (a + b)
            w = 0.5 * (b - a) * wts
            vals = evaluate(u, y) * np.exp(-np.abs(x - y)) / 2.0
            return np.dot(w, vals)

        out = np.empty(len(pts), dtype=complex)
        for i, x in enumerate(pts):
            if lo < x < hi:
                out[i] = panel(lo, x, x) + panel(x, hi, x)
            else:
                out[i] = panel(lo, hi, x)
        if np.all(out.imag == 0):
            out = out.real
        return out
    if table is None:
        raise ValueError("d=2 synthesis needs a Fourier table of u")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    psq, w = _grid_pieces(table)
    kern = table.values * w / (1.0 + psq)
    out = np.empty(len(pts), dtype=complex)
    for i, (x1, x2) in enumerate(pts):
        phase = np.exp(1j * table.p * x1)[:, None] * np.exp(1j * table.p * x2)[None, :]
        out[i] = np.sum(kern * phase)
    return out / (2.0 * np.pi)


# --- Wick rule ----------------------------------------------------------------


def permanent_ryser(T: np.ndarray) -> complex:
    """Permanent by Ryser's inclusion-exclusion formula (n <= 12)."""
    T = np.asarray(T)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError("matrix must be square")
    n = T.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n > 12:
        raise ValueError("Ryser path is limited to n <= 12")
    total = 0.0 + 0.0j
    for S in range(1, 1 << n):
        cols = [j for j in range(n) if (S >> j) & 1]
        rows = T[:, cols].sum(axis=1)
        total += (-1) ** len(cols) * np.prod(rows)
    return complex((-1) ** n * total)


def permanent_enumerate(T: np.ndarray) -> complex:
    """Permanent by direct enumeration of all pairings (n <= 6)."""
    T = np.asarray(T)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError("matrix must be square")
    n = T.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n > 6:
        raise ValueError("enumeration path is limited to n <= 6")
    total = 0.0 + 0.0j
    for perm in itertools.permutations(range(n)):
        term = 1.0 + 0.0j
        for i, j in enumerate(perm):
            term *= T[i, j]
        total += term
    return complex(total)


def wick_npoint(T: np.ndarray) -> complex:
    """n-point function of a quasi-free state: the permanent of the two-point matrix."""
    return permanent_ryser(T)


# --- text syntax ---------------------------------------------------------------
#
# 1d: bump:c=0,a=1,amp=1 and dipole:c=0,s=1,a=0.75,amp=1
# 2d: bump2:cx=..,cy=..,ax=..,ay=..,amp=..
#     dipole2:cx=..,cy=..,s=..,ax=..,ay=..,axis=x,amp=..
# format -> parse -> format is the identity.


def parse_test_function(text: str) -> TestFunctionSpec:
    text = text.strip()
    tag, _, body = text.partition(":")
    tag = tag.strip()
    params = {}
    if body.strip():
        for item in body.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise ValueError(f"bad parameter {item!r} in {text!r}")
            params[key.strip()] = val.strip()

    def fnum(key, default=None):
        if key not in params:
            if default is None:
                raise ValueError(f"{tag!r} needs parameter {key!r}")
            return default
        return float(params.pop(key))

    def cnum(key, default):
        if key not in params:
            return default
        v = complex(params.pop(key))
        return v.real if v.imag == 0 else v

    if tag == "bump":
        spec = Bump(center=(fnum("c"),), halfwidth=(fnum("a"),), amplitude=cnum("amp", 1.0))
    elif tag == "dipole":
        spec = Dipole(center=(fnum("c"),), offset=fnum("s"), halfwidth=(fnum("a"),),
                      amplitude=cnum("amp", 1.0))
    elif tag == "bump2":
        spec = Bump(center=(fnum("cx"), fnum("cy")), halfwidth=(fnum("ax"), fnum("ay")),
                    amplitude=cnum("amp", 1.0))
    elif tag == "dipole2":
        axis = params.pop("axis", "x")
        if axis not in ("x", "y"):
            raise ValueError(f"dipole2 axis must be x or y, got {axis!r}")
        spec = Dipole(center=(fnum("cx"), fnum("cy")), offset=fnum("s"),
                      halfwidth=(fnum("ax"), fnum("ay")), axis=0 if axis == "x" else 1,
                      amplitude=cnum("amp", 1.0))
    else:
        raise ValueError(f"unknown test function tag {tag!r}")
    if params:
        raise ValueError(f"unknown parameters {sorted(params)} for {tag!r}")
    return spec


def _amp_text(a) -> str:
    z = complex(a)
    return repr(z.real) if z.imag == 0 else repr(z).strip("()")


def format_test_function(spec: TestFunctionSpec) -> str:
    if isinstance(spec, Bump):
        if spec.dim == 1:
            return f"bump:c={spec.center[0]!r},a={spec.halfwidth[0]!r},amp={_amp_text(spec.amplitude)}"
        return (f"bump2:cx={spec.center[0]!r},cy={spec.center[1]!r},"
                f"ax={spec.halfwidth[0]!r},ay={spec.halfwidth[1]!r},amp={_amp_text(spec.amplitude)}")
    if isinstance(spec, Dipole):
        if spec.dim == 1:
            return (f"dipole:c={spec.center[0]!r},s={spec.offset!r},"
                    f"a={spec.halfwidth[0]!r},amp={_amp_text(spec.amplitude)}")
        return (f"dipole2:cx={spec.center[0]!r},cy={spec.center[1]!r},s={spec.offset!r},"
                f"ax={spec.halfwidth[0]!r},ay={spec.halfwidth[1]!r},"
                f"axis={'x' if spec.axis == 0 else 'y'},amp={_amp_text(spec.amplitude)}")
    raise ValueError("combinations have no text form")
