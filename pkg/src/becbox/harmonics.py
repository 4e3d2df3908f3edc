"""Catalog of globally harmonic functions and their grid realizations.

Every variant satisfies Laplace's equation on all of R^d: constants, affine
functions on R, real/imaginary parts of complex polynomials (x+iy-z0)^n, and
the exponential-cosine family e^(kx) cos(ky + phase).  Families are finite,
ordered lists; the pointwise square-summability required of infinite families
is automatic here.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Union

import numpy as np

from .lattice import Grid, GridField, make_spectrum, sample_function, sine_transform, stencil_apply

__all__ = [
    "Constant",
    "Affine1D",
    "HarmonicPoly2D",
    "ExpCos2D",
    "HarmonicSpec",
    "HarmonicFamily",
    "eval_harmonic",
    "harmonicity_residual",
    "sample_family",
    "condensate_density",
    "parse_harmonic",
    "format_harmonic",
    "parse_family",
    "format_family",
]


@dataclass(frozen=True)
class Constant:
    """phi(x) = c on R^d (any d)."""

    c: complex = 1.0


@dataclass(frozen=True)
class Affine1D:
    """phi(x) = a + b x on R."""

    a: complex = 0.0
    b: complex = 1.0


@dataclass(frozen=True)
class HarmonicPoly2D:
    """phi(x, y) = coefficient * Re/Im((x + iy - center)^degree), degree >= 1."""

    degree: int
    part: str = "re"
    center: complex = 0.0
    coefficient: complex = 1.0

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if self.part not in ("re", "im"):
            raise ValueError(f"part must be 're' or 'im', got {self.part!r}")


@dataclass(frozen=True)
class ExpCos2D:
    """phi(x, y) = e^(k x) cos(k y + phase)."""

    k: float = 1.0
    phase: float = 0.0


HarmonicSpec = Union[Constant, Affine1D, HarmonicPoly2D, ExpCos2D]


@dataclass(frozen=True)
class HarmonicFamily:
    """Ordered finite list of harmonic functions (possibly empty)."""

    specs: tuple[HarmonicSpec, ...] = ()

    def __len__(self) -> int:
        return len(self.specs)


def spec_dim(spec: HarmonicSpec) -> int | None:
    """Dimensionality a spec is tied to; None means any dimension."""
    if isinstance(spec, Constant):
        return None
    if isinstance(spec, Affine1D):
        return 1
    return 2


def eval_harmonic(spec: HarmonicSpec, point):
    """Evaluate a harmonic function at a point (or broadcastable arrays).

    ``point`` is a scalar/array for 1d variants or a pair (x, y) for 2d ones.
    """
    coords = point if isinstance(point, (tuple, list)) else (point,)
    d = spec_dim(spec)
    if d is not None and len(coords) != d:
        raise ValueError(
            f"{type(spec).__name__} expects {d} coordinate(s), got {len(coords)}"
        )
    if isinstance(spec, Constant):
        shape = np.broadcast(*[np.asarray(c) for c in coords]).shape
        return np.broadcast_to(np.asarray(spec.c), shape).copy() if shape else spec.c
    if isinstance(spec, Affine1D):
        x = np.asarray(coords[0])
        return spec.a + spec.b * x
    if isinstance(spec, HarmonicPoly2D):
        x, y = (np.asarray(c) for c in coords)
        w = (x + 1j * y - spec.center) ** spec.degree
        part = np.real(w) if spec.part == "re" else np.imag(w)
        return spec.coefficient * part
    if isinstance(spec, ExpCos2D):
        x, y = (np.asarray(c) for c in coords)
        return np.exp(spec.k * x) * np.cos(spec.k * y + spec.phase)
    raise TypeError(f"unknown harmonic spec {spec!r}")


def boundary_values_1d(spec: HarmonicSpec, grid: Grid) -> tuple[complex, complex]:
    """Exact values of phi at the interval endpoints -L/2, +L/2."""
    if grid.dim != 1:
        raise ValueError("boundary_values_1d requires a 1d grid")
    L = grid.lengths[0]
    return (
        complex(np.asarray(eval_harmonic(spec, -L / 2)).item()),
        complex(np.asarray(eval_harmonic(spec, L / 2)).item()),
    )


def _sample(spec: HarmonicSpec, grid: Grid) -> GridField:
    if grid.dim == 1:
        return sample_function(grid, lambda x: eval_harmonic(spec, x))
    return sample_function(grid, lambda x, y: eval_harmonic(spec, (x, y)))


def harmonicity_residual(spec: HarmonicSpec, grid: Grid) -> float:
    """Max |stencil(sampled phi)| over interior nodes whose neighbors are all interior.

    Zero exactly for affine functions and 2d polynomial parts of degree <= 3;
    O(h^2) otherwise.
    """
    d = spec_dim(spec)
    if d is not None and d != grid.dim:
        raise ValueError(f"spec is {d}d but grid is {grid.dim}d")
    res = stencil_apply(grid, _sample(spec, grid)).reshaped()
    inner = tuple(slice(1, -1) for _ in range(grid.dim))
    core = res[inner]
    if core.size == 0:
        return 0.0
    return float(np.abs(core).max())


def _boundary_source(spec: HarmonicSpec, grid: Grid) -> np.ndarray:
    """Stencil source induced by Dirichlet data phi on the boundary lattice points."""
    src = np.zeros(grid.counts, dtype=complex)
    h = grid.spacing
    if grid.dim == 1:
        lo, hi = boundary_values_1d(spec, grid)
        src[0] += lo / h**2
        src[-1] += hi / h**2
        return src
    x0, x1 = grid.axis_nodes(0), grid.axis_nodes(1)
    L0, L1 = grid.lengths
    src[0, :] += np.asarray(eval_harmonic(spec, (-L0 / 2, x1)), dtype=complex) / h**2
    src[-1, :] += np.asarray(eval_harmonic(spec, (L0 / 2, x1)), dtype=complex) / h**2
    src[:, 0] += np.asarray(eval_harmonic(spec, (x0, -L1 / 2)), dtype=complex) / h**2
    src[:, -1] += np.asarray(eval_harmonic(spec, (x0, L1 / 2)), dtype=complex) / h**2
    return src


def sample_family(family: HarmonicFamily, grid: Grid, mode: str = "sampled") -> list[GridField]:
    """Realize the family on the grid.

    mode "sampled": pointwise evaluation at the nodes.  mode
    "discrete-harmonic": solve stencil*v = 0 with boundary data phi on the
    boundary lattice points (via the sine-transform solve of the
    boundary-induced source), so v is exactly stencil-harmonic in the interior.
    """
    if mode not in ("sampled", "discrete-harmonic"):
        raise ValueError(f"mode must be 'sampled' or 'discrete-harmonic', got {mode!r}")
    out = []
    lam = None
    for spec in family.specs:
        d = spec_dim(spec)
        if d is not None and d != grid.dim:
            raise ValueError(f"spec {spec!r} is {d}d but grid is {grid.dim}d")
        if mode == "sampled":
            out.append(_sample(spec, grid))
            continue
        if lam is None:
            lam = make_spectrum(grid, "fd").tensor()
        src = _boundary_source(spec, grid).ravel()
        if np.all(src.imag == 0):
            src = src.real
        chat = sine_transform(grid, GridField(grid, src), "forward")
        v = sine_transform(grid, GridField(grid, chat.values / lam), "inverse")
        out.append(v)
    return out


def condensate_density(family: HarmonicFamily, beta: float, point) -> float:
    """Condensate density beta^-1 sum_k |phi_k(point)|^2."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    total = 0.0
    for spec in family.specs:
        total += float(np.abs(np.asarray(eval_harmonic(spec, point))) ** 2)
    return total / beta


# --- text syntax -------------------------------------------------------------
#
# One spec is TAG:key=value,key=value with tags const, affine, hpoly2, expcos;
# families join specs with ';'.  format -> parse -> format is the identity.

_TAGS = {
    "const": (Constant, {"c": "c"}),
    "affine": (Affine1D, {"a": "a", "b": "b"}),
    "hpoly2": (HarmonicPoly2D, {"n": "degree", "part": "part", "z0": "center", "coeff": "coefficient"}),
    "expcos": (ExpCos2D, {"k": "k", "phase": "phase"}),
}
_TAG_OF = {Constant: "const", Affine1D: "affine", HarmonicPoly2D: "hpoly2", ExpCos2D: "expcos"}
_KEY_OF = {tag: {field: key for key, field in mapping.items()} for tag, (_, mapping) in _TAGS.items()}


def _parse_number(text: str):
    try:
        z = complex(text)
    except ValueError:
        raise ValueError(f"cannot parse number {text!r}") from None
    if z.imag == 0:
        return z.real
    return z


def _format_number(value) -> str:
    z = complex(value)
    if z.imag == 0:
        return repr(z.real)
    return repr(z).strip("()")


def parse_harmonic(text: str) -> HarmonicSpec:
    """Parse one spec string like ``affine:a=1,b=0.5``."""
    text = text.strip()
    tag, _, body = text.partition(":")
    tag = tag.strip()
    if tag not in _TAGS:
        raise ValueError(f"unknown harmonic tag {tag!r} in {text!r}")
    cls, mapping = _TAGS[tag]
    kwargs = {}
    if body.strip():
        for item in body.split(","):
            key, eq, val = item.partition("=")
            key = key.strip()
            if not eq or key not in mapping:
                raise ValueError(f"bad parameter {item!r} for harmonic {tag!r}")
            field = mapping[key]
            val = val.strip()
            if field == "degree":
                kwargs[field] = int(val)
            elif field == "part":
                kwargs[field] = val.lower()
            elif field in ("k", "phase"):
                kwargs[field] = float(val)
            else:
                kwargs[field] = _parse_number(val)
    return cls(**kwargs)


def format_harmonic(spec: HarmonicSpec) -> str:
    """Canonical text form of a spec (round-trips through parse_harmonic)."""
    tag = _TAG_OF[type(spec)]
    keys = _KEY_OF[tag]
    parts = []
    for f in fields(spec):
        val = getattr(spec, f.name)
        if f.name == "degree":
            txt = str(val)
        elif f.name == "part":
            txt = val
        elif f.name in ("k", "phase"):
            txt = repr(float(val))
        else:
            txt = _format_number(val)
        parts.append(f"{keys[f.name]}={txt}")
    return f"{tag}:{','.join(parts)}"


def parse_family(text: str) -> HarmonicFamily:
    """Parse a ';'-separated family string; empty/blank means the empty family."""
    text = text.strip()
    if not text:
        return HarmonicFamily(())
    return HarmonicFamily(tuple(parse_harmonic(p) for p in text.split(";") if p.strip()))


def format_family(family: HarmonicFamily) -> str:
    return ";".join(format_harmonic(s) for s in family.specs)
