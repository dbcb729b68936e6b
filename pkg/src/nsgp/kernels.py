"""Kernel families and their hyperparameter layouts.

Every kernel is described by a :class:`KernelSpec` (structure that is not
trained: family, input dimension, basis centers, network shape) and a
:class:`HyperVector` (the flat vector the optimizers move around).

Families
--------
exponential   sigma_s * exp(-0.5 d / l)
rbf           sigma_s * exp(-0.5 d^2 / l^2)
matern32      sigma^2 (1 + sqrt(3) d / l) exp(-sqrt(3) d / l)
matern32_ard  Matern 3/2 on the distance sqrt(dx^T diag(1/l_i^2) dx)
parametric    sum_a g_a(x_i) g_a(x_j) * matern32(d; sigma=1, l)
deep          matern32(||phi(x_i) - phi(x_j)||; sigma, l)
hybrid        sum_a g_a(x_i) g_a(x_j) * matern32(||phi(x_i) - phi(x_j)||; sigma=1, l)

with g_a(x) = sum_k c_ak exp(-0.5 ||x_k - x||^2 / w_a) and phi a
:class:`~nsgp.warpnet.WarpNet`. Note the exponential and RBF kernels take
their amplitude linearly while the Matern kernels square it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .warpnet import WarpNet, parameter_count

FAMILIES = (
    "exponential",
    "rbf",
    "matern32",
    "matern32_ard",
    "parametric",
    "deep",
    "hybrid",
)
STATIONARY = ("exponential", "rbf", "matern32", "matern32_ard")
_NEEDS_CENTERS = ("parametric", "hybrid")
_NEEDS_NET = ("deep", "hybrid")

SQRT3 = np.sqrt(3.0)

SCALE_BOUNDS = (1e-3, 1e2)
COEFF_BOUNDS = (-2.0, 2.0)
NET_BOUNDS = (-5.0, 5.0)
NOISE_BOUNDS = (1e-6, 1.0)


class KernelError(ValueError):
    """Raised for malformed kernel specs, hyper vectors or input shapes."""


@dataclass(frozen=True)
class Segment:
    name: str
    start: int
    stop: int
    positive: bool

    @property
    def size(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True, eq=False)
class KernelSpec:
    family: str
    dim: int
    basis_centers: Optional[np.ndarray] = None
    num_g: int = 2
    net_shape: Optional[tuple[int, ...]] = None
    nugget: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise KernelError(f"unknown kernel family {self.family!r}; choose from {FAMILIES}")
        if self.dim < 1:
            raise KernelError("dim must be >= 1")
        if (self.basis_centers is not None) != (self.family in _NEEDS_CENTERS):
            raise KernelError(f"basis_centers required iff family in {_NEEDS_CENTERS}")
        if (self.net_shape is not None) != (self.family in _NEEDS_NET):
            raise KernelError(f"net_shape required iff family in {_NEEDS_NET}")
        if self.basis_centers is not None:
            centers = np.atleast_2d(np.asarray(self.basis_centers, dtype=float))
            if self.dim == 1 and centers.shape[0] == 1 and centers.shape[1] != 1:
                centers = centers.T
            if centers.shape[1] != self.dim:
                raise KernelError("basis centers have the wrong dimension")
            object.__setattr__(self, "basis_centers", centers)
        if self.net_shape is not None:
            shape = tuple(int(w) for w in self.net_shape)
            if shape[0] != self.dim or shape[-1] != self.dim:
                raise KernelError("warping network must map R^dim to R^dim")
            object.__setattr__(self, "net_shape", shape)
        if self.num_g < 1:
            raise KernelError("num_g must be >= 1")

    def __eq__(self, other):
        if not isinstance(other, KernelSpec):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    @property
    def n_centers(self) -> int:
        return 0 if self.basis_centers is None else self.basis_centers.shape[0]

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "dim": self.dim,
            "basis_centers": None if self.basis_centers is None else self.basis_centers.tolist(),
            "num_g": self.num_g,
            "net_shape": None if self.net_shape is None else list(self.net_shape),
            "nugget": self.nugget,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(
            family=d["family"],
            dim=int(d["dim"]),
            basis_centers=None if d.get("basis_centers") is None else np.array(d["basis_centers"]),
            num_g=int(d.get("num_g", 2)),
            net_shape=None if d.get("net_shape") is None else tuple(d["net_shape"]),
            nugget=bool(d.get("nugget", False)),
        )


def grid_centers(dim: int, per_axis: Sequence[float]) -> np.ndarray:
    """Tensor grid of basis centers, e.g. ``{0, 0.5, 1}^3``."""
    return np.array(list(itertools.product(per_axis, repeat=dim)), dtype=float)


def preset_kernel(name: str, dim: int) -> KernelSpec:
    """Kernel configurations used for the 1-D synthetic and 3-D experiments.

    ``name`` is one of ``stationary``, ``parametric``, ``deep``, ``hybrid``.
    3-D configurations train a nugget, 1-D ones do not.
    """
    nugget = dim > 1
    if dim == 1:
        centers = np.linspace(0.0, 1.0, 6)[:, None]
        hidden = (5, 5)
    else:
        centers = grid_centers(dim, (0.0, 0.5, 1.0))
        hidden = (10, 10)
    net = (dim, *hidden, dim)
    if name == "stationary":
        return KernelSpec("matern32", dim, nugget=nugget)
    if name == "parametric":
        return KernelSpec("parametric", dim, basis_centers=centers, nugget=nugget)
    if name == "deep":
        return KernelSpec("deep", dim, net_shape=net, nugget=nugget)
    if name == "hybrid":
        return KernelSpec("hybrid", dim, basis_centers=centers, net_shape=net, nugget=nugget)
    raise KernelError(f"unknown kernel configuration {name!r}")


def hyper_layout(spec: KernelSpec) -> tuple[Segment, ...]:
    """Named segments of the hyperparameter vector for ``spec``."""
    parts: list[tuple[str, int, bool]] = []
    fam = spec.family
    if fam in ("exponential", "rbf"):
        parts += [("signal_variance", 1, True), ("length_scale", 1, True)]
    elif fam == "matern32":
        parts += [("sigma", 1, True), ("length_scale", 1, True)]
    elif fam == "matern32_ard":
        parts += [("sigma", 1, True), ("length_scales", spec.dim, True)]
    if fam in _NEEDS_CENTERS:
        parts += [("g_coefficients", spec.num_g * spec.n_centers, False),
                  ("g_widths", spec.num_g, True)]
    if fam in _NEEDS_NET:
        parts.append(("net", parameter_count(spec.net_shape), False))
    if fam == "deep":
        parts.append(("sigma", 1, True))
    if fam in ("parametric", "deep", "hybrid"):
        parts.append(("length_scale", 1, True))
    if spec.nugget:
        parts.append(("noise_variance", 1, True))

    layout, pos = [], 0
    for name, size, positive in parts:
        layout.append(Segment(name, pos, pos + size, positive))
        pos += size
    return tuple(layout)


def hyper_count(spec: KernelSpec) -> int:
    return hyper_layout(spec)[-1].stop


def _segment_bounds(seg: Segment) -> tuple[float, float]:
    if seg.name == "g_coefficients":
        return COEFF_BOUNDS
    if seg.name == "net":
        return NET_BOUNDS
    if seg.name == "noise_variance":
        return NOISE_BOUNDS
    return SCALE_BOUNDS


@dataclass(eq=False)
class HyperVector:
    """Flat hyperparameter vector with a named layout and box bounds."""

    values: np.ndarray
    layout: tuple[Segment, ...]
    bounds: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).copy()
        self.bounds = np.asarray(self.bounds, dtype=float).reshape(-1, 2)
        total = self.layout[-1].stop if self.layout else 0
        if self.values.shape != (total,) or self.bounds.shape[0] != total:
            raise KernelError(
                f"hyper vector length {self.values.size}, bounds {self.bounds.shape[0]}, "
                f"layout total {total} disagree"
            )

    def __len__(self):
        return self.values.size

    def __getitem__(self, name: str) -> np.ndarray:
        for seg in self.layout:
            if seg.name == name:
                return self.values[seg.start:seg.stop]
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(seg.name == name for seg in self.layout)

    def scalar(self, name: str) -> float:
        return float(self[name][0])

    @property
    def positive_mask(self) -> np.ndarray:
        mask = np.zeros(len(self), dtype=bool)
        for seg in self.layout:
            mask[seg.start:seg.stop] = seg.positive
        return mask

    def with_values(self, values) -> "HyperVector":
        return HyperVector(np.asarray(values, dtype=float), self.layout, self.bounds)

    def set(self, name: str, value) -> "HyperVector":
        new = self.with_values(self.values)
        for seg in self.layout:
            if seg.name == name:
                new.values[seg.start:seg.stop] = value
                return new
        raise KeyError(name)

    def in_bounds(self, atol: float = 0.0) -> bool:
        return bool(np.all(self.values >= self.bounds[:, 0] - atol)
                    and np.all(self.values <= self.bounds[:, 1] + atol))

    def to_dict(self) -> dict:
        return {
            "values": self.values.tolist(),
            "layout": [
                {"name": s.name, "start": s.start, "stop": s.stop, "positive": s.positive}
                for s in self.layout
            ],
            "bounds": self.bounds.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HyperVector":
        layout = tuple(Segment(s["name"], int(s["start"]), int(s["stop"]), bool(s["positive"]))
                       for s in d["layout"])
        return cls(np.array(d["values"], dtype=float), layout, np.array(d["bounds"], dtype=float))


def default_hypers(spec: KernelSpec, noise_variance: float = 1e-3) -> HyperVector:
    """Reasonable starting point inside the default bounds.

    Warping networks start as the identity map (when the shape allows it) so
    deep and hybrid kernels begin where their shallow counterparts would.
    """
    layout = hyper_layout(spec)
    bounds = np.array([_segment_bounds(seg) for seg in layout for _ in range(seg.size)])
    values = np.empty(layout[-1].stop)
    for seg in layout:
        sl = slice(seg.start, seg.stop)
        if seg.name in ("sigma", "signal_variance"):
            values[sl] = 0.3
        elif seg.name in ("length_scale", "length_scales"):
            values[sl] = 0.1
        elif seg.name == "g_widths":
            values[sl] = 0.05
        elif seg.name == "g_coefficients":
            values[sl] = 0.3
        elif seg.name == "net":
            try:
                values[sl] = WarpNet.identity(spec.net_shape).pack()
            except ValueError:
                values[sl] = np.random.default_rng(0).uniform(-1, 1, seg.size)
        elif seg.name == "noise_variance":
            values[sl] = noise_variance
    return HyperVector(values, layout, bounds)


def _check_layout(spec: KernelSpec, hypers: HyperVector):
    if hypers.layout != hyper_layout(spec):
        raise KernelError(f"hyper vector layout does not match a {spec.family} kernel")


def pairwise_distances(x1: np.ndarray, x2: np.ndarray, scale=None) -> np.ndarray:
    """Euclidean distances, computed from explicit differences.

    Summing squared differences (rather than expanding the square) keeps
    ``D[i, j]`` and ``D[j, i]`` bit-identical and translation exact.
    ``scale`` multiplies each coordinate difference (ARD).
    """
    diff = x1[:, None, :] - x2[None, :, :]
    if scale is not None:
        diff = diff * scale
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def anisotropic_distance(x_i, x_j, m_diag) -> float:
    """``sqrt((x_i - x_j)^T diag(m_diag) (x_i - x_j))``."""
    m_diag = np.asarray(m_diag, dtype=float)
    if np.any(m_diag <= 0):
        raise KernelError("anisotropy diagonal must be strictly positive")
    diff = np.asarray(x_i, dtype=float) - np.asarray(x_j, dtype=float)
    return float(np.sqrt(np.sum(m_diag * diff * diff)))


def eval_stationary(family: str, d, sigma: float, length: float):
    """Stationary kernel as a function of distance (scalar or array)."""
    d = np.asarray(d, dtype=float)
    if not (np.all(np.isfinite(d)) and np.isfinite(sigma) and np.isfinite(length)):
        raise KernelError("non-finite kernel input")
    if family == "exponential":
        out = sigma * np.exp(-0.5 * d / length)
    elif family == "rbf":
        out = sigma * np.exp(-0.5 * d**2 / length**2)
    elif family in ("matern32", "matern32_ard"):
        r = SQRT3 * d / length
        out = sigma**2 * (1.0 + r) * np.exp(-r)
    else:
        raise KernelError(f"{family!r} is not a stationary family")
    return out if out.ndim else float(out)


def eval_g(x, coeffs, centers, width):
    """Radial basis expansion ``g(x) = sum_k c_k exp(-0.5 ||x_k - x||^2 / w)``.

    ``x`` may be a single point or a ``(Q, n)`` batch.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    pts = x.reshape(1, -1) if single else x
    centers = np.asarray(centers, dtype=float).reshape(len(coeffs), -1)
    if centers.shape[1] != pts.shape[1]:
        raise KernelError("point and basis-center dimensions differ")
    d2 = pairwise_distances(pts, centers) ** 2
    g = np.exp(-0.5 * d2 / width) @ np.asarray(coeffs, dtype=float)
    return float(g[0]) if single else g


def _g_values(x: np.ndarray, spec: KernelSpec, hypers: HyperVector) -> np.ndarray:
    """Matrix of shape ``(num_g, len(x))`` holding each g_a evaluated at x."""
    coeffs = hypers["g_coefficients"].reshape(spec.num_g, spec.n_centers)
    widths = hypers["g_widths"]
    d2 = pairwise_distances(x, spec.basis_centers) ** 2
    return np.stack([np.exp(-0.5 * d2 / w) @ c for c, w in zip(coeffs, widths)])


def _amplitude(g1: np.ndarray, g2: np.ndarray) -> np.ndarray:
    return sum(np.multiply.outer(a, b) for a, b in zip(g1, g2))


def kernel_matrix(x1, x2, spec: KernelSpec, hypers: HyperVector) -> np.ndarray:
    """Covariance matrix ``K[i, j] = k(x1[i], x2[j])``."""
    _check_layout(spec, hypers)
    x1 = np.atleast_2d(np.asarray(x1, dtype=float))
    x2 = np.atleast_2d(np.asarray(x2, dtype=float))
    if x1.shape[1] != spec.dim or x2.shape[1] != spec.dim:
        raise KernelError(
            f"points have dimension {x1.shape[1]}/{x2.shape[1]}, kernel expects {spec.dim}"
        )
    same = x1 is x2 or (x1.shape == x2.shape and np.array_equal(x1, x2))
    fam = spec.family

    if fam in ("exponential", "rbf"):
        d = pairwise_distances(x1, x2)
        return eval_stationary(fam, d, hypers.scalar("signal_variance"), hypers.scalar("length_scale"))
    if fam == "matern32":
        d = pairwise_distances(x1, x2)
        return eval_stationary(fam, d, hypers.scalar("sigma"), hypers.scalar("length_scale"))
    if fam == "matern32_ard":
        d = pairwise_distances(x1, x2, scale=1.0 / hypers["length_scales"])
        return eval_stationary(fam, d, hypers.scalar("sigma"), 1.0)

    if fam in _NEEDS_NET:
        net = WarpNet.unpack(spec.net_shape, hypers["net"])
        p1 = net.forward(x1)
        p2 = p1 if same else net.forward(x2)
        d = pairwise_distances(p1, p2)
    else:
        d = pairwise_distances(x1, x2)

    if fam == "deep":
        return eval_stationary("matern32", d, hypers.scalar("sigma"), hypers.scalar("length_scale"))

    base = eval_stationary("matern32", d, 1.0, hypers.scalar("length_scale"))
    g1 = _g_values(x1, spec, hypers)
    g2 = g1 if same else _g_values(x2, spec, hypers)
    return _amplitude(g1, g2) * base


def _pair(x_i, x_j, spec, hypers) -> float:
    return float(kernel_matrix(np.reshape(x_i, (1, -1)), np.reshape(x_j, (1, -1)), spec, hypers)[0, 0])


def eval_parametric_ns(x_i, x_j, spec: KernelSpec, hypers: HyperVector) -> float:
    if spec.family != "parametric":
        raise KernelError("spec is not a parametric kernel")
    return _pair(x_i, x_j, spec, hypers)


def eval_deep(x_i, x_j, spec: KernelSpec, hypers: HyperVector) -> float:
    if spec.family != "deep":
        raise KernelError("spec is not a deep kernel")
    return _pair(x_i, x_j, spec, hypers)


def eval_hybrid(x_i, x_j, spec: KernelSpec, hypers: HyperVector) -> float:
    if spec.family != "hybrid":
        raise KernelError("spec is not a hybrid kernel")
    return _pair(x_i, x_j, spec, hypers)


def with_nugget(spec: KernelSpec, nugget: bool = True) -> KernelSpec:
    return replace(spec, nugget=nugget)
