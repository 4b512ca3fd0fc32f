"""Kernels K on S x S and their functionals lambda, lambda_2, lambda* and sup lambda_2."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _native
from ._shorthand import parse_shorthand
from .errors import IRGInputError
from .space import FiniteWeighted, Space, UnitInterval, UnitTorus

QUAD_TOL = 1e-9
_MAX_PANEL_POINTS = 1 << 22


class Kernel:
    """Base class. Subclasses are frozen dataclasses; all functionals are pure."""

    kind = ""
    natural_space: type | None = None
    has_closed_form = True

    def to_dict(self) -> dict:
        raise NotImplementedError

    def flat(self) -> tuple[int, np.ndarray]:
        raise NotImplementedError

    def sup(self) -> float:
        raise NotImplementedError

    @property
    def scale_local(self) -> bool:
        # for u < v: K(u, v) = 0 unless u >= v/2, and K(u, v) <= params[0] / v
        return False

    def y_breakpoints(self, x: float) -> list[float]:
        return []

    def x_breakpoints(self) -> list[float]:
        return []

    def singular_points(self) -> list[float]:
        return []

    def default_space(self) -> Space:
        if self.natural_space is None:
            return UnitInterval()
        return self.natural_space()

    def check_space(self, space: Space) -> None:
        if self.natural_space is not None and not isinstance(space, self.natural_space):
            raise IRGInputError(
                f"{self.kind} kernel lives on {self.natural_space.__name__}, got {type(space).__name__}"
            )

    def __str__(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class Constant(Kernel):
    c: float
    kind = "constant"

    def __post_init__(self):
        if not self.c >= 0:
            raise IRGInputError(f"constant kernel needs c >= 0, got {self.c}")

    def to_dict(self):
        return {"type": "constant", "c": float(self.c)}

    def flat(self):
        return _native.CONSTANT, np.array([float(self.c)])

    def sup(self):
        return float(self.c)

    def lam(self, x, space):
        return float(self.c)

    def lam2(self, x, space):
        return float(self.c)

    def extremes(self, space):
        return float(self.c), float(self.c)


@dataclass(frozen=True)
class Block(Kernel):
    matrix: tuple[tuple[float, ...], ...]
    kind = "block"
    natural_space = FiniteWeighted

    def __post_init__(self):
        mat = tuple(tuple(float(v) for v in row) for row in self.matrix)
        object.__setattr__(self, "matrix", mat)
        m = len(mat)
        if m < 1 or any(len(row) != m for row in mat):
            raise IRGInputError("block matrix must be square and non-empty")
        a = np.array(mat)
        if not np.all(a >= 0):
            raise IRGInputError("block matrix must be nonnegative")
        if not np.allclose(a, a.T, rtol=0.0, atol=1e-12):
            raise IRGInputError("block matrix must be symmetric within 1e-12")

    @property
    def size(self) -> int:
        return len(self.matrix)

    def entry(self, i: int, j: int) -> float:
        # upper triangle is authoritative so evaluation is exactly symmetric
        if i > j:
            i, j = j, i
        return self.matrix[i][j]

    def to_dict(self):
        return {"type": "block", "matrix": [list(r) for r in self.matrix]}

    def flat(self):
        m = self.size
        return _native.BLOCK, np.concatenate([[1.0, float(m)], np.array(self.matrix).ravel()])

    def sup(self):
        return float(np.max(self.matrix))

    def check_space(self, space):
        super().check_space(space)
        if space.size != self.size:
            raise IRGInputError(f"block kernel has {self.size} types, space has {space.size} atoms")

    def default_space(self):
        raise IRGInputError("block kernels need an explicit finite space")

    def lam(self, x, space):
        i = int(x)
        return math.fsum(w * self.entry(i, j) for j, w in enumerate(space.weights))

    def lam2(self, x, space):
        i = int(x)
        return math.sqrt(math.fsum(w * self.entry(i, j) ** 2 for j, w in enumerate(space.weights)))

    def extremes(self, space):
        atoms = [i for i, w in enumerate(space.weights) if w > 0]
        return min(self.lam(i, space) for i in atoms), max(self.lam2(i, space) for i in atoms)


@dataclass(frozen=True)
class TorusBand(Kernel):
    """K(x, y) = c * 1[d(x, y) <= r] on the circle."""

    c: float
    r: float
    kind = "torus_band"
    natural_space = UnitTorus

    def __post_init__(self):
        if not self.c >= 0:
            raise IRGInputError("band height c must be >= 0")
        if not 0.0 < self.r <= 0.5:
            raise IRGInputError("band radius must lie in (0, 1/2]")

    def to_dict(self):
        return {"type": "torus_band", "c": float(self.c), "r": float(self.r)}

    def flat(self):
        return _native.TORUS_BAND, np.array([float(self.c), float(self.r)])

    def sup(self):
        return float(self.c)

    def y_breakpoints(self, x):
        return [(x - self.r) % 1.0, (x + self.r) % 1.0]

    def lam(self, x, space):
        return self.c * 2.0 * self.r

    def lam2(self, x, space):
        return math.sqrt(self.c**2 * 2.0 * self.r)

    def extremes(self, space):
        return self.lam(0.0, space), self.lam2(0.0, space)


@dataclass(frozen=True)
class TorusProfile(Kernel):
    """K(x, y) = h(d(x, y)), h piecewise constant on [0, 1/2].

    ``h(d) = values[k]`` for ``breakpoints[k-1] < d <= breakpoints[k]``, with the
    first piece starting at 0 and the last ending at 1/2.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]
    kind = "torus_profile"
    natural_space = UnitTorus

    def __post_init__(self):
        b = tuple(float(v) for v in self.breakpoints)
        v = tuple(float(t) for t in self.values)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)
        if len(v) != len(b) + 1:
            raise IRGInputError("profile needs exactly one more value than breakpoints")
        if any(not 0.0 < t < 0.5 for t in b) or any(b2 <= b1 for b1, b2 in zip(b, b[1:])):
            raise IRGInputError("profile breakpoints must increase strictly inside (0, 1/2)")
        if any(not t >= 0 for t in v):
            raise IRGInputError("profile values must be >= 0")

    def pieces(self) -> list[tuple[float, float, float]]:
        edges = [0.0, *self.breakpoints, 0.5]
        return [(edges[k], edges[k + 1], self.values[k]) for k in range(len(self.values))]

    def to_dict(self):
        return {"type": "torus_profile", "breakpoints": list(self.breakpoints), "values": list(self.values)}

    def flat(self):
        nb = len(self.breakpoints)
        return _native.TORUS_PROFILE, np.array([1.0, float(nb), *self.breakpoints, *self.values])

    def sup(self):
        return max(self.values)

    def y_breakpoints(self, x):
        out = []
        for b in (*self.breakpoints, 0.5):
            out += [(x - b) % 1.0, (x + b) % 1.0]
        return out

    def lam(self, x, space):
        return 2.0 * math.fsum(v * (hi - lo) for lo, hi, v in self.pieces())

    def lam2(self, x, space):
        return math.sqrt(2.0 * math.fsum(v * v * (hi - lo) for lo, hi, v in self.pieces()))

    def extremes(self, space):
        return self.lam(0.0, space), self.lam2(0.0, space)


@dataclass(frozen=True)
class Counterexample(Kernel):
    """(c/x) 1[x/2 <= y <= x] + (c/y) 1[y/2 <= x <= y] on [0, 1): lambda* = c/2, K not in L2."""

    c: float
    kind = "counterexample"
    natural_space = UnitInterval

    def __post_init__(self):
        if not self.c >= 0:
            raise IRGInputError("counterexample scale c must be >= 0")

    @property
    def scale_local(self):
        return True

    def to_dict(self):
        return {"type": "counterexample", "c": float(self.c)}

    def flat(self):
        return _native.COUNTEREXAMPLE, np.array([float(self.c)])

    def sup(self):
        return math.inf if self.c > 0 else 0.0

    def y_breakpoints(self, x):
        return [t for t in (x / 2.0, x, 2.0 * x) if 0.0 < t < 1.0]

    def x_breakpoints(self):
        return [0.5]

    def singular_points(self):
        return [0.0]

    def lam(self, x, space):
        c = self.c
        if x <= 0.5:
            return c / 2.0 + c * math.log(2.0)
        return c / 2.0 + c * math.log(1.0 / x)

    def lam2(self, x, space):
        c = self.c
        if x <= 0.0:
            return math.inf
        if x <= 0.5:
            return math.sqrt(c * c / x)
        return math.sqrt(3.0 * c * c / (2.0 * x) - c * c)

    def extremes(self, space):
        # lambda decreases on (1/2, 1) towards c/2; lambda_2 blows up as x -> 0
        return self.c / 2.0, self.sup()


@dataclass(frozen=True)
class Scaled(Kernel):
    base: Kernel
    factor: float
    kind = "scaled"

    def __post_init__(self):
        if not self.factor >= 0:
            raise IRGInputError("scale factor must be >= 0")

    @property
    def natural_space(self):
        return self.base.natural_space

    @property
    def scale_local(self):
        return self.base.scale_local

    def to_dict(self):
        return {"type": "scaled", "base": self.base.to_dict(), "factor": float(self.factor)}

    def flat(self):
        code, params = self.base.flat()
        params = params.copy()
        params[0] *= self.factor
        return code, params

    def sup(self):
        return 0.0 if self.factor == 0 else self.factor * self.base.sup()

    def check_space(self, space):
        self.base.check_space(space)

    def default_space(self):
        return self.base.default_space()

    def y_breakpoints(self, x):
        return self.base.y_breakpoints(x)

    def x_breakpoints(self):
        return self.base.x_breakpoints()

    def singular_points(self):
        return self.base.singular_points()

    def lam(self, x, space):
        return self.factor * self.base.lam(x, space)

    def lam2(self, x, space):
        return self.factor * self.base.lam2(x, space)

    def extremes(self, space):
        lo, hi = self.base.extremes(space)
        return self.factor * lo, (0.0 if self.factor == 0 else self.factor * hi)


# ---------------------------------------------------------------- serialization

_ALIASES = {"band": "torus_band", "profile": "torus_profile"}


def kernel_from_dict(d: dict) -> Kernel:
    kind = _ALIASES.get(d.get("type"), d.get("type"))
    try:
        if kind == "constant":
            k = Constant(float(d["c"]))
        elif kind == "block":
            k = Block(tuple(tuple(r) for r in d["matrix"]))
        elif kind == "torus_band":
            k = TorusBand(float(d["c"]), float(d["r"]))
        elif kind == "torus_profile":
            k = TorusProfile(tuple(d["breakpoints"]), tuple(d["values"]))
        elif kind == "counterexample":
            k = Counterexample(float(d["c"]))
        elif kind == "scaled":
            k = Scaled(kernel_from_dict(d["base"]), float(d["factor"]))
        else:
            raise IRGInputError(f"unknown kernel type {d.get('type')!r}")
    except KeyError as exc:
        raise IRGInputError(f"kernel {kind!r} is missing field {exc}") from None
    if "scale" in d and kind != "scaled":
        k = Scaled(k, float(d["scale"]))
    return k


def parse_kernel(text: str) -> Kernel:
    return kernel_from_dict(parse_shorthand(text))


# ---------------------------------------------------------------- evaluation


def _resolve_space(kernel: Kernel, space: Space | None) -> Space:
    space = kernel.default_space() if space is None else space
    kernel.check_space(space)
    return space


def evaluate(kernel: Kernel, x, y, space: Space | None = None) -> float:
    space = _resolve_space(kernel, space)
    x = space.check_point(x)
    y = space.check_point(y)
    code, params = kernel.flat()
    return float(_native.kernel_value(code, params, float(x), float(y)))


def evaluate_many(kernel: Kernel, xs, ys) -> np.ndarray:
    code, params = kernel.flat()
    xs, ys = np.broadcast_arrays(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float))
    out = _native.kernel_values(code, params, np.ascontiguousarray(xs.ravel()), np.ascontiguousarray(ys.ravel()))
    return out.reshape(xs.shape)


def _midpoint(fn: Callable[[np.ndarray], np.ndarray], a: float, b: float, tol: float) -> float:
    """Composite midpoint rule on [a, b], doubled until successive estimates agree to tol."""
    n = 1
    prev = (b - a) * float(np.sum(fn(np.array([(a + b) / 2.0]))))
    while True:
        n *= 2
        h = (b - a) / n
        cur = h * float(np.sum(fn(a + h * (np.arange(n) + 0.5))))
        if abs(cur - prev) < tol or n >= _MAX_PANEL_POINTS:
            return cur
        prev = cur


def panels(points: list[float], lo: float = 0.0, hi: float = 1.0) -> list[tuple[float, float]]:
    cuts = sorted({lo, hi, *(p for p in points if lo < p < hi)})
    return list(zip(cuts, cuts[1:]))


def integrate_y(kernel: Kernel, x: float, power: int = 1, tol: float = QUAD_TOL) -> float:
    """int K(x, y)^power dy over [0, 1), split at the kernel's breakpoints in y."""
    code, params = kernel.flat()
    parts = panels(kernel.y_breakpoints(x))

    def fn(ys):
        return _native.kernel_values(code, params, np.full(ys.shape, x), ys) ** power

    return math.fsum(_midpoint(fn, a, b, tol / len(parts)) for a, b in parts)


def lambda_(kernel: Kernel, x, space: Space | None = None, method: str = "auto") -> float:
    """lambda(x) = int K(x, y) dmu(y): closed form, exact sum on finite spaces, or quadrature."""
    space = _resolve_space(kernel, space)
    x = space.check_point(x)
    if isinstance(space, FiniteWeighted):
        code, params = kernel.flat()
        return math.fsum(w * _native.kernel_value(code, params, float(x), float(j)) for j, w in enumerate(space.weights))
    if method == "auto" and kernel.has_closed_form:
        return kernel.lam(x, space)
    return integrate_y(kernel, x, 1)


def lambda2(kernel: Kernel, x, space: Space | None = None, method: str = "auto") -> float:
    """lambda_2(x) = (int K(x, y)^2 dmu(y))^(1/2)."""
    space = _resolve_space(kernel, space)
    x = space.check_point(x)
    if isinstance(space, FiniteWeighted):
        code, params = kernel.flat()
        s = math.fsum(
            w * _native.kernel_value(code, params, float(x), float(j)) ** 2 for j, w in enumerate(space.weights)
        )
        return math.sqrt(s)
    if method == "auto" and kernel.has_closed_form:
        return kernel.lam2(x, space)
    return math.sqrt(integrate_y(kernel, x, 2))


@dataclass(frozen=True)
class KernelFunctionals:
    lambda_star: float
    lambda2_sup: float
    method: str

    @property
    def lambda2_bounded(self) -> bool:
        return math.isfinite(self.lambda2_sup)

    def to_dict(self) -> dict:
        return {
            "lambda_star": self.lambda_star,
            "lambda2_sup": self.lambda2_sup if self.lambda2_bounded else "inf",
            "method": self.method,
        }


def evaluation_grid(kernel: Kernel, grid_size: int) -> np.ndarray:
    xs = (np.arange(grid_size) + 0.5) / grid_size
    extra = [b for b in kernel.x_breakpoints() if 0.0 <= b < 1.0 and b not in kernel.singular_points()]
    return np.unique(np.concatenate([xs, extra]))


def isolation_parameter(
    kernel: Kernel, grid_size: int = 1024, space: Space | None = None, method: str = "auto"
) -> KernelFunctionals:
    """lambda* = essinf lambda and ||lambda_2||_inf.

    Finite spaces are exact over atoms of positive weight. Continuous built-ins use
    their closed forms unless ``method="grid"``, which takes the minimum/maximum over
    a midpoint grid plus x-breakpoints, with lambda and lambda_2 found by quadrature.
    """
    space = _resolve_space(kernel, space)
    if isinstance(space, FiniteWeighted):
        atoms = [i for i, w in enumerate(space.weights) if w > 0]
        lam = [lambda_(kernel, i, space) for i in atoms]
        lam2 = [lambda2(kernel, i, space) for i in atoms]
        return KernelFunctionals(min(lam), max(lam2), "closed_form")
    if method == "auto" and kernel.has_closed_form:
        lo, hi = kernel.extremes(space)
        return KernelFunctionals(lo, hi, "closed_form")
    if grid_size < 2:
        raise IRGInputError("grid_size must be >= 2 on continuous spaces")
    xs = evaluation_grid(kernel, grid_size)
    lam = [integrate_y(kernel, float(x), 1) for x in xs]
    lam2 = [math.sqrt(integrate_y(kernel, float(x), 2)) for x in xs]
    return KernelFunctionals(min(lam), max(lam2), "grid_quadrature")


def _gauss(fn: Callable[[float], float], a: float, b: float, order: int = 24) -> float:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    xs = 0.5 * (b - a) * nodes + 0.5 * (a + b)
    return 0.5 * (b - a) * math.fsum(w * fn(float(x)) for w, x in zip(weights, xs))


def _dyadic_slices(fn: Callable[[float], float], point: float, depth: int) -> list[float]:
    """Integrals of fn over the shells [point + 2^-(k+1), point + 2^-k), k = 1..depth."""
    return [_gauss(fn, point + 2.0 ** -(k + 1), point + 2.0**-k) for k in range(1, depth + 1)]


def _diverges(slices: list[float], tail: int = 8, ratio: float = 0.9) -> bool:
    # geometric decay of the shell integrals with ratio < 0.9 means the tail sums;
    # shells that stop shrinking mean the integral grows without bound
    last = slices[-tail - 1 :]
    return all(b > 0 and b >= ratio * a for a, b in zip(last, last[1:]))


def is_l2(kernel: Kernel, space: Space | None = None, depth: int = 40) -> tuple[bool, str]:
    """Whether K is in L2(mu x mu), i.e. int lambda_2(x)^2 dmu(x) < inf, with a diagnostic."""
    space = _resolve_space(kernel, space)
    if isinstance(space, FiniteWeighted):
        return True, "finite space: every kernel is square integrable"
    if math.isfinite(kernel.sup()):
        return True, "bounded kernel on a probability space"
    notes = []
    verdict = True
    for point in kernel.singular_points():
        sq = _dyadic_slices(lambda x: lambda2(kernel, x, space) ** 2, point, depth)
        if _diverges(sq):
            verdict = False
            one = _dyadic_slices(lambda x: lambda2(kernel, x, space), point, depth)
            first = "diverges" if _diverges(one) else "converges"
            notes.append(
                f"int lambda_2^2 dmu diverges near x={point} (lambda_2^2 not in L1, K not in L2); "
                f"int lambda_2 dmu {first}; lambda_2 unbounded"
            )
        else:
            notes.append(f"int lambda_2^2 dmu converges near x={point}")
    return verdict, "; ".join(notes) if notes else "no singular points declared"
