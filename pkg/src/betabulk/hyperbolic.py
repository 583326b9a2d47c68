"""Lifted Moebius maps acting on the boundary of the hyperbolic plane.

Boundary points of the upper half-plane are extended reals; ``INF`` is the
point at infinity.  The Cayley map ``U(z) = (i - z) / (z + i)`` sends the real
point ``x`` to ``exp(i * phi)`` with ``x = tan(phi / 2)``, so ``0 -> 0`` and
``INF -> pi``.  Group elements are stored as words of generators, each with a
canonical lift to the universal cover of the circle:

* ``Rotation(alpha)``: ``phi -> phi + alpha``;
* ``Affine(a, b)``: ``z -> a * (z + b)``, lifted so that ``pi`` is fixed.

Words act from the left to the right, i.e. ``(T1 * T2)`` applies ``T1``
first.  Generator parameters may be numpy arrays; they broadcast against the
angles they act on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import StepTooLargeError

TWO_PI = 2.0 * math.pi


class _Infinity:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()
BoundaryPoint = Union[float, _Infinity]


def is_inf(x) -> bool:
    return x is INF


@dataclass(frozen=True)
class Rotation:
    alpha: float

    def inverse(self) -> "Rotation":
        return Rotation(-self.alpha)


@dataclass(frozen=True)
class Affine:
    a: float
    b: float

    def __post_init__(self):
        if np.any(np.asarray(self.a) <= 0):
            raise ValueError("affine scale must be positive")

    def inverse(self) -> "Affine":
        # z -> a(z + b) inverts to w -> (1/a)(w - a b)
        return Affine(1.0 / self.a, -self.a * self.b)

    def then(self, other: "Affine") -> "Affine":
        """The single affine map equal to ``self`` followed by ``other``."""
        return Affine(self.a * other.a, self.b + other.b / self.a)


Generator = Union[Rotation, Affine]


@dataclass(frozen=True)
class LiftedMoebius:
    word: tuple = ()

    @classmethod
    def of(cls, *gens: Generator) -> "LiftedMoebius":
        return cls(tuple(gens))

    def __mul__(self, other: "LiftedMoebius") -> "LiftedMoebius":
        return LiftedMoebius(self.word + other.word)

    def inverse(self) -> "LiftedMoebius":
        return LiftedMoebius(tuple(g.inverse() for g in reversed(self.word)))

    def conj(self, other: "LiftedMoebius") -> "LiftedMoebius":
        """``self ** other = other^-1 * self * other``."""
        return other.inverse() * self * other

    def simplified(self) -> "LiftedMoebius":
        """Merge runs of rotations and runs of affine maps.

        Both merges are exact in the universal cover: rotations are
        translations, and a composite of lifts fixing ``pi`` fixes ``pi``.
        """
        out: list = []
        for g in self.word:
            if out and isinstance(g, Rotation) and isinstance(out[-1], Rotation):
                out[-1] = Rotation(out[-1].alpha + g.alpha)
            elif out and isinstance(g, Affine) and isinstance(out[-1], Affine):
                out[-1] = out[-1].then(g)
            else:
                out.append(g)
        return LiftedMoebius(tuple(out))


def cayley(x: BoundaryPoint) -> float:
    """Principal disk angle in ``(-pi, pi]`` of a boundary point."""
    if is_inf(x):
        return math.pi
    return 2.0 * math.atan(x)


def inverse_cayley(phi: float) -> BoundaryPoint:
    phi0 = principal_angle(phi)
    if phi0 == math.pi:
        return INF
    return math.tan(phi0 / 2.0)


def principal_angle(phi):
    """Reduce to ``(-pi, pi]``."""
    return phi - TWO_PI * winding(phi)


def winding(phi):
    """Integer ``k`` with ``phi - 2 pi k`` in ``(-pi, pi]``."""
    return -np.floor((math.pi - np.asarray(phi, dtype=float)) / TWO_PI)


def lift_affine(a, b, phi):
    """Canonical lift of ``z -> a (z + b)`` (fixing ``pi``) applied to ``phi``."""
    phi = np.asarray(phi, dtype=float)
    k = -np.floor((math.pi - phi) / TWO_PI)
    phi0 = phi - TWO_PI * k
    at_pi = phi0 >= math.pi
    x = np.tan(np.where(at_pi, 0.0, phi0) * 0.5)
    g = np.where(at_pi, math.pi, 2.0 * np.arctan(a * (x + b)))
    return g + TWO_PI * k


def apply_boundary(T: LiftedMoebius, x: BoundaryPoint) -> BoundaryPoint:
    for g in T.word:
        if isinstance(g, Rotation):
            x = inverse_cayley(cayley(x) + g.alpha)
        elif not is_inf(x):
            x = g.a * (x + g.b)
    return x


def apply_lifted(T: LiftedMoebius, phi, max_step: float | None = None):
    """Lifted action ``phi * T``; works elementwise on arrays.

    With ``max_step`` set, an affine generator that moves any angle by
    ``max_step`` or more raises :class:`StepTooLargeError`.  Rotations are
    exact translations and are not guarded.
    """
    out = np.asarray(phi, dtype=float)
    for g in T.word:
        if isinstance(g, Rotation):
            out = out + g.alpha
        else:
            new = lift_affine(g.a, g.b, out)
            if max_step is not None:
                check_step(new - out, max_step)
            out = new
    if np.ndim(out) == 0:
        return float(out)
    return out


def check_step(delta, max_step: float) -> None:
    worst = float(np.max(np.abs(delta))) if np.size(delta) else 0.0
    if worst >= max_step:
        raise StepTooLargeError(
            f"lifted step moved an angle by {worst:.4g} >= {max_step:.4g}")


def ash(T: LiftedMoebius, x, y):
    """Angular shift ``(y*T - x*T) - (y - x)``."""
    return (apply_lifted(T, y) - apply_lifted(T, x)) - (np.asarray(y) - np.asarray(x))


def affine_center_offset(a, b) -> complex:
    """The ``z`` with ``(i + z).A(a, b) = i``."""
    return 1j * (1.0 - a) / a - b
