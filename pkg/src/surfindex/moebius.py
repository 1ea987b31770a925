"""2x2 complex matrices and their projective classes (Moebius maps)."""
from __future__ import annotations

import cmath
import math

import numpy as np

from .expr import INFTY, is_infinity


class SingularMatrix(Exception):
    pass


DET_TOL = 1e-12
SU2_TOL = 1e-10
IDENTITY_TOL = 1e-9


class Mat2:
    """A 2x2 complex matrix.  MoebiusMap semantics treat it projectively."""

    __slots__ = ("m",)

    def __init__(self, m):
        self.m = np.asarray(m, dtype=complex).reshape(2, 2)

    @staticmethod
    def identity() -> "Mat2":
        return Mat2(np.eye(2))

    @property
    def a(self):
        return self.m[0, 0]

    @property
    def b(self):
        return self.m[0, 1]

    @property
    def c(self):
        return self.m[1, 0]

    @property
    def d(self):
        return self.m[1, 1]

    def det(self) -> complex:
        return complex(self.m[0, 0] * self.m[1, 1] - self.m[0, 1] * self.m[1, 0])

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return Mat2(self.m @ other.m)

    def scale(self, c: complex) -> "Mat2":
        return Mat2(c * self.m)

    def inverse(self, tol: float = DET_TOL) -> "Mat2":
        d = self.det()
        if abs(d) < tol:
            raise SingularMatrix(f"|det| = {abs(d):.3e} below tolerance")
        return Mat2(np.array([[self.m[1, 1], -self.m[0, 1]],
                              [-self.m[1, 0], self.m[0, 0]]]) / d)

    def conj_transpose(self) -> "Mat2":
        return Mat2(self.m.conj().T)

    def normalized(self) -> "Mat2":
        """Scale to unit determinant (sign ambiguity of the square root remains)."""
        d = self.det()
        if abs(d) < DET_TOL:
            raise SingularMatrix("cannot normalize a singular matrix")
        return self.scale(1.0 / cmath.sqrt(d))

    def is_su2(self, tol: float = SU2_TOL) -> bool:
        """True iff conj(M)^T M = I within tol after unit-determinant scaling."""
        try:
            n = self.normalized()
        except SingularMatrix:
            return False
        r = n.m.conj().T @ n.m - np.eye(2)
        return float(np.max(np.abs(r))) < tol

    def is_identity_map(self, tol: float = IDENTITY_TOL) -> bool:
        """True iff the matrix is a scalar multiple of the identity."""
        scale = float(np.max(np.abs(self.m)))
        if scale == 0.0:
            return False
        off = max(abs(self.m[0, 1]), abs(self.m[1, 0]))
        return bool(off < tol * scale
                    and abs(self.m[0, 0] - self.m[1, 1]) < tol * scale)

    def apply(self, w):
        """Moebius action on the Riemann sphere; INFTY is a legal value."""
        a, b, c, d = self.a, self.b, self.c, self.d
        if is_infinity(w):
            if c == 0:
                return INFTY
            return a / c
        num = a * w + b
        den = c * w + d
        if den == 0:
            return INFTY
        return num / den

    def proj_distance(self, other: "Mat2") -> float:
        """Projective distance: min over phase of the scaled difference."""
        x = self.m / np.linalg.norm(self.m)
        y = other.m / np.linalg.norm(other.m)
        ip = np.vdot(x, y)
        phase = ip / abs(ip) if abs(ip) > 0 else 1.0
        return float(np.linalg.norm(x - phase * y))

    def __repr__(self):
        return f"Mat2({self.m.tolist()})"


MoebiusMap = Mat2


def mobius_from_three_points(p, q) -> Mat2:
    """The Moebius map sending p[0],p[1],p[2] to q[0],q[1],q[2].

    Points may include INFTY; the triples must each be distinct."""
    def to_zero_one_inf(z1, z2, z3):
        # w -> cross ratio (w-z1)(z2-z3) / ((w-z3)(z2-z1))
        if is_infinity(z1):
            return Mat2([[0, z2 - z3], [1, -z3]])
        if is_infinity(z2):
            return Mat2([[1, -z1], [1, -z3]])
        if is_infinity(z3):
            return Mat2([[1, -z1], [0, z2 - z1]])
        return Mat2([[z2 - z3, -z1 * (z2 - z3)], [z2 - z1, -z3 * (z2 - z1)]])

    A = to_zero_one_inf(*p)
    B = to_zero_one_inf(*q)
    return B.inverse() @ A


def random_moebius(rng) -> Mat2:
    """A generic well-conditioned Moebius map for randomized tests."""
    while True:
        m = Mat2(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        if abs(m.det()) > 0.3 and float(np.max(np.abs(m.m))) < 3.0:
            return m.normalized()
