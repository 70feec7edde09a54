"""Resolvent-capable monotone operators, cocoercive maps, and a small prox catalog.

A resolvent operator exposes ``resolvent(gamma, v) = (Id + gamma*M)^{-1}(v)``;
when M is the subdifferential of a convex function this is the proximal map.
A cocoercive map exposes ``apply(v)`` together with its modulus ``beta``:
<C(z)-C(y), z-y>  >=  beta * ||C(z)-C(y)||^2.

These properties are not enforced at runtime; the test suite checks them on
sampled pairs for every concrete class below.
"""

import math

import numpy as np

from .linalg import LinearMap, as_vector, operator_norm

__all__ = [
    "ResolventOperator",
    "CocoerciveMap",
    "SmoothTerm",
    "InclusionProblem",
    "prox_l1",
    "ZeroOperator",
    "L1Subdifferential",
    "AffineConstraint",
    "ZeroMap",
    "GradientMap",
    "QuadraticTerm",
    "ZeroSmoothTerm",
    "quadratic_term",
    "affine_projection_resolvent",
    "zero_resolvent",
    "zero_smooth_term",
]


def prox_l1(v, t):
    """Soft threshold: componentwise sign(v_i) * max(|v_i| - t, 0)."""
    if not t > 0:
        raise ValueError("threshold t must be positive")
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("prox_l1 input contains non-finite entries")
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


class ResolventOperator:
    """Interface for maximally monotone operators given through their resolvent."""

    dim = None  # None means any dimension

    def resolvent(self, gamma, v):
        raise NotImplementedError


class ZeroOperator(ResolventOperator):
    """M = 0; the resolvent is the identity for every step size."""

    def resolvent(self, gamma, v):
        return np.asarray(v, dtype=float)


class L1Subdifferential(ResolventOperator):
    """M = subdifferential of the l1 norm; resolvent(gamma, .) soft thresholds at gamma."""

    def resolvent(self, gamma, v):
        return prox_l1(v, gamma)


class AffineConstraint(ResolventOperator):
    """Normal cone of the affine set {x : Ax = b}.

    The resolvent is the Euclidean projection onto the set and does not
    depend on the step size.  Construction fails if the system Ax = b has
    no solution.
    """

    def __init__(self, A: LinearMap, b):
        b = as_vector(b, dim=A.out_dim, name="b")
        x_ls, *_ = np.linalg.lstsq(A.matrix, b, rcond=None)
        residual = np.linalg.norm(A.apply(x_ls) - b)
        if residual > 1e-10 * max(1.0, np.linalg.norm(b)):
            raise ValueError(
                f"inconsistent system: no x with Ax = b (residual {residual:.3e})"
            )
        self.A = A
        self.b = b
        self.dim = A.in_dim
        # pinv gives the minimum-norm correction also when A is rank deficient
        self._pinv = np.linalg.pinv(A.matrix)

    def project(self, v):
        return v - self._pinv @ (self.A.apply(v) - self.b)

    def resolvent(self, gamma, v):
        return self.project(v)


class CocoerciveMap:
    """Interface for single-valued cocoercive maps."""

    beta = math.inf
    dim = None

    def apply(self, v):
        raise NotImplementedError


class ZeroMap(CocoerciveMap):
    """C = 0, cocoercive with any modulus; beta is reported as +inf."""

    def apply(self, v):
        return np.zeros_like(np.asarray(v, dtype=float))


class SmoothTerm:
    """Convex differentiable term whose gradient is (1/beta)-Lipschitz."""

    beta = math.inf
    dim = None

    def value(self, v):
        raise NotImplementedError

    def gradient(self, v):
        raise NotImplementedError


class GradientMap(CocoerciveMap):
    """The gradient of a smooth term, cocoercive with the term's modulus."""

    def __init__(self, term: SmoothTerm):
        self.term = term
        self.beta = term.beta
        self.dim = term.dim

    def apply(self, v):
        return self.term.gradient(v)


class QuadraticTerm(SmoothTerm):
    """x -> 0.5 * ||Bx - c||^2 with gradient B^T(Bx - c)."""

    def __init__(self, B: LinearMap, c, beta):
        self.B = B
        self.c = as_vector(c, dim=B.out_dim, name="c")
        self.beta = beta
        self.dim = B.in_dim

    def value(self, v):
        r = self.B.apply(v) - self.c
        return 0.5 * float(np.dot(r, r))

    def gradient(self, v):
        return self.B.adjoint_apply(self.B.apply(v) - self.c)


class ZeroSmoothTerm(SmoothTerm):
    """h = 0 with zero gradient; beta is +inf."""

    def __init__(self, dim=None):
        self.dim = dim

    def value(self, v):
        return 0.0

    def gradient(self, v):
        return np.zeros_like(np.asarray(v, dtype=float))


def quadratic_term(B: LinearMap, c, norm_tol=1e-10):
    """Build the quadratic term 0.5*||Bx-c||^2 with an estimated safe modulus.

    beta = 0.999 / ||B||^2 with the norm from power iteration; the shrink
    keeps step-size rules strictly inside their admissible ranges even when
    the norm estimate is marginally low.
    """
    n = operator_norm(B, tol=norm_tol)
    beta = math.inf if n == 0.0 else 0.999 / (n * n)
    return QuadraticTerm(B, c, beta)


def affine_projection_resolvent(A: LinearMap, b):
    return AffineConstraint(A, b)


def zero_resolvent():
    return ZeroOperator()


def zero_smooth_term(dim=None):
    return ZeroSmoothTerm(dim)


class InclusionProblem:
    """Find z with 0 in M(z) + C(z) for resolvent-capable M and beta-cocoercive C."""

    def __init__(self, M: ResolventOperator, C: CocoerciveMap):
        if M.dim is not None and C.dim is not None and M.dim != C.dim:
            raise ValueError(f"operator dimensions differ: M acts on {M.dim}, C on {C.dim}")
        self.M = M
        self.C = C

    @property
    def dim(self):
        return self.M.dim if self.M.dim is not None else self.C.dim

    @property
    def beta(self):
        return self.C.beta
