"""Finite symmetric contraction semigroups on weighted point sets.

A :class:`Generator` is a real matrix ``A`` that is self-adjoint for the
weighted inner product ``<u, v> = sum_i u_i conj(v_i) nu_i`` and has
nonnegative spectrum.  The eigendecomposition is computed once, by
conjugating with ``diag(sqrt(nu))`` and calling a symmetric solver, and all
functional calculus goes through it.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import comb

from .errors import DomainError

SELF_ADJOINT_TOL = 1e-10
SPECTRUM_TOL = 1e-10
CONTRACTION_TOL = 1e-12
CERTIFICATE_TIMES = np.geomspace(1e-3, 1e3, 25)


@dataclass(frozen=True)
class WeightedSpace:
    nu: np.ndarray

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=float).ravel()
        if nu.size == 0 or not np.all(nu > 0) or not np.all(np.isfinite(nu)):
            raise DomainError("measure weights must be finite and strictly positive")
        nu.setflags(write=False)
        object.__setattr__(self, "nu", nu)

    @property
    def n(self) -> int:
        return self.nu.size

    @property
    def mass(self) -> float:
        return float(self.nu.sum())

    def __eq__(self, other):
        return isinstance(other, WeightedSpace) and np.array_equal(self.nu, other.nu)

    def __hash__(self):
        return hash(self.nu.tobytes())


def l1_norm_exact(space: WeightedSpace, B) -> float:
    """Operator norm on L^1(nu): ``max_j nu_j^{-1} sum_i nu_i |B_ij|``."""
    B = np.abs(np.asarray(B))
    return float(np.max((space.nu @ B) / space.nu))


def linf_norm_exact(B) -> float:
    """Operator norm on L^inf: the largest absolute row sum."""
    return float(np.max(np.abs(np.asarray(B)).sum(axis=1)))


class Generator:
    """Validated nonnegative nu-self-adjoint generator with cached eigendata.

    Parameters
    ----------
    space : WeightedSpace
    matrix : (n, n) array_like
        Real matrix acting on functions by ``(Af)_i = sum_j A_ij f_j``.
    certify : bool
        Check the L^1 / L^inf contraction property of ``exp(-tA)`` on a log
        grid of times.  Markovian constructors skip it: their structure
        guarantees it exactly.
    """

    def __init__(self, space: WeightedSpace, matrix, *, certify: bool = True):
        A = np.array(matrix, dtype=float)
        n = space.n
        if A.shape != (n, n):
            raise DomainError(f"matrix shape {A.shape} does not match {n} points")
        nu = space.nu
        NA = nu[:, None] * A
        scale = max(1.0, float(np.abs(NA).max()))
        if np.abs(NA - NA.T).max() > SELF_ADJOINT_TOL * scale:
            raise DomainError("matrix is not self-adjoint in L^2(nu)")
        root = np.sqrt(nu)
        S = root[:, None] * A / root[None, :]
        lam, W = np.linalg.eigh(0.5 * (S + S.T))
        lam_scale = max(1.0, float(np.abs(lam).max()))
        if lam.min() < -SPECTRUM_TOL * lam_scale:
            raise DomainError(f"spectrum has negative part {lam.min():.3e}")
        zero = np.abs(lam) <= SPECTRUM_TOL * lam_scale
        self.space = space
        self.matrix = A
        self.eigenvalues = np.where(zero, 0.0, lam)
        self.eigenvectors = W / root[:, None]
        self.zero_mask = zero
        self.markovian = False
        for arr in (self.matrix, self.eigenvalues, self.eigenvectors, self.zero_mask):
            arr.setflags(write=False)
        if certify:
            worst = self.contraction_excess()
            if worst > CONTRACTION_TOL:
                raise DomainError(f"exp(-tA) fails the contraction certificate by {worst:.3e}")

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def nu(self) -> np.ndarray:
        return self.space.nu

    @property
    def spectral_gap(self) -> float:
        """Smallest positive eigenvalue (``inf`` if the generator is zero)."""
        pos = self.eigenvalues[~self.zero_mask]
        return float(pos.min()) if pos.size else float("inf")

    def coefficients(self, f) -> np.ndarray:
        """Expansion coefficients ``<f, e_k>_nu`` (the basis is real)."""
        f = np.asarray(f)
        return self.eigenvectors.T @ (self.nu.reshape((-1,) + (1,) * (f.ndim - 1)) * f)

    def spectral_matrix(self, values) -> np.ndarray:
        """Matrix of the operator acting by ``values[k]`` on ``e_k``."""
        E = self.eigenvectors
        return (E * np.asarray(values)[None, :]) @ (E.T * self.nu[None, :])

    def apply_values(self, values, f) -> np.ndarray:
        values = np.asarray(values)
        c = self.coefficients(f)
        if c.ndim == 1:
            return self.eigenvectors @ (values * c)
        return self.eigenvectors @ (values.reshape((-1,) + (1,) * (c.ndim - 1)) * c)

    def semigroup_matrix(self, z) -> np.ndarray:
        if np.real(z) < 0:
            raise DomainError("complex time must have nonnegative real part")
        return self.spectral_matrix(np.exp(-z * self.eigenvalues))

    def contraction_excess(self, times=CERTIFICATE_TIMES) -> float:
        worst = -np.inf
        for t in times:
            T = self.semigroup_matrix(float(t))
            worst = max(worst, l1_norm_exact(self.space, T) - 1.0, linf_norm_exact(T) - 1.0)
        return float(worst)

    def range_basis(self) -> np.ndarray:
        """nu-orthonormal basis of the range (eigenvectors with lambda > 0)."""
        return self.eigenvectors[:, ~self.zero_mask]

    def to_json(self) -> str:
        return json.dumps({"weights": self.nu.tolist(), "matrix": self.matrix.tolist()})

    @classmethod
    def from_json(cls, text: str, *, certify: bool = True) -> "Generator":
        doc = json.loads(text)
        return cls(WeightedSpace(np.array(doc["weights"])), np.array(doc["matrix"]),
                   certify=certify)

    def __repr__(self):
        return f"Generator(n={self.n}, spectrum=[{self.eigenvalues.min():.3g}, {self.eigenvalues.max():.3g}])"


@dataclass(frozen=True)
class MultiplierSpec:
    """A spectral function with a separately prescribed value at zero.

    ``spectral_fn`` must accept numpy arrays (real or complex) and is only
    evaluated away from zero.
    """

    spectral_fn: Callable
    value_at_zero: complex = 0.0
    name: str = "m"

    def __call__(self, lam):
        lam = np.asarray(lam)
        out = np.asarray(self.spectral_fn(np.where(lam == 0, 1.0, lam)), dtype=complex)
        return np.where(lam == 0, self.value_at_zero, out)


# ------------------------------------------------------------ constructors

def graph_laplacian(conductances, nu) -> Generator:
    """Markovian generator ``(Af)_i = sum_j c_ij (f_i - f_j) / nu_i``.

    Symmetric nonnegative conductances make ``A`` nu-self-adjoint with zero
    row sums, so ``exp(-tA)`` is stochastic and nu-symmetric.
    """
    C = np.array(conductances, dtype=float)
    space = WeightedSpace(nu)
    if C.shape != (space.n, space.n):
        raise DomainError("conductance matrix shape does not match the weights")
    if np.abs(C - C.T).max() > 0:
        raise DomainError("conductances must be symmetric")
    if np.any(C < 0):
        raise DomainError("conductances must be nonnegative")
    np.fill_diagonal(C, 0.0)
    A = (np.diag(C.sum(axis=1)) - C) / space.nu[:, None]
    gen = Generator(space, A, certify=False)
    gen.markovian = True
    return gen


def two_point() -> Generator:
    """Heat generator ``[[1, -1], [-1, 1]]`` on two points of mass 1/2."""
    return graph_laplacian([[0.0, 0.5], [0.5, 0.0]], [0.5, 0.5])


def ehrenfest(n: int) -> Generator:
    """Ehrenfest urn on ``{0..n}``: each of n balls flips at rate ``1/n``.

    Stationary law Binomial(n, 1/2); spectrum ``{2k/n : k = 0..n}``.
    """
    if n < 1:
        raise DomainError("Ehrenfest chain needs n >= 1")
    k = np.arange(n + 1)
    nu = comb(n, k) / 2.0 ** n
    C = np.zeros((n + 1, n + 1))
    up = nu[:-1] * (n - k[:-1]) / n
    C[k[:-1], k[:-1] + 1] = up
    C[k[:-1] + 1, k[:-1]] = up
    return graph_laplacian(C, nu)


def random_markov_generator(n: int, rng, density: float = 0.7) -> Generator:
    """Connected random graph Laplacian with random weights (test fixture)."""
    nu = rng.uniform(0.2, 2.0, n)
    C = rng.uniform(0.05, 1.5, (n, n)) * (rng.random((n, n)) < density)
    C = np.triu(C, 1)
    idx = np.arange(n - 1)
    C[idx, idx + 1] = np.maximum(C[idx, idx + 1], 0.05)
    return graph_laplacian(C + C.T, nu)


# ------------------------------------------------------- spectral calculus

def evolve(gen: Generator, z, f) -> np.ndarray:
    """``T_z f = exp(-zA) f`` for ``Re z >= 0``."""
    if np.real(z) < 0:
        raise DomainError("complex time must have nonnegative real part")
    return gen.apply_values(np.exp(-z * gen.eigenvalues), f)


def evolve_path(gen: Generator, zs, f) -> np.ndarray:
    """``T_z f`` for every ``z`` in ``zs``; result shape ``(len(zs), n)``."""
    zs = np.atleast_1d(np.asarray(zs))
    if np.any(np.real(zs) < 0):
        raise DomainError("complex time must have nonnegative real part")
    c = gen.coefficients(np.asarray(f, dtype=complex))
    return (np.exp(-np.outer(zs, gen.eigenvalues)) * c) @ gen.eigenvectors.T


def projection_P0(gen: Generator, f) -> np.ndarray:
    """Orthogonal projection onto the null space of ``A``."""
    return gen.apply_values(gen.zero_mask.astype(float), f)


def apply_multiplier(gen: Generator, m: MultiplierSpec, f) -> np.ndarray:
    return gen.apply_values(m(gen.eigenvalues), f)


def multiplier_matrix(gen: Generator, m: MultiplierSpec) -> np.ndarray:
    return gen.spectral_matrix(m(gen.eigenvalues))


def imaginary_power_values(gen: Generator, s: float) -> np.ndarray:
    lam = gen.eigenvalues
    vals = np.exp(1j * s * np.log(np.where(gen.zero_mask, 1.0, lam)))
    return np.where(gen.zero_mask, 0.0, vals)


def imaginary_power(gen: Generator, s: float, f) -> np.ndarray:
    """``A^{is} f``, acting as zero on the null space."""
    return gen.apply_values(imaginary_power_values(gen, s), f)


def imaginary_power_matrix(gen: Generator, s: float) -> np.ndarray:
    return gen.spectral_matrix(imaginary_power_values(gen, s))


def linear_modulus(T) -> np.ndarray:
    """Linear modulus of a finite operator.

    The nu-kernel of ``T`` is ``nu_i T_ij``; taking its entrywise modulus and
    dividing by ``nu_i`` again returns ``|T_ij|``, independently of ``nu``.
    """
    return np.abs(np.asarray(T))


def sectorial_form(gen: Generator, f, p: float) -> complex:
    """``int (A f) conj(f) |f|^{p-2} dnu``; points where ``f = 0`` contribute 0."""
    f = np.asarray(f, dtype=complex)
    mod = np.abs(f)
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = np.where(mod > 0, mod ** (p - 2.0), 0.0)
    return complex(np.sum((gen.matrix @ f) * np.conj(f) * weight * gen.nu))


def check_contraction(space: WeightedSpace, T, tol: float = CONTRACTION_TOL,
                      sa_tol: Optional[float] = SELF_ADJOINT_TOL) -> None:
    """Raise unless ``T`` is nu-self-adjoint with L^1 and L^inf norms at most ``1 + tol``."""
    T = np.asarray(T)
    if sa_tol is not None:
        NT = space.nu[:, None] * T
        if np.abs(NT - NT.conj().T).max() > sa_tol * max(1.0, float(np.abs(NT).max())):
            raise DomainError("operator is not self-adjoint in L^2(nu)")
    if l1_norm_exact(space, T) > 1 + tol or linf_norm_exact(T) > 1 + tol:
        raise DomainError("operator is not a contraction on L^1 and L^inf")
