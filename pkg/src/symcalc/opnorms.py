"""Weighted L^p norms and p -> p operator norms on finite measure spaces.

For ``p`` outside ``{1, 2, inf}`` the operator norm is a nonconvex
maximization.  :func:`op_norm` returns the best value found together with a
witness vector, so every reported norm is a certified *lower* bound.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError
from .semigroup import WeightedSpace, l1_norm_exact, linf_norm_exact

METHODS = ("auto", "exact", "power-iteration", "grid-oracle", "subspace")


def lp_norm(space: WeightedSpace, f, p: float) -> float:
    """``(sum |f_i|^p nu_i)^(1/p)``, or ``max |f_i|`` for ``p = inf``."""
    if not p >= 1:
        raise DomainError(f"p must be at least 1, got {p}")
    a = np.abs(np.asarray(f))
    if np.isinf(p):
        return float(a.max(axis=0))
    m = a.max(axis=0)
    if np.all(m == 0):
        return 0.0 if a.ndim == 1 else np.zeros(a.shape[1:])
    w = space.nu.reshape((-1,) + (1,) * (a.ndim - 1))
    m = np.where(m == 0, 1.0, m)
    out = m * (np.sum(w * (a / m) ** p, axis=0)) ** (1.0 / p)
    return float(out) if np.ndim(out) == 0 else out


def pairing(space: WeightedSpace, f, g) -> complex:
    """``<f, g> = sum f_i conj(g_i) nu_i``."""
    return complex(np.sum(np.asarray(f) * np.conj(np.asarray(g)) * space.nu))


def nu_adjoint(space: WeightedSpace, B) -> np.ndarray:
    """Adjoint for the weighted pairing: ``N^{-1} B^H N``."""
    B = np.asarray(B)
    return (B.conj().T * space.nu[None, :]) / space.nu[:, None]


@dataclass
class NormRequest:
    p: float
    method: str = "auto"
    multistarts: int = 32
    tol: float = 1e-8
    max_iter: int = 500
    seed: int = 0
    field: str = "auto"
    subspace: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.p >= 1:
            raise DomainError("p must be at least 1")
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}")
        if self.method == "exact" and self.p not in (1, 2, np.inf):
            raise DomainError("exact operator norms exist only for p in {1, 2, inf}")
        if self.field not in ("auto", "real", "complex"):
            raise DomainError("field must be 'auto', 'real' or 'complex'")


@dataclass
class NormResult:
    value: float
    witness: np.ndarray
    method: str
    converged: bool = True
    iterations: int = 0
    history: list = field(default_factory=list)


def _ratio(space, B, x, p):
    nx = lp_norm(space, x, p)
    return lp_norm(space, B @ x, p) / nx if nx > 0 else 0.0


def _exact(space, B, p):
    B = np.asarray(B)
    n = space.n
    if p == 1:
        j = int(np.argmax((space.nu @ np.abs(B)) / space.nu))
        w = np.zeros(n, dtype=B.dtype)
        w[j] = 1.0
        return l1_norm_exact(space, B), w
    if np.isinf(p):
        i = int(np.argmax(np.abs(B).sum(axis=1)))
        row = B[i]
        w = np.where(row != 0, np.conj(row) / np.where(row == 0, 1, np.abs(row)), 1.0)
        return linf_norm_exact(B), w
    root = np.sqrt(space.nu)
    S = root[:, None] * B / root[None, :]
    U, sig, Vh = np.linalg.svd(S)
    return float(sig[0]), Vh[0].conj() / root


def _dual(y, r):
    """Unit-norm dual vector in l^{r'} of a nonzero vector ``y`` in l^r."""
    a = np.abs(y)
    m = a.max()
    if m == 0:
        return np.zeros_like(y)
    a = a / m
    phase = np.where(a > 0, y / np.where(a > 0, np.abs(y), 1.0), 0.0)
    d = a ** (r - 1.0) * phase
    return d / np.sum(a ** r) ** ((r - 1.0) / r)


def _power_iteration(Bt, p, x, tol, max_iter):
    """Duality-map ascent for ``max ||Bt x||_p / ||x||_p`` in unweighted l^p."""
    q = p / (p - 1.0)
    x = x / np.sum(np.abs(x) ** p) ** (1.0 / p)
    BH = Bt.conj().T
    gamma = np.sum(np.abs(Bt @ x) ** p) ** (1.0 / p)
    for it in range(1, max_iter + 1):
        y = Bt @ x
        if not np.any(y):
            return 0.0, x, True, it
        z = BH @ _dual(y, p)
        znorm = np.sum(np.abs(z) ** q) ** (1.0 / q)
        x_new = _dual(z, q)
        g_new = np.sum(np.abs(Bt @ x_new) ** p) ** (1.0 / p)
        higham = znorm <= np.real(np.vdot(z, x)) * (1 + 1e-15)
        if g_new >= gamma:
            x, g_old, gamma = x_new, gamma, g_new
        else:
            g_old = gamma
        if higham or abs(gamma - g_old) <= tol * gamma:
            return float(gamma), x, True, it
    return float(gamma), x, False, max_iter


def _polish(space, B, p, x, complex_field):
    """Local quasi-Newton refinement of a witness (maximizes the same ratio)."""
    n = x.size

    def unpack(v):
        return v[:n] + 1j * v[n:] if complex_field else v

    def neg(v):
        u = unpack(v)
        nu = lp_norm(space, u, p)
        return -lp_norm(space, B @ u, p) / nu if nu > 0 else 0.0

    v0 = np.concatenate([x.real, x.imag]) if complex_field else np.real(x)
    res = minimize(neg, v0, method="BFGS", options={"gtol": 1e-12, "maxiter": 2000})
    u = unpack(res.x)
    return (-res.fun, u) if -res.fun > _ratio(space, B, x, p) else (_ratio(space, B, x, p), x)


def _seeds(space, B, p, rng, k, complex_field):
    n = space.n
    _, v2 = _exact(space, B, 2)
    seeds = [v2, np.abs(v2) + 0j if complex_field else np.abs(v2)]
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        seeds.append(e)
    while len(seeds) < k:
        x = rng.standard_normal(n)
        if complex_field:
            x = x + 1j * rng.standard_normal(n)
        seeds.append(x)
    return seeds[:k]


def power_iteration_norm(space, B, p, multistarts=32, tol=1e-8, max_iter=500, seed=0,
                         complex_field=None, polish=True) -> NormResult:
    B = np.asarray(B)
    if complex_field is None:
        complex_field = np.iscomplexobj(B)
    rng = np.random.default_rng(seed)
    wp = space.nu ** (1.0 / p)
    Bt = wp[:, None] * B / wp[None, :]
    best = (-1.0, None, False, 0)
    history = []
    for x0 in _seeds(space, B, p, rng, multistarts, complex_field):
        x0 = np.asarray(x0, dtype=complex if complex_field else float)
        if not np.any(x0):
            continue
        g, u, ok, it = _power_iteration(Bt, p, wp * x0, tol, max_iter)
        history.append(g)
        if g > best[0]:
            best = (g, u / wp, ok, it)
    value, witness, ok, it = best
    if polish and value > 0:
        value, witness = _polish(space, B, p, witness, complex_field)
    result = NormResult(float(value), witness, "power-iteration", ok, it, history)
    return result


@lru_cache(maxsize=8)
def _sphere_grid(n, per_angle):
    """Directions covering the half unit sphere of R^n (n <= 4), via hyperspherical angles."""
    if n == 1:
        return np.ones((1, 1))
    axes = [np.linspace(0.0, np.pi, per_angle, endpoint=False)]
    axes += [np.linspace(0.0, np.pi, per_angle // 2 + 1)] * (n - 2)
    theta = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)
    x = np.ones((theta.shape[0], n))
    for i in range(n - 1):
        t = theta[:, n - 2 - i]
        x[:, : n - 1 - i] *= np.sin(t)[:, None]
        x[:, n - 1 - i] *= np.cos(t)
    x.setflags(write=False)
    return x


def grid_oracle_norm(space, B, p, per_angle=None, refine=6) -> NormResult:
    """Brute-force real ``p -> p`` norm for ``n <= 4``: dense grid + Nelder-Mead."""
    B = np.asarray(B)
    n = space.n
    if n > 4:
        raise DomainError("grid oracle is limited to n <= 4")
    if np.iscomplexobj(B):
        raise DomainError("grid oracle searches real vectors only")
    per_angle = per_angle or {1: 1, 2: 4000, 3: 360, 4: 60}[n]
    X = _sphere_grid(n, per_angle)
    num = lp_norm(space, B @ X.T, p)
    den = lp_norm(space, X.T, p)
    vals = np.atleast_1d(num / den)
    starts = []
    for idx in np.argsort(vals)[::-1]:
        # distinct basins only: skip directions within ~0.15 rad of an accepted start
        if all(abs(X[idx] @ y) < np.cos(0.15) for y in starts):
            starts.append(X[idx])
            if len(starts) == refine:
                break
    best_v, best_x = -1.0, None
    for x0 in starts:

        def neg(x):
            d = lp_norm(space, x, p)
            return -lp_norm(space, B @ x, p) / d if d > 0 else 0.0

        res = minimize(neg, x0, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 20000,
                                "maxfev": 40000})
        if -res.fun > best_v:
            best_v, best_x = -res.fun, res.x
    return NormResult(float(best_v), best_x, "grid-oracle")


def subspace_norm(space, B, basis, p, multistarts=16, seed=0, complex_field=True,
                  starts=()) -> NormResult:
    """``sup ||B f||_p / ||f||_p`` over ``f`` in the column span of ``basis``.

    For ``p != 2`` this is a multistart BFGS maximisation (a lower estimate);
    ``starts`` adds caller-supplied coefficient vectors, e.g. the optimum at a
    neighbouring parameter value.
    """
    B = np.asarray(B)
    V = np.asarray(basis)
    k = V.shape[1]
    if k == 0:
        return NormResult(0.0, np.zeros(space.n), "subspace")
    BV = B @ V
    if p == 2:
        # nu-orthonormalize the basis, then the restricted norm is a singular value.
        root = np.sqrt(space.nu)
        Qm, R = np.linalg.qr(root[:, None] * V)
        S = root[:, None] * (B @ (Qm / root[:, None]))
        sig = np.linalg.svd(S, compute_uv=True)
        U, s, Vh = sig
        return NormResult(float(s[0]), (Qm / root[:, None]) @ Vh[0].conj(), "subspace")
    rng = np.random.default_rng(seed)
    nu = space.nu

    def unpack(v):
        return v[:k] + 1j * v[k:] if complex_field else v

    def log_norm(W, c):
        # log ||W c||_p and its gradient in the real coordinates of c
        y = W @ c
        a = np.abs(y)
        S = float(nu @ a**p)
        if S <= 0:
            return -np.inf, np.zeros(2 * k if complex_field else k)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = nu * np.where(a > 0, a ** (p - 2), 0.0) * y
        h = W.conj().T @ z / S
        grad = np.concatenate([h.real, h.imag]) if complex_field else h.real
        return np.log(S) / p, grad

    def neg(v):
        c = unpack(v)
        top, g_top = log_norm(BV, c)
        bot, g_bot = log_norm(V, c)
        if not np.isfinite(bot) or not np.isfinite(top):
            return 0.0, np.zeros_like(v)
        return -(top - bot), -(g_top - g_bot)

    starts = list(starts) + [np.eye(k)[j] for j in range(k)]
    while len(starts) < multistarts:
        starts.append(rng.standard_normal(k) + (1j * rng.standard_normal(k) if complex_field else 0))
    best_v, best_c = -np.inf, None
    for c0 in starts:
        c0 = np.asarray(c0, dtype=complex if complex_field else float)
        v0 = np.concatenate([c0.real, c0.imag]) if complex_field else c0
        res = minimize(neg, v0, jac=True, method="BFGS", options={"gtol": 1e-12, "maxiter": 3000})
        if -res.fun > best_v:
            best_v, best_c = -res.fun, unpack(res.x)
    return NormResult(float(np.exp(best_v)), V @ best_c, "subspace")


def op_norm(space: WeightedSpace, B, p: float, request: Optional[NormRequest] = None) -> NormResult:
    """Operator norm of ``B`` on ``L^p(nu)`` with a witness vector.

    ``method='auto'`` uses closed forms for ``p in {1, 2, inf}`` (or the
    restricted search when ``subspace`` is given) and power iteration otherwise.
    """
    req = request or NormRequest(p)
    if req.p != p:
        req = NormRequest(p, req.method, req.multistarts, req.tol, req.max_iter, req.seed,
                          req.field, req.subspace)
    B = np.asarray(B)
    complex_field = {"auto": np.iscomplexobj(B), "real": False, "complex": True}[req.field]
    method = req.method
    if method == "auto":
        if req.subspace is not None:
            method = "subspace"
        elif p in (1, 2, np.inf):
            method = "exact"
        else:
            method = "power-iteration"
    if method == "exact":
        value, w = _exact(space, B, p)
        return NormResult(value, w, "exact")
    if method == "grid-oracle":
        return grid_oracle_norm(space, B, p)
    if method == "subspace":
        if req.subspace is None:
            raise DomainError("subspace method needs a basis")
        return subspace_norm(space, B, req.subspace, p, max(4, req.multistarts // 2), req.seed,
                             complex_field)
    # a non-converged result is still a valid lower bound; ``converged`` flags it.
    return power_iteration_norm(space, B, p, req.multistarts, req.tol, req.max_iter, req.seed,
                                complex_field)
