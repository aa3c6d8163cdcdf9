"""Heat-flow functional of the Bellman function and the inequalities it drives.

Along the complex times ``z = t e^{i phi}`` the functional

    E(t) = sum_i nu_i Q(T_z f_i, T_{conj z} g_i)

is nonincreasing for ``|phi| <= phi_{p_eps}``, and its decay dominates the
bilinear pairing ``|<A T_z f, T_{conj z} g>|``.  Integrating in ``t`` gives the
bilinear embedding; the Laplace-type and imaginary-power bounds follow by
subordination.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize, special

from .bellman import BellmanParams, eval_Q, grad_Q
from .calculus import laplace_type_multiplier
from .errors import DomainError
from .opnorms import lp_norm, pairing
from .quadrature import adaptive_gauss
from .semigroup import (Generator, WeightedSpace, apply_multiplier, check_contraction,
                        evolve_path, imaginary_power, projection_P0)

TAIL_REL = 1e-12
QUAD_REL = 1e-11


@dataclass
class FlowSetup:
    gen: Generator
    params: BellmanParams
    phi: float
    f: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        self.params.check_angle(self.phi)
        self.f = np.asarray(self.f, dtype=complex)
        self.g = np.asarray(self.g, dtype=complex)
        n = self.gen.n
        if self.f.shape != (n,) or self.g.shape != (n,):
            raise DomainError(f"f and g must be vectors of length {n}")
        if not (np.all(np.isfinite(self.f)) and np.all(np.isfinite(self.g))):
            raise DomainError("f and g must be finite")

    def trajectories(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < 0):
            raise DomainError("t must be nonnegative")
        rot = np.exp(1j * self.phi)
        u = evolve_path(self.gen, t * rot, self.f)
        v = evolve_path(self.gen, t * np.conj(rot), self.g)
        return u, v


def _scalar(x, t):
    return float(x[0]) if np.ndim(t) == 0 else x


def flow_E(setup: FlowSetup, t):
    """``E(t) = sum nu Q(T_{t e^{i phi}} f, T_{t e^{-i phi}} g)``."""
    u, v = setup.trajectories(t)
    return _scalar(eval_Q(setup.params, u, v) @ setup.gen.nu, t)


def _minus_derivative(setup: FlowSetup, t):
    u, v = setup.trajectories(t)
    A = setup.gen.matrix
    Au, Av = u @ A.T, v @ A.T
    dz, de = grad_Q(setup.params, u, v)
    rot = np.exp(1j * setup.phi)
    dens = 2.0 * np.real(rot * dz * Au + np.conj(rot) * de * Av)
    return dens @ setup.gen.nu, u, v, Au


def _rounding_scale(setup: FlowSetup, t):
    """``sum nu (|dQ| |A||u| + ...)``: size of the products whose cancellation gives ``E'``."""
    u, v = setup.trajectories(t)
    absA = np.abs(setup.gen.matrix)
    dz, de = grad_Q(setup.params, u, v)
    Au, Av = np.abs(u) @ absA.T, np.abs(v) @ absA.T
    dens = 2.0 * (np.abs(dz) * Au + np.abs(de) * Av)
    dens += 2.0 * setup.params.delta * Au * np.abs(v)
    return dens @ setup.gen.nu


def flow_E_derivative(setup: FlowSetup, t, with_scale: bool = False):
    """``E'(t)`` from the chain rule with the Wirtinger gradient of Q.

    With ``with_scale`` also returns the rounding scale of the sum, used for
    tolerances when the flow has nearly settled at large amplitude.
    """
    val, *_ = _minus_derivative(setup, t)
    if with_scale:
        return _scalar(-val, t), _scalar(_rounding_scale(setup, t), t)
    return _scalar(-val, t)


def _crosses(params, u_stack, v_stack):
    side = np.abs(u_stack) ** params.p - np.abs(v_stack) ** params.q
    sgn = np.sign(side)
    return np.any(sgn != sgn[:1], axis=0)


def flow_E_derivative_fd(setup: FlowSetup, t: float, h: Optional[float] = None):
    """Fourth-order centred difference of ``E``; ``None`` near an Upsilon_0 crossing.

    The stencil is skipped when some coordinate changes side of
    ``|zeta|^p = |eta|^q`` inside ``[t - 2h, t + 2h]``, where Q is only C^1.
    """
    if h is None:
        h = 1e-3 * min(t, 1.0 / max(setup.gen.eigenvalues.max(), 1e-12))
    if t - 2 * h < 0:
        raise DomainError("stencil leaves t >= 0; choose a smaller h")
    ts = t + h * np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    u, v = setup.trajectories(ts)
    dense = t + np.linspace(-2 * h, 2 * h, 41)
    ud, vd = setup.trajectories(dense)
    if np.any(_crosses(setup.params, ud, vd)):
        return None
    E = eval_Q(setup.params, u, v) @ setup.gen.nu
    return float((E[0] - 8 * E[1] + 8 * E[3] - E[4]) / (12 * h))


@dataclass
class DerivativeCheck:
    analytic: float
    finite_difference: Optional[float]
    allowance: float

    @property
    def ok(self) -> Optional[bool]:
        if self.finite_difference is None:
            return None
        return abs(self.analytic - self.finite_difference) <= self.allowance


def derivative_check(setup: FlowSetup, t: float, rtol: float = 1e-6,
                     h: Optional[float] = None) -> DerivativeCheck:
    """Compare the chain-rule ``E'`` with the difference quotient.

    The allowance is ``rtol |E'|`` plus the cancellation floor of the
    stencil, ``~ 1e3 eps sum nu |Q| / h``, which dominates once the flow has
    nearly settled.
    """
    if h is None:
        h = 1e-3 * min(t, 1.0 / max(setup.gen.eigenvalues.max(), 1e-12))
    an = float(flow_E_derivative(setup, t))
    fd = flow_E_derivative_fd(setup, t, h)
    u, v = setup.trajectories(t)
    mass = float((np.abs(eval_Q(setup.params, u, v)) @ setup.gen.nu)[0])
    floor = 1e3 * np.finfo(float).eps * mass / h
    return DerivativeCheck(an, fd, rtol * abs(an) + floor)


def pairing_curve(gen: Generator, phi: float, f, g, t, route: str = "spectral"):
    """``<A T_{t e^{i phi}} f, T_{t e^{-i phi}} g>_nu`` for an array of ``t``.

    ``route="spectral"`` sums ``lam_k e^{-2 t e^{i phi} lam_k} f_k conj(g_k)``;
    ``route="evolve"`` propagates both vectors and pairs them.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if route == "spectral":
        a = gen.coefficients(np.asarray(f, dtype=complex))
        b = gen.coefficients(np.asarray(g, dtype=complex))
        w = gen.eigenvalues * a * np.conj(b)
        return np.exp(-2.0 * np.exp(1j * phi) * np.outer(t, gen.eigenvalues)) @ w
    if route == "evolve":
        u = evolve_path(gen, t * np.exp(1j * phi), f)
        v = evolve_path(gen, t * np.exp(-1j * phi), g)
        return (u @ gen.matrix.T * np.conj(v)) @ gen.nu
    raise DomainError(f"unknown route {route!r}")


def monotonicity_gap(setup: FlowSetup, t, with_scale: bool = False):
    """``-E'(t) - 2 delta cos(phi) |<A T_z f, T_{conj z} g>|`` (optionally with its rounding scale)."""
    val, u, v, Au = _minus_derivative(setup, t)
    pair = (Au * np.conj(v)) @ setup.gen.nu
    gap = val - 2.0 * setup.params.delta * np.cos(setup.phi) * np.abs(pair)
    if with_scale:
        return _scalar(gap, t), _scalar(_rounding_scale(setup, t), t)
    return _scalar(gap, t)


# ------------------------------------------------------- contour integral

@dataclass
class ContourQuadrature:
    """Panels on ``[0, T_max]`` and the analytic tail bound beyond ``T_max``.

    With ``a, b`` the coefficients of ``f, g`` in a nu-orthonormal
    eigenbasis, ``|<A T_z f, T_{conj z} g>| <= sum lam_k |a_k b_k|
    e^{-2 lam_k t cos phi}``, so the remainder past ``T`` is at most
    ``tail(T) = 2 sum |a_k b_k| e^{-2 lam_k T cos phi} / (2 cos phi)``
    (a safety factor 2 is kept).
    """

    edges: np.ndarray
    T_max: float
    tail: float
    tol: float = QUAD_REL
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lam: np.ndarray = field(default_factory=lambda: np.zeros(0))
    cos_phi: float = 1.0

    def tail_at(self, T: float) -> float:
        if self.weights.size == 0:
            return 0.0
        return float(np.sum(self.weights * np.exp(-2.0 * self.lam * T * self.cos_phi))
                     / self.cos_phi)

    def horizon(self, target: float) -> float:
        """Smallest ``T >= T_max`` (up to doubling of the log gap) with ``tail(T) <= target``."""
        T = self.T_max
        rate = 2.0 * self.lam.min() * self.cos_phi
        for _ in range(50):
            tail = self.tail_at(T)
            if tail <= target:
                return T
            T += max(np.log(tail / target) / rate, 1e-3 * T)
        return T

    @classmethod
    def build(cls, gen: Generator, phi: float, f, g, tail_rel: float = TAIL_REL,
              tol: float = QUAD_REL, T_max: Optional[float] = None) -> "ContourQuadrature":
        a = gen.coefficients(np.asarray(f, dtype=complex))
        b = gen.coefficients(np.asarray(g, dtype=complex))
        pos = gen.eigenvalues > 0
        w = np.abs(a * b)[pos]
        lam = gen.eigenvalues[pos]
        keep = w > 0
        w, lam = w[keep], lam[keep]
        if w.size == 0:
            return cls(np.array([0.0, 1.0]), 1.0, 0.0, tol)
        quad = cls(np.array([0.0, 1.0]), 0.0, 0.0, tol, w, lam, float(np.cos(phi)))
        if T_max is None:
            T_max = max(quad.horizon(tail_rel * quad.tail_at(0.0)), 1e-12)
        lam_max = float(lam.max())
        start = 0.02 / lam_max
        if start < T_max:
            inner = np.geomspace(start, T_max, max(2, int(np.ceil(2 * np.log2(T_max / start)))))
            edges = np.concatenate([[0.0], inner])
        else:
            edges = np.array([0.0, T_max])
        quad.edges, quad.T_max, quad.tail = edges, float(T_max), quad.tail_at(T_max)
        return quad

    def integrate(self, fun, lo: float = 0.0, hi: Optional[float] = None):
        hi = self.T_max if hi is None else hi
        if lo == 0.0 and hi == self.T_max:
            interior = self.edges[1:-1]
        else:
            interior = np.geomspace(max(lo, 1e-300), hi, 9)[1:-1] if lo > 0 else 8
        return adaptive_gauss(fun, lo, hi, tol=0.0, rel=self.tol, order=10, initial=interior)


@dataclass
class BilinearResult:
    value: float
    quadrature_error: float
    tail: float
    T_max: float
    converged: bool


def bilinear_integral(setup: FlowSetup, quadrature: Optional[ContourQuadrature] = None, *,
                      tail_tol: float = 1e-10, route: str = "spectral", detail: bool = False):
    """``int_0^inf |<A T_{t e^{i phi}} f, T_{t e^{-i phi}} g>| dt`` (the arc length of the ray is ``dt``).

    The remainder past ``T_max`` is bounded by the spectral decay and
    reported as ``tail``.  When that bound exceeds ``tail_tol`` relative to
    the computed value the horizon is pushed out (a few times at most);
    ``converged`` records whether the final tail meets the tolerance.
    """
    gen = setup.gen
    quad = quadrature or ContourQuadrature.build(gen, setup.phi, setup.f, setup.g)
    if quad.weights.size == 0:
        res = BilinearResult(0.0, 0.0, 0.0, quad.T_max, True)
        return res if detail else 0.0

    def fun(t):
        return np.abs(pairing_curve(gen, setup.phi, setup.f, setup.g, t, route))

    out = quad.integrate(fun)
    value, err, T, tail = float(out.value), float(out.error), quad.T_max, quad.tail
    for _ in range(4):
        if tail <= tail_tol * value:
            break
        # aim well inside the tolerance so the added piece does not need another pass
        T_new = quad.horizon(0.01 * tail_tol * max(value, 1e-300))
        extra = quad.integrate(fun, T, T_new)
        value, err, T, tail = value + float(extra.value), err + float(extra.error), T_new, quad.tail_at(T_new)
    res = BilinearResult(value, err, tail, T, bool(tail <= tail_tol * value))
    return res if detail else value


def two_point_closed_form(gen: Generator, phi: float, f, g) -> float:
    """Bilinear integral on the two-point space: ``|<G Df, Dg>| / (4 cos phi)``."""
    lam = gen.eigenvalues[~gen.zero_mask]
    if gen.n != 2 or lam.size != 1 or not np.isclose(lam[0], 2.0):
        raise DomainError("closed form holds for the symmetric two-point generator")
    df = np.asarray(f, dtype=complex) - projection_P0(gen, f)
    dg = np.asarray(g, dtype=complex) - projection_P0(gen, g)
    return float(abs(pairing(gen.space, gen.matrix @ df, dg)) / (4.0 * np.cos(phi)))


def bilinear_bound(params: BellmanParams, phi: float) -> float:
    return 30.0 * (params.p - 1.0) / (params.epsilon * np.cos(phi))


# ------------------------------------------------------------ scaling

def embedding_constant(p: float, A0: float, B0: float) -> float:
    """``C(phi, p) = q (p-1)^{1/p} A0 / B0``."""
    q = p / (p - 1.0)
    return q * (p - 1.0) ** (1.0 / p) * A0 / B0


def scaling_minimum(p: float, A0: float, B0: float, norm_f: float, norm_g: float) -> float:
    """``min_lam A0 (lam^p a^p + lam^{-q} b^q) / B0`` by scalar minimisation."""
    q = p / (p - 1.0)
    a, b = norm_f**p, norm_g**q

    def obj(loglam):
        return A0 * (np.exp(p * loglam) * a + np.exp(-q * loglam) * b) / B0

    guess = np.log(q * b / (p * a)) / (p + q)
    res = optimize.minimize_scalar(obj, bracket=(guess - 1.0, guess + 1.0),
                                   options={"xtol": 1e-14})
    return float(res.fun)


# ------------------------------------------------ contraction inequality

def prop_p4_gap(space: WeightedSpace, T, params: BellmanParams, phi: float, f, g,
                validate: bool = True):
    """``2Re sum nu [e^{i phi} dQ_zeta (I-T)f + e^{-i phi} dQ_eta (I-T)g] - 2 delta cos(phi) |<(I-T)f, g>|``.

    Raises
    ------
    DomainError
        If ``T`` is not a nu-self-adjoint contraction of L^1 and L^inf.
    """
    params.check_angle(phi)
    T = np.asarray(T)
    if validate:
        check_contraction(space, T)
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    Df, Dg = f - T @ f, g - T @ g
    dz, de = grad_Q(params, f, g)
    rot = np.exp(1j * phi)
    rhs = 2.0 * np.real(rot * dz * Df + np.conj(rot) * de * Dg) @ space.nu
    lhs = 2.0 * params.delta * np.cos(phi) * abs(np.sum(space.nu * Df * np.conj(g)))
    return float(rhs - lhs)


# ---------------------------------------------------- Laplace-type bound

@dataclass(frozen=True)
class PiecewiseConstant:
    """``M(t) = values[j]`` for ``breaks[j-1] <= t < breaks[j]`` (``breaks[-1] = inf``)."""

    breaks: tuple
    values: tuple

    def __post_init__(self):
        if len(self.values) != len(self.breaks) + 1:
            raise DomainError("need one more value than breakpoints")
        if any(b <= 0 for b in self.breaks) or list(self.breaks) != sorted(self.breaks):
            raise DomainError("breakpoints must be positive and increasing")

    def __call__(self, t):
        idx = np.searchsorted(np.asarray(self.breaks), np.asarray(t), side="right")
        return np.asarray(self.values, dtype=complex)[idx]

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def laplace(self, lam):
        """Closed form of ``lam int M e^{-t lam} dt``."""
        lam = np.asarray(lam, dtype=float)
        edges = np.concatenate([[0.0], self.breaks, [np.inf]])
        out = np.zeros(lam.shape, dtype=complex)
        for j, c in enumerate(self.values):
            out += c * (np.exp(-lam * edges[j]) - np.exp(-lam * edges[j + 1]))
        return out


def random_piecewise_constant(rng, pieces: int = 4, scale: float = 1.0) -> PiecewiseConstant:
    breaks = np.sort(np.exp(rng.uniform(np.log(0.05), np.log(20.0), pieces - 1)))
    vals = scale * (rng.uniform(-1, 1, pieces) + 1j * rng.uniform(-1, 1, pieces))
    return PiecewiseConstant(tuple(breaks), tuple(vals))


def laplace_transform_bound_check(gen: Generator, M, p: float, f, *, M_sup: Optional[float] = None,
                                  breakpoints: Sequence[float] = ()) -> float:
    """``120 (p*-1) ||M||_inf ||f||_p - ||M~(A) f||_p`` for ``f`` in the range of ``A``."""
    f = np.asarray(f, dtype=complex)
    if np.linalg.norm(projection_P0(gen, f)) > 1e-10 * max(np.linalg.norm(f), 1e-300):
        raise DomainError("f must lie in the range of A")
    if isinstance(M, PiecewiseConstant):
        breakpoints = M.breaks
        M_sup = M.sup if M_sup is None else M_sup
    if M_sup is None:
        grid = np.geomspace(1e-8, 1e8, 4001)
        M_sup = float(np.max(np.abs(np.asarray(M(grid)))))
    pstar = max(p, p / (p - 1.0))
    spec = laplace_type_multiplier(M, breakpoints)
    lhs = lp_norm(gen.space, apply_multiplier(gen, spec, f), p)
    return float(120.0 * (pstar - 1.0) * M_sup * lp_norm(gen.space, f, p) - lhs)


# --------------------------------------------------------- subordination

def _ray_transfer(gen: Generator, M: Callable, theta: float, tol: float = 1e-12,
                  y_lo: float = -50.0):
    """``2 e^{i theta} int_0^inf lam e^{-2 z lam} M(2z) dt`` per eigenvalue, ``z = t e^{i theta}``.

    Integrated in ``y = log t`` so oscillations of ``M`` near ``t = 0`` stay
    uniform.  Zero eigenvalues map to zero.  When ``|M|`` on the ray is far
    larger than the result (imaginary powers with large ``|s|``) cancellation
    makes the required accuracy unreachable and :class:`ConvergenceError` is
    raised.
    """
    lam = gen.eigenvalues
    pos = lam > 0
    out = np.zeros(lam.shape, dtype=complex)
    if not np.any(pos):
        return out
    lp = lam[pos]
    rot = np.exp(1j * theta)
    rate = 2.0 * np.cos(theta) * lp.min()
    y_hi = np.log(40.0 / rate)

    def fun(y):
        t = np.exp(y)
        z = t * rot
        return 2.0 * rot * (t[:, None] * lp[None, :] * np.exp(-2.0 * np.outer(z, lp))
                            * np.asarray(M(2.0 * z), dtype=complex)[:, None])

    width = max(8, int(np.ceil((y_hi - y_lo) / 1.0)))
    res = adaptive_gauss(fun, y_lo, y_hi, tol=tol, rel=tol, order=12, initial=width)
    out[pos] = res.value
    return out


def subordination_pairing(gen: Generator, M: Callable, f, g, theta: float, tol: float = 1e-12):
    """``2 int_{gamma_theta} <A T_z f, T_{conj z} g> M(2z) dz`` along ``z = t e^{i theta}``."""
    if not abs(theta) < np.pi / 2:
        raise DomainError("theta must satisfy |theta| < pi/2")
    values = _ray_transfer(gen, M, theta, tol)
    a = gen.coefficients(np.asarray(f, dtype=complex))
    b = gen.coefficients(np.asarray(g, dtype=complex))
    return complex(np.sum(values * a * np.conj(b)))


def imaginary_power_kernel(s: float):
    """``M_s(w) = w^{-is} / Gamma(1 - is)`` on the principal branch."""
    c = 1.0 / special.gamma(1.0 - 1j * s)
    return lambda w: c * np.exp(-1j * s * np.log(w))


def subordinated_imaginary_power(gen: Generator, s: float, f, theta: Optional[float] = None,
                                 phi: float = 0.0):
    """``A^{is} f`` rebuilt on the ray ``theta = -phi sign(s)``."""
    if theta is None:
        theta = -phi * np.sign(s)
    values = _ray_transfer(gen, imaginary_power_kernel(s), theta, tol=1e-10)
    return gen.apply_values(values, f)


def imaginary_power_shape(gen: Generator, r: float, s_values, fs, params_eps: float,
                          phi: float) -> np.ndarray:
    """Ratios ``||A^{is} f||_r / (||f||_r e^{phi*_r|s|} (1+|s|)^{-1/2}) / ((r-1)/(eps cos phi))``.

    ``fs`` is a stack of test vectors (rows), each projected onto the range.
    Returns the maximum over rows for each ``s``.
    """
    from .bellman import phi_star_angle
    rr = max(r, r / (r - 1.0))
    phistar = phi_star_angle(r)
    ref = (rr - 1.0) / (params_eps * np.cos(phi))
    fs = np.atleast_2d(np.asarray(fs, dtype=complex))
    fs = np.array([f - projection_P0(gen, f) for f in fs])
    out = []
    for s in np.atleast_1d(s_values):
        growth = np.exp(phistar * abs(s)) * (1.0 + abs(s)) ** -0.5
        best = 0.0
        for f in fs:
            nf = lp_norm(gen.space, f, r)
            if nf == 0:
                continue
            best = max(best, lp_norm(gen.space, imaginary_power(gen, float(s), f), r) / nf)
        out.append(best / (growth * ref))
    return np.asarray(out)
