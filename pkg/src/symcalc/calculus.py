"""Hörmander norms, Mellin transforms and the Meda representation of m(A).

The representation rebuilds a spectral multiplier from imaginary powers,

    m(A) f = 2^tau / (pi Gamma(tau + 1)) * int  M~_s(A) A^{is} f  ds,

where ``M~_s`` is the Laplace-type multiplier generated by the Mellin
transform ``t -> [M_s m_tau](t)`` of ``m_tau(t, lam) = (t lam)^tau e^{-t lam} m(lam)``.
Everything here works on the log scale, where both transforms are smooth
integrals over the whole line.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy import optimize, special

from .errors import ConvergenceError, DomainError
from .opnorms import lp_norm, subspace_norm
from .quadrature import panel_rule, uniform_panels
from .semigroup import (Generator, MultiplierSpec, imaginary_power_matrix,
                        projection_P0)

# log-scale extent of the kernels u e^{-u} and u^tau e^{-u}
_LOG_HI = 4.5
_LOG_LO = -40.0
_MELLIN_FLOOR = 1e-16
_PANEL = 0.25
_ORDER = 16


# ------------------------------------------------------------------ bump

def _smoothstep(x):
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def _smoothstep_derivative(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x < 1)
    xs = np.where(inside, x, 0.5)
    a, b = np.exp(-1.0 / xs), np.exp(-1.0 / (1.0 - xs))
    d = a * b * (1.0 / xs**2 + 1.0 / (1.0 - xs) ** 2) / (a + b) ** 2
    return np.where(inside, d, 0.0)


def psi(t):
    """Smooth cutoff: 0 outside (1/4, 4), 1 on [1/2, 2]."""
    t = np.asarray(t, dtype=float)
    rise = _smoothstep((t - 0.25) / 0.25)
    fall = _smoothstep((4.0 - t) / 2.0)
    return np.where(t <= 2.0, rise, fall)


def psi_derivative(t):
    t = np.asarray(t, dtype=float)
    rise = _smoothstep_derivative((t - 0.25) / 0.25) / 0.25
    fall = -_smoothstep_derivative((4.0 - t) / 2.0) / 2.0
    return np.where(t <= 2.0, rise, fall)


# -------------------------------------------------------------- Hörmander

@dataclass(frozen=True)
class HormanderConfig:
    """Discretisation of ``sup_R ||psi m(e^{+-i phi} R .)||_{H^J}``.

    Samples live on ``[0, 4 * padding)`` with ``fft_size`` points; the bump
    support sits in ``(1/4, 4)`` so ``padding >= 1`` keeps it whole.
    """

    J: float = 2.0
    R_min: float = 1e-2
    R_max: float = 1e2
    R_points: int = 64
    fft_size: int = 4096
    padding: int = 2
    refine: bool = True
    check_tol: float = 1e-4

    def __post_init__(self):
        if not self.J > 0:
            raise DomainError("Sobolev order J must be positive")
        if not 0 < self.R_min < self.R_max:
            raise DomainError("need 0 < R_min < R_max")
        if self.padding < 1 or self.fft_size < 64 or self.R_points < 2:
            raise DomainError("padding >= 1, fft_size >= 64, R_points >= 2 required")

    @property
    def R_grid(self) -> np.ndarray:
        return np.geomspace(self.R_min, self.R_max, self.R_points)

    @classmethod
    def for_spectrum(cls, lam_min: float, lam_max: float, **kw) -> "HormanderConfig":
        """Scales relevant to a spectrum in ``[lam_min, lam_max]``."""
        return cls(R_min=lam_min / 4.0, R_max=4.0 * lam_max, **kw)

    def with_(self, **kw) -> "HormanderConfig":
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update(kw)
        return HormanderConfig(**values)


def _sobolev_norms(samples: np.ndarray, length: float, J: float) -> np.ndarray:
    """H^J norms of sampled compactly supported functions (rows of ``samples``)."""
    N = samples.shape[-1]
    G = np.fft.fft(samples, axis=-1)
    freq = 2.0 * np.pi * np.fft.fftfreq(N, d=length / N)
    weight = (1.0 + freq**2) ** J
    h = length / N
    return np.sqrt(h * h / length * np.sum(weight * np.abs(G) ** 2, axis=-1))


def bump_sobolev_norm(J: float, fft_size: int = 1 << 16, padding: int = 2) -> float:
    """``||psi||_{H^J}`` from a high resolution FFT."""
    L = 4.0 * padding
    x = np.arange(fft_size) * (L / fft_size)
    return float(_sobolev_norms(psi(x)[None, :], L, J)[0])


def _ray_norms(m: MultiplierSpec, phi: float, R: np.ndarray, cfg: HormanderConfig, N: int):
    L = 4.0 * cfg.padding
    x = np.arange(N) * (L / N)
    w = psi(x)
    support = w > 0
    out = []
    for sign in (1.0, -1.0):
        z = np.exp(1j * sign * phi) * np.outer(R, x[support])
        samples = np.zeros((len(R), N), dtype=complex)
        samples[:, support] = w[support] * m(z)
        out.append(_sobolev_norms(samples, L, cfg.J))
    return out


def _ray_sup(m, phi, cfg, N):
    R = cfg.R_grid
    sups, args = [], []
    for norms in _ray_norms(m, phi, R, cfg, N):
        k = int(np.argmax(norms))
        best, arg = float(norms[k]), float(R[k])
        if cfg.refine and np.isfinite(best):
            lo = np.log(R[max(k - 1, 0)])
            hi = np.log(R[min(k + 1, len(R) - 1)])
            sign = 1.0 if len(sups) == 0 else -1.0
            if hi > lo:
                def neg(logr, sign=sign):
                    vals = _ray_norms(m, phi, np.array([np.exp(logr)]), cfg, N)
                    return -float(vals[0 if sign > 0 else 1][0])
                res = optimize.minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                                               options={"xatol": 1e-6})
                if -res.fun > best:
                    best, arg = float(-res.fun), float(np.exp(res.x))
        sups.append(best)
        args.append(arg)
    return sups, args


@dataclass
class HormanderResult:
    value: float
    plus: float
    minus: float
    argmax: tuple
    relative_change: float


def hormander_norm(m: MultiplierSpec, phi: float, config: Optional[HormanderConfig] = None,
                   *, detail: bool = False):
    """``sup_R ||psi m(e^{i phi}R.)||_{H^J} + sup_R ||psi m(e^{-i phi}R.)||_{H^J}``.

    Raises
    ------
    ConvergenceError
        If doubling ``fft_size`` moves either supremum by more than
        ``config.check_tol`` (relative).
    """
    cfg = config or HormanderConfig()
    if not 0 <= abs(phi) < np.pi / 2:
        raise DomainError("phi must lie in [0, pi/2)")
    (plus, minus), args = _ray_sup(m, phi, cfg, cfg.fft_size)
    # resolution check at the maximising scales
    fine = []
    for sign_idx, R in enumerate(args):
        fine.append(float(_ray_norms(m, phi, np.array([R]), cfg, 2 * cfg.fft_size)[sign_idx][0]))
    coarse = [float(_ray_norms(m, phi, np.array([R]), cfg, cfg.fft_size)[i][0])
              for i, R in enumerate(args)]
    change = max(abs(f - c) / max(abs(f), 1e-300) for f, c in zip(fine, coarse))
    if change > cfg.check_tol:
        raise ConvergenceError(f"H^J norm not resolved (relative change {change:.2e})",
                               best=plus + minus)
    res = HormanderResult(plus + minus, plus, minus, tuple(args), change)
    return res if detail else res.value


# ----------------------------------------------------------------- Mellin

@dataclass(frozen=True)
class MellinGrid:
    """Log-spectral quadrature ``x = log(lam)`` for ``t`` in ``[t_min, t_max]``.

    ``weights`` absorb nothing beyond the Gauss weights; the kernel
    ``(t lam)^tau e^{-t lam}`` is formed separately so one grid serves many
    multipliers and many ``t``.
    """

    tau: float
    t_min: float
    t_max: float
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    bounds: tuple = ()

    @classmethod
    def build(cls, tau: float, t_min: float, t_max: float, panel: float = _PANEL,
              order: int = _ORDER) -> "MellinGrid":
        if not 0 < tau < 1:
            raise DomainError("tau must lie in (0, 1)")
        if not 0 < t_min <= t_max:
            raise DomainError("need 0 < t_min <= t_max")
        # u^tau is below the floor (after integration) once log u < lo
        lo = np.log(tau * _MELLIN_FLOOR) / tau - np.log(t_max)
        hi = _LOG_HI + np.log(np.log(1.0 / _MELLIN_FLOOR)) - np.log(t_min)
        x, w = panel_rule(uniform_panels(lo, hi, panel), order)
        return cls(tau, t_min, t_max, x, w, (lo, hi))

    @property
    def lam(self) -> np.ndarray:
        return np.exp(self.nodes)

    def kernel(self, t) -> np.ndarray:
        """Rows ``(t lam)^tau e^{-t lam} w`` for each ``t``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        logu = np.log(t)[:, None] + self.nodes[None, :]
        with np.errstate(over="ignore", under="ignore"):
            return np.exp(self.tau * logu - np.exp(logu)) * self.weights[None, :]

    def transform(self, m, s: float, t) -> np.ndarray:
        vals = _as_values(m, self.lam)
        phase = np.exp(-1j * s * self.nodes)
        return self.kernel(t) @ (vals * phase)


def _as_values(m, lam):
    if isinstance(m, (int, float, complex, np.number)):
        return np.full(lam.shape, complex(m))
    return np.asarray(m(lam), dtype=complex)


def mellin_m_tau(m, tau: float, s: float, t, *, grid: Optional[MellinGrid] = None,
                 check: bool = True, rtol: float = 1e-10):
    """``[M_s m_tau](t) = int_0^inf (t lam)^tau e^{-t lam} m(lam) lam^{-is} dlam/lam``.

    ``m`` may be a constant or any callable on positive arrays.  With
    ``check`` the value is recomputed on a grid of half the panel width and a
    disagreement above ``rtol`` (relative to the kernel mass) raises
    :class:`ConvergenceError`.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr <= 0):
        raise DomainError("t must be positive")
    if grid is None:
        grid = MellinGrid.build(tau, float(t_arr.min()), float(t_arr.max()))
    value = grid.transform(m, s, t_arr)
    if check:
        fine = MellinGrid.build(grid.tau, grid.t_min, grid.t_max, panel=_PANEL / 2)
        ref = fine.transform(m, s, t_arr)
        sup_m = float(np.max(np.abs(_as_values(m, fine.lam))))
        scale = special.gamma(grid.tau) * max(sup_m, 1e-300)
        err = float(np.max(np.abs(ref - value)))
        if err > rtol * scale:
            raise ConvergenceError(f"Mellin quadrature unresolved (error {err:.2e})",
                                   best=ref)
    return value[0] if np.ndim(t) == 0 else value


# ----------------------------------------------------------- Laplace type

def _laplace_rule(lam: float, breakpoints=()):
    """Nodes ``t`` and weights for ``lam int_0^inf F(t) e^{-t lam} dt``."""
    cuts = [np.log(lam * b) for b in breakpoints if b > 0]
    u, w = panel_rule(uniform_panels(_LOG_LO, _LOG_HI + 2.0, _PANEL, cuts), _ORDER)
    eu = np.exp(u)
    return eu / lam, w * eu * np.exp(-eu)


def laplace_type_multiplier(M: Callable, breakpoints: Sequence[float] = (),
                            name: str = "laplace", check: bool = True) -> MultiplierSpec:
    """``M~(lam) = lam int_0^inf M(t) e^{-t lam} dt`` for bounded ``M``.

    ``breakpoints`` lists jump locations of ``M`` so the panels split there.
    Only positive real ``lam`` are supported; ``M~(0) = 0``.
    """
    bps = tuple(float(b) for b in breakpoints)

    def evaluate(lam):
        lam = np.asarray(lam)
        if np.iscomplexobj(lam) and np.any(np.abs(lam.imag) > 0):
            raise DomainError("Laplace-type multipliers are evaluated on the positive axis")
        lam = np.real(lam).astype(float)
        if np.any(lam <= 0):
            raise DomainError("spectral points must be positive")
        out = np.empty(lam.shape, dtype=complex)
        for idx, l in np.ndenumerate(lam):
            t, w = _laplace_rule(float(l), bps)
            vals = np.asarray(M(t), dtype=complex)
            if check and not np.all(np.isfinite(vals)):
                raise ConvergenceError("non-finite values of M on the quadrature grid")
            out[idx] = w @ vals
        return out

    return MultiplierSpec(evaluate, 0.0, name)


# --------------------------------------------------- representation formula

def representation_prefactor(tau: float) -> float:
    return float(2.0**tau / (np.pi * special.gamma(tau + 1.0)))


class _MedaKernel:
    """Precomputed ``lam_k -> h_s(lam_k)`` for all ``s`` at once.

    ``h_s(lam) = lam int_0^inf [M_s m_tau](t) e^{-t lam} dt`` becomes
    ``G @ (m(mu) mu^{-is} w)`` with ``G`` the product of the Laplace rule
    and the Mellin kernel on a shared log-``t`` grid.
    """

    def __init__(self, lam: np.ndarray, m, tau: float, chunk: int = 256):
        lam = np.asarray(lam, dtype=float)
        self.lam, self.tau = lam, tau
        t_lo = np.exp(_LOG_LO) / lam.max()
        t_hi = np.exp(_LOG_HI + 2.0) / lam.min()
        logt, wt = panel_rule(uniform_panels(np.log(t_lo), np.log(t_hi), _PANEL), _ORDER)
        t = np.exp(logt)
        # Laplace rule in log t: lam t e^{-lam t} dlog t
        lt = lam[:, None] * t[None, :]
        laplace = wt[None, :] * lt * np.exp(-lt)
        grid = MellinGrid.build(tau, float(t.min()), float(t.max()))
        self.grid, self.t = grid, t
        self.G = np.zeros((lam.size, grid.nodes.size))
        for i in range(0, t.size, chunk):
            self.G += laplace[:, i:i + chunk] @ grid.kernel(t[i:i + chunk])
        self.values = _as_values(m, grid.lam) * 1.0

    def h(self, s: np.ndarray) -> np.ndarray:
        """``h_s(lam_k)`` with shape ``(len(s), n_lam)``."""
        s = np.atleast_1d(s)
        phase = np.exp(-1j * np.outer(s, self.grid.nodes)) * self.values[None, :]
        return phase @ self.G.T

    def integrand(self, s: np.ndarray) -> np.ndarray:
        s = np.atleast_1d(s)
        lam_is = np.exp(1j * np.outer(s, np.log(self.lam)))
        return self.h(s) * lam_is


@dataclass
class Reconstruction:
    vector: np.ndarray
    values: np.ndarray
    s_max: float
    tail: float
    converged: bool
    tol: float


def _integrate_s(kernel: _MedaKernel, s_max: Optional[float], tol: float, chunk: float = 2.0,
                 order: int = 24, limit: float = 400.0):
    """Symmetric outward integration in ``s`` with a geometric tail estimate."""
    x, w = np.polynomial.legendre.leggauss(order)

    def piece(a, b):
        nodes = 0.5 * (a + b) + 0.5 * (b - a) * x
        return 0.5 * (b - a) * (w @ kernel.integrand(nodes))

    total = np.zeros(kernel.lam.size, dtype=complex)
    contributions = []
    edge = 0.0
    while True:
        nxt = edge + chunk if s_max is None else min(edge + chunk, s_max)
        c = piece(edge, nxt) + piece(-nxt, -edge)
        total += c
        contributions.append(float(np.max(np.abs(c))))
        edge = nxt
        tail = _tail_estimate(contributions)
        ref = float(np.max(np.abs(total)))
        if s_max is not None:
            if edge >= s_max:
                break
        elif len(contributions) >= 3 and tail <= tol * max(ref, 1e-300):
            break
        if edge >= limit:
            break
    return total, edge, tail


def _tail_estimate(contributions):
    if len(contributions) < 2:
        return np.inf
    a, b = contributions[-2], contributions[-1]
    if b == 0.0:
        return 0.0
    r = b / a if a > 0 else 1.0
    if r >= 1.0:
        return np.inf
    return b * r / (1.0 - r)


def meda_reconstruct(gen: Generator, m, tau: float = 0.5, s_max: Optional[float] = None,
                     f=None, *, tol: float = 1e-8, detail: bool = False):
    """Rebuild ``m(A) f`` from imaginary powers of ``A``.

    Parameters
    ----------
    gen : Generator
    m : callable or MultiplierSpec
        Evaluated on positive reals only.
    tau : float
        In ``(0, 1)``.
    s_max : float, optional
        Truncation of the ``s`` integral; chosen adaptively when omitted
        (stop once the extrapolated tail is below ``tol`` of the total).
    f : array
        Must lie in the range of ``A``.

    Raises
    ------
    ConvergenceError
        When the tail estimate at ``s_max`` exceeds ``tol``.
    """
    if not 0 < tau < 1:
        raise DomainError("tau must lie in (0, 1)")
    f = np.asarray(f)
    p0 = projection_P0(gen, f)
    if np.linalg.norm(p0) > 1e-10 * max(np.linalg.norm(f), 1e-300):
        raise DomainError("f must lie in the range of A (apply I - P0 first)")
    pos = ~gen.zero_mask
    values = np.zeros(gen.n, dtype=complex)
    if not np.any(pos):
        return np.zeros_like(f, dtype=complex)
    kernel = _MedaKernel(gen.eigenvalues[pos], m, tau)
    total, edge, tail = _integrate_s(kernel, s_max, tol)
    values[pos] = representation_prefactor(tau) * total
    ref = float(np.max(np.abs(values)))
    converged = tail <= tol * max(ref, 1e-300) or ref == 0.0
    vec = gen.apply_values(values, f)
    if not converged and not detail:
        raise ConvergenceError(f"s-tail estimate {tail:.2e} above tolerance at s_max={edge}",
                               best=vec)
    out = Reconstruction(vec, values, edge, float(tail), bool(converged), tol)
    return out if detail else vec


# ------------------------------------------------------------ Meda constant

@dataclass
class MedaConstant:
    value: float
    tau: float
    by_tau: dict
    s: np.ndarray
    mellin_sup: np.ndarray
    power_norms: np.ndarray
    J: float


def mellin_sup(m, tau: float, s: np.ndarray, t_grid: Optional[np.ndarray] = None) -> np.ndarray:
    """``sup_t |[M_s m_tau](t)|`` over a log grid in ``t`` for each ``s``."""
    t_grid = np.geomspace(1e-4, 1e4, 161) if t_grid is None else np.asarray(t_grid)
    grid = MellinGrid.build(tau, float(t_grid.min()), float(t_grid.max()))
    K = grid.kernel(t_grid)
    vals = _as_values(m, grid.lam)
    phase = np.exp(-1j * np.outer(grid.nodes, s)) * vals[:, None]
    return np.max(np.abs(K @ phase), axis=0)


def imaginary_power_norms(gen: Generator, p: float, s: np.ndarray, seed: int = 0,
                          multistarts: int = 8) -> np.ndarray:
    """``||A^{is}||`` on ``L^p`` restricted to the range of ``A``."""
    basis = gen.range_basis()
    out = []
    for k, sk in enumerate(s):
        B = imaginary_power_matrix(gen, float(sk))
        if p == 2:
            out.append(1.0 if basis.shape[1] else 0.0)
            continue
        res = subspace_norm(gen.space, B, basis, p, multistarts=multistarts, seed=seed + k)
        out.append(res.value)
    return np.asarray(out)


def meda_constant(gen: Generator, m, p: float, J: float = 2.0,
                  tau: Iterable[float] = (0.25, 0.5, 0.75), s_max: float = 30.0,
                  s_points: int = 121, *, detail: bool = False, seed: int = 0):
    """Computable bound ``C1`` with ``||m(A) f||_p <= C1 ||f||_p`` on the range.

    ``C1 = inf_tau 2^tau/(pi Gamma(tau+1)) * 120(p*-1) *
    int sup_t|M_s m_tau(t)| ||A^{is}||_{p} ds`` evaluated by Simpson's rule on
    ``[-s_max, s_max]``.  ``J`` is recorded for reporting; the supremum of the
    Mellin factor is evaluated directly so no Sobolev constant enters.
    """
    if not J > 0:
        raise DomainError("J must be positive")
    if not p >= 1:
        raise DomainError("p must be at least 1")
    taus = [float(t) for t in np.atleast_1d(tau)]
    for t in taus:
        if not 0 < t < 1:
            raise DomainError("tau must lie in (0, 1)")
    s = np.linspace(-s_max, s_max, s_points)
    pstar = max(p, p / (p - 1.0)) if p > 1 else np.inf
    laplace = 120.0 * (pstar - 1.0)
    norms = imaginary_power_norms(gen, p, s, seed=seed)
    from scipy.integrate import simpson
    by_tau, sups = {}, {}
    for t in taus:
        sup = mellin_sup(m, t, s)
        sups[t] = sup
        by_tau[t] = float(representation_prefactor(t) * laplace * simpson(sup * norms, x=s))
    best = min(by_tau, key=by_tau.get)
    res = MedaConstant(by_tau[best], best, by_tau, s, sups[best], norms, J)
    return res if detail else res.value


# --------------------------------------------------------------- registry

MULTIPLIERS = {
    "exp": lambda lam: np.exp(-lam),
    "resolvent": lambda lam: lam / (1.0 + lam),
    "exp_sin": lambda lam: np.exp(-lam) * np.sin(lam),
    "one": lambda lam: np.ones_like(lam, dtype=complex),
    "zero": lambda lam: np.zeros_like(lam, dtype=complex),
}


def multiplier(name: str) -> MultiplierSpec:
    try:
        fn = MULTIPLIERS[name]
    except KeyError:
        raise DomainError(f"unknown multiplier {name!r}; known: {sorted(MULTIPLIERS)}") from None
    at_zero = {"exp": 1.0, "one": 1.0}.get(name, 0.0)
    return MultiplierSpec(fn, at_zero, name)


def load_manifest(path_or_text: str) -> list:
    """Multiplier manifest: a JSON list of ``{name, expression, J, phi}``."""
    text = path_or_text
    if not text.lstrip().startswith("["):
        with open(path_or_text) as fh:
            text = fh.read()
    entries = json.loads(text)
    out = []
    for e in entries:
        expr = e.get("expression", e.get("name"))
        if expr not in MULTIPLIERS:
            raise DomainError(f"unknown expression id {expr!r}")
        out.append({"name": e.get("name", expr), "expression": expr,
                    "J": float(e.get("J", 2.0)), "phi": float(e.get("phi", 0.0))})
    return out
