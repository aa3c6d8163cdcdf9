"""Nazarov--Treil Bellman function and its rotated-Hessian convexity.

Points of R^2 x R^2 are handled as pairs of complex numbers ``(zeta, eta)``
with ``zeta = zeta_1 + i zeta_2``.  Every evaluator accepts scalars or
broadcastable complex arrays; Hessians come back with trailing shape
``(4, 4)`` in the real coordinate order ``(zeta_1, zeta_2, eta_1, eta_2)``.

Wirtinger derivatives follow ``d_zeta = (d_1 - i d_2) / 2``, so that
``2 Re[w * d_zeta Q]`` is the real directional derivative along ``w``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

#: Distance to the non-C^2 set below which Hessian-based evaluations refuse.
UPSILON_TOL = 1e-9


def phi_angle(r: float) -> float:
    """Analyticity half-angle ``arccos|1 - 2/r|`` for an exponent ``r > 1``."""
    r = float(r)
    if r <= 1:
        raise DomainError(f"exponent must exceed 1, got {r}")
    return float(np.arccos(abs(1.0 - 2.0 / r)))


def phi_star_angle(r: float) -> float:
    """Functional-calculus half-angle ``arcsin|1 - 2/r|``."""
    r = float(r)
    if r <= 1:
        raise DomainError(f"exponent must exceed 1, got {r}")
    return float(np.arcsin(abs(1.0 - 2.0 / r)))


def conjugate_exponent(r: float) -> float:
    return r / (r - 1.0)


@dataclass(frozen=True)
class BellmanParams:
    """Parameter bundle ``(p, epsilon)`` with every derived constant."""

    p: float
    epsilon: float
    q: float = field(init=False)
    delta: float = field(init=False)
    p_eps: float = field(init=False)
    q_eps: float = field(init=False)
    phi_p: float = field(init=False)
    phi_star_p: float = field(init=False)

    def __post_init__(self):
        p, eps = float(self.p), float(self.epsilon)
        if not p > 2:
            raise DomainError(f"p must exceed 2, got {p}")
        if not 0 < eps < 0.5:
            raise DomainError(f"epsilon must lie in (0, 1/2), got {eps}")
        q = p / (p - 1.0)
        p_eps = (p - 2.0 * eps) / (1.0 - eps)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "delta", 2.0 * q * (q - 1.0) * eps / 85.0)
        object.__setattr__(self, "p_eps", p_eps)
        object.__setattr__(self, "q_eps", p_eps / (p_eps - 1.0))
        object.__setattr__(self, "phi_p", phi_angle(p))
        object.__setattr__(self, "phi_star_p", phi_star_angle(p))

    @property
    def phi_p_eps(self) -> float:
        """Largest admissible rotation angle, ``phi_{p_eps}``."""
        return phi_angle(self.p_eps)

    def check_angle(self, phi: float, slack: float = 1e-12) -> None:
        if abs(phi) > self.phi_p_eps + slack:
            raise DomainError(
                f"|phi|={abs(phi):.6g} exceeds phi_(p_eps)={self.phi_p_eps:.6g}")


def make_params(p: float, epsilon: float) -> BellmanParams:
    return BellmanParams(p, epsilon)


@dataclass(frozen=True)
class StatePair:
    """A single argument ``xi = (zeta, eta)`` of the Bellman function."""

    zeta: complex
    eta: complex

    @classmethod
    def from_real(cls, x) -> "StatePair":
        x = np.asarray(x, dtype=float)
        return cls(complex(x[0], x[1]), complex(x[2], x[3]))

    def as_real(self) -> np.ndarray:
        return np.array([self.zeta.real, self.zeta.imag, self.eta.real, self.eta.imag])

    def region(self, params: BellmanParams) -> str:
        return str(region(params, self.zeta, self.eta))


def _powers(params, zeta, eta):
    zeta = np.asarray(zeta, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    a = np.abs(zeta)
    b = np.abs(eta)
    return zeta, eta, a, b, a ** params.p, b ** params.q


def region(params: BellmanParams, zeta, eta):
    """Label each point ``'good'``, ``'bad'`` or ``'upsilon0'`` (exact test)."""
    _, _, _, b, ap, bq = _powers(params, zeta, eta)
    out = np.where(ap < bq, "bad", "good").astype(object)
    out = np.where((b == 0) | (ap == bq), "upsilon0", out)
    return out if out.ndim else out.item()


def upsilon_distance_ok(params: BellmanParams, zeta, eta, tol: float = UPSILON_TOL):
    """True where the point is safely off the non-C^2 set."""
    _, _, _, b, ap, bq = _powers(params, zeta, eta)
    return (b >= tol) & (np.abs(ap - bq) >= tol * (ap + bq))


def eval_Q(params: BellmanParams, zeta, eta):
    """Value of the Bellman function (nonnegative, continuous)."""
    _, _, a, b, ap, bq = _powers(params, zeta, eta)
    p, q, d = params.p, params.q, params.delta
    with np.errstate(divide="ignore", invalid="ignore"):
        bad = a * a * b ** (2.0 - q)
    good = (2.0 / p) * ap + (2.0 / q - 1.0) * bq
    extra = np.where(ap <= bq, bad, good)
    out = ap + bq + d * extra
    return out if np.ndim(out) else float(out)


def _radial_coefficients(params, a, b, ap, bq):
    """Scalars ``c_z, c_e`` with real gradient ``(c_z * zeta, c_e * eta)``."""
    p, q, d = params.p, params.q, params.delta
    with np.errstate(divide="ignore", invalid="ignore"):
        a_pm2 = np.where(a > 0, a ** (p - 2.0), 0.0)
        b_qm2 = np.where(b > 0, b ** (q - 2.0), 0.0)
        b_2mq = b ** (2.0 - q)
        b_mq = np.where(b > 0, b ** (-q), 0.0)
    good = ap >= bq
    c_z = np.where(good, (p + 2.0 * d) * a_pm2, p * a_pm2 + 2.0 * d * b_2mq)
    c_e = np.where(good, (q + (2.0 - q) * d) * b_qm2,
                   q * b_qm2 + d * (2.0 - q) * a * a * b_mq)
    return c_z, c_e


def grad_Q(params: BellmanParams, zeta, eta):
    """Wirtinger derivatives ``(d_zeta Q, d_eta Q)`` as complex values.

    Q is C^1 on all of R^4, so no exclusion is applied.  At ``eta = 0`` the
    eta-derivative vanishes because ``q > 1``.
    """
    zeta, eta, a, b, ap, bq = _powers(params, zeta, eta)
    c_z, c_e = _radial_coefficients(params, a, b, ap, bq)
    dz = 0.5 * c_z * np.conj(zeta)
    de = 0.5 * c_e * np.conj(eta)
    if dz.ndim == 0:
        return complex(dz), complex(de)
    return dz, de


def real_gradient(params: BellmanParams, zeta, eta) -> np.ndarray:
    """Gradient in real coordinates, trailing shape ``(4,)``."""
    dz, de = grad_Q(params, zeta, eta)
    dz, de = np.asarray(dz), np.asarray(de)
    return np.stack([2 * dz.real, -2 * dz.imag, 2 * de.real, -2 * de.imag], axis=-1)


def _as_xy(w):
    w = np.asarray(w, dtype=complex)
    return np.stack([w.real, w.imag], axis=-1)


def _power_hessian(r, mod, v, coeff):
    """``coeff * |v|^{r-2} (I + (r-2) u u^T)`` with ``u = v/|v|`` (0 at v=0)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(mod > 0, mod ** (r - 2.0), 0.0) * coeff
        u = np.where(mod[..., None] > 0, v / mod[..., None], 0.0)
    eye = np.eye(2)
    outer = u[..., :, None] * u[..., None, :]
    return scale[..., None, None] * (eye + (r - 2.0) * outer)


def hessian_Q(params: BellmanParams, zeta, eta, tol: float = UPSILON_TOL):
    """Real 4x4 Hessian of Q, defined off the set ``Upsilon_0``.

    Raises :class:`DomainError` if any point lies within ``tol`` of that set.
    """
    zeta, eta, a, b, ap, bq = _powers(params, zeta, eta)
    if not np.all(upsilon_distance_ok(params, zeta, eta, tol)):
        raise DomainError("Hessian requested on (or too near) the non-C^2 set")
    p, q, d = params.p, params.q, params.delta
    z, e = _as_xy(zeta), _as_xy(eta)
    good = (ap > bq)[..., None, None]

    h1_good = _power_hessian(p, a, z, p + 2.0 * d)
    h3_good = _power_hessian(q, b, e, q + (2.0 - q) * d)

    b_mq = b ** (-q)
    h1_bad = _power_hessian(p, a, z, p) + (2.0 * d * b ** (2.0 - q))[..., None, None] * np.eye(2)
    h2_bad = (2.0 * d * (2.0 - q) * b_mq)[..., None, None] * (z[..., :, None] * e[..., None, :])
    h3_bad = (_power_hessian(q, b, e, q)
              + _power_hessian(2.0 - q, b, e, d * (2.0 - q)) * (a * a)[..., None, None])

    h1 = np.where(good, h1_good, h1_bad)
    h2 = np.where(good, 0.0, h2_bad)
    h3 = np.where(good, h3_good, h3_bad)
    top = np.concatenate([h1, h2], axis=-1)
    bottom = np.concatenate([np.swapaxes(h2, -1, -2), h3], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def hessian_blocks(H) -> dict:
    """Split a real Hessian into the blocks ``H1, H2, H3`` and ``I1, I2, I3``.

    ``H2`` holds the mixed partials with zeta-rows and eta-columns, so the
    off-diagonal contribution to a form is ``omega_1^T (H2 + tan(phi) I2) omega_2``.
    """
    H = np.asarray(H)
    h1, h2, h3 = H[..., :2, :2], H[..., :2, 2:], H[..., 2:, 2:]

    def _i_diag(block):
        a, b, c = block[..., 0, 0], block[..., 0, 1], block[..., 1, 1]
        half = 0.5 * (c - a)
        return np.stack([np.stack([b, half], -1), np.stack([half, -b], -1)], -2)

    z1e1, z1e2 = h2[..., 0, 0], h2[..., 0, 1]
    z2e1, z2e2 = h2[..., 1, 0], h2[..., 1, 1]
    diff = z2e1 - z1e2
    summ = z1e1 + z2e2
    i2 = 0.5 * np.stack([np.stack([diff, summ], -1), np.stack([-summ, diff], -1)], -2)
    return {"H1": h1, "H2": h2, "H3": h3, "I1": _i_diag(h1), "I2": i2, "I3": _i_diag(h3)}


def rotation_matrices(phi: float):
    """Plane rotation ``O_phi`` and block rotation ``U_phi = diag(O_phi, O_-phi)``."""
    if not abs(phi) < np.pi / 2:
        raise DomainError("rotation angle must satisfy |phi| < pi/2")
    c, s = np.cos(phi), np.sin(phi)
    O = np.array([[c, -s], [s, c]])
    U = np.zeros((4, 4))
    U[:2, :2] = O
    U[2:, 2:] = O.T
    return O, U


def kappa(alpha):
    """Reflection ``K(alpha) = [[cos a, sin a], [sin a, -cos a]]``."""
    c, s = np.cos(alpha), np.sin(alpha)
    return np.stack([np.stack([c, s], -1), np.stack([s, -c], -1)], -2)


def bakry_D(r: float, phi: float, v) -> np.ndarray:
    """Normalized Bakry matrix ``D_{r,phi}(v)``.

    The formula is used for every ``r > 0``; the positivity dichotomy only
    makes sense for ``r > 1``, but the exponent ``2 - q < 1`` also appears
    in the convexity proof.
    """
    if not r > 0:
        raise DomainError("Bakry exponent must be positive")
    if not abs(phi) < np.pi / 2:
        raise DomainError("rotation angle must satisfy |phi| < pi/2")
    v = np.asarray(v)
    if np.iscomplexobj(v) or v.shape == ():
        v = _as_xy(v)
    if np.any(np.linalg.norm(v, axis=-1) == 0):
        raise DomainError("polar angle of the zero vector is undefined")
    theta = np.arctan2(v[..., 1], v[..., 0])
    coeff = (1.0 - 2.0 / r) / np.cos(phi)
    return 0.5 * r * (np.eye(2) + coeff * kappa(2.0 * theta - phi))


def r_phi_form(params: BellmanParams, phi: float, zeta, eta, omega, tol: float = UPSILON_TOL):
    """Rotated-Hessian quadratic form ``<H(Q)(xi) omega, U_phi omega>``."""
    _, U = rotation_matrices(phi)
    H = hessian_Q(params, zeta, eta, tol)
    omega = np.asarray(omega, dtype=float)
    Hw = np.einsum("...ij,...j->...i", H, omega)
    Uw = omega @ U.T
    out = np.sum(Hw * Uw, axis=-1)
    return out if np.ndim(out) else float(out)


def r_phi_blockwise(params: BellmanParams, phi: float, zeta, eta, omega,
                    tol: float = UPSILON_TOL):
    """The same form assembled from the three block terms (independent route)."""
    blocks = hessian_blocks(hessian_Q(params, zeta, eta, tol))
    omega = np.asarray(omega, dtype=float)
    w1, w2 = omega[..., :2], omega[..., 2:]
    t = np.tan(phi)

    def quad(M, x, y):
        return np.einsum("...i,...ij,...j->...", x, M, y)

    first = quad(blocks["H1"] + t * blocks["I1"], w1, w1)
    cross = quad(blocks["H2"] + t * blocks["I2"], w1, w2)
    third = quad(blocks["H3"] - t * blocks["I3"], w2, w2)
    return np.cos(phi) * (first + 2.0 * cross + third), (first, cross, third)


def convexity_gap(params: BellmanParams, phi: float, zeta, eta, omega,
                  tol: float = UPSILON_TOL, with_scale: bool = False):
    """``R_phi(Q)[xi; omega] - 2 delta cos(phi) |omega_1||omega_2|``.

    With ``with_scale`` also returns the summed magnitude of the products
    entering the form, for scale-aware rounding tolerances.
    """
    params.check_angle(phi)
    _, U = rotation_matrices(phi)
    omega = np.asarray(omega, dtype=float)
    H = hessian_Q(params, zeta, eta, tol)
    Uw = omega @ U.T
    terms = H * Uw[..., :, None] * omega[..., None, :]
    form = terms.sum(axis=(-1, -2))
    n1 = np.linalg.norm(omega[..., :2], axis=-1)
    n2 = np.linalg.norm(omega[..., 2:], axis=-1)
    gap = form - 2.0 * params.delta * np.cos(phi) * n1 * n2
    if with_scale:
        return gap, np.abs(terms).sum(axis=(-1, -2))
    return gap


def f_functional(params: BellmanParams, phi: float, alpha, beta, zeta, eta):
    """``F_{alpha,beta}(zeta, eta) = 2 Re[e^{i phi} alpha d_zeta Q + e^{-i phi} beta d_eta Q]``."""
    dz, de = grad_Q(params, zeta, eta)
    val = 2.0 * np.real(np.exp(1j * phi) * alpha * dz + np.exp(-1j * phi) * beta * de)
    return val


def f_increment(params: BellmanParams, phi: float, alpha, beta, zeta, eta,
                with_scale: bool = False):
    """``F(alpha+zeta, beta+eta) - F(zeta, eta) - 2 delta cos(phi) |alpha||beta|``."""
    params.check_angle(phi)
    alpha = np.asarray(alpha, dtype=complex)
    beta = np.asarray(beta, dtype=complex)
    hi = f_functional(params, phi, alpha, beta, alpha + zeta, beta + eta)
    lo = f_functional(params, phi, alpha, beta, zeta, eta)
    gap = hi - lo - 2.0 * params.delta * np.cos(phi) * np.abs(alpha) * np.abs(beta)
    if with_scale:
        return gap, np.abs(hi) + np.abs(lo)
    return gap


def delta_calibration_check(D: float) -> float:
    """Constant ``2 sqrt(2/D - 4) - 16`` obtained when ``delta = D q (q-1) eps``."""
    if not 0 < D < 0.5:
        raise DomainError("D must lie in (0, 1/2)")
    return 2.0 * np.sqrt(2.0 / D - 4.0) - 16.0


def phi_star_eps_bound(p: float, epsilon: float) -> tuple[float, float]:
    """Both sides of ``phi*_{p_eps} <= phi*_p + 2(p-2) eps / (p sqrt(p-1))``."""
    params = BellmanParams(p, epsilon)
    lhs = phi_star_angle(params.p_eps)
    rhs = params.phi_star_p + 2.0 * (p - 2.0) * epsilon / (p * np.sqrt(p - 1.0))
    return lhs, rhs


def tangent_bound(p: float) -> float:
    """``(2 - q)(1 + tan phi_p)``; strictly below 2 for every ``p > 2``."""
    q = conjugate_exponent(p)
    return (2.0 - q) * (1.0 + np.tan(phi_angle(p)))


# ---------------------------------------------------------------- sampling

def _log_uniform(rng, lo, hi, size):
    return np.exp(rng.uniform(np.log(lo), np.log(hi), size))


def _unit_phase(rng, size):
    return np.exp(1j * rng.uniform(0.0, 2 * np.pi, size))


def sample_states(params: BellmanParams, n: int, rng, stratum: str = "mixed",
                  radius=(1e-3, 1e3), tol: float = UPSILON_TOL):
    """Draw ``n`` states off ``Upsilon_0`` from one stratum.

    ``'good'``/``'bad'`` draw both moduli log-uniformly and keep the requested
    region; ``'near'`` places ``|zeta|`` at a log-uniform relative offset in
    ``[1e-8, 1e-2]`` from the boundary ``|zeta|^p = |eta|^q`` on either side;
    ``'mixed'`` splits evenly between the three.
    """
    lo, hi = radius
    if stratum == "mixed":
        k = n // 3
        parts = [sample_states(params, m, rng, s, radius, tol)
                 for s, m in (("good", k), ("bad", k), ("near", n - 2 * k))]
        return np.concatenate([x[0] for x in parts]), np.concatenate([x[1] for x in parts])
    zs, es, have = [], [], 0
    while have < n:
        m = 2 * (n - have) + 16
        b = _log_uniform(rng, lo, hi, m)
        if stratum == "near":
            rel = _log_uniform(rng, 1e-8, 1e-2, m) * rng.choice([-1.0, 1.0], m)
            a = b ** (params.q / params.p) * (1.0 + rel)
        else:
            a = _log_uniform(rng, lo, hi, m)
        zeta = a * _unit_phase(rng, m)
        eta = b * _unit_phase(rng, m)
        keep = upsilon_distance_ok(params, zeta, eta, tol)
        ap, bq = a ** params.p, b ** params.q
        if stratum == "good":
            keep &= ap > bq
        elif stratum == "bad":
            keep &= ap < bq
        zs.append(zeta[keep])
        es.append(eta[keep])
        have += int(keep.sum())
    return np.concatenate(zs)[:n], np.concatenate(es)[:n]


def sample_directions(n: int, rng) -> np.ndarray:
    """Uniform points on the unit sphere of R^4."""
    w = rng.standard_normal((n, 4))
    return w / np.linalg.norm(w, axis=1, keepdims=True)
