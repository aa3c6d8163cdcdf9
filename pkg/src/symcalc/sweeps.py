"""Verification sweeps: each experiment expands into cells that emit report rows.

A cell is a module-level function plus keyword arguments, so cells can be
shipped to worker processes; every cell draws its randomness from
``SeedSequence([seed, cell_index])`` and rows are reassembled in cell order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Optional

import numpy as np

from . import bellman as bl
from . import calculus as calc
from . import flow as fl
from . import semigroup as sg
from .errors import ConvergenceError, DomainError
from .opnorms import lp_norm, subspace_norm

COLUMNS = ("experiment", "cell", "operation", "anchor", "p", "epsilon", "phi", "n", "seed",
           "quantity", "observed", "bound", "slack", "tolerance", "passed")

EXPERIMENTS = ("verify-convexity", "bakry", "bilinear", "monotonicity", "prop-p4",
               "laplace-type", "imaginary-powers", "repr-formula", "hormander")


@dataclass
class ExperimentConfig:
    """Grids, sample sizes and tolerances for one experiment.

    ``phi`` holds multiples of ``phi_{p_eps}`` (so every grid point is
    admissible for its ``(p, epsilon)`` cell).
    """

    experiment: str = "verify-convexity"
    p: tuple = (4.0,)
    epsilon: tuple = (0.25,)
    phi: tuple = (0.0, 0.5, -0.5, 1.0, -1.0)
    n: tuple = (6,)
    r: tuple = (1.1, 1.5, 2.0, 3.0, 10.0)
    J: tuple = (1.0, 2.0)
    s_max: float = 20.0
    s_points: int = 41
    samples: int = 1000
    seed: int = 0
    tolerance: Optional[float] = None
    out: str = "results"
    workers: int = 1
    timing: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise DomainError(f"unknown experiment {self.experiment!r}")
        for name in ("p", "epsilon", "phi", "n", "r", "J"):
            val = getattr(self, name)
            if np.ndim(val) == 0:
                val = (val,)
            setattr(self, name, tuple(float(v) if name != "n" else int(v) for v in val))
        if self.samples < 1:
            raise DomainError("samples must be positive")
        if any(abs(f) > 1 for f in self.phi):
            raise DomainError("phi entries are fractions of phi_(p_eps) and must lie in [-1, 1]")
        if self.experiment in ("verify-convexity", "bilinear", "monotonicity", "prop-p4"):
            for p in self.p:
                if not p > 2:
                    raise DomainError("Bellman experiments need p > 2")
            for e in self.epsilon:
                if not 0 < e < 0.5:
                    raise DomainError("epsilon must lie in (0, 1/2)")
        if self.experiment in ("laplace-type", "imaginary-powers"):
            if any(p <= 1 for p in self.p):
                raise DomainError("p must exceed 1")
        if self.experiment == "bakry" and any(r <= 1 for r in self.r):
            raise DomainError("Bakry exponents must exceed 1")
        if any(n < 1 for n in self.n):
            raise DomainError("chain sizes must be positive")

    def override(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)


def _row(experiment, cell, operation, anchor, quantity, observed, bound, slack, tol,
         p=None, epsilon=None, phi=None, n=None, seed=None, passed=None):
    slack = float(slack)
    ok = bool(slack >= -tol) if passed is None else bool(passed)
    return {"experiment": experiment, "cell": cell, "operation": operation, "anchor": anchor,
            "p": p, "epsilon": epsilon, "phi": phi, "n": n, "seed": seed,
            "quantity": quantity, "observed": float(observed), "bound": float(bound),
            "slack": slack, "tolerance": float(tol), "passed": ok}


def cell_rng(seed: int, index: int):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def _random_vectors(rng, n, complex_field=True):
    scale = np.exp(rng.uniform(-2, 2))
    v = rng.standard_normal(n) * np.exp(rng.uniform(-1.5, 1.5, n))
    if complex_field:
        v = v + 1j * rng.standard_normal(n) * np.exp(rng.uniform(-1.5, 1.5, n))
    if rng.random() < 0.2:
        # sparse vectors probe the extreme points of the unit balls
        v = v * (rng.random(n) < 0.4)
    return scale * v


def _range_vector(rng, gen, complex_field=True):
    """Random vector of R(A) that is not zero (sparse draws can vanish there)."""
    for _ in range(20):
        v = _random_vectors(rng, gen.n, complex_field)
        f = v - sg.projection_P0(gen, v)
        if np.linalg.norm(f) > 1e-8 * np.linalg.norm(v):
            return f
    raise DomainError("could not draw a nonzero vector in the range")


def _random_generator(rng, n_max, n_min=2):
    n = int(rng.integers(n_min, n_max + 1))
    kind = rng.random()
    if kind < 0.1:
        return sg.two_point()
    if kind < 0.25 and n >= 2:
        return sg.ehrenfest(n - 1)
    return sg.random_markov_generator(n, rng)


# ------------------------------------------------------------ convexity

def convexity_cell(index, seed, p, epsilon, phi_frac, samples, tol=1e-10, chunk=200_000):
    """Minimum of the convexity gap and of the increment inequality over samples."""
    rng = cell_rng(seed, index)
    par = bl.make_params(p, epsilon)
    phi = phi_frac * par.phi_p_eps
    raw, normed, inc_raw, inc_norm = np.inf, np.inf, np.inf, np.inf
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        z, e = bl.sample_states(par, m, rng)
        w = bl.sample_directions(m, rng)
        gap, scale = bl.convexity_gap(par, phi, z, e, w, with_scale=True)
        raw = min(raw, float(gap.min()))
        normed = min(normed, float((gap / np.maximum(1.0, scale)).min()))
        # finite increments along random segments
        k = max(1, m // 20)
        lengths = np.exp(rng.uniform(-3.0, 1.0, k))
        a = w[:k, 0] + 1j * w[:k, 1]
        b = w[:k, 2] + 1j * w[:k, 3]
        a, b = a * lengths * np.abs(z[:k]), b * lengths * np.abs(e[:k])
        inc, sc = bl.f_increment(par, phi, a, b, z[:k], e[:k], with_scale=True)
        inc_raw = min(inc_raw, float(inc.min()))
        inc_norm = min(inc_norm, float((inc / np.maximum(1.0, sc)).min()))
        done += m
    common = dict(p=p, epsilon=epsilon, phi=phi, n=samples, seed=seed)
    ex, op, an = "verify-convexity", "convexity_gap", "convexity-gap"
    return [
        _row(ex, index, op, an, "min_gap", raw, 0.0, raw, tol, **common),
        _row(ex, index, op, an, "min_gap_over_scale", normed, 0.0, normed, tol, **common),
        _row(ex, index, "f_increment", an, "min_increment_over_scale", inc_norm, 0.0, inc_norm,
             tol, **common),
    ]


def convexity_cells(cfg: ExperimentConfig):
    cells = []
    for p in cfg.p:
        for e in cfg.epsilon:
            for f in cfg.phi:
                cells.append((convexity_cell, dict(p=p, epsilon=e, phi_frac=f,
                                                   samples=cfg.samples,
                                                   tol=cfg.tolerance or 1e-10)))
    return cells


# ---------------------------------------------------------------- Bakry

def bakry_cell(index, seed, r, samples, offset=0.01, tol=1e-12):
    """Determinant at ``phi_r`` and the sign of the smallest eigenvalue on both sides.

    For ``r = 2`` the boundary angle is ``pi/2``, outside the open range
    of rotations, so only the check below ``phi_r`` is defined; the other
    two rows are recorded as failed with ``nan`` observations.
    """
    rng = cell_rng(seed, index)
    theta = np.concatenate([np.linspace(-np.pi, np.pi, 721), rng.uniform(-np.pi, np.pi, samples)])
    v = np.exp(1j * theta)
    phi_r = bl.phi_angle(r)
    common = dict(p=r, phi=phi_r, n=theta.size, seed=seed)
    ex, op, an = "bakry", "bakry_D", "bakry-dichotomy"
    inside = float(np.linalg.eigvalsh(bl.bakry_D(r, phi_r - offset, v)).min())
    rows = [_row(ex, index, op, an, "min_eig_below_phi_r", inside, 0.0, inside, tol, **common)]
    if phi_r + offset >= np.pi / 2:
        for q in ("max_abs_det_at_phi_r", "min_eig_above_phi_r"):
            rows.append(_row(ex, index, op, an, q + "_undefined", np.nan, 0.0, np.nan, 0.0,
                             passed=False, **common))
        return rows
    worst = float(np.abs(np.linalg.det(bl.bakry_D(r, phi_r, v))).max())
    outside = float(np.linalg.eigvalsh(bl.bakry_D(r, phi_r + offset, v)).min())
    rows.insert(0, _row(ex, index, op, an, "max_abs_det_at_phi_r", worst, 0.0, -worst, tol,
                        **common))
    rows.append(_row(ex, index, op, an, "min_eig_above_phi_r", outside, 0.0, -outside, 0.0,
                     passed=bool(outside < 0), **common))
    return rows


def bakry_cells(cfg):
    return [(bakry_cell, dict(r=r, samples=cfg.samples, tol=cfg.tolerance or 1e-12)) for r in cfg.r]


# ------------------------------------------------------------- bilinear

def bilinear_cell(index, seed, p, epsilon, phi_frac, samples, n_max=12, tol=1e-9):
    rng = cell_rng(seed, index)
    par = bl.make_params(p, epsilon)
    phi = phi_frac * par.phi_p_eps
    bound = fl.bilinear_bound(par, phi)
    worst_ratio, unconverged = 0.0, 0
    for _ in range(samples):
        gen = _random_generator(rng, n_max)
        f, g = _random_vectors(rng, gen.n), _random_vectors(rng, gen.n)
        setup = fl.FlowSetup(gen, par, phi, f, g)
        res = fl.bilinear_integral(setup, detail=True)
        unconverged += not res.converged
        denom = lp_norm(gen.space, f, p) * lp_norm(gen.space, g, par.q)
        if denom > 0:
            worst_ratio = max(worst_ratio, res.value / denom)
    # closed-form oracle on the two-point space
    gen = sg.two_point()
    rel = 0.0
    for _ in range(20):
        f, g = _random_vectors(rng, 2), _random_vectors(rng, 2)
        got = fl.bilinear_integral(fl.FlowSetup(gen, par, phi, f, g))
        ref = fl.two_point_closed_form(gen, phi, f, g)
        rel = max(rel, abs(got - ref) / max(ref, 1e-300))
    common = dict(p=p, epsilon=epsilon, phi=phi, n=samples, seed=seed)
    ex, op, an = "bilinear", "bilinear_integral", "bilinear-embedding"
    return [
        _row(ex, index, op, an, "max_ratio", worst_ratio, bound, bound - worst_ratio, 0.0, **common),
        _row(ex, index, op, an, "unconverged_tails", unconverged, 0, -unconverged, 0.0, **common),
        _row(ex, index, op, an, "two_point_rel_error", rel, 1e-8, 1e-8 - rel, 0.0, **common),
    ]


def bilinear_cells(cfg):
    return [(bilinear_cell, dict(p=p, epsilon=e, phi_frac=f, samples=cfg.samples,
                                 n_max=max(cfg.n) if max(cfg.n) > 1 else 12))
            for p in cfg.p for e in cfg.epsilon for f in cfg.phi]


# --------------------------------------------------------- monotonicity

def monotonicity_cell(index, seed, p, epsilon, phi_frac, samples, n=6, tol=1e-9,
                      times=np.geomspace(1e-3, 20.0, 40)):
    rng = cell_rng(seed, index)
    par = bl.make_params(p, epsilon)
    phi = phi_frac * par.phi_p_eps
    min_gap, max_dE, fd_bad, fd_skipped, fd_total = np.inf, -np.inf, 0, 0, 0
    e0_slack = np.inf
    for k in range(samples):
        gen = sg.ehrenfest(n) if k % 3 == 0 else (sg.two_point() if k % 3 == 1
                                                  else sg.random_markov_generator(n + 1, rng))
        f, g = _random_vectors(rng, gen.n), _random_vectors(rng, gen.n)
        setup = fl.FlowSetup(gen, par, phi, f, g)
        gap, scale = fl.monotonicity_gap(setup, times, with_scale=True)
        dE = fl.flow_E_derivative(setup, times)
        unit = np.maximum(1.0, scale)
        min_gap = min(min_gap, float(np.min(gap / unit)))
        max_dE = max(max_dE, float(np.max(dE / unit)))
        bound0 = (1 + par.delta) * (lp_norm(gen.space, f, p) ** p + lp_norm(gen.space, g, par.q) ** par.q)
        e0_slack = min(e0_slack, (bound0 - fl.flow_E(setup, 0.0)) / max(bound0, 1e-300))
        for t in times[::8]:
            chk = fl.derivative_check(setup, float(t))
            fd_total += 1
            if chk.ok is None:
                fd_skipped += 1
            elif not chk.ok:
                fd_bad += 1
    common = dict(p=p, epsilon=epsilon, phi=phi, n=samples, seed=seed)
    ex, an = "monotonicity", "monotonicity-bound"
    return [
        _row(ex, index, "monotonicity_gap", an, "min_gap_over_scale", min_gap, 0.0, min_gap, tol,
             **common),
        _row(ex, index, "flow_E_derivative", an, "max_E_prime_over_scale", max_dE, 0.0, -max_dE,
             1e-10, **common),
        _row(ex, index, "flow_E_derivative", an, "fd_mismatches", fd_bad, 0, -fd_bad, 0.0, **common),
        _row(ex, index, "flow_E_derivative", an, "fd_skipped_near_crossing", fd_skipped, fd_total,
             fd_total - fd_skipped, 0.0, **common),
        _row(ex, index, "flow_E", an, "initial_bound_rel_slack", e0_slack, 0.0, e0_slack, 1e-12,
             **common),
    ]


def monotonicity_cells(cfg):
    return [(monotonicity_cell, dict(p=p, epsilon=e, phi_frac=f, samples=cfg.samples,
                                     n=cfg.n[0], tol=cfg.tolerance or 1e-9))
            for p in cfg.p for e in cfg.epsilon for f in cfg.phi]


# ------------------------------------------------ contraction inequality

def prop_p4_cell(index, seed, p, epsilon, phi_frac, samples, n_max=10, tol=1e-9,
                 times=np.geomspace(1e-2, 1e2, 9)):
    rng = cell_rng(seed, index)
    par = bl.make_params(p, epsilon)
    phi = phi_frac * par.phi_p_eps
    worst = np.inf
    for _ in range(samples):
        gen = _random_generator(rng, n_max)
        f, g = _random_vectors(rng, gen.n), _random_vectors(rng, gen.n)
        for t in times:
            T = gen.semigroup_matrix(float(t)).real
            worst = min(worst, fl.prop_p4_gap(gen.space, T, par, phi, f, g))
    common = dict(p=p, epsilon=epsilon, phi=phi, n=samples, seed=seed)
    return [_row("prop-p4", index, "prop_p4_gap", "contraction-inequality", "min_gap", worst, 0.0,
                 worst, tol, **common)]


def prop_p4_cells(cfg):
    return [(prop_p4_cell, dict(p=p, epsilon=e, phi_frac=f, samples=cfg.samples,
                                tol=cfg.tolerance or 1e-9))
            for p in cfg.p for e in cfg.epsilon for f in cfg.phi]


# -------------------------------------------------------- Laplace type

def laplace_cell(index, seed, p, samples, n=6):
    rng = cell_rng(seed, index)
    worst, oracle = np.inf, 0.0
    for k in range(samples):
        gen = sg.ehrenfest(n) if k % 2 == 0 else _random_generator(rng, 10)
        M = fl.random_piecewise_constant(rng, pieces=int(rng.integers(1, 7)))
        f = _range_vector(rng, gen)
        worst = min(worst, fl.laplace_transform_bound_check(gen, M, p, f) / max(M.sup, 1e-300))
        if k < 20:
            lam = gen.eigenvalues[~gen.zero_mask]
            spec = calc.laplace_type_multiplier(M, M.breaks)
            oracle = max(oracle, float(np.max(np.abs(spec(lam) - M.laplace(lam)))))
    common = dict(p=p, n=samples, seed=seed)
    ex, an = "laplace-type", "laplace-type-bound"
    return [
        _row(ex, index, "laplace_transform_bound_check", an, "min_slack_per_sup", worst, 0.0,
             worst, 0.0, **common),
        _row(ex, index, "laplace_type_multiplier", an, "closed_form_max_error", oracle, 1e-12,
             1e-12 - oracle, 0.0, **common),
    ]


def laplace_cells(cfg):
    return [(laplace_cell, dict(p=p, samples=cfg.samples, n=cfg.n[0])) for p in cfg.p]


# ---------------------------------------------------- imaginary powers

def imaginary_norm_profile(gen, p, s_values, multistarts=24, seed=0):
    """``||A^{is}||`` on the range for each ``s``, warm-started from the previous optimum."""
    basis = gen.range_basis()
    out, prev = [], []
    for k, s in enumerate(s_values):
        B = sg.imaginary_power_matrix(gen, float(s))
        res = subspace_norm(gen.space, B, basis, p, multistarts=multistarts, seed=seed + k,
                            starts=prev)
        out.append(res.value)
        prev = [basis.T @ (gen.nu * res.witness)]
    return np.asarray(out)


def imaginary_cell(index, seed, n, p, s_max, s_points, factor=10.0):
    gen = sg.ehrenfest(n)
    s = np.linspace(-s_max, s_max, s_points)
    s = np.union1d(s, [-1.0, 1.0])
    norms = imaginary_norm_profile(gen, p, s, seed=seed)
    phistar = bl.phi_star_angle(p)
    weight = (1 + np.abs(s)) ** -0.5 * np.exp(-phistar * np.abs(s))
    shaped = norms * weight
    calib = float(shaped[np.isin(s, [-1.0, 1.0])].max())
    worst = float(shaped.max())
    common = dict(p=p, n=n, seed=seed)
    ex, an = "imaginary-powers", "imaginary-power-growth"
    rows = [_row(ex, index, "imaginary_power", an, "max_shaped_norm", worst, factor * calib,
                 factor * calib - worst, 0.0, **common)]
    if p == 2:
        dev = float(np.abs(norms - 1.0).max())
        rows.append(_row(ex, index, "imaginary_power", an, "p2_norm_deviation", dev, 1e-10,
                         1e-10 - dev, 0.0, **common))
    # subordination route against the spectral definition
    rng = cell_rng(seed, index)
    f = _range_vector(rng, gen)
    rel = 0.0
    for sv in (-3.0, -1.0, 1.0, 3.0):
        a = fl.subordinated_imaginary_power(gen, sv, f, phi=0.5 * bl.phi_angle(max(p, 2.5)))
        b = sg.imaginary_power(gen, sv, f)
        rel = max(rel, float(np.linalg.norm(a - b) / np.linalg.norm(b)))
    rows.append(_row(ex, index, "subordinated_imaginary_power", an, "subordination_rel_error",
                     rel, 1e-8, 1e-8 - rel, 0.0, **common))
    return rows


def imaginary_cells(cfg):
    return [(imaginary_cell, dict(n=n, p=p, s_max=cfg.s_max, s_points=cfg.s_points))
            for n in cfg.n for p in cfg.p]


# ------------------------------------------------------ representation

REPR_MULTIPLIERS = ("exp", "resolvent", "exp_sin")


def repr_generator(name: str, rng=None):
    if name == "two-point":
        return sg.two_point()
    kind, size = name.split(":")
    if kind == "ehrenfest":
        return sg.ehrenfest(int(size))
    if kind == "random":
        return sg.random_markov_generator(int(size), rng)
    raise DomainError(f"unknown generator {name!r}")


def repr_cell(index, seed, generator, multiplier, tau=0.5, tol=1e-5):
    rng = cell_rng(seed, index)
    gen = repr_generator(generator, rng)
    m = calc.multiplier(multiplier)
    f = _range_vector(rng, gen)
    got = calc.meda_reconstruct(gen, m, tau, None, f, detail=True)
    ref = sg.apply_multiplier(gen, m, f)
    w = gen.nu
    err = float(np.sqrt(np.sum(w * np.abs(got.vector - ref) ** 2) / np.sum(w * np.abs(ref) ** 2)))
    limit = 1e-6 if generator == "two-point" else tol
    return [_row("repr-formula", index, "meda_reconstruct", "representation-formula",
                 f"rel_error[{generator},{multiplier}]", err, limit, limit - err, 0.0,
                 n=gen.n, seed=seed)]


def repr_cells(cfg):
    gens = ["two-point"] + [f"ehrenfest:{n}" for n in cfg.n] + [f"random:{min(max(cfg.n), 8)}"]
    return [(repr_cell, dict(generator=g, multiplier=m, tol=cfg.tolerance or 1e-5))
            for g in gens for m in REPR_MULTIPLIERS]


# ------------------------------------------------------------ Hörmander

DEFAULT_MANIFEST = [{"name": m, "expression": m} for m in ("exp", "resolvent", "exp_sin", "one")]


def hormander_cell(index, seed, name, expression, J, phi):
    m = calc.multiplier(expression)
    gen = sg.ehrenfest(4)
    lam = gen.eigenvalues[~gen.zero_mask]
    rows = []
    try:
        cfg = calc.HormanderConfig.for_spectrum(float(lam.min()), float(lam.max()), J=J)
        h = calc.hormander_norm(m, phi, cfg)
        rows.append(_row("hormander", index, "hormander_norm", "hormander-class",
                         f"hormander_norm[{name}]", h, np.inf, np.inf, 0.0,
                         passed=bool(np.isfinite(h)), phi=phi, n=gen.n, seed=seed))
    except ConvergenceError as exc:
        rows.append(_row("hormander", index, "hormander_norm", "hormander-class",
                         f"hormander_norm[{name}]", np.nan, np.inf, -np.inf, 0.0,
                         passed=False, phi=phi, n=gen.n, seed=seed))
    rng = cell_rng(seed, index)
    f = _range_vector(rng, gen)
    rec = calc.meda_reconstruct(gen, m, 0.5, None, f, detail=True)
    ref = sg.apply_multiplier(gen, m, f)
    err = float(np.linalg.norm(rec.vector - ref) / max(np.linalg.norm(ref), 1e-300))
    C1 = calc.meda_constant(gen, m, 2.0, J)
    ratio = lp_norm(gen.space, rec.vector, 2.0) / lp_norm(gen.space, f, 2.0)
    rows.append(_row("hormander", index, "meda_reconstruct", "representation-formula",
                     f"reconstruction_error[{name}]", err, 1e-5, 1e-5 - err, 0.0,
                     passed=bool(err <= 1e-5 or np.linalg.norm(ref) == 0), phi=phi, n=gen.n,
                     seed=seed))
    rows.append(_row("hormander", index, "meda_constant", "representation-formula",
                     f"C1_p2[{name}]", ratio, C1, C1 - ratio, 1e-9, phi=phi, n=gen.n, seed=seed))
    return rows


def hormander_cells(cfg, manifest=None):
    entries = manifest or [dict(e, J=J, phi=ph) for e in DEFAULT_MANIFEST for J in cfg.J
                           for ph in (0.3, 0.6)]
    return [(hormander_cell, dict(name=e["name"], expression=e["expression"], J=float(e["J"]),
                                  phi=float(e["phi"])))
            for e in entries]


BUILDERS = {
    "verify-convexity": convexity_cells,
    "bakry": bakry_cells,
    "bilinear": bilinear_cells,
    "monotonicity": monotonicity_cells,
    "prop-p4": prop_p4_cells,
    "laplace-type": laplace_cells,
    "imaginary-powers": imaginary_cells,
    "repr-formula": repr_cells,
    "hormander": hormander_cells,
}

DEFAULTS = {
    "verify-convexity": dict(p=(4.0,), epsilon=(0.25,), samples=100_000),
    "bakry": dict(r=(1.1, 1.5, 3.0, 10.0), samples=2000),
    "bilinear": dict(p=(2.5, 4.0, 8.0), epsilon=(0.1, 0.3), phi=(0.0, 1.0, -1.0), n=(12,),
                     samples=200),
    "monotonicity": dict(p=(2.5, 4.0, 8.0), epsilon=(0.1, 0.3), phi=(0.0, 1.0, -1.0), n=(6,),
                         samples=30),
    "prop-p4": dict(p=(2.5, 4.0, 8.0), epsilon=(0.1, 0.3), phi=(0.0, 1.0, -1.0), samples=200),
    "laplace-type": dict(p=(1.2, 2.0, 3.0, 10.0), n=(6,), samples=200),
    "imaginary-powers": dict(p=(2.0, 3.0), n=(4, 6, 8), samples=1),
    "repr-formula": dict(n=(4, 7), samples=1),
    "hormander": dict(J=(1.0, 2.0), samples=1),
}


def default_config(experiment: str, **kw) -> ExperimentConfig:
    base = dict(DEFAULTS[experiment])
    base.update({k: v for k, v in kw.items() if v is not None})
    return ExperimentConfig(experiment=experiment, **base)


def _run_cell(args):
    fn, index, seed, kwargs, experiment = args
    try:
        return fn(index, seed, **kwargs)
    except (DomainError, ConvergenceError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return [_row(experiment, index, fn.__name__, "numerical-failure", type(exc).__name__,
                     np.nan, 0.0, -np.inf, 0.0, passed=False, seed=seed)]


def run_cells(cfg: ExperimentConfig, manifest=None) -> list:
    builder = BUILDERS[cfg.experiment]
    cells = builder(cfg, manifest) if cfg.experiment == "hormander" else builder(cfg)
    jobs = [(fn, i, cfg.seed, kw, cfg.experiment) for i, (fn, kw) in enumerate(cells)]
    if cfg.workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(j) for j in jobs]
    rows = []
    for r in results:
        rows.extend(r)
    return rows
