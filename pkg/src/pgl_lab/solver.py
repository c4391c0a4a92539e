"""Discrete critical points of the energy by monotone descent.

Each run starts with plain gradient descent (direction ``-energy_gradient``,
Armijo backtracking on the energy) and, when ``polish`` is on, switches to a
damped Newton iteration on the tridiagonal Hessian once the residual drops
below ``polish_threshold`` or after ``descent_iters`` descent steps.  Newton
steps are shifted towards the (volume-weighted) gradient direction until the
system is positive definite, so every accepted step still lowers the energy.
"""

from dataclasses import dataclass, field
import logging

import numpy as np
from scipy.linalg import LinAlgError, solveh_banded

from .errors import Diverged, HypothesisFailed
from .functional import (
    RadialField,
    discrete_energy,
    el_residual,
    energy_gradient,
    energy_hessian,
    energy_increment,
    energy_profile,
    raw_gradient,
)
from .geometry import hessian_spectrum, sigma_numeric

log = logging.getLogger(__name__)

ARMIJO = 1e-4


@dataclass(frozen=True)
class SolveConfig:
    tol_residual: float = 1e-10
    max_iters: int = 5000
    step0: float = 1e-2
    backtrack: float = 0.5
    seed: int = 0
    polish: bool = True
    polish_threshold: float = 1e-3
    descent_iters: int = 200

    def __post_init__(self):
        if not self.tol_residual > 0:
            raise ValueError("tol_residual must be positive")
        if not 0.0 < self.backtrack < 1.0:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if not self.step0 > 0:
            raise ValueError("step0 must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")


@dataclass(eq=False)
class SolveTrace:
    iterations: int = 0
    energy_history: list = field(default_factory=list)
    decrements: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    final_residual: float = np.inf
    converged: bool = False
    newton_steps: int = 0

    @property
    def status(self):
        return "converged" if self.converged else "max_iters"


def max_residual(field, params):
    return float(np.max(np.abs(el_residual(field, params))))


def _line_search(field, params, direction, slope, alpha, cfg):
    """Backtrack from ``alpha`` until the Armijo condition holds.

    Returns ``(alpha, dE)`` or ``(None, None)`` if no decrease was found.
    """
    for _ in range(60):
        dphi = alpha * direction
        with np.errstate(over="ignore", invalid="ignore"):
            dE = energy_increment(field, params, dphi)
        if not np.isfinite(dE):
            alpha *= cfg.backtrack
            continue
        if dE <= ARMIJO * alpha * slope and dE < 0.0:
            return alpha, dE
        alpha *= cfg.backtrack
    return None, None


def _newton_direction(field, params, grad, free):
    diag, off = energy_hessian(field, params)
    d = diag[free]
    o = off[free[:-1] & free[1:]]
    vol = field.warp.node_volume[free]
    scale = float(np.max(np.abs(d / vol)))
    mu = 0.0
    for _ in range(40):
        ab = np.zeros((2, d.size))
        ab[0] = d + mu * vol
        ab[1, :-1] = o
        try:
            step = solveh_banded(ab, -grad[free], lower=True, check_finite=False)
        except LinAlgError:
            mu = max(2.0 * mu, 1e-6 * scale, 1e-12)
            continue
        out = np.zeros_like(grad)
        out[free] = step
        return out
    return None


def minimize(field0, params, cfg=None):
    """Lower the discrete energy until max |el_residual| <= cfg.tol_residual.

    Returns ``(field, trace)``.  Hitting ``max_iters`` returns the partial
    result with ``trace.converged = False``; a NaN or an energy above 1e3
    times the initial value raises Diverged.
    """
    cfg = cfg or SolveConfig()
    field = field0
    free = field.free_mask
    with np.errstate(over="ignore", invalid="ignore"):
        energy = discrete_energy(field, params)
        res = max_residual(field, params)
    if not (np.isfinite(energy) and np.isfinite(res)):
        raise Diverged("initial energy or residual is not finite")
    e0 = energy
    trace = SolveTrace(energy_history=[energy])
    trace.residual_history.append(res)
    alpha = cfg.step0
    vol = field.warp.node_volume
    newton = False
    descent = 0
    while res > cfg.tol_residual:
        if trace.iterations >= cfg.max_iters:
            break
        grad = raw_gradient(field, params)
        grad[~free] = 0.0
        if cfg.polish and not newton and (res < cfg.polish_threshold or descent >= cfg.descent_iters):
            newton = True
        direction = None
        if newton:
            direction = _newton_direction(field, params, grad, free)
            trial = 1.0
        if direction is None:
            direction = -energy_gradient(field, params)
            trial = min(2.0 * alpha, 1e6 * cfg.step0)
        slope = float(np.dot(grad, direction))
        step, dE = _line_search(field, params, direction, slope, trial, cfg)
        if step is None and newton:
            # Newton direction rejected: fall back to one descent step
            direction = -energy_gradient(field, params)
            slope = float(np.dot(grad, direction))
            step, dE = _line_search(field, params, direction, slope, min(2.0 * alpha, 1e6 * cfg.step0), cfg)
        if step is None:
            log.info("no energy decrease found at residual %.3e; stopping", res)
            break
        phi = field.phi.copy()
        phi[free] += step * direction[free]
        field = field.with_phi(phi)
        if not np.all(np.isfinite(phi)):
            raise Diverged("non-finite values in the iterate")
        # recompute directly so the record does not drift; the stable increment
        # decides acceptance, and it wins when the two disagree at rounding level
        fresh = discrete_energy(field, params)
        energy = fresh if fresh < energy else energy + dE
        if energy > 1e3 * max(abs(e0), 1e-300):
            raise Diverged(f"energy {energy:.3e} exceeds 1e3 x initial")
        if newton:
            trace.newton_steps += 1
        else:
            alpha = step
            descent += 1
        trace.iterations += 1
        trace.energy_history.append(energy)
        trace.decrements.append(dE)
        res = max_residual(field, params)
        trace.residual_history.append(res)
    trace.final_residual = res
    trace.converged = res <= cfg.tol_residual
    return field, trace


def smooth_perturbation(r, R, amplitude, seed, modes=5):
    """Seeded smooth perturbation, even at the pole and zero at r = R."""
    if amplitude == 0.0:
        return np.zeros_like(r)
    rng = np.random.default_rng(seed)
    coeffs = rng.uniform(-1.0, 1.0, size=modes)
    k = np.arange(1, modes + 1) - 0.5
    pert = np.cos(np.pi * np.outer(np.minimum(r, R), k) / R) @ coeffs
    return amplitude * pert / np.max(np.abs(pert))


@dataclass(frozen=True, eq=False)
class DirichletReport:
    field: RadialField
    trace: SolveTrace
    sigma: float
    sup_deviation: float
    energy: float

    @property
    def converged(self):
        return self.trace.converged


def dirichlet_constant_experiment(warp, params, R=None, c=1.0, perturb_amp=0.1, seed=0, cfg=None):
    """Perturb the constant map c on the ball B_R, relax it with u = c on the sphere.

    ``warp`` must end at R (the geodesic ball is then the whole grid).  c is
    the boundary value +1 or -1 of the scalar profile, i.e. a point of the
    unit sphere in the target.
    """
    R = warp.r_max if R is None else float(R)
    if abs(R - warp.r_max) > 1e-12 * max(1.0, R):
        raise ValueError("the warping table must end at R")
    if abs(abs(c) - 1.0) > 1e-14:
        raise ValueError("the boundary value must lie on the unit sphere")
    sb = sigma_numeric(hessian_spectrum(warp), params.p, r_window=(warp.h, R))
    if not sb.holds_P1:
        raise HypothesisFailed(f"(P1) fails on (0, R]: sigma = {sb.sigma_numeric:.6g}")
    phi0 = c * (1.0 + smooth_perturbation(warp.r, R, perturb_amp, seed))
    phi0[-1] = c
    field0 = RadialField.scalar(warp, phi0, outer_bc="dirichlet")
    field, trace = minimize(field0, params, cfg)
    return DirichletReport(field, trace, sb.sigma_numeric, float(np.max(np.abs(field.phi - c))),
                           float(energy_profile(field, params).total[-1]))


def vortex_solve(warp, params, degree=1, cfg=None):
    """Degree-d equivariant critical point on the disc with phi(0)=0, phi(R)=1."""
    if warp.m != 2 or params.p != 2.0:
        raise HypothesisFailed("vortex_solve needs m = 2 and p = 2")
    scale = params.eps ** (0.5 * params.pot_exponent)
    phi0 = np.tanh(warp.r / scale)
    phi0[-1] = 1.0
    field0 = RadialField.equivariant(warp, phi0, degree, outer_bc="dirichlet")
    return minimize(field0, params, cfg)
