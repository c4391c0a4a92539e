"""Stress-energy tensor of a radial field and its integral identities.

Under both ansaetze the tensor is diagonal in the frame (d/dr, sphere):

    S = e g - q u*h,   s_rr = e - q phi'^2,   s_tan = e - q (u*h)_tan

with e the full energy density and q = |du|^(p-2) (regularized).  All
identities use the vector field X = r d/dr.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from . import io
from .functional import el_residual, energy_density, gradient_norm_sq, radial_derivative
from .geometry import hessian_spectrum, p1_quantity


@dataclass(frozen=True, eq=False)
class StressField:
    r: np.ndarray
    s_rr: np.ndarray
    s_tan: np.ndarray
    density: np.ndarray
    q: np.ndarray
    grad_sq: np.ndarray
    phi: np.ndarray = None
    degree: int = 0

    def trace(self, m):
        return self.s_rr + (m - 1) * self.s_tan

    def to_csv(self, path, warp):
        return io.write_csv(path, {"r": self.r, "s_rr": self.s_rr, "s_tan": self.s_tan,
                                   "div_s": div_stress(self, warp)})


@dataclass(frozen=True, eq=False)
class IdentityReport:
    max_residual: float
    verdict: bool
    tol: float
    residual: np.ndarray = None
    grid_order: float = None
    lhs: float = None
    rhs: float = None


def stress_components(field, params):
    w = gradient_norm_sq(field)
    e = params.kinetic(w) + params.potential(field.phi)
    q = params.q(w)
    dphi = radial_derivative(field)
    s_rr = e - q * dphi**2
    if field.ansatz == "equivariant" and field.degree != 0:
        tan = w - dphi**2
        s_tan = e - q * tan
    else:
        s_tan = e.copy()
    degree = field.degree if field.ansatz == "equivariant" else 0
    return StressField(field.warp.r, s_rr, s_tan, e, q, w, field.phi.copy(), degree)


def div_stress(stress, warp):
    """(div S)(d/dr) = s_rr' + (m-1)(f'/f)(s_rr - s_tan).

    At the pole the curvature term is taken as its limit 0, which holds for
    fields smooth at the pole (s_rr - s_tan vanishes to second order).  For
    equivariant fields of degree d the difference is -q (phi'^2 - d^2 phi^2/f^2);
    writing phi' - |d| phi/f = f^|d| (phi/f^|d|)' removes the 1/f factor, so
    the term keeps second-order accuracy next to the pole.
    """
    ds = np.gradient(stress.s_rr, warp.h, edge_order=2)
    geo = np.zeros_like(ds)
    if stress.degree != 0 and stress.phi is not None:
        geo[1:] = _equivariant_geometric_term(stress, warp)[1:]
    else:
        geo[1:] = (warp.m - 1) * warp.dlogf[1:] * (stress.s_rr[1:] - stress.s_tan[1:])
    return ds + geo


def _equivariant_geometric_term(stress, warp):
    k = abs(stress.degree)
    phi, f = stress.phi, warp.f
    g = np.empty_like(phi)
    g[1:] = phi[1:] / f[1:] ** k
    # g is even in r: fit a + b r^2 through the first two nodes
    g[0] = (4.0 * g[1] - g[2]) / 3.0
    dg = np.gradient(g, warp.h, edge_order=2)
    dg[0] = 0.0
    dphi = np.gradient(phi, warp.h, edge_order=2)
    plus = np.empty_like(phi)
    plus[1:] = dphi[1:] + k * phi[1:] / f[1:]
    plus[0] = 2.0 * dphi[0]
    return -stress.q * plus * warp.fp * f ** (k - 1) * dg


def hessian_pairing(stress, warp):
    """1/2 <S, Hess r^2> = s_rr + (m-1) (r f'/f) s_tan per node."""
    return stress.s_rr + (warp.m - 1) * warp.r_dlogf * stress.s_tan


def monotonicity_integrand_bound(field, params):
    """1/2 (sum lambda - p lambda_max) * e, the lower bound for the pairing."""
    spec = hessian_spectrum(field.warp)
    return p1_quantity(spec, params.p) * energy_density(field, params)


def _identity_residual(field, params, r_min=0.0):
    stress = stress_components(field, params)
    div = div_stress(stress, field.warp)
    res = div + el_residual(field, params) * radial_derivative(field)
    mask = field.free_mask.copy()
    mask[-1] = False
    mask &= field.warp.r >= r_min
    return res, mask


def conservation_identity(field, params, fine=None, tol=1e-4, r_min=0.0):
    """Check (div S)(d/dr) = -<L(u), du(d/dr)> nodewise.

    The residual is evaluated at every node where L is defined (free nodes
    other than the outer boundary) with r >= r_min.  ``fine`` is the same
    field sampled on a refined grid; when given, the observed convergence
    order is reported.

    The nodal error is O(h^2) at every fixed r > 0.  When the third
    derivative of phi does not vanish at the pole (odd equivariant
    profiles) it behaves like h^2/r on the first few nodes, so the max over
    all nodes is only O(h); ``r_min`` excludes that layer.
    """
    res, mask = _identity_residual(field, params, r_min)
    worst = float(np.max(np.abs(res[mask]))) if np.any(mask) else 0.0
    order = None
    if fine is not None:
        res_f, mask_f = _identity_residual(fine, params, r_min)
        worst_f = float(np.max(np.abs(res_f[mask_f])))
        if worst > 0 and worst_f > 0:
            order = float(np.log(worst / worst_f) / np.log(field.warp.h / fine.warp.h))
    out = np.where(mask, res, 0.0)
    return IdentityReport(worst, worst <= tol, tol, out, order)


def conservation_law(field, params, tol, r_min=0.0):
    """max |(div S)(d/dr)| over the nodes where the identity is checked."""
    stress = stress_components(field, params)
    div = div_stress(stress, field.warp)
    _, mask = _identity_residual(field, params, r_min)
    worst = float(np.max(np.abs(div[mask]))) if np.any(mask) else 0.0
    return IdentityReport(worst, worst <= tol, tol, np.where(mask, div, 0.0))


ENERGY_FLOOR = 1e-10


def stokes_check(field, params, R, tol=1e-4):
    """Compare both sides of the integral formula on B_R with X = r d/dr.

    LHS = R s_rr(R) area(R);
    RHS = int_0^R [1/2 <S, Hess r^2> + r (div S)(d/dr)] area dr (composite Simpson).
    The reported discrepancy is |LHS - RHS| / max(|LHS|, |RHS|, ENERGY_FLOOR).
    """
    warp = field.warp
    k = int(np.argmin(np.abs(warp.r - R)))
    if abs(warp.r[k] - R) > 1e-9 * max(1.0, warp.r_max) or k == 0:
        raise ValueError(f"R={R} must be a positive grid node")
    stress = stress_components(field, params)
    integrand = (hessian_pairing(stress, warp) + warp.r * div_stress(stress, warp)) * warp.area
    lhs = float(warp.r[k] * stress.s_rr[k] * warp.area[k])
    rhs = float(simpson(integrand[:k + 1], x=warp.r[:k + 1]))
    # energies below ENERGY_FLOOR count as zero (constant fields)
    scale = max(abs(lhs), abs(rhs), ENERGY_FLOOR)
    rel = abs(lhs - rhs) / scale
    return IdentityReport(rel, rel <= tol, tol, lhs=lhs, rhs=rhs)
