"""Discretized maps and the p-Ginzburg-Landau energy.

Maps ``u: M -> R^n`` are restricted to two ansaetze on a warped product:

* scalar:       u(x) = phi(r) e        for a fixed unit vector e,
* equivariant:  u(r, theta) = phi(r) (cos d theta, sin d theta)   (m = n = 2).

The discrete energy puts the radial kinetic term on cells (one slope per
cell, midpoint-rule weight) and the potential and angular terms on nodes
(dual-cell volume).  Its nodal gradient divided by the dual volume is the
flux-form Euler-Lagrange operator, so discrete critical points are exactly
the zeros of :func:`el_residual`.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from . import io
from .errors import UnsupportedAnsatz

ANSATZE = ("scalar", "equivariant")
OUTER_BC = ("free", "dirichlet")


@dataclass(frozen=True)
class GLParams:
    """Constants of the functional.

    The kinetic term is regularized as ``((|du|^2 + delta^2)^(p/2) - delta^p) / p``,
    whose derivative in |du|^2 is ``q/2`` with ``q = (|du|^2 + delta^2)^((p-2)/2)``.
    For p = 2 the regularization is exact and delta is ignored.
    """

    p: float = 2.0
    eps: float = 1.0
    n_target: int = 2
    pot_exponent: float = None
    delta: float = 1e-6

    def __post_init__(self):
        if not self.p >= 1.0:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not self.eps > 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if int(self.n_target) != self.n_target or self.n_target < 1:
            raise ValueError(f"n_target must be a positive integer, got {self.n_target}")
        if not self.delta >= 0.0:
            raise ValueError("delta must be >= 0")
        if self.delta == 0.0 and self.p != 2.0:
            raise ValueError("delta = 0 is only permitted for p = 2")
        if self.pot_exponent is None:
            object.__setattr__(self, "pot_exponent", self.n_target)

    @property
    def pot_scale(self):
        """eps ** pot_exponent, the denominator of the penalty."""
        return self.eps ** self.pot_exponent

    def kinetic(self, w):
        w = np.asarray(w, dtype=float)
        if self.p == 2.0:
            return 0.5 * w
        d2 = self.delta**2
        return self.delta**self.p * np.expm1(0.5 * self.p * np.log1p(w / d2)) / self.p

    def q(self, w):
        w = np.asarray(w, dtype=float)
        if self.p == 2.0:
            return np.ones_like(w)
        return (w + self.delta**2) ** (0.5 * (self.p - 2.0))

    def dq(self, w):
        w = np.asarray(w, dtype=float)
        if self.p == 2.0:
            return np.zeros_like(w)
        return 0.5 * (self.p - 2.0) * (w + self.delta**2) ** (0.5 * (self.p - 4.0))

    def potential(self, phi):
        phi = np.asarray(phi, dtype=float)
        return (1.0 - phi * phi) ** 2 / (4.0 * self.pot_scale)


@dataclass(frozen=True, eq=False)
class RadialField:
    """A map under the scalar or equivariant ansatz, sampled on ``warp.r``.

    The inner boundary is natural (Neumann) except for equivariant fields of
    nonzero degree, which are pinned to 0 at the pole.  The outer boundary is
    either free (natural) or Dirichlet with value ``phi[-1]``.
    """

    warp: object
    phi: np.ndarray
    ansatz: str = "scalar"
    degree: int = 0
    direction: tuple = None
    outer_bc: str = "free"

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        object.__setattr__(self, "phi", phi)
        if self.ansatz not in ANSATZE:
            raise ValueError(f"unknown ansatz {self.ansatz!r}")
        if self.outer_bc not in OUTER_BC:
            raise ValueError(f"unknown outer boundary condition {self.outer_bc!r}")
        if phi.shape != self.warp.r.shape:
            raise ValueError("phi must have one value per grid node")
        if not np.all(np.isfinite(phi)):
            raise ValueError("phi must be finite at every node")
        if self.ansatz == "equivariant":
            if self.warp.m != 2:
                raise ValueError("equivariant ansatz requires m = 2")
            if self.degree != 0 and phi[0] != 0.0:
                raise ValueError("equivariant field of nonzero degree needs phi(0) = 0")
        if self.direction is None:
            object.__setattr__(self, "direction", (1.0,))
        e = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(e) - 1.0) > 1e-12:
            raise ValueError("direction must be a unit vector")

    @classmethod
    def scalar(cls, warp, phi, outer_bc="free", direction=None):
        phi = np.broadcast_to(np.asarray(phi, dtype=float), warp.r.shape)
        return cls(warp, phi, "scalar", 0, direction, outer_bc)

    @classmethod
    def equivariant(cls, warp, phi, degree, outer_bc="dirichlet"):
        phi = np.array(np.broadcast_to(np.asarray(phi, dtype=float), warp.r.shape))
        if degree != 0:
            phi[0] = 0.0
        return cls(warp, phi, "equivariant", int(degree), (1.0, 0.0), outer_bc)

    def with_phi(self, phi):
        return replace(self, phi=phi)

    @property
    def pinned_pole(self):
        return self.ansatz == "equivariant" and self.degree != 0

    @property
    def free_mask(self):
        mask = np.ones(self.phi.shape, dtype=bool)
        if self.pinned_pole:
            mask[0] = False
        if self.outer_bc == "dirichlet":
            mask[-1] = False
        return mask

    def to_csv(self, path):
        return io.write_csv(path, {"r": self.warp.r, "phi": self.phi})

    @classmethod
    def from_csv(cls, path, warp, **kwargs):
        cols = io.read_csv(path)
        if cols["r"].shape != warp.r.shape or np.max(np.abs(cols["r"] - warp.r)) > 1e-12 * max(1.0, warp.r_max):
            raise ValueError(f"grid in {path} does not match the warping table")
        return cls(warp, cols["phi"], **kwargs)


@dataclass(frozen=True, eq=False)
class EnergyProfile:
    """Cumulative ball energies E(B_rho) at the grid radii."""

    radii: np.ndarray
    kinetic: np.ndarray
    potential: np.ndarray

    @property
    def total(self):
        return self.kinetic + self.potential

    def at(self, rho):
        return float(np.interp(rho, self.radii, self.total))

    def to_csv(self, path):
        return io.write_csv(path, {"rho": self.radii, "kinetic": self.kinetic,
                                   "potential": self.potential, "total": self.total})


def _check_supported(field, params):
    if field.ansatz == "equivariant":
        if params.p != 2.0:
            raise UnsupportedAnsatz("equivariant ansatz is implemented for p = 2 only")
        if params.n_target != 2:
            raise UnsupportedAnsatz("equivariant ansatz maps into R^2 (n_target = 2)")


def radial_derivative(field):
    """phi' at the nodes: centered differences, second-order one-sided at the ends."""
    return np.gradient(field.phi, field.warp.h, edge_order=2)


def gradient_norm_sq(field):
    """|du|^2 per node."""
    dphi = radial_derivative(field)
    w = dphi**2
    if field.ansatz == "equivariant" and field.degree != 0:
        ang = np.empty_like(w)
        ang[1:] = (field.phi[1:] / field.warp.f[1:]) ** 2
        # phi/f -> phi'(0) at the pole
        ang[0] = dphi[0] ** 2
        w = w + field.degree**2 * ang
    return w


def energy_density(field, params):
    """Nodal energy density from the nodal |du|^2 (used by the stress module)."""
    return params.kinetic(gradient_norm_sq(field)) + params.potential(field.phi)


def cell_slopes(field):
    return np.diff(field.phi) / field.warp.h


def _face_weight(warp):
    """h * area(r_{i+1/2}): midpoint-rule volume of each cell for the kinetic term."""
    return warp.h * warp.area_mid


def _angular_coeff(field):
    """d^2 / f^2 per node for the equivariant angular term (0 at the pole)."""
    c = np.zeros_like(field.phi)
    if field.ansatz == "equivariant" and field.degree != 0:
        c[1:] = field.degree**2 / field.warp.f[1:] ** 2
    return c


def energy_profile(field, params):
    """Cumulative discrete energy of the balls B_rho, rho on the grid."""
    _check_supported(field, params)
    warp = field.warp
    left, right = warp.half_volumes
    s = cell_slopes(field)
    kin_cells = _face_weight(warp) * params.kinetic(s * s)
    ang = 0.5 * _angular_coeff(field) * field.phi**2
    pot = params.potential(field.phi)

    def cumulate(node_density):
        inner = np.cumsum(node_density[:-1] * (left[:-1] + right[:-1]))
        return np.concatenate([[0.0], inner]) + left * node_density

    kinetic = np.concatenate([[0.0], np.cumsum(kin_cells)]) + cumulate(ang)
    return EnergyProfile(warp.r.copy(), kinetic, cumulate(pot))


def discrete_energy(field, params):
    _check_supported(field, params)
    warp = field.warp
    s = cell_slopes(field)
    parts = np.concatenate([
        _face_weight(warp) * params.kinetic(s * s),
        warp.node_volume * (params.potential(field.phi)
                            + 0.5 * _angular_coeff(field) * field.phi**2),
    ])
    return math.fsum(parts)


def _fluxes(field, params):
    """Flux (cell volume / h) q s on each cell."""
    s = cell_slopes(field)
    return _face_weight(field.warp) / field.warp.h * params.q(s * s) * s


def raw_gradient(field, params):
    """Partial derivatives of the discrete energy with respect to nodal phi values."""
    _check_supported(field, params)
    flux = _fluxes(field, params)
    g = np.zeros_like(field.phi)
    g[:-1] -= flux
    g[1:] += flux
    phi = field.phi
    g += field.warp.node_volume * (-(1.0 - phi * phi) * phi / params.pot_scale
                                   + _angular_coeff(field) * phi)
    return g


def el_residual(field, params):
    """Flux-form Euler-Lagrange operator L(phi) per node.

    Interior nodes (and the natural pole) carry the discretized
    ``(q phi')' + (m-1)(f'/f) q phi' + eps^-pot (1-phi^2) phi [- d^2 phi / f^2]``;
    a free outer node carries the natural boundary defect (the same operator
    with zero outgoing flux); pinned nodes carry 0.
    """
    res = -raw_gradient(field, params) / field.warp.node_volume
    res[~field.free_mask] = 0.0
    return res


def energy_gradient(field, params):
    """Exact gradient of the discrete energy scaled by inverse dual volumes (= -L(phi))."""
    g = raw_gradient(field, params) / field.warp.node_volume
    g[~field.free_mask] = 0.0
    return g


def energy_increment(field, params, dphi):
    """E(phi + dphi) - E(phi), evaluated without cancellation against E itself."""
    _check_supported(field, params)
    warp = field.warp
    phi = field.phi
    s = cell_slopes(field)
    ds = np.diff(dphi) / warp.h
    dw = ds * (2.0 * s + ds)
    if params.p == 2.0:
        dk = 0.5 * dw
    else:
        t0 = s * s + params.delta**2
        dk = t0 ** (0.5 * params.p) * np.expm1(0.5 * params.p * np.log1p(dw / t0)) / params.p
    a_minus_b = -dphi * (2.0 * phi + dphi)
    a_plus_b = 2.0 * (1.0 - phi * phi) + a_minus_b
    dpot = a_minus_b * a_plus_b / (4.0 * params.pot_scale)
    dang = 0.5 * _angular_coeff(field) * dphi * (2.0 * phi + dphi)
    return math.fsum(np.concatenate([_face_weight(warp) * dk,
                                     warp.node_volume * (dpot + dang)]))


def energy_hessian(field, params):
    """Tridiagonal Hessian of the discrete energy as ``(diag, off)``."""
    _check_supported(field, params)
    warp = field.warp
    s = cell_slopes(field)
    w = s * s
    k = _face_weight(warp) / warp.h**2 * (params.q(w) + 2.0 * w * params.dq(w))
    diag = np.zeros_like(field.phi)
    diag[:-1] += k
    diag[1:] += k
    phi = field.phi
    diag += warp.node_volume * ((3.0 * phi * phi - 1.0) / params.pot_scale + _angular_coeff(field))
    return diag, -k
