"""Checks of the Liouville-type statements on computed fields.

Every check works on a truncated domain.  Statements about r -> infinity
are only probed through analytic tails or trends over the sampled radii,
and each report says so where it matters.
"""

from dataclasses import dataclass, field as dc_field
import math

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import io
from .errors import SigmaNotPositive, TailDiverges
from .functional import el_residual, energy_profile, gradient_norm_sq
from .geometry import SigmaBound, tail_profile

TRIVIAL_ENERGY = 1e-12

CONSISTENT = "CONSISTENT"
INCONSISTENT = "INCONSISTENT"
INAPPLICABLE = "INAPPLICABLE"


def _sigma_value(sigma):
    if isinstance(sigma, SigmaBound):
        return sigma.sigma
    return float(sigma)


def _require_positive(sigma):
    s = _sigma_value(sigma)
    if s is None or not s > 0.0:
        raise SigmaNotPositive(f"sigma = {s}: condition (P1) is unavailable, check is inapplicable")
    return s


# ---------------------------------------------------------------- monotonicity


@dataclass(frozen=True, eq=False)
class MonotonicityReport:
    sigma: float
    radii: np.ndarray
    quotients: np.ndarray
    worst_drop: float
    passed: bool
    tol: float
    trivial: bool = False
    R0: float = None

    def to_csv(self, path):
        return io.write_csv(path, {"rho": self.radii, "quotient": self.quotients})

    def summary(self):
        flag = " (trivial field)" if self.trivial else ""
        return (f"monotonicity: {'pass' if self.passed else 'FAIL'}{flag} sigma={self.sigma:.17g} "
                f"worst_drop={self.worst_drop:.17g} tol={self.tol:g}")


def monotonicity_check(profile, sigma, rho_min=None, tol=1e-4, R0=None):
    """Is Q(rho) = E(rho) / rho^sigma nondecreasing for rho >= rho_min?

    With ``R0`` set, the annulus energy E(B_rho) - E(B_R0) replaces the ball
    energy and only radii beyond R0 are used.  An identically vanishing
    energy passes with the ``trivial`` flag.
    """
    s = _require_positive(sigma)
    radii = np.asarray(profile.radii)
    energy = np.asarray(profile.total, dtype=float)
    if rho_min is None:
        rho_min = radii[1]
    if not rho_min > 0:
        raise ValueError("rho_min must be positive")
    mask = radii >= rho_min * (1.0 - 1e-12)
    if R0 is not None:
        e_R0 = profile.at(R0)
        mask &= radii > R0
        energy = energy - e_R0
    rho, e = radii[mask], energy[mask]
    if rho.size < 2:
        raise ValueError("need at least two radii beyond rho_min")
    q = e / rho**s
    if np.max(np.abs(e)) <= TRIVIAL_ENERGY:
        return MonotonicityReport(s, rho, q, 0.0, True, tol, trivial=True, R0=R0)
    prev, nxt = q[:-1], q[1:]
    ok = prev > 0
    rel = np.where(ok, (nxt - prev) / np.where(ok, prev, 1.0), np.inf)
    worst = float(np.min(rel)) if np.any(ok) else 0.0
    return MonotonicityReport(s, rho, q, worst, worst >= -tol, tol, R0=R0)


# ------------------------------------------------------------------ vanishing


@dataclass(frozen=True)
class VanishingReport:
    sigma: float
    exponent: float
    consistent: bool
    reason: str

    def summary(self):
        exp = "undefined" if self.exponent is None else f"{self.exponent:.17g}"
        return (f"vanishing: {'consistent' if self.consistent else 'INCONSISTENT'} "
                f"exponent={exp} sigma={self.sigma:.17g} ({self.reason})")


def vanishing_check(profile, sigma, margin=0.1, field=None, params=None, tol_const=1e-5, crit_tol=1e-6):
    """Fit the growth exponent of E(B_R) over the outer half of the grid.

    An exponent below sigma - margin for a non-constant critical point would
    contradict the vanishing statement.  Without ``field`` the profile is
    assumed to come from a critical point and non-constancy is read off E > 0.
    """
    s = _require_positive(sigma)
    radii, energy = np.asarray(profile.radii), np.asarray(profile.total)
    if np.max(energy) <= TRIVIAL_ENERGY:
        return VanishingReport(s, None, True, "constant field (E = 0)")
    outer = (radii >= 0.5 * radii[-1]) & (energy > 0)
    slope = float(np.polyfit(np.log(radii[outer]), np.log(energy[outer]), 1)[0])
    if slope >= s - margin:
        return VanishingReport(s, slope, True, "energy grows at least like R^sigma")
    if field is not None:
        if float(np.max(np.sqrt(gradient_norm_sq(field)))) < tol_const:
            return VanishingReport(s, slope, True, "constant field")
        if params is not None and float(np.max(np.abs(el_residual(field, params)))) > crit_tol:
            return VanishingReport(s, slope, True, "not a critical point")
    return VanishingReport(s, slope, False, "non-constant critical point with o(R^sigma) energy")


# --------------------------------------------------------------------- growth


@dataclass(frozen=True, eq=False)
class GrowthReport:
    sigma: float
    R0: float
    c_of_u: float
    passed: bool
    radii: np.ndarray
    ratios: np.ndarray

    def to_csv(self, path):
        return io.write_csv(path, {"R": self.radii, "ratio": self.ratios})

    def summary(self):
        return (f"growth: {'pass' if self.passed else 'FAIL'} sigma={self.sigma:.17g} "
                f"R0={self.R0:.17g} c_of_u={self.c_of_u:.17g}")


def growth_check(profile, sigma, R0=1.0, field=None, sphere_tol=1e-6):
    """c_of_u = min over grid R >= R0 of E(B_R) / R^sigma.

    Passing means c_of_u > 0.  Maps into the unit sphere (| |phi| - 1 | <=
    sphere_tol everywhere) are exempt since their energy may vanish; pass
    ``field`` to let the check detect them.
    """
    s = _require_positive(sigma)
    radii = np.asarray(profile.radii)
    mask = radii >= R0 * (1.0 - 1e-12)
    if not np.any(mask):
        raise ValueError(f"no grid radius >= R0={R0}")
    ratios = np.asarray(profile.total)[mask] / radii[mask] ** s
    c = float(np.min(ratios))
    on_sphere = field is not None and float(np.max(np.abs(np.abs(field.phi) - 1.0))) <= sphere_tol
    return GrowthReport(s, float(R0), c, c > 0.0 or on_sphere, radii[mask], ratios)


# ------------------------------------------------------------------------ (P2)


@dataclass(frozen=True, eq=False)
class P2Report:
    sigma_tilde: float
    radii: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    satisfied_from: float = None

    def __post_init__(self):
        if not self.sigma_tilde > 0:
            raise ValueError("sigma_tilde must be positive")

    @property
    def satisfied(self):
        return self.satisfied_from is not None

    def to_csv(self, path):
        return io.write_csv(path, {"r": self.radii, "lhs": self.lhs, "rhs": self.rhs})

    def summary(self):
        where = "never" if self.satisfied_from is None else f"from r={self.satisfied_from:.17g}"
        return f"p2: sigma_tilde={self.sigma_tilde:.17g} satisfied {where}"


def target_distance_sq(field, P0):
    """max over the sphere r = const of |u - P0|^2, per node."""
    P0 = np.asarray(P0, dtype=float)
    if abs(np.linalg.norm(P0) - 1.0) > 1e-12:
        raise ValueError("P0 must be a unit vector")
    phi = field.phi
    if field.ansatz == "equivariant" and field.degree != 0:
        # u sweeps a full circle of radius |phi|; the farthest point is opposite P0
        return (np.abs(phi) + 1.0) ** 2
    e = np.asarray(field.direction, dtype=float)
    if e.size != P0.size:
        raise ValueError("P0 and the field direction live in different spaces")
    c = float(np.dot(e, P0))
    return (phi - c) ** 2 + max(1.0 - c * c, 0.0)


def p2_evaluate(field, P0, sigma_tilde, warp=None, sigma=None, growth_exponent=1.0):
    """Sample both sides of (P2) at every positive grid radius.

    lhs(r) = max_{|x|=r} |u - P0|^2 and rhs(r) = r^sigma_tilde * int_r^inf ds/area(s).
    ``satisfied_from`` is the first radius after the last violation (0 when
    there is none, None when the outermost radius violates).
    """
    warp = field.warp if warp is None else warp
    if sigma is not None and not sigma_tilde < _sigma_value(sigma):
        raise ValueError(f"sigma_tilde={sigma_tilde} must be below sigma={_sigma_value(sigma)}")
    tail = tail_profile(warp, growth_exponent)
    r = warp.r[1:]
    lhs = target_distance_sq(field, P0)[1:]
    rhs = r**sigma_tilde * tail[1:]
    bad = np.nonzero(lhs > rhs)[0]
    if bad.size == 0:
        start = 0.0
    elif bad[-1] == r.size - 1:
        start = None
    else:
        start = float(r[bad[-1] + 1])
    return P2Report(float(sigma_tilde), r, lhs, rhs, start)


# ---------------------------------------------------------- slow divergence


def make_psi(psi):
    """Resolve 'const', 'log1p', 'power:k' or a callable into (name, function)."""
    if callable(psi):
        return getattr(psi, "__name__", "callable"), psi
    name = str(psi).strip()
    if name == "const":
        return name, lambda r: np.ones_like(np.asarray(r, dtype=float))
    if name == "log1p":
        return name, np.log1p
    if name.startswith("power:"):
        k = float(name.split(":", 1)[1])
        return name, lambda r: np.asarray(r, dtype=float) ** k
    raise ValueError(f"unknown psi {psi!r}; use const, log1p, power:k or a callable")


CAVEAT = ("divergence of int dr/(r psi) at infinity is not decidable numerically; "
          "the verdict extrapolates the trend of the last decade sampled")


@dataclass(frozen=True, eq=False)
class SlowDivergenceReport:
    psi: str
    log_radii: np.ndarray
    log_integral: np.ndarray
    radii: np.ndarray
    weighted_energy: np.ndarray
    log_divergent: bool
    weighted_bounded: bool
    caveat: str = CAVEAT

    def to_csv(self, path):
        return io.write_csv(path, {"R": self.radii, "weighted_energy": self.weighted_energy})

    def summary(self):
        return (f"slow_divergence: psi={self.psi} I(R_far)={self.log_integral[-1]:.17g} "
                f"log_divergent={str(self.log_divergent).lower()} "
                f"weighted_bounded={str(self.weighted_bounded).lower()} caveat: {self.caveat}")


def slow_divergence_check(warp, profile, psi="log1p", R1=1.0, R_far=1e12, threshold=1.0,
                          trend_ratio=0.85, bounded_tol=0.05):
    """Classify the weight psi and the psi-weighted energy.

    I(R) = int_{R1}^R dr / (r psi(r)) is integrated on a logarithmic grid up
    to ``R_far`` (it depends on psi only).  It is called divergent when
    I(R_far) >= threshold and the increment over the last decade is at least
    ``trend_ratio`` times the one before.  W(R) = int_{B_R} e / psi is a
    Stieltjes sum of the ball energies; it is called bounded when its
    increase over the outer half of the grid is at most ``bounded_tol`` of
    its value.
    """
    name, fn = make_psi(psi)
    if not 0 < R1 < R_far:
        raise ValueError("need 0 < R1 < R_far")
    decades = max(2, int(math.ceil(math.log10(R_far / R1))))
    t = np.linspace(math.log(R1), math.log(R_far), 400 * decades + 1)
    rr = np.exp(t)
    vals = 1.0 / np.asarray(fn(rr), dtype=float)
    if np.any(~np.isfinite(vals)) or np.any(vals < 0):
        raise ValueError("psi must be positive on [R1, R_far]")
    I = np.concatenate([[0.0], cumulative_trapezoid(vals, t)])
    last = np.interp(math.log(R_far), t, I) - np.interp(math.log(R_far / 10), t, I)
    prev = np.interp(math.log(R_far / 10), t, I) - np.interp(math.log(R_far / 100), t, I)
    divergent = bool(I[-1] >= threshold and prev > 0 and last >= trend_ratio * prev)

    radii = np.asarray(profile.radii)
    dE = np.diff(profile.total)
    mid = 0.5 * (radii[1:] + radii[:-1])
    with np.errstate(divide="ignore"):
        weights = 1.0 / np.asarray(fn(mid), dtype=float)
    W = np.concatenate([[0.0], np.cumsum(dE * weights)])
    half = int(np.searchsorted(radii, 0.5 * radii[-1]))
    if W[-1] <= TRIVIAL_ENERGY:
        bounded = True
    else:
        bounded = bool(W[-1] - W[half] <= bounded_tol * W[-1])
    return SlowDivergenceReport(name, rr, I, radii, W, divergent, bounded)


# ------------------------------------------------------------- J / G diagnostic


@dataclass(frozen=True, eq=False)
class JGDiagnostic:
    radii: np.ndarray
    G: np.ndarray
    G_prime: np.ndarray
    J: np.ndarray

    def to_csv(self, path):
        return io.write_csv(path, {"R": self.radii, "G": self.G, "G_prime": self.G_prime, "J": self.J})


def jg_diagnostic(field, params, P0, R2=0.0):
    """G(R) = int over B_R minus B_R2 of |du|^p + (1-|u|^2)^2/eps^n, G' and
    J(R) = int over the sphere of radius R of |du|^(p-2) |u - P0|^2.

    Pure diagnostic: the arrays are returned without a verdict.
    """
    warp = field.warp
    prof = energy_profile(field, params)
    # |du|^p/p and (1-|u|^2)^2/(4 eps^n) are scaled by p and 4
    ball = params.p * prof.kinetic + 4.0 * prof.potential
    G = ball - np.interp(R2, prof.radii, ball)
    w = gradient_norm_sq(field)
    dens = params.p * params.kinetic(w) + 4.0 * params.potential(field.phi)
    J = warp.area * params.q(w) * target_distance_sq(field, P0)
    mask = warp.r >= R2
    return JGDiagnostic(warp.r[mask], G[mask], (warp.area * dens)[mask], J[mask])


# ------------------------------------------------------------------ Liouville


@dataclass(frozen=True, eq=False)
class LiouvilleReport:
    verdict: str
    reason: str
    sup_du: float
    residual: float
    q_bound: float = None
    p2: P2Report = dc_field(default=None, repr=False)

    def summary(self):
        q = "n/a" if self.q_bound is None else f"{self.q_bound:.17g}"
        return (f"liouville: {self.verdict} ({self.reason}) sup_du={self.sup_du:.17g} "
                f"residual={self.residual:.17g} q_bound={q}")


def default_target_point(field):
    """The unit vector the scalar profile points to at the outer radius."""
    e = np.asarray(field.direction, dtype=float)
    return e if field.phi[-1] >= 0 else -e


def liouville_consistency(field, params, sigma, sigma_tilde, P0=None, tol_const=1e-5,
                          crit_tol=1e-6, approach_tol=1e-6, growth_exponent=1.0):
    """Composite check of the statement "(P1), bounded |du|^(p-2), u -> P0 and (P2)
    force a critical point to be constant".

    Returns CONSISTENT when the field is constant, INAPPLICABLE (with the
    first hypothesis that fails) when the statement says nothing, and
    INCONSISTENT only for a non-constant critical point meeting every
    hypothesis on the sampled grid.  The |du|^(p-2) bound is the grid
    maximum; a uniform bound at infinity cannot be checked.
    """
    w = gradient_norm_sq(field)
    sup_du = float(np.sqrt(np.max(w)))
    residual = float(np.max(np.abs(el_residual(field, params))))
    if sup_du < tol_const:
        return LiouvilleReport(CONSISTENT, "constant field", sup_du, residual)
    if residual > crit_tol:
        return LiouvilleReport(INAPPLICABLE, "not a critical point", sup_du, residual)
    s = _sigma_value(sigma)
    if s is None or not s > 0:
        return LiouvilleReport(INAPPLICABLE, "(P1) fails", sup_du, residual)
    if not 0 < sigma_tilde < s:
        return LiouvilleReport(INAPPLICABLE, "sigma_tilde outside (0, sigma)", sup_du, residual)
    q_bound = float(np.max(params.q(w)))
    P0 = default_target_point(field) if P0 is None else np.asarray(P0, dtype=float)
    lhs_end = float(target_distance_sq(field, P0)[-1])
    if lhs_end > approach_tol:
        return LiouvilleReport(INAPPLICABLE, "u does not approach P0", sup_du, residual, q_bound)
    try:
        rep = p2_evaluate(field, P0, sigma_tilde, sigma=s, growth_exponent=growth_exponent)
    except TailDiverges:
        return LiouvilleReport(INAPPLICABLE, "tail integral diverges", sup_du, residual, q_bound)
    if not rep.satisfied:
        return LiouvilleReport(INAPPLICABLE, "(P2) not satisfied", sup_du, residual, q_bound, rep)
    return LiouvilleReport(INCONSISTENT, "non-constant critical point meets all hypotheses",
                           sup_du, residual, q_bound, rep)
