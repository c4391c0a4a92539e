"""A non-constant critical point where the Liouville machinery is silent.

Run with ``python3 demos/vortex_negative_control.py``.  On the plane the
(P1) quantity is identically zero for p = 2, so none of the monotonicity
or Liouville statements apply.  The degree-one vortex is a genuine
non-constant critical point there, and its kinetic energy grows like
pi log R: the energy is infinite, but only barely.
"""

import math

import numpy as np

from pgl_lab import (
    CurvatureProfile,
    GLParams,
    SigmaNotPositive,
    SolveConfig,
    conservation_identity,
    energy_profile,
    hessian_spectrum,
    liouville_consistency,
    monotonicity_check,
    sigma_numeric,
    solve_warping,
    vortex_solve,
)


def main():
    warp = solve_warping(CurvatureProfile.euclidean(), 20.0, 2000, m=2)
    params = GLParams()
    field, trace = vortex_solve(warp, params, degree=1, cfg=SolveConfig(tol_residual=1e-9))
    print(f"vortex: {trace.status} after {trace.iterations} steps "
          f"({trace.newton_steps} Newton), residual {trace.final_residual:.2e}")
    for r in (0.5, 1.0, 2.0, 5.0, 10.0):
        print(f"  phi({r:4.1f}) = {np.interp(r, warp.r, field.phi):.8f}")

    sb = sigma_numeric(hessian_spectrum(warp), 2.0)
    print(f"sigma on the plane for p = 2: {sb.sigma_numeric:.2e}")
    prof = energy_profile(field, params)
    try:
        monotonicity_check(prof, sb)
    except SigmaNotPositive as exc:
        print(f"monotonicity check refuses: {exc}")
    print(liouville_consistency(field, params, sb, 0.5).summary())

    mask = warp.r >= 10.0
    slope = np.polyfit(np.log(warp.r[mask]), prof.kinetic[mask], 1)[0]
    print(f"kinetic energy slope against log R on [10, 20]: {slope:.4f} (pi = {math.pi:.4f})")
    ident = conservation_identity(field, params, r_min=0.5)
    print(f"div S + <L(u), du> away from the core: max {ident.max_residual:.2e}")


if __name__ == "__main__":
    main()
