"""Where does the monotonicity formula apply, and what does it say?

Run with ``python3 demos/monotonicity_tour.py``.  Prints the (P1) constant
sigma for a few model geometries, then follows the zero map on flat R^3:
its ball energy grows like rho^3, so E(rho)/rho^sigma increases and the
growth lower bound c(u) = pi/3 is attained at R = 1.
"""

import math

from pgl_lab import (
    CurvatureProfile,
    GLParams,
    RadialField,
    energy_profile,
    growth_check,
    hessian_spectrum,
    monotonicity_check,
    sigma_numeric,
    solve_warping,
)

GEOMETRIES = {
    "flat": CurvatureProfile.euclidean(),
    "hyperbolic K=-1": CurvatureProfile.constant(-1.0),
    "pinched -4 <= K <= -1": CurvatureProfile.pinched(2.0, 1.0),
}


def sigma_table():
    print("sigma = inf over r of (sum lambda_i - p lambda_max) / 2")
    print(f"{'geometry':<24}{'m':>3}{'p':>6}{'sigma':>12}")
    for name, prof in GEOMETRIES.items():
        for m in (3, 4):
            spec = hessian_spectrum(solve_warping(prof, 6.0, 600, m=m))
            for p in (1.5, 2.0, 3.0):
                sb = sigma_numeric(spec, p)
                print(f"{name:<24}{m:>3}{p:>6g}{sb.sigma_numeric:>12.5f}")
    print("negative entries mean the monotonicity argument is unavailable there\n")


def zero_map():
    warp = solve_warping(CurvatureProfile.euclidean(), 10.0, 1000, m=3)
    prof = energy_profile(RadialField.scalar(warp, 0.0), GLParams(pot_exponent=3))
    print(f"zero map on R^3: E(B_1) = {prof.at(1.0):.12f}  (pi/3 = {math.pi / 3:.12f})")
    mono = monotonicity_check(prof, 1.0, rho_min=0.1)
    print(mono.summary())
    for rho in (0.5, 1.0, 2.0, 5.0, 10.0):
        print(f"  rho={rho:5.1f}  E/rho = {prof.at(rho) / rho:12.6f}")
    print(growth_check(prof, 1.0, R0=1.0).summary())


if __name__ == "__main__":
    sigma_table()
    zero_map()
