"""Command-line driver: ``pgl-lab {geometry,solve,verify,sweep,report}``.

Exit codes: 0 all checks pass, 1 a verification failed, 2 the solver did
not converge (or diverged), 3 configuration error.  The last line written to
stderr is always ``status=<word> exit=<code> reason="<text>"``.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import logging
from pathlib import Path
import sys

import numpy as np

from . import io
from .config import load_config, parse_override
from .errors import ConfigError, Diverged, HypothesisFailed, PglError, SigmaNotPositive, TailDiverges
from .functional import GLParams, RadialField, energy_profile
from .geometry import (
    CurvatureProfile,
    comparison_check,
    hessian_spectrum,
    p1_quantity,
    sigma_closed_form,
    sigma_numeric,
    solve_warping,
    volume_bound_check,
)
from .solver import SolveConfig, minimize, smooth_perturbation
from .stress import conservation_identity, stokes_check, stress_components
from . import verify as vf

log = logging.getLogger("pgl_lab")

EXIT_OK, EXIT_VERIFY, EXIT_NOT_CONVERGED, EXIT_CONFIG = 0, 1, 2, 3
SUBCOMMANDS = ("geometry", "solve", "verify", "sweep", "report")

# per-cell result columns of index.csv, in order
RESULT_KEYS = ("status", "exit_code", "converged", "iterations", "final_residual", "energy",
               "sigma", "monotonicity", "worst_drop", "vanishing", "growth", "c_of_u",
               "p2_satisfied_from", "liouville", "liouville_reason", "identity_max", "stokes_rel")


@dataclass
class Outcome:
    code: int = EXIT_OK
    status: str = "ok"
    reason: str = "all checks passed"
    results: dict = field(default_factory=dict)

    def fail(self, code, status, reason):
        # keep the most severe failure
        if code > self.code or self.code == EXIT_OK:
            self.code, self.status, self.reason = code, status, reason


# ---------------------------------------------------------------- builders


def build_profile(g):
    kind = g["kind"]
    if kind == "euclidean":
        return CurvatureProfile.euclidean()
    if kind == "constant":
        return CurvatureProfile.constant(g["K"])
    if kind == "pinched":
        return CurvatureProfile.pinched(g["alpha"], g["beta"], g["envelope"])
    if kind == "power_decay":
        return CurvatureProfile.power_decay(g["A"], g["B"], g["decay"], g["envelope"])
    if kind == "asymptotically_flat":
        return CurvatureProfile.asymptotically_flat(g["a"], g["b"], g["envelope"])
    if kind == "table":
        if not g["table_file"]:
            raise ConfigError("geometry.kind = table needs geometry.table_file (columns r,K)")
        try:
            cols = io.read_csv(g["table_file"])
        except OSError as exc:
            raise ConfigError(f"cannot read table_file: {exc}") from None
        return CurvatureProfile.table(cols["r"], cols["K"])
    raise ConfigError(f"unknown geometry.kind {kind!r}")


def _case(g):
    return None if g["case"] in ("", "auto") else g["case"]


def build_params(cfg):
    fn = cfg["functional"]
    return GLParams(p=fn["p"], eps=fn["eps"], n_target=fn["n_target"],
                    pot_exponent=fn["pot_exponent"], delta=fn["delta"])


def build_solve_config(cfg):
    s = cfg["solver"]
    return SolveConfig(**s)


def build_field(cfg, warp, params):
    fd = cfg["field"]
    value = fd["value"]
    init = fd["init"]
    if init == "constant":
        phi = np.full(warp.r.shape, value)
    elif init == "perturbed":
        phi = value * (1.0 + smooth_perturbation(warp.r, warp.r_max, fd["perturb_amp"], cfg["solver"]["seed"]))
    elif init == "tanh":
        phi = value * np.tanh(warp.r / params.eps ** (0.5 * params.pot_exponent))
    elif init == "file":
        if not fd["file"]:
            raise ConfigError("field.init = file needs field.file")
        try:
            phi = io.read_csv(fd["file"])["phi"]
        except OSError as exc:
            raise ConfigError(f"cannot read field file: {exc}") from None
        if phi.shape != warp.r.shape:
            raise ConfigError("field file does not match the grid")
    else:
        raise ConfigError(f"unknown field.init {init!r}")
    if fd["outer_bc"] == "dirichlet" and init != "file":
        phi[-1] = value
    if fd["ansatz"] == "equivariant":
        return RadialField.equivariant(warp, phi, fd["degree"], outer_bc=fd["outer_bc"])
    if fd["ansatz"] != "scalar":
        raise ConfigError(f"unknown field.ansatz {fd['ansatz']!r}")
    return RadialField.scalar(warp, phi, outer_bc=fd["outer_bc"])


def build_all(cfg):
    """Everything that a bad config can break, with errors mapped to ConfigError."""
    g = cfg["geometry"]
    try:
        profile = build_profile(g)
        warp = solve_warping(profile, g["r_max"], g["n_steps"], m=g["m"])
        params = build_params(cfg)
        scfg = build_solve_config(cfg)
        fld = build_field(cfg, warp, params)
    except ConfigError:
        raise
    except (ValueError, PglError) as exc:
        raise ConfigError(str(exc)) from None
    return profile, warp, params, scfg, fld


# ------------------------------------------------------------- subcommands


def _write_text(path, lines):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _echo_config(cfg, out):
    Path(out).mkdir(parents=True, exist_ok=True)
    (Path(out) / "config.ini").write_text(cfg.to_ini(), encoding="utf-8")


def _sigma_bound(cfg, warp, profile, params):
    spec = hessian_spectrum(warp)
    if cfg["verify"]["sigma_source"] == "closed":
        try:
            return sigma_closed_form(profile, warp.m, params.p, case=_case(cfg["geometry"]))
        except HypothesisFailed:
            return None
    if cfg["verify"]["sigma_source"] != "numeric":
        raise ConfigError("verify.sigma_source must be numeric or closed")
    return sigma_numeric(spec, params.p, profile=profile, case=_case(cfg["geometry"]))


def cmd_geometry(cfg, out):
    profile, warp, params, _, _ = build_all(cfg)
    outcome = Outcome()
    spec = hessian_spectrum(warp)
    sb = sigma_numeric(spec, params.p, profile=profile, case=_case(cfg["geometry"]))
    if cfg["output"]["csv"]:
        warp.to_csv(Path(out) / "warping.csv")
        io.write_csv(Path(out) / "spectrum.csv", {
            "r": warp.r, "lambda_rad": np.full(warp.r.shape, spec.lambda_rad),
            "lambda_tan": spec.lambda_tan, "p1": p1_quantity(spec, params.p)})
        io.write_rows(Path(out) / "sigma.csv", ["key", "value"], [
            ("sigma_numeric", sb.sigma_numeric), ("sigma_closed", sb.sigma_closed),
            ("case", sb.case_id or ""), ("holds_P1", sb.holds_P1), ("r_argmin", sb.r_argmin)])
    lines = [f"geometry: kind={profile.kind} m={warp.m} r_max={warp.r_max:.17g} n_steps={warp.n_steps}",
             f"sigma: numeric={sb.sigma_numeric:.17g} closed={io.format_value(sb.sigma_closed)} "
             f"case={sb.case_id or 'none'} holds_P1={str(sb.holds_P1).lower()}"]
    try:
        comp = comparison_check(warp, profile, p=params.p, case=_case(cfg["geometry"]), raise_on_violation=False)
        ok = comp.worst_slack >= -1e-8
        lines.append(f"comparison: {'pass' if ok else 'FAIL'} case={comp.case_id} worst_slack={comp.worst_slack:.17g}")
        if not ok:
            outcome.fail(EXIT_VERIFY, "verification_failed", "comparison bound violated")
        vol = volume_bound_check(warp, profile, case=_case(cfg["geometry"]), raise_on_violation=False)
        ok = vol.worst_slack >= -1e-8
        lines.append(f"volume_bound: {'pass' if ok else 'FAIL'} case={vol.case_id} worst_slack={vol.worst_slack:.17g}")
        if not ok:
            outcome.fail(EXIT_VERIFY, "verification_failed", "volume bound violated")
    except (HypothesisFailed, ValueError) as exc:
        lines.append(f"comparison: inapplicable ({exc})")
    _write_text(Path(out) / "reports.txt", lines)
    outcome.results.update(sigma=sb.sigma, status=outcome.status, exit_code=outcome.code)
    return outcome


def _solve(cfg, out):
    profile, warp, params, scfg, fld0 = build_all(cfg)
    outcome = Outcome()
    try:
        fld, trace = minimize(fld0, params, scfg)
    except Diverged as exc:
        outcome.fail(EXIT_NOT_CONVERGED, "diverged", str(exc))
        return outcome, profile, warp, params, None, None
    prof = energy_profile(fld, params)
    if cfg["output"]["csv"]:
        warp.to_csv(Path(out) / "warping.csv")
        fld.to_csv(Path(out) / "field.csv")
        prof.to_csv(Path(out) / "energy.csv")
        stress_components(fld, params).to_csv(Path(out) / "stress.csv", warp)
        n = len(trace.energy_history)
        io.write_csv(Path(out) / "trace.csv", {
            "iteration": range(n), "energy": trace.energy_history,
            "decrement": [0.0] + list(trace.decrements), "residual": trace.residual_history})
    outcome.results.update(converged=trace.converged, iterations=trace.iterations,
                           final_residual=trace.final_residual, energy=float(prof.total[-1]))
    if not trace.converged:
        outcome.fail(EXIT_NOT_CONVERGED, "not_converged",
                     f"residual {trace.final_residual:.3e} > tol after {trace.iterations} iterations")
    return outcome, profile, warp, params, fld, trace


def _solve_lines(outcome, trace):
    if trace is None:
        return [f"solve: diverged ({outcome.reason})"]
    return [f"solve: {trace.status} iterations={trace.iterations} newton_steps={trace.newton_steps} "
            f"final_residual={trace.final_residual:.17g} energy={outcome.results['energy']:.17g}"]


def cmd_solve(cfg, out):
    outcome, *_, trace = _solve(cfg, out)
    _write_text(Path(out) / "reports.txt", _solve_lines(outcome, trace))
    outcome.results.update(status=outcome.status, exit_code=outcome.code)
    return outcome


def cmd_verify(cfg, out):
    outcome, profile, warp, params, fld, trace = _solve(cfg, out)
    lines = _solve_lines(outcome, trace)
    if fld is None:
        _write_text(Path(out) / "reports.txt", lines)
        outcome.results.update(status=outcome.status, exit_code=outcome.code)
        return outcome
    v = cfg["verify"]
    res = outcome.results
    csv = cfg["output"]["csv"]
    prof = energy_profile(fld, params)
    sb = _sigma_bound(cfg, warp, profile, params)
    sigma = sb.sigma if sb is not None else None
    res["sigma"] = sigma
    lines.append(f"sigma: {io.format_value(sigma)} source={v['sigma_source']}")

    def failed(name, reason):
        outcome.fail(EXIT_VERIFY, "verification_failed", f"{name}: {reason}")

    try:
        mono = vf.monotonicity_check(prof, sigma if sigma is not None else 0.0, v["rho_min"],
                                     v["tol_monotone"], R0=v["annulus_R0"])
        lines.append(mono.summary())
        res.update(monotonicity="pass" if mono.passed else "fail", worst_drop=mono.worst_drop)
        if csv:
            mono.to_csv(Path(out) / "monotonicity.csv")
        if not mono.passed:
            failed("monotonicity", f"worst_drop={mono.worst_drop:.3e}")
        van = vf.vanishing_check(prof, sigma, field=fld, params=params,
                                 tol_const=v["tol_const"], crit_tol=v["crit_tol"])
        lines.append(van.summary())
        res["vanishing"] = "consistent" if van.consistent else "inconsistent"
        if not van.consistent:
            failed("vanishing", van.reason)
        gr = vf.growth_check(prof, sigma, v["R0"], field=fld)
        lines.append(gr.summary())
        res.update(growth="pass" if gr.passed else "fail", c_of_u=gr.c_of_u)
        if csv:
            gr.to_csv(Path(out) / "growth.csv")
        if not gr.passed:
            failed("growth", f"c_of_u={gr.c_of_u:.3e}")
    except SigmaNotPositive as exc:
        lines.append(f"monotonicity: inapplicable ({exc})")
        res.update(monotonicity="inapplicable", vanishing="inapplicable", growth="inapplicable")
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    sig_t = v["sigma_tilde"]
    if sig_t is None and sigma is not None and sigma > 0:
        sig_t = 0.5 * sigma
    if sig_t is not None and sigma is not None and 0 < sig_t < sigma:
        try:
            p2 = vf.p2_evaluate(fld, vf.default_target_point(fld), sig_t, sigma=sigma,
                                growth_exponent=cfg["geometry"]["growth_exponent"])
            lines.append(p2.summary())
            res["p2_satisfied_from"] = p2.satisfied_from
            if csv:
                p2.to_csv(Path(out) / "p2.csv")
        except TailDiverges as exc:
            lines.append(f"p2: inapplicable ({exc})")
    else:
        lines.append("p2: inapplicable (needs 0 < sigma_tilde < sigma)")

    try:
        sd = vf.slow_divergence_check(warp, prof, v["psi"], v["R1"])
        lines.append(sd.summary())
        if csv:
            sd.to_csv(Path(out) / "slow_divergence.csv")
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    lv = vf.liouville_consistency(fld, params, sigma if sigma is not None else 0.0,
                                  sig_t if sig_t is not None else 0.0,
                                  tol_const=v["tol_const"], crit_tol=v["crit_tol"],
                                  growth_exponent=cfg["geometry"]["growth_exponent"])
    lines.append(lv.summary())
    res.update(liouville=lv.verdict, liouville_reason=lv.reason)
    if lv.verdict == vf.INCONSISTENT:
        failed("liouville", lv.reason)

    ident = conservation_identity(fld, params, tol=v["identity_tol"], r_min=v["identity_r_min"])
    lines.append(f"conservation_identity: {'pass' if ident.verdict else 'FAIL'} "
                 f"max_residual={ident.max_residual:.17g} tol={ident.tol:g}")
    res["identity_max"] = ident.max_residual
    if not ident.verdict:
        failed("conservation_identity", f"max_residual={ident.max_residual:.3e}")

    st = stokes_check(fld, params, warp.r_max, tol=v["stokes_tol"])
    lines.append(f"stokes: {'pass' if st.verdict else 'FAIL'} lhs={st.lhs:.17g} rhs={st.rhs:.17g} "
                 f"rel={st.max_residual:.17g}")
    res["stokes_rel"] = st.max_residual
    if not st.verdict:
        failed("stokes", f"rel={st.max_residual:.3e}")

    _write_text(Path(out) / "reports.txt", lines)
    res.update(status=outcome.status, exit_code=outcome.code)
    return outcome


COMMANDS = {"geometry": cmd_geometry, "solve": cmd_solve, "verify": cmd_verify}


def _run_cell(args):
    """Worker for one sweep cell; runs in a separate process."""
    sub, ini_text, cell_overrides, cli_overrides, out = args
    try:
        cfg = load_config(text=ini_text, overrides=list(cell_overrides) + list(cli_overrides))
        _echo_config(cfg, out)
        outcome = COMMANDS[sub](cfg, out)
    except ConfigError as exc:
        outcome = Outcome(EXIT_CONFIG, "config_error", str(exc))
        outcome.results.update(status=outcome.status, exit_code=outcome.code)
    return outcome.code, outcome.status, outcome.reason, outcome.results


def cmd_sweep(cfg, out, jobs=1, cli_overrides=()):
    keys, cells = cfg.sweep_cells()
    if not keys:
        raise ConfigError("sweep needs at least one list in the [sweep] section")
    sub = cfg.sweep_subcommand
    if sub not in COMMANDS:
        raise ConfigError(f"sweep.subcommand must be one of {sorted(COMMANDS)}")
    base = cfg.to_ini()
    width = max(3, len(str(len(cells) - 1)))
    tasks = [(sub, base, cell, cli_overrides, str(Path(out) / f"cell_{i:0{width}d}"))
             for i, cell in enumerate(cells)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, tasks))
    else:
        results = [_run_cell(t) for t in tasks]
    rows = []
    outcome = Outcome()
    for i, ((_, _, cell, _, cell_dir), (code, status, reason, res)) in enumerate(zip(tasks, results)):
        rows.append([i, Path(cell_dir).name] + [v for _, v in cell] + [res.get(k) for k in RESULT_KEYS])
        if code != EXIT_OK:
            outcome.fail(code, status, f"cell {i}: {reason}")
    io.write_rows(Path(out) / "index.csv", ["cell", "dir"] + keys + list(RESULT_KEYS), rows)
    if outcome.code == EXIT_OK:
        outcome.reason = f"{len(cells)} cells passed"
    return outcome


def cmd_report(cfg, out):
    index = Path(out) / "index.csv"
    if not index.exists():
        raise ConfigError(f"no sweep index at {index}")
    cols = io.read_csv(index, numeric=False)
    n = len(cols["cell"])
    rows = []
    for i in range(n):
        lines = (Path(out) / cols["dir"][i] / "reports.txt").read_text(encoding="utf-8").splitlines() \
            if (Path(out) / cols["dir"][i] / "reports.txt").exists() else []
        row = {name: cols[name][i] for name in cols}
        row["report"] = " | ".join(line.split(" caveat:")[0] for line in lines)
        rows.append(row)
    header = list(cols) + ["report"]
    io.write_rows(Path(out) / "summary.csv", header, [[r[h] for h in header] for r in rows])
    counts = {}
    for r in rows:
        key = (r.get("status", ""), r.get("liouville", ""))
        counts[key] = counts.get(key, 0) + 1
    lines = [f"cells: {n}"] + [f"status={s} liouville={lv or 'n/a'}: {c}" for (s, lv), c in sorted(counts.items())]
    _write_text(Path(out) / "summary.txt", lines)
    print("\n".join(lines))
    return Outcome(reason=f"aggregated {n} cells")


# ---------------------------------------------------------------- entry


def run(subcommand, config=None, overrides=(), out=None, jobs=1, seed=None):
    """Run one subcommand and return ``(exit_code, status, reason)``."""
    try:
        if subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {subcommand!r}")
        parsed = [parse_override(o) for o in overrides]
        if seed is not None:
            parsed.append(("solver.seed", str(int(seed))))
        cfg = load_config(config, parsed)
        out = out if out is not None else cfg["output"]["directory"]
        if subcommand == "report":
            outcome = cmd_report(cfg, out)
        else:
            _echo_config(cfg, out)
            if subcommand == "sweep":
                outcome = cmd_sweep(cfg, out, jobs, parsed)
            else:
                outcome = COMMANDS[subcommand](cfg, out)
    except ConfigError as exc:
        outcome = Outcome(EXIT_CONFIG, "config_error", str(exc))
    return outcome.code, outcome.status, outcome.reason


def main(argv=None):
    parser = argparse.ArgumentParser(prog="pgl-lab", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="INI experiment file (defaults are used when omitted)")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE", help="override one config value (repeatable)")
    parser.add_argument("--out", help="output directory (overrides output.directory)")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for sweep")
    parser.add_argument("--seed", type=int, help="overrides solver.seed")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    code, status, reason = run(args.subcommand, args.config, args.overrides, args.out,
                               max(1, args.jobs), args.seed)
    reason = reason.replace('"', "'").replace("\n", " ")
    print(f'status={status} exit={code} reason="{reason}"', file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
