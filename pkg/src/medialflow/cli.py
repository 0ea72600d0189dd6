"""Command-line surface: scene in, CSV/JSON/SVG out, one-shot verification.

Exit codes: 0 success, 1 input error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .distance import DomainError, superdifferential
from .flow import (
    derivative_identity_error,
    check_semiconcavity_pairs,
    integrate,
    singular_flag_monotone,
    verify_speed_bound,
)
from .mintime import check_cosh_semiconcavity, hjb_residual, min_time
from .sampling import interior_points
from .scene import Scene, SceneValidationError, diameter, load_scene
from .topology import check_retraction, extract_skeleton, skeleton_to_csv

MONO_TOL_FACTOR = 1e-9


def _parse_point(text: str) -> np.ndarray:
    try:
        sx, sy = text.split(",")
        return np.array([float(sx), float(sy)])
    except ValueError as exc:
        raise SceneValidationError(f"malformed point literal {text!r} (expected X,Y)") from exc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def _write_report(report: dict, path: str | None) -> None:
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# SVG output (presentational only)


def _svg_scene(scene: Scene, skeleton=None, trajectories=None) -> str:
    lo, hi = scene.bbox
    pad = 0.05 * max(hi[0] - lo[0], hi[1] - lo[1])
    x0, y0 = lo[0] - pad, lo[1] - pad
    w = hi[0] - lo[0] + 2 * pad
    h = hi[1] - lo[1] + 2 * pad

    def fy(y):
        return y0 + h - (y - y0)  # flip: SVG y grows downward

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0:.6g} {y0:.6g} {w:.6g} {h:.6g}" '
        f'width="640" height="{640 * h / w:.0f}">'
    ]
    pts = " ".join(f"{p[0]:.6g},{fy(p[1]):.6g}" for p in scene.boundary)
    parts.append(f'<polygon points="{pts}" fill="none" stroke="black" stroke-width="{0.004 * w:.6g}"/>')
    if trajectories:
        for traj in trajectories:
            tp = " ".join(f"{p[0]:.6g},{fy(p[1]):.6g}" for p in traj.points)
            parts.append(
                f'<polyline points="{tp}" fill="none" stroke="steelblue" stroke-width="{0.002 * w:.6g}"/>'
            )
    if skeleton is not None and len(skeleton):
        r = 0.002 * w
        for p in skeleton.points:
            parts.append(f'<circle cx="{p[0]:.6g}" cy="{fy(p[1]):.6g}" r="{r:.6g}" fill="crimson"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _maybe_svg(path, scene, skeleton=None, trajectories=None):
    if path:
        with open(path, "w") as fh:
            fh.write(_svg_scene(scene, skeleton=skeleton, trajectories=trajectories))


# ---------------------------------------------------------------------------
# verification suite


def verify_scene(
    scene: Scene,
    n_battery: int = 12,
    dt_battery: float = 1e-3,
    n_retraction: int = 100,
    dt_retraction: float = 1e-2,
    skeleton_resolution: int = 65,
) -> dict:
    """All applicable invariant checks for one scene; deterministic output."""
    checks: dict = {}
    diam = diameter(scene)
    euclid = scene.metric.is_euclidean

    pts = interior_points(scene, 64, skip=7)
    devs = []
    for p in pts:
        fan = superdifferential(scene, p, need_projections=False)
        if len(fan.generators) == 1:
            g = fan.generators[0]
            a_inv = np.linalg.inv(scene.metric.matrix(p))
            devs.append(abs(float(g @ a_inv @ g) - 1.0))
    eik = max(devs) if devs else 0.0
    checks["eikonal_saturation"] = {"max_abs_dev": eik, "samples": len(devs), "pass": eik <= 1e-9}

    if euclid:
        sc = check_semiconcavity_pairs(scene, n_pairs=1000)
        checks["semiconcavity_pairs"] = {
            "pairs": sc.pairs_used,
            "max_violation": sc.max_violation,
            "pass": sc.passed,
        }

    seeds = interior_points(scene, n_battery, skip=53)
    invariance_ok = True
    mono_ok = True
    deriv_max = 0.0
    bound_ok = True
    bound_margin = np.inf
    mono_tol = MONO_TOL_FACTOR * diam
    if euclid:
        deriv_window = None
        deriv_tol = 25.0 * dt_battery + 0.01
        mono_tol_eff = mono_tol
    else:
        # Lattice distances carry O(grid_h) noise; check the identity in
        # integral form over windows long enough to dominate that noise.
        lam_hi = scene.metric.lambda_max or 1.0
        deriv_window = max(60.0 * scene.grid_h * np.sqrt(lam_hi), 10.0 * dt_battery)
        deriv_tol = 0.15
        mono_tol_eff = 3.0 * scene.grid_h
    for s in seeds:
        traj = integrate(scene, s, 2.0 * diam, dt_battery)
        invariance_ok &= singular_flag_monotone(traj)
        mono_ok &= bool(np.all(np.diff(traj.delta) >= -mono_tol_eff))
        deriv_max = max(deriv_max, derivative_identity_error(traj, window=deriv_window))
        k0 = traj.first_singular_index()
        bound_applicable = euclid or scene.curvature_bound is not None
        if bound_applicable and k0 is not None and k0 < len(traj.t) - 1:
            rep = verify_speed_bound(traj.from_sample(k0), scene)
            bound_ok &= rep.passed
            bound_margin = min(bound_margin, rep.min_margin)
    checks["sigma_invariance"] = {"trajectories": len(seeds), "pass": bool(invariance_ok)}
    checks["delta_monotonicity"] = {"tolerance": mono_tol_eff, "pass": bool(mono_ok)}
    checks["derivative_identity"] = {
        "max_error": deriv_max,
        "tolerance": deriv_tol,
        "pass": bool(deriv_max <= deriv_tol),
    }
    checks["speed_bound"] = {
        "min_margin": None if bound_margin is np.inf else bound_margin,
        "pass": bool(bound_ok),
    }

    rep = check_retraction(scene, n_retraction, dt=dt_retraction, resolution=skeleton_resolution)
    checks["retraction"] = {
        "fraction_interior_to_skeleton": rep.fraction_interior_to_skeleton,
        "fraction_skeleton_stays": rep.fraction_skeleton_stays,
        "first_singular_time_max": rep.first_singular_time_max,
        "diameter": diam,
        "horizon": rep.horizon,
        "pass": bool(rep.passed() and rep.first_singular_time_max <= diam),
    }

    if scene.metric.kind == "control_field":
        hj = hjb_residual(scene)
        checks["hjb_residual"] = {
            "max_residual": hj.max_residual,
            "checked": hj.checked,
            "tolerance": 20.0 * scene.grid_h,
            "pass": bool(hj.max_residual <= 20.0 * scene.grid_h),
        }
    if (not euclid) and scene.curvature_bound is not None:
        cs = check_cosh_semiconcavity(scene, n_triples=200)
        checks["cosh_semiconcavity"] = {
            "triples": cs.triples,
            "max_violation": cs.max_violation,
            "tolerance": cs.tol,
            "pass": bool(cs.passed),
        }

    ok = all(c["pass"] for c in checks.values())
    return {"scene_diameter": diam, "checks": checks, "pass": ok}


# ---------------------------------------------------------------------------
# subcommands


def _cmd_distance(args) -> int:
    scene = load_scene(args.scene)
    x = _parse_point(args.point)
    fan = superdifferential(scene, x)
    report = {
        "point": x,
        "delta": fan.delta,
        "projections": fan.projections,
        "generators": fan.generators,
        "min_norm_velocity": fan.velocity,
        "speed_sq": fan.speed_sq,
        "singular": fan.singular,
        "ambiguous": fan.ambiguous,
        "backend": fan.backend,
    }
    _write_report(report, args.report)
    return 0


def _cmd_flow(args) -> int:
    scene = load_scene(args.scene)
    seed = _parse_point(args.seed)
    traj = integrate(scene, seed, args.tmax, args.dt)
    if args.out:
        traj.to_csv(args.out)
    _maybe_svg(args.svg, scene, trajectories=[traj])
    if args.report:
        _write_report(
            {
                "samples": len(traj),
                "final_point": traj.points[-1],
                "final_delta": traj.delta[-1],
                "singular_at_end": traj.singular[-1],
                "events": traj.events,
            },
            args.report,
        )
    return 0


def _cmd_skeleton(args) -> int:
    scene = load_scene(args.scene)
    cloud = extract_skeleton(scene, args.res)
    if args.out:
        skeleton_to_csv(cloud, args.out)
    _maybe_svg(args.svg, scene, skeleton=cloud)
    return 0


def _cmd_homotopy(args) -> int:
    scene = load_scene(args.scene)
    rep = check_retraction(scene, args.samples)
    report = {
        "sample_count": rep.sample_count,
        "skeleton_sample_count": rep.skeleton_sample_count,
        "fraction_interior_to_skeleton": rep.fraction_interior_to_skeleton,
        "fraction_skeleton_stays": rep.fraction_skeleton_stays,
        "first_singular_time_max": rep.first_singular_time_max,
        "max_endpoint_drift": rep.max_endpoint_drift,
        "horizon": rep.horizon,
        "dt": rep.dt,
        "time_stamps": rep.time_stamps,
    }
    _write_report(report, args.report)
    return 0 if rep.passed() else 2


def _cmd_mintime(args) -> int:
    scene = load_scene(args.scene)
    report: dict = {}
    if args.point:
        x = _parse_point(args.point)
        report["point"] = x
        report["min_time"] = min_time(scene, x)
    hj = hjb_residual(scene, resolution=args.res if args.res else 24)
    report["hjb_max_residual"] = hj.max_residual
    report["hjb_checked"] = hj.checked
    report["hjb_spacing"] = hj.spacing
    _write_report(report, args.report)
    return 0


def _cmd_verify(args) -> int:
    scene = load_scene(args.scene)
    report = verify_scene(scene)
    _write_report(report, args.report)
    return 0 if report["pass"] else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="medialflow")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scene", required=True, help="scene JSON path")
        p.add_argument("--report", default=None, help="JSON report output path (default stdout)")

    p = sub.add_parser("distance", help="distance, projections, and fan at a point")
    common(p)
    p.add_argument("--point", required=True, help="X,Y")
    p.set_defaults(func=_cmd_distance)

    p = sub.add_parser("flow", help="integrate one generalized characteristic")
    common(p)
    p.add_argument("--seed", required=True, help="X,Y")
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--out", default=None, help="trajectory CSV path")
    p.add_argument("--svg", default=None)
    p.set_defaults(func=_cmd_flow)

    p = sub.add_parser("skeleton", help="extract the singular-set point cloud")
    common(p)
    p.add_argument("--res", type=int, default=129)
    p.add_argument("--out", default=None, help="skeleton CSV path")
    p.add_argument("--svg", default=None)
    p.set_defaults(func=_cmd_skeleton)

    p = sub.add_parser("homotopy", help="retraction report on sampled points")
    common(p)
    p.add_argument("--samples", type=int, default=100)
    p.set_defaults(func=_cmd_homotopy)

    p = sub.add_parser("mintime", help="minimum-time value and HJB residual")
    common(p)
    p.add_argument("--point", default=None, help="X,Y")
    p.add_argument("--res", type=int, default=None)
    p.set_defaults(func=_cmd_mintime)

    p = sub.add_parser("verify", help="run every applicable check on the scene")
    common(p)
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (SceneValidationError, DomainError, FileNotFoundError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
