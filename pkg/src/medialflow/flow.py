"""Generalized gradient flow of the boundary distance through singularities.

Trajectories solve gamma'(t) = A^-1(gamma) p*(gamma) where p* is the
minimal-norm element of the superdifferential, recomputed from a fresh fan at
every step (forward selection is the discrete analogue of right-continuity).
Explicit Euler stepping is wrapped in a rate controller: a step is accepted
only when the realized distance growth matches the selected squared speed s*
to within a slack proportional to dt, which keeps the scheme from jumping
across ridges of the distance function (the singular set).  Two correctors
handle the nonsmooth events the controller detects:

* crossing bisection -- a step whose distance rate breaks sharply is
  shortened onto the break point, landing the iterate on the singular set
  instead of chattering across it;
* ridge snap / ridge shift -- sliding iterates that drift off a curved ridge
  (or stall against one) are re-centered by a line search maximizing the
  distance transversally (respectively along the velocity).

Quantitative checks live here too: the logistic speed bound with
alpha(t) = integral of 2/delta (Euclidean) or beta(t) = integral of
2a/tanh(a delta) (metric scenes with curvature bound a), the semiconcavity
pair inequality, and continuous dependence on the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distance import (
    EPS_SING,
    DomainError,
    SuperdiffFan,
    boundary_distance,
    superdifferential,
)
from .sampling import interior_points
from .scene import Scene, diameter, points_inside, segment_inside

EPS_HALT = 1e-6  # stationarity threshold on s* (critical point reached)
CFL = 0.1  # step cap as a fraction of the current boundary distance
RATE_SLACK_PER_DT = 20.0  # controller slack eta = RATE_SLACK_PER_DT * dt
RATE_SLACK_MAX = 0.25
LATTICE_RATE_ABS = 2.0  # additive slack in units of grid_h for lattice scenes
MONO_TOL_FACTOR = 1e-9  # recorded delta may decrease by at most this * diam


@dataclass(frozen=True)
class StepPolicy:
    dt: float
    t_max: float
    cfl: float
    eps_halt: float
    rate_slack: float
    rate_slack_abs: float
    backend: str


@dataclass
class Trajectory:
    """Time-stamped samples of one generalized characteristic."""

    t: np.ndarray
    points: np.ndarray  # (n, 2)
    velocities: np.ndarray  # (n, 2) selected v*
    delta: np.ndarray
    speed_sq: np.ndarray
    singular: np.ndarray  # bool
    ambiguous: np.ndarray  # bool
    scene: Scene
    policy: StepPolicy
    events: dict = field(default_factory=dict)
    has_tail: bool = False  # last sample is the constant continuation

    def __len__(self) -> int:
        return len(self.t)

    @property
    def step_slice(self) -> slice:
        """Samples produced by integration steps (tail sample excluded)."""
        return slice(0, len(self.t) - 1 if self.has_tail else len(self.t))

    def from_sample(self, k: int) -> "Trajectory":
        """Sub-trajectory starting at sample k with time re-based to zero."""
        return Trajectory(
            t=self.t[k:] - self.t[k],
            points=self.points[k:],
            velocities=self.velocities[k:],
            delta=self.delta[k:],
            speed_sq=self.speed_sq[k:],
            singular=self.singular[k:],
            ambiguous=self.ambiguous[k:],
            scene=self.scene,
            policy=self.policy,
            events=self.events,
            has_tail=self.has_tail,
        )

    def first_singular_index(self):
        idx = np.nonzero(self.singular)[0]
        return int(idx[0]) if len(idx) else None

    def validate(self, mono_tol: float | None = None) -> None:
        """Assert the trajectory invariants (used by tests and `verify`)."""
        if mono_tol is None:
            mono_tol = MONO_TOL_FACTOR * diameter(self.scene)
        assert np.all(np.diff(self.t) > 0), "timestamps must strictly increase"
        assert np.all(np.diff(self.delta) >= -mono_tol), "delta must be nondecreasing"
        assert np.all(self.speed_sq <= 1.0 + 1e-9), "squared speed exceeds 1"
        assert np.all(points_inside(self.scene.boundary, self.points)), "sample left the domain"

    def positions_at(self, times: np.ndarray) -> np.ndarray:
        """Linear interpolation of the path at the given times."""
        times = np.clip(times, self.t[0], self.t[-1])
        out = np.empty((len(times), 2))
        out[:, 0] = np.interp(times, self.t, self.points[:, 0])
        out[:, 1] = np.interp(times, self.t, self.points[:, 1])
        return out

    def to_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write("t,x,y,vx,vy,delta,speed_sq,singular\n")
            for k in range(len(self.t)):
                fh.write(
                    "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n"
                    % (
                        self.t[k],
                        self.points[k, 0],
                        self.points[k, 1],
                        self.velocities[k, 0],
                        self.velocities[k, 1],
                        self.delta[k],
                        self.speed_sq[k],
                        int(self.singular[k]),
                    )
                )


@dataclass(frozen=True)
class SingularityCheck:
    singular: bool
    speed_sq: float
    ambiguous: bool


def is_singular(scene: Scene, x) -> SingularityCheck:
    """Singularity test via the minimal selection; ambiguity is reported, not resolved."""
    fan = superdifferential(scene, x, need_projections=False)
    return SingularityCheck(singular=fan.singular, speed_sq=fan.speed_sq, ambiguous=fan.ambiguous)


# ---------------------------------------------------------------------------
# integration


def _golden_max(f, a: float, b: float, tol: float, max_iter: int = 90):
    """Golden-section maximizer of f on [a, b]; returns (x, f(x))."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


class _Stepper:
    def __init__(self, scene: Scene, policy: StepPolicy):
        self.scene = scene
        self.policy = policy
        self.mono_eps = 1e-12 * max(scene.scale, 1.0)
        self.events = {"shrunk": 0, "snapped": 0, "ridge": 0, "stalled": 0}
        if policy.backend == "exact":
            from .distance import _exact_geo

            self._geo = _exact_geo(scene)
        else:
            self._geo = None

    def _delta(self, x: np.ndarray):
        if self._geo is not None:
            if not self._geo.inside(x):
                return None
            d = self._geo.min_distance(x)
            return d if d > 0.0 else None
        if not points_inside(self.scene.boundary, x[None, :])[0]:
            return None
        try:
            return boundary_distance(self.scene, x)
        except Exception:
            return None

    def _ok(self, x, fan: SuperdiffFan, tau: float):
        c = x + tau * fan.velocity
        dc = self._delta(c)
        if dc is None:
            return None
        gain = dc - fan.delta
        if gain < -self.mono_eps:
            return None
        slack = self.policy.rate_slack * tau + self.policy.rate_slack_abs
        if abs(gain - tau * fan.speed_sq) > slack:
            return None
        return c, dc

    def advance(self, x: np.ndarray, fan: SuperdiffFan, dt_k: float):
        """Largest admissible Euler step up to dt_k; None when stalled."""
        speed = max(float(np.linalg.norm(fan.velocity)), math.sqrt(EPS_HALT))
        tau_floor = max(10.0 * np.finfo(float).eps * max(fan.delta, 1e-12) / speed, 1e-9 * dt_k)
        res = self._ok(x, fan, dt_k)
        if res is not None:
            return dt_k, res[0]
        lo, hi = 0.0, dt_k
        x_lo = None
        while hi - lo > tau_floor:
            mid = 0.5 * (lo + hi)
            res = self._ok(x, fan, mid)
            if res is not None:
                lo, x_lo = mid, res[0]
            else:
                hi = mid
        if x_lo is None or lo < tau_floor:
            return None
        self.events["shrunk"] += 1
        return lo, x_lo

    def snap_to_ridge(self, x_new: np.ndarray, prev_fan: SuperdiffFan, step_len: float = 0.0):
        """Transversal re-centering onto the distance ridge after a sliding step.

        The window covers both the projection band (relative tolerance times
        distance, or a few cells on the lattice) and the worst-case landing
        overshoot of the rate controller (a slack fraction of the step).
        """
        if len(prev_fan.generators) < 2:
            return None
        g = prev_fan.generators
        ang = np.arctan2(g[:, 1], g[:, 0])
        i, j = int(np.argmin(ang)), int(np.argmax(ang))
        n = g[i] - g[j]
        nn = np.linalg.norm(n)
        if nn == 0.0:
            return None
        n /= nn
        overshoot = 4.0 * self.policy.rate_slack * step_len
        if prev_fan.backend == "exact":
            w = max(16.0 * 1e-6 * prev_fan.delta, overshoot, 1e-12)
        else:
            w = max(8.0 * self.scene.grid_h, overshoot)

        def f(s):
            d = self._delta(x_new + s * n)
            return -np.inf if d is None else d

        s_star, d_star = _golden_max(f, -w, w, tol=1e-6 * w)
        if not np.isfinite(d_star):
            return None
        return x_new + s_star * n

    def ridge_shift(self, x: np.ndarray, fan: SuperdiffFan, dt_k: float):
        """Line search along v* maximizing delta; used when stepping stalls."""
        v = fan.velocity
        speed = float(np.linalg.norm(v))
        if speed == 0.0:
            return None

        def f(tau):
            d = self._delta(x + tau * v)
            return -np.inf if d is None else d

        tau_star, d_star = _golden_max(f, 0.0, dt_k, tol=1e-12 * dt_k)
        if not np.isfinite(d_star) or d_star < fan.delta - self.mono_eps or tau_star <= 0.0:
            return None
        return tau_star, x + tau_star * v


def integrate(scene: Scene, x0, t_max: float, dt: float) -> Trajectory:
    """Integrate the generalized gradient flow from an interior seed.

    Ends at t_max or when a critical point is reached (s* < EPS_HALT); the
    constant continuation is recorded as one final stationary sample.
    """
    x0 = np.asarray(x0, dtype=float)
    if not (t_max > 0 and dt > 0):
        raise ValueError("t_max and dt must be positive")
    dt_cap = diameter(scene) / 10.0
    if dt > dt_cap:
        raise ValueError(f"dt={dt} exceeds dt_max(scene)={dt_cap}")
    backend = "exact" if scene.metric.is_euclidean else "lattice"
    policy = StepPolicy(
        dt=dt,
        t_max=t_max,
        cfl=CFL,
        eps_halt=EPS_HALT,
        rate_slack=min(RATE_SLACK_PER_DT * dt, RATE_SLACK_MAX),
        rate_slack_abs=0.0 if backend == "exact" else LATTICE_RATE_ABS * scene.grid_h,
        backend=backend,
    )
    stepper = _Stepper(scene, policy)

    rows: list[tuple] = []
    x = x0
    t = 0.0
    fan = superdifferential(scene, x, need_projections=False)
    tail = False
    while True:
        rows.append((t, x, fan.velocity, fan.delta, fan.speed_sq, fan.singular, fan.ambiguous))
        if t >= t_max * (1.0 - 1e-15):
            break
        if fan.speed_sq < EPS_HALT:
            tail = True
            break
        dt_k = min(dt, CFL * fan.delta, t_max - t)
        step = stepper.advance(x, fan, dt_k)
        if step is None:
            shifted = stepper.ridge_shift(x, fan, dt_k)
            if shifted is None:
                stepper.events["stalled"] += 1
                tail = True
                break
            stepper.events["ridge"] += 1
            tau, x = shifted
            t += tau
            fan = superdifferential(scene, x, need_projections=False)
            continue
        tau, x_new = step
        fan_new = superdifferential(scene, x_new, need_projections=False)
        if fan.singular and not fan_new.singular:
            snapped = stepper.snap_to_ridge(x_new, fan, step_len=tau * float(np.linalg.norm(fan.velocity)))
            if snapped is not None:
                fan_snap = superdifferential(scene, snapped, need_projections=False)
                if fan_snap.singular and fan_snap.delta >= fan_new.delta - stepper.mono_eps:
                    x_new, fan_new = snapped, fan_snap
                    stepper.events["snapped"] += 1
        x, fan = x_new, fan_new
        t += tau

    if tail and t < t_max * (1.0 - 1e-15):
        rows.append((t_max, x, np.zeros(2), fan.delta, fan.speed_sq, fan.singular, fan.ambiguous))

    n = len(rows)
    traj = Trajectory(
        t=np.array([r[0] for r in rows]),
        points=np.array([r[1] for r in rows]).reshape(n, 2),
        velocities=np.array([r[2] for r in rows]).reshape(n, 2),
        delta=np.array([r[3] for r in rows]),
        speed_sq=np.array([r[4] for r in rows]),
        singular=np.array([r[5] for r in rows], dtype=bool),
        ambiguous=np.array([r[6] for r in rows], dtype=bool),
        scene=scene,
        policy=policy,
        events=stepper.events,
        has_tail=tail,
    )
    return traj


# ---------------------------------------------------------------------------
# quantitative checks


@dataclass
class BoundReport:
    """Measured squared speed against the logistic bound along a trajectory."""

    t: np.ndarray
    measured: np.ndarray
    bound: np.ndarray
    integral: np.ndarray  # alpha(t) or beta(t)
    min_margin: float
    passed: bool
    tol: float
    kind: str  # 'euclidean' | 'riemannian'


def verify_speed_bound(traj: Trajectory, scene: Scene | None = None, tol: float | None = None) -> BoundReport:
    """Check s_k <= B(t_k) + tol with the logistic bound anchored at s_0.

    Euclidean scenes integrate 2/delta; metric scenes require the scene's
    curvature bound a and integrate 2a/tanh(a delta).
    """
    scene = traj.scene if scene is None else scene
    if not traj.singular[0]:
        raise ValueError("trajectory does not start singular; the speed bound is vacuous")
    if scene.metric.is_euclidean:
        integrand = 2.0 / traj.delta
        kind = "euclidean"
        if tol is None:
            tol = 1e-6
    else:
        alpha = scene.curvature_bound
        if alpha is None:
            raise ValueError("metric scene without curvature_bound: cannot form the bound")
        integrand = 2.0 * alpha / np.tanh(alpha * traj.delta)
        kind = "riemannian"
        if tol is None:
            tol = max(1e-6, 10.0 * scene.grid_h)  # budgets lattice fan noise
    dt = np.diff(traj.t)
    acc = np.concatenate([[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * dt)])
    s0 = float(np.clip(traj.speed_sq[0], 0.0, 1.0 - EPS_SING))
    bound = s0 / (s0 + (1.0 - s0) * np.exp(-acc))
    margins = bound - traj.speed_sq
    return BoundReport(
        t=traj.t,
        measured=traj.speed_sq,
        bound=bound,
        integral=acc,
        min_margin=float(margins.min()),
        passed=bool(np.all(traj.speed_sq <= bound + tol)),
        tol=tol,
        kind=kind,
    )


@dataclass
class SemiconcavityReport:
    pairs_used: int
    max_violation: float
    passed: bool
    tol: float


def check_semiconcavity_pairs(scene: Scene, n_pairs: int = 1000, tol: float = 1e-9) -> SemiconcavityReport:
    """Monotonicity inequality <d(x)p - d(y)q, x - y> <= |x - y|^2 over sampled pairs.

    Quantifies over all generator combinations of both fans; Euclidean
    scenes only, pairs restricted to in-domain segments.
    """
    if not scene.metric.is_euclidean:
        raise ValueError("semiconcavity pair check is Euclidean-only")
    pts = interior_points(scene, 2 * n_pairs, skip=101)
    worst = 0.0
    used = 0
    for k in range(0, len(pts) - 1, 2):
        x, y = pts[k], pts[k + 1]
        if not segment_inside(scene.boundary, x, y):
            continue
        fx = superdifferential(scene, x, need_projections=False)
        fy = superdifferential(scene, y, need_projections=False)
        diff = x - y
        rhs = float(diff @ diff)
        for p in fx.generators:
            for q in fy.generators:
                lhs = float((fx.delta * p - fy.delta * q) @ diff)
                worst = max(worst, lhs - rhs)
        used += 1
    return SemiconcavityReport(pairs_used=used, max_violation=worst, passed=worst <= tol, tol=tol)


@dataclass
class DependenceReport:
    ratio: float
    n_perturbations: int
    radius: float


def check_continuous_dependence(
    scene: Scene,
    x,
    radius: float,
    t_max: float,
    dt: float = 1e-3,
    n_pert: int = 8,
    n_times: int = 200,
) -> DependenceReport:
    """sup_t |gamma_x(t) - gamma_y(t)| / |x - y| over perturbed seeds.

    Pure diagnostic: the Lipschitz constant is scene-dependent and recorded
    as a regression baseline rather than asserted against theory.
    """
    x = np.asarray(x, dtype=float)
    if radius == 0.0:
        return DependenceReport(ratio=0.0, n_perturbations=0, radius=0.0)
    base = integrate(scene, x, t_max, dt)
    times = np.linspace(0.0, t_max, n_times)
    base_pos = base.positions_at(times)
    worst = 0.0
    used = 0
    for k in range(n_pert):
        ang = 2.0 * math.pi * k / n_pert
        y = x + radius * np.array([math.cos(ang), math.sin(ang)])
        try:
            other = integrate(scene, y, t_max, dt)
        except DomainError:
            continue
        gap = np.linalg.norm(other.positions_at(times) - base_pos, axis=1).max()
        worst = max(worst, gap / radius)
        used += 1
    return DependenceReport(ratio=worst, n_perturbations=used, radius=radius)


def derivative_identity_error(traj: Trajectory, window: float | None = None) -> float:
    """Largest defect of the identity d(delta)/dt = s along the trajectory.

    Per-step by default: max_k |(delta_{k+1} - delta_k)/(t_{k+1} - t_k) - s_k|.
    With `window` set, compares windowed averages instead,
    |delta(b) - delta(a) - int_a^b s dt| / (b - a), which absorbs the
    cell-scale noise of the lattice backend (the identity holds in integral
    form regardless of backend roughness).
    """
    sl = traj.step_slice
    t = traj.t[sl]
    d = traj.delta[sl]
    s = traj.speed_sq[sl]
    if len(t) < 2:
        return 0.0
    if window is None:
        rate = np.diff(d) / np.diff(t)
        return float(np.abs(rate - s[:-1]).max())
    acc = np.concatenate([[0.0], np.cumsum(0.5 * (s[1:] + s[:-1]) * np.diff(t))])
    edges = np.arange(t[0], t[-1], window)
    if len(edges) < 2:
        edges = np.array([t[0], t[-1]])
    d_e = np.interp(edges, t, d)
    a_e = np.interp(edges, t, acc)
    spans = np.diff(edges)
    return float(np.abs((np.diff(d_e) - np.diff(a_e)) / spans).max())


def singular_flag_monotone(traj: Trajectory) -> bool:
    """Once the singular flag turns on it must stay on (set invariance)."""
    s = traj.singular
    first = traj.first_singular_index()
    if first is None:
        return True
    return bool(np.all(s[first:]))
