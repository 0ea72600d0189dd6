"""Minimal-norm point of a finitely generated convex hull in a metric <A., .>.

Given covectors p_1..p_k and an SPD matrix A, finds the unique minimizer of
q |-> <A^-1 q, q> over the convex hull of the generators.  A Cholesky factor
A = L L^T turns the problem into the Euclidean minimum-norm point over the
transformed generators z_i = L^-1 p_i; closed forms handle up to three
generators, Wolfe's algorithm the rest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TOL_VI = 1e-10
N_MAX = 16


@dataclass(frozen=True)
class SimplexSolution:
    """Result of `min_norm_point`.

    coefficients -- simplex weights over the input generators (sum 1, >= 0)
    minimizer    -- p* = sum_i lambda_i p_i
    velocity     -- v* = A^-1 p*
    objective    -- s* = <A^-1 p*, p*> = <A v*, v*>
    """

    coefficients: np.ndarray
    minimizer: np.ndarray
    velocity: np.ndarray
    objective: float


def min_norm_point(generators, a, tol_vi: float = TOL_VI) -> SimplexSolution:
    p = np.atleast_2d(np.asarray(generators, dtype=float))
    if p.ndim != 2 or p.shape[1] != 2:
        raise ValueError("generators must be a list of 2-vectors")
    k = len(p)
    if k < 1:
        raise ValueError("empty generator list")
    if k > N_MAX:
        raise ValueError(f"generator count {k} exceeds N_MAX={N_MAX}")
    a = np.asarray(a, dtype=float)
    _check_spd(a)

    identity = a[0, 0] == 1.0 and a[1, 1] == 1.0 and a[0, 1] == 0.0 and a[1, 0] == 0.0
    if identity:
        z = p
    else:
        ell = np.linalg.cholesky(a)
        z = np.linalg.solve(ell, p.T).T  # z_i = L^-1 p_i

    if k == 1:
        lam = np.array([1.0])
        w = z[0]
    elif k == 2:
        t = _segment_argmin(z[0], z[1])
        lam = np.array([1.0 - t, t])
        w = lam @ z
    elif k == 3:
        lam = _triangle_argmin(z)
        w = lam @ z
    else:
        lam = _wolfe(z, tol_vi)
        w = lam @ z

    if identity:
        p_star = w
        v_star = w
    else:
        p_star = ell @ w
        v_star = np.linalg.solve(ell.T, w)
    return SimplexSolution(
        coefficients=lam,
        minimizer=p_star,
        velocity=v_star,
        objective=float(w @ w),
    )


def _check_spd(a: np.ndarray) -> None:
    if a.shape != (2, 2):
        raise ValueError("metric must be a 2x2 matrix")
    if abs(a[0, 1] - a[1, 0]) > 1e-10 * (1.0 + np.abs(a).max()):
        raise ValueError("metric matrix is not symmetric")
    tr = a[0, 0] + a[1, 1]
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    if not (tr > 0 and det > 0):
        raise ValueError("metric matrix is not positive definite")


def _segment_argmin(z0: np.ndarray, z1: np.ndarray) -> float:
    """Parameter t of the point of [z0, z1] closest to the origin."""
    d = z1 - z0
    dd = float(d @ d)
    if dd == 0.0:
        return 0.0
    return float(np.clip(-(z0 @ d) / dd, 0.0, 1.0))


def _triangle_argmin(z: np.ndarray) -> np.ndarray:
    """Barycentric weights of the triangle point closest to the origin."""
    m = np.column_stack([z[1] - z[0], z[2] - z[0]])
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det) > 1e-14 * max(1.0, float(np.abs(z).max()) ** 2):
        uv = np.linalg.solve(m, -z[0])
        lam = np.array([1.0 - uv[0] - uv[1], uv[0], uv[1]])
        if np.all(lam >= 0.0):
            return lam
    # Degenerate or exterior origin: best point lies on an edge.
    best = None
    for i, j in ((0, 1), (0, 2), (1, 2)):
        t = _segment_argmin(z[i], z[j])
        w = (1 - t) * z[i] + t * z[j]
        val = w @ w
        if best is None or val < best[0]:
            lam = np.zeros(3)
            lam[i], lam[j] = 1 - t, t
            best = (val, lam)
    return best[1]


def _wolfe(z: np.ndarray, tol_vi: float, max_iter: int = 200) -> np.ndarray:
    """Wolfe's minimum-norm-point algorithm over the simplex.

    Major cycle adds the most-improving generator; the minor cycle moves to
    the affine minimizer over the active set, stepping back to the simplex
    boundary when a weight would turn negative.  Terminates when the
    variational inequality <w, z_i - w> >= -tol holds for all i.
    """
    k = len(z)
    scale = max(1.0, float(np.einsum("ij,ij->i", z, z).max()))
    start = int(np.argmin(np.einsum("ij,ij->i", z, z)))
    active = [start]
    lam_act = np.array([1.0])
    w = z[start].copy()

    for _ in range(max_iter):
        j = int(np.argmin(z @ w))
        if w @ w - z[j] @ w <= tol_vi * scale:
            break
        if j not in active:
            active.append(j)
            lam_act = np.append(lam_act, 0.0)
        for _ in range(max_iter):
            mu = _affine_min(z[active])
            if np.all(mu >= -1e-14):
                lam_act = np.clip(mu, 0.0, None)
                break
            shrink = lam_act - mu
            mask = shrink > 1e-14
            theta = float(np.min(lam_act[mask] / shrink[mask]))
            lam_act = (1 - theta) * lam_act + theta * mu
            keep = lam_act > 1e-14
            keep[int(np.argmax(lam_act))] = True  # never drop everything
            active = [a for a, kf in zip(active, keep) if kf]
            lam_act = lam_act[keep]
        lam_act = lam_act / lam_act.sum()
        w = lam_act @ z[active]

    lam = np.zeros(k)
    for idx, a_i in enumerate(active):
        lam[a_i] += lam_act[idx]
    return lam


def _affine_min(zs: np.ndarray) -> np.ndarray:
    """Weights (sum 1, sign-free) of the affine-hull point nearest the origin."""
    m = len(zs)
    kkt = np.zeros((m + 1, m + 1))
    kkt[:m, :m] = zs @ zs.T
    kkt[:m, m] = 1.0
    kkt[m, :m] = 1.0
    rhs = np.zeros(m + 1)
    rhs[m] = 1.0
    sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    mu = sol[:m]
    s = mu.sum()
    return mu / s if abs(s) > 1e-14 else np.full(m, 1.0 / m)
