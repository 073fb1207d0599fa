"""Compiled fixed-step kernels for the degree-class dynamics."""
import numpy as np
from numba import njit

EULER = 0
TRANSITION = 1

OK = 0
UNSTABLE = 1


@njit(cache=True)
def _step(i, a, r, q, theta_k, k, alpha, lam, beta, dt, scheme):
    lo = 1.0
    hi = 0.0
    for j in range(i.size):
        if scheme == EULER:
            flow = dt * lam * k[j] * i[j] * theta_k[j]
        else:
            x = dt * lam * theta_k[j]
            if x > 1.0:
                x = 1.0
            flow = i[j] * -np.expm1(k[j] * np.log1p(-x))
        decay = dt * beta * a[j]
        i[j] -= flow
        a[j] += alpha * flow - decay
        r[j] += (1.0 - alpha) * flow
        q[j] += decay
        lo = min(lo, i[j], a[j], r[j])
        hi = max(hi, i[j], a[j], r[j], q[j])
    return lo, hi


@njit(cache=True)
def _clip(x):
    for j in range(x.size):
        if x[j] < 0.0:
            x[j] = 0.0
        elif x[j] > 1.0:
            x[j] = 1.0


@njit(cache=True)
def integrate_rows(i, a, r, q, k, w, cond, qex, theta, alpha, lam, beta,
                   dt, tol, max_steps, scheme, use_matrix, rec_every):
    """Integrate every row in place.

    Returns ``(iterations, status, bad_row, traj)``; ``traj`` holds
    ``(t, i, a, r, q)`` aggregates of row 0 every ``rec_every`` steps.
    """
    nrows, nk = i.shape
    iterations = np.zeros(nrows, dtype=np.int64)
    cap = 1024
    traj = np.empty((cap, 5))
    nrec = 0
    theta_k = np.empty(nk)
    for b in range(nrows):
        ib = i[b]
        ab = a[b]
        rb = r[b]
        qb = q[b]
        step = 0
        while True:
            mass = 0.0
            for j in range(nk):
                mass += w[j] * ab[j]
            record = b == 0 and rec_every > 0
            if record and (step % rec_every == 0 or mass < tol or step >= max_steps):
                if nrec == cap:
                    bigger = np.empty((cap * 2, 5))
                    bigger[:cap] = traj
                    traj = bigger
                    cap *= 2
                si = 0.0
                sr = 0.0
                sq = 0.0
                for j in range(nk):
                    si += w[j] * ib[j]
                    sr += w[j] * rb[j]
                    sq += w[j] * qb[j]
                traj[nrec, 0] = step * dt
                traj[nrec, 1] = si
                traj[nrec, 2] = mass
                traj[nrec, 3] = sr
                traj[nrec, 4] = sq
                nrec += 1
            if mass < tol or step >= max_steps:
                break
            if use_matrix:
                for j in range(nk):
                    s = 0.0
                    for jj in range(nk):
                        s += cond[j, jj] * ab[jj]
                    theta_k[j] = s
            else:
                s = 0.0
                for j in range(nk):
                    s += qex[j] * ab[j]
                th = theta[b]
                for j in range(nk):
                    theta_k[j] = (1.0 - th) * s + th * ab[j]
            lo, hi = _step(ib, ab, rb, qb, theta_k, k, alpha[b], lam[b], beta[b], dt, scheme)
            step += 1
            if lo < -1e-6 or hi > 1.0 + 1e-6:
                iterations[b] = step
                return iterations, UNSTABLE, b, traj[:nrec]
            if lo < 0.0 or hi > 1.0:
                _clip(ib)
                _clip(ab)
                _clip(rb)
                _clip(qb)
        iterations[b] = step
    return iterations, OK, -1, traj[:nrec]
