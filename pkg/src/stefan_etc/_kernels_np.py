"""Numpy lane: vectorized fallback for the stepping kernels.

Mirrors :mod:`._kernels_nb` (same argument lists, same update arithmetic,
same status codes); the base-step loop runs in Python. Used when numba is
unavailable or STEFAN_ETC_BACKEND=numpy.
"""

import numpy as np

LANE_NAME = "numpy"


def interface_gradient(theta, dy, order):
    n = theta.shape[0]
    if order == 1:
        return (theta[n - 1] - theta[n - 2]) / dy
    return (3.0 * theta[n - 1] - 4.0 * theta[n - 2] + theta[n - 3]) / (2.0 * dy)


def sigma_pde(theta, s, alpha, beta, k, T_m, s_r):
    n = theta.shape[0]
    dy = 1.0 / (n - 1)
    excess = theta - T_m
    acc = 0.5 * excess[0] + excess[1:-1].sum() + 0.5 * excess[-1]
    integral = s * dy * acc
    return -((k / alpha) * integral + (k / beta) * (s - s_r))


def profile_min(theta, T_m):
    m = float(np.min(theta)) - T_m
    if not np.isfinite(m):
        return np.nan
    return m


def advance(theta, s, qc, sigma_ode, U, dt, alpha, beta, k, T_m,
            cfl_safety, order, s_floor, scratch, iy):
    n = theta.shape[0]
    dy = 1.0 / (n - 1)
    min_hmin = np.inf
    min_sdot = np.inf
    if dt <= 0.0:
        return s, qc, sigma_ode, 0, min_hmin, min_sdot, 0

    limit = cfl_safety * s * s * dy * dy / (2.0 * alpha)
    nsub = max(1, int(np.ceil(dt / limit * (1.0 - 1e-12))))
    dts = dt / nsub

    for _ in range(nsub):
        grad = interface_gradient(theta, dy, order)
        sdot = -beta * grad / s
        if sdot < min_sdot:
            min_sdot = sdot
        r = alpha * dts / (s * s * dy * dy)
        adv0 = sdot * dts / (2.0 * s)

        scratch[0] = theta[0] + 2.0 * r * (theta[1] - theta[0]) + 2.0 * r * dy * s * qc / k
        scratch[1:-1] = (theta[1:-1]
                         + r * (theta[2:] - 2.0 * theta[1:-1] + theta[:-2])
                         + (adv0 * iy[1:-1]) * (theta[2:] - theta[:-2]))
        scratch[-1] = T_m
        theta[:] = scratch

        m = float(np.min(theta)) - T_m
        if not np.isfinite(m):
            return s, qc, sigma_ode, nsub, np.nan, min_sdot, 2
        if m < min_hmin:
            min_hmin = m

        qc_new = qc + U * dts
        sigma_ode -= 0.5 * (qc + qc_new) * dts
        qc = qc_new
        s = s + sdot * dts
        if not np.isfinite(s):
            return s, qc, sigma_ode, nsub, min_hmin, min_sdot, 2
        if s < s_floor:
            return s, qc, sigma_ode, nsub, min_hmin, min_sdot, 1

    if min_hmin > 0.0:
        min_hmin = 0.0
    return s, qc, sigma_ode, nsub, min_hmin, min_sdot, 0


def _record_row(idx, t, s, qc, u_held, ustar, h1, h2, h3, ev_flag,
                theta, alpha, beta, k, T_m, s_r, order,
                rec_t, rec_s, rec_qc, rec_u, rec_ustar, rec_h1, rec_h2,
                rec_h3, rec_hmin, rec_sdot, rec_event, rec_sigma_pde,
                rec_theta):
    n = theta.shape[0]
    dy = 1.0 / (n - 1)
    rec_t[idx] = t
    rec_s[idx] = s
    rec_qc[idx] = qc
    rec_u[idx] = u_held
    rec_ustar[idx] = ustar
    rec_h1[idx] = h1
    rec_h2[idx] = h2
    rec_h3[idx] = h3
    rec_hmin[idx] = profile_min(theta, T_m)
    rec_sdot[idx] = -beta * interface_gradient(theta, dy, order) / s
    rec_event[idx] = ev_flag
    rec_sigma_pde[idx] = sigma_pde(theta, s, alpha, beta, k, T_m, s_r)
    rec_theta[idx, :] = theta


def closed_loop(theta, s, qc, sigma_ode,
                alpha, beta, k, T_m, s_r,
                c1, c2, mu1, d2c2,
                dt, n_steps, stride, cfl_safety, order, s_floor,
                mode, conv_tol,
                rec_t, rec_s, rec_qc, rec_u, rec_ustar, rec_h1, rec_h2,
                rec_h3, rec_hmin, rec_sdot, rec_event, rec_sigma_pde,
                rec_theta,
                ev_t, ev_u, ev_side, ev_h2, ev_h3,
                scratch, iy):
    n_rec = 0
    n_ev = 0
    status = 0
    steps_done = 0
    substeps_total = 0
    u_held = 0.0
    min_h1 = np.inf
    min_h2 = np.inf
    min_h3 = np.inf
    min_hmin = np.inf
    min_sdot = np.inf
    max_s = s
    t_end = 0.0

    for step_idx in range(n_steps):
        t = step_idx * dt
        h2 = qc
        h3 = -qc + c1 * sigma_ode
        ustar = -c1 * h2 + c2 * h3
        fired = False
        side = -1
        if step_idx == 0:
            fired = True
            side = 0
            u_held = ustar
        elif mode == 1:
            u_held = ustar
        else:
            u_tilde = ustar - u_held
            if -d2c2 * h3 > u_tilde:
                fired = True
                side = 1
            elif u_tilde > mu1 * h2 + d2c2 * h3:
                fired = True
                side = 2
            if fired:
                u_held = ustar
        if fired:
            if n_ev >= ev_t.shape[0]:
                status = 3
                t_end = t
                break
            ev_t[n_ev] = t
            ev_u[n_ev] = u_held
            ev_side[n_ev] = side
            ev_h2[n_ev] = h2
            ev_h3[n_ev] = h3
            n_ev += 1

        if sigma_ode < min_h1:
            min_h1 = sigma_ode
        if h2 < min_h2:
            min_h2 = h2
        if h3 < min_h3:
            min_h3 = h3

        if fired or step_idx % stride == 0:
            _record_row(n_rec, t, s, qc, u_held, ustar, sigma_ode, h2, h3,
                        1 if fired else 0,
                        theta, alpha, beta, k, T_m, s_r, order,
                        rec_t, rec_s, rec_qc, rec_u, rec_ustar, rec_h1,
                        rec_h2, rec_h3, rec_hmin, rec_sdot, rec_event,
                        rec_sigma_pde, rec_theta)
            n_rec += 1

        s, qc, sigma_ode, nsub, mh, ms, st = advance(
            theta, s, qc, sigma_ode, u_held, dt, alpha, beta, k, T_m,
            cfl_safety, order, s_floor, scratch, iy)
        substeps_total += nsub
        steps_done = step_idx + 1
        t_end = steps_done * dt
        if st != 0:
            status = st
            break
        if mh < min_hmin:
            min_hmin = mh
        if ms < min_sdot:
            min_sdot = ms
        if s > max_s:
            max_s = s
        if conv_tol > 0.0 and abs(s - s_r) < conv_tol:
            break

    if status == 0:
        h2 = qc
        h3 = -qc + c1 * sigma_ode
        ustar = -c1 * h2 + c2 * h3
        if sigma_ode < min_h1:
            min_h1 = sigma_ode
        if h2 < min_h2:
            min_h2 = h2
        if h3 < min_h3:
            min_h3 = h3
        _record_row(n_rec, t_end, s, qc, u_held, ustar, sigma_ode, h2, h3, 0,
                    theta, alpha, beta, k, T_m, s_r, order,
                    rec_t, rec_s, rec_qc, rec_u, rec_ustar, rec_h1,
                    rec_h2, rec_h3, rec_hmin, rec_sdot, rec_event,
                    rec_sigma_pde, rec_theta)
        n_rec += 1

    return (n_rec, n_ev, status, steps_done, substeps_total,
            min_h1, min_h2, min_h3, min_hmin, min_sdot, max_s, t_end)
