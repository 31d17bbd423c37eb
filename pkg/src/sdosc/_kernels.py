"""Hot loops: Dormand-Prince 5(4) stepping of the Lienard-chart flow with
switching-line splitting and section events.

Everything here is written as scalar loops over small numpy arrays so that
the same source runs either compiled by numba or as plain Python.  Set
``SDOSC_NO_NUMBA=1`` to force the plain path (it is also used when numba
cannot be imported).
"""
import math
import os

import numpy as np

USE_NUMBA = False
if os.environ.get("SDOSC_NO_NUMBA", "").strip().lower() in ("", "0", "false", "no"):
    try:
        from numba import njit
        USE_NUMBA = True
    except ImportError:  # pragma: no cover
        pass


def jit(fn):
    if USE_NUMBA:
        return njit(cache=True, nogil=True)(fn)  # nogil so threads overlap
    return fn


# integration outcome codes
HIT = 0
TMAX = 1
ESCAPED = 2
TRAPPED = 3
UNDERFLOW = -1
NONFINITE = -2

# event codes (user events use their index >= 0)
EV_SWITCH = -1
EV_GRAZE = -2

TRAP_SPEED = 1e-13
TRAP_STEPS = 10

# Dormand-Prince 5(4)
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200,
              -22 / 525, 1 / 40])
# quartic continuous extension, coefficients of theta, theta^2, theta^3, theta^4
P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423,
     69997945 / 29380423],
])


@jit
def rhs(x, y, s, a, bt, d, dirn, out):
    # s is the side of the switching line whose vector field is in use
    out[0] = dirn * y
    out[1] = dirn * (-(x - s - a) - d * x * x * y - bt * y)
    out[2] = dirn * (-(d * x * x + bt))


@jit
def poly_eval(c0, c1, c2, c3, c4, th):
    return c0 + th * (c1 + th * (c2 + th * (c3 + th * c4)))


@jit
def poly_root(c0, c1, c2, c3, c4, lo, hi, tol):
    """Root of the quartic on [lo, hi]; the ends must bracket a sign change.

    Bisection safeguarded secant (Illinois weighting).  Returns nan when the
    end values have the same strict sign.
    """
    flo = poly_eval(c0, c1, c2, c3, c4, lo)
    fhi = poly_eval(c0, c1, c2, c3, c4, hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        return np.nan
    side = 0
    for it in range(200):
        w = hi - lo
        if w <= tol:
            break
        m = hi - fhi * (hi - lo) / (fhi - flo)
        if not (lo < m < hi) or it % 4 == 3:
            m = 0.5 * (lo + hi)
        fm = poly_eval(c0, c1, c2, c3, c4, m)
        if fm == 0.0:
            return m
        if flo * fm < 0.0:
            hi = m
            fhi = fm
            if side == -1:
                flo *= 0.5
            side = -1
        else:
            lo = m
            flo = fm
            if side == 1:
                fhi *= 0.5
            side = 1
    return 0.5 * (lo + hi)


@jit
def _grow(arr, n):
    new = np.empty((max(2 * arr.shape[0], n),) + arr.shape[1:])
    new[:arr.shape[0]] = arr
    return new


@jit
def _dense_state(z, Q, th, out):
    for c in range(3):
        out[c] = poly_eval(z[c], Q[c, 0], Q[c, 1], Q[c, 2], Q[c, 3], th)


@jit
def integrate(x0, y0, side0, dirn, a, b, d, rtol, atol, tol_t, max_step,
              t_max, esc_r, ev_n, ev_p, ev_box, ev_dir, ev_term, sw_code,
              sw_dir, sw_term, store, graze_tol):
    """Integrate from (x0, y0) (Lienard chart) until a terminal event.

    dirn = +1 forward, -1 backward (vector field negated).  side0 selects the
    branch of sgn(x) at a start on x = 0 (0 picks it from the motion).
    The third state component accumulates int -f(x) dt.

    Section k is the line ev_n[k].(z - ev_p[k]) = 0 restricted to the box
    ev_box[k] = (xlo, xhi, ylo, yhi); ev_dir[k] is the required sign of the
    crossing in physical time (0 for any).  Crossings of x = 0 are always
    located; they are reported under code sw_code (when >= 0 and the
    direction matches) and may stop the run if sw_term is set.

    store: 0 keep nothing, 1 keep accepted steps, 2 also keep dense segments.

    Returns (status, t, z, side, samples, n_samples, events, n_events,
    dense, n_dense).  Sample rows are (t, x, y, q, side); event rows are
    (t, x, y, q, code); dense rows are (t0, h, theta_end, z0[3], Q[3x4]).
    """
    bt = d * b
    m = ev_n.shape[0]
    z = np.array([x0, y0, 0.0])
    if side0 != 0:
        s = float(side0)
    elif x0 > 0:
        s = 1.0
    elif x0 < 0:
        s = -1.0
    elif dirn * y0 < 0:
        s = -1.0
    else:
        # on the axis with y = 0 both one-sided accelerations push into x > 0
        s = 1.0

    cap = 64 if store > 0 else 1
    samples = np.empty((cap, 5))
    events = np.empty((8, 5))
    dense = np.empty((cap if store > 1 else 1, 18))
    ns = 0
    ne = 0
    nd = 0
    if store > 0:
        samples[0, 0] = 0.0
        samples[0, 1] = z[0]
        samples[0, 2] = z[1]
        samples[0, 3] = 0.0
        samples[0, 4] = s
        ns = 1

    K = np.empty((7, 3))
    zi = np.empty(3)
    znew = np.empty(3)
    zev = np.empty(3)
    tmp = np.empty(3)
    Q = np.empty((3, 4))
    cand_th = np.empty(m + 2)
    cand_code = np.empty(m + 2, dtype=np.int64)
    cand_z = np.empty((m + 2, 3))

    rhs(z[0], z[1], s, a, bt, d, dirn, tmp)
    K[0, :] = tmp
    t = 0.0
    h = min(max_step, 1e-2)
    slow = 0
    bad = 0
    status = TMAX

    while True:
        if t >= t_max:
            status = TMAX
            break
        hh = min(h, max_step, t_max - t)
        if hh <= 1e-15 * max(1.0, abs(t)):
            status = UNDERFLOW
            break
        for i in range(1, 7):
            for c in range(3):
                acc = 0.0
                for j in range(i):
                    acc += A[i, j] * K[j, c]
                zi[c] = z[c] + hh * acc
            rhs(zi[0], zi[1], s, a, bt, d, dirn, tmp)
            K[i, :] = tmp
        # the last stage was evaluated at the fifth order solution
        en = 0.0
        finite = True
        for c in range(3):
            znew[c] = zi[c]
            err = 0.0
            for j in range(7):
                err += E[j] * K[j, c]
            err *= hh
            sc = atol + rtol * max(abs(z[c]), abs(znew[c]))
            en += (err / sc) ** 2
            if not math.isfinite(znew[c]):
                finite = False
        en = math.sqrt(en / 3.0)
        if not finite or not math.isfinite(en):
            bad += 1
            if bad > 60:
                status = NONFINITE
                break
            h = 0.2 * hh
            continue
        if en > 1.0:
            h = hh * max(0.2, 0.9 * en ** -0.2)
            continue
        bad = 0
        if en == 0.0:
            h_next = 10.0 * hh
        else:
            h_next = hh * min(10.0, 0.9 * en ** -0.2)

        # dense output coefficients
        for c in range(3):
            for j in range(4):
                acc = 0.0
                for i in range(7):
                    acc += K[i, c] * P[i, j]
                Q[c, j] = hh * acc
        tol_th = max(tol_t / hh, 1e-15)

        # switching line and tangency to it
        nc = 0
        th_end = 1.0
        switched = False
        th_sw = 1.0
        th_ext = -1.0
        if z[1] * znew[1] < 0.0:
            th_ext = poly_root(z[1], Q[1, 0], Q[1, 1], Q[1, 2], Q[1, 3],
                               0.0, 1.0, tol_th)
        if s * znew[0] < 0.0 or (znew[0] == 0.0 and z[0] != 0.0):
            lo = 0.0
            if z[0] == 0.0 and th_ext > 0.0:
                lo = th_ext
            th_sw = poly_root(z[0], Q[0, 0], Q[0, 1], Q[0, 2], Q[0, 3],
                              lo, 1.0, tol_th)
            if math.isnan(th_sw):
                th_sw = 1.0
            switched = True
        elif th_ext > 0.0:
            xm = poly_eval(z[0], Q[0, 0], Q[0, 1], Q[0, 2], Q[0, 3], th_ext)
            if s * xm < 0.0:
                # entered and left the other side within one step
                th_sw = poly_root(z[0], Q[0, 0], Q[0, 1], Q[0, 2], Q[0, 3],
                                  0.0, th_ext, tol_th)
                if math.isnan(th_sw):
                    th_sw = th_ext
                switched = True
            elif abs(xm) < graze_tol:
                _dense_state(z, Q, th_ext, zev)
                zev[1] = 0.0
                cand_th[nc] = th_ext
                cand_code[nc] = EV_GRAZE
                cand_z[nc, :] = zev
                nc += 1
        if switched:
            th_end = th_sw
            if nc > 0 and cand_th[0] > th_end:
                nc = 0

        # user sections on [0, th_end]
        _dense_state(z, Q, th_end, zev)
        for k in range(m):
            nx = ev_n[k, 0]
            ny = ev_n[k, 1]
            e0 = nx * (z[0] - ev_p[k, 0]) + ny * (z[1] - ev_p[k, 1])
            e1 = nx * (zev[0] - ev_p[k, 0]) + ny * (zev[1] - ev_p[k, 1])
            if not (e0 * e1 < 0.0 or (e1 == 0.0 and e0 != 0.0)):
                continue
            obs = 1.0 if e1 > e0 else -1.0
            if ev_dir[k] != 0 and obs * dirn != ev_dir[k]:
                continue
            th = poly_root(e0, nx * Q[0, 0] + ny * Q[1, 0],
                           nx * Q[0, 1] + ny * Q[1, 1],
                           nx * Q[0, 2] + ny * Q[1, 2],
                           nx * Q[0, 3] + ny * Q[1, 3], 0.0, th_end, tol_th)
            if math.isnan(th):
                continue
            _dense_state(z, Q, th, tmp)
            # snap onto the section line
            ee = nx * (tmp[0] - ev_p[k, 0]) + ny * (tmp[1] - ev_p[k, 1])
            nn = nx * nx + ny * ny
            tmp[0] -= ee * nx / nn
            tmp[1] -= ee * ny / nn
            if nx == 0.0:
                tmp[1] = ev_p[k, 1]
            if ny == 0.0:
                tmp[0] = ev_p[k, 0]
            if not (ev_box[k, 0] < tmp[0] < ev_box[k, 1]
                    and ev_box[k, 2] < tmp[1] < ev_box[k, 3]):
                continue
            cand_th[nc] = th
            cand_code[nc] = k
            cand_z[nc, :] = tmp
            nc += 1

        # earliest terminal event, if any
        th_stop = 2.0
        for i in range(nc):
            k = cand_code[i]
            if k >= 0 and ev_term[k] and cand_th[i] < th_stop:
                th_stop = cand_th[i]
        # record events in time order (simple selection, nc is tiny)
        done = np.zeros(nc, dtype=np.bool_)
        for _ in range(nc):
            best = -1
            for i in range(nc):
                if not done[i] and (best < 0 or cand_th[i] < cand_th[best]):
                    best = i
            done[best] = True
            if cand_th[best] > th_stop:
                continue
            if ne >= events.shape[0]:
                events = _grow(events, ne + 1)
            events[ne, 0] = t + cand_th[best] * hh
            events[ne, 1] = cand_z[best, 0]
            events[ne, 2] = cand_z[best, 1]
            events[ne, 3] = cand_z[best, 2]
            events[ne, 4] = cand_code[best]
            ne += 1
        if store > 1:
            if nd >= dense.shape[0]:
                dense = _grow(dense, nd + 1)
            dense[nd, 0] = t
            dense[nd, 1] = hh
            dense[nd, 2] = min(th_end, th_stop)
            for c in range(3):
                dense[nd, 3 + c] = z[c]
                for j in range(4):
                    dense[nd, 6 + 4 * c + j] = Q[c, j]
            nd += 1

        if th_stop <= 1.0:
            # stop on the first terminal event
            for i in range(nc):
                if cand_th[i] == th_stop and cand_code[i] >= 0:
                    z[:] = cand_z[i]
                    break
            t = t + th_stop * hh
            status = HIT
            if store > 0:
                if ns >= samples.shape[0]:
                    samples = _grow(samples, ns + 1)
                samples[ns, 0] = t
                samples[ns, 1] = z[0]
                samples[ns, 2] = z[1]
                samples[ns, 3] = z[2]
                samples[ns, 4] = s
                ns += 1
            break

        if switched:
            _dense_state(z, Q, th_end, zev)
            zev[0] = 0.0
            if ne >= events.shape[0]:
                events = _grow(events, ne + 1)
            t = t + th_end * hh
            code = EV_SWITCH
            stop_here = False
            if sw_code >= 0 and (sw_dir == 0 or -s * dirn == sw_dir):
                code = sw_code
                stop_here = sw_term
            events[ne, 0] = t
            events[ne, 1] = 0.0
            events[ne, 2] = zev[1]
            events[ne, 3] = zev[2]
            events[ne, 4] = code
            ne += 1
            z[:] = zev
            s = -s
            if stop_here:
                status = HIT
                if store > 0:
                    if ns >= samples.shape[0]:
                        samples = _grow(samples, ns + 1)
                    samples[ns, 0] = t
                    samples[ns, 1] = z[0]
                    samples[ns, 2] = z[1]
                    samples[ns, 3] = z[2]
                    samples[ns, 4] = s
                    ns += 1
                break
            rhs(z[0], z[1], s, a, bt, d, dirn, tmp)
            K[0, :] = tmp
            h = max(hh * th_end, min(h_next, hh))
        else:
            t = t + hh
            z[:] = znew
            K[0, :] = K[6, :]
            h = h_next

        if store > 0:
            if ns >= samples.shape[0]:
                samples = _grow(samples, ns + 1)
            samples[ns, 0] = t
            samples[ns, 1] = z[0]
            samples[ns, 2] = z[1]
            samples[ns, 3] = z[2]
            samples[ns, 4] = s
            ns += 1

        if z[0] * z[0] + z[1] * z[1] > esc_r * esc_r:
            status = ESCAPED
            break
        if math.hypot(K[0, 0], K[0, 1]) < TRAP_SPEED:
            slow += 1
            if slow >= TRAP_STEPS:
                status = TRAPPED
                break
        else:
            slow = 0

    return status, t, z, s, samples, ns, events, ne, dense, nd


@jit
def shoot_batch(cs, a, b, d, rtol, atol, tol_t, max_step, t_max, esc_r):
    """First forward and backward hits of the positive x-axis from (c, 0).

    Returns rows (x_plus, x_minus, status_plus, status_minus, t_plus, t_minus).
    """
    ev_n = np.array([[0.0, 1.0]])
    ev_p = np.array([[0.0, 0.0]])
    ev_box = np.array([[0.0, np.inf, -np.inf, np.inf]])
    ev_dir = np.array([-1], dtype=np.int64)
    ev_term = np.array([True])
    n = cs.shape[0]
    out = np.empty((n, 6))
    for i in range(n):
        for k in range(2):
            dirn = 1.0 if k == 0 else -1.0
            res = integrate(cs[i], 0.0, 0, dirn, a, b, d, rtol, atol, tol_t,
                            max_step, t_max, esc_r, ev_n, ev_p, ev_box, ev_dir,
                            ev_term, -1, 0, False, 0, 0.0)
            st = res[0]
            out[i, 2 + k] = st
            out[i, 4 + k] = res[1]
            out[i, k] = res[2][0] if st == HIT else np.nan
    return out
