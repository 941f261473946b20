"""Compiled inner loop of the free-string wrapping process.

The loop is resumable: it fills preallocated buffers and returns
``STATUS_BUFFER_FULL`` when it runs out of room so the caller can grow the
arrays and call again.
"""

import math

from numba import njit

STATUS_BUFFER_FULL = 0
STATUS_CLOSED = 1
STATUS_MAX_ROUNDS = 2
STATUS_DIVERGED = 3
STATUS_TOO_COARSE = 4

# largest admissible turn of the string direction within one step (radians)
MAX_TURN = 0.5
DIVERGENCE_RADIUS = 1e250


@njit(cache=True)
def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


@njit(cache=True)
def _segment_hit(px, py, qx, qy, ax, ay, bx, by):
    """Parameter t in [0, 1] along p->q where it meets segment a->b, else -1."""
    rx, ry = qx - px, qy - py
    sx, sy = bx - ax, by - ay
    denom = _cross(rx, ry, sx, sy)
    if denom == 0.0:
        return -1.0
    t = _cross(ax - px, ay - py, sx, sy) / denom
    u = _cross(ax - px, ay - py, rx, ry) / denom
    if 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0:
        return t
    return -1.0


@njit(cache=True)
def wrap(X, Y, S, FS, TX, TY, SUP, state, marks, ca, sa, ds, relative, A, max_marks, max_turn):
    """Advance the curve from sample ``state[0]``.

    ``state`` holds [i, k, n_marks, next_mark] as floats; ``marks`` has rows
    (arc, value, fractional sample position).  Returns a status code.
    """
    i = int(state[0])
    k = int(state[1])
    n_marks = int(state[2])
    next_mark = int(state[3])
    cap = X.shape[0]
    status = STATUS_BUFFER_FULL
    while i + 1 < cap:
        x0, y0 = X[i], Y[i]
        if relative:
            h = ds * max(1.0, math.hypot(x0, y0) / A)
        else:
            h = ds
        px = x0 + h * TX[i]
        py = y0 + h * TY[i]

        # advance the support vertex while the new point lies left of the edge line
        hit_t = -1.0
        while k + 1 < i:
            ax, ay = X[k], Y[k]
            bx, by = X[k + 1], Y[k + 1]
            if _cross(bx - ax, by - ay, px - ax, py - ay) < 0.0:
                break
            hit_t = _segment_hit(x0, y0, px, py, ax, ay, bx, by)
            if hit_t >= 0.0:
                break
            k += 1
        if hit_t >= 0.0 or k + 1 >= i:
            if hit_t < 0.0:
                hit_t = 1.0
            # the barrier meets the previous coil
            cx = x0 + hit_t * (px - x0)
            cy = y0 + hit_t * (py - y0)
            ax, ay = X[k], Y[k]
            seg = math.hypot(X[k + 1] - ax, Y[k + 1] - ay)
            frac = 0.0
            if seg > 0.0:
                frac = math.hypot(cx - ax, cy - ay) / seg
            X[i + 1] = cx
            Y[i + 1] = cy
            S[i + 1] = S[i] + hit_t * h
            FS[i + 1] = 0.0
            TX[i + 1] = TX[i]
            TY[i + 1] = TY[i]
            SUP[i + 1] = S[k] + frac * (S[k + 1] - S[k])
            i += 1
            status = STATUS_CLOSED
            break

        # refine the tangent point between vertices: cross(T, p - c) changes sign there;
        # without a sign change the vertex k itself is used
        m_lo = max(k - 3, 0)
        m_hi = min(k + 2, i - 2)
        sig = S[k]
        cx, cy = X[k], Y[k]
        best = 1 << 30
        for m in range(m_lo, m_hi + 1):
            hm = _cross(TX[m], TY[m], px - X[m], py - Y[m])
            hn = _cross(TX[m + 1], TY[m + 1], px - X[m + 1], py - Y[m + 1])
            if hm >= 0.0 and hn < 0.0 and abs(m - k) < best:
                best = abs(m - k)
                f = hm / (hm - hn)
                sig = S[m] + f * (S[m + 1] - S[m])
                cx = X[m] + f * (X[m + 1] - X[m])
                cy = Y[m] + f * (Y[m + 1] - Y[m])
        F = math.hypot(px - cx, py - cy)
        if F <= h:
            X[i + 1] = px
            Y[i + 1] = py
            S[i + 1] = S[i] + h
            FS[i + 1] = F
            TX[i + 1] = TX[i]
            TY[i + 1] = TY[i]
            SUP[i + 1] = sig
            i += 1
            status = STATUS_CLOSED
            break
        ux = (px - cx) / F
        uy = (py - cy) / F
        tx = ux * ca - uy * sa
        ty = ux * sa + uy * ca
        # previous string direction is the previous tangent turned back by alpha
        pux = TX[i] * ca + TY[i] * sa
        puy = -TX[i] * sa + TY[i] * ca
        if ux * pux + uy * puy < math.cos(max_turn):
            status = STATUS_TOO_COARSE
            break

        # record linkage marks passed by the support point during this step
        s_old = SUP[i]
        while next_mark < n_marks and sig >= marks[next_mark, 0] and n_marks < max_marks:
            target = marks[next_mark, 0]
            f = 0.0
            if sig > s_old:
                f = (target - s_old) / (sig - s_old)
            marks[n_marks, 0] = S[i] + f * h
            marks[n_marks, 1] = FS[i] + f * (F - FS[i])
            marks[n_marks, 2] = i + f
            n_marks += 1
            next_mark += 1

        X[i + 1] = px
        Y[i + 1] = py
        S[i + 1] = S[i] + h
        FS[i + 1] = F
        TX[i + 1] = tx
        TY[i + 1] = ty
        SUP[i + 1] = sig
        i += 1

        if n_marks >= max_marks:
            status = STATUS_MAX_ROUNDS
            break
        if math.hypot(px, py) > DIVERGENCE_RADIUS:
            status = STATUS_DIVERGED
            break
    state[0] = i
    state[1] = k
    state[2] = n_marks
    state[3] = next_mark
    return status
