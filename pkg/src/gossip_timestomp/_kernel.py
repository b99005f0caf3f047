"""Compiled inner loop of the event engine.

Arithmetic here mirrors ``engine._advance_python`` operation for operation
so the two backends agree to the last bit on identical uniform draws.
"""

import numpy as np
from numba import njit

# status codes
CHUNK_EXHAUSTED = 0
HORIZON_REACHED = 1
DUPLICATE_TIME = -1
CLOCK_INVERSION = -2

# transform codes, kept in sync with engine.Transform
NONE = 0
STOMP_OUTGOING = 1
STOMP_INCOMING = 2
FORCE_FRESH = 3


@njit(cache=True, nogil=True)
def _integrate(j, tau, origin, integral, last):
    width = tau - last[j]
    age = last[j] - origin[j]
    if width < 0.0 or age < 0.0:
        return False
    integral[j] += width * age + width * width / 2
    last[j] = tau
    return True


@njit(cache=True, nogil=True)
def _integrate_sets(tau, clock, origin, set_holder, set_acc):
    width = tau - clock[2]
    for s in range(set_holder.shape[0]):
        age = clock[2] - origin[set_holder[s]]
        set_acc[s] += width * age + width * width / 2
    clock[2] = tau


@njit(cache=True, nogil=True)
def _refresh_holders(claimed, set_ptr, set_idx, set_holder):
    for s in range(set_holder.shape[0]):
        best = set_idx[set_ptr[s]]
        for m in range(set_ptr[s] + 1, set_ptr[s + 1]):
            j = set_idx[m]
            if claimed[j] > claimed[best]:
                best = j
        set_holder[s] = best


@njit(cache=True, nogil=True)
def _sweep(tau, clock, origin, integral, last, set_holder, set_acc):
    for j in range(1, origin.shape[0]):
        if not _integrate(j, tau, origin, integral, last):
            return False
    _integrate_sets(tau, clock, origin, set_holder, set_acc)
    return True


@njit(cache=True, nogil=True)
def _pick(cum, x):
    lo = 0
    hi = cum.shape[0] - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cum[mid] > x:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True, nogil=True)
def advance(
    claimed, origin, integral, last, snap,
    cum, src, dst, kind, param,
    uniforms, clock, horizon, t_burn,
    set_ptr, set_idx, set_holder, set_acc, set_snap,
):
    """Consume rows of ``uniforms`` until exhausted or past ``horizon``.

    ``clock`` holds [current time, burned-in flag, set-integral time,
    event count]. Returns a status code.
    """
    total = cum[cum.shape[0] - 1]
    for row in range(uniforms.shape[0]):
        t = clock[0]
        t_new = t - np.log(1.0 - uniforms[row, 0]) / total
        if t_new > horizon:
            if clock[1] == 0.0:
                if not _sweep(t_burn, clock, origin, integral, last, set_holder, set_acc):
                    return CLOCK_INVERSION
                snap[:] = integral
                set_snap[:] = set_acc
                clock[1] = 1.0
            if not _sweep(horizon, clock, origin, integral, last, set_holder, set_acc):
                return CLOCK_INVERSION
            clock[0] = horizon
            return HORIZON_REACHED
        if t_new <= t:
            return DUPLICATE_TIME
        if clock[1] == 0.0 and t_new > t_burn:
            if not _sweep(t_burn, clock, origin, integral, last, set_holder, set_acc):
                return CLOCK_INVERSION
            snap[:] = integral
            set_snap[:] = set_acc
            clock[1] = 1.0
        if set_holder.shape[0] > 0:
            _integrate_sets(t_new, clock, origin, set_holder, set_acc)

        c = _pick(cum, uniforms[row, 1] * total)
        s = src[c]
        d = dst[c]
        if s == 0:
            in_claimed = t_new
            in_origin = t_new
        else:
            in_claimed = claimed[s]
            in_origin = origin[s]
        k = kind[c]
        if k == STOMP_OUTGOING:
            in_claimed = t_new if uniforms[row, 2] < param[c] else 0.0
        elif k == STOMP_INCOMING:
            in_claimed = 0.0 if uniforms[row, 2] < param[c] else t_new
        elif k == FORCE_FRESH:
            in_claimed = t_new

        if not _integrate(d, t_new, origin, integral, last):
            return CLOCK_INVERSION
        if in_claimed > claimed[d]:
            claimed[d] = in_claimed
            origin[d] = in_origin
            if set_holder.shape[0] > 0:
                _refresh_holders(claimed, set_ptr, set_idx, set_holder)
        clock[0] = t_new
        clock[3] += 1.0
    return CHUNK_EXHAUSTED
