"""Compiled hot loop for the two built-in protocols.

Agents are rows of an ``(n, 6)`` int64 array ``[kind, coin, a, b, c, d]``:

=========  =============================================
RANKED     a = rank
RESET      a = reset_count, b = delay_count
ELECT      a = le_count, b = coin_count, c = done, d = leader
WAIT       a = alive_count, b = wait_count
PHASE      a = alive_count, b = phase
LE         a = designated, b = meetings, c = done, d = leader
=========  =============================================

Unused fields are always 0 so rows compare equal iff states are equal.
Inside the kernels a state travels as a plain 6-tuple, which numba keeps
in registers; only the loops touch the array.
The transitions mirror :mod:`popstab.ranking` and :mod:`popstab.stable`
line for line; the test suite checks the two agree.
"""

import numpy as np
from numba import njit

RANKED, RESET, ELECT, WAIT, PHASE, LE = 0, 1, 2, 3, 4, 5
NF = 6
KIND, COIN, A, B, C, D = 0, 1, 2, 3, 4, 5

# order of the parameter tuple ``p`` passed to every kernel
P_N, P_K, P_W, P_L, P_D, P_R, P_TICK, P_ROUNDS = range(8)
NPARAMS = 8

PROTO_NONSS, PROTO_STABLE = 0, 1

FLAG_RESET = 1


_JIT = dict(cache=True, nogil=True, error_model="numpy")


@njit(**_JIT)
def _f(n, k):
    """Phase bound f_k (1-based): halving from n, with f_{K+1} = 1."""
    return ((n - 1) >> (k - 1)) + 1


@njit(**_JIT)
def _is_main(kind):
    return kind == RANKED or kind == WAIT or kind == PHASE


@njit(**_JIT)
def _reset_of(s, p):
    coin = 0 if s[KIND] == RANKED else s[COIN]
    return (RESET, coin, p[P_R], p[P_D], 0, 0)


@njit(**_JIT)
def _ranking_core(u, v, p, main):
    if v[KIND] != PHASE:
        return u, v
    n = p[P_N]
    K = p[P_K]
    if u[KIND] == RANKED:
        r = u[A]
        k = v[B]
        fk = _f(n, k)
        fk1 = _f(n, k + 1)
        width = fk - fk1
        if 1 <= r <= width:
            v = (RANKED, 0, fk1 + r, 0, 0, 0)
            if r < width:
                u = (RANKED, 0, r + 1, 0, 0, 0)
            elif k < K:
                alive = p[P_L] if main else 0
                u = (WAIT, 0, alive, p[P_W], 0, 0)
        if r == fk and v[KIND] == PHASE and k < K:
            v = (v[KIND], v[COIN], v[A], k + 1, 0, 0)
    elif u[KIND] == PHASE:
        top = max(u[B], v[B])
        u = (u[KIND], u[COIN], u[A], top, 0, 0)
        v = (v[KIND], v[COIN], v[A], top, 0, 0)
    elif u[KIND] == WAIT:
        w = u[B] - 1
        if w <= 0:
            u = (RANKED, 0, 1, 0, 0, 0)
        else:
            u = (u[KIND], u[COIN], u[A], w, 0, 0)
    return u, v


@njit(**_JIT)
def _oracle_le_step(s, p):
    if s[A] == 1 and s[C] == 0:
        m = s[B] + 1
        if m >= p[P_ROUNDS]:
            return (LE, 0, 1, m, 1, 1)
        return (LE, 0, 1, m, 0, 0)
    return s


@njit(**_JIT)
def nonss_transition(u, v, p):
    if u[KIND] == LE and v[KIND] == LE:
        u = _oracle_le_step(u, p)
        v = _oracle_le_step(v, p)
    if u[KIND] == LE and u[C] == 1 and u[D] == 1:
        return (WAIT, 0, 0, p[P_W], 0, 0), v, 0
    if v[KIND] == LE and v[C] == 1 and v[D] == 1:
        return u, (WAIT, 0, 0, p[P_W], 0, 0), 0
    u_le = u[KIND] == LE
    v_le = v[KIND] == LE
    if u_le and not v_le:
        u = (PHASE, 0, 0, 1, 0, 0)
    elif v_le and not u_le:
        v = (PHASE, 0, 0, 1, 0, 0)
    elif not u_le and not v_le:
        u, v = _ranking_core(u, v, p, False)
    return u, v, 0


@njit(**_JIT)
def _wake_if_spent(s, p):
    if s[KIND] == RESET and s[A] == 0 and s[B] <= 0:
        return (ELECT, s[COIN], p[P_L], p[P_K], 0, 0)
    return s


@njit(**_JIT)
def _tick_dormant(s, p):
    delay = s[B] - 1
    if delay <= 0:
        return (ELECT, s[COIN], p[P_L], p[P_K], 0, 0)
    return (RESET, s[COIN], 0, delay, 0, 0)


@njit(**_JIT)
def _infect(s, reset_count, p):
    coin = 0 if s[KIND] == RANKED else s[COIN]
    return (RESET, coin, reset_count, p[P_D], 0, 0)


@njit(**_JIT)
def _propagate_reset(u, v, p):
    u_res = u[KIND] == RESET
    v_res = v[KIND] == RESET
    u_prop = u_res and u[A] > 0
    v_prop = v_res and v[A] > 0
    u_dorm = u_res and u[A] == 0
    v_dorm = v_res and v[A] == 0
    if u_prop and v_prop:
        top = max(u[A], v[A]) - 1
        u = (RESET, u[COIN], top, u[B], 0, 0)
        v = (RESET, v[COIN], top, v[B], 0, 0)
    elif u_prop and not v_res:
        rc = u[A] - 1
        u = (RESET, u[COIN], rc, u[B], 0, 0)
        v = _infect(v, rc, p)
    elif v_prop and not u_res:
        rc = v[A] - 1
        v = (RESET, v[COIN], rc, v[B], 0, 0)
        u = _infect(u, rc, p)
    elif u_prop and v_dorm:
        u = (RESET, u[COIN], u[A] - 1, u[B], 0, 0)
    elif v_prop and u_dorm:
        v = (RESET, v[COIN], v[A] - 1, v[B], 0, 0)
    if u_dorm:
        u = _tick_dormant(u, p)
    if v_dorm:
        v = _tick_dormant(v, p)
    u = _wake_if_spent(u, p)
    v = _wake_if_spent(v, p)
    flag = 0
    if p[P_TICK] != 0 and v_dorm and u[KIND] == ELECT:
        le = u[A] - 1
        if le <= 0:
            u = _reset_of(u, p)
            flag = FLAG_RESET
        else:
            u = (ELECT, u[COIN], le, u[B], u[C], u[D])
    return u, v, flag


@njit(**_JIT)
def _fast_le(u, v, p):
    le = max(u[A] - 1, 0)
    cc = u[B]
    done = u[C]
    lead = u[D]
    if v[COIN] == 0:
        done = 1
    if done == 0:
        if cc > 0:
            cc -= 1
        if cc == 0:
            lead = 1
            done = 1
    if 2 * le >= p[P_L] and lead == 1:
        return (WAIT, u[COIN], p[P_L], p[P_W], 0, 0), 0
    if le == 0:
        return _reset_of(u, p), FLAG_RESET
    return (ELECT, u[COIN], le, cc, done, lead), 0


@njit(**_JIT)
def _with_alive(s, alive):
    return (s[KIND], s[COIN], alive, s[B], 0, 0)


@njit(**_JIT)
def _ranking_plus(u, v, p):
    n = p[P_N]
    uk = u[KIND]
    vk = v[KIND]
    if uk == RANKED and vk == RANKED and u[A] == v[A]:
        return _reset_of(u, p), v, FLAG_RESET
    if uk == WAIT and vk == WAIT:
        return _reset_of(u, p), v, FLAG_RESET
    u_alive = uk != RANKED
    v_alive = vk != RANKED
    if u_alive and v_alive:
        m = max(max(u[A], v[A]) - 1, 0)
        u = _with_alive(u, m)
        v = _with_alive(v, m)
    if uk == RANKED and u[A] >= n - 1 and v_alive:
        v = _with_alive(v, max(v[A] - 1, 0))
    if not v_alive:
        return u, v, 0
    if v[A] == 0:
        return u, _reset_of(v, p), FLAG_RESET
    if v[COIN] == 0:
        if vk == PHASE and (uk == WAIT or (uk == RANKED and u[A] <= (n >> v[B]))):
            v = _with_alive(v, p[P_L])
        return u, v, 0
    u, v = _ranking_core(u, v, p, True)
    return u, v, 0


@njit(**_JIT)
def stable_transition(u, v, p):
    flag = 0
    if u[KIND] == RESET or v[KIND] == RESET:
        u, v, flag = _propagate_reset(u, v, p)
    else:
        if u[KIND] == ELECT and v[KIND] == ELECT:
            u, fl = _fast_le(u, v, p)
            flag |= fl
        if u[KIND] == ELECT and _is_main(v[KIND]):
            u = (PHASE, u[COIN], p[P_L], 1, 0, 0)
        elif v[KIND] == ELECT and _is_main(u[KIND]):
            v = (PHASE, v[COIN], p[P_L], 1, 0, 0)
        if _is_main(u[KIND]) and _is_main(v[KIND]):
            u, v, fl = _ranking_plus(u, v, p)
            flag |= fl
    if v[KIND] != RANKED:
        v = (v[KIND], 1 - v[COIN], v[A], v[B], v[C], v[D])
    return u, v, flag


@njit(**_JIT)
def transition(u, v, p, proto):
    """``(u', v', flag)`` for one interaction; ``flag`` marks a reset trigger."""
    if proto == PROTO_STABLE:
        return stable_transition(u, v, p)
    return nonss_transition(u, v, p)


@njit(**_JIT)
def _row(S, i):
    return (S[i, 0], S[i, 1], S[i, 2], S[i, 3], S[i, 4], S[i, 5])


@njit(**_JIT)
def _store(S, i, s):
    S[i, 0] = s[0]
    S[i, 1] = s[1]
    S[i, 2] = s[2]
    S[i, 3] = s[3]
    S[i, 4] = s[4]
    S[i, 5] = s[5]


@njit(**_JIT)
def apply(S, i, j, p, proto):
    """Apply one interaction to rows ``i`` and ``j`` in place; returns the flag."""
    u, v, flag = transition(_row(S, i), _row(S, j), p, proto)
    _store(S, i, u)
    _store(S, j, v)
    return flag


@njit(**_JIT)
def _refill(g, n, ib, jb):
    ib[:] = g.integers(0, n, size=ib.shape[0])
    jb[:] = g.integers(0, n - 1, size=jb.shape[0])


@njit(**_JIT)
def is_silent_rows(U, counts, p, proto):
    """Silence over distinct rows ``U`` with multiplicities ``counts``."""
    d = U.shape[0]
    for x in range(d):
        for y in range(d):
            if x == y and counts[x] < 2:
                continue
            u = _row(U, x)
            v = _row(U, y)
            u2, v2, _ = transition(u, v, p, proto)
            if u2 != u or v2 != v:
                return False
    return True


# time-series columns
TS_T, TS_RANKED, TS_AVG_PHASE, TS_POTENTIAL, TS_RESETTING, TS_ELECTING, TS_WAITING = range(7)
TS_COLS = 7


@njit(**_JIT)
def sample_row(S, out, t):
    n = S.shape[0]
    ranked = 0
    resetting = 0
    electing = 0
    waiting = 0
    phases = 0
    phase_sum = 0.0
    pot = 0.0
    min_rank = n + 1
    min_phase = 1 << 62
    for x in range(n):
        k = S[x, KIND]
        if k == RANKED:
            ranked += 1
            if S[x, A] < min_rank:
                min_rank = S[x, A]
        elif k == RESET:
            resetting += 1
        elif k == ELECT or k == LE:
            electing += 1
        elif k == WAIT:
            waiting += 1
        elif k == PHASE:
            phases += 1
            ph = S[x, B]
            phase_sum += ph
            pot += 2.0 ** (-ph)
            if ph < min_phase:
                min_phase = ph
    productive = phases > 0 and (waiting > 0 or (ranked > 0 and min_rank <= (n >> min_phase)))
    out[TS_T] = t
    out[TS_RANKED] = ranked
    out[TS_AVG_PHASE] = phase_sum / phases if phases > 0 else np.nan
    out[TS_POTENTIAL] = pot if (productive and resetting == 0) else 0.0
    out[TS_RESETTING] = resetting
    out[TS_ELECTING] = electing
    out[TS_WAITING] = waiting


@njit(**_JIT)
def _grow2(buf, rows):
    if rows < buf.shape[0]:
        return buf
    new = np.empty((buf.shape[0] * 2, buf.shape[1]), buf.dtype)
    new[: buf.shape[0]] = buf
    return new


@njit(**_JIT)
def _grow1(buf, size):
    if size < buf.shape[0]:
        return buf
    new = np.empty(buf.shape[0] * 2, buf.dtype)
    new[: buf.shape[0]] = buf
    return new


@njit(**_JIT)
def _advance(S, g, ib, jb, cur, p, proto, cnt, ranked, distinct, t, stop, thresholds, t_frac, nxt, resets, n_resets):
    """Inner loop of :func:`run_loop`: step until valid, ``t == stop`` or ``resets`` is full.

    Kept free of array reassignment, which would cost reference counting
    on every iteration.
    """
    n = S.shape[0]
    block = ib.shape[0]
    m = thresholds.shape[0]
    cap = resets.shape[0]
    valid = ranked == n and distinct == n
    while not valid and t < stop and n_resets < cap:
        if cur >= block:
            _refill(g, n, ib, jb)
            cur = 0
        i = ib[cur]
        j = jb[cur]
        cur += 1
        if j >= i:
            j += 1
        u = _row(S, i)
        v = _row(S, j)
        u2, v2, flag = transition(u, v, p, proto)
        t += 1
        if flag & FLAG_RESET:
            resets[n_resets] = t
            n_resets += 1
        if u2 == u and v2 == v:
            continue
        _store(S, i, u2)
        _store(S, j, v2)
        if u[KIND] == RANKED or u2[KIND] == RANKED or v[KIND] == RANKED or v2[KIND] == RANKED:
            if u[KIND] == RANKED:
                cnt[u[A]] -= 1
                ranked -= 1
                if cnt[u[A]] == 0:
                    distinct -= 1
            if v[KIND] == RANKED:
                cnt[v[A]] -= 1
                ranked -= 1
                if cnt[v[A]] == 0:
                    distinct -= 1
            if u2[KIND] == RANKED:
                cnt[u2[A]] += 1
                ranked += 1
                if cnt[u2[A]] == 1:
                    distinct += 1
            if v2[KIND] == RANKED:
                cnt[v2[A]] += 1
                ranked += 1
                if cnt[v2[A]] == 1:
                    distinct += 1
            while nxt < m and distinct >= thresholds[nxt]:
                t_frac[nxt] = t
                nxt += 1
            valid = ranked == n and distinct == n
    return cur, ranked, distinct, t, nxt, n_resets


@njit(**_JIT)
def run_loop(S, g, ib, jb, pos, p, proto, budget, sample_every, thresholds, t_frac, window):
    """Run until the ranks form a permutation of 1..n or ``budget`` interactions pass.

    Returns ``(t, t_valid, silent, window_used, series, resets)`` where
    ``t_valid`` is -1 if never reached and ``silent`` is 1/0 (or -1 when
    no confirmation ran). ``t_frac`` is filled in place (-1 = not reached)
    for the ascending ``thresholds`` on the count of distinct ranks.
    """
    n = S.shape[0]
    cnt = np.zeros(n + 1, np.int64)
    ranked = 0
    distinct = 0
    for x in range(n):
        if S[x, KIND] == RANKED:
            r = S[x, A]
            cnt[r] += 1
            ranked += 1
            if cnt[r] == 1:
                distinct += 1
    series = np.empty((64, TS_COLS), np.float64)
    n_rows = 0
    resets = np.empty(64, np.int64)
    n_resets = 0
    m = thresholds.shape[0]
    nxt = 0
    for q in range(m):
        t_frac[q] = -1

    t = 0
    while nxt < m and distinct >= thresholds[nxt]:
        t_frac[nxt] = t
        nxt += 1
    if sample_every > 0:
        sample_row(S, series[0], t)
        n_rows = 1
    cur = pos[0]
    last_sample = 0
    while not (ranked == n and distinct == n) and t < budget:
        stop = budget
        if sample_every > 0:
            stop = min(budget, (t // sample_every + 1) * sample_every)
        cur, ranked, distinct, t, nxt, n_resets = _advance(
            S, g, ib, jb, cur, p, proto, cnt, ranked, distinct, t, stop, thresholds, t_frac, nxt, resets, n_resets
        )
        if n_resets == resets.shape[0]:
            resets = _grow1(resets, n_resets)
        if sample_every > 0 and t % sample_every == 0 and t != last_sample:
            series = _grow2(series, n_rows)
            sample_row(S, series[n_rows], t)
            n_rows += 1
            last_sample = t
    valid = ranked == n and distinct == n
    t_valid = t if valid else -1
    if sample_every > 0 and last_sample != t:
        series = _grow2(series, n_rows)
        sample_row(S, series[n_rows], t)
        n_rows += 1

    silent = -1
    used = 0
    if valid and window > 0:
        silent = 1
        used, cur, changed = _silent_window(S, g, ib, jb, cur, p, proto, window)
        if changed:
            silent = 0
    pos[0] = cur
    return t, t_valid, silent, used, series[:n_rows].copy(), resets[:n_resets].copy()


@njit(**_JIT)
def _silent_window(S, g, ib, jb, cur, p, proto, window):
    """Step up to ``window`` times; stop at the first change.

    Returns ``(used, cur, changed)``.
    """
    n = S.shape[0]
    block = ib.shape[0]
    used = 0
    while used < window:
        if cur >= block:
            _refill(g, n, ib, jb)
            cur = 0
        i = ib[cur]
        j = jb[cur]
        cur += 1
        if j >= i:
            j += 1
        u = _row(S, i)
        v = _row(S, j)
        u2, v2, _ = transition(u, v, p, proto)
        used += 1
        if u2 != u or v2 != v:
            _store(S, i, u2)
            _store(S, j, v2)
            return used, cur, True
    return used, cur, False


@njit(**_JIT)
def run_steps(S, g, ib, jb, pos, p, proto, steps):
    """Apply ``steps`` interactions; returns how many changed a state."""
    n = S.shape[0]
    block = ib.shape[0]
    cur = pos[0]
    changes = 0
    for _ in range(steps):
        if cur >= block:
            _refill(g, n, ib, jb)
            cur = 0
        i = ib[cur]
        j = jb[cur]
        cur += 1
        if j >= i:
            j += 1
        u = _row(S, i)
        v = _row(S, j)
        u2, v2, _ = transition(u, v, p, proto)
        if u2 != u or v2 != v:
            _store(S, i, u2)
            _store(S, j, v2)
            changes += 1
    pos[0] = cur
    return changes
