"""Array kernels for the weight-balancing game.

State lives in integer arrays so the kernels compile under numba; without
numba they run as plain Python (slowly, but identically).
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

# slot rows
WT, LF, RT, PR, TI, LI, POS = range(7)
NSLOT_ROWS = 7
# process rows
KIND, STEPS, PA, PB, T1, T2, CUTAT = range(7)
NPROC_ROWS = 7
JOINK, SPLITK = 1, 2
# list rows
HEAD, TAIL, TOT = range(3)
NLIST_ROWS = 3

# meta cells
(M_MINW, M_MAXW, M_MAXSEG, M_SPLITS, M_JOINS, M_TIES, M_ZERO, M_FAULTS,
 M_JMIN, M_JMAX, M_HMIN, M_HMAX, M_SFREE, M_PFREE, M_LFREE, M_POOL,
 M_CUTS, M_CONCATS, M_ADDS, M_REMOVES, M_B, M_MU, M_DELTA, M_SKEW, M_CUTMODE,
 M_UPDATES, M_REFUSED, M_DEFERRED, M_OVERFLOW) = range(29)
NMETA = 29

RANDOM, GROW, CHURN, ADVERSARIAL = range(4)
STRATEGY_CODES = {"random": RANDOM, "grow": GROW, "churn": CHURN, "adversarial": ADVERSARIAL}

BIG = 1 << 60


@njit(cache=True)
def _note(meta, w):
    if w < meta[M_MINW]:
        meta[M_MINW] = w
    if w > meta[M_MAXW]:
        meta[M_MAXW] = w


@njit(cache=True)
def _new_slot(S, pool, sfree, meta, w, lid):
    n = meta[M_SFREE]
    if n == 0:
        meta[M_OVERFLOW] += 1
        return -1
    n -= 1
    meta[M_SFREE] = n
    s = sfree[n]
    S[WT, s] = w
    S[LF, s] = -1
    S[RT, s] = -1
    S[PR, s] = -1
    S[TI, s] = -1
    S[LI, s] = lid
    k = meta[M_POOL]
    pool[k] = s
    S[POS, s] = k
    meta[M_POOL] = k + 1
    _note(meta, w)
    return s


@njit(cache=True)
def _drop_slot(S, pool, sfree, meta, s):
    k = S[POS, s]
    last = meta[M_POOL] - 1
    t = pool[last]
    pool[k] = t
    S[POS, t] = k
    meta[M_POOL] = last
    S[LI, s] = -1
    S[PR, s] = -1
    S[TI, s] = -1
    sfree[meta[M_SFREE]] = s
    meta[M_SFREE] += 1


@njit(cache=True)
def _new_proc(P, pfree, meta):
    n = meta[M_PFREE] - 1
    meta[M_PFREE] = n
    pid = pfree[n]
    P[T1, pid] = -1
    P[T2, pid] = -1
    P[PB, pid] = -1
    P[STEPS, pid] = 0
    return pid


@njit(cache=True)
def _free_proc(P, pfree, meta, pid):
    P[KIND, pid] = 0
    pfree[meta[M_PFREE]] = pid
    meta[M_PFREE] += 1


@njit(cache=True)
def _segment(S, P, meta, pid):
    tot = S[WT, P[PA, pid]]
    if P[PB, pid] >= 0:
        tot += S[WT, P[PB, pid]]
    if P[T1, pid] >= 0:
        tot += S[WT, P[T1, pid]]
    if P[T2, pid] >= 0:
        tot += S[WT, P[T2, pid]]
    if tot > meta[M_MAXSEG]:
        meta[M_MAXSEG] = tot


@njit(cache=True)
def _untie(S, P, v):
    pid = S[TI, v]
    if pid < 0:
        return
    if P[T1, pid] == v:
        P[T1, pid] = P[T2, pid]
        P[T2, pid] = -1
    elif P[T2, pid] == v:
        P[T2, pid] = -1
    S[TI, v] = -1


@njit(cache=True)
def _tie(S, P, meta, v, pid):
    if P[T1, pid] < 0:
        P[T1, pid] = v
    elif P[T2, pid] < 0:
        P[T2, pid] = v
    else:
        meta[M_FAULTS] += 1
        return
    S[TI, v] = pid
    meta[M_TIES] += 1
    _segment(S, P, meta, pid)


@njit(cache=True)
def _start_join(S, P, L, pool, sfree, pfree, meta, x, y):
    # x is the left weight, y = right neighbour; y's slot disappears
    _untie(S, P, x)
    _untie(S, P, y)
    w = S[WT, x] + S[WT, y]
    S[WT, x] = w
    r = S[RT, y]
    S[RT, x] = r
    if r >= 0:
        S[LF, r] = x
    lid = S[LI, x]
    if L[TAIL, lid] == y:
        L[TAIL, lid] = x
    _drop_slot(S, pool, sfree, meta, y)
    pid = _new_proc(P, pfree, meta)
    P[KIND, pid] = JOINK
    P[PA, pid] = x
    S[PR, x] = pid
    meta[M_JOINS] += 1
    _note(meta, w)
    if w < meta[M_JMIN]:
        meta[M_JMIN] = w
    if w > meta[M_JMAX]:
        meta[M_JMAX] = w
    _segment(S, P, meta, pid)
    return pid


@njit(cache=True)
def _cut(S, P, L, pool, sfree, meta, pid):
    x = P[PA, pid]
    w = S[WT, x]
    db = meta[M_DELTA] * meta[M_B]
    if meta[M_SKEW] == 0:
        d = np.random.randint(-db + 1, db + 1)
    elif np.random.random() < 0.5:
        d = db
    else:
        d = -db + 1
    w1 = (w + d) // 2
    w2 = w - w1
    lid = S[LI, x]
    y = _new_slot(S, pool, sfree, meta, w2, lid)
    if y < 0:
        return
    r = S[RT, x]
    S[RT, x] = y
    S[LF, y] = x
    S[RT, y] = r
    if r >= 0:
        S[LF, r] = y
    if L[TAIL, lid] == x:
        L[TAIL, lid] = y
    S[WT, x] = w1
    S[PR, y] = pid
    P[PB, pid] = y
    for h in (w1, w2):
        _note(meta, h)
        if h < meta[M_HMIN]:
            meta[M_HMIN] = h
        if h > meta[M_HMAX]:
            meta[M_HMAX] = h
    _segment(S, P, meta, pid)


@njit(cache=True)
def _start_split(S, P, L, pool, sfree, pfree, meta, x, pid):
    if pid < 0:
        pid = _new_proc(P, pfree, meta)
    P[KIND, pid] = SPLITK
    P[STEPS, pid] = 0
    P[PA, pid] = x
    P[PB, pid] = -1
    b = meta[M_B]
    mode = meta[M_CUTMODE]
    if mode == 0:
        at = np.random.randint(0, b)
    elif mode == 1:
        at = b
    else:
        at = 0
    P[CUTAT, pid] = at
    S[PR, x] = pid
    meta[M_SPLITS] += 1
    if at > 0:
        meta[M_DEFERRED] += 1
    else:
        _cut(S, P, L, pool, sfree, meta, pid)
    _segment(S, P, meta, pid)


@njit(cache=True)
def _protocol(S, P, L, pool, sfree, pfree, meta, v):
    b = meta[M_B]
    mu = meta[M_MU]
    w = S[WT, v]
    if w >= (2 * mu + meta[M_DELTA] + 9) * b:
        _start_split(S, P, L, pool, sfree, pfree, meta, v, -1)
    elif w <= (mu + 3) * b:
        lft = S[LF, v]
        r = S[RT, v]
        if lft >= 0 and S[PR, lft] < 0:
            _start_join(S, P, L, pool, sfree, pfree, meta, lft, v)
        elif r >= 0 and S[PR, r] < 0:
            _start_join(S, P, L, pool, sfree, pfree, meta, v, r)
        elif lft >= 0:
            _tie(S, P, meta, v, S[PR, lft])
        elif r >= 0:
            _tie(S, P, meta, v, S[PR, r])
        else:
            meta[M_ZERO] += 1


@njit(cache=True)
def _complete(S, P, L, pool, sfree, pfree, meta, pid):
    if P[KIND, pid] == SPLITK and P[PB, pid] < 0:
        _cut(S, P, L, pool, sfree, meta, pid)
    a = P[PA, pid]
    t1 = P[T1, pid]
    t2 = P[T2, pid]
    b = meta[M_B]
    s = (2 * meta[M_MU] + meta[M_DELTA] + 9) * b
    if P[KIND, pid] == JOINK:
        S[PR, a] = -1
        if S[WT, a] >= s:
            # ties stay on the process and so reach the nearest half
            _start_split(S, P, L, pool, sfree, pfree, meta, a, pid)
            return
        if t1 >= 0:
            S[TI, t1] = -1
            if t2 >= 0:
                S[TI, t2] = -1
            _free_proc(P, pfree, meta, pid)
            if S[LF, a] == t1:
                npid = _start_join(S, P, L, pool, sfree, pfree, meta, t1, a)
            else:
                npid = _start_join(S, P, L, pool, sfree, pfree, meta, a, t1)
            if t2 >= 0:
                _tie(S, P, meta, t2, npid)
            return
        _free_proc(P, pfree, meta, pid)
        _protocol(S, P, L, pool, sfree, pfree, meta, a)
        return
    c = P[PB, pid]
    S[PR, a] = -1
    S[PR, c] = -1
    if t1 >= 0:
        S[TI, t1] = -1
    if t2 >= 0:
        S[TI, t2] = -1
    _free_proc(P, pfree, meta, pid)
    a_free = True
    c_free = True
    for t in (t1, t2):
        if t < 0:
            continue
        if S[RT, t] == a:
            _start_join(S, P, L, pool, sfree, pfree, meta, t, a)
            a_free = False
        elif S[LF, t] == c:
            _start_join(S, P, L, pool, sfree, pfree, meta, c, t)
            c_free = False
        else:
            meta[M_FAULTS] += 1
    if a_free:
        _protocol(S, P, L, pool, sfree, pfree, meta, a)
    if c_free and S[LI, c] >= 0 and S[PR, c] < 0 and S[TI, c] < 0:
        _protocol(S, P, L, pool, sfree, pfree, meta, c)


@njit(cache=True)
def _step(S, P, L, pool, sfree, pfree, meta, pid):
    P[STEPS, pid] += 1
    if P[KIND, pid] == SPLITK and P[PB, pid] < 0 and P[STEPS, pid] >= P[CUTAT, pid]:
        _cut(S, P, L, pool, sfree, meta, pid)
    if P[STEPS, pid] >= meta[M_B]:
        _complete(S, P, L, pool, sfree, pfree, meta, pid)


@njit(cache=True)
def _legal(S, P, L, meta, v, d):
    if d < 0:
        if L[TOT, S[LI, v]] + d <= (meta[M_MU] + 3) * meta[M_B]:
            return False
        if S[WT, v] + d < 1:
            return False
    pid = S[PR, v]
    if pid >= 0 and P[KIND, pid] == SPLITK and P[PB, pid] >= 0:
        other = P[PB, pid] if P[PA, pid] == v else P[PA, pid]
        if abs(S[WT, v] + d - S[WT, other]) > meta[M_DELTA] * meta[M_B]:
            return False
    return True


@njit(cache=True)
def _update(S, P, L, pool, sfree, pfree, meta, v, d):
    S[WT, v] += d
    L[TOT, S[LI, v]] += d
    _note(meta, S[WT, v])
    meta[M_UPDATES] += 1
    pid = S[PR, v]
    if pid >= 0:
        _segment(S, P, meta, pid)
        _step(S, P, L, pool, sfree, pfree, meta, pid)
        return
    pid = S[TI, v]
    if pid >= 0:
        _segment(S, P, meta, pid)
        _step(S, P, L, pool, sfree, pfree, meta, pid)
        if S[LI, v] >= 0 and S[TI, v] >= 0 and S[WT, v] > (meta[M_MU] + 3) * meta[M_B]:
            _untie(S, P, v)
        return
    _protocol(S, P, L, pool, sfree, pfree, meta, v)


@njit(cache=True)
def _add_list(S, L, pool, sfree, lfree, meta, k):
    if meta[M_LFREE] == 0 or meta[M_SFREE] < k:
        return -1
    meta[M_LFREE] -= 1
    lid = lfree[meta[M_LFREE]]
    b = meta[M_B]
    lo = (meta[M_MU] + 3) * b + 1
    hi = (2 * meta[M_MU] + meta[M_DELTA] + 9) * b - 1
    prev = -1
    tot = 0
    for _ in range(k):
        w = np.random.randint(lo, hi + 1)
        s = _new_slot(S, pool, sfree, meta, w, lid)
        S[LF, s] = prev
        if prev >= 0:
            S[RT, prev] = s
        else:
            L[HEAD, lid] = s
        prev = s
        tot += w
    L[TAIL, lid] = prev
    L[TOT, lid] = tot
    meta[M_ADDS] += 1
    return lid


@njit(cache=True)
def _remove_list(S, L, pool, sfree, lfree, meta, lid):
    b = meta[M_B]
    lo = (meta[M_MU] + 3) * b
    hi = (2 * meta[M_MU] + meta[M_DELTA] + 9) * b
    s = L[HEAD, lid]
    while s >= 0:
        if S[PR, s] >= 0 or S[TI, s] >= 0 or S[WT, s] <= lo or S[WT, s] >= hi:
            return False
        s = S[RT, s]
    s = L[HEAD, lid]
    while s >= 0:
        nxt = S[RT, s]
        _drop_slot(S, pool, sfree, meta, s)
        s = nxt
    L[HEAD, lid] = -1
    lfree[meta[M_LFREE]] = lid
    meta[M_LFREE] += 1
    meta[M_REMOVES] += 1
    return True


@njit(cache=True)
def _cuttable(S, x, y):
    px = S[PR, x]
    py = S[PR, y]
    if px >= 0 and px == py:
        return False
    if S[TI, x] >= 0 and S[TI, x] == py:
        return False
    if S[TI, y] >= 0 and S[TI, y] == px:
        return False
    return True


@njit(cache=True)
def _try_cut(S, L, lfree, meta, x):
    y = S[RT, x]
    if y < 0 or meta[M_LFREE] == 0 or not _cuttable(S, x, y):
        return
    lid = S[LI, x]
    left = 0
    s = L[HEAD, lid]
    while True:
        left += S[WT, s]
        if s == x:
            break
        s = S[RT, s]
    right = L[TOT, lid] - left
    m = (meta[M_MU] + 3) * meta[M_B]
    if left <= m or right <= m:
        return
    meta[M_LFREE] -= 1
    nid = lfree[meta[M_LFREE]]
    L[HEAD, nid] = y
    L[TAIL, nid] = L[TAIL, lid]
    L[TOT, nid] = right
    L[TAIL, lid] = x
    L[TOT, lid] = left
    S[RT, x] = -1
    S[LF, y] = -1
    s = y
    while s >= 0:
        S[LI, s] = nid
        s = S[RT, s]
    meta[M_CUTS] += 1


@njit(cache=True)
def _concat(S, L, lfree, meta, la, lb):
    ta = L[TAIL, la]
    hb = L[HEAD, lb]
    S[RT, ta] = hb
    S[LF, hb] = ta
    L[TAIL, la] = L[TAIL, lb]
    L[TOT, la] += L[TOT, lb]
    s = hb
    while s >= 0:
        S[LI, s] = la
        s = S[RT, s]
    L[HEAD, lb] = -1
    lfree[meta[M_LFREE]] = lb
    meta[M_LFREE] += 1
    meta[M_CONCATS] += 1


@njit(cache=True)
def _structural(S, P, L, pool, sfree, pfree, lfree, meta):
    n = meta[M_POOL]
    r = np.random.random()
    if n > 160 or (n > 24 and r < 0.2):
        lid = S[LI, pool[np.random.randint(n)]]
        _remove_list(S, L, pool, sfree, lfree, meta, lid)
    elif n < 24 or r < 0.4:
        _add_list(S, L, pool, sfree, lfree, meta, 2 + np.random.randint(7))
    elif r < 0.7:
        _try_cut(S, L, lfree, meta, pool[np.random.randint(n)])
    else:
        la = S[LI, pool[np.random.randint(n)]]
        lb = S[LI, pool[np.random.randint(n)]]
        if la != lb:
            _concat(S, L, lfree, meta, la, lb)


@njit(cache=True)
def _up_bias(n):
    # keeps the population between roughly 24 and 160 weights
    if n > 160:
        return 0.3
    if n < 24:
        return 0.7
    return 0.5


@njit(cache=True)
def run_game(S, P, L, pool, sfree, pfree, lfree, meta, strategy, rounds, seed, nlists, per_list):
    np.random.seed(seed)
    for _ in range(nlists):
        _add_list(S, L, pool, sfree, lfree, meta, per_list)
    total0 = 0
    for k in range(meta[M_POOL]):
        total0 += S[WT, pool[k]]
    total = total0
    burst_v = -1
    burst_left = 0
    burst_d = 1
    for _ in range(rounds):
        if meta[M_OVERFLOW] > 0 or meta[M_FAULTS] > 0:
            break
        n = meta[M_POOL]
        if strategy == RANDOM or strategy == CHURN:
            rate = 0.01 if strategy == RANDOM else 0.002
            if np.random.random() < rate or n == 0:
                _structural(S, P, L, pool, sfree, pfree, lfree, meta)
                continue
        if strategy == GROW:
            v = pool[np.random.randint(n)]
            d = 1
            if not _legal(S, P, L, meta, v, d):
                pid = S[PR, v]
                v = P[PB, pid] if P[PA, pid] == v else P[PA, pid]
        elif strategy == RANDOM:
            v = pool[np.random.randint(n)]
            d = 1 if np.random.random() < _up_bias(n) else -1
        elif strategy == CHURN:
            if burst_left <= 0 or S[LI, burst_v] < 0:
                burst_v = pool[np.random.randint(n)]
                burst_d = 1 if np.random.random() < _up_bias(n) else -1
                burst_left = (meta[M_MU] + meta[M_DELTA] + 6) * meta[M_B]
            v = burst_v
            d = burst_d
            burst_left -= 1
        else:
            if total > total0 + total0 // 4:
                inc = False
            elif total < total0 - total0 // 4:
                inc = True
            else:
                inc = np.random.random() < 0.5
            best = -1
            bkey = -BIG
            for _ in range(6):
                c = pool[np.random.randint(n)]
                w = S[WT, c]
                if inc:
                    key = w
                    pid = S[PR, c]
                    if pid >= 0 and P[KIND, pid] == JOINK:
                        key += BIG // 4
                else:
                    key = -w
                    if S[TI, c] >= 0:
                        key += BIG // 4
                if key > bkey:
                    bkey = key
                    best = c
            v = best
            d = 1 if inc else -1
        if not _legal(S, P, L, meta, v, d):
            meta[M_REFUSED] += 1
            burst_left = 0
            continue
        total += d
        _update(S, P, L, pool, sfree, pfree, meta, v, d)
    return total


def new_state(capacity: int, list_capacity: int, b: int, mu: int, delta: int,
              skew: int, cutmode: int):
    S = np.full((NSLOT_ROWS, capacity), -1, dtype=np.int64)
    P = np.full((NPROC_ROWS, capacity), -1, dtype=np.int64)
    L = np.full((NLIST_ROWS, list_capacity), -1, dtype=np.int64)
    pool = np.zeros(capacity, dtype=np.int64)
    sfree = np.arange(capacity - 1, -1, -1, dtype=np.int64)
    pfree = np.arange(capacity - 1, -1, -1, dtype=np.int64)
    lfree = np.arange(list_capacity - 1, -1, -1, dtype=np.int64)
    meta = np.zeros(NMETA, dtype=np.int64)
    meta[M_MINW] = meta[M_JMIN] = meta[M_HMIN] = BIG
    meta[M_MAXW] = meta[M_JMAX] = meta[M_HMAX] = -BIG
    meta[M_SFREE] = capacity
    meta[M_PFREE] = capacity
    meta[M_LFREE] = list_capacity
    meta[M_B] = b
    meta[M_MU] = mu
    meta[M_DELTA] = delta
    meta[M_SKEW] = skew
    meta[M_CUTMODE] = cutmode
    return S, P, L, pool, sfree, pfree, lfree, meta


def check_state(S, P, L, meta) -> list[str]:
    """Consistency check over the whole state (slow; for tests)."""
    errs = []
    pool_n = int(meta[M_POOL])
    seen = 0
    for lid in range(L.shape[1]):
        h = L[HEAD, lid]
        if h < 0 or S[LI, h] != lid:
            continue
        tot = 0
        prev = -1
        s = h
        while s >= 0:
            if S[LI, s] != lid:
                errs.append(f"slot {s} list id mismatch")
                break
            if S[LF, s] != prev:
                errs.append(f"slot {s} left link broken")
            tot += S[WT, s]
            seen += 1
            prev = s
            s = S[RT, s]
        if prev != L[TAIL, lid]:
            errs.append(f"list {lid} tail wrong")
        if tot != L[TOT, lid]:
            errs.append(f"list {lid} total {tot} != {L[TOT, lid]}")
    if seen != pool_n:
        errs.append(f"{seen} linked slots but pool has {pool_n}")
    return errs
