# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled activation kernel; same contract as ``_kernel_py``."""

from cpython.array cimport array, clone

cdef int BIG = 1 << 30
cdef int CONVENTIONAL = 0

CONVERGED, CYCLE, INCONCLUSIVE = 0, 1, 2

BACKEND = "cython"

cdef array _int_template = array("i", [])


cdef class _Tables:
    cdef int n, E, P, dst, mode
    cdef int[:] adj_start, adj_nbr, rev, ext, rank_self, rank_out, expok
    cdef int[:] cands

    def __init__(self, ck):
        self.n = ck.n
        self.E = ck.E
        self.P = ck.P
        self.dst = ck.dst
        self.mode = ck.mode
        self.adj_start = ck.adj_start
        self.adj_nbr = ck.adj_nbr
        self.rev = ck.rev
        self.ext = ck.ext
        self.rank_self = ck.rank_self
        self.rank_out = ck.rank_out
        self.expok = ck.expok
        self.cands = clone(_int_template, max(ck.n, 1), zero=True)


cdef bint _activate(_Tables tb, int[:] state, int u, int[:] dirty, bint track):
    cdef int E = tb.E, P = tb.P, dst = tb.dst
    cdef int s = tb.adj_start[u], t = tb.adj_start[u + 1]
    cdef int e, v, p, q, r, best, own, out, ebase, i
    cdef int ncand = 0
    cdef int base = u * P
    cdef bint changed = False

    if track:
        dirty[u] = 0

    if u == dst:
        for e in range(s, t):
            if state[e] != 0:
                state[e] = 0
                changed = True
                v = tb.adj_nbr[e]
                if track and v != dst:
                    dirty[v] = 1
        if state[E + u] != 0:
            state[E + u] = 0
            changed = True
        return changed

    for e in range(s, t):
        p = state[tb.rev[e]]
        if p >= 0:
            q = tb.ext[base + p]
            if q >= 0:
                tb.cands[ncand] = q
                ncand += 1

    own = -1
    best = BIG
    for i in range(ncand):
        q = tb.cands[i]
        r = tb.rank_self[base + q]
        if r < best:
            best = r
            own = q
    if state[E + u] != own:
        state[E + u] = own
        changed = True

    for e in range(s, t):
        if tb.mode == CONVENTIONAL:
            out = own if (own >= 0 and tb.expok[e * P + own]) else -1
        else:
            ebase = e * P
            out = -1
            best = BIG
            for i in range(ncand):
                q = tb.cands[i]
                r = tb.rank_out[ebase + q]
                if r < best:
                    best = r
                    out = q
        if state[e] != out:
            state[e] = out
            changed = True
            v = tb.adj_nbr[e]
            if track and v != dst:
                dirty[v] = 1
    return changed


cdef _Tables _tables(ck):
    tb = getattr(ck, "_c_tables", None)
    if tb is None:
        tb = _Tables(ck)
        ck._c_tables = tb
    return tb


def step(ck, state, u):
    cdef _Tables tb = _tables(ck)
    cdef array work = array("i", state)
    cdef array dummy = clone(_int_template, 1, zero=True)
    changed = _activate(tb, work, u, dummy, False)
    return tuple(work), changed


def unstable_nodes(ck, state):
    cdef _Tables tb = _tables(ck)
    cdef array base = array("i", state)
    cdef array dummy = clone(_int_template, 1, zero=True)
    cdef array work
    cdef int u
    out = []
    for u in range(tb.n):
        work = array("i", base)
        if _activate(tb, work, u, dummy, False):
            out.append(u)
    return out


def run(ck, state0, seq, int period, int max_steps):
    cdef _Tables tb = _tables(ck)
    cdef array state = array("i", state0)
    cdef array dirty = clone(_int_template, tb.n, zero=True)
    cdef int[:] sched = array("i", seq if period else [0])
    cdef int ndirty = 0, t, u, i
    cdef bint changed

    states = [tuple(state)]
    for u in unstable_nodes(ck, state):
        dirty[u] = 1
        ndirty += 1
    if ndirty == 0:
        return 0, 0, -1, states

    seen = {(states[0], 0) if period else states[0]: 0}
    feed = None if period else iter(seq)
    for t in range(max_steps):
        u = sched[t % period] if period else next(feed)
        changed = _activate(tb, state, u, dirty, True)
        ndirty = 0
        for i in range(tb.n):
            ndirty += dirty[i]
        key = tuple(state)
        states.append(key)
        if ndirty == 0:
            return 0, t + 1, -1, states
        if period:
            k = (key, (t + 1) % period)
        elif changed:
            k = key
        else:
            continue
        prev = seen.get(k)
        if prev is not None:
            return 1, t + 1, prev, states
        seen[k] = t + 1
    return 2, max_steps, -1, states
