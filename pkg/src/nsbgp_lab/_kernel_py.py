"""Pure-Python activation kernel.

Works on the flat arrays of :class:`nsbgp_lab.engine.CompiledInstance`.
A state is a sequence of ``E + n`` ints: slot ``e`` holds the path id node
``u`` currently exports over directed edge ``e = (u -> v)`` (``-1`` = withdrawn),
slot ``E + u`` holds ``u``'s own selection.  ``_kernel_c.pyx`` mirrors this
module line for line; keep them in sync.
"""

BIG = 1 << 30
CONVENTIONAL, FILTER_FIRST, NEIGHBOR_SPECIFIC = 0, 1, 2

CONVERGED, CYCLE, INCONCLUSIVE = 0, 1, 2

BACKEND = "python"


def _activate(ck, state, u, dirty):
    """Activate ``u`` in place. Returns whether anything changed.

    ``dirty`` (list of 0/1 or None) is updated: ``u`` becomes clean, neighbors
    whose incoming export changed become dirty.
    """
    E = ck.E
    P = ck.P
    adj_start = ck.adj_start
    adj_nbr = ck.adj_nbr
    s = adj_start[u]
    t = adj_start[u + 1]
    changed = False
    dst = ck.dst

    if dirty is not None:
        dirty[u] = 0

    if u == dst:
        for e in range(s, t):
            if state[e] != 0:
                state[e] = 0
                changed = True
                v = adj_nbr[e]
                if dirty is not None and v != dst:
                    dirty[v] = 1
        if state[E + u] != 0:
            state[E + u] = 0
            changed = True
        return changed

    rev = ck.rev
    ext = ck.ext
    base = u * P
    cands = []
    for e in range(s, t):
        p = state[rev[e]]
        if p >= 0:
            q = ext[base + p]
            if q >= 0:
                cands.append(q)

    rank_self = ck.rank_self
    own = -1
    best = BIG
    for q in cands:
        r = rank_self[base + q]
        if r < best:
            best = r
            own = q
    if state[E + u] != own:
        state[E + u] = own
        changed = True

    mode = ck.mode
    expok = ck.expok
    rank_out = ck.rank_out
    for e in range(s, t):
        if mode == CONVENTIONAL:
            out = own if own >= 0 and expok[e * P + own] else -1
        else:
            ebase = e * P
            out = -1
            best = BIG
            for q in cands:
                r = rank_out[ebase + q]
                if r < best:
                    best = r
                    out = q
        if state[e] != out:
            state[e] = out
            changed = True
            v = adj_nbr[e]
            if dirty is not None and v != dst:
                dirty[v] = 1
    return changed


def step(ck, state, u):
    """Return ``(new_state_tuple, changed)`` after activating ``u``."""
    work = list(state)
    changed = _activate(ck, work, u, None)
    return tuple(work), changed


def unstable_nodes(ck, state):
    """Nodes whose activation would change ``state``."""
    out = []
    for u in range(ck.n):
        work = list(state)
        if _activate(ck, work, u, None):
            out.append(u)
    return out


def run(ck, state0, seq, period, max_steps):
    """Iterate activations from ``state0``.

    ``period > 0``: ``seq`` is one period of a periodic schedule and cycle
    detection keys on (state, schedule position).  ``period == 0``: ``seq``
    is an iterator of activations and cycle detection keys on the state
    alone, recorded after changing steps.

    Returns ``(code, steps, entry, states)`` where ``states[i]`` is the state
    after ``i`` steps and ``entry`` is the index of the first occurrence of
    the recurring key (``-1`` unless ``code == CYCLE``).
    """
    n = ck.n
    state = list(state0)
    states = [tuple(state)]
    dirty = [0] * n
    ndirty = 0
    for u in unstable_nodes(ck, state):
        dirty[u] = 1
        ndirty += 1
    if ndirty == 0:
        return CONVERGED, 0, -1, states

    seen = {(states[0], 0) if period else states[0]: 0}
    feed = None if period else iter(seq)
    for t in range(max_steps):
        u = seq[t % period] if period else next(feed)
        before = dirty[u]
        changed = _activate(ck, state, u, dirty)
        ndirty = sum(dirty) if changed else ndirty - before
        key = tuple(state)
        states.append(key)
        if ndirty == 0:
            return CONVERGED, t + 1, -1, states
        if period:
            k = (key, (t + 1) % period)
        elif changed:
            k = key
        else:
            continue
        prev = seen.get(k)
        if prev is not None:
            return CYCLE, t + 1, prev, states
        seen[k] = t + 1
    return INCONCLUSIVE, max_steps, -1, states
