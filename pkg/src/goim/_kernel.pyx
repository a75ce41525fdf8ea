# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled run loop for the token machine.

Mirrors ``machine.run_python`` transition for transition: same pass table
(written out as a switch), same rewrites, same id allocation order, so a
graph run here is identical to one run in Python.  The graph's columns are
copied into C arrays, the loop runs, and the arrays are written back.
"""

from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memcpy

from . import graph as _G

cdef enum:
    DEAD = 0
    LAM = 1
    APP_NEED = 2
    APP_LV = 3
    APP_RV = 4
    BANG = 5
    QUEST = 6
    DEREF = 7
    CONTRACT = 8

cdef enum:
    UP = 0
    DOWN = 1
    F_NONE = 0
    F_LAMBDA = 1
    F_BANG = 2
    S_STAR = 0
    S_LAM = 1
    S_AT = 2
    B_STAR = -1
    B_BANG = -2
    B_DIAMOND = -3

cdef enum:
    L_PASS = 0
    L_OPEN = 1
    L_BETA = 2
    L_SIGMA = 3

cdef enum:
    OK = 0
    ST_FINAL = 0
    ST_FUEL = 1
    ST_STUCK = 2


cdef struct Arena:
    int *kind
    int *arity
    int *in0
    int *in1
    int *out0
    int *out1
    int *box_q
    int *box_end
    int *qowner
    int n_nodes
    int cap_nodes
    int *lsrc
    int *ldst
    char *lalive
    int n_links
    int cap_links


cdef struct Stack:
    int *data
    int n
    int cap


cdef int *_grow_int(int *p, int cap) except NULL:
    cdef int *q = <int *> realloc(p, cap * sizeof(int))
    if q == NULL:
        raise MemoryError()
    return q


cdef int ensure_nodes(Arena *a, int extra) except -1:
    cdef int cap = a.cap_nodes
    if a.n_nodes + extra <= cap:
        return 0
    while cap < a.n_nodes + extra:
        cap = cap * 2 + 16
    a.kind = _grow_int(a.kind, cap)
    a.arity = _grow_int(a.arity, cap)
    a.in0 = _grow_int(a.in0, cap)
    a.in1 = _grow_int(a.in1, cap)
    a.out0 = _grow_int(a.out0, cap)
    a.out1 = _grow_int(a.out1, cap)
    a.box_q = _grow_int(a.box_q, cap)
    a.box_end = _grow_int(a.box_end, cap)
    a.qowner = _grow_int(a.qowner, cap)
    a.cap_nodes = cap
    return 0


cdef int ensure_links(Arena *a, int extra) except -1:
    cdef int cap = a.cap_links
    cdef char *q
    if a.n_links + extra <= cap:
        return 0
    while cap < a.n_links + extra:
        cap = cap * 2 + 16
    a.lsrc = _grow_int(a.lsrc, cap)
    a.ldst = _grow_int(a.ldst, cap)
    q = <char *> realloc(a.lalive, cap)
    if q == NULL:
        raise MemoryError()
    a.lalive = q
    a.cap_links = cap
    return 0


cdef inline int push(Stack *s, int v) except -1:
    if s.n == s.cap:
        s.cap = s.cap * 2 + 16
        s.data = _grow_int(s.data, s.cap)
    s.data[s.n] = v
    s.n += 1
    return 0


cdef int *_load(list xs, int cap) except NULL:
    cdef int n = len(xs)
    cdef int *p = <int *> malloc(max(cap, 1) * sizeof(int))
    cdef int i
    if p == NULL:
        raise MemoryError()
    for i in range(n):
        p[i] = xs[i]
    return p


cdef list _store(int *p, int n):
    return [p[i] for i in range(n)]


cdef void _free(Arena *a, Stack *s, Stack *b):
    free(a.kind); free(a.arity); free(a.in0); free(a.in1); free(a.out0); free(a.out1)
    free(a.box_q); free(a.box_end); free(a.qowner)
    free(a.lsrc); free(a.ldst); free(a.lalive)
    free(s.data); free(b.data)


cdef inline void retarget(Arena *a, int link, int node, int from_link):
    # ``link`` takes the input port of ``node`` that ``from_link`` used
    a.ldst[link] = node
    if a.kind[node] != CONTRACT:
        if a.in0[node] == from_link:
            a.in0[node] = link
        else:
            a.in1[node] = link


cdef inline void kill_link(Arena *a, int l):
    a.lalive[l] = 0
    a.lsrc[l] = -1
    a.ldst[l] = -1


cdef int copy_box(Arena *a, int bang, int root) except -2:
    cdef int lo = bang
    cdef int end = a.box_end[bang]
    cdef int span = end - lo
    cdef int off, n, m, k, port, l, d, new
    ensure_nodes(a, span)
    ensure_links(a, 2 * span)
    off = a.n_nodes - lo
    for n in range(lo, end):
        m = n + off
        a.kind[m] = a.kind[n]
        a.arity[m] = a.arity[n]
        a.in0[m] = -1
        a.in1[m] = -1
        a.out0[m] = -1
        a.out1[m] = -1
        a.box_q[m] = -1
        a.box_end[m] = -1
        a.qowner[m] = -1
        if a.kind[n] == BANG:
            a.box_q[m] = a.box_q[n] + off
            a.box_end[m] = a.box_end[n] + off
        elif a.kind[n] == QUEST:
            a.qowner[m] = a.qowner[n] + off
    a.n_nodes += span
    for n in range(lo, end):
        k = a.kind[n]
        if k == DEAD:
            continue
        m = n + off
        for port in range(2):
            if port == 1 and not (k == APP_NEED or k == APP_LV or k == APP_RV):
                break
            l = a.out0[n] if port == 0 else a.out1[n]
            d = a.ldst[l]
            new = a.n_links
            a.n_links += 1
            a.lsrc[new] = m
            a.lalive[new] = 1
            if lo <= d < end:
                a.ldst[new] = d + off
                if a.kind[d] != CONTRACT:
                    if a.in0[d] == l:
                        a.in0[d + off] = new
                    else:
                        a.in1[d + off] = new
            else:
                if k != QUEST or d < 0 or a.kind[d] != CONTRACT:
                    return -1
                a.ldst[new] = d
                a.arity[d] += 1
            if port == 0:
                a.out0[m] = new
            else:
                a.out1[m] = new
    a.in0[lo + off] = root
    a.ldst[root] = lo + off
    return lo + off


def run(st, long fuel, bint record=False):
    """Run the state ``st`` in place.

    Returns ``(status, counters, steps, labels, reason)`` with status 0 for
    final, 1 for fuel exhausted, 2 for stuck.
    """
    g = st.graph
    cdef Arena a
    cdef Stack S
    cdef Stack B
    cdef int n_nodes = len(g.kind)
    cdef int n_links = len(g.lsrc)
    cdef int i
    a.n_nodes = n_nodes
    a.cap_nodes = n_nodes * 2 + 16
    a.n_links = n_links
    a.cap_links = n_links * 2 + 16
    a.kind = _load(g.kind, a.cap_nodes)
    a.arity = _load(g.arity, a.cap_nodes)
    a.in0 = _load(g.in0, a.cap_nodes)
    a.in1 = _load(g.in1, a.cap_nodes)
    a.out0 = _load(g.out0, a.cap_nodes)
    a.out1 = _load(g.out1, a.cap_nodes)
    a.box_q = _load(g.box_q, a.cap_nodes)
    a.box_end = _load(g.box_end, a.cap_nodes)
    a.qowner = _load(g.qowner, a.cap_nodes)
    a.lsrc = _load(g.lsrc, a.cap_links)
    a.ldst = _load(g.ldst, a.cap_links)
    a.lalive = <char *> malloc(a.cap_links)
    for i in range(n_links):
        a.lalive[i] = 1 if g.lalive[i] else 0
    S.n = 0
    S.cap = len(st.S) + 16
    S.data = _load(st.S, S.cap)
    S.n = len(st.S)
    B.n = 0
    B.cap = len(st.B) + 16
    B.data = _load(st.B, B.cap)
    B.n = len(st.B)

    cdef int root = g.inputs[0]
    cdef int pos = st.pos
    cdef int dir = st.dir
    cdef int flag = st.flag
    cdef long steps = 0
    cdef long n_beta = 0, n_sigma = 0, n_pass = 0, n_open = 0
    cdef int status = ST_FUEL
    cdef int n, k, top, code, lam, app, ii, aa, bb, cc, y, u, bang, der, d, r, content
    cdef int q, inner, outer, src, c, e, stop_kind = 0, stop_port = 0
    cdef char *labels = NULL
    cdef long lab_cap = 0
    reason = ""

    if record:
        lab_cap = 1024
        labels = <char *> malloc(lab_cap)

    try:
        while True:
            if (pos == root and dir == DOWN and flag == F_NONE and S.n == 0
                    and B.n == 1 and B.data[0] == B_BANG):
                status = ST_FINAL
                break
            if steps >= fuel:
                status = ST_FUEL
                break
            code = -1
            if flag == F_NONE:
                if dir == UP:
                    n = a.ldst[pos]
                    if n < 0:
                        reason = f"token at output link {pos} going up"
                        status = ST_STUCK
                        break
                    k = a.kind[n]
                    top = B.data[B.n - 1] if B.n else -100
                    if k == APP_NEED:
                        pos = a.out0[n]
                        push(&S, S_AT)
                        push(&B, B_BANG)
                    elif k == APP_LV:
                        pos = a.out0[n]
                        push(&S, S_STAR)
                    elif k == APP_RV:
                        pos = a.out1[n]
                        push(&B, B_STAR)
                    elif k == DEREF:
                        pos = a.out0[n]
                        push(&B, B_DIAMOND)
                    elif k == CONTRACT:
                        push(&B, pos)
                        pos = a.out0[n]
                    elif k == BANG and top == B_STAR:
                        dir = DOWN
                        B.data[B.n - 1] = B_BANG
                    elif k == BANG and (top == B_DIAMOND or top >= 0):
                        flag = F_BANG
                    elif k == LAM and a.in0[n] == pos and S.n and S.data[S.n - 1] == S_STAR:
                        dir = DOWN
                        S.data[S.n - 1] = S_LAM
                    elif k == LAM and a.in0[n] == pos and S.n and S.data[S.n - 1] == S_AT:
                        S.n -= 1
                        flag = F_LAMBDA
                    else:
                        reason = _cell(k, UP, n, pos, a.in0[n] == pos, st, S, B)
                        status = ST_STUCK
                        break
                else:
                    n = a.lsrc[pos]
                    if n < 0:
                        reason = f"token at input link {pos} going down"
                        status = ST_STUCK
                        break
                    k = a.kind[n]
                    top = B.data[B.n - 1] if B.n else -100
                    if k == APP_LV and a.out0[n] == pos and S.n and S.data[S.n - 1] == S_LAM:
                        pos = a.out1[n]
                        dir = UP
                        push(&B, B_STAR)
                    elif (k == APP_LV and a.out1[n] == pos and S.n and S.data[S.n - 1] == S_LAM
                          and top == B_BANG):
                        pos = a.out0[n]
                        dir = UP
                        S.data[S.n - 1] = S_AT
                    elif k == APP_RV and a.out1[n] == pos and top == B_BANG:
                        pos = a.out0[n]
                        dir = UP
                        push(&S, S_AT)
                    else:
                        reason = _cell(k, DOWN, n, pos, a.out0[n] == pos, st, S, B)
                        status = ST_STUCK
                        break
                code = L_PASS
                n_pass += 1
            elif flag == F_LAMBDA:
                lam = a.ldst[pos]
                app = a.lsrc[pos]
                if (lam < 0 or app < 0 or a.kind[lam] != LAM
                        or not (a.kind[app] == APP_NEED or a.kind[app] == APP_LV or a.kind[app] == APP_RV)
                        or a.out0[app] != pos or a.in0[lam] != pos):
                    reason = f"beta: no lam/@ redex at link {pos}"
                    status = ST_STUCK
                    break
                if B.n == 0 or B.data[B.n - 1] != B_BANG:
                    reason = "beta: box stack top is not !"
                    status = ST_STUCK
                    break
                ii = a.in0[app]
                aa = a.out1[app]
                bb = a.out0[lam]
                cc = a.in1[lam]
                y = a.ldst[bb]
                u = a.ldst[aa]
                retarget(&a, ii, y, bb)
                retarget(&a, cc, u, aa)
                kill_link(&a, pos)
                kill_link(&a, aa)
                kill_link(&a, bb)
                a.kind[app] = DEAD
                a.kind[lam] = DEAD
                pos = ii
                dir = UP
                B.n -= 1
                flag = F_NONE
                code = L_BETA
                n_beta += 1
            else:
                top = B.data[B.n - 1] if B.n else -100
                bang = a.ldst[pos]
                if top == B_DIAMOND:
                    der = a.lsrc[pos]
                    if bang < 0 or der < 0 or a.kind[bang] != BANG or a.kind[der] != DEREF:
                        reason = f"open: no D/! pair at link {pos}"
                        status = ST_STUCK
                        break
                    d = a.in0[der]
                    r = a.out0[bang]
                    content = a.ldst[r]
                    retarget(&a, d, content, r)
                    for q in range(a.box_q[bang], a.box_end[bang]):
                        if a.kind[q] != QUEST:
                            continue
                        inner = a.in0[q]
                        outer = a.out0[q]
                        src = a.lsrc[inner]
                        if a.out0[src] == inner:
                            a.out0[src] = outer
                        else:
                            a.out1[src] = outer
                        a.lsrc[outer] = src
                        kill_link(&a, inner)
                        a.kind[q] = DEAD
                    kill_link(&a, pos)
                    kill_link(&a, r)
                    a.kind[bang] = DEAD
                    a.kind[der] = DEAD
                    pos = d
                    B.n -= 1
                    flag = F_NONE
                    code = L_OPEN
                    n_open += 1
                elif top >= 0:
                    c = a.lsrc[pos]
                    e = top
                    if bang < 0 or c < 0 or a.kind[bang] != BANG or a.kind[c] != CONTRACT:
                        reason = f"copy: no C/! pair at link {pos}"
                        status = ST_STUCK
                        break
                    if not a.lalive[e] or a.ldst[e] != c:
                        reason = f"copy: box stack top {e} is not an input of C node {c}"
                        status = ST_STUCK
                        break
                    a.arity[c] -= 1
                    a.ldst[e] = -1
                    if copy_box(&a, bang, e) < 0:
                        reason = f"copy: box {bang} has a link leaving it without a door"
                        status = ST_STUCK
                        break
                    pos = e
                    dir = UP
                    B.n -= 1
                    flag = F_NONE
                    code = L_SIGMA
                    n_sigma += 1
                else:
                    reason = "flag ! raised but box stack top is neither <> nor a link"
                    status = ST_STUCK
                    break
            steps += 1
            if record:
                if steps > lab_cap:
                    lab_cap *= 2
                    labels = <char *> realloc(labels, lab_cap)
                    if labels == NULL:
                        raise MemoryError()
                labels[steps - 1] = code

        # write everything back
        g.kind = _store(a.kind, a.n_nodes)
        g.arity = _store(a.arity, a.n_nodes)
        g.in0 = _store(a.in0, a.n_nodes)
        g.in1 = _store(a.in1, a.n_nodes)
        g.out0 = _store(a.out0, a.n_nodes)
        g.out1 = _store(a.out1, a.n_nodes)
        g.box_q = _store(a.box_q, a.n_nodes)
        g.box_end = _store(a.box_end, a.n_nodes)
        g.qowner = _store(a.qowner, a.n_nodes)
        g.lsrc = _store(a.lsrc, a.n_links)
        g.ldst = _store(a.ldst, a.n_links)
        g.lalive = [a.lalive[i] != 0 for i in range(a.n_links)]
        extra = a.n_links - n_links
        g.lup.extend([-1] * extra)
        g.ldown.extend([-1] * extra)
        st.pos = pos
        st.dir = dir
        st.flag = flag
        st.S = _store(S.data, S.n)
        st.B = _store(B.data, B.n)
        counters = {"beta": n_beta, "sigma": n_sigma, "eps_pass": n_pass, "eps_rewrite": n_open}
        out_labels = labels[:steps] if record else None
    finally:
        _free(&a, &S, &B)
        if labels != NULL:
            free(labels)
    return status, counters, steps, out_labels, reason


cdef str _cell(int k, int d, int n, int pos, bint first_port, st, Stack S, Stack B):
    # same wording as the Python loop's stuck diagnostics
    from .machine import describe_cell, EMPTY, LINK
    if d == UP:
        port = "in" if k == CONTRACT else ("in0" if first_port else "in1")
    else:
        port = "out0" if first_port else "out1"
    sc = S.data[S.n - 1] if S.n else EMPTY
    if B.n == 0:
        bc = EMPTY
    elif B.data[B.n - 1] >= 0:
        bc = LINK
    else:
        bc = B.data[B.n - 1]
    return "no pass transition for " + describe_cell((k, d, port, sc, bc))
