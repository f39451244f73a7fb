# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see ``_pure.py`` for the reference semantics."""
from libc.stdint cimport int64_t, uint64_t, int32_t

import numpy as np

cdef enum:
    STACK_MAX = 64

cdef enum:
    OP_CONST = 0
    OP_VAR = 1
    OP_INPUT = 2
    OP_ADD = 3
    OP_SUB = 4
    OP_MUL = 5
    OP_NEG = 6
    OP_EQ = 7
    OP_NE = 8
    OP_LT = 9
    OP_LE = 10
    OP_GT = 11
    OP_GE = 12
    OP_AND = 13
    OP_OR = 14
    OP_NOT = 15

MAP_SIZE = 65536


cdef unsigned char _bucket(unsigned int c) noexcept nogil:
    if c == 0:
        return 0
    if c <= 3:
        return <unsigned char>(1 << (c - 1))
    if c <= 7:
        return 8
    if c <= 15:
        return 16
    if c <= 31:
        return 32
    if c <= 127:
        return 64
    return 128


BUCKET_MASK = bytes([_bucket(c) for c in range(256)])


def record_edges(unsigned char[::1] bitmap, unsigned int prev, locations):
    cdef unsigned int cur, idx
    for loc in locations:
        cur = loc
        idx = (cur ^ prev) & 0xFFFF
        if bitmap[idx] != 255:
            bitmap[idx] += 1
        prev = cur >> 1
    return prev


def has_new_bits(const unsigned char[::1] bitmap, unsigned char[::1] virgin):
    cdef Py_ssize_t n = bitmap.shape[0]
    cdef Py_ssize_t words = n // 8
    cdef const uint64_t* bw = <const uint64_t*> &bitmap[0]
    cdef Py_ssize_t w, i, j
    cdef unsigned char b, old
    cdef int ret = 0
    for w in range(words):
        if bw[w] == 0:
            continue
        for j in range(8):
            i = w * 8 + j
            if bitmap[i] == 0:
                continue
            b = _bucket(bitmap[i])
            old = virgin[i]
            if b & ~old:
                if old == 0:
                    ret = 2
                elif ret == 0:
                    ret = 1
                virgin[i] = old | b
    return ret


cdef class MealyKernel:
    cdef int32_t[::1] delta
    cdef int32_t[::1] lam
    cdef int32_t[::1] locs
    cdef int32_t[::1] errs
    cdef bint has_locs, has_errs
    cdef public int n, k, initial

    def __init__(self, delta, lam, int n, int k, int initial, locs=None, error_of_output=None):
        self.delta = np.ascontiguousarray(delta, dtype=np.int32)
        self.lam = np.ascontiguousarray(lam, dtype=np.int32)
        self.n = n
        self.k = k
        self.initial = initial
        self.has_locs = locs is not None
        self.has_errs = error_of_output is not None
        self.locs = np.ascontiguousarray(locs if locs is not None else [0], dtype=np.int32)
        self.errs = np.ascontiguousarray(
            error_of_output if error_of_output is not None else [0], dtype=np.int32)

    def run(self, word, int state=-1):
        cdef Py_ssize_t m = len(word), t
        cdef int q = self.initial if state < 0 else state
        cdef int a, k = self.k
        cdef Py_ssize_t i
        out = [0] * m
        for t in range(m):
            a = word[t]
            if a < 0 or a >= k:
                raise ValueError("symbol %r outside input alphabet" % (a,))
            i = q * k + a
            out[t] = self.lam[i]
            q = self.delta[i]
        return tuple(out)

    def final_state(self, word, int state=-1):
        cdef int q = self.initial if state < 0 else state
        cdef int a, k = self.k
        for x in word:
            a = x
            if a < 0 or a >= k:
                raise ValueError("symbol %r outside input alphabet" % (a,))
            q = self.delta[q * k + a]
        return q

    def execute(self, word, bitmap=None, unsigned int prev=0):
        cdef unsigned char[::1] bm
        cdef bint trace = bitmap is not None and self.has_locs
        if trace:
            bm = bitmap
        cdef Py_ssize_t m = len(word), t
        cdef int q = self.initial
        cdef int a, o, e, k = self.k
        cdef Py_ssize_t i
        cdef unsigned int cur, idx
        out = []
        for t in range(m):
            a = word[t]
            if a < 0 or a >= k:
                raise ValueError("symbol %r outside input alphabet" % (a,))
            i = q * k + a
            o = self.lam[i]
            out.append(o)
            q = self.delta[i]
            if trace:
                cur = <unsigned int> self.locs[i]
                idx = (cur ^ prev) & 0xFFFF
                if bm[idx] != 255:
                    bm[idx] += 1
                prev = cur >> 1
            if self.has_errs:
                e = self.errs[o]
                if e:
                    return tuple(out), e, prev
        return tuple(out), 0, prev


cdef inline int64_t _eval(const int32_t* code, Py_ssize_t pc, Py_ssize_t end,
                          const int64_t* vals, int64_t sym, int64_t* stack) noexcept nogil:
    cdef int sp = 0
    cdef int op
    cdef int64_t a, b
    while pc < end:
        op = code[pc]
        if op == OP_CONST:
            stack[sp] = code[pc + 1]
            sp += 1
            pc += 2
            continue
        if op == OP_VAR:
            stack[sp] = vals[code[pc + 1]]
            sp += 1
            pc += 2
            continue
        pc += 1
        if op == OP_INPUT:
            stack[sp] = sym
            sp += 1
        elif op == OP_NEG:
            stack[sp - 1] = <int64_t>(<uint64_t>0 - <uint64_t>stack[sp - 1])
        elif op == OP_NOT:
            stack[sp - 1] = 0 if stack[sp - 1] else 1
        else:
            sp -= 1
            b = stack[sp]
            a = stack[sp - 1]
            if op == OP_ADD:
                a = <int64_t>(<uint64_t>a + <uint64_t>b)
            elif op == OP_SUB:
                a = <int64_t>(<uint64_t>a - <uint64_t>b)
            elif op == OP_MUL:
                a = <int64_t>(<uint64_t>a * <uint64_t>b)
            elif op == OP_EQ:
                a = a == b
            elif op == OP_NE:
                a = a != b
            elif op == OP_LT:
                a = a < b
            elif op == OP_LE:
                a = a <= b
            elif op == OP_GT:
                a = a > b
            elif op == OP_GE:
                a = a >= b
            elif op == OP_AND:
                a = (a != 0) and (b != 0)
            elif op == OP_OR:
                a = (a != 0) or (b != 0)
            stack[sp - 1] = a
    return stack[0]


cdef class ProgramKernel:
    cdef int32_t[::1] code, guard_start, guard_end, assign_start, assign_end
    cdef int32_t[::1] assign_var, assign_code_start, assign_code_end
    cdef int32_t[::1] rule_out, rule_err, rule_loc
    cdef int64_t[::1] lo, hi, init
    cdef bint wrap
    cdef public int n_inputs, n_rules, n_vars

    def __init__(self, code, guard_start, guard_end, assign_start, assign_end,
                 assign_var, assign_code_start, assign_code_end,
                 rule_out, rule_err, rule_loc, lo, hi, init, wrap,
                 int n_inputs, int max_stack):
        if max_stack > STACK_MAX:
            raise ValueError("expression too deep for compiled kernel")
        i32 = lambda xs: np.ascontiguousarray(list(xs) or [0], dtype=np.int32)
        i64 = lambda xs: np.ascontiguousarray(list(xs) or [0], dtype=np.int64)
        self.code = i32(code)
        self.guard_start = i32(guard_start)
        self.guard_end = i32(guard_end)
        self.assign_start = i32(assign_start)
        self.assign_end = i32(assign_end)
        self.assign_var = i32(assign_var)
        self.assign_code_start = i32(assign_code_start)
        self.assign_code_end = i32(assign_code_end)
        self.rule_out = i32(rule_out)
        self.rule_err = i32(rule_err)
        self.rule_loc = i32(rule_loc)
        self.lo = i64(lo)
        self.hi = i64(hi)
        self.init = i64(init)
        self.n_vars = len(init)
        self.wrap = bool(wrap)
        self.n_inputs = n_inputs
        self.n_rules = len(rule_out) - 1

    cdef int _fire(self, int64_t* vals, int64_t sym, int64_t* stack) noexcept:
        cdef const int32_t* code = &self.code[0]
        cdef int r = 0
        cdef int j, v
        cdef int64_t x, lo, hi, span, base
        while r < self.n_rules:
            if _eval(code, self.guard_start[r], self.guard_end[r], vals, sym, stack):
                break
            r += 1
        for j in range(self.assign_start[r], self.assign_end[r]):
            v = self.assign_var[j]
            x = _eval(code, self.assign_code_start[j], self.assign_code_end[j], vals, sym, stack)
            lo = self.lo[v]
            hi = self.hi[v]
            if x < lo or x > hi:
                if self.wrap:
                    # reduce before subtracting so nothing overflows
                    span = hi - lo + 1
                    x = x % span
                    if x < 0:
                        x += span
                    base = lo % span
                    if base < 0:
                        base += span
                    x -= base
                    if x < 0:
                        x += span
                    x += lo
                elif x < lo:
                    x = lo
                else:
                    x = hi
            vals[v] = x
        return r

    def execute(self, word, bitmap=None, unsigned int prev=0):
        cdef const unsigned char[::1] w
        if isinstance(word, (bytes, bytearray)):
            w = word
        else:
            w = bytes(word)
        cdef unsigned char[::1] bm
        cdef bint trace = bitmap is not None
        if trace:
            bm = bitmap
        cdef int64_t vals[256]
        cdef int64_t stack[STACK_MAX]
        cdef Py_ssize_t m = w.shape[0], t
        cdef int r, err, sym
        cdef unsigned int cur, idx
        if self.n_vars > 256:
            raise ValueError("too many variables for compiled kernel")
        for t in range(self.n_vars):
            vals[t] = self.init[t]
        out = []
        for t in range(m):
            sym = w[t]
            if sym >= self.n_inputs:
                raise ValueError("symbol %r outside input alphabet" % (sym,))
            r = self._fire(vals, sym, stack)
            out.append(self.rule_out[r])
            if trace:
                cur = <unsigned int> self.rule_loc[r]
                idx = (cur ^ prev) & 0xFFFF
                if bm[idx] != 255:
                    bm[idx] += 1
                prev = cur >> 1
            err = self.rule_err[r]
            if err:
                return tuple(out), err, prev
        return tuple(out), 0, prev

    def transition(self, values, int sym):
        cdef int64_t vals[256]
        cdef int64_t stack[STACK_MAX]
        cdef int t
        if sym < 0 or sym >= self.n_inputs:
            raise ValueError("symbol %r outside input alphabet" % (sym,))
        if self.n_vars > 256:
            raise ValueError("too many variables for compiled kernel")
        for t in range(self.n_vars):
            vals[t] = values[t]
        r = self._fire(vals, sym, stack)
        return tuple([vals[t] for t in range(self.n_vars)]), r


def product_bfs(delta1, lam1, int n1, int s1, delta2, lam2, int n2, int s2, int k, outmap):
    cdef int32_t[::1] d1 = np.ascontiguousarray(delta1, dtype=np.int32)
    cdef int32_t[::1] l1 = np.ascontiguousarray(lam1, dtype=np.int32)
    cdef int32_t[::1] d2 = np.ascontiguousarray(delta2, dtype=np.int32)
    cdef int32_t[::1] l2 = np.ascontiguousarray(lam2, dtype=np.int32)
    cdef int32_t[::1] om = np.ascontiguousarray(outmap, dtype=np.int32)
    cdef Py_ssize_t total = <Py_ssize_t> n1 * n2
    cdef int64_t[::1] parent = np.full(total, -1, dtype=np.int64)
    cdef int32_t[::1] via = np.zeros(total, dtype=np.int32)
    cdef int64_t[::1] queue = np.empty(total, dtype=np.int64)
    cdef Py_ssize_t head = 0, tail = 0
    cdef int64_t key, start = <int64_t> s1 * n2 + s2, nxt
    cdef int p, q, a
    cdef Py_ssize_t pb, qb
    parent[start] = start
    queue[tail] = start
    tail += 1
    while head < tail:
        key = queue[head]
        head += 1
        p = <int>(key // n2)
        q = <int>(key % n2)
        pb = <Py_ssize_t> p * k
        qb = <Py_ssize_t> q * k
        for a in range(k):
            if l1[pb + a] != om[l2[qb + a]]:
                word = [a]
                while key != start:
                    word.append(via[key])
                    key = parent[key]
                word.reverse()
                return tuple(word)
        for a in range(k):
            nxt = <int64_t> d1[pb + a] * n2 + d2[qb + a]
            if parent[nxt] < 0:
                parent[nxt] = key
                via[nxt] = a
                queue[tail] = nxt
                tail += 1
    return None
