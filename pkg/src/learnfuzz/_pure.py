"""Pure-Python kernels.

Mirrors ``_speedups.pyx`` name for name; ``learnfuzz._kernels`` picks one of
the two at import time. Keep the semantics of both files in lockstep, the
test-suite cross-checks them.
"""
from collections import deque

import numpy as np

MAP_SIZE = 65536

# Expression opcodes, shared with the compiler in ``program.py``.
OP_CONST, OP_VAR, OP_INPUT = 0, 1, 2
OP_ADD, OP_SUB, OP_MUL, OP_NEG = 3, 4, 5, 6
OP_EQ, OP_NE, OP_LT, OP_LE, OP_GT, OP_GE = 7, 8, 9, 10, 11, 12
OP_AND, OP_OR, OP_NOT = 13, 14, 15

_MASK64 = (1 << 64) - 1
_SIGN64 = 1 << 63


def _wrap64(x):
    return ((x + _SIGN64) & _MASK64) - _SIGN64


def _bucket_mask(count):
    if count == 0:
        return 0
    if count <= 3:
        return 1 << (count - 1)
    if count <= 7:
        return 8
    if count <= 15:
        return 16
    if count <= 31:
        return 32
    if count <= 127:
        return 64
    return 128


BUCKET_MASK = bytes(_bucket_mask(c) for c in range(256))
_BUCKET_NP = np.frombuffer(BUCKET_MASK, dtype=np.uint8)


def record_edges(bitmap, prev, locations):
    """Apply the edge update for every location in order; returns new prev."""
    for cur in locations:
        idx = cur ^ prev
        if bitmap[idx] != 255:
            bitmap[idx] += 1
        prev = cur >> 1
    return prev


def has_new_bits(bitmap, virgin):
    """0: nothing new, 1: new hit-count bucket only, 2: new edge. Merges into virgin."""
    arr = np.frombuffer(bitmap, dtype=np.uint8)
    idx = np.flatnonzero(arr)
    if idx.size == 0:
        return 0
    buckets = _BUCKET_NP[arr[idx]]
    seen = np.frombuffer(virgin, dtype=np.uint8)
    old = seen[idx]
    fresh = buckets & ~old
    if not fresh.any():
        return 0
    ret = 2 if (old[fresh != 0] == 0).any() else 1
    seen[idx] = old | buckets
    return ret


class MealyKernel:
    def __init__(self, delta, lam, n, k, initial, locs=None, error_of_output=None):
        self.delta = list(delta)
        self.lam = list(lam)
        self.n = n
        self.k = k
        self.initial = initial
        self.locs = list(locs) if locs is not None else None
        self.error_of_output = list(error_of_output) if error_of_output is not None else None

    def run(self, word, state=-1):
        d, lam, k = self.delta, self.lam, self.k
        q = self.initial if state < 0 else state
        out = []
        for a in word:
            if a < 0 or a >= k:
                raise ValueError("symbol %r outside input alphabet" % (a,))
            i = q * k + a
            out.append(lam[i])
            q = d[i]
        return tuple(out)

    def final_state(self, word, state=-1):
        d, k = self.delta, self.k
        q = self.initial if state < 0 else state
        for a in word:
            if a < 0 or a >= k:
                raise ValueError("symbol %r outside input alphabet" % (a,))
            q = d[q * k + a]
        return q

    def execute(self, word, bitmap=None, prev=0):
        d, lam, k = self.delta, self.lam, self.k
        errs, locs = self.error_of_output, self.locs
        q = self.initial
        out = []
        for a in word:
            if a < 0 or a >= k:
                raise ValueError("symbol %r outside input alphabet" % (a,))
            i = q * k + a
            o = lam[i]
            out.append(o)
            q = d[i]
            if bitmap is not None and locs is not None:
                cur = locs[i]
                idx = cur ^ prev
                if bitmap[idx] != 255:
                    bitmap[idx] += 1
                prev = cur >> 1
            if errs is not None and errs[o]:
                return tuple(out), errs[o], prev
        return tuple(out), 0, prev


def _eval(code, start, end, vals, sym, stack):
    sp = 0
    pc = start
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
            stack[sp - 1] = _wrap64(-stack[sp - 1])
        elif op == OP_NOT:
            stack[sp - 1] = 0 if stack[sp - 1] else 1
        else:
            sp -= 1
            b = stack[sp]
            a = stack[sp - 1]
            if op == OP_ADD:
                r = _wrap64(a + b)
            elif op == OP_SUB:
                r = _wrap64(a - b)
            elif op == OP_MUL:
                r = _wrap64(a * b)
            elif op == OP_EQ:
                r = 1 if a == b else 0
            elif op == OP_NE:
                r = 1 if a != b else 0
            elif op == OP_LT:
                r = 1 if a < b else 0
            elif op == OP_LE:
                r = 1 if a <= b else 0
            elif op == OP_GT:
                r = 1 if a > b else 0
            elif op == OP_GE:
                r = 1 if a >= b else 0
            elif op == OP_AND:
                r = 1 if (a and b) else 0
            elif op == OP_OR:
                r = 1 if (a or b) else 0
            else:
                raise ValueError("bad opcode %d" % op)
            stack[sp - 1] = r
    return stack[0]


class ProgramKernel:
    def __init__(self, code, guard_start, guard_end, assign_start, assign_end,
                 assign_var, assign_code_start, assign_code_end,
                 rule_out, rule_err, rule_loc, lo, hi, init, wrap,
                 n_inputs, max_stack):
        self.code = list(code)
        self.guard_start = list(guard_start)
        self.guard_end = list(guard_end)
        self.assign_start = list(assign_start)
        self.assign_end = list(assign_end)
        self.assign_var = list(assign_var)
        self.assign_code_start = list(assign_code_start)
        self.assign_code_end = list(assign_code_end)
        self.rule_out = list(rule_out)
        self.rule_err = list(rule_err)
        self.rule_loc = list(rule_loc)
        self.lo = list(lo)
        self.hi = list(hi)
        self.init = list(init)
        self.wrap = bool(wrap)
        self.n_inputs = n_inputs
        # the last rule is the implicit default rule
        self.n_rules = len(self.rule_out) - 1
        self.max_stack = max(1, max_stack)

    def _fire(self, vals, sym, stack):
        code = self.code
        gs, ge = self.guard_start, self.guard_end
        r = 0
        n = self.n_rules
        while r < n:
            if _eval(code, gs[r], ge[r], vals, sym, stack):
                break
            r += 1
        for j in range(self.assign_start[r], self.assign_end[r]):
            v = self.assign_var[j]
            x = _eval(code, self.assign_code_start[j], self.assign_code_end[j], vals, sym, stack)
            lo, hi = self.lo[v], self.hi[v]
            if x < lo or x > hi:
                if self.wrap:
                    x = lo + (x - lo) % (hi - lo + 1)
                else:
                    x = lo if x < lo else hi
            vals[v] = x
        return r

    def execute(self, word, bitmap=None, prev=0):
        vals = list(self.init)
        stack = [0] * self.max_stack
        out = []
        n_in = self.n_inputs
        for sym in word:
            if sym < 0 or sym >= n_in:
                raise ValueError("symbol %r outside input alphabet" % (sym,))
            r = self._fire(vals, sym, stack)
            out.append(self.rule_out[r])
            if bitmap is not None:
                cur = self.rule_loc[r]
                idx = cur ^ prev
                if bitmap[idx] != 255:
                    bitmap[idx] += 1
                prev = cur >> 1
            err = self.rule_err[r]
            if err:
                return tuple(out), err, prev
        return tuple(out), 0, prev

    def transition(self, values, sym):
        if sym < 0 or sym >= self.n_inputs:
            raise ValueError("symbol %r outside input alphabet" % (sym,))
        vals = list(values)
        r = self._fire(vals, sym, [0] * self.max_stack)
        return tuple(vals), r


def product_bfs(delta1, lam1, n1, s1, delta2, lam2, n2, s2, k, outmap):
    """Shortest, lexicographically least word on which the two runs differ.

    ``outmap`` translates machine-2 output ids into machine-1 ids (-1 when the
    label is unknown to machine 1). Returns None when no such word exists.
    """
    start = s1 * n2 + s2
    parent = {start: (-1, -1)}
    queue = deque([start])
    while queue:
        key = queue.popleft()
        p, q = divmod(key, n2)
        pb, qb = p * k, q * k
        for a in range(k):
            if lam1[pb + a] != outmap[lam2[qb + a]]:
                word = [a]
                while key != start:
                    key, sym = parent[key]
                    word.append(sym)
                word.reverse()
                return tuple(word)
        for a in range(k):
            nxt = delta1[pb + a] * n2 + delta2[qb + a]
            if nxt not in parent:
                parent[nxt] = (key, a)
                queue.append(nxt)
    return None
