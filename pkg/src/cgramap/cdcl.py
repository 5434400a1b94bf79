"""A compact CDCL SAT solver.

Two-watched-literal propagation, first-UIP clause learning with local
minimisation, VSIDS decisions with phase saving, Luby restarts and
LBD-based learnt-clause reduction.  Variables are 1..n; internally a
literal ``+v`` is ``2*v`` and ``-v`` is ``2*v + 1``.
"""
from __future__ import annotations

import heapq
import time

SAT = "sat"
UNSAT = "unsat"
TIMEOUT = "timeout"

_TRUE, _FALSE, _UNDEF = 1, -1, 0


def _luby(i: int) -> int:
    size, seq = 1, 0
    while size < i + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != i:
        size = (size - 1) >> 1
        seq -= 1
        i %= size
    return 1 << seq


class Solver:
    restart_unit = 100
    var_decay = 0.95
    poll_decisions = 64

    def __init__(self, num_vars: int, clauses=()):
        self.n = num_vars
        self.lv = [_UNDEF] * (2 * num_vars + 2)
        self.level = [0] * (num_vars + 1)
        self.reason = [None] * (num_vars + 1)
        self.activity = [0.0] * (num_vars + 1)
        self.phase = [False] * (num_vars + 1)
        self.seen = [0] * (num_vars + 1)
        self.watches = [[] for _ in range(2 * num_vars + 2)]
        self.trail = []
        self.trail_lim = []
        self.qhead = 0
        self.var_inc = 1.0
        self.heap = [(0.0, v) for v in range(1, num_vars + 1)]
        self.learnts = []
        self.lbd = {}
        self.ok = True
        self.decisions = 0
        self.conflicts = 0
        self.propagations = 0
        self.num_original = 0
        for c in clauses:
            self.add_clause(c)

    # -- clause database -------------------------------------------------

    def add_clause(self, clause) -> bool:
        if not self.ok:
            return False
        lits = set()
        for x in clause:
            v = abs(x)
            if v == 0 or v > self.n:
                raise ValueError(f"literal {x} out of range 1..{self.n}")
            lits.add(2 * v + (x < 0))
        if any(l ^ 1 in lits for l in lits):
            return True
        lits = [l for l in sorted(lits) if self.lv[l] != _FALSE or self.level[l >> 1] > 0]
        if any(self.lv[l] == _TRUE and self.level[l >> 1] == 0 for l in lits):
            return True
        self.num_original += 1
        if not lits:
            self.ok = False
            return False
        if len(lits) == 1:
            self._enqueue(lits[0], None)
            if self._propagate() is not None:
                self.ok = False
            return self.ok
        self.watches[lits[0]].append(lits)
        self.watches[lits[1]].append(lits)
        return True

    def _enqueue(self, lit, reason):
        v = lit >> 1
        self.lv[lit] = _TRUE
        self.lv[lit ^ 1] = _FALSE
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _propagate(self):
        lv = self.lv
        trail = self.trail
        watches = self.watches
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            self.propagations += 1
            false_lit = p ^ 1
            ws = watches[false_lit]
            i = j = 0
            n = len(ws)
            while i < n:
                c = ws[i]
                i += 1
                if c[0] == false_lit:
                    c[0] = c[1]
                    c[1] = false_lit
                first = c[0]
                if lv[first] == _TRUE:
                    ws[j] = c
                    j += 1
                    continue
                for k in range(2, len(c)):
                    l = c[k]
                    if lv[l] != _FALSE:
                        c[1] = l
                        c[k] = false_lit
                        watches[l].append(c)
                        break
                else:
                    ws[j] = c
                    j += 1
                    if lv[first] == _FALSE:
                        while i < n:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                        del ws[j:]
                        self.qhead = len(trail)
                        return c
                    self._enqueue(first, c)
            del ws[j:]
        return None

    # -- conflict analysis -----------------------------------------------

    def _bump(self, v):
        act = self.activity[v] + self.var_inc
        self.activity[v] = act
        if act > 1e100:
            scale = 1e-100
            self.activity = [a * scale for a in self.activity]
            self.var_inc *= scale
            self.heap = [(-self.activity[u], u) for u in range(1, self.n + 1)
                         if self.lv[2 * u] == _UNDEF]
            heapq.heapify(self.heap)
        elif self.lv[2 * v] == _UNDEF:
            heapq.heappush(self.heap, (-act, v))

    def _analyze(self, confl):
        seen = self.seen
        level = self.level
        reason = self.reason
        trail = self.trail
        cur = len(self.trail_lim)
        learnt = [0]
        path = 0
        p = None
        idx = len(trail) - 1
        while True:
            for q in (confl if p is None else confl[1:]):
                v = q >> 1
                if not seen[v] and level[v] > 0:
                    self._bump(v)
                    seen[v] = 1
                    if level[v] >= cur:
                        path += 1
                    else:
                        learnt.append(q)
            while not seen[trail[idx] >> 1]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            confl = reason[p >> 1]
            seen[p >> 1] = 0
            path -= 1
            if path == 0:
                break
        learnt[0] = p ^ 1

        kept = [learnt[0]]
        for q in learnt[1:]:
            r = reason[q >> 1]
            if r is None or any(not seen[x >> 1] and level[x >> 1] > 0 for x in r[1:]):
                kept.append(q)
        for q in learnt[1:]:
            seen[q >> 1] = 0

        if len(kept) == 1:
            back = 0
        else:
            best = 1
            for k in range(2, len(kept)):
                if level[kept[k] >> 1] > level[kept[best] >> 1]:
                    best = k
            kept[1], kept[best] = kept[best], kept[1]
            back = level[kept[1] >> 1]
        return kept, back

    def _cancel_until(self, lvl):
        if len(self.trail_lim) <= lvl:
            return
        lv = self.lv
        start = self.trail_lim[lvl]
        for lit in reversed(self.trail[start:]):
            v = lit >> 1
            lv[lit] = _UNDEF
            lv[lit ^ 1] = _UNDEF
            self.reason[v] = None
            self.phase[v] = not (lit & 1)
            heapq.heappush(self.heap, (-self.activity[v], v))
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)
        if len(self.heap) > 8 * self.n + 1024:
            self.heap = [(-self.activity[u], u) for u in range(1, self.n + 1)
                         if lv[2 * u] == _UNDEF]
            heapq.heapify(self.heap)

    def _pick(self):
        heap = self.heap
        lv = self.lv
        act = self.activity
        while heap:
            neg, v = heapq.heappop(heap)
            if lv[2 * v] == _UNDEF and -neg == act[v]:
                return 2 * v + (not self.phase[v])
        for v in range(1, self.n + 1):
            if lv[2 * v] == _UNDEF:
                return 2 * v + (not self.phase[v])
        return None

    def _reduce(self):
        locked = set()
        for lit in self.trail:
            r = self.reason[lit >> 1]
            if r is not None:
                locked.add(id(r))
        ranked = sorted(self.learnts, key=lambda c: (self.lbd[id(c)], len(c)))
        keep_n = len(ranked) // 2
        keep, drop = [], set()
        for k, c in enumerate(ranked):
            if k < keep_n or id(c) in locked or self.lbd[id(c)] <= 2:
                keep.append(c)
            else:
                drop.add(id(c))
                del self.lbd[id(c)]
        if not drop:
            return
        self.learnts = keep
        for w in range(len(self.watches)):
            ws = self.watches[w]
            if ws:
                self.watches[w] = [c for c in ws if id(c) not in drop]

    # -- search ----------------------------------------------------------

    def solve(self, budget=None):
        """Return (status, model); model is a list of bools indexed by variable."""
        if not self.ok:
            return UNSAT, None
        deadline = None if budget is None else time.monotonic() + budget
        if self._propagate() is not None:
            self.ok = False
            return UNSAT, None
        max_learnts = max(2000, self.num_original // 3)
        restart_no = 0
        budget_left = _luby(restart_no) * self.restart_unit
        since_poll = 0
        while True:
            confl = self._propagate()
            if confl is not None:
                self.conflicts += 1
                if not self.trail_lim:
                    self.ok = False
                    return UNSAT, None
                learnt, back = self._analyze(confl)
                self._cancel_until(back)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    self.watches[learnt[0]].append(learnt)
                    self.watches[learnt[1]].append(learnt)
                    self.learnts.append(learnt)
                    self.lbd[id(learnt)] = len({self.level[l >> 1] for l in learnt})
                    self._enqueue(learnt[0], learnt)
                self.var_inc /= self.var_decay
                budget_left -= 1
                if deadline is not None and time.monotonic() > deadline:
                    self._cancel_until(0)
                    return TIMEOUT, None
                continue
            if budget_left <= 0:
                restart_no += 1
                budget_left = _luby(restart_no) * self.restart_unit
                self._cancel_until(0)
                continue
            if len(self.learnts) >= max_learnts:
                self._reduce()
                max_learnts = int(max_learnts * 1.1)
            lit = self._pick()
            if lit is None:
                model = [False] * (self.n + 1)
                for v in range(1, self.n + 1):
                    model[v] = self.lv[2 * v] == _TRUE
                self._cancel_until(0)
                return SAT, model
            self.decisions += 1
            since_poll += 1
            if deadline is not None and since_poll >= self.poll_decisions:
                since_poll = 0
                if time.monotonic() > deadline:
                    self._cancel_until(0)
                    return TIMEOUT, None
            self.trail_lim.append(len(self.trail))
            self._enqueue(lit, None)


def solve_cnf(num_vars: int, clauses, budget=None):
    """One-shot convenience wrapper returning (status, model, solver)."""
    s = Solver(num_vars, clauses)
    status, model = s.solve(budget)
    return status, model, s
