# distutils: language = c++
"""Compiled summarization engine.

Runs the same loop as ``summarizer._summarize_python`` with C++ containers.
Every floating-point expression is evaluated in the same order as the
Python reference, and random numbers come from the same PCG64 stream, so in
exact mode the two backends produce identical merge sequences.
"""
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport log, pow, sqrt
from libc.stdint cimport int64_t, uint64_t
from libcpp.vector cimport vector
from numpy.random cimport bitgen_t
from posix.time cimport CLOCK_MONOTONIC, clock_gettime, timespec

import numpy as np

cdef extern from *:
    """
    #include <vector>
    #include <cstdint>
    struct Entry { long long nbr; long long w; long long xpos; };

    // open-addressing map from non-negative keys to values, linear probing
    struct FlatMap {
        static constexpr long long EMPTY = -1, GONE = -2;
        std::vector<long long> keys, vals;
        size_t mask = 0, used = 0, filled = 0;
        static inline uint64_t mix(uint64_t x) {
            x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
            x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
            return x ^ (x >> 31);
        }
        void init(size_t expected) {
            size_t cap = 16;
            while (cap < expected * 2) cap <<= 1;
            keys.assign(cap, EMPTY);
            vals.assign(cap, 0);
            mask = cap - 1;
            used = filled = 0;
        }
        long long get(long long key, long long dflt) const {
            size_t i = mix((uint64_t)key) & mask;
            while (true) {
                long long k = keys[i];
                if (k == key) return vals[i];
                if (k == EMPTY) return dflt;
                i = (i + 1) & mask;
            }
        }
        void set(long long key, long long val) {
            size_t i = mix((uint64_t)key) & mask;
            size_t gone = (size_t)-1;
            while (true) {
                long long k = keys[i];
                if (k == key) { vals[i] = val; return; }
                if (k == EMPTY) break;
                if (k == GONE && gone == (size_t)-1) gone = i;
                i = (i + 1) & mask;
            }
            if (gone != (size_t)-1) { i = gone; } else { filled++; }
            keys[i] = key;
            vals[i] = val;
            used++;
            if (filled * 10 > (mask + 1) * 7) rehash();
        }
        void erase(long long key) {
            size_t i = mix((uint64_t)key) & mask;
            while (true) {
                long long k = keys[i];
                if (k == key) { keys[i] = GONE; used--; return; }
                if (k == EMPTY) return;
                i = (i + 1) & mask;
            }
        }
        void rehash() {
            std::vector<long long> ok, ov;
            ok.swap(keys);
            ov.swap(vals);
            size_t cap = 16;
            while (cap < used * 4) cap <<= 1;
            keys.assign(cap, EMPTY);
            vals.assign(cap, 0);
            mask = cap - 1;
            used = filled = 0;
            for (size_t j = 0; j < ok.size(); j++)
                if (ok[j] >= 0) set(ok[j], ov[j]);
        }
    };
    """
    cdef cppclass Entry:
        long long nbr
        long long w
        long long xpos

    cdef cppclass FlatMap:
        void init(size_t)
        long long get(long long, long long)
        void set(long long, long long)
        void erase(long long)

cdef enum:
    MAX_REDRAWS = 16


cdef inline double _now() noexcept nogil:
    cdef timespec ts
    clock_gettime(CLOCK_MONOTONIC, &ts)
    return <double>ts.tv_sec + <double>ts.tv_nsec * 1e-9


cdef inline double _weight(long long n, long long e, double d) noexcept nogil:
    cdef long long pairs = n * (n - 1) // 2
    cdef double f = 0.0
    cdef double w
    if pairs:
        f -= <double>(4 * e * e) / <double>pairs
    f -= 4.0 * d / <double>n
    if f == 0.0:
        return 0.0
    w = -1.0 / f
    return w if w > 0.0 else 0.0


cdef inline double _re_gain(long long n_a, long long n_b, long long e_a, long long e_b,
                            long long e_ab, double d_a, double d_b,
                            double cross) noexcept nogil:
    cdef long long n_z = n_a + n_b
    cdef long long e_z = e_a + e_b + e_ab
    cdef long long pairs_a = n_a * (n_a - 1) // 2
    cdef long long pairs_b = n_b * (n_b - 1) // 2
    cdef double s = 0.0
    cdef double rest_a, rest_b
    if pairs_a:
        s -= <double>(4 * e_a * e_a) / <double>pairs_a
    s -= 4.0 * d_a / <double>n_a
    s += <double>(4 * e_ab * e_ab) / <double>(n_a * n_b)
    if pairs_b:
        s -= <double>(4 * e_b * e_b) / <double>pairs_b
    s -= 4.0 * d_b / <double>n_b
    s += <double>(4 * e_z * e_z) / <double>(n_z * (n_z - 1) // 2)
    rest_a = d_a - <double>(e_ab * e_ab) / <double>n_b
    rest_b = d_b - <double>(e_ab * e_ab) / <double>n_a
    s += (4.0 / <double>n_z) * (rest_a + rest_b + 2.0 * cross)
    return s


cdef object arr(vector[long long]& v):
    out = np.empty(v.size(), dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef size_t i
    for i in range(v.size()):
        o[i] = v[i]
    return out


cdef object farr(vector[double]& v):
    out = np.empty(v.size())
    cdef double[::1] o = out
    cdef size_t i
    for i in range(v.size()):
        o[i] = v[i]
    return out


cdef class Engine:
    cdef long long n, cap, l
    cdef vector[long long] size, internal, parent
    cdef vector[double] dsum
    cdef vector[long long] hist
    cdef vector[vector[Entry]] adj
    cdef FlatMap pos   # a*cap + c -> position of c in a's list
    cdef vector[long long] mark   # scratch: neighbour -> slot in the merged list, -1 otherwise
    cdef vector[long long] live, live_pos
    cdef long long next_id
    # sampling tree
    cdef long long tcap, n_slots, n_positive
    cdef vector[double] tw
    cdef vector[long long] slot_id, slot_of, free_slots
    # sketches
    cdef object tables_obj
    cdef double[:, :, ::1] tab
    cdef const int64_t[:, ::1] cols
    cdef vector[long long] row_of
    cdef int depth, width
    cdef bint sketch_mode, correct
    # trace
    cdef vector[long long] tr_a, tr_b, tr_z, tr_attr, tr_cand
    cdef vector[double] tr_comb, tr_re, tr_time

    def __init__(self, indptr, indices, attr, int n_classes):
        cdef const int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
        cdef const int64_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
        cdef const int64_t[::1] at = np.ascontiguousarray(attr, dtype=np.int64)
        cdef long long n = ip.shape[0] - 1
        cdef long long v, p, c, lo, hi
        cdef Entry ent
        self.n = n
        self.cap = max(2 * n, 1)
        self.l = n_classes
        self.size.assign(self.cap, 0)
        self.internal.assign(self.cap, 0)
        self.dsum.assign(self.cap, 0.0)
        self.hist.assign(self.cap * self.l, 0)
        self.parent.resize(self.cap)
        for v in range(self.cap):
            self.parent[v] = v
        self.adj.resize(self.cap)
        self.live_pos.assign(self.cap, -1)
        self.pos.init(ix.shape[0] + 16)
        self.mark.assign(self.cap, -1)
        for v in range(n):
            lo = ip[v]
            hi = ip[v + 1]
            for p in range(lo, hi):
                ent.nbr = ix[p]
                ent.w = 1
                ent.xpos = 0
                self.adj[v].push_back(ent)
                self.pos.set(v * self.cap + ix[p], p - lo)
            self.size[v] = 1
            self.dsum[v] = <double>(hi - lo)
            self.hist[v * self.l + at[v]] = 1
            self.live_pos[v] = v
            self.live.push_back(v)
        for v in range(n):
            for p in range(<long long>self.adj[v].size()):
                c = self.adj[v][p].nbr
                self.adj[v][p].xpos = self.pos.get(c * self.cap + v, -1)
        self.next_id = n

    # -- adjacency ---------------------------------------------------------
    cdef inline long long _edge_weight(self, long long a, long long b):
        cdef long long p = self.pos.get(a * self.cap + b, -1)
        if p < 0:
            return 0
        return self.adj[a][p].w

    cdef void _remove_entry(self, long long x, long long p):
        cdef vector[Entry]* lst = &self.adj[x]
        cdef long long last = <long long>lst[0].size() - 1
        cdef long long gone = lst[0][p].nbr
        cdef Entry e
        if p != last:
            e = lst[0][last]
            lst[0][p] = e
            self.adj[e.nbr][e.xpos].xpos = p
            self.pos.set(x * self.cap + e.nbr, p)
        lst[0].pop_back()
        self.pos.erase(x * self.cap + gone)

    cdef void _append_pair(self, long long x, long long y, long long w):
        cdef long long px = self.adj[x].size()
        cdef long long py = self.adj[y].size()
        cdef Entry e
        e.nbr = y
        e.w = w
        e.xpos = py
        self.adj[x].push_back(e)
        self.pos.set(x * self.cap + y, px)
        e.nbr = x
        e.xpos = px
        self.adj[y].push_back(e)
        self.pos.set(y * self.cap + x, py)

    cdef void _drop_live(self, long long a):
        cdef long long p = self.live_pos[a]
        cdef long long last = self.live.back()
        self.live.pop_back()
        if last != a:
            self.live[p] = last
            self.live_pos[last] = p
        self.live_pos[a] = -1

    cdef void _add_live(self, long long a):
        self.live_pos[a] = self.live.size()
        self.live.push_back(a)

    # -- sampling tree -----------------------------------------------------
    cdef void _tree_build(self):
        cdef long long i, v
        cdef double w
        self.n_slots = self.live.size()
        self.tcap = 1
        while self.tcap < self.n_slots:
            self.tcap <<= 1
        self.tw.assign(2 * self.tcap, 0.0)
        self.slot_id.assign(self.n_slots, -1)
        self.slot_of.assign(self.cap, -1)
        self.free_slots.clear()
        self.n_positive = 0
        for i in range(self.n_slots):
            v = self.live[i]
            w = _weight(self.size[v], self.internal[v], self.dsum[v])
            self.slot_id[i] = v
            self.slot_of[v] = i
            self.tw[self.tcap + i] = w
            if w > 0:
                self.n_positive += 1
        i = self.tcap - 1
        while i > 0:
            self.tw[i] = self.tw[2 * i] + self.tw[2 * i + 1]
            i -= 1

    cdef void _tree_set(self, long long slot, double w):
        cdef long long i = self.tcap + slot
        self.n_positive += (w > 0.0) - (self.tw[i] > 0.0)
        self.tw[i] = w
        i >>= 1
        while i:
            self.tw[i] = self.tw[2 * i] + self.tw[2 * i + 1]
            i >>= 1

    cdef long long _tree_sample(self, double r):
        cdef long long i = 1
        cdef double left
        while i < self.tcap:
            left = self.tw[2 * i]
            if r < left or self.tw[2 * i + 1] == 0.0:
                i = 2 * i
            else:
                r -= left
                i = 2 * i + 1
        return self.slot_id[i - self.tcap]

    cdef void _tree_delete(self, long long ident):
        cdef long long slot = self.slot_of[ident]
        self.slot_of[ident] = -1
        self.slot_id[slot] = -1
        self._tree_set(slot, 0.0)
        self.free_slots.push_back(slot)

    cdef void _tree_insert(self, long long ident, double w):
        cdef long long slot = self.free_slots.back()
        self.free_slots.pop_back()
        self.slot_id[slot] = ident
        self.slot_of[ident] = slot
        self._tree_set(slot, w)

    # -- candidate pairs ---------------------------------------------------
    cdef long long _uniform_other(self, long long a, double u):
        cdef long long n_live = self.live.size()
        cdef long long j = <long long>(u * <double>(n_live - 1))
        if j > n_live - 2:
            j = n_live - 2
        if j >= self.live_pos[a]:
            j += 1
        return self.live[j]

    cdef void _draw_pair(self, bitgen_t* rng, long long* pa, long long* pb):
        cdef long long a, b, n_live, t
        cdef double total
        cdef bint found
        if self.n_positive >= 2:
            total = self.tw[1]
            a = self._tree_sample(rng.next_double(rng.state) * total)
            found = False
            for t in range(MAX_REDRAWS):
                b = self._tree_sample(rng.next_double(rng.state) * total)
                if b != a:
                    found = True
                    break
            if not found:
                b = self._uniform_other(a, rng.next_double(rng.state))
        else:
            n_live = self.live.size()
            t = <long long>(rng.next_double(rng.state) * <double>n_live)
            if t > n_live - 1:
                t = n_live - 1
            a = self.live[t]
            b = self._uniform_other(a, rng.next_double(rng.state))
        if a < b:
            pa[0] = a
            pb[0] = b
        else:
            pa[0] = b
            pb[0] = a

    # -- scores ------------------------------------------------------------
    cdef double _exact_cross(self, long long a, long long b):
        cdef long long short_, other, p, c, q
        cdef double cross = 0.0
        if self.adj[a].size() <= self.adj[b].size():
            short_ = a
            other = b
        else:
            short_ = b
            other = a
        for p in range(<long long>self.adj[short_].size()):
            c = self.adj[short_][p].nbr
            if c == other:
                continue
            q = self.pos.get(other * self.cap + c, -1)
            if q >= 0:
                cross += <double>(self.adj[short_][p].w * self.adj[other][q].w) \
                    / <double>self.size[c]
        return cross

    cdef double _sketch_cross(self, long long a, long long b, long long e_ab):
        cdef long long ra = self.row_of[a]
        cdef long long rb = self.row_of[b]
        cdef int r, c
        cdef double dot, est, x, y
        cdef double best = 0.0
        cdef long long ca, cb
        if e_ab != 0:
            x = <double>e_ab / sqrt(<double>self.size[b])
            y = <double>e_ab / sqrt(<double>self.size[a])
        for r in range(self.depth):
            dot = 0.0
            for c in range(self.width):
                dot += self.tab[ra, r, c] * self.tab[rb, r, c]
            if e_ab == 0:
                est = dot
            else:
                cb = self.cols[r, b]
                ca = self.cols[r, a]
                est = dot - x * self.tab[rb, r, cb] - y * self.tab[ra, r, ca]
                if ca == cb:
                    est += x * y
            if r == 0 or est < best:
                best = est
        return best

    cdef void _sketch_init(self):
        cdef long long i, v, p, c
        cdef int r
        cdef double val
        self.row_of.assign(self.cap, -1)
        self.tables_obj = np.zeros((self.live.size(), self.depth, self.width))
        self.tab = self.tables_obj
        for i in range(<long long>self.live.size()):
            v = self.live[i]
            self.row_of[v] = i
            for p in range(<long long>self.adj[v].size()):
                c = self.adj[v][p].nbr
                val = <double>self.adj[v][p].w / sqrt(<double>self.size[c])
                for r in range(self.depth):
                    self.tab[i, r, self.cols[r, c]] += val

    # -- merge ---------------------------------------------------------------
    cdef long long _merge(self, long long a, long long b):
        cdef long long z = self.next_id
        cdef long long n_a = self.size[a]
        cdef long long n_b = self.size[b]
        cdef long long n_z = n_a + n_b
        cdef long long e_ab = 0
        cdef long long p, c, j, ea, eb, w, q, ra, rb, rc
        cdef int r, col
        cdef double d_z, sa, sb, sz
        cdef vector[long long] zn, from_a, from_b
        self.next_id += 1
        p = self.pos.get(a * self.cap + b, -1)
        if p >= 0:
            e_ab = self.adj[a][p].w
            self._remove_entry(b, self.adj[a][p].xpos)
            self._remove_entry(a, p)
        for p in range(<long long>self.adj[a].size()):
            c = self.adj[a][p].nbr
            self._remove_entry(c, self.adj[a][p].xpos)
            self.mark[c] = zn.size()
            zn.push_back(c)
            from_a.push_back(self.adj[a][p].w)
            from_b.push_back(0)
        for p in range(<long long>self.adj[b].size()):
            c = self.adj[b][p].nbr
            self._remove_entry(c, self.adj[b][p].xpos)
            j = self.mark[c]
            if j < 0:
                self.mark[c] = zn.size()
                zn.push_back(c)
                from_a.push_back(0)
                from_b.push_back(self.adj[b][p].w)
            else:
                from_b[j] = self.adj[b][p].w
        for j in range(<long long>zn.size()):
            self.mark[zn[j]] = -1
        for p in range(<long long>self.adj[a].size()):
            self.pos.erase(a * self.cap + self.adj[a][p].nbr)
        for p in range(<long long>self.adj[b].size()):
            self.pos.erase(b * self.cap + self.adj[b][p].nbr)
        self.adj[a].clear()
        self.adj[a].shrink_to_fit()
        self.adj[b].clear()
        self.adj[b].shrink_to_fit()

        self.size[z] = n_z
        self.internal[z] = self.internal[a] + self.internal[b] + e_ab
        for j in range(self.l):
            self.hist[z * self.l + j] = self.hist[a * self.l + j] + self.hist[b * self.l + j]
        d_z = 0.0
        for j in range(<long long>zn.size()):
            c = zn[j]
            ea = from_a[j]
            eb = from_b[j]
            w = ea + eb
            self._append_pair(z, c, w)
            self.dsum[c] = self.dsum[c] - <double>(ea * ea) / <double>n_a \
                - <double>(eb * eb) / <double>n_b + <double>(w * w) / <double>n_z
            d_z += <double>(w * w) / <double>self.size[c]
        self.dsum[z] = d_z
        self.parent[a] = z
        self.parent[b] = z
        self._drop_live(a)
        self._drop_live(b)
        self._add_live(z)

        if self.sketch_mode:
            ra = self.row_of[a]
            rb = self.row_of[b]
            self.row_of[a] = -1
            self.row_of[b] = -1
            for r in range(self.depth):
                for col in range(self.width):
                    self.tab[ra, r, col] += self.tab[rb, r, col]
                    self.tab[rb, r, col] = 0.0
            if e_ab:
                for r in range(self.depth):
                    self.tab[ra, r, self.cols[r, b]] -= <double>e_ab / sqrt(<double>n_b)
                for r in range(self.depth):
                    self.tab[ra, r, self.cols[r, a]] -= <double>e_ab / sqrt(<double>n_a)
            self.row_of[z] = ra
            if self.correct:
                sa = sqrt(<double>n_a)
                sb = sqrt(<double>n_b)
                sz = sqrt(<double>n_z)
                for j in range(<long long>zn.size()):
                    rc = self.row_of[zn[j]]
                    ea = from_a[j]
                    eb = from_b[j]
                    for r in range(self.depth):
                        if ea:
                            self.tab[rc, r, self.cols[r, a]] -= <double>ea / sa
                        if eb:
                            self.tab[rc, r, self.cols[r, b]] -= <double>eb / sb
                        self.tab[rc, r, self.cols[r, z]] += <double>(ea + eb) / sz

        self._tree_delete(a)
        self._tree_delete(b)
        self._tree_insert(z, _weight(self.size[z], self.internal[z], self.dsum[z]))
        for j in range(<long long>zn.size()):
            c = zn[j]
            self._tree_set(self.slot_of[c], _weight(self.size[c], self.internal[c], self.dsum[c]))
        return z

    # -- main loop -------------------------------------------------------------
    def run(self, long long k_target, bint sketch_mode, bint correct, double alpha,
            int policy, double coef, int width, int depth, cols, bitgen):
        """Merge until ``k_target`` supernodes remain.

        ``policy``: 0 = coef*ln n, 1 = (ln n)^2, 2 = sqrt n, with n the live count.
        ``cols``: (depth, capacity) hashed sketch columns (ignored in exact mode).
        """
        cdef bitgen_t* rng
        cdef long long s, i, a, b, z, best_a, best_b, e_ab, attr, best_attr, n_ab, j, h
        cdef long long n_live
        cdef double cross, re, score, best_score, best_re, t_start, sc
        cdef double n_sq = <double>(self.n * self.n)
        capsule = bitgen.capsule
        rng = <bitgen_t*>PyCapsule_GetPointer(capsule, "BitGenerator")
        self.sketch_mode = sketch_mode
        self.correct = correct
        self.width = width
        self.depth = depth
        if sketch_mode:
            self.cols = np.ascontiguousarray(cols, dtype=np.int64)
            self._sketch_init()
        self._tree_build()
        with bitgen.lock:
            while <long long>self.live.size() > k_target:
                t_start = _now()
                n_live = self.live.size()
                if policy == 0:
                    sc = coef * log(<double>n_live)
                elif policy == 1:
                    sc = pow(log(<double>n_live), 2.0)
                else:
                    sc = sqrt(<double>n_live)
                s = <long long>sc
                if s < 1:
                    s = 1
                best_a = -1
                for i in range(s):
                    self._draw_pair(rng, &a, &b)
                    e_ab = self._edge_weight(a, b)
                    if sketch_mode:
                        cross = self._sketch_cross(a, b, e_ab)
                    else:
                        cross = self._exact_cross(a, b)
                    re = _re_gain(self.size[a], self.size[b], self.internal[a],
                                  self.internal[b], e_ab, self.dsum[a], self.dsum[b], cross)
                    attr = 0
                    for j in range(self.l):
                        h = self.hist[a * self.l + j] + self.hist[b * self.l + j]
                        if j == 0 or h > attr:
                            attr = h
                    n_ab = self.size[a] + self.size[b]
                    score = alpha * (re / n_sq) + (1.0 - alpha) * (<double>attr / <double>n_ab)
                    if (best_a < 0 or score > best_score
                            or (score == best_score
                                and (a < best_a or (a == best_a and b < best_b)))):
                        best_a = a
                        best_b = b
                        best_score = score
                        best_re = re
                        best_attr = attr
                z = self._merge(best_a, best_b)
                self.tr_a.push_back(best_a)
                self.tr_b.push_back(best_b)
                self.tr_z.push_back(z)
                self.tr_comb.push_back(best_score)
                self.tr_re.push_back(best_re)
                self.tr_attr.push_back(best_attr)
                self.tr_cand.push_back(s)
                self.tr_time.push_back(_now() - t_start)

    def export(self):
        """Flat arrays for ``summary.from_arrays`` plus the merge trace."""
        cdef long long i, a, p, total = 0
        cdef long long k = self.live.size()
        for i in range(k):
            total += self.adj[self.live[i]].size()
        adj_ptr = np.zeros(k + 1, dtype=np.int64)
        adj_nbr = np.empty(total, dtype=np.int64)
        adj_w = np.empty(total, dtype=np.int64)
        cdef int64_t[::1] vp = adj_ptr
        cdef int64_t[::1] vn = adj_nbr
        cdef int64_t[::1] vw = adj_w
        cdef long long q = 0
        for i in range(k):
            a = self.live[i]
            for p in range(<long long>self.adj[a].size()):
                vn[q] = self.adj[a][p].nbr
                vw[q] = self.adj[a][p].w
                q += 1
            vp[i + 1] = q

        return {
            "next_id": self.next_id,
            "parent": arr(self.parent),
            "size": arr(self.size),
            "internal": arr(self.internal),
            "dsum": farr(self.dsum),
            "hist": arr(self.hist).reshape(self.cap, self.l),
            "live": arr(self.live),
            "adj_ptr": adj_ptr,
            "adj_nbr": adj_nbr,
            "adj_w": adj_w,
            "trace": {
                "a": arr(self.tr_a), "b": arr(self.tr_b), "z": arr(self.tr_z),
                "combined": farr(self.tr_comb), "re": farr(self.tr_re),
                "attr": arr(self.tr_attr), "candidates": arr(self.tr_cand),
                "elapsed": farr(self.tr_time),
            },
        }
