"""Smith normal form over the integers with exact Python ints."""

from __future__ import annotations

import numpy as np


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def _identity(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


class _Tracker:
    """Dense integer matrix plus the unimodular transforms applied to it."""

    def __init__(self, A, m, n):
        self.A = [[int(x) for x in row] for row in A]
        self.m, self.n = m, n
        self.U, self.Ui = _identity(self.m), _identity(self.m)
        self.V, self.Vi = _identity(self.n), _identity(self.n)

    # row operations act on A and U from the left; inverse updates Ui on the right
    def row_add(self, i, j, c):
        """row_i += c * row_j."""
        if c == 0:
            return
        for M in (self.A, self.U):
            ri, rj = M[i], M[j]
            for t in range(len(ri)):
                if rj[t]:
                    ri[t] += c * rj[t]
        for row in self.Ui:
            row[j] -= c * row[i]

    def row_swap(self, i, j):
        if i == j:
            return
        for M in (self.A, self.U):
            M[i], M[j] = M[j], M[i]
        for row in self.Ui:
            row[i], row[j] = row[j], row[i]

    def row_neg(self, i):
        for M in (self.A, self.U):
            M[i] = [-x for x in M[i]]
        for row in self.Ui:
            row[i] = -row[i]

    def col_add(self, j, i, c):
        """col_j += c * col_i."""
        if c == 0:
            return
        for M in (self.A, self.V):
            for row in M:
                if row[i]:
                    row[j] += c * row[i]
        ri, rj = self.Vi[i], self.Vi[j]
        for t in range(len(ri)):
            if rj[t]:
                ri[t] -= c * rj[t]

    def col_swap(self, i, j):
        if i == j:
            return
        for M in (self.A, self.V):
            for row in M:
                row[i], row[j] = row[j], row[i]
        self.Vi[i], self.Vi[j] = self.Vi[j], self.Vi[i]

    def fix_pair(self, s, t):
        """Replace diag (a, b) at positions s < t by (gcd, lcm)."""
        a, b = self.A[s][s], self.A[t][t]
        g, x, y = _ext_gcd(a, b)
        if g < 0:
            g, x, y = -g, -x, -y
        # U2 = [[x, y], [-b/g, a/g]], V2 = [[1, -y b/g], [1, x a/g]]
        bg, ag = b // g, a // g
        self._left2(s, t, ((x, y), (-bg, ag)), ((ag, -y), (bg, x)))
        self._right2(s, t, ((1, -y * bg), (1, x * ag)), ((x * ag, y * bg), (-1, 1)))

    def _left2(self, s, t, E, Einv):
        for M in (self.A, self.U):
            rs, rt = M[s], M[t]
            M[s] = [E[0][0] * u + E[0][1] * v for u, v in zip(rs, rt)]
            M[t] = [E[1][0] * u + E[1][1] * v for u, v in zip(rs, rt)]
        for row in self.Ui:
            u, v = row[s], row[t]
            row[s] = u * Einv[0][0] + v * Einv[1][0]
            row[t] = u * Einv[0][1] + v * Einv[1][1]

    def _right2(self, s, t, E, Einv):
        for M in (self.A, self.V):
            for row in M:
                u, v = row[s], row[t]
                row[s] = u * E[0][0] + v * E[1][0]
                row[t] = u * E[0][1] + v * E[1][1]
        rs, rt = self.Vi[s], self.Vi[t]
        self.Vi[s] = [Einv[0][0] * u + Einv[0][1] * v for u, v in zip(rs, rt)]
        self.Vi[t] = [Einv[1][0] * u + Einv[1][1] * v for u, v in zip(rs, rt)]


def _diagonalize(T: _Tracker) -> int:
    A = T.A
    r = 0
    while r < min(T.m, T.n):
        best = None
        for i in range(r, T.m):
            for j in range(r, T.n):
                if A[i][j] and (best is None or abs(A[i][j]) < best[0]):
                    best = (abs(A[i][j]), i, j)
                    if best[0] == 1:
                        break
            if best and best[0] == 1:
                break
        if best is None:
            break
        T.row_swap(r, best[1])
        T.col_swap(r, best[2])
        while True:
            piv = A[r][r]
            done = True
            for i in range(r + 1, T.m):
                if A[i][r]:
                    T.row_add(i, r, -(A[i][r] // piv))
                    if A[i][r]:
                        done = False
            for j in range(r + 1, T.n):
                if A[r][j]:
                    T.col_add(j, r, -(A[r][j] // piv))
                    if A[r][j]:
                        done = False
            if done:
                break
            # move the smallest remainder into the pivot position and repeat
            cands = [(abs(A[i][r]), i, r) for i in range(r + 1, T.m) if A[i][r]]
            cands += [(abs(A[r][j]), r, j) for j in range(r + 1, T.n) if A[r][j]]
            _, i, j = min(cands)
            T.row_swap(r, i)
            T.col_swap(r, j)
        if A[r][r] < 0:
            T.row_neg(r)
        r += 1
    return r


def smith_normal_form(A, return_inverses: bool = False):
    """Smith normal form ``U @ A @ V = S`` of an integer matrix.

    Args:
        A: integer matrix (array-like, any shape).
        return_inverses: also return ``U^{-1}`` and ``V^{-1}``.

    Returns:
        ``(U, S, V)`` or ``(U, S, V, Uinv, Vinv)`` as numpy object arrays of
        Python ints. The diagonal of ``S`` is non-negative with
        ``d_i | d_{i+1}``; zero entries trail.
    """
    A = np.asarray(A, dtype=object)
    if A.ndim != 2:
        raise ValueError("expected a matrix")
    m, n = A.shape
    T = _Tracker(A.tolist() if m and n else [[0] * n for _ in range(m)], m, n)
    rank = _diagonalize(T) if m and n else 0
    # enforce the divisibility chain
    changed = True
    while changed:
        changed = False
        for s in range(rank):
            for t in range(s + 1, rank):
                a, b = T.A[s][s], T.A[t][t]
                if b % a:
                    T.fix_pair(s, t)
                    changed = True
    for s in range(rank):
        if T.A[s][s] < 0:
            T.row_neg(s)
    out = [_obj(T.U, m, m), _obj(T.A, m, n), _obj(T.V, n, n)]
    if return_inverses:
        out += [_obj(T.Ui, m, m), _obj(T.Vi, n, n)]
    return tuple(out)


def _obj(rows, m, n):
    out = np.empty((m, n), dtype=object)
    for i in range(m):
        for j in range(n):
            out[i, j] = int(rows[i][j])
    return out


def int_det(M) -> int:
    """Exact determinant of a square integer matrix (fraction-free Bareiss)."""
    M = [[int(x) for x in row] for row in np.asarray(M, dtype=object).tolist()]
    n = len(M)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for i in range(k + 1, n):
                if M[i][k]:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def diagonal(S) -> list[int]:
    return [int(S[i, i]) for i in range(min(S.shape))]


__all__ = ["smith_normal_form", "int_det", "diagonal"]
