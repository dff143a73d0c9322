"""
Rate-1/2 LDPC channel coding.

Provides a seeded progressive edge-growth (PEG) construction of regular
(3, 6) parity-check matrices, alist (de)serialization, systematic encoding
via GF(2) Gaussian elimination and normalized min-sum decoding.

LLR convention at this module's boundary is ``log P(b=1) / P(b=0)``
(positive means bit 1). The decoder negates internally.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import AlistParseError, ConfigError, EncoderConstructionError, InvalidInputError

MIN_SUM_SCALE = 0.75
DEFAULT_MAX_ITER = 20
_MSG_CAP = 1e3


@dataclass(frozen=True, eq=True)
class ParityCheckMatrix:
    """Sparse binary parity-check matrix.

    Attributes
    ----------
    n : int
        Codeword length.
    rows : tuple of tuple of int
        One sorted tuple of column indices per parity constraint.
    """

    n: int
    rows: tuple

    def __post_init__(self):
        if self.n <= len(self.rows) or not self.rows:
            raise ConfigError(f"need 0 < k < n, got n={self.n}, m={len(self.rows)}")
        for r in self.rows:
            if len(set(r)) != len(r):
                raise ConfigError("duplicate column index within a row")
            if any(c < 0 or c >= self.n for c in r):
                raise ConfigError("column index out of range")

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def k(self) -> int:
        return self.n - self.m

    @cached_property
    def row_degrees(self) -> np.ndarray:
        return np.array([len(r) for r in self.rows])

    @cached_property
    def column_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for r in self.rows:
            deg[list(r)] += 1
        return deg

    def dense(self) -> np.ndarray:
        H = np.zeros((self.m, self.n), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            H[i, list(r)] = 1
        return H

    def syndrome(self, c: np.ndarray) -> np.ndarray:
        """``H c^T mod 2`` for one codeword or a batch ``(B, n)``."""
        return (np.asarray(c, dtype=np.int64) @ self.dense().T.astype(np.int64)) % 2

    @cached_property
    def _systematic(self):
        return _systematic_form(self.dense())

    @property
    def info_set(self) -> np.ndarray:
        """Codeword positions carrying the message bits, in message order."""
        return self._systematic[0]

    @cached_property
    def _graph(self):
        return _TannerGraph(self)


def _systematic_form(H: np.ndarray):
    """Reduce H over GF(2); return (info_set, pivot_cols, parity map P).

    Codewords satisfy ``c[pivot_cols] = P @ c[info_set] mod 2``.
    """
    R = H.copy()
    m, n = R.shape
    pivots = []
    row = 0
    for col in range(n):
        if row == m:
            break
        hits = np.nonzero(R[row:, col])[0]
        if hits.size == 0:
            continue
        p = row + hits[0]
        if p != row:
            R[[row, p]] = R[[p, row]]
        others = np.nonzero(R[:, col])[0]
        others = others[others != row]
        R[others] ^= R[row]
        pivots.append(col)
        row += 1
    if row < m:
        raise EncoderConstructionError(row, m)
    pivots = np.array(pivots)
    info = np.setdiff1d(np.arange(n), pivots)
    return info, pivots, R[:, info]


class _TannerGraph:
    """Padded edge index tables used by the vectorized decoder."""

    def __init__(self, H: ParityCheckMatrix):
        edge_chk = np.concatenate([np.full(len(r), i) for i, r in enumerate(H.rows)])
        edge_var = np.concatenate([np.array(r) for r in H.rows])
        E = edge_var.size
        self.num_edges = E
        self.edge_var = edge_var

        dc = int(H.row_degrees.max())
        self.chk_edges = np.full((H.m, dc), E)
        self.chk_vars = np.full((H.m, dc), H.n)
        start = 0
        for i, r in enumerate(H.rows):
            self.chk_edges[i, : len(r)] = np.arange(start, start + len(r))
            self.chk_vars[i, : len(r)] = r
            start += len(r)

        dv = int(H.column_degrees.max())
        self.var_edges = np.full((H.n, dv), E)
        order = np.argsort(edge_var, kind="stable")
        fill = np.zeros(H.n, dtype=int)
        for e in order:
            v = edge_var[e]
            self.var_edges[v, fill[v]] = e
            fill[v] += 1


def build_parity_matrix(n: int, seed: int = 0) -> ParityCheckMatrix:
    """Regular (3, 6) LDPC matrix by progressive edge growth.

    Each new edge of a variable node goes to a check node that is as far as
    possible in the current Tanner graph (unreachable if any exist), picking
    the lowest-degree candidate and breaking ties with a seeded generator.
    Check degrees are capped at 6 so the result is exactly regular.
    """
    if n < 24 or (3 * n) % 6:
        raise ConfigError(f"3*n must be divisible by row degree 6 and n >= 24, got n={n}")
    return _build_peg(n, seed)


@lru_cache(maxsize=8)
def _build_peg(n: int, seed: int) -> ParityCheckMatrix:
    dv, dc = 3, 6
    m = n * dv // dc
    rng = np.random.default_rng(seed)
    var_chk = np.full((n, dv), -1)
    chk_var = np.full((m, dc), -1)
    chk_deg = np.zeros(m, dtype=int)

    for v in range(n):
        for e in range(dv):
            avail = chk_deg < dc
            if e == 0:
                cand = avail
            else:
                cand = _farthest_checks(v, var_chk, chk_var, avail, n, m)
            if not cand.any():
                cand = avail.copy()
                cand[var_chk[v, :e]] = False
            if not cand.any():
                raise ConfigError(f"PEG construction stuck at variable {v}; change the seed")
            idx = np.nonzero(cand)[0]
            degs = chk_deg[idx]
            best = idx[degs == degs.min()]
            c = int(best[rng.integers(best.size)])
            var_chk[v, e] = c
            chk_var[c, chk_deg[c]] = v
            chk_deg[c] += 1

    rows = tuple(tuple(sorted(int(x) for x in chk_var[c])) for c in range(m))
    return ParityCheckMatrix(n, rows)


def _farthest_checks(v, var_chk, chk_var, avail, n, m):
    reached = np.zeros(m, dtype=bool)
    seen_var = np.zeros(n, dtype=bool)
    seen_var[v] = True
    frontier = var_chk[v][var_chk[v] >= 0]
    reached[frontier] = True
    while True:
        prev = reached.copy()
        vs = chk_var[frontier].ravel()
        vs = vs[vs >= 0]
        vs = np.unique(vs[~seen_var[vs]])
        seen_var[vs] = True
        cs = var_chk[vs].ravel()
        cs = cs[cs >= 0]
        cs = np.unique(cs[~reached[cs]])
        if cs.size == 0:
            # graph component exhausted: anything unreached is "infinitely" far
            return avail & ~reached
        reached[cs] = True
        if not (avail & ~reached).any():
            return avail & ~prev
        frontier = cs


def has_four_cycle(H: ParityCheckMatrix) -> bool:
    """True if two rows share two or more columns."""
    D = H.dense().astype(np.int32)
    overlap = D @ D.T
    np.fill_diagonal(overlap, 0)
    return bool((overlap > 1).any())


# -- alist -------------------------------------------------------------------


def to_alist(H: ParityCheckMatrix) -> str:
    cols = [[] for _ in range(H.n)]
    for i, r in enumerate(H.rows):
        for c in r:
            cols[c].append(i)
    cdeg, rdeg = H.column_degrees, H.row_degrees
    lines = [
        f"{H.n} {H.m}",
        f"{cdeg.max()} {rdeg.max()}",
        " ".join(map(str, cdeg)),
        " ".join(map(str, rdeg)),
    ]
    for col in cols:
        lines.append(" ".join(str(i + 1) for i in col))
    for r in H.rows:
        lines.append(" ".join(str(c + 1) for c in r))
    return "\n".join(lines) + "\n"


def load_parity_matrix(text: str) -> ParityCheckMatrix:
    """Parse an alist document (1-based indices, zero padding ignored)."""
    lines = [(i + 1, ln.split()) for i, ln in enumerate(text.splitlines())]
    lines = [(no, toks) for no, toks in lines if toks]

    def ints(no, toks):
        try:
            return [int(t) for t in toks]
        except ValueError:
            raise AlistParseError(no, f"non-integer token in {' '.join(toks)!r}") from None

    if len(lines) < 4:
        raise AlistParseError(len(lines) + 1, "truncated header")
    no, toks = lines[0]
    hdr = ints(no, toks)
    if len(hdr) != 2 or hdr[0] <= 0 or hdr[1] <= 0:
        raise AlistParseError(no, "expected 'n m'")
    n, m = hdr
    no, toks = lines[1]
    maxdeg = ints(no, toks)
    if len(maxdeg) != 2:
        raise AlistParseError(no, "expected 'max_col_deg max_row_deg'")
    no, toks = lines[2]
    cdeg = ints(no, toks)
    if len(cdeg) != n:
        raise AlistParseError(no, f"expected {n} column degrees, got {len(cdeg)}")
    no, toks = lines[3]
    rdeg = ints(no, toks)
    if len(rdeg) != m:
        raise AlistParseError(no, f"expected {m} row degrees, got {len(rdeg)}")
    if len(lines) < 4 + n + m:
        raise AlistParseError(lines[-1][0] + 1, f"expected {n} column and {m} row adjacency lines")

    def adjacency(no, toks, limit, degree):
        vals = [x for x in ints(no, toks) if x != 0]
        if any(x < 1 or x > limit for x in vals):
            raise AlistParseError(no, f"index out of range 1..{limit}")
        if len(set(vals)) != len(vals):
            raise AlistParseError(no, "duplicate entry")
        if len(vals) != degree:
            raise AlistParseError(no, f"expected {degree} entries, got {len(vals)}")
        return [x - 1 for x in vals]

    col_sets = set()
    for j in range(n):
        no, toks = lines[4 + j]
        for i in adjacency(no, toks, m, cdeg[j]):
            col_sets.add((i, j))
    rows = []
    for i in range(m):
        no, toks = lines[4 + n + i]
        rows.append(tuple(sorted(adjacency(no, toks, n, rdeg[i]))))
    row_sets = {(i, j) for i, r in enumerate(rows) for j in r}
    if row_sets != col_sets:
        raise AlistParseError(lines[4 + n][0], "row and column adjacency lists disagree")
    return ParityCheckMatrix(n, tuple(rows))


# -- encode / decode ---------------------------------------------------------


def ldpc_encode(msg: np.ndarray, H: ParityCheckMatrix) -> np.ndarray:
    """Systematic encoding. Accepts ``(k,)`` or a batch ``(B, k)``."""
    msg = np.asarray(msg, dtype=np.uint8)
    if msg.shape[-1] != H.k:
        raise ConfigError(f"message length {msg.shape[-1]} != k={H.k}")
    info, pivots, P = H._systematic
    c = np.zeros(msg.shape[:-1] + (H.n,), dtype=np.uint8)
    c[..., info] = msg
    c[..., pivots] = (msg.astype(np.int64) @ P.T.astype(np.int64)) % 2
    return c


def ldpc_decode(llrs, H: ParityCheckMatrix, max_iter: int = DEFAULT_MAX_ITER, scale: float = MIN_SUM_SCALE):
    """Normalized min-sum belief propagation.

    Parameters
    ----------
    llrs : array_like, shape (n,) or (B, n)
        Channel LLRs, ``log P(1)/P(0)``.
    H : ParityCheckMatrix
    max_iter : int
        Upper bound on message-passing iterations.

    Returns
    -------
    msg : ndarray of uint8, shape (k,) or (B, k)
    converged : bool or ndarray of bool
        Syndrome is zero and no posterior is exactly tied.
    iterations : int or ndarray of int
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    single = llrs.ndim == 1
    L = -np.atleast_2d(llrs)
    if L.shape[-1] != H.n:
        raise InvalidInputError(f"expected {H.n} LLRs per codeword, got {L.shape[-1]}")
    if not np.isfinite(L).all():
        raise InvalidInputError("LLRs must be finite")

    g = H._graph
    B = L.shape[0]
    E = g.num_edges
    bits = (L < 0).astype(np.uint8)
    converged = np.zeros(B, dtype=bool)
    iters = np.full(B, max_iter)

    active = np.arange(B)
    Q = np.empty((B, E + 1))
    Q[:, :E] = L[:, g.edge_var]
    Q[:, E] = np.inf
    R = np.zeros((B, E + 1))

    for it in range(1, max_iter + 1):
        La, Qa = L[active], Q[active]
        q = Qa[:, g.chk_edges]
        neg = q < 0
        sgn = np.where(neg, -1.0, 1.0)
        total_sgn = np.where(neg.sum(-1, keepdims=True) % 2 == 1, -1.0, 1.0)
        mag = np.abs(q)
        i1 = np.argmin(mag, axis=-1)[..., None]
        min1 = np.take_along_axis(mag, i1, -1)
        np.put_along_axis(mag, i1, np.inf, -1)
        min2 = mag.min(-1, keepdims=True)
        pos = np.arange(q.shape[-1])
        out = np.where(pos == i1, min2, min1)
        out = np.minimum(out, _MSG_CAP)
        Ra = np.zeros((active.size, E + 1))
        Ra[:, g.chk_edges] = scale * total_sgn * sgn * out
        Ra[:, E] = 0.0

        post = La + Ra[:, g.var_edges].sum(-1)
        Qa[:, :E] = post[:, g.edge_var] - Ra[:, :E]
        Q[active], R[active] = Qa, Ra

        hard = (post < 0).astype(np.uint8)
        ext = np.concatenate([hard, np.zeros((active.size, 1), np.uint8)], axis=1)
        ok = (ext[:, g.chk_vars].sum(-1) % 2 == 0).all(-1) & (post != 0).all(-1)
        bits[active] = hard
        done = active[ok]
        converged[done] = True
        iters[done] = it
        active = active[~ok]
        if active.size == 0:
            break

    msg = bits[:, H.info_set]
    if single:
        return msg[0], bool(converged[0]), int(iters[0])
    return msg, converged, iters
