"""Representations of the q-oscillator algebra

    q a* a - q^-1 a a* = q - q^-1,   k a* = q a* k,   k a = q^-1 a k,
    k^2 = q (1 - a* a) = q^-1 (1 - a a*),

as explicit matrices (truncated Fock and cyclic), the two-by-two-block
L-operator built from them, and the intertwining check

    L12(H1) L13(H2) L23(H3) R  =  R  L23(H3) L13(H2) L12(H1).

Large products keep the 8 x 8 block structure over the three auxiliary C^2
spaces, with each block an operator on V1 x V2 x V3; a dense flattening is
available behind an entry-count guard.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .specfun import SphericalTriangle, root_of_unity_q

DENSE_ENTRY_LIMIT = 10 ** 7


# ---------------------------------------------------------------------------
# representations
# ---------------------------------------------------------------------------

@dataclass
class QOscRep:
    kind: str
    q: complex
    a: np.ndarray
    a_star: np.ndarray
    k: np.ndarray
    k_inv: np.ndarray
    exact_levels: int  # relations hold on basis states below this index

    @property
    def dim(self):
        return self.a.shape[0]

    def interior_mask(self) -> np.ndarray:
        """True on basis states where all algebra relations act exactly."""
        return np.arange(self.dim) < self.exact_levels


def fock_rep(cutoff: int, q: complex) -> QOscRep:
    """Truncated Fock representation on basis |0> .. |cutoff>.

    a|n+1> = |n>,  a*|n> = (1 - q^{2+2n})|n+1>,  k|n> = q^{n+1/2}|n>.
    The pair relation q a*a - q^-1 a a* = q - q^-1 fails only on the top
    state; the interior mask excludes the top two levels to keep products
    of shifted states exact as well.
    """
    if cutoff < 2:
        raise DomainError("need cutoff >= 2")
    d = cutoff + 1
    a = np.zeros((d, d), dtype=complex)
    a_star = np.zeros((d, d), dtype=complex)
    for n in range(cutoff):
        a[n, n + 1] = 1.0
        a_star[n + 1, n] = 1.0 - q ** (2 + 2 * n)
    levels = np.arange(d)
    k = np.diag(q ** (levels + 0.5)).astype(complex)
    k_inv = np.diag(q ** (-(levels + 0.5))).astype(complex)
    return QOscRep("fock", q, a, a_star, k, k_inv, exact_levels=cutoff - 1)


def cyclic_rep(N: int, kappa: complex, rho: complex) -> QOscRep:
    """Cyclic representation at q = -exp(i pi / N) built from the clock and
    shift matrices X|n> = q^n |n>, Z|n> = |n+1 mod N>:

        k = kappa X,  a* = rho^-1 (1 - q^-1 kappa^2 X^2) Z,  a = rho Z^-1.
    """
    if N < 2:
        raise DomainError("need N >= 2")
    if kappa == 0 or rho == 0:
        raise DomainError("kappa and rho must be nonzero")
    q = root_of_unity_q(N)
    x = np.diag(q ** np.arange(N)).astype(complex)
    z = np.zeros((N, N), dtype=complex)
    for n in range(N):
        z[(n + 1) % N, n] = 1.0
    k = kappa * x
    k_inv = np.linalg.inv(k)
    a_star = (np.eye(N) - kappa ** 2 / q * (x @ x)) @ z / rho
    a = rho * np.linalg.inv(z)
    return QOscRep("cyclic", q, a, a_star, k, k_inv, exact_levels=N)


def algebra_residuals(rep: QOscRep) -> dict:
    """Masked residuals of the defining relations."""
    q = rep.q
    eye = np.eye(rep.dim)
    rels = {
        "pair": q * rep.a_star @ rep.a - rep.a @ rep.a_star / q - (q - 1 / q) * eye,
        "k_astar": rep.k @ rep.a_star - q * rep.a_star @ rep.k,
        "k_a": rep.k @ rep.a - rep.a @ rep.k / q,
        "ksq_left": rep.k @ rep.k - q * (eye - rep.a_star @ rep.a),
        "ksq_right": rep.k @ rep.k - (eye - rep.a @ rep.a_star) / q,
    }
    m = rep.interior_mask()
    return {name: float(np.max(np.abs(mat[np.ix_(m, m)]))) for name, mat in rels.items()}


# ---------------------------------------------------------------------------
# block operators over C^2 x C^2 x C^2 (x) V1 x V2 x V3
# ---------------------------------------------------------------------------

class BlockOp:
    """Operator kept as an 8 x 8 dict of blocks acting on V1 x V2 x V3."""

    __array_ufunc__ = None  # make ndarray @ BlockOp defer to __rmatmul__

    def __init__(self, dims, blocks=None):
        self.dims = tuple(dims)
        self.vdim = int(np.prod(dims))
        self.blocks = {} if blocks is None else blocks

    def add(self, i, j, mat):
        key = (i, j)
        if key in self.blocks:
            self.blocks[key] = self.blocks[key] + mat
        else:
            self.blocks[key] = mat

    def __matmul__(self, other):
        if isinstance(other, BlockOp):
            out = BlockOp(self.dims)
            for (i, j), a in self.blocks.items():
                for (jj, k), b in other.blocks.items():
                    if j == jj:
                        out.add(i, k, a @ b)
            return out
        # a plain matrix acts on the V factors only
        out = BlockOp(self.dims)
        for (i, j), a in self.blocks.items():
            out.add(i, j, a @ other)
        return out

    def __rmatmul__(self, other):
        out = BlockOp(self.dims)
        for (i, j), a in self.blocks.items():
            out.add(i, j, other @ a)
        return out

    def __sub__(self, other):
        out = BlockOp(self.dims, dict(self.blocks))
        for key, b in other.blocks.items():
            out.add(*key, -b)
        return out

    def max_abs(self, mask=None) -> float:
        worst = 0.0
        for block in self.blocks.values():
            b = block if mask is None else block[np.ix_(mask, mask)]
            if b.size:
                worst = max(worst, float(np.max(np.abs(b))))
        return worst

    def dense(self) -> np.ndarray:
        n = 8 * self.vdim
        if n * n > DENSE_ENTRY_LIMIT:
            raise ConfigurationError(
                "dense operator would hold %d entries (limit %d); "
                "use the blockwise interface" % (n * n, DENSE_ENTRY_LIMIT))
        out = np.zeros((n, n), dtype=complex)
        d = self.vdim
        for (i, j), b in self.blocks.items():
            out[i * d:(i + 1) * d, j * d:(j + 1) * d] = b
        return out


def _kron3(ops):
    return np.kron(np.kron(ops[0], ops[1]), ops[2])


def _loper_entries(rep: QOscRep, lam: complex, mu: complex):
    """Nonzero entries of the two-by-two-block L-matrix.

    Row/column indices are (c, i) with c the second auxiliary space and i
    the first; entry (0,0)=1, (1,1)=lam k, (1,2)=a*, (2,1)=lam mu a,
    (2,2)=-mu k, (3,3)=lam mu.
    """
    eye = np.eye(rep.dim, dtype=complex)
    return {
        (0, 0): eye,
        (1, 1): lam * rep.k,
        (1, 2): rep.a_star.astype(complex),
        (2, 1): lam * mu * rep.a.astype(complex),
        (2, 2): -mu * rep.k,
        (3, 3): lam * mu * eye,
    }


def build_l(reps, lambdas, mus) -> tuple[BlockOp, BlockOp, BlockOp]:
    """L12(H1), L13(H2), L23(H3) on C^2 x C^2 x C^2 (x) V1 x V2 x V3.

    reps, lambdas, mus are triples; all reps must share one q.
    """
    if len({complex(np.round(r.q, 12)) for r in reps}) != 1:
        raise DomainError("representations must share the deformation parameter")
    dims = tuple(r.dim for r in reps)
    placements = ((0, 1, 0), (0, 2, 1), (1, 2, 2))  # (first aux, second aux, rep index)
    out = []
    for first, second, ridx in placements:
        rep = reps[ridx]
        op = BlockOp(dims)
        for (row, col), mat in _loper_entries(rep, lambdas[ridx], mus[ridx]).items():
            c, i = divmod(row, 2)
            d_, j = divmod(col, 2)
            vops = [np.eye(dims[0], dtype=complex),
                    np.eye(dims[1], dtype=complex),
                    np.eye(dims[2], dtype=complex)]
            vops[ridx] = mat
            for spect in range(2):  # spectator aux index
                bits_row = [0, 0, 0]
                bits_col = [0, 0, 0]
                bits_row[first], bits_col[first] = i, j
                bits_row[second], bits_col[second] = c, d_
                spec_axis = 3 - first - second
                bits_row[spec_axis] = bits_col[spec_axis] = spect
                irow = bits_row[0] * 4 + bits_row[1] * 2 + bits_row[2]
                icol = bits_col[0] * 4 + bits_col[1] * 2 + bits_col[2]
                op.add(irow, icol, _kron3(vops))
        out.append(op)
    return tuple(out)


def triple_product(l12: BlockOp, l13: BlockOp, l23: BlockOp, reverse=False) -> BlockOp:
    if reverse:
        return l23 @ (l13 @ l12)
    return l12 @ (l13 @ l23)


def intertwine_residual(l_ops, r_matrix: np.ndarray, mask: np.ndarray | None = None) -> float:
    """Normalized max-entry residual of LLL . R - R . (reversed LLL).

    mask, if given, is a boolean vector over the V1 x V2 x V3 basis; rows
    and columns outside it are ignored (truncated-Fock boundary).
    """
    l12, l13, l23 = l_ops
    lhs = triple_product(l12, l13, l23) @ r_matrix
    rhs = r_matrix @ triple_product(l12, l13, l23, reverse=True)
    diff = lhs - rhs
    scale = max(lhs.max_abs(mask), rhs.max_abs(mask), 1e-300)
    return diff.max_abs(mask) / scale


def product_state_mask(reps) -> np.ndarray:
    """Boolean mask over V1 x V2 x V3 selecting exact-action product states."""
    masks = [r.interior_mask() for r in reps]
    out = masks[0][:, None, None] & masks[1][None, :, None] & masks[2][None, None, :]
    return out.reshape(-1)


# ---------------------------------------------------------------------------
# extended-precision Fock intertwining
# ---------------------------------------------------------------------------
#
# At larger cutoffs the R elements within one charge sector span enormous
# magnitude ranges (q^{+-(cutoff^2)} prefactors), so dense double-precision
# products lose every significant digit even though the masked identity is
# exact.  The check below works in software floats on sparse dictionaries:
# each L operator has at most a handful of entries per row.

def _fock_l_sparse(cutoff, q, lam, mu, first, second, rep_axis, mp):
    """Sparse row dict of L_{first,second}(H_rep) over keys
    ((c0, c1, c2), (n1, n2, n3)) at working mp precision."""
    d = cutoff + 1
    qm = mp.mpmathify(q)
    lam = mp.mpmathify(lam)
    mu = mp.mpmathify(mu)
    # V-space actions as (shift, coefficient(n)) pairs
    eye = (0, lambda n: mp.mpf(1))
    k_op = (0, lambda n: qm ** (n + mp.mpf("0.5")))
    a_op = (+1, lambda n: mp.mpf(1))          # a |n+1> = |n>: col = row + 1
    astar_op = (-1, lambda n: 1 - qm ** (2 * n))  # a*|n-1> = (1-q^{2n})|n>
    entries4 = {
        (0, 0): (eye, 1),
        (1, 1): (k_op, lam),
        (1, 2): (astar_op, 1),
        (2, 1): (a_op, lam * mu),
        (2, 2): (k_op, -mu),
        (3, 3): (eye, lam * mu),
    }
    spect_axis = 3 - first - second
    rows = {}
    for (r4, c4), ((shift, coeff), scal) in entries4.items():
        c_sec, i_first = divmod(r4, 2)
        d_sec, j_first = divmod(c4, 2)
        for spect in range(2):
            cb_row = [0, 0, 0]
            cb_col = [0, 0, 0]
            cb_row[first], cb_col[first] = i_first, j_first
            cb_row[second], cb_col[second] = c_sec, d_sec
            cb_row[spect_axis] = cb_col[spect_axis] = spect
            for ns in np.ndindex(d, d, d):
                col_n = list(ns)
                row_n = list(ns)
                row_n[rep_axis] = ns[rep_axis] - shift
                if not 0 <= row_n[rep_axis] < d:
                    continue
                val = coeff(row_n[rep_axis]) if shift <= 0 else coeff(col_n[rep_axis])
                # a: row n, col n+1 -> value 1; a*: row n, col n-1 -> 1-q^{2 row}
                if shift == +1:
                    val = mp.mpf(1)
                rows.setdefault((tuple(cb_row), tuple(row_n)), []).append(
                    ((tuple(cb_col), tuple(col_n)), scal * val))
    return rows


def _sparse_matmul(a_rows, b_rows):
    out = {}
    for r, entries in a_rows.items():
        acc = {}
        for mid, v in entries:
            for c, w in b_rows.get(mid, ()):
                acc[c] = acc.get(c, 0) + v * w
        out[r] = list(acc.items())
    return out


def fock_intertwine_extended(cutoff: int, q, element_fn, dps: int = 50,
                             lam=1.0, mu=-1.0) -> float:
    """Masked intertwining residual at elevated precision.

    element_fn(n1, n2, n3, m1, m2, m3, q) must return the R element as an
    mp number; the interior mask keeps oscillator indices < cutoff - 1.
    """
    import mpmath as mp

    with mp.workdps(dps):
        ls = [
            _fock_l_sparse(cutoff, q, lam, mu, 0, 1, 0, mp),
            _fock_l_sparse(cutoff, q, lam, mu, 0, 2, 1, mp),
            _fock_l_sparse(cutoff, q, lam, mu, 1, 2, 2, mp),
        ]
        fwd = _sparse_matmul(_sparse_matmul(ls[0], ls[1]), ls[2])
        rev = _sparse_matmul(_sparse_matmul(ls[2], ls[1]), ls[0])
        interior = range(cutoff - 1)
        masked = [(cb, n) for cb in np.ndindex(2, 2, 2)
                  for n in _interior_triples(interior)]
        masked_set = set(masked)
        # left side: (LLL . R)[r, c] = sum_t LLL[r, t] R[t, c]
        lhs = {}
        for r in masked:
            for t, v in fwd.get(r, ()):
                tn = t[1]
                c1, c2 = tn[0] + tn[1], tn[1] + tn[2]
                for m2 in range(max(0, c2 - cutoff, c1 - cutoff), min(c1, c2, cutoff) + 1):
                    cn = (c1 - m2, m2, c2 - m2)
                    ckey = (t[0], cn)
                    if ckey not in masked_set:
                        continue
                    el = element_fn(*tn, *cn, q)
                    if el:
                        lhs[(r, ckey)] = lhs.get((r, ckey), 0) + v * el
        # right side: (R . LLL_rev)[r, c] = sum_u R[r, u] LLL_rev[u, c]
        rev_cols = {}
        for u, entries in rev.items():
            for c, v in entries:
                rev_cols.setdefault(u, []).append((c, v))
        rhs = {}
        for r in masked:
            rn = r[1]
            c1, c2 = rn[0] + rn[1], rn[1] + rn[2]
            for m2 in range(max(0, c2 - cutoff, c1 - cutoff), min(c1, c2, cutoff) + 1):
                un = (c1 - m2, m2, c2 - m2)
                el = element_fn(*rn, *un, q)
                if not el:
                    continue
                for c, v in rev_cols.get((r[0], un), ()):
                    if c in masked_set:
                        rhs[(r, c)] = rhs.get((r, c), 0) + el * v
        scale = mp.mpf(0)
        for table in (lhs, rhs):
            for v in table.values():
                scale = max(scale, abs(v))
        worst = mp.mpf(0)
        for key in set(lhs) | set(rhs):
            worst = max(worst, abs(lhs.get(key, 0) - rhs.get(key, 0)))
        return float(worst / (scale + mp.mpf("1e-300")))


def _interior_triples(rng):
    return [(i, j, k) for i in rng for j in rng for k in rng]


# ---------------------------------------------------------------------------
# automorphism relations of the flip map, operator level
# ---------------------------------------------------------------------------

def map_operator_residuals(reps, r_matrix: np.ndarray, eps: int = 1,
                           mask: np.ndarray | None = None) -> dict:
    """Residuals of R . F = F' . R for the six flip-map relations plus the
    primed constraint (k2')^2 = q (1 - a2*' a2')."""
    r1, r2, r3 = reps
    q = r1.q
    eyes = [np.eye(r.dim, dtype=complex) for r in reps]

    def op(o1, o2, o3):
        return _kron3([o1 if o1 is not None else eyes[0],
                       o2 if o2 is not None else eyes[1],
                       o3 if o3 is not None else eyes[2]])

    k1, a1, s1 = op(r1.k, None, None), op(r1.a, None, None), op(r1.a_star, None, None)
    k2, a2, s2 = op(None, r2.k, None), op(None, r2.a, None), op(None, r2.a_star, None)
    k3, a3, s3 = op(None, None, r3.k), op(None, None, r3.a), op(None, None, r3.a_star)
    img_a2 = a1 @ a3 + eps * k1 @ k3 @ a2
    img_s2 = s1 @ s3 + eps * k1 @ k3 @ s2
    rels = {
        "k2a1s": (k2 @ s1, k3 @ s1 - eps * k1 @ s2 @ a3),
        "k2a1": (k2 @ a1, k3 @ a1 - eps * k1 @ a2 @ s3),
        "a2s": (s2, img_s2),
        "a2": (a2, img_a2),
        "k2a3s": (k2 @ s3, k1 @ s3 - eps * k3 @ a1 @ s2),
        "k2a3": (k2 @ a3, k1 @ a3 - eps * k3 @ s1 @ a2),
        "k2sq_constraint": (k2 @ k2, q * (op(None, None, None) - img_s2 @ img_a2)),
    }
    out = {}
    for name, (pre, post) in rels.items():
        diff = r_matrix @ pre - post @ r_matrix
        if mask is not None:
            diff = diff[np.ix_(mask, mask)]
        scale = max(float(np.max(np.abs(r_matrix))), 1e-300)
        out[name] = float(np.max(np.abs(diff))) / scale
    return out


# ---------------------------------------------------------------------------
# cyclic parameters from a spherical triangle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CyclicParams:
    """Representation and L-operator parameters of the cyclic solution."""

    N: int
    kappas: tuple
    rhos: tuple
    lambdas: tuple
    mus: tuple

    @classmethod
    def from_triangle(cls, tri: SphericalTriangle, N: int) -> "CyclicParams":
        """Gauge-fixed parameters: lambda2 = mu2 = mu3 = 1 and rho2 = rho3 = 1;
        the free combinations are carried by lambda1, lambda3, mu1, rho1."""
        root = lambda v: v ** (1.0 / N)
        if math.sin(tri.beta0) <= 0 or math.sin(tri.beta2) <= 0:
            raise DomainError("triangle outside the admissible region")
        kappas = (1j * root(math.tan(tri.theta1 / 2)),
                  1j * root(1.0 / math.tan(tri.theta2 / 2)),
                  1j * root(math.tan(tri.theta3 / 2)))
        rho1 = cmath.exp(-1j * tri.beta2 / N) * root(
            math.sin(tri.a2) / math.sin(tri.beta0))
        lambdas = (cmath.exp(-1j * tri.a2 / N), 1.0, cmath.exp(1j * tri.a1 / N))
        mus = (cmath.exp(1j * tri.a3 / N), 1.0, 1.0)
        return cls(N, kappas, (rho1, 1.0, 1.0), lambdas, mus)

    def reps(self):
        return tuple(cyclic_rep(self.N, self.kappas[j], self.rhos[j]) for j in range(3))


def parameter_combinations(lambdas, mus):
    """The three combinations the intertwining relation depends on:
    lambda2/lambda3, lambda1 mu3, mu1/mu2."""
    if lambdas[2] == 0 or mus[1] == 0:
        raise DomainError("zero parameter in a denominator")
    return (lambdas[1] / lambdas[2], lambdas[0] * mus[2], mus[0] / mus[1])


def regauge(lambdas, mus, c1: complex, c2: complex, c3: complex):
    """Rescale (lambda, mu) without changing the three combinations."""
    lams = (lambdas[0] * c3, lambdas[1] * c1, lambdas[2] * c1)
    ms = (mus[0] * c2, mus[1] * c2, mus[2] / c3)
    return lams, ms
