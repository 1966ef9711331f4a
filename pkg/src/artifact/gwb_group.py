"""The order-k generalised Weyl-Brauer group via normal forms J^b c^s p^alpha.

An element is stored as (b, s, alpha) with alpha a bitmask over [n-1] x Z_k.
Bit i*k + t holds alpha_{i,t} (0-based i), so increasing bit position is the
lexicographic order with i major and t minor. Group elements act on normal
forms from the left; every operation below is vectorised over arrays of
normal forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

GROUP_BUDGET = 10**6
DIM_BUDGET = 4096


class BudgetExceeded(RuntimeError):
    pass


def _popcount(x: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(x).astype(np.int64)
    x = x.astype(np.uint64)
    count = np.zeros(x.shape, dtype=np.int64)
    while np.any(x):
        count += (x & np.uint64(1)).astype(np.int64)
        x = x >> np.uint64(1)
    return count


def f_table(n: int, k: int) -> np.ndarray:
    """f[i, j, t] for 0-based i, j in [n-1] and t in Z_k.

    The three cases (i != j, t = 0), (i <= j, t = 1) and (i >= j, t = -1)
    are disjoint for k >= 3. At k = 2 the last two coincide and their
    contributions add mod 2, giving f[i, i, 1] = 0; the inclusive reading
    f[i, i, 1] = 1 makes c^{-1} r_i c = J r_i, so H would not be central.
    """
    if n < 2 or k < 2:
        raise ValueError("need n >= 2 and k >= 2")
    m = n - 1
    f = np.zeros((m, m, k), dtype=np.int64)
    for i in range(m):
        for j in range(m):
            if i != j:
                f[i, j, 0] ^= 1
            if i <= j:
                f[i, j, 1 % k] ^= 1
            if i >= j:
                f[i, j, (-1) % k] ^= 1
    return f


@dataclass(frozen=True)
class NormalForm:
    b: int
    s: int
    alpha: int  # bitmask, bit i*k + t

    def alpha_matrix(self, n: int, k: int) -> np.ndarray:
        bits = [(self.alpha >> p) & 1 for p in range((n - 1) * k)]
        return np.array(bits, dtype=np.int64).reshape(n - 1, k)


# A word is a tuple of letters; a letter is ("J",), ("c", e) or ("p", i, e)
# with e = +1 or -1 and i 0-based.
Letter = tuple
Word = tuple


@dataclass
class GwbStructure:
    """Action of G_{n,f}^k on normal forms and the quotient by H = <r_i>."""

    n: int
    k: int
    f: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.n < 2 or self.k < 2:
            raise ValueError("need n >= 2 and k >= 2")
        self.f = f_table(self.n, self.k)

    @property
    def nbits(self) -> int:
        return (self.n - 1) * self.k

    @property
    def order_g(self) -> int:
        return 2 * self.k * 2 ** self.nbits

    @property
    def order_quotient(self) -> int:
        return 2 * self.k * 2 ** ((self.k - 1) * (self.n - 1))

    @property
    def rep_dim(self) -> int:
        return self.k * 2 ** ((self.k - 1) * (self.n - 1))

    def pos(self, i: int, t: int) -> int:
        return i * self.k + (t % self.k)

    @cached_property
    def _masks(self) -> np.ndarray:
        # masks[i, s]: bits (j, t) <= (i, s) with f[i, j, t - s] = 1
        k, m = self.k, self.n - 1
        masks = np.zeros((m, k), dtype=np.int64)
        for i in range(m):
            for s in range(k):
                bits = 0
                for j in range(m):
                    for t in range(k):
                        if (j, t) <= (i, s) and self.f[i, j, (t - s) % k]:
                            bits |= 1 << self.pos(j, t)
                masks[i, s] = bits
        return masks

    # -- generator actions ------------------------------------------------- #

    def act_J(self, b, s, a):
        return b ^ 1, s, a

    def act_c(self, b, s, a, e: int = 1):
        return b, (s + e) % self.k, a

    def act_p(self, b, s, a, i: int, e: int = 1):
        bit = (np.int64(1) << (i * self.k + s)).astype(np.int64)
        own = (a & bit) != 0
        parity = (own.astype(np.int64) + _popcount(a & self._masks[i][s])) & 1
        b = b ^ parity
        a = a ^ bit
        if e == -1:  # p_i^{-1} = J p_i
            b = b ^ 1
        return b, s, a

    def act_letter(self, state, letter: Letter):
        b, s, a = state
        if letter[0] == "J":
            return self.act_J(b, s, a)
        if letter[0] == "c":
            return self.act_c(b, s, a, letter[1])
        return self.act_p(b, s, a, letter[1], letter[2])

    def act_word(self, state, word: Word):
        for letter in reversed(word):
            state = self.act_letter(state, letter)
        return state

    def multiply(self, g, h):
        """Product g h for arrays of normal forms g = (b, s, alpha) and h."""
        arrays = np.broadcast_arrays(*(np.asarray(x, dtype=np.int64) for x in (*g, *h)))
        gb, gs, ga = arrays[:3]
        b, s, a = (x.copy() for x in arrays[3:])
        for p in reversed(range(self.nbits)):
            i, t = divmod(p, self.k)
            sel = ((ga >> p) & 1) != 0
            if not np.any(sel):
                continue
            # p_{i,t} = c^{-t} p_i c^t
            st = (s[sel] + t) % self.k
            nb, _, na = self.act_p(b[sel], st, a[sel], i)
            b[sel], a[sel] = nb, na
        s = (s + gs) % self.k
        b = b ^ gb
        return b, s, a

    def element(self, word: Word) -> NormalForm:
        b, s, a = self.act_word((np.array([0]), np.array([0]), np.array([0])), word)
        return NormalForm(int(b[0]), int(s[0]), int(a[0]))

    # -- indexing ------------------------------------------------------------ #

    def encode(self, b, s, a):
        return ((b * self.k + s) << self.nbits) | a

    def decode(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        a = idx & ((1 << self.nbits) - 1)
        rest = idx >> self.nbits
        return rest // self.k, rest % self.k, a

    def all_elements(self):
        return self.decode(np.arange(self.order_g, dtype=np.int64))

    # -- words --------------------------------------------------------------- #

    def generator_letters(self) -> list[Letter]:
        return [("J",), ("c", 1)] + [("p", i, 1) for i in range(self.n - 1)]

    def p_shift_word(self, i: int, t: int) -> Word:
        """c^{-t} p_i c^t."""
        t %= self.k
        return (("c", -1),) * t + (("p", i, 1),) + (("c", 1),) * t

    def r_word(self, i: int) -> Word:
        word: list[Letter] = [("J",)] * (self.k % 2)
        for t in range(self.k):
            word += list(self.p_shift_word(i, t))
        return tuple(word)

    def relators(self) -> list[tuple[str, Word]]:
        k, m = self.k, self.n - 1
        rel: list[tuple[str, Word]] = [
            ("J^2", (("J",), ("J",))),
            ("c^k", (("c", 1),) * k),
            ("[c,J]", (("c", 1), ("J",), ("c", -1), ("J",))),
        ]
        for i in range(m):
            rel.append((f"J p{i + 1}^2", (("J",), ("p", i, 1), ("p", i, 1))))
            rel.append((f"[p{i + 1},J]", (("p", i, 1), ("J",), ("p", i, -1), ("J",))))
        for i in range(m):
            for j in range(m):
                for t in range(k):
                    q = self.p_shift_word(j, t)
                    q_inv = tuple(
                        ("c", -x[1]) if x[0] == "c" else ("p", x[1], -x[2]) for x in reversed(q)
                    )
                    word = (("J",),) * int(self.f[i, j, t]) + (("p", i, 1),) + q + (("p", i, -1),) + q_inv
                    rel.append((f"J^f[p{i + 1},c^-{t}p{j + 1}c^{t}]", word))
        return rel

    # -- quotient ------------------------------------------------------------ #

    @cached_property
    def r_elements(self) -> list[NormalForm]:
        return [self.element(self.r_word(i)) for i in range(self.n - 1)]

    def reduce(self, b, s, a):
        """Coset representative modulo H with alpha_{i,k-1} = 0 for every i."""
        b, s, a = (np.array(x, dtype=np.int64, copy=True) for x in (b, s, a))
        for i, r in enumerate(self.r_elements):
            sel = ((a >> self.pos(i, self.k - 1)) & 1) != 0
            if np.any(sel):
                nb, ns, na = self.multiply((r.b, r.s, r.alpha), (b[sel], s[sel], a[sel]))
                b[sel], s[sel], a[sel] = nb, ns, na
        return b, s, a

    # -- compact basis of the compressed regular representation -------------- #

    @cached_property
    def _admissible_bits(self) -> list[int]:
        return [self.pos(i, t) for i in range(self.n - 1) for t in range(self.k - 1)]

    def basis_states(self):
        """(b=0, s, alpha) for admissible alpha, in basis order."""
        nb = len(self._admissible_bits)
        comp = np.arange(2**nb, dtype=np.int64)
        a = np.zeros_like(comp)
        for q, p in enumerate(self._admissible_bits):
            a |= ((comp >> q) & 1) << p
        s = np.repeat(np.arange(self.k, dtype=np.int64), 2**nb)
        a = np.tile(a, self.k)
        return np.zeros_like(s), s, a

    def basis_index(self, s, a):
        comp = np.zeros_like(a)
        for q, p in enumerate(self._admissible_bits):
            comp |= ((a >> p) & 1) << q
        return s * 2 ** len(self._admissible_bits) + comp


@dataclass
class GroupReport:
    n: int
    k: int
    order_g: int
    expected_order_g: int
    order_quotient: int
    expected_order_quotient: int
    relators_ok: bool
    failed_relators: list[str]
    r_central: bool
    r_order_two: bool
    h_order: int
    admissible_nontrivial: bool

    @property
    def ok(self) -> bool:
        return (
            self.order_g == self.expected_order_g
            and self.order_quotient == self.expected_order_quotient
            and self.relators_ok
            and self.r_central
            and self.r_order_two
            and self.h_order == 2 ** (self.n - 1)
            and self.admissible_nontrivial
        )


def enumerate_group(n: int, k: int, budget: int = GROUP_BUDGET) -> GroupReport:
    """Enumerate G_{n,f}^k as the orbit of the empty word, then quotient by H."""
    g = GwbStructure(n, k)
    if g.order_g > budget:
        raise BudgetExceeded(f"|G| = {g.order_g} exceeds budget {budget}")
    seen = np.zeros(g.order_g, dtype=bool)
    seen[0] = True
    frontier = (np.zeros(1, np.int64), np.zeros(1, np.int64), np.zeros(1, np.int64))
    while frontier[0].size:
        found = []
        for letter in g.generator_letters():
            nb, ns, na = g.act_letter(frontier, letter)
            idx = g.encode(nb, ns, na)
            new = np.unique(idx[~seen[idx]])
            seen[new] = True
            found.append(new)
        fresh = np.unique(np.concatenate(found))
        frontier = g.decode(fresh)
    order_g = int(seen.sum())

    everything = g.all_elements()
    base = g.encode(*everything)
    failed = []
    for name, word in g.relators():
        if not np.array_equal(g.encode(*g.act_word(everything, word)), base):
            failed.append(name)

    central = True
    order_two = True
    for r in g.r_elements:
        left = g.encode(*g.multiply((r.b, r.s, r.alpha), everything))
        right = g.encode(*g.multiply(everything, (r.b, r.s, r.alpha)))
        central &= bool(np.array_equal(left, right))
        sq = g.multiply((r.b, r.s, r.alpha), (r.b, r.s, r.alpha))
        order_two &= int(np.asarray(g.encode(*sq)).item()) == 0

    h = {0}
    for r in g.r_elements:
        h |= {
            int(g.encode(*g.multiply((r.b, r.s, r.alpha), g.decode(np.array([x])))).item()) for x in h
        }
    quotient = np.unique(g.encode(*g.reduce(*everything))).size

    # admissible nonzero alpha: p^alpha reduces to neither e nor J
    _, _, basis_a = g.basis_states()
    nonzero = basis_a[basis_a != 0]
    zeros = np.zeros_like(nonzero)
    rb, rs, ra = g.reduce(zeros, zeros, nonzero)
    admissible_ok = bool(np.all((ra != 0) | (rs != 0)))

    return GroupReport(
        n=n,
        k=k,
        order_g=order_g,
        expected_order_g=g.order_g,
        order_quotient=int(quotient),
        expected_order_quotient=g.order_quotient,
        relators_ok=not failed,
        failed_relators=failed,
        r_central=central,
        r_order_two=order_two,
        h_order=len(h),
        admissible_nontrivial=admissible_ok,
    )


@dataclass(frozen=True)
class GwbRep:
    """Generator images of GWB_n^k on the J = -1 part of its group algebra."""

    n: int
    k: int
    dim: int
    sigma: tuple[np.ndarray, ...]
    c: np.ndarray
    p: tuple[np.ndarray, ...]
    J: np.ndarray
    f: np.ndarray
    structure: GwbStructure


def _signed_permutation(g: GwbStructure, word: Word) -> np.ndarray:
    b0, s0, a0 = g.basis_states()
    b, s, a = g.reduce(*g.act_word((b0, s0, a0), word))
    rows = g.basis_index(s, a)
    cols = np.arange(b0.size)
    mat = np.zeros((b0.size, b0.size), dtype=complex)
    mat[rows, cols] = np.where(b == 0, 1.0, -1.0)
    return mat


def build_representation(n: int, k: int, budget: int = DIM_BUDGET) -> GwbRep:
    g = GwbStructure(n, k)
    if g.rep_dim > budget:
        raise BudgetExceeded(f"representation dimension {g.rep_dim} exceeds budget {budget}")
    c = _signed_permutation(g, (("c", 1),))
    p = tuple(_signed_permutation(g, (("p", i, 1),)) for i in range(n - 1))
    J = _signed_permutation(g, (("J",),))
    sigma = (c,) + tuple(c @ pi for pi in p)
    return GwbRep(n, k, g.rep_dim, sigma, c, p, J, g.f, g)


def rep_of_word(rep: GwbRep, word: Word) -> np.ndarray:
    out = np.eye(rep.dim, dtype=complex)
    for letter in word:
        if letter[0] == "J":
            m = rep.J
        elif letter[0] == "c":
            m = rep.c if letter[1] == 1 else rep.c.conj().T
        else:
            m = rep.p[letter[1]] if letter[2] == 1 else rep.p[letter[1]].conj().T
        out = out @ m
    return out


@dataclass
class RepReport:
    unitary: float
    order_k: float
    anticommute: float
    relators: float
    j_minus_one: float
    trace_p_alpha: float

    def worst(self) -> float:
        return max(self.unitary, self.order_k, self.anticommute, self.relators, self.j_minus_one, self.trace_p_alpha)


def verify_representation(rep: GwbRep) -> RepReport:
    eye = np.eye(rep.dim)
    unitary = max(np.abs(s.conj().T @ s - eye).max() for s in rep.sigma)
    order_k = max(np.abs(np.linalg.matrix_power(s, rep.k) - eye).max() for s in rep.sigma)
    anti = 0.0
    for i, si in enumerate(rep.sigma):
        for j, sj in enumerate(rep.sigma):
            if i != j:
                anti = max(anti, np.abs(si.conj().T @ sj + sj.conj().T @ si).max())
    rel = max(np.abs(rep_of_word(rep, w) - eye).max() for _, w in rep.structure.relators())
    jm = np.abs(rep.J + eye).max()
    g = rep.structure
    _, _, basis_a = g.basis_states()
    tr = 0.0
    pshift = {}
    for a in np.unique(basis_a[basis_a != 0]):
        m = np.eye(rep.dim, dtype=complex)
        for pos in range(g.nbits):
            if (int(a) >> pos) & 1:
                i, t = divmod(pos, g.k)
                if (i, t) not in pshift:
                    pshift[(i, t)] = rep_of_word(rep, g.p_shift_word(i, t))
                m = m @ pshift[(i, t)]
        tr = max(tr, abs(np.trace(m)) / rep.dim)
    return RepReport(float(unitary), float(order_k), float(anti), float(rel), float(jm), float(tr))


def vector_to_unitary(rep: GwbRep, x) -> np.ndarray:
    """U_x = sum_i x_i sigma_i for a real unit vector x of length n."""
    x = np.asarray(x, dtype=float)
    if x.shape != (rep.n,):
        raise ValueError(f"vector must have length {rep.n}")
    if abs(np.linalg.norm(x) - 1.0) > 1e-10:
        raise ValueError("vector must have unit norm")
    return np.tensordot(x, np.array(rep.sigma), axes=1)


def strong_isometry_check(rep: GwbRep, x, y) -> np.ndarray:
    """|tr((U_x^s)^* U_y^s) - <x, y>^s| for s = 0..k-1 (normalised trace)."""
    ux = vector_to_unitary(rep, x)
    uy = vector_to_unitary(rep, y)
    lam = float(np.dot(x, y))
    out = np.zeros(rep.k)
    px = np.eye(rep.dim, dtype=complex)
    py = np.eye(rep.dim, dtype=complex)
    for s in range(rep.k):
        out[s] = abs(np.trace(px.conj().T @ py) / rep.dim - lam**s)
        px = px @ ux
        py = py @ uy
    return out
