"""Index combinatorics shared by the exact and lattice form calculi.

Antisymmetric components are stored on strictly increasing index tuples only.  The
metric is the diagonal Minkowski metric with signature (+, -, -, -) in coordinates
(t, x, y, z); its inverse has the same diagonal.  The volume form is dt^dx^dy^dz.

Every sign table here is *derived* (duality signs from the defining relation of the
dual map, the double-dual signs by composing the table with itself) and then checked
by brute force at import; nothing is hardcoded from a reference table.
"""

from __future__ import annotations

from itertools import combinations
from typing import Dict, List, Optional, Tuple

DIM = 4
AXES = ("t", "x", "y", "z")
METRIC_DIAG = (1, -1, -1, -1)  # also the inverse metric's diagonal
VOL_INDEX = (0, 1, 2, 3)

Idx = Tuple[int, ...]


def basis_indices(p: int) -> Tuple[Idx, ...]:
    """All strictly increasing index tuples of length p."""
    if p < 0 or p > DIM:
        return ()
    return tuple(combinations(range(DIM), p))


def perm_sign(seq) -> int:
    """Sign of the permutation sorting `seq`; 0 when an index repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def insert_index(mu: int, J: Idx) -> Optional[Tuple[int, Idx]]:
    """Sorted insertion for e_mu ^ e_J: returns (sign, sorted tuple) or None if mu in J."""
    if mu in J:
        return None
    pos = 0
    while pos < len(J) and J[pos] < mu:
        pos += 1
    return ((-1) ** pos, J[:pos] + (mu,) + J[pos:])


def remove_index(mu: int, I: Idx) -> Optional[Tuple[int, Idx]]:
    """Pull mu to the front of I: omega_I = sign * omega_{mu, I\\mu}.

    Returns (sign, I without mu) or None when mu is not in I.
    """
    if mu not in I:
        return None
    pos = I.index(mu)
    return ((-1) ** pos, I[:pos] + I[pos + 1:])


def shuffle_splits(I: Idx, p: int) -> List[Tuple[int, Idx, Idx]]:
    """All (sign, J, K) with J of length p, K the rest, and e_J ^ e_K = sign * e_I."""
    out = []
    positions = range(len(I))
    for jpos in combinations(positions, p):
        jset = set(jpos)
        J = tuple(I[i] for i in jpos)
        K = tuple(I[i] for i in positions if i not in jset)
        out.append((perm_sign(J + K), J, K))
    return out


_SPLIT_CACHE: Dict[Tuple[Idx, int], List[Tuple[int, Idx, Idx]]] = {}


def shuffle_splits_cached(I: Idx, p: int):
    key = (I, p)
    hit = _SPLIT_CACHE.get(key)
    if hit is None:
        hit = _SPLIT_CACHE[key] = shuffle_splits(I, p)
    return hit


def basis_pairing(I: Idx) -> int:
    """Inverse-metric pairing of the basis covector product with itself.

    For the diagonal metric this is the product of inverse-metric diagonal entries
    over the indices of I; cross pairings between different increasing tuples vanish.
    """
    g = 1
    for a in I:
        g *= METRIC_DIAG[a]
    return g


def _derive_dual_table() -> Dict[int, Dict[Idx, Tuple[Idx, int]]]:
    """Solve the defining relation e_I ^ (dual e_I) = <e_I, e_I> vol for each basis form.

    Because the metric is diagonal, <e_I, e_J> = 0 for I != J and the dual of e_I is
    supported on the complementary index alone, so the relation determines a single
    sign per basis form: dual(e_I) = <e_I, e_I> * perm_sign(I + I^c) * e_{I^c}.
    """
    table: Dict[int, Dict[Idx, Tuple[Idx, int]]] = {}
    for p in range(DIM + 1):
        table[p] = {}
        for I in basis_indices(p):
            Ic = tuple(a for a in range(DIM) if a not in I)
            sign = basis_pairing(I) * perm_sign(I + Ic)
            table[p][I] = (Ic, sign)
    return table


def _check_dual_table(table) -> None:
    # Brute-force check of the defining relation over the whole basis, including the
    # vanishing cross terms: e_J ^ dual(e_I) must be <e_J, e_I> vol for all J, I.
    for p in range(DIM + 1):
        for I in basis_indices(p):
            Ic, s = table[p][I]
            for J in basis_indices(p):
                wedge_sign = perm_sign(J + Ic)  # e_J ^ e_{Ic} = wedge_sign * vol (or 0)
                lhs = s * wedge_sign
                rhs = basis_pairing(I) if J == I else 0
                if lhs != rhs:
                    raise AssertionError(
                        "dual table violates defining relation at p=%d I=%r J=%r" % (p, I, J)
                    )


DUAL_TABLE = _derive_dual_table()
_check_dual_table(DUAL_TABLE)


def _derive_double_dual() -> Dict[int, int]:
    """Compose the dual table with itself: dual(dual(e_I)) = sigma_p e_I."""
    out: Dict[int, int] = {}
    for p in range(DIM + 1):
        signs = set()
        for I in basis_indices(p):
            Ic, s1 = DUAL_TABLE[p][I]
            I2, s2 = DUAL_TABLE[DIM - p][Ic]
            if I2 != I:
                raise AssertionError("double dual does not return to the same basis index")
            signs.add(s1 * s2)
        if len(signs) != 1:
            raise AssertionError("double-dual sign is not constant on degree %d" % p)
        out[p] = signs.pop()
    return out


DOUBLE_DUAL_SIGN = _derive_double_dual()
