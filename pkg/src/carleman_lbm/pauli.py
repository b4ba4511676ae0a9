"""Tensor-Pauli expansion of real square matrices and truncation distances."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ResourceLimitError
from .sparse import SparseMatrix

MAX_QUBITS = 12
DROP_THRESHOLD = 1e-14
LETTERS = "IXYZ"

_PAULI = np.array([
    [[1, 0], [0, 1]],
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)


@dataclass(frozen=True)
class PauliTerm:
    word: str
    coefficient: complex

    @property
    def magnitude(self) -> float:
        return abs(self.coefficient)


@dataclass(frozen=True)
class ExpansionReport:
    n_qubits: int
    terms: list[PauliTerm]
    distances: np.ndarray  # d(n) for n = 0 .. len(terms)
    frobenius_norm: float
    dropped_mass: float


def _as_dense(M) -> np.ndarray:
    if isinstance(M, SparseMatrix):
        return M.to_dense()
    return np.asarray(M)


def pad_to_power_of_two(M) -> tuple[np.ndarray, int]:
    M = _as_dense(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"matrix must be square, got shape {M.shape}")
    dim = M.shape[0]
    n = max(1, int(np.ceil(np.log2(dim)))) if dim > 1 else 1
    if n > MAX_QUBITS:
        raise ResourceLimitError(f"expansion over {n} qubits needs 4^{n} coefficients; cap is {MAX_QUBITS} qubits")
    padded = np.zeros((2 ** n, 2 ** n), dtype=M.dtype)
    padded[:dim, :dim] = M
    return padded, n


def pauli_coefficients(padded: np.ndarray, n: int) -> np.ndarray:
    """All 4^n coefficients 2^-n tr(P M), indexed by the base-4 word digits.

    Contracts one qubit at a time: each (row bit, column bit) pair is traded
    for a Pauli letter, so the cost is O(n 4^n) instead of O(16^n).
    """
    # letter[P, i, j] = P[j, i] / 2 so that sum_ij letter * M[i, j] = tr(P M) / 2
    letter = _PAULI.transpose(0, 2, 1) / 2.0
    t = padded.astype(complex).reshape([2] * (2 * n))
    # axes: rows i_0..i_{n-1}, cols j_0..j_{n-1}; output letters accumulate at the front
    for k in range(n):
        # after k steps the tensor is (P_0..P_{k-1}, i_k..i_{n-1}, j_k..j_{n-1})
        rest = n - k
        t = np.tensordot(letter, t, axes=([1, 2], [k, k + rest]))
        # tensordot puts the new letter axis first; move it behind the earlier letters
        t = np.moveaxis(t, 0, k)
    return t.reshape(-1)


def _word(index: int, n: int) -> str:
    digits = np.base_repr(index, 4).zfill(n)
    return "".join(LETTERS[int(d)] for d in digits)


def pauli_expand(M, threshold: float = DROP_THRESHOLD) -> list[PauliTerm]:
    """Pauli terms with |s| >= threshold, in the canonical report order."""
    padded, n = pad_to_power_of_two(M)
    coeffs = pauli_coefficients(padded, n)
    return _sorted_terms(coeffs, n, threshold)[0]


def _sorted_terms(coeffs: np.ndarray, n: int, threshold: float):
    mags = np.abs(coeffs)
    keep = np.flatnonzero(mags >= threshold)
    words = [_word(int(i), n) for i in keep]
    # round so that roundoff-level differences fall back on the word order
    key = [(-round(float(mags[i]), 13), w) for i, w in zip(keep, words)]
    order = sorted(range(len(keep)), key=key.__getitem__)
    terms = [PauliTerm(words[j], complex(coeffs[keep[j]])) for j in order]
    dropped = float(np.sum(mags[mags < threshold] ** 2))
    return terms, dropped


def reassemble(terms, n: int) -> np.ndarray:
    """Explicit sum of s_i sigma_i (Kronecker products); a slow oracle."""
    out = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for term in terms:
        mat = np.ones((1, 1), dtype=complex)
        for ch in term.word:
            mat = np.kron(mat, _PAULI[LETTERS.index(ch)])
        out += term.coefficient * mat
    return out


def truncation_curve(M, threshold: float = DROP_THRESHOLD) -> ExpansionReport:
    """d(n) = ||M - sum_{i<=n} s_i sigma_i||_F / ||M||_F for every prefix.

    Pauli words are orthogonal with ||sigma||_F^2 = 2^n, so the residual norm
    is the tail sum of 2^n |s_i|^2 (dropped terms included).  This makes the
    sequence non-increasing by construction.
    """
    padded, n = pad_to_power_of_two(M)
    norm = float(np.linalg.norm(padded))
    if norm == 0.0:
        raise ValueError("distance is undefined for the zero matrix")
    coeffs = pauli_coefficients(padded, n)
    terms, dropped = _sorted_terms(coeffs, n, threshold)
    weights = np.array([t.magnitude ** 2 for t in terms])
    tail = np.concatenate([np.cumsum(weights[::-1])[::-1], [0.0]]) + dropped
    # normalise by the coefficient mass so that d(0) is exactly 1
    distances = np.sqrt(tail / tail[0])
    return ExpansionReport(n, terms, distances, norm, dropped)


def parseval_gap(M) -> float:
    """Relative gap between ||M||_F^2 and 2^n sum |s|^2 over all coefficients."""
    padded, n = pad_to_power_of_two(M)
    coeffs = pauli_coefficients(padded, n)
    lhs = float(np.linalg.norm(padded) ** 2)
    rhs = 2.0 ** n * float(np.sum(np.abs(coeffs) ** 2))
    return abs(lhs - rhs) / lhs


def y_count(word: str) -> int:
    return word.count("Y")


def write_expansion_csv(report: ExpansionReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "word", "re", "im", "magnitude", "distance_after_rank"])
        for rank, term in enumerate(report.terms, start=1):
            writer.writerow([rank, term.word, format(term.coefficient.real, ".17g"),
                             format(term.coefficient.imag, ".17g"), format(term.magnitude, ".17g"),
                             format(report.distances[rank], ".17g")])

