"""Dense tensor algebra: label-based contraction, SVD, min-norm least squares.

Everything here operates on plain numpy arrays in double-precision complex.
Contraction follows an einsum-like label convention: a label shared between
two axes is summed, a label appearing once is an open (output) index.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np


class ContractionError(ValueError):
    """Raised when a contraction spec does not match the tensor shapes."""


def _label_extents(tensors, labels):
    extents: dict = {}
    counts: Counter = Counter()
    for t, labs in zip(tensors, labels):
        if t.ndim != len(labs):
            raise ContractionError(
                f"tensor of rank {t.ndim} given {len(labs)} labels"
            )
        for ext, lab in zip(t.shape, labs):
            if lab in extents and extents[lab] != ext:
                raise ContractionError(
                    f"label {lab!r} has mismatched extents "
                    f"{extents[lab]} and {ext}"
                )
            extents[lab] = ext
            counts[lab] += 1
    for lab, c in counts.items():
        if c > 2:
            raise ContractionError(f"label {lab!r} appears {c} times (max 2)")
    return extents, counts


def _trace_repeated(t, labs):
    """Sum out labels appearing twice within a single tensor."""
    labs = list(labs)
    while True:
        dup = next((l for l in labs if labs.count(l) == 2), None)
        if dup is None:
            return t, labs
        i = labs.index(dup)
        j = labs.index(dup, i + 1)
        t = np.trace(t, axis1=i, axis2=j)
        del labs[j], labs[i]


def _pair_contract(t1, l1, t2, l2):
    shared = [l for l in l1 if l in l2]
    ax1 = [l1.index(l) for l in shared]
    ax2 = [l2.index(l) for l in shared]
    out = np.tensordot(t1, t2, axes=(ax1, ax2))
    out_labs = [l for l in l1 if l not in shared] + [l for l in l2 if l not in shared]
    return out, out_labs


def contract(tensors, labels, output=None, order=None):
    """Contract tensors according to per-tensor index labels.

    Parameters
    ----------
    tensors : sequence of array_like
    labels : sequence of label sequences, one per tensor.  Labels shared by
        exactly two axes are summed; labels appearing once are open.
    output : optional ordering of the open labels for the result.
    order : optional sequence of (i, j) pairs of *original* tensor positions
        fixing the pairwise contraction order.  Defaults to a greedy
        smallest-intermediate heuristic.

    Returns
    -------
    numpy.ndarray with axes ordered as ``output`` (0-d for a full contraction).
    """
    if len(tensors) != len(labels):
        raise ContractionError("one label list required per tensor")
    if not tensors:
        raise ContractionError("no tensors given")
    tensors = [np.asarray(t) for t in tensors]
    extents, counts = _label_extents(tensors, labels)
    open_labels = []
    for labs in labels:
        for l in labs:
            if counts[l] == 1:
                open_labels.append(l)
    if output is None:
        output = open_labels
    elif Counter(output) != Counter(open_labels):
        raise ContractionError(
            f"output labels {list(output)} do not match open labels {open_labels}"
        )

    work = []
    for t, labs in zip(tensors, labels):
        t, labs = _trace_repeated(t, labs)
        work.append((t, labs))
    groups = [{i} for i in range(len(work))]  # original positions per slot

    explicit = list(order) if order is not None else None
    while len(work) > 1:
        if explicit:
            i0, j0 = explicit.pop(0)
            a = next(k for k, g in enumerate(groups) if i0 in g)
            b = next(k for k, g in enumerate(groups) if j0 in g)
            if a == b:
                raise ContractionError(f"pair ({i0}, {j0}) already merged")
        else:
            best = None
            for a in range(len(work)):
                for b in range(a + 1, len(work)):
                    shared = set(work[a][1]) & set(work[b][1])
                    size = np.prod(
                        [extents[l] for l in work[a][1] + work[b][1] if l not in shared],
                        dtype=float,
                    )
                    key = (0 if shared else 1, size)
                    if best is None or key < best[0]:
                        best = (key, a, b)
            _, a, b = best
        if a > b:
            a, b = b, a
        t2, l2 = work.pop(b)
        g2 = groups.pop(b)
        t1, l1 = work.pop(a)
        g1 = groups.pop(a)
        t, labs = _pair_contract(t1, l1, t2, l2)
        t, labs = _trace_repeated(t, labs)
        work.append((t, labs))
        groups.append(g1 | g2)

    t, labs = work[0]
    perm = [labs.index(l) for l in output]
    return np.transpose(t, perm) if perm else t


def svd(m):
    """Thin SVD of a matrix: returns (U, S, Vh) with m = U @ diag(S) @ Vh."""
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError(f"svd expects a matrix, got rank {m.ndim}")
    return np.linalg.svd(m, full_matrices=False)


@dataclass
class LstsqSolution:
    x: np.ndarray
    rank: int
    rank_deficient: bool


def min_norm_lstsq(A, b, rank_tol=1e-7):
    """Minimum-2-norm least-squares solution of A x = b via truncated SVD.

    Singular values below ``rank_tol * max(S)`` are discarded.  If all
    singular values fall below the cutoff, the zero vector is returned with
    the rank-deficiency flag set.
    """
    A = np.asarray(A)
    b = np.asarray(b)
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    if A.ndim != 2 or A.shape[0] != b.shape[0]:
        raise ValueError("A rows must match b length")
    U, S, Vh = svd(A)
    if S.size == 0 or S[0] == 0.0:
        return LstsqSolution(np.zeros(A.shape[1], dtype=complex), 0, True)
    keep = S >= rank_tol * S[0]
    r = int(np.count_nonzero(keep))
    if r == 0:
        return LstsqSolution(np.zeros(A.shape[1], dtype=complex), 0, True)
    x = Vh[:r].conj().T @ ((U[:, :r].conj().T @ b) / S[:r])
    return LstsqSolution(x, r, r < min(A.shape))


def trace_norm(m):
    """Sum of singular values of a matrix."""
    _, S, _ = svd(m)
    return float(np.sum(S))
