"""
Conversions between transfer functions and state space.

tf_to_ss gives the controllable canonical form; transfer matrices are
realized entry by entry, block-assembled and reduced to a minimal
realization so that cancelled modes do not survive as hidden poles.
"""
from __future__ import annotations
import logging
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.signal

from dmkit.exceptions import DimensionError, ImproperModelError
from dmkit.lti.polynomial import Polynomial
from dmkit.lti.systems import StateSpace, TransferFunction

log = logging.getLogger(__name__)

MINREAL_TOL = 1e-9


def tf_to_ss(tf: TransferFunction) -> StateSpace:
    if not tf.is_proper():
        raise ImproperModelError(
            f"numerator degree {tf.num.degree} exceeds denominator degree {tf.den.degree}")
    tf = tf.normalized()
    if tf.is_zero() or tf.den.degree == 0:
        return StateSpace.static([[tf.feedthrough()]])
    A, B, C, D = scipy.signal.tf2ss(tf.num.array, tf.den.array)
    return StateSpace(A, B, C, D)


def ss_to_tf(ss: StateSpace, output: int = 0, input: int = 0,
             rtol: float = 1e-12) -> TransferFunction:
    """Scalar transfer function from *input* to *output*."""
    if not (0 <= output < ss.n_outputs and 0 <= input < ss.n_inputs):
        raise DimensionError(f"entry ({output}, {input}) outside a {ss.shape} system")
    if ss.n_states == 0:
        return TransferFunction.constant(ss.D[output, input])
    num, den = scipy.signal.ss2tf(ss.A, ss.B, ss.C, ss.D, input=input)
    row = Polynomial.of(np.atleast_2d(num)[output]).trimmed(rtol)
    return TransferFunction(row, Polynomial.of(den))


def tfm_to_ss(entries: Sequence[Sequence[TransferFunction]],
              tol: float = MINREAL_TOL) -> StateSpace:
    """Minimal realization of a rectangular matrix of transfer functions."""
    rows = [list(r) for r in entries]
    if not rows or not rows[0]:
        raise DimensionError("transfer matrix must be nonempty")
    m = len(rows[0])
    if any(len(r) != m for r in rows):
        raise DimensionError("transfer matrix rows differ in length")
    p = len(rows)
    parts = [[tf_to_ss(tf) for tf in r] for r in rows]
    n = sum(part.n_states for r in parts for part in r)
    A = np.zeros((n, n))
    B = np.zeros((n, m))
    C = np.zeros((p, n))
    D = np.zeros((p, m))
    k = 0
    for i, r in enumerate(parts):
        for j, part in enumerate(r):
            ni = part.n_states
            A[k:k + ni, k:k + ni] = part.A
            B[k:k + ni, j] = part.B[:, 0]
            C[i, k:k + ni] = part.C[0, :]
            D[i, j] = part.D[0, 0]
            k += ni
    full = StateSpace(A, B, C, D)
    reduced = minimal_realization(full, tol=tol)
    log.debug("transfer matrix %dx%d realized with %d states (minimal %d)",
              p, m, full.n_states, reduced.n_states)
    return reduced


# ---------------------------------------------------------------------------
# Minimal realization
# ---------------------------------------------------------------------------

def _reachable_basis(A: np.ndarray, B: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis of the reachable subspace of (A, B)."""
    n = A.shape[0]
    scale = max(1.0, np.linalg.norm(A, 2), np.linalg.norm(B, 2))
    basis = np.zeros((n, 0))
    block = B
    for _ in range(n):
        for _ in range(2):
            block = block - basis @ (basis.T @ block)
        if block.size == 0:
            break
        u, s, _ = scipy.linalg.svd(block, full_matrices=False)
        keep = s > tol * scale
        if not np.any(keep):
            break
        new = u[:, keep]
        basis = np.hstack([basis, new])
        if basis.shape[1] >= n:
            break
        block = A @ new
    return basis


def minimal_realization(ss: StateSpace, tol: float = MINREAL_TOL) -> StateSpace:
    """Remove unreachable and unobservable modes."""
    if ss.n_states == 0:
        return ss
    V = _reachable_basis(ss.A, ss.B, tol)
    A, B, C = V.T @ ss.A @ V, V.T @ ss.B, ss.C @ V
    if A.shape[0] == 0:
        return StateSpace.static(ss.D)
    W = _reachable_basis(A.T, C.T, tol)
    A, B, C = W.T @ A @ W, W.T @ B, C @ W
    if A.shape[0] == 0:
        return StateSpace.static(ss.D)
    return StateSpace(A, B, C, ss.D)
