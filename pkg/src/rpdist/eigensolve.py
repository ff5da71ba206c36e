"""Dense real symmetric eigensolver.

The built-in solver is Householder reduction to tridiagonal form followed by
the implicit-shift QL algorithm with eigenvector accumulation (the EISPACK
tred2/tql2 pair), compiled with numba.  ``backend="lapack"`` routes the same
call through LAPACK's divide-and-conquer driver for speed; both give the same
:class:`EigenDecomposition` contract, including the sign convention.
"""
from dataclasses import dataclass

import numba
import numpy as np

from .ensemble import SymmetricMatrix
from .errors import ConvergenceError, InputError

BACKENDS = ("householder-ql", "lapack")


@dataclass
class EigenDecomposition:
    """Eigenvalues in ascending order; column ``k`` of ``eigenvectors`` is the
    normalised eigenvector for ``eigenvalues[k]``."""

    order: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def residuals(self, matrix):
        h = _as_dense(matrix)
        return np.linalg.norm(h @ self.eigenvectors - self.eigenvectors * self.eigenvalues,
                              axis=0)

    def orthonormality_error(self):
        v = self.eigenvectors
        return np.max(np.abs(v.T @ v - np.eye(v.shape[1])))

    def check(self, matrix, residual_tol=1e-10, ortho_tol=1e-11):
        """Verify the decomposition against ``matrix``; raise on failure."""
        h = _as_dense(matrix)
        if np.any(np.diff(self.eigenvalues) < 0):
            raise ConvergenceError("eigenvalues are not sorted")
        bound = residual_tol * np.linalg.norm(h)
        worst = int(np.argmax(self.residuals(h)))
        if self.residuals(h)[worst] > bound:
            raise ConvergenceError(f"residual too large for eigenpair {worst}", index=worst)
        if self.orthonormality_error() > ortho_tol:
            raise ConvergenceError("eigenvectors are not orthonormal")


def _as_dense(matrix):
    if isinstance(matrix, SymmetricMatrix):
        return matrix.to_dense()
    h = np.asarray(matrix, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise InputError("matrix must be square")
    return h


def _validated(matrix):
    h = _as_dense(matrix)
    if not np.all(np.isfinite(h)):
        raise InputError("matrix has non-finite entries")
    if not np.array_equal(h, h.T):
        raise InputError("matrix is not symmetric")
    return h


@numba.njit(cache=True)
def _tred2(v, d, e):
    # v: Fortran-ordered copy of the matrix; overwritten by the transform
    n = v.shape[0]
    for j in range(n):
        d[j] = v[n - 1, j]
    for i in range(n - 1, 0, -1):
        scale = 0.0
        h = 0.0
        for k in range(i):
            scale += abs(d[k])
        if scale == 0.0:
            e[i] = d[i - 1]
            for j in range(i):
                d[j] = v[i - 1, j]
                v[i, j] = 0.0
                v[j, i] = 0.0
        else:
            for k in range(i):
                d[k] /= scale
                h += d[k] * d[k]
            f = d[i - 1]
            g = np.sqrt(h)
            if f > 0:
                g = -g
            e[i] = scale * g
            h = h - f * g
            d[i - 1] = f - g
            for j in range(i):
                e[j] = 0.0
            for j in range(i):
                f = d[j]
                v[j, i] = f
                g = e[j] + v[j, j] * f
                for k in range(j + 1, i):
                    g += v[k, j] * d[k]
                    e[k] += v[k, j] * f
                e[j] = g
            f = 0.0
            for j in range(i):
                e[j] /= h
                f += e[j] * d[j]
            hh = f / (h + h)
            for j in range(i):
                e[j] -= hh * d[j]
            for j in range(i):
                f = d[j]
                g = e[j]
                for k in range(j, i):
                    v[k, j] -= f * e[k] + g * d[k]
                d[j] = v[i - 1, j]
                v[i, j] = 0.0
        d[i] = h

    for i in range(n - 1):
        v[n - 1, i] = v[i, i]
        v[i, i] = 1.0
        h = d[i + 1]
        if h != 0.0:
            for k in range(i + 1):
                d[k] = v[k, i + 1] / h
            for j in range(i + 1):
                g = 0.0
                for k in range(i + 1):
                    g += v[k, i + 1] * v[k, j]
                for k in range(i + 1):
                    v[k, j] -= g * d[k]
        for k in range(i + 1):
            v[k, i + 1] = 0.0
    for j in range(n):
        d[j] = v[n - 1, j]
        v[n - 1, j] = 0.0
    v[n - 1, n - 1] = 1.0
    e[0] = 0.0


@numba.njit(cache=True)
def _tql2(v, d, e, max_sweeps):
    # returns -1 on success, otherwise the index that failed to converge
    n = v.shape[0]
    for i in range(1, n):
        e[i - 1] = e[i]
    e[n - 1] = 0.0
    f = 0.0
    tst1 = 0.0
    eps = 2.0**-52
    sweeps = 0
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n:
            if abs(e[m]) <= eps * tst1:
                break
            m += 1
        if m > l:
            while True:
                sweeps += 1
                if sweeps > max_sweeps:
                    return l
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = np.hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                for i in range(l + 2, n):
                    d[i] -= h
                f += h

                p = d[m]
                c = 1.0
                c2 = c
                c3 = c
                el1 = e[l + 1]
                s = 0.0
                s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = np.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    for k in range(n):
                        h = v[k, i + 1]
                        v[k, i + 1] = s * v[k, i] + c * h
                        v[k, i] = c * v[k, i] - s * h
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if abs(e[l]) <= eps * tst1:
                    break
        d[l] = d[l] + f
        e[l] = 0.0
    return -1


def tridiagonalize(matrix):
    """Householder reduction ``Q^T H Q = T``.

    Returns ``(diagonal, offdiagonal, Q)`` where ``offdiagonal`` has length
    N-1 and ``Q`` is orthogonal.
    """
    h = _validated(matrix)
    n = h.shape[0]
    v = np.array(h, order="F")
    d = np.empty(n)
    e = np.empty(n)
    _tred2(v, d, e)
    return d, e[1:].copy(), v


def _normalise_signs(vectors):
    # largest-magnitude component of each eigenvector made positive
    lead = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[lead, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def eigh(matrix, backend="householder-ql"):
    """Full eigendecomposition of a real symmetric matrix."""
    h = _validated(matrix)
    n = h.shape[0]
    if backend == "householder-ql":
        v = np.array(h, order="F")
        d = np.empty(n)
        e = np.empty(n)
        _tred2(v, d, e)
        stuck = _tql2(v, d, e, 50 * n)
        if stuck >= 0:
            raise ConvergenceError(f"QL iteration did not converge at index {stuck}",
                                   index=int(stuck))
        values, vectors = d, v
    elif backend == "lapack":
        values, vectors = np.linalg.eigh(h)
    else:
        raise InputError(f"unknown eigensolver backend {backend!r}; choose from {BACKENDS}")
    order = np.argsort(values, kind="stable")
    values = np.ascontiguousarray(values[order])
    vectors = _normalise_signs(np.ascontiguousarray(vectors[:, order]))
    return EigenDecomposition(n, values, vectors)
