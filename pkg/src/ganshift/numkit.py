"""Deterministic numeric substrate: validated matrices, seeded randomness,
and a symmetric eigensolver.

Matrices are plain 2-D float64 numpy arrays; the helpers here validate shape,
dtype and finiteness at public boundaries. Randomness comes from a
counter-based splitmix64 generator whose integer stream is pure 64-bit
arithmetic and therefore bit-identical on every platform. Normal deviates are
produced from that stream with the Box-Muller transform; the log/cos/sin
calls are the only place where platform math libraries enter, and downstream
tolerances absorb any last-bit variation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, NumericError

__all__ = [
    "as_matrix",
    "as_vector",
    "check_finite",
    "matmul",
    "Rng",
    "standard_normal",
    "SymEig",
    "sym_eig",
]


# ---------------------------------------------------------------------------
# matrix validation helpers
# ---------------------------------------------------------------------------

def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce ``x`` to a C-contiguous 2-D float64 array, validating finiteness."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ContractViolation(f"{name}: expected a 2-D array, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name}: contains NaN or Inf entries")
    return arr


def as_vector(x, name: str = "vector") -> np.ndarray:
    """Coerce ``x`` to a 1-D float64 array, validating finiteness."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ContractViolation(f"{name}: expected a 1-D array, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name}: contains NaN or Inf entries")
    return arr


def check_finite(arr: np.ndarray, context: str) -> np.ndarray:
    """Raise NumericError if ``arr`` holds NaN/Inf; returns ``arr`` unchanged."""
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{context}: produced non-finite values")
    return arr


def matmul(a, b) -> np.ndarray:
    """Matrix product with explicit dimension checking."""
    a = as_matrix(a, "matmul lhs")
    b = as_matrix(b, "matmul rhs")
    if a.shape[1] != b.shape[0]:
        raise ContractViolation(
            f"matmul: inner dimensions differ ({a.shape[1]} vs {b.shape[0]})"
        )
    return check_finite(a @ b, "matmul")


# ---------------------------------------------------------------------------
# seeded randomness
# ---------------------------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_SPAWN_TAG = np.uint64(0xA3EC4F1D27B5916C)
_U53_SCALE = float(2.0 ** -53)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


class Rng:
    """Counter-based splitmix64 stream.

    Word ``i`` of the stream is ``mix(seed + (i + 1) * golden)``; the object
    merely tracks how many words have been consumed, so identical seeds give
    bit-identical streams regardless of the block sizes used to read them.
    Instances are single-owner mutable state: never share one across threads,
    derive children with :meth:`spawn` instead.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._key = np.uint64(self.seed)
        self._counter = 0

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, consumed={self._counter})"

    def _words(self, n: int) -> np.ndarray:
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        return _mix(self._key + idx * _GOLDEN)

    def uniform(self, n: int) -> np.ndarray:
        """``n`` i.i.d. uniforms on [0, 1) with 53-bit resolution."""
        if n < 0:
            raise ContractViolation("uniform: n must be >= 0")
        return (self._words(n) >> np.uint64(11)).astype(np.float64) * _U53_SCALE

    def normal(self, n: int) -> np.ndarray:
        """``n`` i.i.d. standard normals via the Box-Muller transform."""
        if n < 0:
            raise ContractViolation("normal: n must be >= 0")
        pairs = (n + 1) // 2
        w = self._words(2 * pairs)
        # u1 in (0, 1] so the log is finite; u2 in [0, 1)
        u1 = ((w[:pairs] >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * _U53_SCALE
        u2 = (w[pairs:] >> np.uint64(11)).astype(np.float64) * _U53_SCALE
        r = np.sqrt(-2.0 * np.log(u1))
        ang = (2.0 * np.pi) * u2
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(ang)
        out[1::2] = r * np.sin(ang)
        return out[:n]

    def integers(self, upper: int, size: int) -> np.ndarray:
        """``size`` i.i.d. integers uniform on [0, upper).

        Maps 53-bit uniforms by scaling; the resulting bias is below 2**-52
        per draw, far under any tolerance used in this package.
        """
        if upper <= 0:
            raise ContractViolation("integers: upper must be positive")
        return np.minimum((self.uniform(size) * upper).astype(np.int64), upper - 1)

    def permutation(self, n: int) -> np.ndarray:
        """A uniformly random permutation of range(n)."""
        return np.argsort(self.uniform(n), kind="stable")

    def spawn(self, index: int) -> "Rng":
        """Derive an independently seeded child generator for stream ``index``."""
        # modular 64-bit arithmetic; numpy's scalar overflow warning is noise here
        with np.errstate(over="ignore"):
            tagged = (self._key ^ _SPAWN_TAG) + _GOLDEN * np.uint64(int(index) + 1)
            return Rng(int(_mix(np.uint64(tagged))))


def standard_normal(rng: Rng, rows: int, cols: int) -> np.ndarray:
    """rows x cols matrix of i.i.d. standard normals, row-major fill order."""
    if rows < 1 or cols < 1:
        raise ContractViolation("standard_normal: rows and cols must be >= 1")
    return rng.normal(rows * cols).reshape(rows, cols)


# ---------------------------------------------------------------------------
# symmetric eigendecomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymEig:
    """Spectral decomposition A = V diag(w) V^T with w sorted descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


_JACOBI_MAX_SWEEPS = 100
_JACOBI_TOL = 1e-12


def sym_eig(a) -> SymEig:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    The input must be square and symmetric to within 1e-9 (scaled by the
    largest entry magnitude); it is symmetrized exactly before iterating.
    Sweeps stop once the off-diagonal Frobenius norm falls below 1e-12
    relative to the input norm, with a hard cap of 100 sweeps.
    """
    a = as_matrix(a, "sym_eig input")
    n, m = a.shape
    if n != m:
        raise ContractViolation(f"sym_eig: matrix must be square, got {n}x{m}")
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    asym = float(np.max(np.abs(a - a.T))) if n else 0.0
    if asym > 1e-9 * scale:
        raise ContractViolation(
            f"sym_eig: input asymmetry {asym:.3e} exceeds tolerance"
        )

    work = 0.5 * (a + a.T)
    v = np.eye(n)
    norm = float(np.linalg.norm(work))
    tol = _JACOBI_TOL * max(norm, 1e-300)
    # skip rotations on entries already negligible within a sweep
    elem_floor = tol / max(n, 1)

    sweeps = 0
    while _offdiag_norm(work) > tol:
        if sweeps >= _JACOBI_MAX_SWEEPS:
            raise NumericError(
                f"sym_eig: no convergence after {_JACOBI_MAX_SWEEPS} sweeps "
                f"(off-diagonal norm {_offdiag_norm(work):.3e})"
            )
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                if abs(apq) <= elem_floor:
                    continue
                app = work[p, p]
                aqq = work[q, q]
                tau = (aqq - app) / (2.0 * apq)
                t = np.sign(tau) if tau != 0.0 else 1.0
                t /= abs(tau) + np.sqrt(1.0 + tau * tau)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                _rotate(work, v, p, q, c, s)

    eigenvalues = np.diag(work).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    return SymEig(eigenvalues=eigenvalues[order], eigenvectors=v[:, order].copy())


def _offdiag_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def _rotate(a: np.ndarray, v: np.ndarray, p: int, q: int, c: float, s: float) -> None:
    # two-sided rotation A <- J^T A J, J rotating the (p, q) plane
    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = c * col_p - s * col_q
    a[:, q] = s * col_p + c * col_q
    row_p = a[p, :].copy()
    row_q = a[q, :].copy()
    a[p, :] = c * row_p - s * row_q
    a[q, :] = s * row_p + c * row_q
    a[p, q] = 0.0
    a[q, p] = 0.0
    vec_p = v[:, p].copy()
    vec_q = v[:, q].copy()
    v[:, p] = c * vec_p - s * vec_q
    v[:, q] = s * vec_p + c * vec_q
