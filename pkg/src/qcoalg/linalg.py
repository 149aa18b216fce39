"""
Dense complex linear algebra used by the quantum modules.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  Every function
here returns a fresh, read-only array so values can be shared freely between
threads and systems.  The ``as_unitary``, ``as_effect`` and ``as_density``
validators play the role of the UnitaryOp / Effect / DensityMatrix types:
they check the invariant once, at the boundary, and hand back the matrix.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
import numpy.typing as npt

from .errors import ShapeError, ValidationError

DEFAULT_TOL = 1e-9
RANK_RTOL = 1e-8

CMatrix = npt.NDArray[np.complex128]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def as_cmatrix(data, *, name: str = "matrix") -> CMatrix:
    """Coerce ``data`` to a read-only 2-d complex matrix with finite entries."""
    try:
        m = np.array(data, dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name}: not a numeric matrix ({exc})") from None
    if m.ndim != 2:
        raise ShapeError(f"{name}: expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name}: entries must be finite")
    return _frozen(m)


def _require_square(m: np.ndarray, name: str = "matrix") -> int:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"{name}: expected a square matrix, got shape {m.shape}")
    return m.shape[0]


def dagger(m) -> CMatrix:
    """Conjugate transpose."""
    m = np.asarray(m, dtype=np.complex128)
    return _frozen(m.conj().T.copy())


def mat_mul(a, b) -> CMatrix:
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return _frozen(a @ b)


def trace(m) -> complex:
    m = np.asarray(m, dtype=np.complex128)
    _require_square(m)
    return complex(np.trace(m))


def hermitian_deviation(m) -> float:
    m = np.asarray(m, dtype=np.complex128)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m - m.conj().T)))


def unitary_deviation(m) -> float:
    """``max |U^dagger U - I|`` entrywise."""
    m = np.asarray(m, dtype=np.complex128)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


def eig_hermitian(m, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, CMatrix]:
    """
    Spectrum and eigenbasis of a Hermitian matrix.

    Returns ``(w, v)`` with real eigenvalues ``w`` in ascending order and the
    orthonormal eigenvectors as the columns of ``v``, so that
    ``v @ diag(w) @ v^dagger`` reconstructs ``m``.

    Raises
    ------
    ValidationError
        If ``m`` is not Hermitian within ``tol``.
    """
    m = np.asarray(m, dtype=np.complex128)
    _require_square(m)
    dev = hermitian_deviation(m)
    if dev > tol:
        raise ValidationError(f"matrix is not Hermitian: deviation {dev:.3g} > {tol:g}")
    # Symmetrize so that eigh sees exactly Hermitian input.
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return _frozen(w), _frozen(v)


def as_unitary(data, tol: float = DEFAULT_TOL, *, name: str = "unitary") -> CMatrix:
    m = as_cmatrix(data, name=name)
    _require_square(m, name)
    dev = unitary_deviation(m)
    if dev > tol:
        raise ValidationError(f"{name}: unitarity deviation {dev:.3g} exceeds {tol:g}")
    return m


def as_effect(data, tol: float = DEFAULT_TOL, *, name: str = "effect") -> CMatrix:
    """Validate ``0 <= e <= I``: Hermitian with spectrum in ``[-tol, 1 + tol]``."""
    m = as_cmatrix(data, name=name)
    _require_square(m, name)
    dev = hermitian_deviation(m)
    if dev > tol:
        raise ValidationError(f"{name}: hermiticity deviation {dev:.3g} exceeds {tol:g}")
    if m.shape[0]:
        w, _ = eig_hermitian(m, tol)
        if w[0] < -tol or w[-1] > 1 + tol:
            raise ValidationError(
                f"{name}: eigenvalues must lie in [0, 1]; found range [{w[0]:.3g}, {w[-1]:.3g}]"
            )
    return m


def as_density(data, tol: float = DEFAULT_TOL, *, name: str = "density matrix") -> CMatrix:
    """Validate a density matrix: Hermitian, positive semidefinite, unit trace."""
    m = as_cmatrix(data, name=name)
    _require_square(m, name)
    dev = hermitian_deviation(m)
    if dev > tol:
        raise ValidationError(f"{name}: hermiticity deviation {dev:.3g} exceeds {tol:g}")
    w, _ = eig_hermitian(m, tol)
    if w.size == 0 or w[0] < -tol:
        lo = w[0] if w.size else float("nan")
        raise ValidationError(f"{name}: not positive semidefinite, smallest eigenvalue {lo:.3g}")
    tr = np.trace(m)
    if abs(tr - 1) > tol:
        raise ValidationError(f"{name}: trace {tr.real:.12g} differs from 1 by more than {tol:g}")
    return m


def conjugate_by(rho, u) -> CMatrix:
    """Return ``u @ rho @ u^dagger``."""
    rho = np.asarray(rho, dtype=np.complex128)
    u = np.asarray(u, dtype=np.complex128)
    _require_square(rho, "rho")
    _require_square(u, "u")
    if rho.shape != u.shape:
        raise ShapeError(f"dimension mismatch: state {rho.shape[0]}, operator {u.shape[0]}")
    return _frozen(u @ rho @ u.conj().T)


def real_rank(vectors: Sequence[Sequence[float]] | np.ndarray, tol: float = RANK_RTOL) -> int:
    """Numerical rank: singular values above ``tol * sigma_max``."""
    if len(vectors) == 0:
        return 0
    a = np.asarray(vectors, dtype=float)
    if a.ndim != 2:
        raise ShapeError("vectors must all have the same length")
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


# JSON representation: {"rows", "cols", "entries": [[re, im], ...]} row-major.


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=np.complex128)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in m.ravel()],
    }


def matrix_from_json(obj, *, name: str = "matrix") -> CMatrix:
    try:
        rows, cols, entries = int(obj["rows"]), int(obj["cols"]), obj["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{name}: expected an object with rows/cols/entries ({exc})") from None
    if len(entries) != rows * cols:
        raise ShapeError(f"{name}: {len(entries)} entries for a {rows}x{cols} matrix")
    try:
        flat = [complex(float(e[0]), float(e[1])) for e in entries]
    except (TypeError, ValueError, IndexError):
        raise ValidationError(f"{name}: entries must be [re, im] pairs") from None
    return as_cmatrix(np.array(flat, dtype=np.complex128).reshape(rows, cols), name=name)


def vector_from_json(entries: Iterable, *, name: str = "vector") -> np.ndarray:
    try:
        v = np.array([complex(float(e[0]), float(e[1])) for e in entries], dtype=np.complex128)
    except (TypeError, ValueError, IndexError):
        raise ValidationError(f"{name}: entries must be [re, im] pairs") from None
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name}: entries must be finite")
    return _frozen(v)
