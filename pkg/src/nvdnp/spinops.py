"""Dense spin-operator algebra for the small Hilbert spaces used here (dim <= 6)."""

import numpy as np

HERMITIAN_RTOL = 1e-12


def spin_operators(multiplicity):
    """Return ``(Sx, Sy, Sz)`` for spin-1/2 (``multiplicity=2``) or spin-1 (``3``).

    Basis order is m = s, s-1, ..., -s.
    """
    if multiplicity not in (2, 3):
        raise ValueError(f"unsupported multiplicity {multiplicity!r}; expected 2 or 3")
    s = (multiplicity - 1) / 2
    m = s - np.arange(multiplicity)
    sz = np.diag(m).astype(complex)
    # <m+1|S+|m> = sqrt(s(s+1) - m(m+1))
    sp = np.zeros((multiplicity, multiplicity), dtype=complex)
    for k in range(1, multiplicity):
        sp[k - 1, k] = np.sqrt(s * (s + 1) - m[k] * (m[k] + 1))
    sm = sp.conj().T
    sx = (sp + sm) / 2
    sy = (sp - sm) / 2j
    return sx, sy, sz


def kron(a, b):
    return np.kron(np.asarray(a), np.asarray(b))


def hermiticity_defect(h):
    h = np.asarray(h)
    return float(np.max(np.abs(h - h.conj().T), initial=0.0))


def is_hermitian(h, rtol=HERMITIAN_RTOL):
    h = np.asarray(h)
    scale = float(np.max(np.abs(h), initial=0.0))
    return hermiticity_defect(h) <= rtol * max(scale, 1.0)


def propagator(h, dt):
    """Time-evolution operator ``exp(-i 2 pi H dt)`` for H in MHz and dt in us.

    Uses the spectral decomposition of the Hermitian input, which is exact up
    to rounding for the small matrices this package deals with.
    """
    h = np.asarray(h)
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    if not is_hermitian(h):
        raise ValueError("Hamiltonian is not Hermitian")
    w, v = np.linalg.eigh(h)
    phases = np.exp(-2j * np.pi * w * dt)
    return (v * phases) @ v.conj().T


def propagators(hs, dt):
    """Batched ``propagator`` over a stack of Hamiltonians with shape (n, d, d).

    Hermiticity is not re-checked here; callers build the stack from already
    validated terms.
    """
    w, v = np.linalg.eigh(hs)
    phases = np.exp(-2j * np.pi * w * dt)
    return np.einsum("nij,nj,nkj->nik", v, phases, v.conj())


def unitarity_defect(u):
    """Frobenius norm of ``U^dagger U - I``."""
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {u.shape}")
    d = u.conj().T @ u - np.eye(u.shape[0])
    return float(np.linalg.norm(d, "fro"))


def unitarity_defects(us):
    """Per-matrix unitarity defect for a stack with shape (n, d, d)."""
    us = np.asarray(us)
    eye = np.eye(us.shape[-1])
    d = np.einsum("nji,njk->nik", us.conj(), us) - eye
    return np.sqrt(np.einsum("nij,nij->n", d.conj(), d).real)


def commutator(a, b):
    return a @ b - b @ a
