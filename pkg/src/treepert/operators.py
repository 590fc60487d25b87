"""Problem instances and the operator building blocks of the series.

The Hamiltonian is H = H0 + lam*V with H0 diagonal in the working basis (its
eigenbasis), so an instance is fully described by the diagonal of H0, a
Hermitian perturbation matrix V, the set of basis indices spanning the model
space, and the coupling lam.  P projects onto the model space, Q = 1 - P onto
its complement, and the cross gap min |e_j - e_i| (j in the model, i outside)
must be strictly positive; within-model or within-complement degeneracies are
allowed.

Resolvent-type operators, all embedded as dense matrices that vanish outside
their advertised block:

    G0P(z) = P (H0 - z)^(-1) P        diagonal on the model space
    GP(z)  = (P H P - z P)^(-1)       inverse taken inside the model space
    S0(z)  = (z Q - Q H0 Q)^(-1)      diagonal on the complement
    S(z)   = (z Q - Q H Q)^(-1)       inverse taken inside the complement
    R(e0)  = Q (e0 - H0)^(-1) Q

Inverses within 1e-12 (relative to the block's norm) of a singularity are
rejected with :class:`~treepert.errors.NearSingularError`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import NearSingularError, NotDegenerateError

HERMITICITY_TOL = 1e-10
NEAR_SINGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class ProblemInstance:
    """Spectral data of H0, the perturbation, the model space and the coupling.

    ``h0`` is the diagonal of H0 (real), ``v`` a Hermitian matrix, ``model``
    the 0-based basis indices spanning the model space and ``lam`` the factor
    multiplying V everywhere.  Validation happens on construction: v must be
    Hermitian to 1e-10 and the model/complement gap strictly positive.
    Instances are immutable; their arrays are defensive read-only copies.
    """

    h0: np.ndarray
    v: np.ndarray
    model: tuple[int, ...]
    lam: float = 1.0

    def __post_init__(self):
        h0 = np.array(self.h0, dtype=float).reshape(-1)
        v = np.array(self.v, dtype=complex)
        model = tuple(int(i) for i in self.model)
        dim = h0.size
        if v.shape != (dim, dim):
            raise ValueError(f"v must be {dim}x{dim}, got {v.shape}")
        dev = np.abs(v - v.conj().T).max() if dim else 0.0
        if dev > HERMITICITY_TOL * max(1.0, np.abs(v).max()):
            raise ValueError(f"v is not Hermitian (deviation {dev:.3e})")
        if not model:
            raise ValueError("model space must be non-empty")
        if len(set(model)) != len(model):
            raise ValueError("model indices must be distinct")
        if any(i < 0 or i >= dim for i in model):
            raise ValueError("model indices out of range")
        if len(model) >= dim:
            raise ValueError("model space must leave a non-empty complement")
        rest = [i for i in range(dim) if i not in set(model)]
        gap = min(abs(h0[j] - h0[i]) for j in model for i in rest)
        if gap <= 0.0:
            raise ValueError(
                "model space is not separated from the rest of the spectrum (gap 0)"
            )
        h0.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "model", model)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def dim(self) -> int:
        return self.h0.size

    @property
    def model_indices(self) -> np.ndarray:
        return np.array(self.model, dtype=int)

    @property
    def rest_indices(self) -> np.ndarray:
        inside = set(self.model)
        return np.array([i for i in range(self.dim) if i not in inside], dtype=int)

    @property
    def gap(self) -> float:
        """min |e_j - e_i| over model j and complement i."""
        em = self.h0[self.model_indices]
        eq = self.h0[self.rest_indices]
        return float(np.abs(em[:, None] - eq[None, :]).min())

    @property
    def w(self) -> np.ndarray:
        """The scaled perturbation lam*V."""
        return self.lam * self.v

    @property
    def h(self) -> np.ndarray:
        """The full Hamiltonian H0 + lam*V as a dense matrix."""
        return np.diag(self.h0).astype(complex) + self.lam * self.v

    def scaled(self, lam: float) -> "ProblemInstance":
        """The same problem at a different coupling."""
        return replace(self, lam=float(lam))


@dataclass(frozen=True)
class OperatorBlock:
    """A dense matrix tagged with the subspaces it maps between.

    Tags are "full", "P" (model space) or "Q" (complement).  A chi-shaped
    block maps P to Q: only rows in the complement and columns in the model
    space may be nonzero.
    """

    matrix: np.ndarray
    domain: str = "full"
    codomain: str = "full"


def as_matrix(x) -> np.ndarray:
    """Accept an OperatorBlock or a bare array."""
    return x.matrix if isinstance(x, OperatorBlock) else np.asarray(x)


def reference_instance() -> ProblemInstance:
    """The 3-level reference problem used throughout the docs and tests.

    h0 = diag(0, 0.1, 1.0) with model space {0, 1} (gap 0.9) and a real
    symmetric perturbation; lam = 1.
    """
    v = np.array(
        [[0.0, 0.05, 0.2], [0.05, 0.0, 0.3], [0.2, 0.3, 0.0]], dtype=complex
    )
    return ProblemInstance(h0=np.array([0.0, 0.1, 1.0]), v=v, model=(0, 1), lam=1.0)


def projectors(inst: ProblemInstance) -> tuple[OperatorBlock, OperatorBlock]:
    """The model-space projector P and its complement Q = 1 - P."""
    p = np.zeros((inst.dim, inst.dim), dtype=complex)
    p[inst.model_indices, inst.model_indices] = 1.0
    q = np.eye(inst.dim, dtype=complex) - p
    return OperatorBlock(p, "full", "P"), OperatorBlock(q, "full", "Q")


def p_matrix(inst: ProblemInstance) -> np.ndarray:
    p = np.zeros((inst.dim, inst.dim), dtype=complex)
    p[inst.model_indices, inst.model_indices] = 1.0
    return p


def q_matrix(inst: ProblemInstance) -> np.ndarray:
    return np.eye(inst.dim, dtype=complex) - p_matrix(inst)


def chi_divide(inst: ProblemInstance, num: np.ndarray) -> np.ndarray:
    """Divide a chi-shaped numerator entrywise by e_j - e_i (j model, i not).

    This is the kernel shared by the recursive series evaluator and the
    solution of the commutator equation [X, H0] = C.
    """
    m = inst.model_indices
    q = inst.rest_indices
    out = np.zeros((inst.dim, inst.dim), dtype=complex)
    den = inst.h0[m][None, :] - inst.h0[q][:, None]
    out[np.ix_(q, m)] = num[np.ix_(q, m)] / den
    return out


def require_chi_shaped(inst: ProblemInstance, mat: np.ndarray, what: str = "block"):
    """Raise unless the matrix vanishes outside complement rows x model columns."""
    m = inst.model_indices
    q = inst.rest_indices
    keep = np.zeros_like(mat)
    keep[np.ix_(q, m)] = mat[np.ix_(q, m)]
    leak = np.abs(mat - keep).max()
    if leak > 1e-12 * max(1.0, np.abs(mat).max()):
        raise ValueError(f"{what} is not chi-shaped (leak {leak:.3e})")


def sylvester_solve(inst: ProblemInstance, c) -> OperatorBlock:
    """Solve [X, H0] = C for a chi-shaped right-hand side.

    The solution is entrywise, X_ij = C_ij / (e_j - e_i) for i outside and j
    inside the model space, and it is the unique chi-shaped solution because
    the cross gap is positive.
    """
    cm = as_matrix(c)
    require_chi_shaped(inst, cm, "sylvester right-hand side")
    return OperatorBlock(chi_divide(inst, cm), "P", "Q")


def _check_diag_margin(kind, z, dens):
    margin = float(np.abs(dens).min())
    scale = float(max(np.abs(dens).max(), 1e-300))
    if margin < NEAR_SINGULAR_RTOL * max(scale, 1.0):
        raise NearSingularError(kind, z, margin)


def _restricted_inverse(kind, z, a: np.ndarray) -> np.ndarray:
    svals = np.linalg.svd(a, compute_uv=False)
    if svals[-1] < NEAR_SINGULAR_RTOL * max(svals[0], 1.0):
        raise NearSingularError(kind, z, float(svals[-1]))
    return np.linalg.inv(a)


def resolvent(inst: ProblemInstance, kind: str, z: float) -> OperatorBlock:
    """One of the five resolvent-type operators, embedded in the full space.

    ``kind`` is one of "g0p", "gp", "s0", "s", "r" (case-insensitive); for
    "r" the parameter z is the reference energy e0.  Each operator acts as
    the named inverse on its subspace and as zero on the rest.
    """
    kind = kind.lower()
    dim = inst.dim
    m = inst.model_indices
    q = inst.rest_indices
    out = np.zeros((dim, dim), dtype=complex)
    if kind == "g0p":
        dens = inst.h0[m] - z
        _check_diag_margin(kind, z, dens)
        out[m, m] = 1.0 / dens
        return OperatorBlock(out, "P", "P")
    if kind == "s0":
        dens = z - inst.h0[q]
        _check_diag_margin(kind, z, dens)
        out[q, q] = 1.0 / dens
        return OperatorBlock(out, "Q", "Q")
    if kind == "r":
        dens = z - inst.h0[q]
        _check_diag_margin(kind, z, dens)
        out[q, q] = 1.0 / dens
        return OperatorBlock(out, "Q", "Q")
    if kind == "gp":
        a = inst.h[np.ix_(m, m)] - z * np.eye(len(m))
        out[np.ix_(m, m)] = _restricted_inverse(kind, z, a)
        return OperatorBlock(out, "P", "P")
    if kind == "s":
        a = z * np.eye(len(q)) - inst.h[np.ix_(q, q)]
        out[np.ix_(q, q)] = _restricted_inverse(kind, z, a)
        return OperatorBlock(out, "Q", "Q")
    raise ValueError(f"unknown resolvent kind {kind!r}")


@dataclass(frozen=True)
class ModelEigensystem:
    """Eigendecomposition of P H P, embedded in the full space.

    ``energies`` ascending; ``states`` is a dim x N matrix of orthonormal
    eigenvectors supported on the model rows only.
    """

    energies: np.ndarray
    states: np.ndarray

    @property
    def size(self) -> int:
        return self.energies.size

    def projector(self, j: int) -> np.ndarray:
        s = self.states[:, j]
        return np.outer(s, s.conj())


def model_eigensystem(inst: ProblemInstance) -> ModelEigensystem:
    """Diagonalize the model block of H = H0 + lam*V."""
    m = inst.model_indices
    block = inst.h[np.ix_(m, m)]
    vals, vecs = np.linalg.eigh(block)
    states = np.zeros((inst.dim, len(m)), dtype=complex)
    states[m, :] = vecs
    vals = vals.copy()
    vals.setflags(write=False)
    states.setflags(write=False)
    return ModelEigensystem(energies=vals, states=states)


def degenerate_model_energy(inst: ProblemInstance, tol: float = 1e-12) -> float:
    """The common model energy e0; raises unless the model space is degenerate."""
    em = inst.h0[inst.model_indices]
    spread = float(em.max() - em.min())
    if spread > tol * max(1.0, float(np.abs(em).max())):
        raise NotDegenerateError(
            f"model energies are not degenerate (spread {spread:.3e})"
        )
    return float(em[0])


def qhq_php_gap(inst: ProblemInstance) -> float:
    """min distance between the spectra of Q H Q and P H P."""
    q = inst.rest_indices
    qe = np.linalg.eigvalsh(inst.h[np.ix_(q, q)])
    pe = model_eigensystem(inst).energies
    return float(np.abs(pe[:, None] - qe[None, :]).min())


def instance_from_json(data: dict) -> ProblemInstance:
    """Build an instance from the documented JSON schema (1-based model)."""
    try:
        dim = int(data["dim"])
        h0 = np.array(data["h0"], dtype=float)
        v = np.array(data["v_re"], dtype=float).astype(complex)
        if "v_im" in data and data["v_im"] is not None:
            v = v + 1j * np.array(data["v_im"], dtype=float)
        model_1b = [int(i) for i in data["model"]]
        lam = float(data.get("lambda", 1.0))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed instance JSON: {exc}") from exc
    if h0.size != dim:
        raise ValueError(f"h0 has {h0.size} entries but dim is {dim}")
    if any(i < 1 or i > dim for i in model_1b):
        raise ValueError("model indices must be 1-based and within 1..dim")
    return ProblemInstance(h0=h0, v=v, model=tuple(i - 1 for i in model_1b), lam=lam)


def instance_to_json(inst: ProblemInstance) -> dict:
    return {
        "dim": inst.dim,
        "h0": inst.h0.tolist(),
        "v_re": inst.v.real.tolist(),
        "v_im": inst.v.imag.tolist(),
        "model": [i + 1 for i in inst.model],
        "lambda": inst.lam,
    }


def load_instance(path) -> ProblemInstance:
    """Read and validate an instance file."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return instance_from_json(data)
