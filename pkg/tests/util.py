"""Instance factories shared by the test modules."""

import numpy as np

from treepert import ProblemInstance


def random_hermitian(rng, dim, norm=1.0, complex_v=True):
    g = rng.normal(size=(dim, dim))
    if complex_v:
        g = g + 1j * rng.normal(size=(dim, dim))
    v = (g + g.conj().T) / 2
    return v * (norm / np.linalg.norm(v, 2))


def random_instance(seed, dim=None, n_model=None, vnorm=0.9, lam=1.0, complex_v=True):
    """Random well-gapped instance: model energies in [0, 0.3], rest in
    [0.8, 2.2], so the cross gap is at least 0.5."""
    rng = np.random.default_rng(seed)
    if dim is None:
        dim = int(rng.integers(3, 9))
    if n_model is None:
        n_model = int(rng.integers(1, dim))
    model = tuple(sorted(rng.choice(dim, size=n_model, replace=False).tolist()))
    h0 = np.empty(dim)
    inside = set(model)
    for i in range(dim):
        h0[i] = rng.uniform(0.0, 0.3) if i in inside else rng.uniform(0.8, 2.2)
    v = random_hermitian(rng, dim, norm=vnorm, complex_v=complex_v)
    return ProblemInstance(h0=h0, v=v, model=model, lam=lam)


def degenerate_instance(seed, dim=4, n_model=2, vnorm=0.3, lam=1.0, complex_v=True):
    """Model energies all exactly zero, rest spread over [1, 2]."""
    rng = np.random.default_rng(seed)
    h0 = np.zeros(dim)
    h0[n_model:] = np.linspace(1.0, 2.0, dim - n_model)
    v = random_hermitian(rng, dim, norm=vnorm, complex_v=complex_v)
    return ProblemInstance(h0=h0, v=v, model=tuple(range(n_model)), lam=lam)
