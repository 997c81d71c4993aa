import numpy as np


def hermitian_matrix(gen, m):
    z = gen.normal(size=(m, m)) + 1j * gen.normal(size=(m, m))
    return (z + z.conj().T) / 2.0


def skew_matrix(gen, m):
    z = gen.normal(size=(m, m)) + 1j * gen.normal(size=(m, m))
    return (z - z.T) / 2.0


def max_abs(a, b=None):
    a = np.asarray(a)
    return float(np.abs(a if b is None else a - np.asarray(b)).max())
