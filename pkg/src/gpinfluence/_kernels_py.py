"""Pure numpy fallback for the compiled kernel core."""
import numpy as np

NAME = "python"


def _hermite(n, u):
    if n == 1:
        return u
    if n == 2:
        return u * u - 1.0
    if n == 3:
        return u * u * u - 3.0 * u
    u2 = u * u
    return u2 * u2 - 6.0 * u2 + 3.0


def cross_matrix(A, B, ls, l2, na, nb):
    """Mixed partial derivative of the SE kernel for every pair of rows.

    ``na``/``nb`` hold the per-dimension derivative counts on the first and
    second argument. Differentiating in ``b`` flips the sign of a lag
    derivative, and the n-th lag derivative of ``exp(-u^2/2)`` with
    ``u = r/ls`` is ``(-1)^n He_n(u) exp(-u^2/2) / ls^n``.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    ls = np.asarray(ls, dtype=float)
    order = np.asarray(na) + np.asarray(nb)
    U = (A[:, None, :] - B[None, :, :]) * (1.0 / ls)
    e = np.exp(-0.5 * np.sum(U * U, axis=-1))
    num = np.full(e.shape, -1.0 if int(np.sum(nb)) % 2 else 1.0)
    den = 1.0
    for d, nd in enumerate(order):
        den_d = 1.0
        for _ in range(nd):
            den_d *= float(ls[d])
        den *= den_d
        if nd == 0:
            continue
        h = _hermite(int(nd), U[:, :, d])
        num = -num * h if nd % 2 else num * h
    return ((l2 * num) / den) * e
