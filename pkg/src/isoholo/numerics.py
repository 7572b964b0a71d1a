"""Dense complex linear algebra for small matrices (dimension up to ~16).

Matrices and state vectors are plain ``numpy`` complex arrays.  ``expm`` and
``unitary_polar_factor`` also accept stacks of shape ``(..., n, n)`` so that the
holonomy and dynamics integrators can process a whole path at once.
"""

import numpy as np

from .errors import DimensionMismatch, NoConvergence, NotHermitian

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

JACOBI_MAX_SWEEPS = 100
POLAR_MAX_ITER = 50
POLAR_THRESHOLD = 1e-14
TAYLOR_TERM_FLOOR = 1e-16
# scaled-norm target for scaling and squaring
EXPM_SCALED_NORM = 0.5


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def max_abs(a):
    """Entrywise max-norm; 0.0 for empty input."""
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def unitarity_defect(u):
    u = np.asarray(u, dtype=complex)
    eye = np.eye(u.shape[-1])
    return max_abs(dagger(u) @ u - eye)


def anti_hermiticity_defect(a):
    a = np.asarray(a, dtype=complex)
    return max_abs(a + dagger(a))


def _as_square(m, name="matrix"):
    a = np.array(m, dtype=complex)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    return a


def _lead_index(vec, rel=1e-12):
    """First index whose magnitude is within `rel` of the largest one."""
    mags = np.abs(vec)
    return int(np.argmax(mags >= mags.max() * (1 - rel) - rel))


def hermitian_eigensystem(m, tol=1e-12):
    """Eigen-decompose a Hermitian matrix with cyclic complex Jacobi rotations.

    Parameters
    ----------
    m : array_like, shape (n, n)
        Hermitian matrix; ``max|m - m^H| <= 1e-10`` is required.
    tol : float
        Accuracy target for ``m @ v = v @ diag(w)``.

    Returns
    -------
    w : ndarray, shape (n,)
        Real eigenvalues in ascending order.
    v : ndarray, shape (n, n)
        Unitary matrix whose columns are the eigenvectors.  Within a degenerate
        cluster the columns are ordered by the index of their largest-magnitude
        component, and every column is phased so that this component is real
        and positive.
    """
    a = _as_square(m)
    if a.ndim != 2:
        raise DimensionMismatch("hermitian_eigensystem takes a single matrix")
    if max_abs(a - a.conj().T) > 1e-10:
        raise NotHermitian(f"matrix deviates from Hermitian by {max_abs(a - a.conj().T):.3e}")
    n = a.shape[0]
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), np.finfo(float).tiny)
    eps = np.finfo(float).eps
    target = min(1e-2 * tol, eps) * scale

    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-2 * eps * (abs(a[p, p]) + abs(a[q, q])) or mag <= 1e-300:
                    a[p, q] = a[q, p] = 0.0
                    continue
                phase = apq / mag
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, idx] = v[:, idx] @ rot
    else:
        raise NoConvergence(f"Jacobi iteration exceeded {JACOBI_MAX_SWEEPS} sweeps")

    w = np.real(np.diag(a)).copy()
    order = list(np.argsort(w, kind="stable"))
    cluster_tol = 1e-10 * max(1.0, scale)
    sorted_order = []
    i = 0
    while i < n:
        j = i + 1
        while j < n and w[order[j]] - w[order[j - 1]] <= cluster_tol:
            j += 1
        cluster = order[i:j]
        cluster.sort(key=lambda col: _lead_index(v[:, col]))
        sorted_order.extend(cluster)
        i = j
    w = w[sorted_order]
    v = v[:, sorted_order]
    for col in range(n):
        lead = v[_lead_index(v[:, col]), col]
        v[:, col] *= np.conj(lead) / abs(lead)
    return w, v


def expm(m):
    """Matrix exponential by scaling and squaring with a Taylor series.

    Accepts a single square matrix or a stack ``(..., n, n)``.  Each matrix is
    scaled by ``2**-s`` until its 1-norm is at most 0.5, the series is summed
    until the last term drops below 1e-16 in norm, and the result is squared
    back ``s`` times.
    """
    a = _as_square(m)
    shape = a.shape
    n = shape[-1]
    a = a.reshape(-1, n, n)
    norms = np.abs(a).sum(axis=-2).max(axis=-1)
    s = np.zeros(len(a), dtype=int)
    big = norms > EXPM_SCALED_NORM
    s[big] = np.ceil(np.log2(norms[big] / EXPM_SCALED_NORM)).astype(int)
    x = a / (2.0 ** s)[:, None, None]

    result = np.broadcast_to(np.eye(n, dtype=complex), x.shape).copy()
    term = result.copy()
    k = 0
    while True:
        k += 1
        term = term @ x / k
        result += term
        if len(term) == 0 or np.abs(term).sum(axis=-2).max() < TAYLOR_TERM_FLOOR:
            break

    for level in range(int(s.max()) if len(s) else 0):
        sel = s > level
        result[sel] = result[sel] @ result[sel]
    return result.reshape(shape)


def unitary_polar_factor(m, tol=POLAR_THRESHOLD):
    """Unitary factor of the polar decomposition, i.e. the closest unitary.

    Uses the Newton iteration ``X <- (X + X^{-H}) / 2``.  Works on a single
    matrix or a stack.  Raises :class:`NoConvergence` when the iteration stalls,
    which happens for (near-)singular input.
    """
    a = _as_square(m)
    shape = a.shape
    n = shape[-1]
    x = a.reshape(-1, n, n)
    for _ in range(POLAR_MAX_ITER):
        try:
            inv = np.linalg.inv(x)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence("polar factor of a singular matrix") from exc
        nxt = 0.5 * (x + dagger(inv))
        if not np.all(np.isfinite(nxt)):
            raise NoConvergence("polar iteration produced non-finite entries")
        diff = np.linalg.norm(nxt - x, axis=(-2, -1))
        ref = np.maximum(1.0, np.linalg.norm(x, axis=(-2, -1)))
        x = nxt
        if np.all(diff <= tol * ref):
            return x.reshape(shape)
    raise NoConvergence(
        f"polar iteration did not converge in {POLAR_MAX_ITER} steps "
        "(input close to singular)"
    )


def normalize(v):
    v = np.asarray(v, dtype=complex)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValueError("cannot normalize the zero vector")
    return v / nrm
