"""Fixtures and independent dense oracles shared by the test modules.

The oracles deliberately avoid the library's implicit A/B forms: they build
n x n projectors and solve small problems with plain numpy.
"""

import numpy as np

from seer import GroupSpec, Metric, Weights, make_metric, standardize

# Columns of the 4x4 Hadamard matrix minus the constant one: centred,
# unit variance and mutually orthogonal under uniform weights.
_H = np.array([[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]], dtype=float)
X1, X2, Z = _H[:, 1], _H[:, 2], _H[:, 3]
W4 = Weights.uniform(4)
EPS = 0.01


def e1():
    """x1, x2, z orthonormal under uniform weights on 4 observations."""
    return X1.copy(), X2.copy(), Z.copy(), W4


def e2():
    """Y = [x1, z + eps x2, z + eps x2] on the E1 basis."""
    Y = np.column_stack([X1, Z + EPS * X2, Z + EPS * X2])
    return X1.copy(), X2.copy(), Z.copy(), Y, W4


def projector(Z, p):
    """Dense P-orthogonal projector Z (Z'PZ)^-1 Z'P."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.shape[1] == 0:
        return np.zeros((len(p), len(p)))
    P = np.diag(p)
    return Z @ np.linalg.solve(Z.T @ P @ Z, Z.T @ P)


def c5_dense(Y, N, F_list, p):
    Y = np.asarray(Y, dtype=float)
    Y = Y[:, None] if Y.ndim == 1 else Y
    P = np.diag(p)
    Pi = projector(np.column_stack(F_list), p)
    strength = np.prod([F @ P @ F for F in F_list])
    return float(np.trace(np.atleast_2d(N) @ Y.T @ P @ Pi @ Y)) * strength


def conditioned_dense(F, Y, N, Z, p):
    """||F||^2 tr(N Y'P Pi_<Z,F> Y): the quantity one A0 run maximizes."""
    Y = np.asarray(Y, dtype=float)
    Y = Y[:, None] if Y.ndim == 1 else Y
    P = np.diag(p)
    basis = F[:, None] if Z is None or np.size(Z) == 0 else np.column_stack([Z, F])
    Pi = projector(basis, p)
    return float(F @ P @ F) * float(np.trace(np.atleast_2d(N) @ Y.T @ P @ Pi @ Y))


def dense_AB(Y, N, Z, p):
    """A and B built literally from their defining formulas."""
    Y = np.asarray(Y, dtype=float)
    Y = Y[:, None] if Y.ndim == 1 else Y
    n = len(p)
    P = np.diag(p)
    Pz = projector(Z if Z is not None else np.zeros((n, 0)), p)
    B = P @ (np.eye(n) - Pz)
    YNY = Y @ np.atleast_2d(N) @ Y.T
    trace = float(np.trace(YNY @ P @ Pz))
    A = trace * B + (np.eye(n) - Pz).T @ P @ YNY @ P @ (np.eye(n) - Pz)
    return A, B, P


def grid_max(X, M, Y, N, Z, p, points=3600):
    """Brute-force maximum of the conditioned criterion on the unit M-circle (J=2)."""
    Linv_t = np.linalg.inv(np.linalg.cholesky(M).T)
    best = -np.inf
    for t in np.linspace(0, 2 * np.pi, points, endpoint=False):
        u = Linv_t @ np.array([np.cos(t), np.sin(t)])
        best = max(best, conditioned_dense(X @ M @ u, Y, N, Z, p))
    return best


def cca_top(X, Y, p):
    """Top canonical correlation from whitened cross-covariance SVD."""
    P = np.diag(p)
    Sxx, Syy, Sxy = X.T @ P @ X, Y.T @ P @ Y, X.T @ P @ Y

    def inv_sqrt(S):
        vals, vecs = np.linalg.eigh(S)
        return vecs @ np.diag(vals ** -0.5) @ vecs.T

    return np.linalg.svd(inv_sqrt(Sxx) @ Sxy @ inv_sqrt(Syy), compute_uv=False)[0]


def tucker_top(X, Y, p):
    """Largest singular value of X'PY (inter-battery covariance)."""
    return np.linalg.svd(X.T @ np.diag(p) @ Y, compute_uv=False)[0]


def corr(a, b, p):
    a = a - p @ a
    b = b - p @ b
    return float((a * p) @ b / np.sqrt(((a * a) @ p) * ((b * b) @ p)))


def random_weights(rng, n):
    return Weights.normalized(rng.uniform(0.5, 1.5, n))


def random_group(rng, name, n, J, w, metric="identity", components=1):
    ds = standardize(rng.normal(size=(n, J)) @ rng.normal(size=(J, J)), w,
                     column_names=[f"{name}_{j}" for j in range(J)])
    return GroupSpec(name, ds, make_metric(metric, ds), components)


def random_pd(rng, J):
    A = rng.normal(size=(J, J))
    return Metric(A @ A.T + 0.5 * np.eye(J))


def a0_instance(seed):
    """J=2 group, two-column conditioning block, one standardized y."""
    rng = np.random.default_rng(seed)
    n = 30
    w = random_weights(rng, n)
    X = standardize(rng.normal(size=(n, 2)) @ rng.normal(size=(2, 2)), w).X
    Zb = standardize(rng.normal(size=(n, 2)), w).X
    y = standardize(X @ rng.normal(size=2) + Zb @ rng.normal(size=2) + rng.normal(size=n), w).X[:, 0]
    return w, X, Zb, y, random_pd(rng, 2)


def r3_instance(seed):
    """n=50, three groups of four variables, K=3 dependent variables."""
    rng = np.random.default_rng(1000 + seed)
    n = 50
    w = Weights.uniform(n)
    groups = [random_group(rng, f"X{r}", n, 4, w) for r in range(3)]
    latent = np.column_stack([g.X[:, 0] for g in groups])
    Y = standardize(latent @ rng.normal(size=(3, 3)) + rng.normal(size=(n, 3)), w).X
    return w, groups, Y


def planted_noise_instance(seed=0, n=80):
    """Group 'noise' carries only structure unrelated to Y.

    Y is built from the first two directions of group 'signal'; 'noise' has
    a strong first component and independent columns.
    """
    rng = np.random.default_rng(seed)
    w = Weights.uniform(n)
    base = rng.normal(size=(n, 3))
    signal_raw = np.column_stack([3 * base[:, 0], 2 * base[:, 1], base[:, 2]])
    signal = standardize(signal_raw @ np.eye(3), w, column_names=["s1", "s2", "s3"])
    noise = standardize(rng.normal(size=(n, 3)) * [3, 2, 1], w, column_names=["n1", "n2", "n3"])
    Y = standardize(np.column_stack([signal.X[:, 0] + 0.3 * signal.X[:, 1],
                                     signal.X[:, 1] - 0.2 * signal.X[:, 0]])
                    + 0.05 * rng.normal(size=(n, 2)), w, column_names=["y1", "y2"])
    return w, signal, noise, Y
