"""Flag curvature and nonpositivity analysis of the Jacobi operator.

The flag curvature of the plane spanned by the flagpole v and a
transverse w is

    K(v, w) = g_v(R(w), w) / (g_v(v,v) g_v(w,w) - g_v(v,w)^2),

with R the Jacobi operator along the geodesic through (x, v).  Because
g_v R is symmetric, R is diagonalizable in the g_v inner product; the
flagpole carries eigenvalue 0 and the transverse eigenvalues decide
nonpositivity.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .errors import InputError, ValidationError
from .metrics import as_model
from .spray import fundamental_tensor, fundamental_tensor_batch, jacobi_operator_batch

__all__ = [
    "FlagData",
    "SpectrumData",
    "NonpositivityReport",
    "flag_data",
    "flag_curvature",
    "jacobi_spectrum",
    "nonpositivity_scan",
]

# eigenvalues up to NONPOS_TOL * F(x, v)^2 count as nonpositive
NONPOS_TOL = 1e-7

# relative asymmetry of g_v R beyond this signals a curvature bug
SYMMETRY_TOL = 1e-6


@dataclass
class FlagData:
    """A flag (point, flagpole, transverse vector) with its curvature data."""

    x: np.ndarray
    v: np.ndarray
    w: np.ndarray
    g: np.ndarray
    R: np.ndarray
    area_sq: float  # |v ^ w|^2_g
    K: float


def flag_data(spec, x, v, w) -> FlagData:
    """Assemble the fundamental tensor, Jacobi operator, and K for a flag."""
    model = as_model(spec)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    ft = fundamental_tensor(model, x, v)
    g = ft.g
    area_sq = float((v @ g @ v) * (w @ g @ w) - (v @ g @ w) ** 2)
    if area_sq <= 1e-12 * float((v @ g @ v) * (w @ g @ w)):
        raise InputError("flag requires linearly independent v, w")
    R = jacobi_operator_batch(model, x, v)
    K = float(w @ g @ (R @ w)) / area_sq
    return FlagData(x, v, w, g, R, area_sq, K)


def flag_curvature(spec, x, v, w) -> float:
    """K(v, w) as a plain number; see :func:`flag_data` for the pieces."""
    return flag_data(spec, x, v, w).K


@dataclass
class SpectrumData:
    """g_v-symmetrized eigenvalues of the Jacobi operator at one (x, v).

    ``eigenvalues`` lists the flagpole 0 followed by the sorted
    transverse eigenvalues (flagpole direction projected out);
    ``asymmetry`` is the relative symmetry defect of g_v R.
    """

    x: np.ndarray
    v: np.ndarray
    F2: float
    eigenvalues: np.ndarray
    nonpositive: bool
    asymmetry: float


def _transverse_basis(g, v):
    row = (g @ v)[None, :]
    _, _, vt = np.linalg.svd(row)
    return vt[1:].T


def jacobi_spectrum(spec, x, v, tol=NONPOS_TOL) -> SpectrumData:
    """Eigenvalues of R in the g_v inner product, with verdict.

    Solves the symmetric generalized problem on the g_v-orthogonal
    complement of the flagpole (which itself carries eigenvalue 0) and
    declares nonpositivity when every eigenvalue is <= tol * F^2.
    """
    model = as_model(spec)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    ft = fundamental_tensor(model, x, v)
    g = ft.g
    R = jacobi_operator_batch(model, x, v)
    S = g @ R
    scale = max(float(np.max(np.abs(S))), 1e-30)
    asymmetry = float(np.max(np.abs(S - S.T))) / scale
    if asymmetry > SYMMETRY_TOL:
        raise ValidationError(
            f"g_v R asymmetric (relative defect {asymmetry:.3e}); "
            "curvature computation inconsistent",
            witnesses=[(x.tolist(), v.tolist())],
        )
    S = 0.5 * (S + S.T)
    B = _transverse_basis(g, v)
    lam = eigh(B.T @ S @ B, B.T @ g @ B, eigvals_only=True)
    F2 = float(v @ g @ v)
    eigs = np.concatenate([[0.0], np.sort(lam)])
    nonpositive = bool(np.max(lam, initial=0.0) <= tol * F2)
    return SpectrumData(x, v, F2, eigs, nonpositive, asymmetry)


@dataclass
class NonpositivityReport:
    """Aggregated jacobi_spectrum verdicts over random (x, v) samples."""

    sample_count: int
    seed: int
    tol: float
    nonpositive: bool
    max_eigenvalue: float
    witness_x: np.ndarray
    witness_v: np.ndarray
    X: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)

    def to_dict(self):
        return {
            "sample_count": self.sample_count,
            "seed": self.seed,
            "tol": self.tol,
            "nonpositive": self.nonpositive,
            "max_eigenvalue": self.max_eigenvalue,
            "witness": {
                "x": self.witness_x.tolist(),
                "v": self.witness_v.tolist(),
            },
        }

    def to_csv(self, path):
        n = self.X.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(
                [f"x{i + 1}" for i in range(n)]
                + [f"v{i + 1}" for i in range(n)]
                + [f"lambda{i + 1}" for i in range(n)]
                + ["nonpositive"]
            )
            for m in range(self.sample_count):
                ok = np.max(self.eigenvalues[m]) <= self.tol
                row = [f"{val:.17g}" for val in (*self.X[m], *self.V[m])]
                row += [f"{val:.17g}" for val in self.eigenvalues[m]]
                row.append(str(int(ok)))
                w.writerow(row)


def nonpositivity_scan(
    spec, region=None, sample_count=1000, seed=0, tol=NONPOS_TOL
) -> NonpositivityReport:
    """Sample flags on the F-unit sphere and aggregate spectra.

    K is 0-homogeneous in v, so v is normalized to F(x, v) = 1 and the
    verdict threshold is simply ``tol``.  Returns the worst eigenvalue
    and its witness.
    """
    model = as_model(spec)
    n = model.n
    if region is None:
        region = model.spec.distance_region()
    rng = np.random.default_rng(seed)
    X = np.empty((0, n))
    while len(X) < sample_count:
        cand = region.sample(rng, sample_count)
        cand = cand[model.point_valid_batch(cand)]
        X = np.concatenate([X, cand])
    X = X[:sample_count]
    V = rng.standard_normal((sample_count, n))
    V /= model.F_batch(X, V)[:, None]

    g = fundamental_tensor_batch(model, X, V)
    R = jacobi_operator_batch(model, X, V)
    S = g @ R
    S = 0.5 * (S + np.swapaxes(S, -1, -2))
    # batched generalized symmetric eigenproblem via Cholesky whitening
    L = np.linalg.cholesky(g)
    T = np.linalg.solve(L, S)
    A = np.swapaxes(np.linalg.solve(L, np.swapaxes(T, -1, -2)), -1, -2)
    lam = np.linalg.eigvalsh(A)
    worst = int(np.argmax(lam[:, -1]))
    return NonpositivityReport(
        sample_count=sample_count,
        seed=seed,
        tol=tol,
        nonpositive=bool(lam[:, -1].max() <= tol),
        max_eigenvalue=float(lam[:, -1].max()),
        witness_x=X[worst],
        witness_v=V[worst],
        X=X,
        V=V,
        eigenvalues=lam,
    )
