"""Dictionary learning and sparse coding over vectorized map patches.

Patches are flattened column-major into length n*n vectors.  A dictionary
of unit-norm atoms is trained once per reconstruction run with K-SVD
(greedy orthogonal-matching-pursuit coding alternated with rank-1 SVD atom
updates); at fill time the observed rows of a patch are coded with an
l1-penalized least squares solved by coordinate descent.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .grid import RadioMap, RegionState


@dataclass
class SparseCode:
    coefficients: np.ndarray
    objective: float
    nnz: int


@dataclass
class TrainingMeta:
    sample_count: int
    iterations: int
    final_error: float
    error_history: list[float]


@dataclass
class Dictionary:
    """Unit-norm atoms as columns of an (n*n, K) matrix."""

    atoms: np.ndarray
    patch_size: int
    training_meta: TrainingMeta | None = None

    @property
    def natoms(self) -> int:
        return self.atoms.shape[1]


def sample_training_patches(radio_map: RadioMap, state: RegionState,
                            count: int, patch_size: int,
                            rng: np.random.Generator) -> np.ndarray:
    """Draw fully-observed windows uniformly with replacement, vectorized column-major.

    Returns an (n*n, count) matrix.  Only windows whose every cell belongs to
    the originally observed region qualify.
    """
    positions = fully_observed_positions(state.original_observed, patch_size)
    if positions.shape[0] == 0:
        raise ValueError(
            f"no fully observed {patch_size}x{patch_size} window exists; "
            "reduce the patch size")
    picks = rng.integers(0, positions.shape[0], size=count)
    n = patch_size
    out = np.empty((n * n, count))
    for k, idx in enumerate(picks):
        r, c = positions[idx]
        out[:, k] = radio_map.values[r:r + n, c:c + n].flatten(order="F")
    return out


def fully_observed_positions(source_mask: np.ndarray, patch_size: int) -> np.ndarray:
    """Top-left corners of windows fully inside the source mask (row-major order)."""
    ok = window_all_true(source_mask, patch_size)
    return np.argwhere(ok)


def window_all_true(mask: np.ndarray, n: int) -> np.ndarray:
    """Boolean grid over top-left corners: does the n-by-n window lie in the mask?"""
    rows, cols = mask.shape
    if rows < n or cols < n:
        return np.zeros((max(rows - n + 1, 0), max(cols - n + 1, 0)), dtype=bool)
    # integral image; exact in int64
    acc = np.zeros((rows + 1, cols + 1), dtype=np.int64)
    np.cumsum(np.cumsum(mask, axis=0), axis=1, out=acc[1:, 1:])
    sums = (acc[n:, n:] - acc[:-n, n:] - acc[n:, :-n] + acc[:-n, :-n])
    return sums == n * n


def train_dictionary(samples: np.ndarray, natoms: int, iters: int,
                     rng: np.random.Generator) -> Dictionary:
    """K-SVD: alternate greedy coding and per-atom rank-1 SVD updates.

    The coding stage keeps a sample's previous coefficients whenever the
    greedy pursuit would increase its residual, which makes the recorded
    per-iteration training error non-increasing.  Dead atoms are reseeded
    from the worst-reconstructed samples.
    """
    X = np.asarray(samples, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] == 0:
        raise ValueError("training samples must be a non-empty (dim, count) matrix")
    dim, count = X.shape
    if natoms < 1 or iters < 1:
        raise ValueError("natoms and iters must be >= 1")
    norms = np.linalg.norm(X, axis=0)
    if not (norms > 1e-12).any():
        raise ValueError("all training samples are zero")

    atoms = _init_atoms(X, natoms, rng)
    target_nnz = max(1, min(math.ceil(natoms / 50), dim, natoms))
    codes = np.zeros((natoms, count))
    history: list[float] = []

    for _ in range(iters):
        # coding stage, guarded so the error cannot go up
        for s in range(count):
            beta, err = _omp(atoms, X[:, s], target_nnz)
            prev_err = float(np.sum((X[:, s] - atoms @ codes[:, s]) ** 2))
            if err <= prev_err:
                codes[:, s] = beta
        # atom update stage
        for k in range(natoms):
            used = np.nonzero(np.abs(codes[k]) > 1e-12)[0]
            if used.size == 0:
                continue
            residual = X[:, used] - atoms @ codes[:, used]
            residual += np.outer(atoms[:, k], codes[k, used])
            u, svals, vt = np.linalg.svd(residual, full_matrices=False)
            atom = u[:, 0]
            if atom[np.argmax(np.abs(atom))] < 0:  # deterministic sign
                atom = -atom
                vt = -vt
            atoms[:, k] = atom
            codes[k, used] = svals[0] * vt[0]
        _reseed_dead_atoms(atoms, codes, X, rng)
        atoms /= np.linalg.norm(atoms, axis=0)
        err = float(np.mean(np.sum((X - atoms @ codes) ** 2, axis=0)))
        history.append(err)

    meta = TrainingMeta(sample_count=count, iterations=iters,
                        final_error=history[-1], error_history=history)
    n = int(round(math.sqrt(dim)))
    return Dictionary(atoms=atoms, patch_size=n if n * n == dim else 0,
                      training_meta=meta)


def _init_atoms(X, natoms, rng):
    nonzero = np.nonzero(np.linalg.norm(X, axis=0) > 1e-12)[0]
    distinct = np.unique(X[:, nonzero], axis=1)
    kdist = distinct.shape[1]
    if kdist >= natoms:
        chosen = distinct[:, rng.choice(kdist, size=natoms, replace=False)]
    else:
        extra = distinct[:, rng.integers(0, kdist, size=natoms - kdist)]
        chosen = np.hstack([distinct, extra])
    return chosen / np.linalg.norm(chosen, axis=0)


def _omp(atoms: np.ndarray, x: np.ndarray, target_nnz: int) -> tuple[np.ndarray, float]:
    """Greedy pursuit: returns (coefficients, squared residual norm)."""
    natoms = atoms.shape[1]
    beta = np.zeros(natoms)
    resid = x.copy()
    support: list[int] = []
    for _ in range(target_nnz):
        corr = atoms.T @ resid
        corr[support] = 0.0
        j = int(np.argmax(np.abs(corr)))
        if abs(corr[j]) < 1e-12:
            break
        support.append(j)
        sub = atoms[:, support]
        coef, *_ = np.linalg.lstsq(sub, x, rcond=None)
        resid = x - sub @ coef
        if float(resid @ resid) <= 1e-24:
            break
    if support:
        beta[support] = coef
    return beta, float(resid @ resid)


def _reseed_dead_atoms(atoms, codes, X, rng):
    dead = np.nonzero(np.abs(codes).max(axis=1) <= 1e-12)[0]
    if dead.size == 0:
        return
    errs = np.sum((X - atoms @ codes) ** 2, axis=0)
    worst = np.argsort(-errs)
    pos = 0
    for k in dead:
        while pos < worst.size:
            cand = X[:, worst[pos]]
            pos += 1
            norm = np.linalg.norm(cand)
            if norm > 1e-12:
                atoms[:, k] = cand / norm
                break


def sparse_code(x_observed: np.ndarray, atoms_observed: np.ndarray, lam: float,
                max_iters: int = 200, tol: float = 1e-6) -> SparseCode:
    """Coordinate-descent lasso on the observed rows of a patch vector.

    Minimizes ||x - A b||_2^2 + lam * ||b||_1 by cyclic soft-thresholding;
    stops when the largest coefficient change in a sweep drops below ``tol``.
    """
    x = np.ascontiguousarray(x_observed, dtype=np.float64)
    A = np.ascontiguousarray(atoms_observed, dtype=np.float64)
    if x.ndim != 1 or A.ndim != 2 or A.shape[0] != x.shape[0]:
        raise ValueError("observed vector and atom rows must align")
    if x.shape[0] < 1:
        raise ValueError("sparse coding needs at least one observed row")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    beta = _kernels.lasso_cd(A, x, float(lam), int(max_iters), float(tol))
    resid = x - A @ beta
    objective = float(resid @ resid) + lam * float(np.abs(beta).sum())
    nnz = int(np.count_nonzero(np.abs(beta) > 1e-12))
    return SparseCode(coefficients=beta, objective=objective, nnz=nnz)


def save_dictionary(path, dictionary: Dictionary) -> None:
    """Atoms as a CSV grid preceded by one 'natoms,patch_size' header row."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{dictionary.natoms},{dictionary.patch_size}\n")
        for row in dictionary.atoms:
            fh.write(",".join(format(float(v), ".17g") for v in row))
            fh.write("\n")


def load_dictionary(path) -> Dictionary:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        if len(header) != 2:
            raise ValueError(f"{path}: malformed dictionary header")
        natoms, patch_size = int(header[0]), int(header[1])
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            tokens = line.split(",")
            if len(tokens) != natoms:
                raise ValueError(f"{path}: line {lineno}: expected {natoms} values")
            rows.append([float(t) for t in tokens])
    atoms = np.array(rows)
    if atoms.shape[0] != patch_size * patch_size:
        raise ValueError(f"{path}: atom length {atoms.shape[0]} != patch_size^2")
    return Dictionary(atoms=atoms, patch_size=patch_size)
