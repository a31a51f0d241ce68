"""Image recovery from sampled pixels under partial-DCT equality constraints.

An instance samples p known pixels of a corrupted image (the objective) and
m DCT coefficients of the uncorrupted image (the affine constraint
C x = d with orthonormal rows, so P_U(x) = x - C^T(Cx - d)). Both index
sets and the corruption pattern are drawn from one seed; data come from the
same ground truth, so the problem is consistent (optimal value zero) and
deliberately underdetermined: different initializations converge to
different solutions, each the best approximation of its own start.

The sampling matrix consists of identity rows, so the gradient Lipschitz
constant is exactly 1 and the solver runs with unit stepsize.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError
from .operators import (AffineSubspace, dct2d_map, row_sampling_map,
                        sampled_orthonormal_rows)
from .problem import AffineQuadraticProblem, best_approximation, oracle_cap
from .schedules import classical_fista
from .solvers import SolverTrace, run_apg, stop_on_gradmap

__all__ = [
    "InpaintInstance",
    "Reconstruction",
    "instance_from_json",
    "instance_to_json",
    "make_instance",
    "psnr",
    "reconstruct",
    "synthetic_image",
]

FREQ_POLICIES = ("random", "high", "low")


def synthetic_image(n: int) -> np.ndarray:
    """Deterministic n-by-n test image in [0, 1].

    Smooth diagonal gradient, two rectangles at different gray levels, and
    a sinusoidal texture band; enough structure to make reconstructions
    visually comparable without any external asset.
    """
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    img = 0.35 + 0.3 * (i + j) / (2 * n - 2)
    img[n // 8: n // 3, n // 8: n // 2] = 0.85
    img[n // 2: 3 * n // 4, n // 3: 7 * n // 8] = 0.15
    band = slice(3 * n // 4, n)
    img[band, :] = 0.5 + 0.35 * np.sin(2 * np.pi * 3.0 * j[band, :] / n) \
        * np.sin(2 * np.pi * 1.5 * i[band, :] / n)
    return np.clip(img, 0.0, 1.0)


def _frequency_indices(n: int, m: int, policy: str, rng) -> np.ndarray:
    N = n * n
    if policy == "random":
        return np.sort(rng.choice(N, size=m, replace=False))
    i, j = np.divmod(np.arange(N), n)
    order = np.lexsort((i, i + j))      # by total frequency, then row
    if policy == "low":
        return np.sort(order[:m])
    if policy == "high":
        return np.sort(order[N - m:])
    raise ConstructionError(f"unknown frequency policy {policy!r}")


@dataclass
class InpaintInstance:
    """Sampling data, constraint data, and the assembled problem."""
    n: int
    corruption_fraction: float
    seed: int
    freq_policy: str
    truth: np.ndarray           # flattened ground truth (kept for metrics)
    corrupted: np.ndarray       # indices of missing pixels
    known_pixels: np.ndarray    # indices behind the objective, p of them
    b: np.ndarray
    freq_indices: np.ndarray    # DCT rows behind the constraint, m of them
    d: np.ndarray
    problem: AffineQuadraticProblem

    @property
    def p(self) -> int:
        return self.known_pixels.size

    @property
    def m(self) -> int:
        return self.freq_indices.size

    def corrupted_image(self, fill=0.0) -> np.ndarray:
        img = self.truth.copy()
        img[self.corrupted] = fill
        return img.reshape(self.n, self.n)


def make_instance(image, corruption_fraction, p, m, seed, *,
                  freq_policy="random") -> InpaintInstance:
    """Build a seeded instance from a square image with values in [0, 1].

    The corrupted set, the known-pixel subset (drawn from uncorrupted
    pixels only), and the frequency subset are three successive draws from
    one generator, so the instance is a pure function of its arguments.
    """
    img = np.asarray(image, dtype=float)
    if img.ndim != 2 or img.shape[0] != img.shape[1]:
        raise ConstructionError("image must be square")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ConstructionError("image values must lie in [0, 1]")
    n = img.shape[0]
    N = n * n
    if not 0.0 <= corruption_fraction < 1.0:
        raise ConstructionError("corruption fraction must be in [0, 1)")
    if not 1 <= m <= N:
        raise ConstructionError(f"need 1 <= m <= {N}")
    x_true = img.ravel()
    rng = np.random.default_rng(seed)
    n_corrupt = int(round(corruption_fraction * N))
    corrupted = np.sort(rng.choice(N, size=n_corrupt, replace=False))
    uncorrupted = np.setdiff1d(np.arange(N), corrupted)
    if p > uncorrupted.size:
        raise ConstructionError(
            f"p={p} known pixels requested but only {uncorrupted.size} are intact")
    known = np.sort(rng.choice(uncorrupted, size=p, replace=False))
    freq = _frequency_indices(n, m, freq_policy, rng)

    A = row_sampling_map(N, known)
    b = x_true[known]
    C = sampled_orthonormal_rows(dct2d_map(n), freq)
    d = C(x_true)
    U = AffineSubspace.from_orthonormal_rows(C, d)
    problem = AffineQuadraticProblem(A, b, U, lip=1.0)
    return InpaintInstance(n=n, corruption_fraction=float(corruption_fraction),
                           seed=int(seed), freq_policy=freq_policy,
                           truth=x_true, corrupted=corrupted,
                           known_pixels=known, b=b, freq_indices=freq, d=d,
                           problem=problem)


def psnr(x, reference) -> float:
    """Peak signal-to-noise ratio against the [0, 1] range (peak 1)."""
    mse = float(np.mean((np.asarray(x) - np.asarray(reference)) ** 2))
    if mse == 0.0:
        return np.inf
    return -10.0 * np.log10(mse)


@dataclass
class Reconstruction:
    """One solver run and its quality metrics."""
    x_final: np.ndarray
    init_tag: str
    gradmap_final: float
    iters: int
    converged: bool
    psnr_vs_truth: float
    dist_to_PSx0: float | None
    trace: SolverTrace


def _initial_point(inst: InpaintInstance, init, init_seed):
    N = inst.n * inst.n
    if init == "ones":
        return np.ones(N), "ones"
    if init == "zeros":
        return np.zeros(N), "zeros"
    if init == "random":
        seed = inst.seed + 1 if init_seed is None else init_seed
        return np.random.default_rng(seed).uniform(size=N), f"random({seed})"
    if init == "truth":
        return inst.truth.copy(), "truth"
    raise ConstructionError(f"unknown initialization {init!r}")


def reconstruct(inst: InpaintInstance, init="zeros", tol=1e-10,
                max_iter=200_000, *, init_seed=None) -> Reconstruction:
    """Accelerated run from the named start, stopped on the gradient mapping.

    Uses the classical parameter sequence and unit stepsize. When the
    ambient dimension is within the oracle cap, the distance from the
    final iterate to the best approximation of the start is reported.
    """
    if tol <= 0:
        raise ConstructionError("tol must be positive")
    x0, tag = _initial_point(inst, init, init_seed)
    trace = run_apg(inst.problem, x0, classical_fista(),
                    stop_on_gradmap(tol, max_iter=max_iter))
    dist = None
    if inst.n * inst.n <= oracle_cap():
        sol = inst.problem.try_solution_set()
        if sol is not None:
            dist = float(np.linalg.norm(
                trace.x_final - best_approximation(sol, x0)))
    return Reconstruction(x_final=trace.x_final, init_tag=tag,
                          gradmap_final=trace.gradmap[trace.iterations],
                          iters=trace.iterations, converged=trace.converged,
                          psnr_vs_truth=psnr(trace.x_final, inst.truth),
                          dist_to_PSx0=dist, trace=trace)


def instance_to_json(inst: InpaintInstance, path, meta=None):
    """Persist the descriptor (seeds and sorted index sets), not the arrays."""
    payload = {} if meta is None else {"meta": meta}
    payload |= {
        "n": inst.n,
        "corruption_fraction": inst.corruption_fraction,
        "p": inst.p,
        "m": inst.m,
        "seed": inst.seed,
        "freq_policy": inst.freq_policy,
        "corrupted": sorted(int(i) for i in inst.corrupted),
        "known_pixels": sorted(int(i) for i in inst.known_pixels),
        "freq_indices": sorted(int(i) for i in inst.freq_indices),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def instance_from_json(path, image) -> InpaintInstance:
    """Rebuild an instance from its descriptor and the ground-truth image.

    The stored index sets are used verbatim; the seed is carried along for
    bookkeeping only.
    """
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    img = np.asarray(image, dtype=float)
    n = payload["n"]
    if img.shape != (n, n):
        raise ConstructionError(f"descriptor expects a {n}x{n} image")
    x_true = img.ravel()
    known = np.asarray(payload["known_pixels"], dtype=int)
    freq = np.asarray(payload["freq_indices"], dtype=int)
    A = row_sampling_map(n * n, known)
    C = sampled_orthonormal_rows(dct2d_map(n), freq)
    d = C(x_true)
    U = AffineSubspace.from_orthonormal_rows(C, d)
    problem = AffineQuadraticProblem(A, x_true[known], U, lip=1.0)
    return InpaintInstance(n=n,
                           corruption_fraction=payload["corruption_fraction"],
                           seed=payload["seed"],
                           freq_policy=payload["freq_policy"],
                           truth=x_true,
                           corrupted=np.asarray(payload["corrupted"], dtype=int),
                           known_pixels=known, b=x_true[known],
                           freq_indices=freq, d=d, problem=problem)
