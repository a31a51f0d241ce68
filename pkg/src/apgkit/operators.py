"""Matrix-free linear/affine operators, orthogonal projections, and norm estimation.

Everything here is immutable after construction and safe for concurrent
read-only use. Vectors are dense 1-D float64 arrays; n-by-n images are
handled in row-major flattened form.
"""

import numpy as np
from scipy import fft as _fft

from .errors import ConstructionError, DimensionMismatchError, PowerIterationError

__all__ = [
    "LinearMap",
    "AffineMap",
    "AffineSubspace",
    "adjoint_mismatch",
    "compose",
    "dct2d_map",
    "dense_map",
    "gram_map",
    "identity_map",
    "operator_norm_sq",
    "project_affine",
    "project_orthant",
    "row_sampling_map",
    "sampled_orthonormal_rows",
    "scaled_sum",
]


def _as_vector(x, n, what="input"):
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise DimensionMismatchError(
            f"{what}: expected a vector of shape ({n},), got {x.shape}"
        )
    return x


class LinearMap:
    """Linear operator given by its action and the action of its adjoint.

    Parameters
    ----------
    rows, cols : int
        Output and input dimensions.
    apply, adjoint_apply : callable
        ``apply`` maps a length-``cols`` vector to a length-``rows`` vector;
        ``adjoint_apply`` goes the other way.
    kind : str
        Structural tag (``dense``, ``row-sampling``, ``orthonormal-rows``,
        ``dct2d``, ``composition``, ``scaled-sum``, ...).
    """

    def __init__(self, rows, cols, apply, adjoint_apply, kind="custom"):
        self.rows = int(rows)
        self.cols = int(cols)
        self._apply = apply
        self._adjoint_apply = adjoint_apply
        self.kind = kind

    @property
    def shape(self):
        return (self.rows, self.cols)

    def __call__(self, x):
        return self._apply(_as_vector(x, self.cols, "apply"))

    def adjoint(self, y):
        return self._adjoint_apply(_as_vector(y, self.rows, "adjoint"))

    def as_matrix(self):
        """Densify column by column. Desk scale only."""
        out = np.zeros((self.rows, self.cols))
        e = np.zeros(self.cols)
        for j in range(self.cols):
            e[j] = 1.0
            out[:, j] = self(e)
            e[j] = 0.0
        return out

    def __repr__(self):
        return f"LinearMap({self.rows}x{self.cols}, kind={self.kind!r})"


def dense_map(matrix) -> LinearMap:
    """Wrap an explicit matrix."""
    M = np.atleast_2d(np.asarray(matrix, dtype=float))
    m = LinearMap(M.shape[0], M.shape[1], lambda x: M @ x, lambda y: M.T @ y,
                  kind="dense")
    m.matrix = M
    return m


def identity_map(n) -> LinearMap:
    return LinearMap(n, n, lambda x: x.copy(), lambda y: y.copy(), kind="dense")


def row_sampling_map(total, indices) -> LinearMap:
    """Coordinate sampling: apply extracts the listed entries, adjoint scatters back.

    Raises
    ------
    ConstructionError
        If an index is repeated or out of range.
    """
    idx = np.asarray(indices, dtype=int)
    if idx.ndim != 1:
        raise ConstructionError("indices must be a flat list")
    if idx.size and (idx.min() < 0 or idx.max() >= total):
        raise ConstructionError(f"index out of range for total={total}")
    if np.unique(idx).size != idx.size:
        raise ConstructionError("duplicate sampling index")

    def apply(x):
        return x[idx]

    def adjoint(y):
        out = np.zeros(total)
        out[idx] = y
        return out

    m = LinearMap(idx.size, total, apply, adjoint, kind="row-sampling")
    m.total = int(total)
    m.indices = idx
    return m


def dct2d_map(n) -> LinearMap:
    """Orthonormal 2-D DCT-II on n-by-n images flattened row-major.

    Separable transform (rows then columns); the adjoint is the inverse
    transform, so the map is orthogonal.
    """
    if n < 1:
        raise ConstructionError("image side must be >= 1")
    N = n * n

    def apply(x):
        return _fft.dctn(x.reshape(n, n), type=2, norm="ortho").ravel()

    def adjoint(y):
        return _fft.idctn(y.reshape(n, n), type=2, norm="ortho").ravel()

    m = LinearMap(N, N, apply, adjoint, kind="dct2d")
    m.image_side = int(n)
    m.orthonormal_square = True
    return m


def compose(outer: LinearMap, inner: LinearMap) -> LinearMap:
    if outer.cols != inner.rows:
        raise ConstructionError(
            f"cannot compose {outer.shape} with {inner.shape}"
        )
    return LinearMap(outer.rows, inner.cols,
                     lambda x: outer(inner(x)),
                     lambda y: inner.adjoint(outer.adjoint(y)),
                     kind="composition")


def scaled_sum(terms) -> LinearMap:
    """Linear combination ``sum(a_i * M_i)`` of same-shape maps."""
    terms = [(float(a), m) for a, m in terms]
    if not terms:
        raise ConstructionError("empty scaled sum")
    rows, cols = terms[0][1].shape
    for _, m in terms:
        if m.shape != (rows, cols):
            raise ConstructionError("scaled-sum term shapes differ")

    def apply(x):
        out = np.zeros(rows)
        for a, m in terms:
            out += a * m(x)
        return out

    def adjoint(y):
        out = np.zeros(cols)
        for a, m in terms:
            out += a * m.adjoint(y)
        return out

    return LinearMap(rows, cols, apply, adjoint, kind="scaled-sum")


def gram_map(A: LinearMap) -> LinearMap:
    """A*A as a self-adjoint square map."""
    return LinearMap(A.cols, A.cols,
                     lambda x: A.adjoint(A(x)),
                     lambda x: A.adjoint(A(x)),
                     kind="composition")


def sampled_orthonormal_rows(base: LinearMap, indices) -> LinearMap:
    """Rows of an orthogonal square map selected by index.

    The result C satisfies C C* = Id. The base map and the index set are
    kept on the object so downstream code can build an orthonormal basis of
    ker C from the complementary rows instead of densifying.
    """
    if base.rows != base.cols or not getattr(base, "orthonormal_square", False):
        raise ConstructionError("base must be an orthogonal square map")
    sel = row_sampling_map(base.rows, indices)

    m = LinearMap(sel.rows, base.cols,
                  lambda x: base(x)[sel.indices],
                  lambda y: base.adjoint(sel.adjoint(y)),
                  kind="orthonormal-rows")
    m.base = base
    m.indices = sel.indices
    return m


def adjoint_mismatch(A: LinearMap, trials=20, seed=0) -> float:
    """Worst normalized defect of <Ax, y> = <x, A*y> over seeded random pairs."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(A.cols)
        y = rng.standard_normal(A.rows)
        lhs = float(np.dot(A(x), y))
        rhs = float(np.dot(x, A.adjoint(y)))
        scale = 1.0 + np.linalg.norm(x) * np.linalg.norm(y)
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


class AffineMap:
    """x -> offset + linear(x), with linear square."""

    def __init__(self, linear: LinearMap, offset):
        if linear.rows != linear.cols:
            raise ConstructionError("affine map needs a square linear part")
        self.linear = linear
        self.offset = _as_vector(offset, linear.rows, "offset")

    @property
    def dim(self):
        return self.linear.rows

    def __call__(self, x):
        return self.offset + self.linear(x)


class AffineSubspace:
    """Closed affine subspace under one of three representations.

    * ``orthonormal-rows``: solution set of C x = d with C C* = Id;
    * ``hyperplane``: <normal, x> = offset;
    * ``basis``: anchor + span of orthonormal basis columns.

    ``to_basis()`` converts any representation to (min-norm point, orthonormal
    basis of the parallel subspace); the conversion densifies at desk scale
    except when the orthonormal rows were sampled from a known orthogonal
    square map, where the complementary rows are used directly.
    """

    def __init__(self, *, representation, dim, payload):
        self.representation = representation
        self.dim = int(dim)
        self._payload = payload
        self._basis_form = None   # cached (u0, B)

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_orthonormal_rows(cls, C: LinearMap, d, check=True, seed=0):
        d = _as_vector(d, C.rows, "d")
        if check:
            rng = np.random.default_rng(seed)
            for _ in range(3):
                y = rng.standard_normal(C.rows)
                if np.linalg.norm(C(C.adjoint(y)) - y) > 1e-10 * np.linalg.norm(y):
                    raise ConstructionError("rows of C are not orthonormal")
        return cls(representation="orthonormal-rows", dim=C.cols,
                   payload={"C": C, "d": d})

    @classmethod
    def from_hyperplane(cls, normal, offset):
        normal = np.asarray(normal, dtype=float)
        nn = float(np.dot(normal, normal))
        if nn == 0.0:
            raise ConstructionError("hyperplane normal must be nonzero")
        return cls(representation="hyperplane", dim=normal.size,
                   payload={"normal": normal, "offset": float(offset), "nn": nn})

    @classmethod
    def from_basis(cls, anchor, basis, check=True):
        anchor = np.asarray(anchor, dtype=float)
        basis = np.asarray(basis, dtype=float)
        if basis.ndim != 2 or basis.shape[0] != anchor.size:
            raise ConstructionError("basis must be (dim, r) with r >= 0")
        if check and basis.shape[1]:
            gram = basis.T @ basis
            if np.max(np.abs(gram - np.eye(basis.shape[1]))) > 1e-10:
                raise ConstructionError("basis columns are not orthonormal")
        return cls(representation="basis", dim=anchor.size,
                   payload={"anchor": anchor, "basis": basis})

    @classmethod
    def whole_space(cls, n):
        return cls.from_basis(np.zeros(n), np.eye(n), check=False)

    # -- geometry ----------------------------------------------------------

    def project(self, x):
        """Orthogonal projection onto the subspace."""
        x = _as_vector(x, self.dim, "project")
        p = self._payload
        if self.representation == "orthonormal-rows":
            C = p["C"]
            return x - C.adjoint(C(x) - p["d"])
        if self.representation == "hyperplane":
            n = p["normal"]
            return x - ((np.dot(n, x) - p["offset"]) / p["nn"]) * n
        u0, B = self.to_basis()
        return u0 + B @ (B.T @ x)

    def membership_residual(self, x) -> float:
        """Norm of the defining-equation residual at x."""
        x = _as_vector(x, self.dim, "membership")
        p = self._payload
        if self.representation == "orthonormal-rows":
            C = p["C"]
            return float(np.linalg.norm(C(x) - p["d"]))
        if self.representation == "hyperplane":
            n = p["normal"]
            return abs(np.dot(n, x) - p["offset"]) / np.sqrt(p["nn"])
        u0, B = self.to_basis()
        r = x - u0
        return float(np.linalg.norm(r - B @ (B.T @ r)))

    def contains(self, x, tol=1e-8) -> bool:
        return self.membership_residual(x) <= tol * (1.0 + np.linalg.norm(x))

    def par_projector(self) -> LinearMap:
        """Orthogonal projector onto the parallel linear subspace, matrix-free."""
        p = self._payload
        if self.representation == "orthonormal-rows":
            C = p["C"]
            fn = lambda x: x - C.adjoint(C(x))
        elif self.representation == "hyperplane":
            n, nn = p["normal"], p["nn"]
            fn = lambda x: x - (np.dot(n, x) / nn) * n
        else:
            B = p["basis"]
            fn = lambda x: B @ (B.T @ x)
        return LinearMap(self.dim, self.dim, fn, fn, kind="composition")

    def par_dim(self) -> int:
        if self.representation == "orthonormal-rows":
            return self.dim - self._payload["C"].rows
        if self.representation == "hyperplane":
            return self.dim - 1
        return self._payload["basis"].shape[1]

    def to_basis(self):
        """Return (u0, B): the min-norm point of U and an orthonormal basis of par U."""
        if self._basis_form is not None:
            return self._basis_form
        p = self._payload
        if self.representation == "basis":
            B = p["basis"]
            a = p["anchor"]
            u0 = a - B @ (B.T @ a)
        elif self.representation == "hyperplane":
            n, nn, c = p["normal"], p["nn"], p["offset"]
            u0 = (c / nn) * n
            _, _, Vt = np.linalg.svd(n.reshape(1, -1) / np.sqrt(nn),
                                     full_matrices=True)
            B = Vt[1:].T
        else:
            C, d = p["C"], p["d"]
            u0 = C.adjoint(d)
            base = getattr(C, "base", None)
            if base is not None:
                keep = np.setdiff1d(np.arange(self.dim), C.indices)
                B = np.zeros((self.dim, keep.size))
                e = np.zeros(self.dim)
                for col, j in enumerate(keep):
                    e[j] = 1.0
                    B[:, col] = base.adjoint(e)
                    e[j] = 0.0
            else:
                dense = C.as_matrix()
                _, s, Vt = np.linalg.svd(dense, full_matrices=True)
                rank = int(np.sum(s > 1e-10 * s[0])) if s.size else 0
                B = Vt[rank:].T
        self._basis_form = (u0, B)
        return self._basis_form


def project_affine(sub: AffineSubspace, x):
    """Projection P_U x onto an affine subspace."""
    return sub.project(x)


def project_orthant(x):
    """Projection onto the nonnegative orthant: componentwise max with 0."""
    return np.maximum(np.asarray(x, dtype=float), 0.0)


def operator_norm_sq(A: LinearMap, tol=1e-12, max_iter=10_000, seed=0) -> float:
    """Estimate ||A*A|| by power iteration from a seeded random start.

    Returns the Rayleigh quotient of A*A once its relative change drops
    below ``tol``. Rayleigh quotients never exceed the true norm, so the
    caller is expected to inflate the estimate before using its reciprocal
    as a stepsize.

    Raises
    ------
    PowerIterationError
        If the tolerance is not met in ``max_iter`` sweeps; the error
        carries the last estimate and iterate.
    """
    if tol <= 0:
        raise ConstructionError("tol must be positive")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.cols)
    v /= np.linalg.norm(v)
    lam_prev = None
    lam = 0.0
    for _ in range(max_iter):
        w = A.adjoint(A(v))
        lam = float(np.dot(v, w))
        wn = np.linalg.norm(w)
        if wn == 0.0:
            return 0.0
        if lam_prev is not None and abs(lam - lam_prev) <= tol * max(abs(lam), 1e-300):
            return lam
        lam_prev = lam
        v = w / wn
    raise PowerIterationError(
        f"power iteration did not converge in {max_iter} sweeps",
        last_estimate=lam, last_vector=v)
