"""Origin-symmetric star bodies given by their gauge (Minkowski functional).

All bodies are immutable and vectorized: ``gauge`` and ``radial`` accept a
single vector of shape (n,) or a stack of shape (N, n).
"""

from __future__ import annotations

import math
from typing import Callable, Iterable

import numpy as np

from .errors import ConfigError, DegenerateBodyError, DomainError
from .sampling import as_seed, sample_sphere
from .special import unit_ball_log_volume


def _rows(x, n):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x2 = np.atleast_2d(x)
    if x2.shape[-1] != n:
        raise DomainError(f"expected vectors of dimension {n}, got shape {x.shape}")
    return x2, single


class StarBody:
    """Base class; subclasses implement ``_gauge`` on an (N, n) array."""

    kind = "star"

    def __init__(self, n: int):
        if n < 1:
            raise DomainError(f"dimension must be >= 1, got {n}")
        self.n = int(n)

    def _gauge(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gauge(self, x):
        """``||x||_K = min{a >= 0 : x in aK}``."""
        x2, single = _rows(x, self.n)
        g = self._gauge(x2)
        return float(g[0]) if single else g

    def radial(self, theta):
        """``rho_K(theta) = 1 / ||theta||_K`` for unit vectors ``theta``."""
        t2, single = _rows(theta, self.n)
        norms = np.sqrt(np.einsum("ij,ij->i", t2, t2))
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise DomainError("radial() needs unit vectors (|theta| = 1 to 1e-9)")
        r = 1.0 / self._gauge(t2)
        return float(r[0]) if single else r

    def as_ellipsoid(self):
        """The same body as an :class:`Ellipsoid` when it is one, else None."""
        return None

    def to_spec(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n})"


def minkowski_functional(body: StarBody, x):
    return body.gauge(x)


def radial(body: StarBody, theta):
    return body.radial(theta)


def _canonical_direction(u):
    nz = np.flatnonzero(u)
    if nz.size and u[nz[0]] < 0:
        return -u
    return u


class LpSubspaceBall(StarBody):
    """Unit ball of ``||x||^p = sum_i c_i |(x, u_i)|^p``.

    This is the unit ball of an n-dimensional subspace of L_p carried by the
    discrete measure ``sum_i c_i delta_{u_i}``. ``p = inf`` takes the limit
    ``max_i |(x, u_i)|``.
    """

    kind = "lp_subspace"

    def __init__(self, p: float, directions, weights, spec=None):
        u = np.array(directions, dtype=float, ndmin=2)
        c = np.array(weights, dtype=float).ravel()
        super().__init__(u.shape[1])
        self.p = float(p)
        u = np.array([_canonical_direction(row) for row in u])
        u.setflags(write=False)
        c.setflags(write=False)
        self.directions = u
        self.weights = c
        self._spec = spec

    def _gauge(self, x):
        t = np.abs(x @ self.directions.T)
        if math.isinf(self.p):
            return t.max(axis=1)
        top = t.max(axis=1)
        safe = np.where(top > 0, top, 1.0)
        s = (self.weights * (t / safe[:, None]) ** self.p).sum(axis=1)
        return np.where(top > 0, top * s ** (1.0 / self.p), 0.0)

    @property
    def nu_total(self) -> float:
        return float(np.sum(self.weights))

    def second_moment_matrix(self) -> np.ndarray:
        """``sum_i c_i u_i u_i^T``."""
        return (self.directions.T * self.weights) @ self.directions

    def as_ellipsoid(self):
        if self.p == 2.0:
            return Ellipsoid(self.second_moment_matrix())
        return None

    def to_spec(self):
        if self._spec is not None:
            return dict(self._spec)
        return {"kind": "lp_subspace", "p": _p_out(self.p),
                "atoms": [{"u": u.tolist(), "c": float(c)}
                          for u, c in zip(self.directions, self.weights)]}

    def __repr__(self):
        return f"LpSubspaceBall(n={self.n}, p={self.p}, atoms={len(self.weights)})"


def _p_out(p):
    return "inf" if math.isinf(p) else p


def make_lp_subspace_ball(p: float, atoms: Iterable) -> LpSubspaceBall:
    """Build and validate a subspace-of-L_p ball from ``(u, c)`` atoms.

    Directions within 1e-6 of unit length are renormalized; anything further
    off is rejected, as are nonpositive weights and atom sets that do not span.
    """
    p = float(p)
    if not p >= 1:
        raise DomainError(f"p must be >= 1, got {p}")
    dirs, weights = [], []
    for atom in atoms:
        if isinstance(atom, dict):
            u, c = atom["u"], atom["c"]
        else:
            u, c = atom
        u = np.asarray(u, dtype=float)
        norm = np.linalg.norm(u)
        if not abs(norm - 1.0) <= 1e-6:
            raise DomainError(f"atom direction has norm {norm}, expected 1")
        if not c > 0 or not math.isfinite(c):
            raise DomainError(f"atom weight must be positive, got {c}")
        dirs.append(u / norm)
        weights.append(float(c))
    if not dirs:
        raise DegenerateBodyError("no atoms given")
    if len({d.size for d in dirs}) != 1:
        raise DomainError("atom directions have inconsistent dimensions")
    u = np.array(dirs)
    if np.linalg.matrix_rank(u) < u.shape[1]:
        raise DegenerateBodyError("atom directions do not span R^n")
    return LpSubspaceBall(p, u, weights)


def lp_ball(n: int, p: float) -> LpSubspaceBall:
    """The l_p^n unit ball as a subspace ball with standard-basis atoms."""
    if not p >= 1:
        raise DomainError(f"p must be >= 1, got {p}")
    return LpSubspaceBall(p, np.eye(n), np.ones(n),
                          spec={"kind": "lp_ball", "n": int(n), "p": _p_out(float(p))})


def lewis_residual(body: LpSubspaceBall) -> float:
    """Frobenius norm of ``sum c_i u_i u_i^T - I``; zero in Lewis position."""
    return float(np.linalg.norm(body.second_moment_matrix() - np.eye(body.n)))


class Ellipsoid(StarBody):
    """``{x : x^T M x <= 1}`` for symmetric positive-definite ``M``."""

    kind = "ellipsoid"

    def __init__(self, M):
        M = np.array(M, dtype=float, ndmin=2)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DomainError(f"ellipsoid form must be square, got {M.shape}")
        if np.max(np.abs(M - M.T)) > 1e-12 * max(1.0, np.max(np.abs(M))):
            raise DomainError("ellipsoid form is not symmetric")
        M = 0.5 * (M + M.T)
        eig = np.linalg.eigvalsh(M)
        if not eig[0] > 0:
            raise DomainError("ellipsoid form is not positive definite")
        super().__init__(M.shape[0])
        M.setflags(write=False)
        self.M = M

    def _gauge(self, x):
        # rescale rows so the quadratic form neither underflows nor overflows
        top = np.abs(x).max(axis=1)
        safe = np.where(top > 0, top, 1.0)
        y = x / safe[:, None]
        q = np.einsum("ij,ij->i", y @ self.M, y)
        return top * np.sqrt(np.maximum(q, 0.0))

    @property
    def semi_axes(self) -> np.ndarray:
        """Semi-axis lengths, descending."""
        return np.sort(1.0 / np.sqrt(np.linalg.eigvalsh(self.M)))[::-1]

    def log_volume(self) -> float:
        return unit_ball_log_volume(self.n) - 0.5 * np.linalg.slogdet(self.M)[1]

    def as_ellipsoid(self):
        return self

    def to_spec(self):
        return {"kind": "ellipsoid", "M": self.M.tolist()}


def euclidean_ball(n: int, radius: float = 1.0) -> Ellipsoid:
    return Ellipsoid(np.eye(n) / radius ** 2)


class LinearImage(StarBody):
    """``T K`` for an invertible map ``T``; gauge ``x -> ||T^{-1} x||_K``."""

    kind = "linear_image"

    def __init__(self, base: StarBody, T):
        T = np.array(T, dtype=float, ndmin=2)
        if T.shape != (base.n, base.n):
            raise DomainError(f"map must be {base.n} x {base.n}, got {T.shape}")
        if not np.all(np.isfinite(T)) or np.linalg.cond(T) >= 1e12:
            raise DomainError("linear map is singular or too ill-conditioned")
        super().__init__(base.n)
        self.base = base
        T.setflags(write=False)
        self.T = T
        self.T_inv = np.linalg.inv(T)

    def _gauge(self, x):
        return self.base._gauge(x @ self.T_inv.T)

    def as_ellipsoid(self):
        e = self.base.as_ellipsoid()
        if e is None:
            return None
        return Ellipsoid(self.T_inv.T @ e.M @ self.T_inv)

    def to_spec(self):
        return {"kind": "linear_image", "T": self.T.tolist(), "base": self.base.to_spec()}


def linear_image(body: StarBody, T) -> LinearImage:
    return LinearImage(body, T)


class RadialClosure(StarBody):
    """Star body defined directly by an even radial function on unit vectors."""

    kind = "radial_closure"

    def __init__(self, n: int, radial_fn: Callable[[np.ndarray], np.ndarray], label="radial"):
        super().__init__(n)
        self._radial_fn = radial_fn
        self.label = label

    def _gauge(self, x):
        norms = np.sqrt(np.einsum("ij,ij->i", x, x))
        out = np.zeros_like(norms)
        nz = norms > 0
        if np.any(nz):
            out[nz] = norms[nz] / np.asarray(self._radial_fn(x[nz] / norms[nz, None]), dtype=float)
        return out

    def radial(self, theta):
        t2, single = _rows(theta, self.n)
        norms = np.sqrt(np.einsum("ij,ij->i", t2, t2))
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise DomainError("radial() needs unit vectors (|theta| = 1 to 1e-9)")
        r = np.asarray(self._radial_fn(t2), dtype=float)
        return float(r[0]) if single else r

    def to_spec(self):
        return {"kind": "radial_closure", "label": self.label}


def radial_distance(K: StarBody, L: StarBody, m: int = 10_000, seed=0) -> float:
    """Max of |rho_K - rho_L| over ``m`` sampled directions (lower bound on the radial metric)."""
    if K.n != L.n:
        raise DomainError(f"dimension mismatch: {K.n} vs {L.n}")
    theta = sample_sphere(K.n, m, as_seed(seed).derive("radial_distance"))
    return float(np.max(np.abs(K.radial(theta) - L.radial(theta))))


# -- JSON body schema --------------------------------------------------------

_BODY_KEYS = {
    "lp_ball": {"kind", "n", "p"},
    "lp_subspace": {"kind", "p", "atoms"},
    "ellipsoid": {"kind", "M"},
    "linear_image": {"kind", "T", "base"},
}


def _parse_p(p):
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity"):
            return math.inf
        raise ConfigError(f"bad p value {p!r}")
    if isinstance(p, bool) or not isinstance(p, (int, float)):
        raise ConfigError(f"bad p value {p!r}")
    return float(p)


def body_from_spec(spec: dict) -> StarBody:
    """Parse the JSON body schema; unknown fields are rejected."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("body spec must be an object with a 'kind' field")
    kind = spec["kind"]
    if kind not in _BODY_KEYS:
        raise ConfigError(f"unknown body kind {kind!r}")
    extra = set(spec) - _BODY_KEYS[kind]
    missing = _BODY_KEYS[kind] - set(spec)
    if extra:
        raise ConfigError(f"unknown fields for {kind}: {sorted(extra)}")
    if missing:
        raise ConfigError(f"missing fields for {kind}: {sorted(missing)}")
    try:
        if kind == "lp_ball":
            n = spec["n"]
            if isinstance(n, bool) or not isinstance(n, int) or n < 1:
                raise ConfigError(f"bad dimension {n!r}")
            return lp_ball(n, _parse_p(spec["p"]))
        if kind == "lp_subspace":
            for atom in spec["atoms"]:
                if not isinstance(atom, dict) or set(atom) != {"u", "c"}:
                    raise ConfigError("each atom must be an object with exactly 'u' and 'c'")
            return make_lp_subspace_ball(_parse_p(spec["p"]), spec["atoms"])
        if kind == "ellipsoid":
            return Ellipsoid(spec["M"])
        return LinearImage(body_from_spec(spec["base"]), spec["T"])
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"malformed {kind} spec: {exc}") from exc
