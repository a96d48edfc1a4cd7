"""End-to-end evaluation of the measure slicing inequalities.

For a body K, density f and codimension k, one evaluation produces

    lhs       = mu(K)
    max_sec   = max_{H in Gr_{n-k}} mu(K ∩ H)     (analytic argmax or search)
    prop1_rhs = ovr^k * n/(n-k) * c_{n,k} * max_sec * |K|^{k/n}
    C_emp     = (lhs / (max_sec * |K|^{k/n}))^{1/k} / sqrt(p)

Seed streams (labels passed to ``SeedSpec.derive``): ``lhs``, ``logvol``,
``maxsection``, ``ovr``. Sweep row ``i`` runs under ``SeedSpec(seed, i)``.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__
from .bodies import Ellipsoid, LpSubspaceBall, StarBody, body_from_spec, euclidean_ball, lp_ball
from .errors import ConfigError, DomainError, InequalityViolation, InvariantViolation, SlicingError
from .integrate import (UNIFORM, Density, Estimate, Gaussian, Uniform, density_from_spec,
                        max_section_measure, measure_body, measure_section, volume_polar)
from .ovr import containment_radius, lewis_residual, lewis_union_body, loewner_ovr_details
from .sampling import SeedSpec, SubspaceFrame, as_seed, complement_frame
from .special import dimension_factor, section_constant, unit_ball_log_volume


@dataclass
class Counts:
    volume: int = 200_000
    section: int = 100_000
    search: int = 2048
    restarts: int = 6
    local_steps: int = 30
    boundary: int | None = None
    probes: int = 100_000
    mvee_eps: float = 1e-3

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        extra = set(d) - names
        if extra:
            raise ConfigError(f"unknown count fields {sorted(extra)}")
        return cls(**d)


CSV_COLUMNS = ["body_id", "n", "p", "k", "density", "mu_K", "mu_K_se", "max_section",
               "max_section_se", "log_vol", "ovr", "prop1_rhs", "slack", "C_emp", "seed",
               "samples", "version"]


@dataclass
class SlicingReport:
    body_id: str
    n: int
    k: int
    p: float | None
    density: str
    mu_K: float = math.nan
    mu_K_se: float = math.nan
    max_section: float = math.nan
    max_section_se: float = math.nan
    max_section_source: str = ""
    max_section_inflated: float = math.nan
    argmax_frame: list = field(default_factory=list)
    log_vol: float = math.nan
    log_vol_se: float = math.nan
    ovr: float = math.nan
    ovr_se: float = 0.0
    ovr_source: str = ""
    prop1_rhs: float = math.nan
    prop1_rhs_se: float = math.nan
    slack: float = math.nan
    prop1_passed: bool | None = None
    C_emp: float = math.nan
    C_emp_se: float = math.nan
    corollary_passed: bool | None = None
    restarts: int = 0
    seed: int = 0
    stream: int = 0
    samples: int = 0
    error: str = ""
    version: str = __version__

    def to_row(self) -> dict:
        row = {c: getattr(self, c) for c in CSV_COLUMNS}
        if row["p"] is not None and math.isinf(row["p"]):
            row["p"] = "inf"
        return row

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["p"] is not None and math.isinf(d["p"]):
            d["p"] = "inf"
        return d


def _body_p(body):
    return body.p if isinstance(body, LpSubspaceBall) else None


def _is_cube(body):
    """True for the l_inf ball written with atoms +-e_i (any order)."""
    if not isinstance(body, LpSubspaceBall) or not math.isinf(body.p):
        return False
    u = np.abs(body.directions)
    return u.shape == (body.n, body.n) and np.allclose(u.max(axis=1), 1.0) \
        and np.allclose(u.T @ u, np.eye(body.n))


def analytic_max_frame(body: StarBody, density: Density, k: int) -> SubspaceFrame | None:
    """Known maximizing subspace, when theory provides one.

    Ellipsoids with any radial density: the span of the n-k longest axes
    (each central section is contained in an isometric copy of that one).
    The cube with uniform density and k = 1: the hyperplane with normal
    (e_1 + e_2)/sqrt(2).
    """
    e = body.as_ellipsoid()
    if e is not None:
        w, v = np.linalg.eigh(e.M)
        return SubspaceFrame(v[:, : body.n - k])
    if k == 1 and body.n >= 2 and isinstance(density, Uniform) and _is_cube(body):
        normal = (body.directions[0] + body.directions[1]) / math.sqrt(2.0)
        return complement_frame(normal)
    return None


def _max_section(body, density, k, counts, seed):
    """Returns (estimate, frame, source, inflated value, restart count)."""
    frame = analytic_max_frame(body, density, k)
    if frame is not None:
        est = measure_section(body, density, frame, counts.section, seed.derive("maxsection"))
        return est, frame, "analytic", est.value + 3.0 * est.std_error, 0
    res = max_section_measure(body, density, k, counts.restarts, counts.local_steps,
                              counts.section, seed.derive("maxsection"), counts.search)
    est = res.estimate
    vals = sorted(res.restart_values, reverse=True)
    # confidence band: search-set optimism of the winner plus disagreement
    # between the two best restarts
    band = max(0.0, vals[0] - est.value)
    if len(vals) > 1:
        band += vals[0] - vals[1]
    return est, res.frame, "search", est.value + band + 3.0 * est.std_error, counts.restarts


def prop1_rhs(body: StarBody, density: Density, k: int, ovr_value: float, counts: Counts | None = None,
              seed=0, max_section: Estimate | None = None, log_volume: Estimate | None = None) -> Estimate:
    """``ovr^k * n/(n-k) * c_{n,k} * max_H mu(K ∩ H) * |K|^{k/n}``."""
    n = body.n
    if not 1 <= k < n:
        raise DomainError(f"need 1 <= k < n, got n={n}, k={k}")
    if not ovr_value >= 1:
        raise DomainError(f"outer volume ratio must be >= 1, got {ovr_value}")
    counts = counts or Counts()
    seed = as_seed(seed)
    if max_section is None:
        max_section = _max_section(body, density, k, counts, seed)[0]
    if log_volume is None:
        log_volume = volume_polar(body, counts.volume, seed.derive("logvol"))
    factor = ovr_value ** k * dimension_factor(n, k) * section_constant(n, k).value
    value = factor * max_section.value * math.exp(k * log_volume.log_value / n)
    rel = math.hypot(max_section.rel_error, k / n * log_volume.rel_error)
    return Estimate(value, value * rel, max_section.samples, seed)


def _ovr(body, ovr, counts, seed, log_vol):
    """Returns (value, std error, provenance)."""
    if isinstance(ovr, (int, float)) and not isinstance(ovr, bool):
        return float(ovr), 0.0, "supplied"
    if ovr == "closed-form":
        if body.as_ellipsoid() is not None:
            return 1.0, 0.0, "closed-form"
        if isinstance(body, LpSubspaceBall) and body.p >= 2 and lewis_residual(body) < 1e-8:
            # the ball of radius n^{1/2-1/p} encloses K
            n = body.n
            log_ball = n * math.log(containment_radius(n, body.p)) + unit_ball_log_volume(n)
            value = math.exp((log_ball - log_vol.log_value) / n)
            return value, value * log_vol.rel_error / n, "closed-form"
        raise DomainError("no closed-form outer volume ratio for this body")
    if ovr == "loewner":
        d = loewner_ovr_details(body, counts.boundary, counts.mvee_eps, counts.volume,
                                seed.derive("ovr"), counts.probes)
        return d["ovr"], d["ovr_se"], "loewner"
    raise ConfigError(f"unknown ovr mode {ovr!r}")


def evaluate(body: StarBody, density: Density, k: int, counts: Counts | None = None, seed=0,
             ovr="loewner", body_id: str = "", prop1: bool = True, corollary: bool | None = None,
             corollary_bound: float = 3.0) -> SlicingReport:
    """Compute every quantity of the slicing report without raising on failure."""
    counts = counts or Counts()
    seed = as_seed(seed)
    n = body.n
    if not 1 <= k < n:
        raise DomainError(f"need 1 <= k < n, got n={n}, k={k}")
    p = _body_p(body)
    if corollary is None:
        corollary = p is not None and 2 < p < math.inf
    rep = SlicingReport(body_id or body.to_spec()["kind"], n, k, p, density.label, seed=seed.seed,
                        stream=seed.stream, samples=counts.volume)

    lhs = measure_body(body, density, counts.volume, seed.derive("lhs"))
    if isinstance(density, Uniform):
        log_vol = lhs
    else:
        log_vol = volume_polar(body, counts.volume, seed.derive("logvol"))
    rep.mu_K, rep.mu_K_se = lhs.value, lhs.std_error
    rep.log_vol, rep.log_vol_se = log_vol.log_value, log_vol.rel_error

    sec, frame, source, inflated, restarts = _max_section(body, density, k, counts, seed)
    rep.max_section, rep.max_section_se = sec.value, sec.std_error
    rep.max_section_source, rep.max_section_inflated = source, inflated
    rep.argmax_frame, rep.restarts = frame.to_list(), restarts
    vol_k = math.exp(k * log_vol.log_value / n)

    if prop1:
        rep.ovr, rep.ovr_se, rep.ovr_source = _ovr(body, ovr, counts, seed, log_vol)
        # rhs with the confidence-inflated max so under-maximization cannot fake a pass
        inflated_est = Estimate(inflated, sec.std_error, sec.samples, sec.seed)
        rhs = prop1_rhs(body, density, k, max(rep.ovr, 1.0), counts, seed,
                        max_section=inflated_est, log_volume=log_vol)
        rep.prop1_rhs, rep.prop1_rhs_se = rhs.value, rhs.std_error
        rep.slack = 1.0 - lhs.value / rhs.value
        rel = math.hypot(lhs.rel_error, rhs.rel_error, k * rep.ovr_se / max(rep.ovr, 1.0))
        rep.prop1_passed = lhs.value <= rhs.value * (1.0 + 3.0 * rel)

    if corollary:
        if p is None or not p > 2:
            raise DomainError("the corollary needs an L_p subspace ball with p > 2")
        ratio = lhs.value / (sec.value * vol_k)
        rep.C_emp = ratio ** (1.0 / k) / math.sqrt(p)
        rel = math.hypot(lhs.rel_error, sec.rel_error, k / n * log_vol.rel_error) / k
        rep.C_emp_se = rep.C_emp * rel
        rep.corollary_passed = rep.C_emp <= corollary_bound
    return rep


def verify_prop1(body: StarBody, density: Density, k: int, counts: Counts | None = None, seed=0,
                 ovr="loewner", body_id: str = "") -> SlicingReport:
    """Evaluate both sides of the measure slicing bound and assert lhs <= rhs.

    A failure raises :class:`InequalityViolation`; since the inequality is a
    theorem, that indicates a bug, not a counterexample.
    """
    rep = evaluate(body, density, k, counts, seed, ovr, body_id, prop1=True)
    if not rep.prop1_passed:
        raise InequalityViolation(
            f"mu(K)={rep.mu_K:.6g} exceeds rhs={rep.prop1_rhs:.6g} beyond MC tolerance", report=rep)
    return rep


def verify_corollary(body: LpSubspaceBall, density: Density, k: int, counts: Counts | None = None,
                     seed=0, bound: float = 3.0, body_id: str = "") -> SlicingReport:
    """Empirical constant C_emp of the L_p slicing bound; asserts C_emp <= ``bound``."""
    if not isinstance(body, LpSubspaceBall):
        raise DomainError("the corollary applies to L_p subspace balls")
    if not 2 < body.p < math.inf:
        raise DomainError(f"p must be finite and exceed 2, got {body.p}")
    rep = evaluate(body, density, k, counts, seed, body_id=body_id, prop1=False,
                   corollary=True, corollary_bound=bound)
    if not rep.corollary_passed:
        raise InvariantViolation(f"C_emp={rep.C_emp:.4g} exceeds bound {bound}", report=rep)
    return rep


# -- sweeps -----------------------------------------------------------------------

@dataclass
class SweepConfig:
    bodies: list = field(default_factory=list)        # (id, StarBody)
    densities: list = field(default_factory=list)     # Density
    ks: list = field(default_factory=list)
    counts: Counts = field(default_factory=Counts)
    seed: int = 0
    ovr: str = "loewner"
    corollary_bound: float = 3.0

    @classmethod
    def from_dict(cls, d):
        allowed = {"bodies", "densities", "k", "counts", "seed", "ovr", "corollary_bound"}
        extra = set(d) - allowed
        if extra:
            raise ConfigError(f"unknown sweep fields {sorted(extra)}")
        bodies = []
        for i, item in enumerate(d.get("bodies", [])):
            if not isinstance(item, dict) or set(item) - {"id", "body"} or "body" not in item:
                raise ConfigError("sweep bodies are objects {\"id\": str, \"body\": spec}")
            bodies.append((item.get("id", f"body{i}"), body_from_spec(item["body"])))
        ks = d.get("k", [])
        if any(isinstance(k, bool) or not isinstance(k, int) for k in ks):
            raise ConfigError("k values must be integers")
        return cls(bodies, [density_from_spec(s) for s in d.get("densities", [])], list(ks),
                   Counts.from_dict(d.get("counts", {})), int(d.get("seed", 0)),
                   d.get("ovr", "loewner"), float(d.get("corollary_bound", 3.0)))


def default_corpus(seed: int = 0) -> SweepConfig:
    """Desk-scale corpus: 9 bodies (n <= 16) x 2 densities x k in {1, 2}."""
    bodies = [
        ("B2_3", euclidean_ball(3)),
        ("ellipsoid_321", Ellipsoid(np.diag([1 / 9, 1 / 4, 1.0]))),
        ("B1_3", lp_ball(3, 1)),
        ("Binf_4", lp_ball(4, math.inf)),
        ("B4_3", lp_ball(3, 4)),
        ("B4_8", lp_ball(8, 4)),
        ("B64_4", lp_ball(4, 64)),
        ("lewis3_6_p3", lewis_union_body(6, 3.0, 3, SeedSpec(seed).derive("corpus"))),
        ("B8_16", lp_ball(16, 8)),
    ]
    return SweepConfig(bodies, [UNIFORM, Gaussian(1.0)], [1, 2], Counts(), seed)


def sweep(config: SweepConfig) -> list:
    """One report per (body, density, k) in config order; row errors are recorded, not raised."""
    rows = []
    combos = itertools.product(config.bodies, config.densities, config.ks)
    for i, ((body_id, body), density, k) in enumerate(combos):
        seed = SeedSpec(config.seed, i)
        try:
            rep = evaluate(body, density, k, config.counts, seed, config.ovr, body_id,
                           corollary_bound=config.corollary_bound)
            if rep.prop1_passed is False:
                rep.error = "prop1 inequality violated"
        except SlicingError as exc:
            p = _body_p(body)
            rep = SlicingReport(body_id, body.n, k, p, density.label, seed=seed.seed,
                                stream=seed.stream, samples=config.counts.volume,
                                error=f"{type(exc).__name__}: {exc}")
        rows.append(rep)
    return rows


def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    if v is None:
        return ""
    return str(v)


def to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        row = r.to_row()
        w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def to_json(rows) -> str:
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
        return v
    return json.dumps([{c: clean(v) for c, v in r.to_row().items()} for r in rows], indent=1)
