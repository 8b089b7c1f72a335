"""Structural diagnostics for word networks.

Three properties are measured and labelled:

* degree distribution: single power law vs. two-regime power law, fitted by
  least squares in log-log space and compared by AIC;
* small-worldness: average clustering against the Erdos-Renyi expectation;
* degree assortativity: Pearson correlation of endpoint degrees.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .graph import UndirectedGraph

SCALE_FREE = "scale-free"
TWO_REGIME = "two-regime"
ASSORTATIVE = "assortative"
DISASSORTATIVE = "disassortative"
NEUTRAL = "neutral"
UNDEFINED = "undefined"


class StatsError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DegreeDistribution:
    """Empirical p(k) over degrees k >= 1.

    Unbinned distributions hold one point per distinct degree with
    ``p = N_k / N_{k>=1}``. Log-binned ones (``binned=True``) hold the
    geometric bin centre and the probability density inside the bin.
    """

    k: np.ndarray
    p: np.ndarray
    n_isolated: int = 0
    binned: bool = False

    def __post_init__(self):
        k = np.asarray(self.k, dtype=np.float64)
        p = np.asarray(self.p, dtype=np.float64)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "p", p)
        if k.shape != p.shape or k.ndim != 1:
            raise StatsError("k and p must be 1-d arrays of equal length")
        if len(k) and (k[0] < 1 or (np.diff(k) <= 0).any()):
            raise StatsError("degrees must be >= 1, distinct and ascending")
        if (p <= 0).any():
            raise StatsError("probabilities must be positive")
        if not self.binned and len(p) and abs(p.sum() - 1.0) > 1e-9:
            raise StatsError("probabilities must sum to 1")

    def __len__(self):
        return len(self.k)

    @property
    def log_k(self) -> np.ndarray:
        return np.log(self.k)

    @property
    def log_p(self) -> np.ndarray:
        return np.log(self.p)


def degree_distribution(g: UndirectedGraph) -> DegreeDistribution:
    """Distribution of degrees >= 1; isolated nodes are only counted."""
    deg = g.degrees()
    n_isolated = int((deg == 0).sum())
    deg = deg[deg > 0]
    if len(deg) == 0:
        raise StatsError("all nodes are isolated; degree distribution undefined")
    k, counts = np.unique(deg, return_counts=True)
    return DegreeDistribution(k, counts / counts.sum(), n_isolated)


def log_binned(d: DegreeDistribution, bins_per_decade: int = 10) -> DegreeDistribution:
    """Re-express an unbinned distribution as densities over log-spaced bins."""
    if d.binned:
        return d
    lo, hi = np.log10(d.k[0]), np.log10(d.k[-1] + 1)
    n_bins = max(1, int(math.ceil((hi - lo) * bins_per_decade)))
    edges = np.unique(np.floor(np.logspace(lo, hi, n_bins + 1)))
    edges[-1] = max(edges[-1], d.k[-1] + 1)
    mass, _ = np.histogram(d.k, bins=edges, weights=d.p)
    # integer degrees in [edges[i], edges[i+1])
    width = np.diff(edges)
    centre = np.sqrt(edges[:-1] * (edges[1:] - 1))
    keep = mass > 0
    return DegreeDistribution(centre[keep], mass[keep] / width[keep], d.n_isolated, binned=True)


def aic(ssr: float, n: int, num_params: int) -> float:
    """Least-squares AIC: ``n ln(ssr/n) + 2 (num_params + 1)``.

    The extra parameter is the residual variance.
    """
    if n <= num_params + 1:
        raise StatsError(f"AIC needs more than {num_params + 1} points, got {n}")
    if ssr < 0:
        raise StatsError("ssr must be non-negative")
    if ssr == 0:
        raise StatsError("degenerate fit; AIC undefined")
    return n * math.log(ssr / n) + 2 * (num_params + 1)


# Residuals below this fraction of the data scale are floating-point noise.
RESOLUTION = 1e-12


def _fit_aic(ssr, y, num_params):
    """AIC of a log-space fit, with SSR floored at numerical resolution.

    Exact fits otherwise compare rounding noise through ``ln(ssr)``; flooring
    makes two exact fits tie on SSR so the parameter penalty decides.
    """
    n = len(y)
    floor = n * (RESOLUTION * max(1.0, float(np.abs(y).max()))) ** 2
    try:
        return aic(max(ssr, floor), n, num_params)
    except StatsError:
        return None


@dataclass(frozen=True)
class PowerLawFit:
    gamma: float
    log_intercept: float
    ssr: float
    aic: float | None
    n_points: int

    num_params = 2

    def predict_log(self, k) -> np.ndarray:
        return self.log_intercept - self.gamma * np.log(np.asarray(k, dtype=np.float64))

    def residual_ssr(self, d: DegreeDistribution) -> float:
        r = d.log_p - self.predict_log(d.k)
        return float(r @ r)


@dataclass(frozen=True)
class TwoRegimeFit:
    """Continuous broken power law with the break at ``breakpoint_k``.

    ``ln p = a - gamma1 ln k`` up to the break, then the slope changes to
    ``-gamma2``.
    """

    gamma1: float
    gamma2: float
    breakpoint_k: float
    log_intercept: float
    ssr: float
    aic: float | None
    n_points: int

    num_params = 4

    def predict_log(self, k) -> np.ndarray:
        x = np.log(np.asarray(k, dtype=np.float64))
        xb = math.log(self.breakpoint_k)
        return self.log_intercept - self.gamma1 * np.minimum(x, xb) - self.gamma2 * np.maximum(x - xb, 0.0)

    def residual_ssr(self, d: DegreeDistribution) -> float:
        r = d.log_p - self.predict_log(d.k)
        return float(r @ r)


def fit_power_law(d: DegreeDistribution) -> PowerLawFit:
    """Ordinary least squares of ln p on ln k."""
    n = len(d)
    if n < 3:
        raise StatsError(f"insufficient points for a power-law fit ({n} < 3)")
    x, y = d.log_k, d.log_p
    design = np.column_stack([np.ones(n), -x])
    (a, gamma), *_ = np.linalg.lstsq(design, y, rcond=None)
    r = y - design @ np.array([a, gamma])
    ssr = float(r @ r)
    return PowerLawFit(float(gamma), float(a), ssr, _fit_aic(ssr, y, 2), n)


def fit_two_regime(d: DegreeDistribution) -> TwoRegimeFit:
    """Grid search over observed degrees for the best continuous two-regime fit.

    Each candidate break leaves at least 3 points at or below it and 3 above.
    For a fixed break the model is linear in its three coefficients and is
    solved by least squares; the candidate with the smallest SSR wins, ties
    going to the smaller break.
    """
    n = len(d)
    if n < 7:
        raise StatsError(f"insufficient points for a two-regime fit ({n} < 7)")
    x, y = d.log_k, d.log_p
    best = None
    for j in range(2, n - 3):
        xb = x[j]
        design = np.column_stack([np.ones(n), -np.minimum(x, xb), -np.maximum(x - xb, 0.0)])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        r = y - design @ coef
        ssr = float(r @ r)
        if best is None or ssr < best[0] * (1.0 - 1e-12):
            best = (ssr, j, coef)
    ssr, j, (a, g1, g2) = best
    return TwoRegimeFit(float(g1), float(g2), float(d.k[j]), float(a), ssr, _fit_aic(ssr, y, 4), n)


def classify_degree_distribution(power: PowerLawFit, two: TwoRegimeFit) -> str:
    """``scale-free`` when the power law has the strictly lower AIC, else ``two-regime``."""
    if power.aic is None or two.aic is None:
        raise StatsError("AIC undefined; cannot compare degree-distribution models")
    return SCALE_FREE if power.aic < two.aic else TWO_REGIME


def average_clustering(g: UndirectedGraph, block: int = 4096) -> float:
    """Mean local clustering over all nodes, with C_i = 0 when degree < 2."""
    n = g.n_nodes
    if n == 0:
        raise StatsError("empty graph")
    adj = g.adjacency()
    deg = g.degrees().astype(np.float64)
    tri = np.empty(n)
    for i0 in range(0, n, block):
        rows = adj[i0:i0 + block]
        tri[i0:i0 + block] = np.asarray((rows @ adj).multiply(rows).sum(axis=1)).ravel() / 2.0
    pairs = deg * (deg - 1.0) / 2.0
    local = np.divide(tri, pairs, out=np.zeros(n), where=pairs > 0)
    return float(local.mean())


def er_baseline_cc(n_nodes: int, n_edges: int) -> float:
    """Edge density, the expected clustering of a matched G(n, p) graph."""
    if n_nodes < 2:
        raise StatsError("ER baseline needs at least 2 nodes")
    return 2.0 * n_edges / (n_nodes * (n_nodes - 1.0))


def classify_small_world(cc: float, er_cc: float, ratio_threshold: float = 10.0) -> bool:
    if not ratio_threshold > 1:
        raise ValueError("ratio_threshold must exceed 1")
    return cc > 0 and cc >= ratio_threshold * er_cc


def degree_assortativity(g: UndirectedGraph) -> float:
    """Pearson correlation of degrees over both orientations of every edge."""
    u, v = g.edges()
    if len(u) == 0:
        raise StatsError("assortativity undefined: no edges")
    deg = g.degrees().astype(np.float64)
    x = np.concatenate([deg[u], deg[v]])
    y = np.concatenate([deg[v], deg[u]])
    xc = x - x.mean()
    yc = y - y.mean()
    var = xc @ xc
    if var == 0:
        raise StatsError("assortativity undefined: all edge endpoints have equal degree")
    return float(np.clip((xc @ yc) / var, -1.0, 1.0))


def classify_assortativity(dac: float, neutral_band: float = 0.05) -> str:
    if not neutral_band > 0:
        raise ValueError("neutral_band must be positive")
    if abs(dac) < neutral_band:
        return NEUTRAL
    return ASSORTATIVE if dac > 0 else DISASSORTATIVE


@dataclass(frozen=True)
class StatsConfig:
    ratio_threshold: float = 10.0
    neutral_band: float = 0.05
    log_bins: bool = False
    bins_per_decade: int = 10


@dataclass
class StructureReport:
    """All diagnostics for one network. None marks an undefined value."""

    name: str
    n_nodes: int
    n_edges: int
    n_isolated: int | None
    power_law: PowerLawFit | None
    two_regime: TwoRegimeFit | None
    degree_class: str
    cc: float
    er_cc: float | None
    small_world: bool | None
    dac: float | None
    assortativity_class: str
    errors: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["small_world"] = UNDEFINED if self.small_world is None else self.small_world
        return out


def structure_report(g: UndirectedGraph, config: StatsConfig = StatsConfig(), name: str = "") -> StructureReport:
    """Run every diagnostic on ``g``.

    A failing diagnostic leaves its fields undefined and records the reason in
    ``errors`` instead of aborting the report.
    """
    errors = {}
    power = two = None
    n_isolated = None
    degree_class = UNDEFINED
    try:
        d = degree_distribution(g)
        n_isolated = d.n_isolated
        if config.log_bins:
            d = log_binned(d, config.bins_per_decade)
        try:
            power = fit_power_law(d)
        except StatsError as exc:
            errors["power_law"] = str(exc)
        try:
            two = fit_two_regime(d)
        except StatsError as exc:
            errors["two_regime"] = str(exc)
        if power is not None and two is not None:
            try:
                degree_class = classify_degree_distribution(power, two)
            except StatsError as exc:
                errors["degree_class"] = str(exc)
    except StatsError as exc:
        errors["degree_distribution"] = str(exc)
        n_isolated = g.n_nodes

    cc = average_clustering(g)
    er_cc = small_world = None
    try:
        er_cc = er_baseline_cc(g.n_nodes, g.edge_count)
        small_world = classify_small_world(cc, er_cc, config.ratio_threshold)
    except StatsError as exc:
        errors["er_cc"] = str(exc)

    dac = None
    assort = UNDEFINED
    try:
        dac = degree_assortativity(g)
        assort = classify_assortativity(dac, config.neutral_band)
    except StatsError as exc:
        errors["dac"] = str(exc)

    return StructureReport(
        name=name, n_nodes=g.n_nodes, n_edges=g.edge_count, n_isolated=n_isolated,
        power_law=power, two_regime=two, degree_class=degree_class,
        cc=cc, er_cc=er_cc, small_world=small_world,
        dac=dac, assortativity_class=assort, errors=errors,
    )


def degree_plot_csv(d: DegreeDistribution, power: PowerLawFit | None, two: TwoRegimeFit | None) -> str:
    """CSV with columns ``k,p,power_fit,two_regime_fit`` (fits in probability space)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "p", "power_fit", "two_regime_fit"])
    pf = np.exp(power.predict_log(d.k)) if power is not None else [None] * len(d)
    tf = np.exp(two.predict_log(d.k)) if two is not None else [None] * len(d)
    for k, p, a, b in zip(d.k, d.p, pf, tf):
        w.writerow([repr(float(k)), repr(float(p)),
                    "" if a is None else repr(float(a)), "" if b is None else repr(float(b))])
    return buf.getvalue()
