"""Statistical checks tying the simulators to the closed-form laws.

Every check returns a :class:`CheckResult` whose verdict is a pure function
of the recorded ``statistic`` and ``threshold``. Multi-part checks keep each
part in ``detail["parts"]`` and surface the worst part at top level.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from . import closed_forms as cf
from .rng import RngStream
from .sampling import sample_first_passage_many, sample_g_exact_many
from .simulators import (
    ConfigError,
    SimConfig,
    _pre_g,
    norm3d_ensemble,
    simulate_williams,
    terminal_values,
)

ALPHA = 0.001
SCHEMA_VERSION = 1
CHECK_STRIDE = 1 << 20  # substream block per check
ARM_STRIDE = 1 << 17  # substream block per arm inside a check


def ks_coefficient(alpha: float = ALPHA) -> float:
    """c(alpha) with P(sup|B| > c) ~ alpha for the Kolmogorov distribution."""
    return math.sqrt(-math.log(alpha / 2.0) / 2.0)


def ks_critical(n: int, m: int = 0, alpha: float = ALPHA) -> float:
    if m:
        return ks_coefficient(alpha) * math.sqrt((n + m) / (n * m))
    return ks_coefficient(alpha) / math.sqrt(n)


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class KsResult:
    statistic: float
    n: int
    m: int
    p_value: float


def ks_two_sample(x: Sequence[float], y: Sequence[float]) -> KsResult:
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    n, m = len(x), len(y)
    if n == 0 or m == 0:
        raise UsageError("ks_two_sample needs two non-empty samples")
    pts = np.concatenate([x, y])
    fx = np.searchsorted(x, pts, side="right") / n
    fy = np.searchsorted(y, pts, side="right") / m
    d = float(np.max(np.abs(fx - fy)))
    ne = n * m / (n + m)
    return KsResult(d, n, m, float(special.kolmogorov(math.sqrt(ne) * d)))


def ks_one_sample(x: Sequence[float], cdf: Callable) -> KsResult:
    x = np.sort(np.asarray(x, dtype=float))
    n = len(x)
    if n == 0:
        raise UsageError("ks_one_sample needs a non-empty sample")
    f = np.asarray(np.vectorize(cdf, otypes=[float])(x))
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    d = float(max(d_plus, d_minus))
    return KsResult(d, n, 0, float(special.kolmogorov(math.sqrt(n) * d)))


def mc_mean_ci(samples: Sequence[float]) -> tuple[float, float]:
    """Sample mean and its standard error (unbiased variance)."""
    s = np.asarray(samples, dtype=float)
    if s.size < 2:
        raise UsageError("mc_mean_ci needs at least 2 samples")
    return float(s.mean()), float(s.std(ddof=1) / math.sqrt(s.size))


@dataclass
class CheckResult:
    name: str
    estimate: float
    target: float
    tolerance: float
    passed: bool
    statistic: float = math.nan
    threshold: float = math.nan
    status: str = "ok"  # "ok" or "errored"
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _part(name, estimate, target, tolerance, *, statistic=None, **extra):
    stat = abs(estimate - target) if statistic is None else statistic
    return {
        "name": name,
        "estimate": float(estimate),
        "target": float(target),
        "tolerance": float(tolerance),
        "statistic": float(stat),
        "threshold": float(tolerance),
        "passed": bool(stat <= tolerance),
        **extra,
    }


def _ks_part(name, ks: KsResult, critical, **extra):
    return _part(name, ks.statistic, 0.0, critical, statistic=ks.statistic,
                 n=ks.n, m=ks.m, p_value=ks.p_value, **extra)


def _combine(name, parts, **detail) -> CheckResult:
    def ratio(p):
        if p["threshold"] > 0:
            return p["statistic"] / p["threshold"]
        return 0.0 if p["statistic"] == 0 else math.inf

    worst = max(parts, key=ratio)
    return CheckResult(
        name=name,
        estimate=worst["estimate"],
        target=worst["target"],
        tolerance=worst["tolerance"],
        statistic=worst["statistic"],
        threshold=worst["threshold"],
        passed=all(p["passed"] for p in parts),
        detail={"worst_part": worst["name"], "parts": parts, **detail},
    )


# --- named checks -------------------------------------------------------------

def verify_marginal_agreement(
    r: float = 1.0,
    T: float = 1.0,
    dt: dict | float | None = None,
    n: int = 10_000,
    seed: int = 7,
    *,
    methods: Sequence[str] = ("norm3d", "euler", "williams"),
    stream_base: int = 0,
    mutation: dict | None = None,
) -> CheckResult:
    """Pairwise two-sample KS of R_T between the constructions.

    ``methods`` may repeat a method; each arm still gets its own substreams.
    """
    mutation = mutation or {}
    steps = {"norm3d": 1e-3, "euler": 1e-4, "williams": 1e-4}
    if isinstance(dt, dict):
        steps.update(dt)
    elif dt is not None:
        steps = {k: float(dt) for k in steps}
    samples = []
    for arm, method in enumerate(methods):
        cfg = SimConfig(r=r, horizon=T, dt=steps[method], n_paths=n, seed=seed, method=method)
        kw = {}
        if method == "euler" and "drift" in mutation:
            kw["drift"] = mutation["drift"]
        if method == "williams":
            kw = {k: mutation[k] for k in ("post_shift", "u_power") if k in mutation}
        samples.append(terminal_values(cfg, stream_offset=stream_base + arm * ARM_STRIDE, **kw))
    crit = ks_critical(n, n)
    parts = []
    for i in range(len(methods)):
        for j in range(i + 1, len(methods)):
            ks = ks_two_sample(samples[i], samples[j])
            parts.append(_ks_part(f"{methods[i]}~{methods[j]}#{i}{j}", ks, crit))
    return _combine("marginal_agreement", parts, r=r, T=T, n=n, seed=seed,
                    dt={m: steps[m] for m in methods})


def verify_g_matches_hitting(
    r: float = 1.0, n: int = 100_000, seed: int = 7, *, stream_base: int = 0,
    mutation: dict | None = None,
) -> CheckResult:
    """g from the exact sampler against an independent r^2 U^2 / M^2."""
    if n < 1000:
        raise ConfigError(f"n must be >= 1000, got {n}")
    u_power = (mutation or {}).get("u_power", 1.0)
    _, _, g = sample_g_exact_many(RngStream(seed, stream_base), r, n, u_power=u_power)
    ref = RngStream(seed, stream_base + 1)
    u = ref.draw_uniform01(n)
    t = sample_first_passage_many(ref, r * u)
    ks = ks_two_sample(g, t)
    return _combine("g_matches_hitting", [_ks_part("g~T_rU", ks, ks_critical(n, n))],
                    r=r, n=n, seed=seed)


def verify_azema_identity(
    r: float = 1.0,
    t: float = 1.0,
    dt: float = 0.01,
    n: int = 100_000,
    seed: int = 7,
    *,
    t_long: float = 200.0,
    dt_long: float = 0.05,
    n_long: int = 10_000,
    stream_base: int = 0,
) -> CheckResult:
    """E[I_t / R_t] and P(g_hat > t) against 1 - P(g <= t)."""
    if t < 0:
        raise ConfigError(f"t must be >= 0, got {t}")
    if t_long < 10 * t:
        raise ConfigError(f"t_long={t_long} < 10 t; the finite-horizon bias would dominate")
    target = 1.0 - cf.g_cdf(t, r)
    allowance = cf.g_tail_bound(t_long, r)
    if t == 0:
        e1, se1 = 1.0, 0.0
    else:
        ens = norm3d_ensemble(
            SimConfig(r=r, horizon=t, dt=dt, n_paths=n, seed=seed),
            stream_offset=stream_base, checkpoint=t,
        )
        e1, se1 = mc_mean_ci(ens.extras["inf_at"] / ens.extras["value_at"])
    long = norm3d_ensemble(
        SimConfig(r=r, horizon=t_long, dt=dt_long, n_paths=n_long, seed=seed),
        stream_offset=stream_base + ARM_STRIDE,
    )
    k_t = int(round(t / dt_long))
    e3, se3 = mc_mean_ci((long.argmin_interval >= k_t).astype(float))
    parts = [
        _part("mean(I_t/R_t)", e1, target, 3 * se1, stderr=se1, n=n, dt=dt),
        _part("P(g_hat>t)", e3, target, 3 * se3 + allowance, stderr=se3, n=n_long,
              dt=dt_long, t_long=t_long, allowance=allowance),
    ]
    return _combine("azema_identity", parts, r=r, t=t, seed=seed)


def verify_inf_uniform(
    r: float = 1.0,
    n: int = 10_000,
    seed: int = 7,
    T_long: float = 200.0,
    dt: float = 0.05,
    *,
    n_williams: int = 10_000,
    dt_williams: float = 0.01,
    stream_base: int = 0,
    mutation: dict | None = None,
) -> CheckResult:
    """Ultimate minimum uniform on [0, r], from Williams splices and long norm3d runs."""
    mutation = mutation or {}
    wcfg = SimConfig(r=r, horizon=10 * dt_williams, dt=dt_williams, n_paths=n_williams,
                     seed=seed, method="williams")
    kw = {k: mutation[k] for k in ("post_shift", "u_power") if k in mutation}
    wmin = np.array([
        simulate_williams(wcfg, RngStream(seed, stream_base + i), **kw).concatenated().values.min()
        for i in range(n_williams)
    ])
    cdf = lambda x: cf.ultimate_inf_cdf(x, r)  # noqa: E731
    ks_w = ks_one_sample(wmin, cdf)

    ens = norm3d_ensemble(
        SimConfig(r=r, horizon=T_long, dt=dt, n_paths=n, seed=seed),
        stream_offset=stream_base + ARM_STRIDE,
    )
    allowance = cf.g_tail_bound(T_long, r)
    ks_n = ks_one_sample(ens.inf_total, cdf)
    below, se = mc_mean_ci((ens.inf_total <= r / 2).astype(float))
    parts = [
        _ks_part("williams_minima~U[0,r]", ks_w, ks_critical(n_williams), dt=dt_williams),
        _ks_part("norm3d_minima~U[0,r]", ks_n, ks_critical(n) + allowance,
                 allowance=allowance, t_long=T_long, dt=dt),
        _part("P(I<=r/2)", below, 0.5, 3 * se + allowance, stderr=se, allowance=allowance),
    ]
    return _combine("inf_uniform", parts, r=r, seed=seed)


def verify_laplace_g(
    r: float | Sequence[float] = (1.0, 6.0),
    lambda_grid: Sequence[float] = (0.0, 0.5, 2.0),
    n: int = 1_000_000,
    seed: int = 7,
    *,
    stream_base: int = 0,
    mutation: dict | None = None,
) -> CheckResult:
    """Monte Carlo E[exp(-lam g)] against the closed-form transform."""
    if n < 100_000:
        raise ConfigError(f"n must be >= 1e5, got {n}")
    u_power = (mutation or {}).get("u_power", 1.0)
    rs = (r,) if np.isscalar(r) else tuple(r)
    parts = []
    for k, rv in enumerate(rs):
        _, _, g = sample_g_exact_many(RngStream(seed, stream_base + k), rv, n, u_power=u_power)
        for lam in lambda_grid:
            mean, se = mc_mean_ci(np.exp(-lam * g))
            parts.append(_part(f"r={rv:g},lambda={lam:g}", mean, cf.g_laplace(lam, rv), 3 * se,
                               stderr=se))
    return _combine("laplace_g", parts, n=n, seed=seed)


# phi(a) = a**k: the Doob side  int_0^r phi(a) (da / a) P_r(T_a < inf), with
# P_r(T_a < inf) = a / r, integrates to r**k / (k + 1)
DOOB_TEST_FUNCTIONS = {
    "1": (lambda a: np.ones_like(a), lambda r: 1.0),
    "a": (lambda a: a, lambda r: r / 2.0),
    "a^2": (lambda a: a * a, lambda r: r * r / 3.0),
}


def verify_doob_scalar(
    r: float | Sequence[float] = (1.0, 6.0),
    n: int = 100_000,
    seed: int = 7,
    *,
    stream_base: int = 0,
    mutation: dict | None = None,
) -> CheckResult:
    """E[phi(I_inf)] from simulation against the Doob-side integral, Phi = 1."""
    if n < 100_000:
        raise ConfigError(f"n must be >= 1e5, got {n}")
    u_power = (mutation or {}).get("u_power", 1.0)
    rs = (r,) if np.isscalar(r) else tuple(r)
    parts = []
    for k, rv in enumerate(rs):
        _, a, _ = sample_g_exact_many(RngStream(seed, stream_base + k), rv, n, u_power=u_power)
        for label, (phi, rhs) in DOOB_TEST_FUNCTIONS.items():
            mean, se = mc_mean_ci(phi(a))
            parts.append(_part(f"r={rv:g},phi={label}", mean, rhs(rv), 3 * se,
                               stderr=se))
    return _combine("doob_scalar", parts, n=n, seed=seed)


def verify_pre_g_functionals(
    r: float = 1.0,
    n: int = 10_000,
    seed: int = 7,
    *,
    t_long: float = 200.0,
    dt: float = 0.02,
    bin_fraction: tuple[float, float] = (0.45, 0.55),
    stream_base: int = 0,
) -> CheckResult:
    """Pre-g segment of BES(3) given I_inf = a against Brownian motion stopped at T_a.

    BES(3) paths come from long norm3d runs with exact interval minima; paths
    whose minimum falls in the bin are compared, duration and area functionals,
    with Brownian motions from r run to each path's own minimum level.
    """
    lo, hi = bin_fraction[0] * r, bin_fraction[1] * r

    def area_before(values, minima, argmin):
        # trapezoid area up to the start of the argmin interval, plus half that interval
        csum = np.concatenate(
            [np.zeros((len(values), 1)),
             np.cumsum(0.5 * dt * (values[:, :-1] + values[:, 1:]), axis=1)], axis=1)
        rows = np.arange(len(values))
        head = csum[rows, argmin]
        tail = 0.25 * dt * (values[rows, argmin] + minima[rows, argmin])
        return {"pre_area": head + tail}

    ens = norm3d_ensemble(SimConfig(r=r, horizon=t_long, dt=dt, n_paths=n, seed=seed),
                          stream_offset=stream_base, reducer=area_before)
    sel = (ens.inf_total >= lo) & (ens.inf_total <= hi)
    levels = ens.inf_total[sel]
    g_hat = (ens.argmin_interval[sel] + 0.5) * dt
    areas = ens.extras["pre_area"][sel]
    m = int(sel.sum())
    if m < 100:
        raise ConfigError(f"only {m} paths landed in the I_inf bin; raise n")

    fp = RngStream(seed, stream_base + ARM_STRIDE)
    t_match = sample_first_passage_many(fp, r - levels)
    t_fixed = sample_first_passage_many(fp, 0.5 * r, size=m)

    max_steps = int(round(t_long / dt))
    bm_areas = []
    for i, a in enumerate(levels):
        rng = RngStream(seed, stream_base + 2 * ARM_STRIDE + i)
        hit, _, _, pieces = _pre_g(rng, r, a, dt, max_steps, keep_path=True)
        if not hit:
            continue
        v = np.concatenate(pieces)
        bm_areas.append(0.5 * dt * float(np.sum(v[:-1] + v[1:])) + 0.25 * dt * (v[-1] + a))
    allowance = cf.g_tail_bound(t_long, r)
    ks_d = ks_two_sample(g_hat, t_match)
    ks_a = ks_two_sample(areas, bm_areas)
    parts = [
        _ks_part("duration~T_a", ks_d, ks_critical(m, m) + allowance, allowance=allowance),
        _ks_part("area~BM_area", ks_a, ks_critical(m, len(bm_areas)) + allowance,
                 allowance=allowance),
    ]
    fixed = ks_two_sample(g_hat, t_fixed)
    return _combine("pre_g_functionals", parts, r=r, n=n, seed=seed, n_in_bin=m,
                    bin=[lo, hi], dt=dt, bin_width_D_fixed_distance=fixed.statistic)


# --- suite ----------------------------------------------------------------------

CHECKS = {
    "marginal_agreement": verify_marginal_agreement,
    "g_matches_hitting": verify_g_matches_hitting,
    "azema_identity": verify_azema_identity,
    "inf_uniform": verify_inf_uniform,
    "laplace_g": verify_laplace_g,
    "doob_scalar": verify_doob_scalar,
    "pre_g_functionals": verify_pre_g_functionals,
}
# checks that take a path-count override, and the keyword it maps to
PATH_KEYS = {
    "marginal_agreement": ("n",),
    "azema_identity": ("n", "n_long"),
    "inf_uniform": ("n", "n_williams"),
    "pre_g_functionals": ("n",),
}
MUTATIONS = {
    "no_drift": {"drift": False},
    "no_post_shift": {"post_shift": False},
    "biased_u": {"u_power": 2.0},
}
MUTABLE = {"marginal_agreement", "g_matches_hitting", "inf_uniform", "laplace_g", "doob_scalar"}


@dataclass
class VerificationReport:
    checks: list
    config: dict
    seed: int
    wall_time: float = 0.0
    timings: dict = field(default_factory=dict)  # seconds per check, not serialised

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "seed": self.seed,
            "config": self.config,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }

    def to_json(self) -> str:
        # wall time is left out so reruns are byte-identical
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=True) + "\n"

    def to_text(self) -> str:
        lines = []
        for c in self.checks:
            verdict = "ERROR" if c.status == "errored" else ("PASS" if c.passed else "FAIL")
            lines.append(f"{verdict:5s} {c.name:20s} statistic={c.statistic:.6g} "
                         f"threshold={c.threshold:.6g} ({self.timings.get(c.name, 0.0):.1f}s)")
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'} "
                     f"(seed={self.seed}, {self.wall_time:.1f}s)")
        return "\n".join(lines) + "\n"


def resolve_scenarios(scenario: str | Sequence[str]) -> list[str]:
    names = list(CHECKS) if scenario == "all" else (
        [scenario] if isinstance(scenario, str) else list(scenario))
    unknown = [s for s in names if s not in CHECKS]
    if unknown:
        raise UsageError(f"unknown scenario(s) {unknown}; valid: all, {', '.join(CHECKS)}")
    return names


def run_all(
    seed: int = 7,
    scenario_set: str | Sequence[str] = "all",
    *,
    paths: int | None = None,
    mutation: str | None = None,
    overrides: dict | None = None,
) -> VerificationReport:
    """Run the named checks, each on its own substream block, merged by name.

    ``overrides`` maps check name to extra keyword arguments.
    """
    names = resolve_scenarios(scenario_set)
    if mutation is not None and mutation not in MUTATIONS:
        raise UsageError(f"unknown mutation {mutation!r}; valid: {', '.join(MUTATIONS)}")
    overrides = overrides or {}
    start = time.perf_counter()
    results = []
    timings = {}
    index = {name: i for i, name in enumerate(CHECKS)}
    for name in sorted(names):
        t0 = time.perf_counter()
        kwargs = {"seed": seed, "stream_base": index[name] * CHECK_STRIDE}
        if paths is not None:
            kwargs.update({k: paths for k in PATH_KEYS.get(name, ())})
        if mutation is not None and name in MUTABLE:
            kwargs["mutation"] = MUTATIONS[mutation]
        kwargs.update(overrides.get(name, {}))
        try:
            results.append(CHECKS[name](**kwargs))
        except (ConfigError, UsageError, cf.DomainError, cf.QuadratureError) as exc:
            results.append(CheckResult(name, math.nan, math.nan, math.nan, False,
                                       status="errored", detail={"error": str(exc)}))
        timings[name] = time.perf_counter() - t0
    config = {"scenarios": sorted(names), "paths": paths, "mutation": mutation,
              "overrides": overrides}
    return VerificationReport(results, config, seed, time.perf_counter() - start, timings)
