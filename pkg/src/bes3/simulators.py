"""Path-level constructions of BES(3) started at r > 0.

Three routes to the same law:

``norm3d``
    R_t = |(r, 0, 0) + W_t| with W a 3-D Brownian motion, exact at grid times.
``euler``
    Euler-Maruyama on dR = dB + dt / R, reflecting at 0.
``williams``
    Brownian motion from r until it first hits a = rU, then a plus an
    independent BES(3) started at 0.

``figure1`` is the literal random-walk picture: the norm of three
U[-1/2, 1/2] walks from (4, 4, 2), one step per time unit.

Path i of a batch always draws from ``RngStream(seed, i + stream_offset)``.
Draw order per path:

* norm3d: ``3n`` normals (step-major), then, if interval minima are
  requested, ``n`` uniforms.
* euler: ``n`` normals.
* williams: one uniform; then pre-g chunks of ``CHUNK`` normals followed by
  ``CHUNK`` uniforms (always full chunks); if the pre-g cap is reached, one
  more normal; then ``3m`` normals for the post-g segment.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .rng import RngStream
from .sampling import _nonzero_normal

METHODS = ("norm3d", "euler", "williams", "figure1")
CHUNK = 1024
FIGURE1_START = (4.0, 4.0, 2.0)
FIGURE1_STEPS = 1200


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    r: float = 1.0
    horizon: float = 1.0
    dt: float = 1e-3
    n_paths: int = 10_000
    seed: int = 7
    method: str = "norm3d"
    pre_cap: float | None = None  # williams only; default 50 r^2

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        for name in ("r", "horizon", "dt"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive finite number, got {v!r}")
        if self.dt > self.horizon:
            raise ConfigError(f"dt={self.dt} exceeds horizon={self.horizon}")
        ratio = self.horizon / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ConfigError(f"horizon/dt={ratio!r} is not an integer step count")
        if self.n_paths < 1:
            raise ConfigError(f"n_paths must be >= 1, got {self.n_paths}")
        if self.pre_cap is not None and not self.pre_cap > 0:
            raise ConfigError(f"pre_cap must be > 0, got {self.pre_cap}")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def pre_cap_time(self) -> float:
        return self.pre_cap if self.pre_cap is not None else 50.0 * self.r * self.r


@dataclass
class SamplePath:
    times: np.ndarray
    values: np.ndarray
    reflect_count: int = 0
    # exact minimum of the continuous path over each grid interval, when sampled
    interval_minima: np.ndarray | None = None

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class PathSummary:
    terminal: float
    running_min: float
    argmin_time: float
    argmin_index: int


@dataclass
class WilliamsSample:
    u: float
    a: float
    g_grid: float
    pre_path: SamplePath  # grid times in [0, g_grid)
    post_path: SamplePath  # own grid starting at 0, values a + BES(3) from 0
    capped: bool = False  # pre-g cap reached; g completed by an exact first passage

    def concatenated(self) -> SamplePath:
        """Pre and post segments on one time axis, post times shifted by g_grid."""
        times = np.concatenate([self.pre_path.times, self.post_path.times + self.g_grid])
        values = np.concatenate([self.pre_path.values, self.post_path.values])
        return SamplePath(times, values)


def _grid(n: int, dt: float) -> np.ndarray:
    return np.arange(n + 1) * dt


def path_summary(path: SamplePath) -> PathSummary:
    """Grid running minimum with the earliest argmin."""
    if len(path.values) == 0:
        raise ValueError("empty path")
    k = int(np.argmin(path.values))  # argmin returns the first occurrence
    return PathSummary(
        terminal=float(path.values[-1]),
        running_min=float(path.values[k]),
        argmin_time=float(path.times[k]),
        argmin_index=k,
    )


def running_min(values: np.ndarray) -> np.ndarray:
    return np.minimum.accumulate(values, axis=-1)


# --- norm3d -----------------------------------------------------------------

def _norm3d_draws(rng, n: int, with_minima: bool):
    inc = np.asarray(rng.draw_standard_normal(3 * n), dtype=float).reshape(n, 3)
    unif = np.asarray(rng.draw_uniform01(n), dtype=float) if with_minima else None
    return inc, unif


def _norm3d_core(r, dt, inc, unif):
    b, n, _ = inc.shape
    values = np.empty((b, n + 1))
    kernels.norm3d_paths(np.array([r, 0.0, 0.0]), math.sqrt(dt), inc, values)
    minima = None
    if unif is not None:
        minima = np.empty((b, n))
        kernels.bes3_bridge_minima(values, dt, unif, minima)
    return values, minima


def simulate_norm3d(config: SimConfig, rng, *, with_minima: bool = False) -> SamplePath:
    """One path of |(r,0,0) + W| on the grid ``k * dt``.

    With ``with_minima`` the exact infimum over each grid interval is sampled
    from the BES(3) bridge between the endpoint values.
    """
    n = config.n_steps
    inc, unif = _norm3d_draws(rng, n, with_minima)
    values, minima = _norm3d_core(
        config.r, config.dt, inc[None], None if unif is None else unif[None]
    )
    return SamplePath(
        _grid(n, config.dt), values[0],
        interval_minima=None if minima is None else minima[0],
    )


def norm3d_batch(config: SimConfig, stream_ids, *, with_minima: bool = False):
    """Values ``(b, n+1)`` and optional interval minima ``(b, n)`` for the given streams."""
    n = config.n_steps
    b = len(stream_ids)
    inc = np.empty((b, n, 3))
    unif = np.empty((b, n)) if with_minima else None
    for j, sid in enumerate(stream_ids):
        i3, u = _norm3d_draws(RngStream(config.seed, sid), n, with_minima)
        inc[j] = i3
        if with_minima:
            unif[j] = u
    return _norm3d_core(config.r, config.dt, inc, unif)


# --- euler ------------------------------------------------------------------

def euler_batch(config: SimConfig, stream_ids, *, drift: bool = True):
    """Values ``(b, n+1)`` and reflect counts ``(b,)``; ``drift=False`` is a mutation."""
    n = config.n_steps
    normals = np.empty((len(stream_ids), n))
    for j, sid in enumerate(stream_ids):
        normals[j] = RngStream(config.seed, sid).draw_standard_normal(n)
    values = np.empty((len(stream_ids), n + 1))
    reflects = kernels.euler_paths(float(config.r), float(config.dt), normals, values, bool(drift))
    return values, np.asarray(reflects)


def simulate_euler_sde(config: SimConfig, rng, *, drift: bool = True) -> SamplePath:
    """One Euler-Maruyama path; non-positive steps are reflected and counted."""
    n = config.n_steps
    normals = np.asarray(rng.draw_standard_normal(n), dtype=float).reshape(1, n)
    values = np.empty((1, n + 1))
    reflects = kernels.euler_paths(float(config.r), float(config.dt), normals, values, bool(drift))
    return SamplePath(_grid(n, config.dt), values[0], reflect_count=int(reflects[0]))


# --- williams ---------------------------------------------------------------

def _pre_g(rng, r: float, a: float, dt: float, max_steps: int, keep_path: bool):
    """Brownian motion from r on the grid until it crosses a, at most ``max_steps`` steps.

    Returns (crossing step or 0, steps run, last value, recorded values).
    """
    pieces = []
    x = r
    done = 0
    buf = np.empty(CHUNK + 1)
    while done < max_steps:
        normals = np.asarray(rng.draw_standard_normal(CHUNK), dtype=float)
        unif = np.asarray(rng.draw_uniform01(CHUNK), dtype=float)
        limit = min(CHUNK, max_steps - done)
        j = kernels.brownian_first_crossing(x, a, dt, normals, unif, buf, limit)
        if j:
            if keep_path:
                pieces.append(buf[:j].copy() if done == 0 else buf[1:j].copy())
            return done + j, done + j, buf[j - 1], pieces
        if keep_path:
            pieces.append(buf[: limit + 1].copy() if done == 0 else buf[1 : limit + 1].copy())
        x = buf[limit]
        done += limit
    return 0, done, x, pieces


def _post_g(rng, m: int, dt: float, a: float, shift: bool) -> np.ndarray:
    inc = np.asarray(rng.draw_standard_normal(3 * m), dtype=float).reshape(1, m, 3)
    values = np.empty((1, m + 1))
    kernels.norm3d_paths(np.zeros(3), math.sqrt(dt), inc, values)
    return a + values[0] if shift else values[0]


def _draw_u(rng, u_power: float) -> float:
    u = rng.draw_uniform01()
    return u**u_power if u_power != 1.0 else u


def simulate_williams(
    config: SimConfig, rng, *, post_shift: bool = True, u_power: float = 1.0
) -> WilliamsSample:
    """Splice a Brownian pre-g segment and a shifted BES(3)-from-0 post-g segment.

    ``config.horizon`` is the post-g length. The pre-g segment runs at most
    ``config.pre_cap_time``; past the cap the remaining passage time from the
    current value down to a is drawn exactly and the grid resumes at the
    rounded-up splice time. ``post_shift=False`` and ``u_power != 1`` are
    mutations for verification only.
    """
    r, dt = config.r, config.dt
    u = _draw_u(rng, u_power)
    a = r * u
    cap_steps = max(1, int(math.ceil(config.pre_cap_time / dt)))
    capped = False
    if a >= r:
        hit, pieces = 0, []
        splice_step = 0
    else:
        hit, done, x, pieces = _pre_g(rng, r, a, dt, cap_steps, keep_path=True)
        if hit:
            splice_step = hit
        else:
            capped = True
            n = _nonzero_normal(rng)
            g = done * dt + (x - a) ** 2 / (n * n)
            splice_step = max(done + 1, int(math.ceil(g / dt)))
    pre_values = np.concatenate(pieces) if pieces else np.empty(0)
    pre = SamplePath(np.arange(len(pre_values)) * dt, pre_values)
    m = config.n_steps
    post = SamplePath(_grid(m, dt), _post_g(rng, m, dt, a, post_shift))
    return WilliamsSample(u=u, a=a, g_grid=splice_step * dt, pre_path=pre, post_path=post,
                          capped=capped)


def williams_terminal(
    config: SimConfig, rng, *, post_shift: bool = True, u_power: float = 1.0
) -> float:
    """Value of the Williams splice at time ``config.horizon`` from the start.

    Runs the pre-g segment only up to the horizon and the post-g segment only
    for the time left, consuming draws in the same order as
    ``simulate_williams`` so both agree on shared streams.
    """
    r, dt = config.r, config.dt
    n = config.n_steps
    u = _draw_u(rng, u_power)
    a = r * u
    if a >= r:
        hit = 0
        splice = 0
    else:
        hit, done, x, _ = _pre_g(rng, r, a, dt, n, keep_path=False)
        if not hit:
            return float(x)
        splice = hit
    post = _post_g(rng, n - splice, dt, a, post_shift)
    return float(post[-1])


# --- figure 1 ---------------------------------------------------------------

def simulate_figure1_walk(rng, steps: int = FIGURE1_STEPS, start=FIGURE1_START) -> SamplePath:
    """Norm of three independent U[-1/2, 1/2] random walks; time k = step k."""
    if steps < 0:
        raise ConfigError(f"steps must be >= 0, got {steps}")
    inc = np.asarray(rng.draw_uniform01(3 * steps), dtype=float).reshape(1, steps, 3) - 0.5
    values = np.empty((1, steps + 1))
    kernels.norm3d_paths(np.asarray(start, dtype=float), 1.0, inc, values)
    return SamplePath(np.arange(steps + 1, dtype=float), values[0])


# --- batching ---------------------------------------------------------------

def worker_count() -> int:
    """``BES3_THREADS`` (0 or unset = auto). Affects speed only, never results."""
    raw = os.environ.get("BES3_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"BES3_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError(f"BES3_THREADS must be >= 0, got {n}")
    return n or (os.cpu_count() or 1)


def map_batches(fn, n_paths: int, *, stream_offset: int = 0, batch_size: int = 500):
    """Apply ``fn(stream_ids)`` over consecutive path batches, results in batch order."""
    batches = [
        range(stream_offset + lo, stream_offset + min(n_paths, lo + batch_size))
        for lo in range(0, n_paths, batch_size)
    ]
    workers = min(worker_count(), len(batches)) or 1
    if workers == 1:
        return [fn(b) for b in batches]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, batches))


def batch_size_for(n_steps: int, budget: int = 2_000_000) -> int:
    return max(1, min(2000, budget // max(1, n_steps)))


def simulate_paths(config: SimConfig, *, stream_offset: int = 0) -> list:
    """All ``config.n_paths`` paths; WilliamsSample for williams, SamplePath otherwise."""
    seed = config.seed
    out = []
    for i in range(config.n_paths):
        rng = RngStream(seed, stream_offset + i)
        if config.method == "norm3d":
            out.append(simulate_norm3d(config, rng))
        elif config.method == "euler":
            out.append(simulate_euler_sde(config, rng))
        elif config.method == "williams":
            out.append(simulate_williams(config, rng))
        else:
            out.append(simulate_figure1_walk(rng, config.n_steps))
    return out


def terminal_values(config: SimConfig, *, stream_offset: int = 0, **mutation) -> np.ndarray:
    """R at ``config.horizon`` for every path, by the configured method."""
    n = config.n_steps
    if config.method == "norm3d":
        def fn(ids):
            return norm3d_batch(config, ids)[0][:, -1]
    elif config.method == "euler":
        def fn(ids):
            return euler_batch(config, ids, **mutation)[0][:, -1]
    elif config.method == "williams":
        def fn(ids):
            return np.array([williams_terminal(config, RngStream(config.seed, i), **mutation)
                             for i in ids])
    else:
        raise ConfigError("terminal_values does not support figure1")
    parts = map_batches(fn, config.n_paths, stream_offset=stream_offset,
                        batch_size=batch_size_for(n))
    return np.concatenate(parts)


@dataclass
class EnsembleStats:
    """Summaries of norm3d paths with exact interval minima."""

    terminal: np.ndarray
    inf_total: np.ndarray  # exact infimum over [0, horizon]
    argmin_interval: np.ndarray  # index k of the interval [k dt, (k+1) dt] holding it
    extras: dict = field(default_factory=dict)


def norm3d_ensemble(config: SimConfig, *, stream_offset: int = 0, checkpoint: float | None = None,
                    reducer=None) -> EnsembleStats:
    """Batch norm3d with exact minima, reduced to per-path summaries.

    ``checkpoint`` (a grid time) adds ``value_at``/``inf_at`` extras.
    ``reducer(values, minima, argmin)`` may return a dict of extra per-path arrays.
    """
    n = config.n_steps
    kc = None
    if checkpoint is not None:
        kc = int(round(checkpoint / config.dt))
        if not 0 <= kc <= n or abs(kc * config.dt - checkpoint) > 1e-9 * max(1.0, checkpoint):
            raise ConfigError(f"checkpoint {checkpoint} is not a grid time of the config")

    def fn(ids):
        values, minima = norm3d_batch(config, ids, with_minima=True)
        argmin = np.argmin(minima, axis=1)
        rows = np.arange(len(ids))
        out = {
            "terminal": values[:, -1],
            "inf_total": minima[rows, argmin],
            "argmin_interval": argmin,
        }
        if kc is not None:
            out["value_at"] = values[:, kc]
            out["inf_at"] = minima[:, :kc].min(axis=1) if kc > 0 else values[:, 0]
        if reducer is not None:
            out.update(reducer(values, minima, argmin))
        return out

    parts = map_batches(fn, config.n_paths, stream_offset=stream_offset,
                        batch_size=batch_size_for(4 * n))
    merged = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}
    return EnsembleStats(
        terminal=merged.pop("terminal"),
        inf_total=merged.pop("inf_total"),
        argmin_interval=merged.pop("argmin_interval"),
        extras=merged,
    )
