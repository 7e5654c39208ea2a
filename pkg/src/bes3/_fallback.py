"""Pure numpy versions of the inner loops in ``_kernels.pyx``.

Same signatures, same operation order. Loops that are sequential in time are
vectorised across paths instead, so the fallback stays usable at n = 1e4.
"""
import numpy as np


def norm3d_paths(start, scale, increments, out):
    b, n, _ = increments.shape
    pos = np.empty((b, n + 1, 3))
    pos[:, 0, :] = start
    np.multiply(scale, increments, out=pos[:, 1:, :])
    # cumsum is a sequential left fold, matching x = x + scale * inc
    np.cumsum(pos, axis=1, out=pos)
    x, y, z = pos[..., 0], pos[..., 1], pos[..., 2]
    np.sqrt(x * x + y * y + z * z, out=out)


def euler_paths(r, dt, normals, out, drift=True):
    b, n = normals.shape
    sdt = np.sqrt(dt)
    reflects = np.zeros(b, dtype=np.int64)
    x = np.full(b, float(r))
    out[:, 0] = x
    for k in range(n):
        y = x + sdt * normals[:, k]
        if drift:
            y = y + dt / x
        neg = y <= 0.0
        if neg.any():
            y[neg] = -y[neg]
            reflects += neg
        out[:, k + 1] = y
        x = y
    return reflects


def bes3_bridge_minima(values, dt, uniforms, out):
    x = values[:, :-1]
    y = values[:, 1:]
    q = -np.expm1(-2.0 * x * y / dt)
    c = -0.5 * dt * np.log1p(-uniforms * q)
    d = x - y
    out[...] = 0.5 * ((x + y) - np.sqrt(d * d + 4.0 * c))


def brownian_first_crossing(x0, level, dt, normals, uniforms, out, limit):
    if limit <= 0:
        out[0] = x0
        return 0
    sdt = np.sqrt(dt)
    path = np.empty(limit + 1)
    path[0] = x0
    np.multiply(sdt, normals[:limit], out=path[1:])
    np.cumsum(path, out=path)
    prev, nxt = path[:-1], path[1:]
    with np.errstate(over="ignore"):
        p = np.exp(-2.0 * (prev - level) * (nxt - level) / dt)
    hit = (nxt <= level) | (uniforms[:limit] < p)
    if hit.any():
        j = int(np.argmax(hit)) + 1
        out[:j] = path[:j]
        return j
    out[: limit + 1] = path
    return 0
