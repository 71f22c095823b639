"""LSTM scan forward/backward kernels.

Vectorized numpy beats a JIT here: the loops are dominated by SIMD
transcendentals and BLAS products over (batch, 4d) slabs.  Gate layout along
the fused weight axis is (input, forget, candidate, output).
"""

from __future__ import annotations

import numpy as np


def scan_forward(xproj, wh):
    """xproj: (B, n, 4d) input projections incl. bias; wh: (d, 4d).

    Returns (hs, gates_i, gates_f, gates_g, gates_o, cells, prev_h) where
    gate/cell stacks are (n, B, d) and hs is (B, n, d).
    """
    batch, n, four_d = xproj.shape
    d = four_d // 4
    hs = np.empty((batch, n, d))
    gates_i = np.empty((n, batch, d))
    gates_f = np.empty((n, batch, d))
    gates_g = np.empty((n, batch, d))
    gates_o = np.empty((n, batch, d))
    cells = np.empty((n, batch, d))
    prev_h = np.empty((n, batch, d))
    h = np.zeros((batch, d))
    c = np.zeros((batch, d))
    for t in range(n):
        prev_h[t] = h
        z = xproj[:, t] + np.dot(h, wh)
        i = 1.0 / (1.0 + np.exp(-z[:, :d]))
        f = 1.0 / (1.0 + np.exp(-z[:, d:2 * d]))
        g = np.tanh(z[:, 2 * d:3 * d])
        o = 1.0 / (1.0 + np.exp(-z[:, 3 * d:]))
        c = f * c + i * g
        h = o * np.tanh(c)
        gates_i[t] = i
        gates_f[t] = f
        gates_g[t] = g
        gates_o[t] = o
        cells[t] = c
        hs[:, t] = h
    return hs, gates_i, gates_f, gates_g, gates_o, cells, prev_h


def scan_backward(grad_hs, x, wx, wh, gates_i, gates_f, gates_g, gates_o,
                  cells, prev_h):
    """Reverse-time pass; returns (dx, dwx, dwh, db)."""
    batch, n, d = grad_hs.shape
    din = x.shape[2]
    dwx = np.zeros((din, 4 * d))
    dwh = np.zeros((d, 4 * d))
    db = np.zeros(4 * d)
    dx = np.empty((batch, n, din))
    dh = np.zeros((batch, d))
    dc = np.zeros((batch, d))
    dz = np.empty((batch, 4 * d))
    wx_t = wx.T.copy()
    wh_t = wh.T.copy()
    for t in range(n - 1, -1, -1):
        i = gates_i[t]
        f = gates_f[t]
        g = gates_g[t]
        o = gates_o[t]
        tc = np.tanh(cells[t])
        dh_t = grad_hs[:, t] + dh
        dc = dc + dh_t * o * (1.0 - tc * tc)
        if t > 0:
            c_prev = cells[t - 1]
        else:
            c_prev = np.zeros((batch, d))
        dz[:, :d] = dc * g * i * (1.0 - i)
        dz[:, d:2 * d] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * d:3 * d] = dc * i * (1.0 - g * g)
        dz[:, 3 * d:] = dh_t * tc * o * (1.0 - o)
        xt = np.ascontiguousarray(x[:, t])
        dwx += np.dot(xt.T, dz)
        dwh += np.dot(prev_h[t].T, dz)
        db += dz.sum(axis=0)
        dx[:, t] = np.dot(dz, wx_t)
        dh = np.dot(dz, wh_t)
        dc = dc * f
    return dx, dwx, dwh, db
