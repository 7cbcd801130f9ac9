"""Minimal reverse-mode automatic differentiation over numpy arrays.

Just enough tape machinery to differentiate the inverse-warping /
photometric loss stack with respect to a pose twist and per-pixel depth.
Every op also accepts plain ndarrays (or floats) and then stays in pure
numpy, so the same warping/loss code serves both the fast forward-only
path and the differentiated path.

Conventions:
  - float64 everywhere, standard numpy broadcasting (gradients are
    summed back over broadcast axes),
  - ties in minimum/maximum route the gradient to the first operand,
  - |x| has subgradient 0 at x == 0.
"""

from __future__ import annotations

import numpy as np


class Var:
    """A node in the tape: a value plus a vector-Jacobian callback."""

    # keep numpy from consuming Vars in mixed expressions
    __array_ufunc__ = None
    __slots__ = ("value", "grad", "_parents", "_vjp")

    def __init__(self, value, parents=(), vjp=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self._parents = parents
        self._vjp = vjp

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Var(shape={self.value.shape})"

    # --- arithmetic -----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __pow__(self, k):
        return powc(self, k)

    def __getitem__(self, idx):
        return getitem(self, idx)

    # --- backward pass ---------------------------------------------------

    def backward(self, seed=None):
        """Accumulate gradients of this (scalar) node into the tape."""
        order = _topo_order(self)
        for node in order:
            node.grad = None
        self.grad = np.ones_like(self.value) if seed is None else np.asarray(seed, dtype=np.float64)
        for node in order:
            if node._vjp is None or node.grad is None:
                continue
            for parent, g in zip(node._parents, node._vjp(node.grad)):
                if g is None:
                    continue
                g = _unbroadcast(g, parent.value.shape)
                parent.grad = g if parent.grad is None else parent.grad + g
        return self.grad


def _topo_order(root):
    """Reverse topological order, iterative (loss graphs can be deep)."""
    order, visited, stack = [], set(), [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))
    order.reverse()
    return order


def _unbroadcast(g, shape):
    """Sum gradient g back down to `shape` after numpy broadcasting."""
    g = np.asarray(g, dtype=np.float64)
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g.reshape(shape)


def is_var(x):
    return isinstance(x, Var)


def value(x):
    """Underlying ndarray of a Var, or x itself coerced to float64."""
    if isinstance(x, Var):
        return x.value
    return np.asarray(x, dtype=np.float64)


def constant(x):
    return np.asarray(x, dtype=np.float64)


# --- primitive ops --------------------------------------------------------


def add(a, b):
    if not (is_var(a) or is_var(b)):
        return value(a) + value(b)
    av, bv = value(a), value(b)
    parents = tuple(x for x in (a, b) if is_var(x))

    def vjp(g):
        return tuple(g for x in (a, b) if is_var(x))

    return Var(av + bv, parents, vjp)


def sub(a, b):
    if not (is_var(a) or is_var(b)):
        return value(a) - value(b)
    av, bv = value(a), value(b)
    parents = tuple(x for x in (a, b) if is_var(x))

    def vjp(g):
        out = []
        if is_var(a):
            out.append(g)
        if is_var(b):
            out.append(-g)
        return tuple(out)

    return Var(av - bv, parents, vjp)


def mul(a, b):
    if not (is_var(a) or is_var(b)):
        return value(a) * value(b)
    av, bv = value(a), value(b)
    parents = tuple(x for x in (a, b) if is_var(x))

    def vjp(g):
        out = []
        if is_var(a):
            out.append(g * bv)
        if is_var(b):
            out.append(g * av)
        return tuple(out)

    return Var(av * bv, parents, vjp)


def div(a, b):
    if not (is_var(a) or is_var(b)):
        return value(a) / value(b)
    av, bv = value(a), value(b)
    parents = tuple(x for x in (a, b) if is_var(x))

    def vjp(g):
        out = []
        if is_var(a):
            out.append(g / bv)
        if is_var(b):
            out.append(-g * av / (bv * bv))
        return tuple(out)

    return Var(av / bv, parents, vjp)


def powc(a, k):
    """a**k for a constant exponent k."""
    if not is_var(a):
        return value(a) ** k
    av = a.value
    return Var(av ** k, (a,), lambda g: (g * k * av ** (k - 1),))


def absolute(a):
    if not is_var(a):
        return np.abs(value(a))
    s = np.sign(a.value)
    return Var(np.abs(a.value), (a,), lambda g: (g * s,))


def exp(a):
    if not is_var(a):
        return np.exp(value(a))
    ev = np.exp(a.value)
    return Var(ev, (a,), lambda g: (g * ev,))


def sqrt(a):
    if not is_var(a):
        return np.sqrt(value(a))
    rv = np.sqrt(a.value)
    return Var(rv, (a,), lambda g: (g * 0.5 / rv,))


def sin(a):
    if not is_var(a):
        return np.sin(value(a))
    return Var(np.sin(a.value), (a,), lambda g: (g * np.cos(a.value),))


def cos(a):
    if not is_var(a):
        return np.cos(value(a))
    return Var(np.cos(a.value), (a,), lambda g: (-g * np.sin(a.value),))


def minimum(a, b):
    """Elementwise min; gradient goes to the first operand on exact ties."""
    if not (is_var(a) or is_var(b)):
        return np.minimum(value(a), value(b))
    av, bv = value(a), value(b)
    take_a = av <= bv
    parents = tuple(x for x in (a, b) if is_var(x))

    def vjp(g):
        out = []
        if is_var(a):
            out.append(g * take_a)
        if is_var(b):
            out.append(g * ~take_a)
        return tuple(out)

    return Var(np.where(take_a, av, bv), parents, vjp)


def maximum(a, b):
    """Elementwise max; gradient goes to the first operand on exact ties."""
    if not (is_var(a) or is_var(b)):
        return np.maximum(value(a), value(b))
    av, bv = value(a), value(b)
    take_a = av >= bv
    parents = tuple(x for x in (a, b) if is_var(x))

    def vjp(g):
        out = []
        if is_var(a):
            out.append(g * take_a)
        if is_var(b):
            out.append(g * ~take_a)
        return tuple(out)

    return Var(np.where(take_a, av, bv), parents, vjp)


def where(cond, a, b):
    """Select by a constant boolean mask (the mask is not differentiated)."""
    cond = np.asarray(cond, dtype=bool)
    if not (is_var(a) or is_var(b)):
        return np.where(cond, value(a), value(b))
    av, bv = value(a), value(b)
    parents = tuple(x for x in (a, b) if is_var(x))

    def vjp(g):
        out = []
        if is_var(a):
            out.append(g * cond)
        if is_var(b):
            out.append(g * ~cond)
        return tuple(out)

    return Var(np.where(cond, av, bv), parents, vjp)


def asum(a):
    """Sum of all elements, as a scalar."""
    if not is_var(a):
        return float(np.sum(value(a)))
    shape = a.value.shape
    return Var(np.sum(a.value), (a,), lambda g: (np.broadcast_to(g, shape).copy(),))


def amean(a):
    if not is_var(a):
        return float(np.mean(value(a)))
    return div(asum(a), float(a.value.size))


def getitem(a, idx):
    if not is_var(a):
        return value(a)[idx]
    shape = a.value.shape

    def vjp(g):
        out = np.zeros(shape)
        np.add.at(out, idx, g)
        return (out,)

    return Var(a.value[idx], (a,), vjp)


def diff_h(a):
    """Forward difference along the last axis: a[..., 1:] - a[..., :-1]."""
    if not is_var(a):
        av = value(a)
        return av[..., 1:] - av[..., :-1]

    def vjp(g):
        out = np.zeros(a.value.shape)
        out[..., 1:] += g
        out[..., :-1] -= g
        return (out,)

    return Var(a.value[..., 1:] - a.value[..., :-1], (a,), vjp)


def diff_v(a):
    """Forward difference along the second-to-last axis (rows)."""
    if not is_var(a):
        av = value(a)
        return av[..., 1:, :] - av[..., :-1, :]

    def vjp(g):
        out = np.zeros(a.value.shape)
        out[..., 1:, :] += g
        out[..., :-1, :] -= g
        return (out,)

    return Var(a.value[..., 1:, :] - a.value[..., :-1, :], (a,), vjp)


def _pad_index(n, p):
    return np.clip(np.arange(-p, n + p), 0, n - 1)


def pad_edge(a, p):
    """Replicate-pad a 2-D array by p on every side."""
    av = value(a)
    iy = _pad_index(av.shape[0], p)
    ix = _pad_index(av.shape[1], p)
    if not is_var(a):
        return av[np.ix_(iy, ix)]

    def vjp(g):
        out = np.zeros(a.value.shape)
        np.add.at(out, (iy[:, None], ix[None, :]), g)
        return (out,)

    return Var(av[np.ix_(iy, ix)], (a,), vjp)


def _box_sum_valid(x, k):
    h, w = x.shape
    out = np.zeros((h - k + 1, w - k + 1))
    for dy in range(k):
        for dx in range(k):
            out += x[dy:dy + h - k + 1, dx:dx + w - k + 1]
    return out


def box_sum(a, k):
    """Valid k x k box sum of a 2-D array (output shrinks by k-1)."""
    if not is_var(a):
        return _box_sum_valid(value(a), k)
    h, w = a.value.shape

    def vjp(g):
        out = np.zeros((h, w))
        gh, gw = g.shape
        for dy in range(k):
            for dx in range(k):
                out[dy:dy + gh, dx:dx + gw] += g
        return (out,)

    return Var(_box_sum_valid(a.value, k), (a,), vjp)


def box_mean_same(a, k):
    """k x k windowed mean with replicate padding; output keeps the shape."""
    return div(box_sum(pad_edge(a, k // 2), k), float(k * k))


# Coordinates within this distance of an integer snap to it so that
# identity warps reproduce the source image bit-exactly (fp mul/div
# round-trips otherwise leave +-1 ulp wobble on the sample grid).
COORD_SNAP = 1e-8


def _snap_coords(c):
    r = np.rint(c)
    return np.where(np.abs(c - r) <= COORD_SNAP, r, c)


def bilinear_sample(img, x, y):
    """Bilinearly sample `img` at continuous pixel coords (x, y).

    Returns (samples, in_bounds). A coordinate is in bounds when it lies
    inside [0, W-1] x [0, H-1]; out-of-bounds lookups are clamped (the
    caller decides how to mask them). Gradients flow to x, y, and to img
    when any of them is a Var; coordinate gradients at out-of-bounds
    pixels are zeroed.
    """
    iv = value(img)
    xv = _snap_coords(value(x))
    yv = _snap_coords(value(y))
    h, w = iv.shape
    in_bounds = (xv >= 0.0) & (xv <= w - 1.0) & (yv >= 0.0) & (yv <= h - 1.0)

    x0 = np.clip(np.floor(xv), 0, w - 2).astype(np.intp)
    y0 = np.clip(np.floor(yv), 0, h - 2).astype(np.intp)
    fx = np.clip(xv - x0, 0.0, 1.0)
    fy = np.clip(yv - y0, 0.0, 1.0)

    i00 = iv[y0, x0]
    i01 = iv[y0, x0 + 1]
    i10 = iv[y0 + 1, x0]
    i11 = iv[y0 + 1, x0 + 1]

    top = i00 + fx * (i01 - i00)
    bot = i10 + fx * (i11 - i10)
    out = top + fy * (bot - top)

    if not (is_var(img) or is_var(x) or is_var(y)):
        return out, in_bounds

    w00 = (1.0 - fx) * (1.0 - fy)
    w01 = fx * (1.0 - fy)
    w10 = (1.0 - fx) * fy
    w11 = fx * fy

    parents = tuple(v for v in (img, x, y) if is_var(v))

    def vjp(g):
        out_grads = []
        if is_var(img):
            gi = np.zeros((h, w))
            gm = g * in_bounds
            np.add.at(gi, (y0, x0), gm * w00)
            np.add.at(gi, (y0, x0 + 1), gm * w01)
            np.add.at(gi, (y0 + 1, x0), gm * w10)
            np.add.at(gi, (y0 + 1, x0 + 1), gm * w11)
            out_grads.append(gi)
        if is_var(x):
            ddx = (1.0 - fy) * (i01 - i00) + fy * (i11 - i10)
            out_grads.append(g * ddx * in_bounds)
        if is_var(y):
            ddy = (1.0 - fx) * (i10 - i00) + fx * (i11 - i01)
            out_grads.append(g * ddy * in_bounds)
        return tuple(out_grads)

    return Var(out, parents, vjp), in_bounds
