"""Reverse-mode differentiable numeric core.

Exactly the operation set the four text-classifier architectures need:
dense affine maps, embedding lookup, 1-d convolution with max pooling,
LSTM steps / unrolled (bi)directional sequences, attention pooling,
inverted dropout, softmax cross-entropy, and Adam. Gradients are recorded
on an explicit :class:`Tape` and verified against central finite
differences by :func:`grad_check`.

All math is plain numpy. Compute dtype follows the input tensors;
gradient checking requires float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class Tensor:
    """An n-d value array paired with a gradient array of identical shape."""

    __slots__ = ("values", "grad", "name")

    def __init__(self, values, name: str | None = None):
        self.values = np.asarray(values)
        if self.values.dtype not in (np.float32, np.float64):
            self.values = self.values.astype(np.float64)
        self.grad = np.zeros_like(self.values)
        self.name = name

    @property
    def shape(self):
        return self.values.shape

    @property
    def dtype(self):
        return self.values.dtype

    def zero_grad(self):
        self.grad[...] = 0.0

    def check_finite(self):
        if not np.isfinite(self.values).all():
            raise FloatingPointError(
                f"non-finite values in tensor {self.name or self.shape}"
            )

    def __repr__(self):
        return f"Tensor(shape={self.values.shape}, name={self.name!r})"


class Tape:
    """Records backward closures during the forward pass; replays them reversed."""

    def __init__(self):
        self._ops: list = []

    def record(self, backward_fn):
        self._ops.append(backward_fn)

    def backward(self, loss: Tensor):
        if loss.values.ndim != 0:
            raise ValueError("backward() expects a scalar loss tensor")
        loss.grad = np.ones_like(loss.values)
        for fn in reversed(self._ops):
            fn()

    def __len__(self):
        return len(self._ops)


def _sigmoid(x):
    # branch on sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# ---------------------------------------------------------------------------
# primitive ops
# ---------------------------------------------------------------------------

def dense(tape: Tape | None, x: Tensor, W: Tensor, b: Tensor) -> Tensor:
    """y = x @ W + b for x [B, I], W [I, O], b [O]."""
    if x.values.ndim != 2 or W.values.ndim != 2 or x.shape[1] != W.shape[0]:
        raise ValueError(f"dense shape mismatch: x {x.shape} vs W {W.shape}")
    if b.shape != (W.shape[1],):
        raise ValueError(f"dense bias shape {b.shape} != ({W.shape[1]},)")
    out = Tensor(x.values @ W.values + b.values)

    if tape is not None:
        def backward():
            g = out.grad
            x.grad += g @ W.values.T
            W.grad += x.values.T @ g
            b.grad += g.sum(axis=0)
        tape.record(backward)
    return out


def embedding_lookup(tape: Tape | None, ids: np.ndarray, E: Tensor) -> Tensor:
    """Row gather E[ids] for ids [B, T]; backward scatter-adds into E.

    The PAD row (index 0) accumulates gradient like any other row; the
    training loop zeroes it before the optimizer step so PAD stays zero.
    """
    ids = np.asarray(ids)
    if ids.size and ids.max() >= E.shape[0]:
        raise IndexError(f"token id {int(ids.max())} >= vocabulary size {E.shape[0]}")
    if ids.size and ids.min() < 0:
        raise IndexError("negative token id")
    out = Tensor(E.values[ids])

    if tape is not None:
        def backward():
            np.add.at(E.grad, ids.reshape(-1), out.grad.reshape(-1, E.shape[1]))
        tape.record(backward)
    return out


def conv1d_maxpool(tape: Tape | None, x: Tensor, filters: Tensor, bias: Tensor) -> Tensor:
    """Valid 1-d convolution over time, ReLU, global max pool.

    x [B, T, d], filters [w, d, F], bias [F] -> [B, F]. Gradient is routed
    to the argmax position of each (batch, filter) pair.
    """
    B, T, d = x.shape
    w, d2, F = filters.shape
    if d != d2:
        raise ValueError(f"channel mismatch: x has {d}, filters expect {d2}")
    if T < w:
        raise ValueError(f"sequence length {T} shorter than filter width {w}")
    P = T - w + 1
    # windows [B, P, w, d] viewed without copying, then one big matmul
    windows = np.lib.stride_tricks.sliding_window_view(x.values, w, axis=1)
    windows = windows.transpose(0, 1, 3, 2)  # [B, P, w, d]
    flat = windows.reshape(B * P, w * d)
    z = flat @ filters.values.reshape(w * d, F) + bias.values  # [B*P, F]
    z = z.reshape(B, P, F)
    a = np.maximum(z, 0.0)
    arg = a.argmax(axis=1)  # [B, F]
    out = Tensor(np.take_along_axis(a, arg[:, None, :], axis=1)[:, 0, :])

    if tape is not None:
        def backward():
            da = np.zeros_like(a)
            np.put_along_axis(da, arg[:, None, :], out.grad[:, None, :], axis=1)
            dz = da * (z > 0.0)
            dz_flat = dz.reshape(B * P, F)
            dflat = dz_flat @ filters.values.reshape(w * d, F).T
            dwin = dflat.reshape(B, P, w, d)
            dx = np.zeros_like(x.values)
            for i in range(w):
                dx[:, i:i + P, :] += dwin[:, :, i, :]
            x.grad += dx
            filters.grad += (flat.T @ dz_flat).reshape(w, d, F)
            bias.grad += dz_flat.sum(axis=0)
        tape.record(backward)
    return out


@dataclass
class LSTMParams:
    """Gate parameters with order (input, forget, cell, output) along axis 1.

    Wx [d, 4H], Wh [H, 4H], b [4H]. Forget-gate variant, no peepholes.
    """

    Wx: Tensor
    Wh: Tensor
    b: Tensor

    @property
    def hidden(self) -> int:
        return self.Wh.shape[0]

    def tensors(self) -> list[Tensor]:
        return [self.Wx, self.Wh, self.b]


def lstm_step(tape: Tape | None, x_t: Tensor, h_prev: Tensor, c_prev: Tensor,
              params: LSTMParams) -> tuple[Tensor, Tensor]:
    """One gated recurrence step: i,f,o = sigmoid, g = tanh,
    c = f*c_prev + i*g, h = o*tanh(c)."""
    H = params.hidden
    if x_t.shape[1] != params.Wx.shape[0]:
        raise ValueError(f"input width {x_t.shape[1]} != Wx rows {params.Wx.shape[0]}")
    if h_prev.shape[1] != H or c_prev.shape[1] != H:
        raise ValueError("state width does not match hidden size")
    gates = x_t.values @ params.Wx.values + h_prev.values @ params.Wh.values + params.b.values
    i = _sigmoid(gates[:, 0 * H:1 * H])
    f = _sigmoid(gates[:, 1 * H:2 * H])
    g = np.tanh(gates[:, 2 * H:3 * H])
    o = _sigmoid(gates[:, 3 * H:4 * H])
    c_val = f * c_prev.values + i * g
    tanh_c = np.tanh(c_val)
    h = Tensor(o * tanh_c)
    c = Tensor(c_val)

    if tape is not None:
        def backward():
            dh = h.grad
            do = dh * tanh_c
            dc = c.grad + dh * o * (1.0 - tanh_c ** 2)
            df = dc * c_prev.values
            di = dc * g
            dg = dc * i
            c_prev.grad += dc * f
            dgates = np.concatenate(
                [di * i * (1.0 - i),
                 df * f * (1.0 - f),
                 dg * (1.0 - g ** 2),
                 do * o * (1.0 - o)], axis=1)
            x_t.grad += dgates @ params.Wx.values.T
            h_prev.grad += dgates @ params.Wh.values.T
            params.Wx.grad += x_t.values.T @ dgates
            params.Wh.grad += h_prev.values.T @ dgates
            params.b.grad += dgates.sum(axis=0)
        tape.record(backward)
    return h, c


def _slice_time(tape: Tape | None, x: Tensor, t: int) -> Tensor:
    out = Tensor(x.values[:, t, :])
    if tape is not None:
        def backward():
            x.grad[:, t, :] += out.grad
        tape.record(backward)
    return out


def _mask_select(tape: Tape | None, a: Tensor, b: Tensor, m: np.ndarray) -> Tensor:
    """m*a + (1-m)*b elementwise; m is a constant [B, 1] float mask."""
    out = Tensor(m * a.values + (1.0 - m) * b.values)
    if tape is not None:
        def backward():
            a.grad += m * out.grad
            b.grad += (1.0 - m) * out.grad
        tape.record(backward)
    return out


def _run_direction(tape, x, params, mask, reverse: bool):
    B, T, _ = x.shape
    H = params.hidden
    dtype = x.dtype
    h = Tensor(np.zeros((B, H), dtype=dtype))
    c = Tensor(np.zeros((B, H), dtype=dtype))
    order = range(T - 1, -1, -1) if reverse else range(T)
    steps: list[tuple[int, Tensor, np.ndarray]] = []
    for t in order:
        x_t = _slice_time(tape, x, t)
        h_new, c_new = lstm_step(tape, x_t, h, c, params)
        if mask is not None:
            m_t = mask[:, t:t + 1].astype(dtype)
            h = _mask_select(tape, h_new, h, m_t)
            c = _mask_select(tape, c_new, c, m_t)
            steps.append((t, h, m_t))
        else:
            h, c = h_new, c_new
            steps.append((t, h, None))
    return steps, h


def run_sequence(tape: Tape | None, x: Tensor, params, direction: str = "forward",
                 mask: np.ndarray | None = None) -> Tensor:
    """Unrolled LSTM over x [B, T, d] -> [B, T, H] (or [B, T, 2H] for "both").

    ``params`` is an :class:`LSTMParams` (or a (forward, backward) pair for
    direction="both"). PAD positions (mask 0) carry state through unchanged
    and emit zero output. The "both" output concatenates the forward and the
    time-aligned backward hidden sequences per position.
    """
    if direction not in ("forward", "backward", "both"):
        raise ValueError(f"unknown direction {direction!r}")
    B, T, _ = x.shape

    if direction == "both":
        p_fwd, p_bwd = params
        H = p_fwd.hidden
        out = Tensor(np.zeros((B, T, 2 * H), dtype=x.dtype))
        fwd_steps, _ = _run_direction(tape, x, p_fwd, mask, reverse=False)
        bwd_steps, _ = _run_direction(tape, x, p_bwd, mask, reverse=True)
        halves = ((fwd_steps, 0), (bwd_steps, H))
    else:
        p = params
        H = p.hidden
        out = Tensor(np.zeros((B, T, H), dtype=x.dtype))
        steps, _ = _run_direction(tape, x, p, mask, reverse=(direction == "backward"))
        halves = ((steps, 0),)

    for steps, offset in halves:
        for t, h_t, m_t in steps:
            scale = 1.0 if m_t is None else m_t
            out.values[:, t, offset:offset + H] = scale * h_t.values
            if tape is not None:
                def backward(t=t, h_t=h_t, scale=scale, offset=offset):
                    h_t.grad += scale * out.grad[:, t, offset:offset + H]
                tape.record(backward)
    return out


def sequence_last(tape: Tape | None, seq: Tensor, lengths: np.ndarray,
                  bidirectional: bool = False) -> Tensor:
    """Read out the last non-PAD hidden state from a run_sequence output.

    For bidirectional sequences the forward half is taken at position
    length-1 and the backward half at position 0 (its final state).
    """
    lengths = np.asarray(lengths)
    if (lengths < 1).any():
        raise ValueError("every sequence must contain at least one real token")
    B, T, width = seq.shape
    rows = np.arange(B)
    last = np.minimum(lengths - 1, T - 1)
    if bidirectional:
        H = width // 2
        vals = np.concatenate(
            [seq.values[rows, last, :H], seq.values[rows, 0, H:]], axis=1)
    else:
        vals = seq.values[rows, last, :]
    out = Tensor(vals)

    if tape is not None:
        def backward():
            if bidirectional:
                H = width // 2
                np.add.at(seq.grad[:, :, :H], (rows, last), out.grad[:, :H])
                seq.grad[:, 0, H:] += out.grad[:, H:]
            else:
                np.add.at(seq.grad, (rows, last), out.grad)
        tape.record(backward)
    return out


@dataclass
class AttentionParams:
    W: Tensor  # [H, H]
    b: Tensor  # [H]
    u: Tensor  # [H]

    def tensors(self) -> list[Tensor]:
        return [self.W, self.b, self.u]


def attention_pool(tape: Tape | None, hseq: Tensor, params: AttentionParams,
                   mask: np.ndarray | None = None) -> tuple[Tensor, np.ndarray]:
    """Score e_t = tanh(h_t W + b) . u, softmax over non-PAD positions,
    context = sum alpha_t h_t. Returns (context [B, H], weights [B, T])."""
    B, T, H = hseq.shape
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if not mask.any(axis=1).all():
            raise ValueError("attention_pool: a row has all positions PAD")
    proj = np.tanh(hseq.values @ params.W.values + params.b.values)  # [B, T, H]
    e = proj @ params.u.values  # [B, T]
    if mask is not None:
        e = np.where(mask, e, -np.inf)
    e_shift = e - e.max(axis=1, keepdims=True)
    exp_e = np.exp(e_shift)
    alpha = exp_e / exp_e.sum(axis=1, keepdims=True)  # [B, T]
    context = Tensor(np.einsum("bt,bth->bh", alpha, hseq.values))

    if tape is not None:
        def backward():
            dctx = context.grad
            dalpha = np.einsum("bh,bth->bt", dctx, hseq.values)
            hseq.grad += alpha[:, :, None] * dctx[:, None, :]
            # softmax jacobian: de = alpha * (dalpha - sum(dalpha * alpha))
            de = alpha * (dalpha - (dalpha * alpha).sum(axis=1, keepdims=True))
            if mask is not None:
                de = np.where(mask, de, 0.0)
            dproj = de[:, :, None] * params.u.values[None, None, :]
            dpre = dproj * (1.0 - proj ** 2)
            params.u.grad += np.einsum("bt,bth->h", de, proj)
            params.W.grad += np.einsum("btk,bth->kh", hseq.values, dpre)
            params.b.grad += dpre.sum(axis=(0, 1))
            hseq.grad += dpre @ params.W.values.T
        tape.record(backward)
    return context, alpha


def dropout(tape: Tape | None, x: Tensor, rate: float, mode: str = "train",
            rng: np.random.Generator | int | None = None) -> Tensor:
    """Inverted dropout: train mode masks with Bernoulli(1-rate) and scales
    by 1/(1-rate); eval mode is the identity."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if mode not in ("train", "eval"):
        raise ValueError(f"unknown dropout mode {mode!r}")
    if mode == "eval" or rate == 0.0:
        out = Tensor(x.values.copy())
        if tape is not None:
            def backward():
                x.grad += out.grad
            tape.record(backward)
        return out

    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    keep = (gen.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    out = Tensor(x.values * keep)
    if tape is not None:
        def backward():
            x.grad += out.grad * keep
        tape.record(backward)
    return out


def softmax_xent(tape: Tape | None, logits: Tensor, labels: np.ndarray) -> tuple[Tensor, np.ndarray]:
    """Stabilized softmax + mean negative log-likelihood.

    Returns (scalar loss tensor, probs [B, C]). Backward writes
    (probs - onehot)/B into logits.grad.
    """
    labels = np.asarray(labels)
    B, C = logits.shape
    if labels.shape != (B,):
        raise ValueError(f"labels shape {labels.shape} != ({B},)")
    if labels.size and (labels.min() < 0 or labels.max() >= C):
        raise IndexError(f"label out of range for {C} classes")
    z = logits.values - logits.values.max(axis=1, keepdims=True)
    exp_z = np.exp(z)
    probs = exp_z / exp_z.sum(axis=1, keepdims=True)
    nll = -np.log(np.maximum(probs[np.arange(B), labels], 1e-300))
    loss = Tensor(nll.mean())
    if not np.isfinite(loss.values):
        raise FloatingPointError("non-finite loss in softmax_xent")

    if tape is not None:
        def backward():
            d = probs.copy()
            d[np.arange(B), labels] -= 1.0
            logits.grad += (d / B) * loss.grad
        tape.record(backward)
    return loss, probs


def concat_cols(tape: Tape | None, tensors: list[Tensor]) -> Tensor:
    """Concatenate 2-d tensors along axis 1."""
    out = Tensor(np.concatenate([t.values for t in tensors], axis=1))
    if tape is not None:
        offsets = np.cumsum([0] + [t.shape[1] for t in tensors])

        def backward():
            for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
                t.grad += out.grad[:, lo:hi]
        tape.record(backward)
    return out


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    """Per-parameter moments plus shared step counter and hyperparameters."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    lr: float = 1e-3

    @classmethod
    def for_param(cls, param: Tensor, lr: float = 1e-3, beta1: float = 0.9,
                  beta2: float = 0.999, epsilon: float = 1e-8) -> "AdamState":
        return cls(m=np.zeros_like(param.values), v=np.zeros_like(param.values),
                   t=0, beta1=beta1, beta2=beta2, epsilon=epsilon, lr=lr)


def adam_update(param: Tensor, state: AdamState) -> Tensor:
    """In-place Adam step with bias correction:
    p <- p - lr * m_hat / (sqrt(v_hat) + eps)."""
    g = param.grad
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    param.values -= state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return param


# ---------------------------------------------------------------------------
# initializers
# ---------------------------------------------------------------------------

def glorot_uniform(rng: np.random.Generator, shape: tuple, fan_in: int | None = None,
                   fan_out: int | None = None, dtype=np.float64) -> np.ndarray:
    if fan_in is None:
        fan_in = shape[0] if len(shape) > 1 else shape[0]
    if fan_out is None:
        fan_out = shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def orthogonal(rng: np.random.Generator, n: int, dtype=np.float64) -> np.ndarray:
    a = rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    # fix signs so the factorization (and thus the init) is unique
    q = q * np.sign(np.diag(r))
    return q.astype(dtype)


def init_lstm_params(rng: np.random.Generator, input_dim: int, hidden: int,
                     dtype=np.float64) -> LSTMParams:
    """Glorot input weights, per-gate orthogonal recurrent weights, zero bias
    except the forget gate which starts at 1."""
    Wx = glorot_uniform(rng, (input_dim, 4 * hidden), fan_in=input_dim, fan_out=hidden, dtype=dtype)
    Wh = np.concatenate([orthogonal(rng, hidden, dtype) for _ in range(4)], axis=1)
    b = np.zeros(4 * hidden, dtype=dtype)
    b[hidden:2 * hidden] = 1.0
    return LSTMParams(Wx=Tensor(Wx, "lstm.Wx"), Wh=Tensor(Wh, "lstm.Wh"), b=Tensor(b, "lstm.b"))


def init_attention_params(rng: np.random.Generator, hidden: int, dtype=np.float64) -> AttentionParams:
    W = glorot_uniform(rng, (hidden, hidden), dtype=dtype)
    b = np.zeros(hidden, dtype=dtype)
    u = glorot_uniform(rng, (hidden,), fan_in=hidden, fan_out=1, dtype=dtype)
    return AttentionParams(W=Tensor(W, "attn.W"), b=Tensor(b, "attn.b"), u=Tensor(u, "attn.u"))


# ---------------------------------------------------------------------------
# gradient checking
# ---------------------------------------------------------------------------

def grad_check(build_loss, wrt: list[Tensor], step: float = 1e-3) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``build_loss(tape)`` must rebuild the forward pass from the current
    tensor values and return a scalar loss Tensor; it is called once with a
    tape for the analytic pass and twice per entry for the differences.
    """
    for t in wrt:
        if t.dtype != np.float64:
            raise TypeError("grad_check requires float64 tensors")
        t.zero_grad()
    tape = Tape()
    loss = build_loss(tape)
    tape.backward(loss)
    analytic = [t.grad.copy() for t in wrt]

    worst = 0.0
    for tensor, a in zip(wrt, analytic):
        flat = tensor.values.reshape(-1)
        a_flat = a.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + step
            lp = float(build_loss(None).values)
            flat[idx] = orig - step
            lm = float(build_loss(None).values)
            flat[idx] = orig
            numeric = (lp - lm) / (2.0 * step)
            denom = max(abs(a_flat[idx]) + abs(numeric), 1e-8)
            worst = max(worst, abs(a_flat[idx] - numeric) / denom)
    return worst
