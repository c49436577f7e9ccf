"""Dense/recurrent network kernel with explicit forward and backward passes.

Two wirings over shared building blocks:

  single — token sequence -> embedding -> bidirectional LSTM -> final-state
      concat, joined with the dense-projected engineered features, then a
      dense stack with dropout and a softmax head;
  multi — r token sequences encoded with shared weights, aggregated over the
      non-padded slots (mean/sum/concatenation/weighted_sum), then the same
      tail as single.

Everything is float64 and deterministic for a fixed rng; gradients are checked
against finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DiagnosticError

AGGREGATIONS = ("mean", "sum", "concatenation", "weighted_sum")


@dataclass(frozen=True)
class ArchitectureConfig:
    mode: str = "single"  # "single" | "multi"
    vocab_size: int = 0
    n_classes: int = 0
    embedding_dim: int = 64
    hidden_size: int = 128  # per direction; the encoder is always bidirectional
    feature_dim: int = 64  # width D of the engineered-feature projection
    dense_widths: tuple[int, ...] = (256,)
    dropout: float = 0.3
    aggregation: str = "mean"
    r: int = 45  # slot count, multi mode only
    n_features: int = 19

    def __post_init__(self):
        if self.mode not in ("single", "multi"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        if self.aggregation not in AGGREGATIONS:
            raise ConfigError(f"unknown aggregation {self.aggregation!r}")
        if self.vocab_size < 3 or self.n_classes < 2:
            raise ConfigError("vocab_size and n_classes must be set")

    @property
    def text_dim(self) -> int:
        per_slot = 2 * self.hidden_size
        if self.mode == "multi" and self.aggregation == "concatenation":
            return self.r * per_slot
        return per_slot

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "vocab_size": self.vocab_size,
            "n_classes": self.n_classes,
            "embedding_dim": self.embedding_dim,
            "hidden_size": self.hidden_size,
            "feature_dim": self.feature_dim,
            "dense_widths": list(self.dense_widths),
            "dropout": self.dropout,
            "aggregation": self.aggregation,
            "r": self.r,
            "n_features": self.n_features,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArchitectureConfig":
        d = dict(d)
        d["dense_widths"] = tuple(d["dense_widths"])
        return cls(**d)


def _xavier(rng, fan_in, fan_out, shape):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_params(config: ArchitectureConfig, rng) -> dict:
    """Xavier-uniform parameter initialization; LSTM forget-gate bias starts at 1."""
    E, H, D = config.embedding_dim, config.hidden_size, config.feature_dim
    params = {
        "embedding": _xavier(rng, config.vocab_size, E, (config.vocab_size, E)),
        "feat_W": _xavier(rng, config.n_features, D, (config.n_features, D)),
        "feat_b": np.zeros(D),
    }
    for d in ("fw", "bw"):
        params[f"lstm_{d}_Wx"] = _xavier(rng, E, 4 * H, (E, 4 * H))
        params[f"lstm_{d}_Wh"] = _xavier(rng, H, 4 * H, (H, 4 * H))
        b = np.zeros(4 * H)
        b[H : 2 * H] = 1.0
        params[f"lstm_{d}_b"] = b
    if config.mode == "multi" and config.aggregation == "weighted_sum":
        params["agg_w"] = np.full(config.r, 1.0 / config.r)
    prev = config.text_dim + D
    for i, width in enumerate(config.dense_widths):
        params[f"dense_{i}_W"] = _xavier(rng, prev, width, (prev, width))
        params[f"dense_{i}_b"] = np.zeros(width)
        prev = width
    params["out_W"] = _xavier(rng, prev, config.n_classes, (prev, config.n_classes))
    params["out_b"] = np.zeros(config.n_classes)
    return params


def zeros_like_params(params: dict) -> dict:
    return {k: np.zeros_like(v) for k, v in params.items()}


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _lstm_forward(X, mask, Wx, Wh, b):
    """Masked LSTM over X (N, T, E); the state freezes past each row's length."""
    N, T, _ = X.shape
    H = Wh.shape[0]
    Hs = np.zeros((T + 1, N, H))
    Cs = np.zeros((T + 1, N, H))
    gates = np.zeros((T, N, 4 * H))
    C_new = np.zeros((T, N, H))
    XW = X @ Wx + b  # (N, T, 4H), input part hoisted out of the time loop
    for t in range(T):
        a = XW[:, t, :] + Hs[t] @ Wh
        i = _sigmoid(a[:, :H])
        f = _sigmoid(a[:, H : 2 * H])
        g = np.tanh(a[:, 2 * H : 3 * H])
        o = _sigmoid(a[:, 3 * H :])
        c_new = f * Cs[t] + i * g
        h_new = o * np.tanh(c_new)
        m = mask[:, t : t + 1]
        Cs[t + 1] = m * c_new + (1.0 - m) * Cs[t]
        Hs[t + 1] = m * h_new + (1.0 - m) * Hs[t]
        gates[t] = np.concatenate([i, f, g, o], axis=1)
        C_new[t] = c_new
    return {"Hs": Hs, "Cs": Cs, "gates": gates, "C_new": C_new, "h_final": Hs[T]}


def _lstm_backward(cache, dh_final, X, mask, Wx, Wh):
    """Backprop through the masked LSTM, gradient entering at the final state."""
    N, T, E = X.shape
    H = Wh.shape[0]
    Hs, Cs, gates, C_new = cache["Hs"], cache["Cs"], cache["gates"], cache["C_new"]
    dWx = np.zeros_like(Wx)
    dWh = np.zeros_like(Wh)
    db = np.zeros(4 * H)
    dX = np.zeros_like(X)
    dh = dh_final.copy()
    dc = np.zeros((N, H))
    for t in range(T - 1, -1, -1):
        m = mask[:, t : t + 1]
        i = gates[t][:, :H]
        f = gates[t][:, H : 2 * H]
        g = gates[t][:, 2 * H : 3 * H]
        o = gates[t][:, 3 * H :]
        tanh_c = np.tanh(C_new[t])
        dh_new = dh * m
        dc_new = dc * m
        dh_prev = dh * (1.0 - m)
        dc_prev = dc * (1.0 - m)
        do = dh_new * tanh_c
        dc_new = dc_new + dh_new * o * (1.0 - tanh_c**2)
        df = dc_new * Cs[t]
        di = dc_new * g
        dg = dc_new * i
        dc_prev = dc_prev + dc_new * f
        dA = np.concatenate(
            [di * i * (1 - i), df * f * (1 - f), dg * (1 - g**2), do * o * (1 - o)],
            axis=1,
        )
        dWx += X[:, t, :].T @ dA
        dWh += Hs[t].T @ dA
        db += dA.sum(axis=0)
        dX[:, t, :] = dA @ Wx.T
        dh = dh_prev + dA @ Wh.T
        dc = dc_prev
    return dX, dWx, dWh, db


def _reverse_within_length(ids, mask):
    """Per-row reversal of the first L tokens; padding stays in place."""
    T = ids.shape[1]
    lengths = mask.sum(axis=1).astype(np.int64)
    pos = np.arange(T)[None, :]
    rev = np.where(pos < lengths[:, None], lengths[:, None] - 1 - pos, pos)
    return np.take_along_axis(ids, rev, axis=1)


class Model:
    """Parameter container plus batched forward/backward for both wirings."""

    def __init__(self, config: ArchitectureConfig, params=None, seed=0):
        self.config = config
        if params is None:
            params = init_params(config, np.random.default_rng(seed))
        self.params = params

    # -- text encoder (shared by both modes) --------------------------------

    def _encode(self, ids, mask):
        p = self.params
        maskf = mask.astype(np.float64)
        X_fw = p["embedding"][ids] * maskf[..., None]
        fw = _lstm_forward(X_fw, maskf, p["lstm_fw_Wx"], p["lstm_fw_Wh"], p["lstm_fw_b"])
        ids_bw = _reverse_within_length(ids, mask)
        X_bw = p["embedding"][ids_bw] * maskf[..., None]
        bw = _lstm_forward(X_bw, maskf, p["lstm_bw_Wx"], p["lstm_bw_Wh"], p["lstm_bw_b"])
        enc = np.concatenate([fw["h_final"], bw["h_final"]], axis=1)
        cache = {"ids": ids, "ids_bw": ids_bw, "maskf": maskf, "X_fw": X_fw,
                 "X_bw": X_bw, "fw": fw, "bw": bw}
        return enc, cache

    def _encode_backward(self, cache, denc, grads):
        p = self.params
        H = self.config.hidden_size
        for d, dh in (("fw", denc[:, :H]), ("bw", denc[:, H:])):
            dX, dWx, dWh, db = _lstm_backward(
                cache[d], dh, cache[f"X_{d}"], cache["maskf"],
                p[f"lstm_{d}_Wx"], p[f"lstm_{d}_Wh"],
            )
            grads[f"lstm_{d}_Wx"] += dWx
            grads[f"lstm_{d}_Wh"] += dWh
            grads[f"lstm_{d}_b"] += db
            ids = cache["ids"] if d == "fw" else cache["ids_bw"]
            dX = dX * cache["maskf"][..., None]
            np.add.at(
                grads["embedding"],
                ids.reshape(-1),
                dX.reshape(-1, self.config.embedding_dim),
            )

    # -- forward -------------------------------------------------------------

    def forward(self, batch, train_mode=False, dropout_rng=None):
        """Run a batch; returns (probs (B, C), cache for backward)."""
        cfg = self.config
        p = self.params
        feats = np.asarray(batch["feats"], dtype=np.float64)
        cache = {"feats": feats}

        if cfg.mode == "single":
            enc, enc_cache = self._encode(batch["ids"], batch["tok_mask"])
            text = enc
            cache["enc_cache"] = enc_cache
        else:
            ids = batch["ids"]  # (B, R, T)
            tok_mask = batch["tok_mask"]
            slot_mask = np.asarray(batch["slot_mask"], dtype=bool)
            B, R, T = ids.shape
            if R != cfg.r:
                raise ConfigError(f"expected {cfg.r} slots, got {R}")
            counts = slot_mask.sum(axis=1)
            if np.any(counts == 0):
                raise ConfigError("cannot aggregate a sample with zero unmasked slots")
            sel = slot_mask.reshape(-1)
            enc_flat, enc_cache = self._encode(
                ids.reshape(B * R, T)[sel], tok_mask.reshape(B * R, T)[sel]
            )
            enc = np.zeros((B * R, 2 * cfg.hidden_size))
            enc[sel] = enc_flat
            enc = enc.reshape(B, R, -1)
            if cfg.aggregation == "mean":
                text = enc.sum(axis=1) / counts[:, None]
            elif cfg.aggregation == "sum":
                text = enc.sum(axis=1)
            elif cfg.aggregation == "weighted_sum":
                text = (enc * p["agg_w"][None, :, None]).sum(axis=1)
            else:  # concatenation
                text = enc.reshape(B, R * 2 * cfg.hidden_size)
            cache.update(
                enc_cache=enc_cache, enc=enc, sel=sel, slot_mask=slot_mask,
                counts=counts, shape=(B, R, T),
            )

        pre_feat = feats @ p["feat_W"] + p["feat_b"]
        fproj = np.maximum(pre_feat, 0.0)
        z = np.concatenate([text, fproj], axis=1)
        cache.update(pre_feat=pre_feat, z=z)

        a = z
        hidden = []
        keep = 1.0 - cfg.dropout
        for i in range(len(cfg.dense_widths)):
            s = a @ p[f"dense_{i}_W"] + p[f"dense_{i}_b"]
            act = np.maximum(s, 0.0)
            if train_mode and cfg.dropout > 0.0:
                if dropout_rng is None:
                    raise ConfigError("train_mode with dropout requires a dropout rng")
                drop = (dropout_rng.random(act.shape) >= cfg.dropout) / keep
            else:
                drop = None
            hidden.append({"input": a, "s": s, "drop": drop})
            a = act if drop is None else act * drop
        logits = a @ p["out_W"] + p["out_b"]
        if not np.all(np.isfinite(logits)):
            raise DiagnosticError("non-finite activation at the output layer")
        shifted = logits - logits.max(axis=1, keepdims=True)
        expd = np.exp(shifted)
        probs = expd / expd.sum(axis=1, keepdims=True)
        cache.update(hidden=hidden, last_hidden=a, probs=probs)
        return probs, cache

    # -- backward ------------------------------------------------------------

    def backward(self, cache, dlogits):
        """Gradients of all parameters given d(loss)/d(logits). Params untouched."""
        cfg = self.config
        p = self.params
        grads = zeros_like_params(p)

        grads["out_W"] += cache["last_hidden"].T @ dlogits
        grads["out_b"] += dlogits.sum(axis=0)
        da = dlogits @ p["out_W"].T
        for i in range(len(cfg.dense_widths) - 1, -1, -1):
            layer = cache["hidden"][i]
            if layer["drop"] is not None:
                da = da * layer["drop"]
            ds = da * (layer["s"] > 0.0)
            grads[f"dense_{i}_W"] += layer["input"].T @ ds
            grads[f"dense_{i}_b"] += ds.sum(axis=0)
            da = ds @ p[f"dense_{i}_W"].T

        text_dim = cfg.text_dim
        dtext = da[:, :text_dim]
        dfproj = da[:, text_dim:]
        dpre = dfproj * (cache["pre_feat"] > 0.0)
        grads["feat_W"] += cache["feats"].T @ dpre
        grads["feat_b"] += dpre.sum(axis=0)

        if cfg.mode == "single":
            self._encode_backward(cache["enc_cache"], dtext, grads)
            return grads

        B, R, T = cache["shape"]
        slot_mask = cache["slot_mask"]
        counts = cache["counts"]
        if cfg.aggregation == "mean":
            denc = np.repeat((dtext / counts[:, None])[:, None, :], R, axis=1)
        elif cfg.aggregation == "sum":
            denc = np.repeat(dtext[:, None, :], R, axis=1)
        elif cfg.aggregation == "weighted_sum":
            denc = dtext[:, None, :] * p["agg_w"][None, :, None]
            grads["agg_w"] += np.einsum(
                "brh,bh->r", cache["enc"] * slot_mask[..., None], dtext
            )
        else:
            denc = dtext.reshape(B, R, 2 * cfg.hidden_size)
        denc = denc * slot_mask[..., None]
        denc_flat = denc.reshape(B * R, -1)[cache["sel"]]
        self._encode_backward(cache["enc_cache"], denc_flat, grads)
        return grads
