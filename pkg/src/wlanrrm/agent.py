"""Sequence-to-sequence actor-critic policy in plain numpy.

Four small MLPs: a per-AP encoder, an auto-regressive decoder that walks the
APs in descending load order and emits one channel/width action each, a
critic on the mean-pooled embeddings, and a selector that scores candidate
configurations. Gradients are hand-derived; a finite-difference oracle in the
tests pins them down.
"""

import json
from dataclasses import dataclass

import numpy as np

from .environment import busy_fraction
from .environment import weight_matrix
from .errors import CheckpointError, NumericsError, ValidationError
from .seeds import TAG_INIT, spawn
from .topology import ChannelConfig, action_space, band_from_name

CHECKPOINT_FORMAT = "wlanrrm-model"
CHECKPOINT_VERSION = 1

VALUE_COEF = 0.5
ENTROPY_COEF = 0.01

SELECTOR_INPUTS = 4  # mean busy, max busy, mean log-prob, mean width / max width


@dataclass(frozen=True)
class ModelDims:
    feature_dim: int
    base_channels: int
    action_count: int
    embed_dim: int = 32
    encoder_hidden: int = 64
    decoder_hidden: int = 64
    critic_hidden: int = 32
    selector_hidden: int = 32

    def __post_init__(self):
        if self.feature_dim != 1 + self.base_channels + 1:
            raise ValidationError("feature_dim must be 1 + base_channels + 1")
        for f in ("base_channels", "action_count", "embed_dim", "encoder_hidden",
                  "decoder_hidden", "critic_hidden", "selector_hidden"):
            if getattr(self, f) < 1:
                raise ValidationError(f"{f} must be >= 1")


def dims_for_band(band):
    c = band.base_channels
    return ModelDims(feature_dim=1 + c + 1, base_channels=c, action_count=len(action_space(band)))


def param_shapes(dims):
    """Ordered (name, shape) pairs; the order fixes init draws and layout."""
    e, c, a = dims.embed_dim, dims.base_channels, dims.action_count
    return [
        ("enc_w1", (dims.feature_dim, dims.encoder_hidden)),
        ("enc_b1", (dims.encoder_hidden,)),
        ("enc_w2", (dims.encoder_hidden, e)),
        ("enc_b2", (e,)),
        ("dec_w1", (e + c, dims.decoder_hidden)),
        ("dec_b1", (dims.decoder_hidden,)),
        ("dec_w2", (dims.decoder_hidden, a)),
        ("dec_b2", (a,)),
        ("cri_w1", (e, dims.critic_hidden)),
        ("cri_b1", (dims.critic_hidden,)),
        ("cri_w2", (dims.critic_hidden, 1)),
        ("cri_b2", (1,)),
        ("sel_w1", (SELECTOR_INPUTS, dims.selector_hidden)),
        ("sel_b1", (dims.selector_hidden,)),
        ("sel_w2", (dims.selector_hidden, 1)),
        ("sel_b2", (1,)),
    ]


class AgentModel:
    """Parameter container; `params` maps layer names to float64 arrays."""

    def __init__(self, dims, params, band_name, meta=None):
        expected = dict(param_shapes(dims))
        if set(params) != set(expected):
            raise ValidationError("parameter set does not match the declared dims")
        for name, arr in params.items():
            if arr.shape != expected[name]:
                raise ValidationError(f"{name} has shape {arr.shape}, expected {expected[name]}")
            if not np.all(np.isfinite(arr)):
                raise NumericsError(f"non-finite values in parameter {name}")
        if len(action_space(band_from_name(band_name))) != dims.action_count:
            raise ValidationError(f"action_count {dims.action_count} does not match band {band_name!r}")
        self.dims = dims
        self.params = params
        self.band_name = band_name
        self.version = CHECKPOINT_VERSION
        self.meta = dict(meta or {})

    def copy(self):
        return AgentModel(self.dims, {k: v.copy() for k, v in self.params.items()},
                          self.band_name, dict(self.meta))

    def require_band(self, band):
        if band.name != self.band_name:
            raise ValidationError(f"model was built for band {self.band_name!r}, got {band.name!r}")


class Rollout:
    """One decoded configuration with everything training needs to score it."""

    def __init__(self, config, actions, order, log_probs, entropies, value_estimate):
        self.config = config
        self.actions = actions          # per-AP action index
        self.order = order              # AP visiting order (descending load)
        self.log_probs = log_probs      # per decode step
        self.entropies = entropies      # per decode step
        self.value_estimate = value_estimate
        self.selector_score = None      # filled by select_best


def init_model(dims, seed, band_name="2g4"):
    """Uniform(-l, l) weights with l = sqrt(6/(fan_in+fan_out)); zero biases."""
    rng = spawn(seed, TAG_INIT)
    params = {}
    for name, shape in param_shapes(dims):
        if len(shape) == 1:
            params[name] = np.zeros(shape)
        else:
            lim = np.sqrt(6.0 / (shape[0] + shape[1]))
            params[name] = rng.uniform(-lim, lim, shape)
    return AgentModel(dims, params, band_name, {"seed": int(seed), "iteration": 0})


def model_for_band(band, seed):
    return init_model(dims_for_band(band), seed, band.name)


def encode_features(obs, env):
    """Per-AP rows [load, nu_1..nu_C, degree/n]; width fixed regardless of n.

    nu spreads each in-range neighbor's load uniformly over the base channels
    (no decisions exist yet); degree counts neighbors with weight > 1/2.
    """
    n = obs.n_aps
    c = obs.band.base_channels
    w = weight_matrix(obs.observed_rssi, env)
    nu = np.repeat(((w @ obs.load) / c)[:, None], c, axis=1)
    degree = (w > 0.5).sum(axis=1) / n
    return np.concatenate([obs.load[:, None], nu, degree[:, None]], axis=1)


def decode_order(load):
    """Descending load, ties by AP index."""
    n = load.shape[0]
    return np.lexsort((np.arange(n), -np.asarray(load)))


def _encode(params, features):
    h1 = np.tanh(features @ params["enc_w1"] + params["enc_b1"])
    emb = h1 @ params["enc_w2"] + params["enc_b2"]
    if not np.all(np.isfinite(emb)):
        raise NumericsError("non-finite encoder embeddings")
    return emb, h1


def _log_softmax(z):
    s = z - z.max()
    return s - np.log(np.exp(s).sum())


def _forward(model, obs, features, env, rng=None, mode="sample", forced_actions=None,
             keep=False):
    """Shared decode pass. mode: sample | greedy | forced. Returns (Rollout, cache)."""
    model.require_band(obs.band)
    p = model.params
    n = obs.n_aps
    dims = model.dims
    if features.shape != (n, dims.feature_dim):
        raise ValidationError(f"feature matrix shape {features.shape} does not match ({n}, {dims.feature_dim})")
    if mode == "sample" and rng is None:
        raise ValidationError("sampling mode needs an rng")
    actions_list = action_space(obs.band)
    w = weight_matrix(obs.observed_rssi, env)
    emb, h1 = _encode(p, features)

    order = decode_order(obs.load)
    delta = np.zeros((n, dims.base_channels))
    chosen = np.zeros(n, dtype=int)
    log_probs = np.zeros(n)
    entropies = np.zeros(n)
    cache = {"emb": emb, "h1": h1, "xs": [], "hs": [], "pis": [], "logpis": []} if keep else None

    for t, i in enumerate(order):
        x = np.concatenate([emb[i], delta[i]])
        h = np.tanh(x @ p["dec_w1"] + p["dec_b1"])
        z = h @ p["dec_w2"] + p["dec_b2"]
        if not np.all(np.isfinite(z)):
            raise NumericsError("non-finite decoder logits")
        logpi = _log_softmax(z)
        pi = np.exp(logpi)
        if mode == "greedy":
            a = int(np.argmax(z))
        elif mode == "forced":
            a = int(forced_actions[i])
        else:
            a = int(min(np.searchsorted(np.cumsum(pi), rng.random()), len(pi) - 1))
        chosen[i] = a
        log_probs[t] = logpi[a]
        entropies[t] = float(-np.sum(pi * logpi))
        if keep:
            cache["xs"].append(x)
            cache["hs"].append(h)
            cache["pis"].append(pi)
            cache["logpis"].append(logpi)
        block = actions_list[a]
        cols = slice(block.block_start - 1, block.block_start - 1 + block.width)
        delta[:, cols] += (w[:, i] * obs.load[i])[:, None]

    pooled = emb.mean(axis=0)
    ch = np.tanh(pooled @ p["cri_w1"] + p["cri_b1"])
    value = float((ch @ p["cri_w2"] + p["cri_b2"])[0])
    if not np.isfinite(value):
        raise NumericsError("non-finite critic value")
    if keep:
        cache["pooled"] = pooled
        cache["ch"] = ch
        cache["value"] = value

    cfg = ChannelConfig(tuple(actions_list[chosen[i]] for i in range(n)))
    rollout = Rollout(cfg, chosen, order, log_probs, entropies, value)
    return rollout, cache

def decode_sequential(model, obs, features, env, rng=None, mode="sample", return_cache=False):
    """One rollout: per-AP softmax sampling (or argmax in greedy mode).

    The step input concatenates the AP's embedding with the committed
    co-channel neighbor load per base channel, so later decisions see
    earlier ones.
    """
    rollout, cache = _forward(model, obs, features, env, rng=rng, mode=mode, keep=return_cache)
    return (rollout, cache) if return_cache else rollout


def selector_features(obs, config, log_probs, env):
    """Pooled candidate descriptors: busy mean/max, mean log-prob, mean width."""
    busy = busy_fraction(obs, config, env)
    widths = np.array([a.width for a in config.assignments], dtype=np.float64)
    return np.array([busy.mean(), busy.max(), float(np.mean(log_probs)),
                     widths.mean() / obs.band.max_width])


def _selector_forward(params, x):
    sh = np.tanh(x @ params["sel_w1"] + params["sel_b1"])
    score = float((sh @ params["sel_w2"] + params["sel_b2"])[0])
    if not np.isfinite(score):
        raise NumericsError("non-finite selector score")
    return score, sh


def select_best(model, obs, rollouts, env):
    """Score candidates with the selector; lowest predicted regret wins.

    Ties break to the lowest index. Scores are written back onto the rollouts.
    """
    if not rollouts:
        raise ValidationError("select_best needs at least one rollout")
    scores = np.zeros(len(rollouts))
    for k, r in enumerate(rollouts):
        x = selector_features(obs, r.config, r.log_probs, env)
        score, _ = _selector_forward(model.params, x)
        r.selector_score = score
        scores[k] = score
    idx = int(np.argmin(scores))
    return idx, rollouts[idx].config


def rollout_loss(model, obs, actions, advantage, selector_input, realized_regret, env,
                 c_v=VALUE_COEF, c_e=ENTROPY_COEF):
    """Scalar training loss with the advantage and selector input frozen.

    Teacher-forces `actions`; the finite-difference oracle in the tests
    differentiates exactly this function.
    """
    features = encode_features(obs, env)
    rollout, _ = _forward(model, obs, features, env, mode="forced", forced_actions=actions)
    g = -float(realized_regret)
    score, _ = _selector_forward(model.params, selector_input)
    return (-advantage * float(np.sum(rollout.log_probs))
            + c_v * (rollout.value_estimate - g) ** 2
            - c_e * float(np.sum(rollout.entropies))
            + (score - float(realized_regret)) ** 2)


def gradients(model, obs, rollout, realized_regret, env, c_v=VALUE_COEF, c_e=ENTROPY_COEF):
    """Exact gradients of the A2C + selector loss for one rollout.

    loss = -A * sum_t log pi(a_t) + c_v (V - G)^2 - c_e sum_t H_t + (S - regret)^2
    with G = -regret and the advantage A = G - V held constant, selector
    inputs detached.
    """
    p = model.params
    features = encode_features(obs, env)
    fwd, cache = _forward(model, obs, features, env, mode="forced",
                          forced_actions=rollout.actions, keep=True)
    n = obs.n_aps
    e = model.dims.embed_dim
    g_return = -float(realized_regret)
    value = cache["value"]
    adv = g_return - value

    grads = {name: np.zeros(shape) for name, shape in param_shapes(model.dims)}
    d_emb = np.zeros_like(cache["emb"])

    for t, i in enumerate(fwd.order):
        pi = cache["pis"][t]
        logpi = cache["logpis"][t]
        h = cache["hs"][t]
        x = cache["xs"][t]
        a = rollout.actions[i]
        ent = fwd.entropies[t]
        dz = -adv * (-pi)
        dz[a] += -adv
        dz += c_e * pi * (logpi + ent)
        grads["dec_w2"] += np.outer(h, dz)
        grads["dec_b2"] += dz
        dh = (p["dec_w2"] @ dz) * (1.0 - h * h)
        grads["dec_w1"] += np.outer(x, dh)
        grads["dec_b1"] += dh
        d_emb[i] += (p["dec_w1"] @ dh)[:e]

    dv = 2.0 * c_v * (value - g_return)
    ch = cache["ch"]
    grads["cri_w2"] += np.outer(ch, [dv])
    grads["cri_b2"] += np.array([dv])
    dch = (p["cri_w2"][:, 0] * dv) * (1.0 - ch * ch)
    grads["cri_w1"] += np.outer(cache["pooled"], dch)
    grads["cri_b1"] += dch
    d_emb += (p["cri_w1"] @ dch)[None, :] / n

    xs = selector_features(obs, rollout.config, rollout.log_probs, env)
    score, sh = _selector_forward(p, xs)
    ds = 2.0 * (score - float(realized_regret))
    grads["sel_w2"] += np.outer(sh, [ds])
    grads["sel_b2"] += np.array([ds])
    dsh = (p["sel_w2"][:, 0] * ds) * (1.0 - sh * sh)
    grads["sel_w1"] += np.outer(xs, dsh)
    grads["sel_b1"] += dsh

    grads["enc_w2"] += cache["h1"].T @ d_emb
    grads["enc_b2"] += d_emb.sum(axis=0)
    dh1 = (d_emb @ p["enc_w2"].T) * (1.0 - cache["h1"] ** 2)
    grads["enc_w1"] += features.T @ dh1
    grads["enc_b1"] += dh1.sum(axis=0)

    for name, arr in grads.items():
        if not np.all(np.isfinite(arr)):
            raise NumericsError(f"non-finite gradient for {name}")
    return grads


def save_model(model, path, meta=None):
    """Self-describing checkpoint: one JSON header line + raw float64 bytes."""
    meta = {**model.meta, **(meta or {})}
    shapes = param_shapes(model.dims)
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": model.version,
        "band": model.band_name,
        "dims": {f: getattr(model.dims, f) for f in (
            "feature_dim", "base_channels", "action_count", "embed_dim",
            "encoder_hidden", "decoder_hidden", "critic_hidden", "selector_hidden")},
        "params": [[name, list(shape)] for name, shape in shapes],
        "dtype": "<f8",
        "meta": meta,
    }
    with open(path, "wb") as f:
        f.write(json.dumps(header).encode() + b"\n")
        for name, _ in shapes:
            f.write(np.ascontiguousarray(model.params[name], dtype="<f8").tobytes())


def load_model(path):
    with open(path, "rb") as f:
        raw = f.read()
    nl = raw.find(b"\n")
    if nl < 0:
        raise CheckpointError(f"{path}: missing checkpoint header")
    try:
        header = json.loads(raw[:nl].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: unreadable checkpoint header: {exc}") from None
    if header.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path}: not a {CHECKPOINT_FORMAT} checkpoint")
    if header.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: checkpoint version {header.get('version')} is incompatible with {CHECKPOINT_VERSION}")
    try:
        dims = ModelDims(**header["dims"])
        declared = [(str(name), tuple(shape)) for name, shape in header["params"]]
        band = str(header["band"])
        meta = dict(header.get("meta", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{path}: malformed checkpoint header: {exc}") from None
    if declared != param_shapes(dims) or header.get("dtype") != "<f8":
        raise CheckpointError(f"{path}: parameter table does not match the declared dims")
    body = raw[nl + 1:]
    total = sum(int(np.prod(shape)) for _, shape in declared)
    if len(body) != total * 8:
        raise CheckpointError(f"{path}: expected {total * 8} payload bytes, found {len(body)}")
    params = {}
    off = 0
    for name, shape in declared:
        count = int(np.prod(shape))
        params[name] = np.frombuffer(body, dtype="<f8", count=count, offset=off).reshape(shape).copy()
        off += count * 8
    return AgentModel(dims, params, band, meta)
