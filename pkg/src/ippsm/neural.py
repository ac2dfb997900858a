"""Inpainting convolutional autoencoder for masked-character inference.

The network reads a one-hot password grid with one character replaced by
MASK, compresses it through a convolutional residual encoder into a latent
vector, and decodes a full-length grid of per-position symbol logits.
Training minimises smoothed cross-entropy against the unmangled string plus
an MMD penalty pulling latents toward a standard normal. At inference the
decoder row at the masked position, softmaxed and renormalised over content
symbols, is the local conditional Q(x_i = s | x_{-i}).
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import numerics as nm
from .corpus import Alphabet, EncodedPassword, EncodingError, LeakCorpus, encode

log = logging.getLogger(__name__)

MAGIC = b"IPPSM"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Unreadable or incompatible model file."""


class TrainingError(RuntimeError):
    """Training diverged (non-finite loss or gradients)."""


@dataclass(frozen=True)
class ModelConfig:
    """Topology of the autoencoder; presets fix everything but alphabet size.

    The residual unit is a three-conv bottleneck with kernels
    (bottleneck_kernel, kernel, bottleneck_kernel); a kernel-1 projection
    joins the shortcut when channel counts differ (large preset).
    """

    preset: str
    max_password_length: int = 16
    alphabet_size: int = 0  # bound to the training alphabet when 0
    encoder_blocks: int = 0
    decoder_blocks: int = 0
    filters: int = 0
    stem_filters: int = 0
    kernel: int = 0
    bottleneck_kernel: int = 0
    latent_dim: int = 0

    def __post_init__(self):
        for name in ("max_password_length", "encoder_blocks", "decoder_blocks",
                     "filters", "stem_filters", "kernel", "bottleneck_kernel", "latent_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"config field {name} must be >= 1")
        if self.alphabet_size < 0:
            raise ValueError("alphabet_size must be >= 0")
        for name in ("kernel", "bottleneck_kernel"):
            if getattr(self, name) % 2 == 0:
                raise ValueError(f"config field {name} must be odd for same padding")

    def layer_summary(self) -> list:
        """Layer list in forward order, matching the published preset tables."""
        kp = f"({self.kernel}, {self.bottleneck_kernel})"
        rb = f"rb[{self.filters}, {kp}]"
        enc = [f"conv1d[{self.kernel}, {self.stem_filters}, same, linear]"]
        enc += [rb] * self.encoder_blocks
        enc += ["flatten", f"fc[{self.latent_dim}, linear]"]
        dec = [f"fc[MaxPasswordLength*{self.stem_filters}, linear]",
               f"reshape[MaxPasswordLength, {self.stem_filters}]"]
        dec += [rb] * self.decoder_blocks
        dec += ["flatten", "fc[MaxPasswordLength*AlphabetCardinality, linear]"]
        return enc + dec


_PRESETS = {
    "small": dict(encoder_blocks=6, decoder_blocks=6, filters=128, stem_filters=128,
                  kernel=3, bottleneck_kernel=1, latent_dim=128),
    "medium": dict(encoder_blocks=6, decoder_blocks=6, filters=128, stem_filters=128,
                   kernel=5, bottleneck_kernel=3, latent_dim=80),
    "large": dict(encoder_blocks=8, decoder_blocks=8, filters=200, stem_filters=128,
                  kernel=5, bottleneck_kernel=3, latent_dim=80),
    "desk": dict(encoder_blocks=2, decoder_blocks=2, filters=32, stem_filters=32,
                 kernel=3, bottleneck_kernel=1, latent_dim=32),
}


def preset_config(name: str, max_password_length: int = 16, alphabet_size: int = 0) -> ModelConfig:
    if name not in _PRESETS:
        raise ValueError(f"unknown preset {name!r}, expected one of {sorted(_PRESETS)}")
    return ModelConfig(preset=name, max_password_length=max_password_length,
                       alphabet_size=alphabet_size, **_PRESETS[name])


@dataclass(frozen=True)
class TrainConfig:
    alpha: float = 10.0  # MMD weight
    batch_size: int = 256
    learning_rate: float = 1e-4
    epochs: int = 5
    epsilon: float = 0.05  # label smoothing
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"epsilon must be in [0, 1), got {self.epsilon}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")


def mangle(x: EncodedPassword, i: int, alphabet: Alphabet) -> EncodedPassword:
    """Replace the i-th character (1-based) with MASK; everything else kept."""
    if not 1 <= i <= x.length:
        raise EncodingError(f"mangle position {i} outside content positions 1..{x.length}")
    idx = x.indices.copy()
    idx[i - 1] = alphabet.mask_index
    return EncodedPassword(indices=idx, length=x.length)


def _param_defs(config: ModelConfig):
    """(name, shape, fan_in) for every parameter, in declared layer order."""
    a = config.alphabet_size
    L = config.max_password_length
    f, f0 = config.filters, config.stem_filters
    k, bk = config.kernel, config.bottleneck_kernel

    defs = []

    def conv(name, kernel, cin, cout):
        defs.append((f"{name}.w", (kernel, cin, cout), kernel * cin))
        defs.append((f"{name}.b", (cout,), 0))

    def dense_(name, uin, uout):
        defs.append((f"{name}.w", (uin, uout), uin))
        defs.append((f"{name}.b", (uout,), 0))

    def block(name, cin):
        conv(f"{name}.c1", bk, cin, f)
        conv(f"{name}.c2", k, f, f)
        conv(f"{name}.c3", bk, f, f)
        if cin != f:
            conv(f"{name}.proj", 1, cin, f)

    conv("enc.stem", k, a, f0)
    cin = f0
    for i in range(config.encoder_blocks):
        block(f"enc.rb{i}", cin)
        cin = f
    dense_("enc.latent", L * f, config.latent_dim)
    dense_("dec.expand", config.latent_dim, L * f0)
    cin = f0
    for i in range(config.decoder_blocks):
        block(f"dec.rb{i}", cin)
        cin = f
    dense_("dec.out", L * f, L * a)
    return defs


def init_params(config: ModelConfig, rng: np.random.Generator) -> dict:
    params = {}
    for name, shape, fan_in in _param_defs(config):
        if name.endswith(".b"):
            params[name] = np.zeros(shape, dtype=np.float32)
        else:
            params[name] = nm.he_init(rng, shape, fan_in)
    return params


@dataclass
class NeuralModel:
    config: ModelConfig
    alphabet: Alphabet
    params: dict  # name -> float32 ndarray, keys fixed by _param_defs order
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        expect = {name: shape for name, shape, _ in _param_defs(self.config)}
        if set(self.params) != set(expect):
            raise ValueError("parameter set does not match config")
        for name, arr in self.params.items():
            if tuple(arr.shape) != tuple(expect[name]):
                raise ValueError(f"parameter {name} has shape {arr.shape}, expected {expect[name]}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"parameter {name} contains non-finite values")

    # -- forward ------------------------------------------------------------

    def _block(self, h, t, name, cin):
        r = nm.relu(nm.conv1d_same(h, t[f"{name}.c1.w"], t[f"{name}.c1.b"]))
        r = nm.relu(nm.conv1d_same(r, t[f"{name}.c2.w"], t[f"{name}.c2.b"]))
        r = nm.conv1d_same(r, t[f"{name}.c3.w"], t[f"{name}.c3.b"])
        if cin != self.config.filters:
            h = nm.conv1d_same(h, t[f"{name}.proj.w"], t[f"{name}.proj.b"])
        return nm.relu(nm.add(h, r))

    def forward(self, x: nm.Tensor, tensors: dict | None = None):
        """One-hot batch [B, L, A] -> (latent [B, latent], logits [B, L, A])."""
        c = self.config
        t = tensors if tensors is not None else {k: nm.Tensor(v) for k, v in self.params.items()}
        B = x.data.shape[0]
        h = nm.conv1d_same(x, t["enc.stem.w"], t["enc.stem.b"])
        cin = c.stem_filters
        for i in range(c.encoder_blocks):
            h = self._block(h, t, f"enc.rb{i}", cin)
            cin = c.filters
        flat = nm.reshape(h, (B, c.max_password_length * c.filters))
        z = nm.dense(flat, t["enc.latent.w"], t["enc.latent.b"])
        d = nm.dense(z, t["dec.expand.w"], t["dec.expand.b"])
        h = nm.reshape(d, (B, c.max_password_length, c.stem_filters))
        cin = c.stem_filters
        for i in range(c.decoder_blocks):
            h = self._block(h, t, f"dec.rb{i}", cin)
            cin = c.filters
        flat = nm.reshape(h, (B, c.max_password_length * c.filters))
        out = nm.dense(flat, t["dec.out.w"], t["dec.out.b"])
        logits = nm.reshape(out, (B, c.max_password_length, c.alphabet_size))
        return z, logits

    # -- estimator protocol -------------------------------------------------

    def local_conditionals(self, password: str) -> np.ndarray:
        """Q rows for every position, one batched pass over the mangled copies."""
        if len(password) == 0:
            raise EncodingError("empty password")
        enc = encode(password, self.alphabet, self.config.max_password_length)
        ell = enc.length
        batch = np.tile(enc.indices, (ell, 1))
        batch[np.arange(ell), np.arange(ell)] = self.alphabet.mask_index
        x = nm.Tensor(_one_hot(batch, self.config.alphabet_size))
        _, logits = self.forward(x)
        rows = logits.data[np.arange(ell), np.arange(ell), :].astype(np.float64)
        rows -= rows.max(axis=1, keepdims=True)
        p = np.exp(rows)
        p /= p.sum(axis=1, keepdims=True)
        content = p[:, : self.alphabet.n_content]
        return content / content.sum(axis=1, keepdims=True)

    def param_blob(self) -> bytes:
        return b"".join(self.params[n].astype("<f4").tobytes() for n, _, _ in _param_defs(self.config))

    def model_id(self) -> str:
        return hashlib.sha256(self.param_blob()).hexdigest()[:16]


def _one_hot(idx: np.ndarray, n: int) -> np.ndarray:
    B, L = idx.shape
    out = np.zeros((B, L, n), dtype=np.float32)
    out[np.arange(B)[:, None], np.arange(L)[None, :], idx] = 1.0
    return out


@dataclass
class TrainResult:
    model: NeuralModel
    epoch_losses: list
    step_losses: list
    step_ce: list  # reconstruction term per step
    step_mmd: list  # raw mmd_sq per step; zeros when alpha == 0


def corpus_digest(corpus: LeakCorpus) -> str:
    h = hashlib.sha256()
    for pw in sorted(corpus.counts):
        h.update(f"{pw}\t{corpus.counts[pw]}\n".encode("utf-8"))
    return h.hexdigest()[:16]


def train(
    corpus: LeakCorpus,
    alphabet: Alphabet,
    model_config: ModelConfig,
    train_config: TrainConfig,
    init: "NeuralModel | None" = None,
) -> TrainResult:
    """Fit the autoencoder on mask-one-character reconstruction.

    Batches sample unique passwords proportionally to leak frequency, with
    replacement; each entry gets one uniformly random masked content
    position. The loss is smoothed cross-entropy over every position of the
    original string plus alpha times the squared MMD between the latent
    batch and fresh standard-normal draws. One epoch is
    ceil(n_unique / batch) Adam steps. Fully reproducible from the seed.

    Pass `init` to continue training an existing model, e.g. for a second
    stage at a lower learning rate. Optimizer moments start fresh either way.
    """
    if corpus.n_unique == 0:
        raise ValueError("empty training corpus")
    if model_config.alphabet_size == 0:
        model_config = replace(model_config, alphabet_size=alphabet.n_total)
    elif model_config.alphabet_size != alphabet.n_total:
        raise ValueError(
            f"config alphabet_size {model_config.alphabet_size} "
            f"does not match alphabet ({alphabet.n_total})"
        )
    L = model_config.max_password_length
    pws = sorted(corpus.counts)
    idx = np.stack([encode(p, alphabet, L).indices for p in pws])
    lengths = np.array([len(p) for p in pws], dtype=np.int64)
    weights = np.array([corpus.counts[p] for p in pws], dtype=np.float64)
    weights /= weights.sum()

    rng = np.random.default_rng(train_config.seed)
    if init is None:
        params = init_params(model_config, rng)
    else:
        if init.config != model_config:
            raise ValueError("init model config does not match model_config")
        if init.alphabet.symbols != alphabet.symbols:
            raise ValueError("init model alphabet does not match alphabet")
        params = {k: v.copy() for k, v in init.params.items()}
    model = NeuralModel(config=model_config, alphabet=alphabet, params=params)
    state = nm.OptimizerState(learning_rate=train_config.learning_rate)

    n = len(pws)
    bsz = train_config.batch_size
    steps_per_epoch = max(1, math.ceil(n / bsz))
    step_losses: list = []
    step_ce: list = []
    step_mmd: list = []
    epoch_losses: list = []
    step = 0
    for epoch in range(train_config.epochs):
        epoch_sum = 0.0
        for _ in range(steps_per_epoch):
            pick = rng.choice(n, size=bsz, p=weights)
            mask_pos = (rng.random(bsz) * lengths[pick]).astype(np.int64)
            inp = idx[pick].copy()
            inp[np.arange(bsz), mask_pos] = alphabet.mask_index
            x = nm.Tensor(_one_hot(inp, model_config.alphabet_size))
            targets = idx[pick].reshape(-1)

            tensors = {k: nm.Tensor(v) for k, v in params.items()}
            z, logits = model.forward(x, tensors)
            probs = nm.softmax_rows(
                nm.reshape(logits, (bsz * L, model_config.alphabet_size))
            )
            ce = nm.smoothed_cross_entropy(probs, targets, train_config.epsilon)
            if train_config.alpha > 0:
                normals = nm.Tensor(
                    rng.standard_normal((bsz, model_config.latent_dim)).astype(np.float32)
                )
                mmd = nm.mmd_sq(z, normals)
                loss = nm.add(ce, nm.scale(mmd, train_config.alpha))
            else:
                mmd = None
                loss = ce
            val = float(loss.data)
            if not math.isfinite(val):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch} step {step}: "
                    f"ce={float(ce.data)!r}"
                    + (f" mmd={float(mmd.data)!r}" if mmd is not None else "")
                )
            nm.backward(loss)
            grads = {k: t.grad for k, t in tensors.items()}
            nm.adam_step(params, grads, state)
            step_losses.append(val)
            step_ce.append(float(ce.data))
            step_mmd.append(float(mmd.data) if mmd is not None else 0.0)
            epoch_sum += val
            step += 1
        epoch_losses.append(epoch_sum / steps_per_epoch)
        log.info("epoch %d/%d mean loss %.5f", epoch + 1, train_config.epochs, epoch_losses[-1])

    model.provenance = {
        "corpus_digest": corpus_digest(corpus),
        "train_config": asdict(train_config),
        "final_loss": epoch_losses[-1],
        "epoch_losses": epoch_losses,
    }
    model.provenance["model_id"] = model.model_id()
    return TrainResult(
        model=model,
        epoch_losses=epoch_losses,
        step_losses=step_losses,
        step_ce=step_ce,
        step_mmd=step_mmd,
    )


# -- persistence ------------------------------------------------------------


def save_model(model: NeuralModel, path) -> None:
    header = {
        "config": asdict(model.config),
        "alphabet": model.alphabet.to_json(),
        "provenance": model.provenance,
        "params": [
            {"name": n, "shape": list(s)} for n, s, _ in _param_defs(model.config)
        ],
        "layers": model.config.layer_summary(),
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes([FORMAT_VERSION]))
        fh.write(len(blob).to_bytes(8, "little"))
        fh.write(blob)
        fh.write(model.param_blob())


def load_model(path, expect_alphabet: Alphabet | None = None) -> NeuralModel:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(MAGIC) + 9 or raw[: len(MAGIC)] != MAGIC:
        raise ModelFormatError(f"{path}: not a model file (bad magic)")
    version = raw[len(MAGIC)]
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported model format version {version}, expected {FORMAT_VERSION}"
        )
    off = len(MAGIC) + 1
    hlen = int.from_bytes(raw[off : off + 8], "little")
    off += 8
    if len(raw) < off + hlen:
        raise ModelFormatError(f"{path}: truncated header")
    try:
        header = json.loads(raw[off : off + hlen])
    except (ValueError, UnicodeDecodeError) as e:
        raise ModelFormatError(f"{path}: unreadable header: {e}") from None
    off += hlen
    config = ModelConfig(**header["config"])
    alphabet = Alphabet.from_json(header["alphabet"])
    if expect_alphabet is not None and alphabet.symbols != expect_alphabet.symbols:
        raise ModelFormatError(f"{path}: model alphabet does not match the expected alphabet")
    params = {}
    for spec in header["params"]:
        shape = tuple(spec["shape"])
        nbytes = int(np.prod(shape)) * 4
        if len(raw) < off + nbytes:
            raise ModelFormatError(f"{path}: truncated parameter blob at {spec['name']}")
        params[spec["name"]] = (
            np.frombuffer(raw[off : off + nbytes], dtype="<f4").reshape(shape).copy()
        )
        off += nbytes
    if off != len(raw):
        raise ModelFormatError(f"{path}: {len(raw) - off} trailing bytes after parameters")
    model = NeuralModel(config=config, alphabet=alphabet, params=params,
                        provenance=header.get("provenance", {}))
    return model
