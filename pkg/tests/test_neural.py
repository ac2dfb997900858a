import math

import numpy as np
import pytest

from ippsm import neural
from ippsm.corpus import Alphabet, EncodingError, LeakCorpus, decode, encode
from ippsm.datasets import random_markov_tables, synthetic_markov_leak

ALPHA8 = Alphabet.from_symbols("abcdefgh")


@pytest.fixture(scope="module")
def leak5k():
    start, trans = random_markov_tables("abcdefgh", seed=7)
    return synthetic_markov_leak(trans, start, length=6, n_samples=5000, seed=7)


@pytest.fixture(scope="module")
def bigram_run(leak5k):
    cfg = neural.preset_config("desk", alphabet_size=ALPHA8.n_total)
    tc = neural.TrainConfig(epochs=5, seed=3, learning_rate=1e-3)
    return neural.train(leak5k, ALPHA8, cfg, tc)


@pytest.fixture
def rand_model():
    cfg = neural.preset_config("desk", alphabet_size=ALPHA8.n_total)
    params = neural.init_params(cfg, np.random.default_rng(0))
    return neural.NeuralModel(config=cfg, alphabet=ALPHA8, params=params)


def small_leak():
    return LeakCorpus({"abcd": 6, "aacd": 3, "bbbb": 2, "cdcd": 1})


class TestMangle:
    def test_worked_example(self):
        ab = Alphabet.from_symbols("eilouvy")
        enc = encode("iloveyou", ab, 16)
        assert decode(neural.mangle(enc, 5, ab), ab) == "ilov∘you"

    def test_first_position(self):
        ab = Alphabet.from_symbols("abcde")
        enc = encode("abcde", ab, 8)
        assert decode(neural.mangle(enc, 1, ab), ab) == "∘bcde"

    def test_position_past_length_rejected(self):
        ab = Alphabet.from_symbols("abcde")
        enc = encode("abcde", ab, 8)
        for i in (0, 6):
            with pytest.raises(EncodingError):
                neural.mangle(enc, i, ab)

    def test_input_untouched(self):
        ab = Alphabet.from_symbols("abcde")
        enc = encode("abcde", ab, 8)
        before = enc.indices.copy()
        neural.mangle(enc, 3, ab)
        assert np.array_equal(enc.indices, before)


class TestModelConfig:
    def test_small_preset_layers(self):
        c = neural.preset_config("small")
        rb = "rb[128, (3, 1)]"
        assert c.layer_summary() == (
            ["conv1d[3, 128, same, linear]"] + [rb] * 6 + ["flatten", "fc[128, linear]"]
            + ["fc[MaxPasswordLength*128, linear]", "reshape[MaxPasswordLength, 128]"]
            + [rb] * 6
            + ["flatten", "fc[MaxPasswordLength*AlphabetCardinality, linear]"]
        )

    def test_medium_preset_layers(self):
        c = neural.preset_config("medium")
        layers = c.layer_summary()
        assert layers.count("rb[128, (5, 3)]") == 12
        assert "fc[80, linear]" in layers
        assert layers[0] == "conv1d[5, 128, same, linear]"

    def test_large_preset_layers(self):
        c = neural.preset_config("large")
        layers = c.layer_summary()
        assert layers.count("rb[200, (5, 3)]") == 16
        assert "fc[80, linear]" in layers
        # stem and decoder junction stay at 128 filters
        assert layers[0] == "conv1d[5, 128, same, linear]"
        assert "fc[MaxPasswordLength*128, linear]" in layers

    def test_projection_only_where_channels_change(self):
        names = [n for n, _, _ in neural._param_defs(neural.preset_config("large", alphabet_size=10))]
        assert "enc.rb0.proj.w" in names and "dec.rb0.proj.w" in names
        assert "enc.rb1.proj.w" not in names
        small = [n for n, _, _ in neural._param_defs(neural.preset_config("small", alphabet_size=10))]
        assert not any(".proj." in n for n in small)

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            neural.preset_config("huge")

    def test_even_kernel_rejected(self):
        with pytest.raises(ValueError):
            neural.ModelConfig(preset="x", encoder_blocks=1, decoder_blocks=1,
                               filters=8, stem_filters=8, kernel=4,
                               bottleneck_kernel=1, latent_dim=8)

    def test_nonpositive_extent_rejected(self):
        with pytest.raises(ValueError):
            neural.ModelConfig(preset="x", encoder_blocks=0, decoder_blocks=1,
                               filters=8, stem_filters=8, kernel=3,
                               bottleneck_kernel=1, latent_dim=8)


class TestTrainConfig:
    def test_published_defaults(self):
        tc = neural.TrainConfig()
        assert tc.alpha == 10.0
        assert tc.learning_rate == 1e-4
        assert tc.epsilon == 0.05

    @pytest.mark.parametrize(
        "kw",
        [
            dict(alpha=-1.0),
            dict(epsilon=1.0),
            dict(epsilon=-0.1),
            dict(batch_size=0),
            dict(epochs=0),
            dict(learning_rate=0.0),
        ],
    )
    def test_invalid_fields(self, kw):
        with pytest.raises(ValueError):
            neural.TrainConfig(**kw)


class TestTraining:
    def test_epoch_loss_decreases(self, bigram_run):
        losses = bigram_run.epoch_losses
        assert len(losses) == 5
        grace = 0
        for prev, cur in zip(losses[1:], losses[2:]):
            if cur >= prev:
                assert cur <= prev * 1.02, f"loss rose beyond 2%: {prev} -> {cur}"
                grace += 1
        assert grace <= 1

    def test_traces_align(self, bigram_run, leak5k):
        per_epoch = math.ceil(leak5k.n_unique / 256)
        assert len(bigram_run.step_losses) == 5 * per_epoch
        assert len(bigram_run.step_ce) == len(bigram_run.step_mmd) == len(bigram_run.step_losses)
        total = np.array(bigram_run.step_ce) + 10.0 * np.array(bigram_run.step_mmd)
        assert np.allclose(total, bigram_run.step_losses, rtol=1e-4)

    def test_provenance(self, bigram_run, leak5k):
        prov = bigram_run.model.provenance
        assert prov["corpus_digest"] == neural.corpus_digest(leak5k)
        assert prov["model_id"] == bigram_run.model.model_id()
        assert prov["final_loss"] == bigram_run.epoch_losses[-1]

    def test_alpha_zero_is_pure_reconstruction(self):
        ab = Alphabet.from_symbols("abcd")
        cfg = neural.preset_config("desk", max_password_length=8, alphabet_size=ab.n_total)
        tc = neural.TrainConfig(alpha=0.0, epochs=2, batch_size=16, seed=1)
        res = neural.train(small_leak(), ab, cfg, tc)
        assert res.step_losses == res.step_ce
        assert all(m == 0.0 for m in res.step_mmd)

    def test_seed_reproducibility(self):
        ab = Alphabet.from_symbols("abcd")
        cfg = neural.preset_config("desk", max_password_length=8, alphabet_size=ab.n_total)
        tc = neural.TrainConfig(epochs=2, batch_size=16, seed=5)
        a = neural.train(small_leak(), ab, cfg, tc)
        b = neural.train(small_leak(), ab, cfg, tc)
        assert a.step_losses == b.step_losses
        assert a.model.param_blob() == b.model.param_blob()

    def test_warm_start_continues(self):
        ab = Alphabet.from_symbols("abcd")
        cfg = neural.preset_config("desk", max_password_length=8, alphabet_size=ab.n_total)
        first = neural.train(small_leak(), ab, cfg, neural.TrainConfig(epochs=1, batch_size=16, seed=5))
        second = neural.train(small_leak(), ab, cfg,
                              neural.TrainConfig(epochs=1, batch_size=16, seed=6),
                              init=first.model)
        assert second.model.param_blob() != first.model.param_blob()

    def test_warm_start_mismatches_rejected(self):
        ab = Alphabet.from_symbols("abcd")
        cfg = neural.preset_config("desk", max_password_length=8, alphabet_size=ab.n_total)
        first = neural.train(small_leak(), ab, cfg, neural.TrainConfig(epochs=1, batch_size=16, seed=5))
        other_cfg = neural.preset_config("desk", max_password_length=10, alphabet_size=ab.n_total)
        with pytest.raises(ValueError):
            neural.train(small_leak(), ab, other_cfg,
                         neural.TrainConfig(epochs=1, batch_size=16), init=first.model)

    def test_empty_corpus_rejected(self):
        cfg = neural.preset_config("desk", alphabet_size=ALPHA8.n_total)
        with pytest.raises(ValueError):
            neural.train(LeakCorpus({}), ALPHA8, cfg, neural.TrainConfig())

    def test_alphabet_size_mismatch_rejected(self, leak5k):
        cfg = neural.preset_config("desk", alphabet_size=3)
        with pytest.raises(ValueError):
            neural.train(leak5k, ALPHA8, cfg, neural.TrainConfig())


class TestInference:
    def test_rows_are_distributions(self, rand_model):
        rows = rand_model.local_conditionals("abcdef")
        assert rows.shape == (6, 8)
        assert np.all(rows > 0)
        assert np.allclose(rows.sum(axis=1), 1.0, atol=1e-6)

    def test_masked_position_never_leaks(self, rand_model):
        r1 = rand_model.local_conditionals("abcdef")
        r2 = rand_model.local_conditionals("ahcdef")
        assert np.array_equal(r1[1], r2[1])
        assert not np.array_equal(r1[2], r2[2])

    def test_single_matches_batched(self, rand_model):
        rows = rand_model.local_conditionals("abcd")
        enc = encode("abcd", ALPHA8, rand_model.config.max_password_length)
        one = neural.mangle(enc, 3, ALPHA8)
        x = neural._one_hot(one.indices[None, :], rand_model.config.alphabet_size)
        _, logits = rand_model.forward(neural.nm.Tensor(x))
        row = logits.data[0, 2, :].astype(np.float64)
        row -= row.max()
        p = np.exp(row)
        p /= p.sum()
        p = p[: ALPHA8.n_content]
        p /= p.sum()
        assert np.allclose(rows[2], p, atol=1e-6)

    def test_inference_is_pure(self, rand_model):
        a = rand_model.local_conditionals("abcdef")
        b = rand_model.local_conditionals("abcdef")
        assert np.array_equal(a, b)

    def test_empty_password_rejected(self, rand_model):
        with pytest.raises(EncodingError):
            rand_model.local_conditionals("")

    def test_out_of_alphabet_rejected(self, rand_model):
        with pytest.raises(EncodingError):
            rand_model.local_conditionals("abc!")

    def test_repeat_context_predicts_repeat(self):
        ab = Alphabet.from_symbols("#a")
        corpus = LeakCorpus({"aaaaaaa": 400, "#######": 200, "aaa#aaa": 50})
        cfg = neural.preset_config("desk", max_password_length=8, alphabet_size=ab.n_total)
        tc = neural.TrainConfig(epochs=30, learning_rate=1e-3, seed=2)
        model = neural.train(corpus, ab, cfg, tc).model
        q_rep = model.local_conditionals("aaaaaaa")[0, ab.index["a"]]
        q_mix = model.local_conditionals("a######")[0, ab.index["a"]]
        assert q_rep > q_mix


class TestPersistence:
    def test_round_trip_bit_identical(self, rand_model, tmp_path):
        path = tmp_path / "m.ippsm"
        neural.save_model(rand_model, path)
        back = neural.load_model(path)
        assert back.config == rand_model.config
        assert back.alphabet.symbols == rand_model.alphabet.symbols
        for name in rand_model.params:
            assert np.array_equal(back.params[name], rand_model.params[name])
        assert back.model_id() == rand_model.model_id()

    def test_provenance_round_trips(self, leak5k, tmp_path):
        cfg = neural.preset_config("desk", alphabet_size=ALPHA8.n_total)
        res = neural.train(leak5k, ALPHA8, cfg, neural.TrainConfig(epochs=1, seed=0))
        path = tmp_path / "m.ippsm"
        neural.save_model(res.model, path)
        assert neural.load_model(path).provenance == res.model.provenance

    def test_bad_magic(self, rand_model, tmp_path):
        path = tmp_path / "m.ippsm"
        neural.save_model(rand_model, path)
        raw = bytearray(path.read_bytes())
        raw[0] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(neural.ModelFormatError, match="magic"):
            neural.load_model(path)

    def test_bad_version(self, rand_model, tmp_path):
        path = tmp_path / "m.ippsm"
        neural.save_model(rand_model, path)
        raw = bytearray(path.read_bytes())
        raw[len(neural.MAGIC)] = 99
        path.write_bytes(bytes(raw))
        with pytest.raises(neural.ModelFormatError, match="version 99"):
            neural.load_model(path)

    def test_truncated_blob(self, rand_model, tmp_path):
        path = tmp_path / "m.ippsm"
        neural.save_model(rand_model, path)
        raw = path.read_bytes()
        path.write_bytes(raw[:-17])
        with pytest.raises(neural.ModelFormatError, match="truncated"):
            neural.load_model(path)

    def test_trailing_bytes(self, rand_model, tmp_path):
        path = tmp_path / "m.ippsm"
        neural.save_model(rand_model, path)
        path.write_bytes(path.read_bytes() + b"\x00\x00")
        with pytest.raises(neural.ModelFormatError, match="trailing"):
            neural.load_model(path)

    def test_alphabet_guard(self, rand_model, tmp_path):
        path = tmp_path / "m.ippsm"
        neural.save_model(rand_model, path)
        assert neural.load_model(path, expect_alphabet=ALPHA8) is not None
        with pytest.raises(neural.ModelFormatError, match="alphabet"):
            neural.load_model(path, expect_alphabet=Alphabet.from_symbols("xyz"))
