"""Probe a two-stage learning-rate schedule for the oracle-equivalence run."""
import time
import numpy as np
from scipy.stats import spearmanr

from ippsm.corpus import Alphabet
from ippsm.datasets import random_markov_tables, synthetic_markov_leak
from ippsm.ngram import NgramModel
from ippsm import neural

SYMS = "abcdefgh"
start, trans = random_markov_tables(SYMS, seed=7)
leak = synthetic_markov_leak(trans, start, length=6, n_samples=50_000, seed=7)
oracle = NgramModel.from_tables(start, trans, length=6)
alphabet = Alphabet.from_symbols(SYMS)

held = []
for pw in oracle.sample(1000, seed=1007):
    if pw not in leak.counts and pw not in held:
        held.append(pw)
    if len(held) == 200:
        break
oq = {pw: oracle.local_conditionals(pw) for pw in held}

def evaluate(model):
    maes, rhos = [], []
    for pw in held:
        nq = model.local_conditionals(pw)
        maes.append(np.abs(nq - oq[pw]).mean(axis=1))
        rhos.append([spearmanr(nq[i], oq[pw][i]).statistic for i in range(len(pw))])
    return np.mean(maes, axis=0), float(np.mean(rhos))

cfg = neural.preset_config("desk", alphabet_size=alphabet.n_total)

t0 = time.time()
stage1 = neural.train(leak, alphabet, cfg, neural.TrainConfig(learning_rate=1e-3, epochs=25, seed=7))
t1 = time.time() - t0
mae_pos, rho = evaluate(stage1.model)
print(f"stage1 lr=1e-3 ep=25 ({t1:.0f}s): mae/pos={np.round(mae_pos, 4)} max={mae_pos.max():.4f} rho={rho:.4f} loss={stage1.epoch_losses[-1]:.4f}", flush=True)

# arm A: continue at 1e-3
t0 = time.time()
armA = neural.train(leak, alphabet, cfg, neural.TrainConfig(learning_rate=1e-3, epochs=15, seed=8), init=stage1.model)
tA = time.time() - t0
mae_pos, rho = evaluate(armA.model)
print(f"armA +15ep lr=1e-3 ({tA:.0f}s): mae/pos={np.round(mae_pos, 4)} max={mae_pos.max():.4f} rho={rho:.4f} loss={armA.epoch_losses[-1]:.4f}", flush=True)

# arm B: decay to 3e-4
t0 = time.time()
armB = neural.train(leak, alphabet, cfg, neural.TrainConfig(learning_rate=3e-4, epochs=15, seed=8), init=stage1.model)
tB = time.time() - t0
mae_pos, rho = evaluate(armB.model)
print(f"armB +15ep lr=3e-4 ({tB:.0f}s): mae/pos={np.round(mae_pos, 4)} max={mae_pos.max():.4f} rho={rho:.4f} loss={armB.epoch_losses[-1]:.4f}", flush=True)

# arm B continued: another 10 at 1e-4
t0 = time.time()
armC = neural.train(leak, alphabet, cfg, neural.TrainConfig(learning_rate=1e-4, epochs=10, seed=9), init=armB.model)
tC = time.time() - t0
mae_pos, rho = evaluate(armC.model)
print(f"armC +10ep lr=1e-4 ({tC:.0f}s): mae/pos={np.round(mae_pos, 4)} max={mae_pos.max():.4f} rho={rho:.4f} loss={armC.epoch_losses[-1]:.4f}", flush=True)
