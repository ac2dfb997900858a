"""Probe a desk-scale learning rate for the oracle-equivalence run."""
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
for lr, epochs in [(1e-3, 12), (1e-3, 25), (3e-4, 25)]:
    tc = neural.TrainConfig(learning_rate=lr, epochs=epochs, seed=7)
    t1 = time.time()
    res = neural.train(leak, alphabet, cfg, tc)
    mae_pos, rho = evaluate(res.model)
    print(f"lr={lr} epochs={epochs} ({time.time()-t1:.0f}s): mae max={mae_pos.max():.4f} mean={mae_pos.mean():.4f} rho={rho:.4f} loss={res.epoch_losses[-1]:.4f}", flush=True)
