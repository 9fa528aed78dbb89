"""
Checking the hand-written backward pass
=======================================

Compare analytic gradients with central differences on sampled parameters,
then break the head gradient on purpose and watch the check catch it.
"""

import numpy as np

from creditstory.model import Batch, ModelConfig, TrainConfig, bag_rows, gradcheck, init_params, loss, train

rng = np.random.default_rng(0)
V, n = 50, 96
bags = {s: bag_rows([rng.integers(0, V, rng.integers(1, 12)) for _ in range(n)], V) for s in ("TR", "IN", "CL")}
batch = Batch(bags, rng.normal(size=(n, 9)), (rng.random(n) < 0.2).astype(float))

cfg = ModelConfig(vocab_size=V, temporal=True)
p = init_params(cfg, seed=0)
print(f"at init:          max relative error {gradcheck(p, batch, 4.0, 1.0, n_samples=150):.2e}")

snapshots = []
train(batch, batch, cfg, TrainConfig(max_epochs=1, batch_size=32), on_epoch=lambda e, q: snapshots.append(q.copy()))
print(f"after one epoch:  max relative error {gradcheck(snapshots[0], batch, 4.0, 1.0, n_samples=150):.2e}")


def doubled_head(b, q):
    value, grads = loss(b, q, 4.0, 1.0)
    return value, {k: 2 * g if k.startswith("head.") else g for k, g in grads.items()}


print(f"corrupted head:   max relative error {gradcheck(p, batch, 4.0, 1.0, grad_fn=doubled_head):.3f}")
