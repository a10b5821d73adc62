"""SGD hot loop for BPR-MF, compiled with numba when available.

The fallback path runs the identical function body uncompiled (selected by
RECCORPUS_NO_NUMBA=1 or when numba is missing), and both paths draw from the
same np.random.Generator, so trained factors match across backends.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is an install-time dependency
    HAS_NUMBA = False
    njit = None


def numba_enabled() -> bool:
    return HAS_NUMBA and os.environ.get("RECCORPUS_NO_NUMBA", "") != "1"


def _bpr_sgd(
    user_factors,
    item_factors,
    pair_users,
    pair_items,
    user_ptr,
    user_items,
    cum_counts,
    total_count,
    lr,
    l2,
    n_epochs,
    rng,
    epoch_loss,
):
    """In-place SGD over uniformly sampled train pairs with popularity negatives.

    One epoch = one pass of len(pairs) steps. Per step the negative is redrawn
    until it falls outside the user's full sequence, found by binary search on
    the sorted CSR slice user_items[user_ptr[u]:user_ptr[u+1]].
    """
    n_pairs = pair_users.shape[0]
    dim = user_factors.shape[1]
    for epoch in range(n_epochs):
        acc = 0.0
        for _ in range(n_pairs):
            pidx = rng.integers(0, n_pairs)
            u = pair_users[pidx]
            ip = pair_items[pidx]
            while True:
                r = rng.integers(0, total_count) + 1
                ineg = np.searchsorted(cum_counts, r)
                lo = user_ptr[u]
                hi = user_ptr[u + 1]
                owned = False
                while lo < hi:
                    mid = (lo + hi) // 2
                    if user_items[mid] == ineg:
                        owned = True
                        break
                    if user_items[mid] < ineg:
                        lo = mid + 1
                    else:
                        hi = mid
                if not owned:
                    break
            x = 0.0
            for f in range(dim):
                x += user_factors[u, f] * (item_factors[ip, f] - item_factors[ineg, f])
            # stable -log(sigmoid(x)); g = sigmoid(x) - 1
            # math.exp/log1p lower to the same libm calls under numba, so the
            # compiled and interpreted paths stay bit-identical
            if x >= 0.0:
                ex = math.exp(-x)
                loss = math.log1p(ex)
                g = -ex / (1.0 + ex)
            else:
                ex = math.exp(x)
                loss = -x + math.log1p(ex)
                g = -1.0 / (1.0 + ex)
            reg = 0.0
            for f in range(dim):
                uf = user_factors[u, f]
                pf = item_factors[ip, f]
                nf = item_factors[ineg, f]
                reg += uf * uf + pf * pf + nf * nf
                user_factors[u, f] = uf - lr * (g * (pf - nf) + 2.0 * l2 * uf)
                item_factors[ip, f] = pf - lr * (g * uf + 2.0 * l2 * pf)
                item_factors[ineg, f] = nf - lr * (-g * uf + 2.0 * l2 * nf)
            acc += loss + l2 * reg
        epoch_loss[epoch] = acc / n_pairs


_bpr_sgd_jit = njit(cache=False)(_bpr_sgd) if HAS_NUMBA else None


def run_bpr_sgd(*args) -> None:
    if numba_enabled():
        _bpr_sgd_jit(*args)
    else:
        _bpr_sgd(*args)
