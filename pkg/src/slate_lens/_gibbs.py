"""Numba kernels for collapsed Gibbs sampling.

The RNG is a self-contained xorshift64* stream so trajectories are
bit-reproducible given (input, K, alpha, beta, iterations, seed),
independent of numpy versions or thread scheduling.
"""

from __future__ import annotations

import numba as nb
import numpy as np

_U64_MULT = np.uint64(2685821657736338717)
_INV_2_53 = 1.0 / 9007199254740992.0


@nb.njit(cache=True, inline="always")
def _next_uniform(state):
    s = state[0]
    s ^= s >> np.uint64(12)
    s ^= s << np.uint64(25)
    s ^= s >> np.uint64(27)
    state[0] = s
    return float((s * _U64_MULT) >> np.uint64(11)) * _INV_2_53


@nb.njit(cache=True)
def _seed_state(seed):
    state = np.empty(1, np.uint64)
    s = np.uint64(seed) * np.uint64(6364136223846793005) + np.uint64(1442695040888963407)
    if s == np.uint64(0):
        s = np.uint64(88172645463325252)
    state[0] = s
    # warm up a few rounds so small seeds decorrelate
    for _ in range(8):
        _next_uniform(state)
    return state


@nb.njit(cache=True)
def gibbs_fit(doc_ids, word_ids, n_docs, K, V, alpha, beta, iterations,
              sample_mask, seed):
    """Collapsed Gibbs sweep over all tokens.

    Returns (topic_word_accumulator, n_samples_taken, loglik_per_iteration).
    The accumulator holds smoothed topic-word rows summed over the sampled
    iterations flagged in sample_mask.
    """
    n_tokens = word_ids.size
    state = _seed_state(seed)

    z = np.empty(n_tokens, np.int32)
    ndk = np.zeros((n_docs, K), np.float64)
    nkw = np.zeros((K, V), np.float64)
    nk = np.zeros(K, np.float64)
    nd = np.zeros(n_docs, np.float64)

    for i in range(n_tokens):
        k = int(_next_uniform(state) * K)
        if k >= K:
            k = K - 1
        z[i] = k
        ndk[doc_ids[i], k] += 1.0
        nkw[k, word_ids[i]] += 1.0
        nk[k] += 1.0
        nd[doc_ids[i]] += 1.0

    acc = np.zeros((K, V), np.float64)
    n_acc = 0
    loglik = np.zeros(iterations, np.float64)
    probs = np.empty(K, np.float64)
    vbeta = V * beta

    for it in range(iterations):
        for i in range(n_tokens):
            d = doc_ids[i]
            w = word_ids[i]
            k = z[i]
            ndk[d, k] -= 1.0
            nkw[k, w] -= 1.0
            nk[k] -= 1.0
            total = 0.0
            for kk in range(K):
                total += (ndk[d, kk] + alpha) * (nkw[kk, w] + beta) / (nk[kk] + vbeta)
                probs[kk] = total
            u = _next_uniform(state) * total
            k = 0
            while probs[k] < u and k < K - 1:
                k += 1
            z[i] = k
            ndk[d, k] += 1.0
            nkw[k, w] += 1.0
            nk[k] += 1.0

        ll = 0.0
        for i in range(n_tokens):
            d = doc_ids[i]
            w = word_ids[i]
            p = 0.0
            for kk in range(K):
                theta = (ndk[d, kk] + alpha) / (nd[d] + K * alpha)
                phi = (nkw[kk, w] + beta) / (nk[kk] + vbeta)
                p += theta * phi
            ll += np.log(p)
        loglik[it] = ll

        if sample_mask[it]:
            for kk in range(K):
                denom = nk[kk] + vbeta
                for w in range(V):
                    acc[kk, w] += (nkw[kk, w] + beta) / denom
            n_acc += 1

    return acc, n_acc, loglik


@nb.njit(cache=True)
def gibbs_infer(word_ids, topic_word, alpha, iterations, burn_in, seed):
    """Topic mixture of one document with topic_word held fixed."""
    K = topic_word.shape[0]
    n_tokens = word_ids.size
    state = _seed_state(seed)

    z = np.empty(n_tokens, np.int32)
    ndk = np.zeros(K, np.float64)
    for i in range(n_tokens):
        k = int(_next_uniform(state) * K)
        if k >= K:
            k = K - 1
        z[i] = k
        ndk[k] += 1.0

    acc = np.zeros(K, np.float64)
    n_acc = 0
    probs = np.empty(K, np.float64)
    for it in range(iterations):
        for i in range(n_tokens):
            w = word_ids[i]
            k = z[i]
            ndk[k] -= 1.0
            total = 0.0
            for kk in range(K):
                total += (ndk[kk] + alpha) * topic_word[kk, w]
                probs[kk] = total
            u = _next_uniform(state) * total
            k = 0
            while probs[k] < u and k < K - 1:
                k += 1
            z[i] = k
            ndk[k] += 1.0
        if it >= burn_in:
            denom = n_tokens + K * alpha
            for kk in range(K):
                acc[kk] += (ndk[kk] + alpha) / denom
            n_acc += 1

    return acc / max(n_acc, 1)
