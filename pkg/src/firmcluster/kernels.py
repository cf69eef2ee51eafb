"""Hot per-tick kernels of the firm-cluster model.

Every kernel has a loop implementation compiled by numba (``*_loop``) and a
vectorised numpy implementation (``*_numpy``). Random numbers are drawn by
the caller and passed in, so both variants consume the same stream.
Employees are stored contiguously by firm: firm ``k`` owns rows
``offsets[k]:offsets[k + 1]`` of the genome matrix.
"""

from __future__ import annotations

import numpy as np

from . import _accel


@_accel.njit
def crossover_loop(genomes, recipients, donors, gene_mask):
    n_events = recipients.shape[0]
    g = genomes.shape[1]
    donor_rows = np.empty((n_events, g))
    for e in range(n_events):
        donor_rows[e, :] = genomes[donors[e], :]
    for e in range(n_events):
        i = recipients[e]
        for j in range(g):
            if gene_mask[e, j]:
                genomes[i, j] = donor_rows[e, j]


def crossover_numpy(genomes, recipients, donors, gene_mask):
    # recipients are distinct here, so one fancy assignment is synchronous
    genomes[recipients] = np.where(gene_mask, genomes[donors], genomes[recipients])


@_accel.njit
def select_products_loop(genomes, fitness, offsets, keys, n_share, products, product_fitness):
    n_firms = offsets.shape[0] - 1
    for k in range(n_firms):
        a = offsets[k]
        b = offsets[k + 1]
        best = a
        for i in range(a + 1, b):
            if fitness[i] > fitness[best]:
                best = i
        products[k, :] = genomes[best, :]
        product_fitness[k] = fitness[best]
        m = n_share[k]
        if m > 0:
            order = np.argsort(keys[a:b], kind="mergesort")
            for r in range(m):
                genomes[a + order[r], :] = products[k, :]
                fitness[a + order[r]] = product_fitness[k]


def select_products_numpy(genomes, fitness, offsets, keys, n_share, products, product_fitness):
    for k in range(offsets.shape[0] - 1):
        a, b = offsets[k], offsets[k + 1]
        best = a + int(np.argmax(fitness[a:b]))
        products[k] = genomes[best]
        product_fitness[k] = fitness[best]
        m = n_share[k]
        if m > 0:
            chosen = a + np.argsort(keys[a:b], kind="stable")[:m]
            genomes[chosen] = products[k]
            fitness[chosen] = product_fitness[k]


@_accel.njit
def exchange_loop(genomes, recipients, donors, gene_mask):
    # donors read from the pre-substep snapshot; writes applied in event order
    crossover_loop(genomes, recipients, donors, gene_mask)


def exchange_numpy(genomes, recipients, donors, gene_mask):
    if recipients.shape[0] == 0:
        return
    g = genomes.shape[1]
    donor_rows = genomes[donors]
    ev, gene = np.nonzero(gene_mask)
    if ev.shape[0] == 0:
        return
    targets = recipients[ev] * g + gene
    # keep the last write per (recipient, gene) in event order
    rev_targets = targets[::-1]
    _, first_in_rev = np.unique(rev_targets, return_index=True)
    keep = ev.shape[0] - 1 - first_in_rev
    flat = genomes.reshape(-1)
    flat[targets[keep]] = donor_rows[ev[keep], gene[keep]]


@_accel.njit
def indicators_loop(fitness, products, out):
    n = fitness.shape[0]
    g = products.shape[1]
    hi = fitness[0]
    lo = fitness[0]
    total = 0.0
    for k in range(n):
        hi = max(hi, fitness[k])
        lo = min(lo, fitness[k])
        total += fitness[k]
    out[0] = hi
    out[1] = total / n
    scale = max(abs(hi), abs(lo))
    out[2] = 0.0 if scale == 0.0 else (hi - lo) / scale
    entropy = 1.0
    if n >= 2:
        mass = 0.0
        for k in range(n):
            mass += fitness[k] - lo
        if mass > 0.0:
            h = 0.0
            for k in range(n):
                w = (fitness[k] - lo) / mass
                if w > 0.0:
                    h -= w * np.log(w)
            entropy = h / np.log(n)
    out[3] = entropy
    if n < 2:
        out[4] = 0.0
        return out
    norms = np.empty(n)
    for k in range(n):
        acc = 0.0
        for j in range(g):
            acc += products[k, j] * products[k, j]
        norms[k] = np.sqrt(acc)
    dissim = 0.0
    for k in range(n):
        for l in range(n):
            if k == l:
                continue
            sim = 0.0
            if norms[k] > 0.0 and norms[l] > 0.0:
                dot = 0.0
                for j in range(g):
                    dot += products[k, j] * products[l, j]
                sim = dot / (norms[k] * norms[l])
                sim = min(1.0, max(-1.0, sim))
            dissim += 1.0 - sim
    out[4] = dissim / (2.0 * n * (n - 1))
    return out


def crossover(genomes, recipients, donors, gene_mask):
    if _accel.get_backend() == "numba":
        crossover_loop(genomes, recipients, donors, gene_mask)
    else:
        crossover_numpy(genomes, recipients, donors, gene_mask)


def select_products(genomes, fitness, offsets, keys, n_share, products, product_fitness):
    if _accel.get_backend() == "numba":
        select_products_loop(genomes, fitness, offsets, keys, n_share, products, product_fitness)
    else:
        select_products_numpy(genomes, fitness, offsets, keys, n_share, products, product_fitness)


def exchange(genomes, recipients, donors, gene_mask):
    if _accel.get_backend() == "numba":
        exchange_loop(genomes, recipients, donors, gene_mask)
    else:
        exchange_numpy(genomes, recipients, donors, gene_mask)
