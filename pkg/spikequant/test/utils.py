#!/usr/bin/env python3

import torch

from ..models import ModelConfig, SpikeInjectionSpec, bot_spike, synth_model
from ..numerics import Fp8Format

#: The injection of the spike phenomenology experiments: one channel of the second layer's down projection
SPIKE_INJECTION = (2, "down", 5, 300.0)


def loop_matmul(a, b):
    """Naive triple loop in float32, accumulating left-to-right over the inner dimension."""
    m, k = a.shape
    n = b.size(1)
    res = torch.zeros(m, n, dtype=torch.float32)
    for i in range(m):
        for j in range(n):
            acc = torch.tensor(0.0, dtype=torch.float32)
            for t in range(k):
                acc = acc + a[i, t] * b[t, j]
            res[i, j] = acc
    return res


def _nearest_even(candidates, x):
    """
    For every x (N,), the candidate (C,) closest to it; exact ties go to the candidate with even index.
    Distances are computed in double precision.
    """
    dist = (x.double().unsqueeze(-1) - candidates.double().unsqueeze(0)).abs()
    best = dist.min(dim=-1, keepdim=True).values
    tied = dist == best
    index = torch.arange(candidates.numel()).expand_as(dist)
    # prefer even indices among the tied candidates, then the smallest
    key = torch.where(tied, index + (index % 2) * candidates.numel(), torch.full_like(index, 4 * candidates.numel()))
    return key.argmin(dim=-1)


def brute_force_int(rows, bits, chunk=1024):
    """
    Per-row symmetric quantization by exhaustive search over the 2^b - 1 codes of each row's grid
    :math:`\\{k \\Delta\\}`, :math:`\\Delta = \\max|row| / (2^{b-1} - 1)`. Ties go to even k.
    """
    qmax = 2 ** (bits - 1) - 1
    codes = torch.arange(-qmax, qmax + 1, dtype=torch.float64)
    odd = codes.abs() % 2 == 1
    res = []
    for block in rows.split(chunk):
        amax = block.abs().amax(dim=-1).double()
        scale = torch.where(amax > 0, amax / qmax, torch.ones_like(amax)).unsqueeze(-1)
        candidates = codes * scale.unsqueeze(-1)
        dist = (block.double().unsqueeze(-1) - candidates).abs()
        tied = dist == dist.min(dim=-1, keepdim=True).values
        # among the tied codes the even one has key 0; argmin returns the first minimum
        key = torch.where(tied, odd.long().expand_as(dist), torch.full_like(dist, 2, dtype=torch.long))
        picked = codes[key.argmin(dim=-1)]
        res.append((picked * scale).to(torch.float32))
    return torch.cat(res)


def brute_force_fp8(x, fmt):
    """Nearest finite value of `fmt` for every element of `x` (ties to the even code), saturating."""
    if not isinstance(fmt, Fp8Format):
        raise TypeError(fmt)
    grid = fmt.positive_grid()
    flat = x.reshape(-1)
    picked = grid[_nearest_even(grid, flat.abs().clamp(max=float(grid[-1])))]
    return torch.where(torch.signbit(flat), -picked, picked).reshape(x.shape)


def tiny_config(**kwargs):
    """A two-layer model small enough for exhaustive tests."""
    defaults = dict(n_layers=2, d_model=16, n_heads=2, d_ff=40, vocab_size=32)
    defaults.update(kwargs)
    return ModelConfig(**defaults)


def tiny_model(seed=0, inject=None, **kwargs):
    return synth_model(tiny_config(**kwargs), inject=inject, seed=seed)


def spiked_model(seed=0, config=None):
    """The default-size model with a single spike born in the second layer's down projection."""
    return synth_model(config, inject=SpikeInjectionSpec([SPIKE_INJECTION]), seed=seed)


def bot_spiked_model(seed=0, config=None):
    return synth_model(config, inject=bot_spike(channel=5, scale=100.0), seed=seed)
