#!/usr/bin/env python3

import json
import os

import torch

from ..utils.errors import ConfigError, FormatError
from ..utils.random import make_generator

#: Token id of the beginning-of-text token
BOT_TOKEN = 0
CORPUS_PATH = os.path.join(os.path.dirname(__file__), "corpus.txt")


def random_stream(n, vocab_size=256, seed=0, bot=True):
    """
    `n` pseudo-random token ids, drawn uniformly from `1 .. vocab_size - 1` with a generator seeded by `seed`.
    With `bot`, the stream starts with the beginning-of-text token (0).
    """
    if n < 1:
        raise ConfigError(f"A token stream needs at least one token, got n={n}")
    if vocab_size < 2:
        raise ConfigError(f"vocab_size must be at least 2, got {vocab_size}")
    n_random = n - 1 if bot else n
    draws = torch.randint(1, vocab_size, (n_random,), generator=make_generator(seed)).tolist()
    return [BOT_TOKEN] + draws if bot else draws


def corpus_bytes():
    with open(CORPUS_PATH, "rb") as f:
        return f.read()


def corpus_stream(n, offset=0, bot=True):
    """
    `n` byte-level tokens of the bundled plain-text corpus, starting at byte `offset` (and wrapping around).
    With `bot`, the stream starts with the beginning-of-text token, which no text byte uses.
    """
    if n < 1:
        raise ConfigError(f"A token stream needs at least one token, got n={n}")
    data = corpus_bytes()
    n_text = n - 1 if bot else n
    text = [data[(offset + i) % len(data)] for i in range(n_text)]
    return [BOT_TOKEN] + text if bot else text


def load_tokens(path):
    """Read a token stream: a JSON list of ints, or whitespace-separated ints."""
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        tokens = json.loads(text) if text.lstrip().startswith("[") else [int(t) for t in text.split()]
    except ValueError as e:
        raise FormatError(f"{path} is not a token list: {e}")
    if not isinstance(tokens, list) or not all(isinstance(t, int) and not isinstance(t, bool) for t in tokens):
        raise FormatError(f"{path} must hold a list of integer token ids")
    return tokens
