#!/usr/bin/env python3

from .streams import BOT_TOKEN, CORPUS_PATH, corpus_bytes, corpus_stream, load_tokens, random_stream

__all__ = ["BOT_TOKEN", "CORPUS_PATH", "corpus_bytes", "corpus_stream", "load_tokens", "random_stream"]
