"""How log content becomes fixed-length token-id sequences.

Volatile fragments (IPs, big integers, hex literals, app-internal addresses)
are folded into placeholder tokens so that lines differing only in such
values collapse onto one template. The [CLS] marker leads every sequence;
[PAD] fills the tail up to the configured length.
"""

from logcause.tokenizer import TokenizerConfig, build_vocab, decode, encode, tokenize

config = TokenizerConfig(max_len=12)

samples = [
    "Network ip: 192.168.0.1 weak connection",
    "retry 42 of 7 at 0xFF3A",
    "worker @pool.shard3 accepted job 71234",
    "cache refreshed key deadbeef ttl 300 s",
]
for content in samples:
    print(f"{content!r}\n  -> {list(tokenize(content, config).tokens)}")

# same template, different volatile values: identical after abstraction
a = tokenize("request 8812 from 10.0.0.3 served in 13 ms", config)
b = tokenize("request 99 from 172.16.4.200 served in 4071 ms", config)
print("\nabstraction collapses volatile values:", a.tokens == b.tokens)

vocab = build_vocab([tokenize(c, config) for c in samples], min_count=1)
print(f"\nvocabulary: {len(vocab)} tokens, first ten: {vocab.tokens[:10]}")

ids = encode(tokenize(samples[0], config), vocab, config)
print(f"encoded ({len(ids)} ids): {ids.tolist()}")
print(f"decoded back: {decode(ids, vocab)}")
