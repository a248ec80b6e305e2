"""
Contextual pair encoder: tokenization, sequence packing, pooled representations.
"""
