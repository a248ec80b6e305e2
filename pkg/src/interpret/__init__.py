"""
Phrase-level attribution by incremental perspective prefixes.
"""
