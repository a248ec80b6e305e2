"""
Shared helpers for the Stancy toolkit: errors, file IO, seeding.
"""
