"""
Perspectrum ingestion, canonical records and corpus statistics.
"""
