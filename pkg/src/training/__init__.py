"""
Fine-tuning loop, grid search and dev-set model selection.
"""
