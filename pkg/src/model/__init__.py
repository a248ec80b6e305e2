"""
Stance classifiers (BASE, CONS, LSTM baseline), their losses and checkpoints.
"""
