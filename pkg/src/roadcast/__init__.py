"""Traffic forecasting on roads unseen during training.

The pipeline: generate or load a sensor dataset, split it across space and
time, strip the weekly periodic component per road, contrastively pre-train a
stochastic per-road encoder, then train a gated graph-convolutional forecaster
that consumes the frozen encoder's embeddings so brand-new roads can be
forecast from a couple of days of history.
"""

__version__ = "0.1.0"
