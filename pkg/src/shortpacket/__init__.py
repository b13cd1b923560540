"""Detection-versus-decoding tradeoff for short packets over AWGN.

Analytic PER for a time-multiplexed preamble and for a superimposed detection
sequence, their joint optimisation over overhead and threshold, and a seeded
Monte Carlo simulator to check the analysis.
"""

__version__ = "0.1.0"
