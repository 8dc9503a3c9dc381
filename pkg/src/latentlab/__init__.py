"""latentlab: latent-hierarchical binary data simulation and diagnostics.

A simulation lab for data generated by a two-stage latent hierarchy
(latent binary states -> true binary predictors -> error-prone observed
predictors), with information-theoretic and spectral diagnostics, greedy
feature-selection strategies, a random-forest probability engine, and an
experiment harness with a CLI.
"""

__version__ = "0.1.0"
