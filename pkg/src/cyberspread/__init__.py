"""Cyber-risk spreading on scale-free networks with dependent waiting times.

Modules
-------
graphgen
    Static-model scale-free graph sampler and degree diagnostics.
waiting
    Weibull waiting-time laws parameterized by mean and variance.
gausscop
    Exchangeable Gaussian copula and its partial derivatives.
engine
    Event-driven infection/recovery simulation on a graph.
experiment
    Seeded parameter sweeps producing regression datasets.
analytics
    Box-Cox OLS and negative binomial fits, drop-one tables, pricing.
plotdata
    Plot-ready tables (trajectory step paths, histograms).
cli
    ``cyberspread`` command with JSON manifests and replay.
"""

__version__ = "0.1.0"
