"""Markov models of one-day cricket innings, from resources-left value
functions to reward recovery and match simulation."""

__version__ = "0.1.0"
