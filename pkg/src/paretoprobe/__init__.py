"""Probe-based evaluation of word representations as complexity-accuracy trade-offs.

The package trains families of probes (linear, MLP, biaffine head selection)
on tagging, arc labeling, and head selection tasks, measures each probe's
complexity (nuclear norm, rank, or memorization of shuffled data) next to its
accuracy, and aggregates probe populations into Pareto frontiers and
hypervolume scores per representation.
"""

__version__ = "0.1.0"
