"""Desk-scale toolkit for road-intersection design analysis.

Pipeline stages: identify intersections from OSM-style XML, abstract
intersection imagery, learn compressed design features with a sparse
convolutional autoencoder, embed them in 2D with t-SNE, join telematics
driving-behavior statistics, and serve the result for region analysis.
"""

__version__ = "0.1.0"
