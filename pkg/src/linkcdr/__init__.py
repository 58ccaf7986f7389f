"""Link-centric call-detail-record analytics toolkit.

Builds the call graph from raw CDR event logs, extracts mutual top-rank
pairs, computes a 175-dimensional behavioural feature vector per pair,
explains variance with PCA + varimax rotation, trains demographic
classifiers, and bounds the irreducible classification error.
"""

__version__ = "0.1.0"
