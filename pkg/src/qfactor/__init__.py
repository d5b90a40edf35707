"""Integer factorisation on simulated quantum hardware.

Two pipelines share this package: a statevector simulation of the iterative
order-finding circuit with a Gaussian rotation-noise model and classical
post-processing, and QUBO encodings of factoring solved by exhaustive search,
simulated annealing, or a remote sampling service, with Pegasus-graph
embedding support and a benchmarking harness.
"""

__version__ = "0.1.0"
