"""Desk-scale simulator for ensembles of variational quantum classifiers.

Submodules:

* ``sim`` — exact statevector simulation and shot sampling
* ``noise`` — machine profiles and trajectory-sampled noise channels
* ``ansatz`` — hardware-efficient circuit templates and CNOT variants
* ``classifier`` — confidence extraction, parameter-shift training
* ``ensemble`` — copy allocation, plurality voting, averaging baselines
* ``analysis`` — impact factors and accuracy statistics
* ``data`` — IDX ingestion and feature pooling
* ``cli`` — experiment harness
"""

__version__ = "0.1.0"
