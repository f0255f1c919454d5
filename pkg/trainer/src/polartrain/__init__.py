"""Desk-scale surface-normal trainer for polarization datasets.

Consumes datasets produced by the ``polarshape`` command line strictly
through their on-disk formats (manifest + PFM/PNG planes) and emits
normal maps in the same formats, so predictions are scoreable with
``polarshape eval``.
"""

__version__ = "0.1.0"
