"""PT-symmetry-protected dissipative time crystals.

Finite-size Lindbladians for collective-spin models (:mod:`ptdtc.spinops`,
:mod:`ptdtc.liouville`) and their mean-field limits (:mod:`ptdtc.meanfield`,
:mod:`ptdtc.stability`).
"""
__version__ = "0.1.0"

from ._accel import backend_name  # noqa: E402,F401
