"""Rigorous certification of purported Maass cusp forms on Gamma0(N)."""

import flint as _flint

from .enclosure import DEFAULT_PRECISION

if _flint.ctx.prec < DEFAULT_PRECISION:
    _flint.ctx.prec = DEFAULT_PRECISION

__version__ = "0.1.0"

from .certifier import Certificate, CertifyOptions, certify, check_certificate  # noqa: E402
from .forms import load_form, shipped_example_path, validate_conditions  # noqa: E402

__all__ = ["Certificate", "CertifyOptions", "certify", "check_certificate", "load_form",
           "shipped_example_path", "validate_conditions"]
