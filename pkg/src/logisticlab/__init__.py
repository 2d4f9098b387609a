"""Computational laboratory for the logistic family."""

import sys

# exact big integers are routinely printed to JSON
if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(0)

__version__ = "0.1.0"
