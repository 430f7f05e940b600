"""Trevisan-style strong extractor with a block weak design and RSH bits."""

from bellrand.extractor.design import WeakDesign, is_prime, seed_bound, seed_length, weak_design
from bellrand.extractor.gf2 import GF2Field, irreducible_poly
from bellrand.extractor.rsh import ExtractorSpec, RSHStream, extract, rsh_bit

__all__ = [
    "ExtractorSpec",
    "GF2Field",
    "RSHStream",
    "WeakDesign",
    "extract",
    "irreducible_poly",
    "is_prime",
    "rsh_bit",
    "seed_bound",
    "seed_length",
    "weak_design",
]
