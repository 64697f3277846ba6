"""Canonical heights for abelian automorphism groups of maximal rank.

Cone Perron-Frobenius tools, character lattices, and two exact testbeds:
products of an elliptic curve with integer-matrix actions, and Wehler K3
surfaces with their Vieta involutions.
"""

__version__ = "0.1.0"

HEIGHT_CONVENTION = "hhat(P) = lim 4^-m h(x(2^m P)), no factor 1/2"
