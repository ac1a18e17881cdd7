"""Nested annuli under exp: each link is certified by winding counts, and the
outer radii climb a tower ladder."""
import sys

from escfatou.dynamics import annulus_chain, chain_svg
from escfatou.funcexpr import parse_function
from escfatou.hypgeom import Annulus, covering_certificate

cube = covering_certificate(parse_function("z^3"), Annulus(1, 16), 8, 2)
print("z^3 on A(1,16): passed =", cube.passed, " predicted =", cube.predicted.to_json())

chain = annulus_chain(parse_function("exp(z)"), Annulus(10, 40), 2)
for A in chain.annuli:
    print("annulus", A.to_json())
print("stop reason:", chain.stop_reason)
if len(sys.argv) > 1:
    chain_svg(chain, sys.argv[1])
    print("wrote", sys.argv[1])
