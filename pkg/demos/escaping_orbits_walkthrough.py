"""Two linearly escaping orbits and a fast-escape membership check for exp."""
import math

from escfatou.dynamics import escape_rate_classify, fast_escape_membership
from escfatou.funcexpr import iterate_orbit, parse_function

o = iterate_orbit(parse_function("z+sin(z)+2*pi"), math.pi, 200)
print("f^200(pi)/(2 pi 200) =", abs(o.points[200]) / (400 * math.pi), escape_rate_classify(o)["class"])
o = iterate_orbit(parse_function("z+exp(-z)+2*pi*i"), 10.0, 200)
print("|f^200(10)|/(2 pi 200) =", abs(o.points[200]) / (400 * math.pi))

exp = parse_function("exp(z)")
for z in (100.0, 3.0, -1.0):
    v = fast_escape_membership(exp, z, 50.0, 3, 6)
    print(f"z={z:6.1f}: {v.verdict}  L={v.L}")
