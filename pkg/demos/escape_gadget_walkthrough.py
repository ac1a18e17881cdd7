"""An entire function whose orbit of a_1 visits a_2, a_3, ... exactly, with
the points a_n = 10 * 2^n prescribing the escape rate."""
from escfatou.constructor import escape_rate_gadget
from escfatou.dynamics import escape_rate_classify
from escfatou.funcexpr import iterate_orbit

a = [10.0 * 2 ** n for n in range(8)]
f, rep = escape_rate_gadget(a, 1.0, 5)
orbit = iterate_orbit(f, a[1], 5)
print("orbit:", [float(abs(p)) for p in orbit.points])
print("class:", escape_rate_classify(orbit, reference=a[1:7])["class"])
print("|f| on the separating rectangles:", [round(c["sup_abs"], 3) for c in rep["C"]])
