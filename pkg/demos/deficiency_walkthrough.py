"""Value distribution of (e^z - 1)/(e^-z + 1): the proximity function carries
about half of the characteristic, so infinity has deficiency near 1/2."""
from escfatou.funcexpr import resolve
from escfatou.nevanlinna import circle_profile, deficiency_scan

f = resolve("quotient")
for r in (10.0, 20.0, 40.0, 80.0):
    p = circle_profile(f, r)
    print(f"r={r:5.1f}  m={p.proximity:9.4f}  N={p.integrated_counting:9.4f}  T={p.characteristic:9.4f}  "
          f"m/T={p.proximity / p.characteristic:.4f}")

scan = deficiency_scan(f, [20, 40, 60, 80, 120])
print("liminf estimate of m/T:", round(scan.liminf_estimate, 4))
