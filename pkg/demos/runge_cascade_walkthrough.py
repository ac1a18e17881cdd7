"""Four-stage rational cascade: on each A_n the iterate f behaves like the
linear map T_n, so A_n is carried across into A_{n+1}."""
from escfatou.constructor import assemble_theorem1, plan_theorem1

plan = plan_theorem1(4)
f, rep = assemble_theorem1(plan)
for s in rep["stage_fits"]:
    print(f"stage ring radii ({s['rho_i']:.4g}, {s['rho_o']:.4g})  power m={s['m']}")
for a, c in zip(rep["A"], rep["containment"]):
    print(f"A_{a['n']}: sup |f - T_n| = {a['sup_deviation']:.3g} < {a['eps_tail']:.3g};"
          f"  image in A(r, R) of next stage: {c['holds']}")
print("orbit ratio bound:", rep["orbit_ratios"])
print("all hold:", rep["all_hold"])
