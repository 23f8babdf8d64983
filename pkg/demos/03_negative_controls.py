"""Three systems the certificates must reject.

1. An eigenvalue on the imaginary axis puts a sampled eigenvalue on the unit circle.
2. Feedback with F A^-1 B = -1 makes the transfer function touch 1 at zero frequency.
3. A Jordan block at a unit-modulus point makes the resolvent integral blow up as r -> 1,
   whereas a lone diagonal unit-modulus mode keeps it bounded.

Run:  python3 demos/03_negative_controls.py
"""

import math

from sdriesz import DeltaOperator, PowerBoundProbe, RieszSystem, SpectrumSpec
from sdriesz import power_bound_integral, scan_epsilon_c, unit_circle_test
from sdriesz.exceptions import NegativeMargin

axis = RieszSystem(SpectrumSpec([2j, -1.0], 20, 1.0), [0.0] * 20, [0.0] * 20)
v = unit_circle_test(axis, 0.3)
print(f"1. axis eigenvalue: passes={v.ok}; {v.reason}")

try:
    scan_epsilon_c(RieszSystem(SpectrumSpec([-1.0], 1), [1.0], [1.0]))
except NegativeMargin as exc:
    print(f"2. F A^-1 B = -1: {exc}")

probe = PowerBoundProbe()
jordan = RieszSystem(SpectrumSpec([0.5j * math.pi, -1.0], 2), [1.0, 1.0],
                     [0.0, (1j - math.exp(-1)) / (1 - math.exp(-1))])
diag = RieszSystem(SpectrumSpec([0.5j * math.pi], 1), [0.0], [0.0])
j = power_bound_integral(DeltaOperator(jordan, 1.0), probe, [0.0, 1.0])
d = power_bound_integral(DeltaOperator(diag, 1.0), probe, [1.0])
print("3. resolvent integral near the unit circle")
print("   r        Jordan block    diagonal mode")
for r, a, b in zip(probe.r_values, j, d):
    print(f"   {r:<7}  {a:12.4f}    {b:12.6f}")
