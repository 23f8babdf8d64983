"""How the discrete margin shrinks as the sampling period grows.

For the scalar loop x' = -x + u, u = -x the sampled margin has the closed form
2 e^{-tau} / (1 + e^{-tau}), which tends to the continuous margin 1 as tau -> 0.
The scan reproduces it.  The second table shows the same trend for the
worked example, where the closed form is (3 - e^tau) / (1 + e^tau).

Run:  python3 demos/02_margin_versus_period.py
"""

import math

from sdriesz import RieszSystem, SpectrumSpec, build_example_system, example_input
from sdriesz import scan_epsilon_c, scan_epsilon_d

scalar = RieszSystem(SpectrumSpec([-1.0], 1), [1.0], [-1.0])
print(f"scalar loop: eps_c = {scan_epsilon_c(scalar).epsilon:.6f} (large-frequency floor)")
print("  tau     scanned     closed form")
for tau in (0.8, 0.4, 0.2, 0.1, 0.05):
    exact = 2 * math.exp(-tau) / (1 + math.exp(-tau))
    print(f"  {tau:<6}  {scan_epsilon_d(scalar, tau).epsilon:.10f}  {exact:.10f}")

N = 200
sys = build_example_system([1.0], N, example_input(N, 1.0, 50)).system
print("\nworked example (only the head mode carries feedback):")
print("  tau     scanned     closed form")
for tau in (0.1, 0.3, 0.5, 0.7, 0.9):
    exact = (3 - math.exp(tau)) / (1 + math.exp(tau))
    print(f"  {tau:<6}  {scan_epsilon_d(sys, tau).epsilon:.10f}  {exact:.10f}")
