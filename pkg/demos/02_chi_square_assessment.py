"""Chi-square tail probabilities and critical values at any scale.

Combined statistics sum second differences over thousands of sequences,
so the degrees of freedom reach the hundreds of thousands; the built-in
incomplete-gamma implementation stays accurate there without external
dependencies.
"""

from marketrng import assess, chi2_critical, chi2_sf

print("critical values at the 5% level:")
for dof in (2, 4, 8, 16, 32, 64):
    print(f"  dof={dof:3d}: {chi2_critical(0.05, dof):.4f}")

big = 4225 * 64
crit = chi2_critical(0.05, big)
print(f"\ncombined-statistic scale: dof={big}, critical={crit:.2f}")
print(f"round trip sf(critical) = {chi2_sf(crit, big):.10f} (target 0.05)")

print("\nassessing two year-level second differences at dof=2:")
for statistic in (56.58, 4.24):
    result = assess(statistic, dof=2, alpha=0.05)
    verdict = "discards uniform randomness" if result.significant else "retains the null"
    print(f"  statistic={statistic:7.2f}  p={result.p_value:.4f}  {verdict}")

print("\nthe 2-dof survival function has a closed form, exp(-x/2):")
import math

for x in (1.0, 5.991):
    print(f"  x={x}: sf={chi2_sf(x, 2):.6f}  exp(-x/2)={math.exp(-x / 2):.6f}")
