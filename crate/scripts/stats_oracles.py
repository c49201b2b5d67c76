"""Reference values for the stats test fixtures, computed with scipy/statsmodels.

Run once; the printed numbers are frozen into crates/core/tests/stats_oracles.rs.
"""
import itertools

import numpy as np
import pandas as pd
import statsmodels.api as sm
from scipy import stats
from statsmodels.formula.api import ols
from statsmodels.stats.oneway import anova_oneway

np.set_printoptions(precision=17)

print("# f_cdf")
for x, d1, d2 in [(3.0, 2, 10), (1.0, 5, 5), (0.5, 3, 7), (10.0, 1, 1),
                  (2.5, 4.5, 12.3), (1e-3, 20, 30), (50.0, 3, 200),
                  (0.9, 2, 144), (4.2, 7, 2.5), (1.7, 1, 1000)]:
    print(f"({x!r}, {d1!r}, {d2!r}, {stats.f.cdf(x, d1, d2)!r}),")

print("# welch")
welch = [
    [2.9, 3.0, 2.5, 2.6, 3.2, 2.8],
    [3.8, 2.7, 4.0, 2.4, 3.9, 4.4, 3.1],
    [2.8, 3.4, 3.7, 2.2, 2.0, 5.1, 4.7, 1.6],
]
r = anova_oneway(welch, use_var="unequal", welch_correction=True)
print(repr(r.statistic), repr(r.df), repr(r.pvalue))
two = welch[:2]
t = stats.ttest_ind(two[0], two[1], equal_var=False)
print("welch t^2", repr(t.statistic ** 2), repr(t.pvalue))

print("# shapiro")
sw = [148, 154, 158, 160, 161, 162, 166, 170, 182, 195, 236,
      152, 155, 157, 163, 164, 171, 174, 177, 190]
print(repr(stats.shapiro(sw)))
sw_small = [2.1, 3.7, 1.4]
print(repr(stats.shapiro(sw_small)))
sw7 = [0.3, -1.2, 2.2, 0.1, 0.9, -0.4, 5.0]
print(repr(stats.shapiro(sw7)))
# n = 11 hits the small-sample branch of the p-value transform
sw11 = [1.2, 0.8, 3.4, 2.2, 2.9, 1.1, 0.4, 5.6, 2.0, 1.9, 2.5]
print(repr(stats.shapiro(sw11)))

print("# levene (median)")
lev = [
    [8.88, 9.12, 9.04, 8.98, 9.00, 9.08, 9.01, 8.85, 9.06, 8.99],
    [8.88, 8.95, 9.29, 9.44, 9.15, 9.58, 8.36, 9.18, 8.67, 9.05],
    [8.95, 9.12, 8.95, 8.85, 9.03, 8.84, 9.07, 8.98, 8.86, 8.98],
]
print(repr(stats.levene(*lev, center="median")))

print("# three-way anova 2x2x2, 3 replicates")
resp = [
    4.1, 3.9, 4.5,  5.0, 5.6, 5.2,
    6.3, 6.0, 6.8,  7.9, 7.1, 7.4,
    4.4, 4.9, 4.0,  6.1, 5.8, 6.6,
    6.2, 7.0, 6.5,  9.1, 8.4, 8.8,
]
rows = []
k = 0
for a, b, c in itertools.product(range(2), range(2), range(2)):
    for _ in range(3):
        rows.append(dict(a=a, b=b, c=c, y=resp[k]))
        k += 1
df = pd.DataFrame(rows)
m = ols("y ~ C(a)*C(b)*C(c)", data=df).fit()
tab = sm.stats.anova_lm(m, typ=2)
for name, row in tab.iterrows():
    print(f"{name:20s} ss={row['sum_sq']!r} df={row['df']!r} F={row['F']!r} p={row['PR(>F)']!r}")

print("# three-way anova 3x2x2, 2 replicates (unequal level counts)")
rng = np.random.default_rng(7)
resp2 = np.round(rng.normal(10, 2, size=24), 3)
print(list(resp2))
rows = []
k = 0
for a, b, c in itertools.product(range(3), range(2), range(2)):
    for _ in range(2):
        rows.append(dict(a=a, b=b, c=c, y=resp2[k]))
        k += 1
df = pd.DataFrame(rows)
m = ols("y ~ C(a)*C(b)*C(c)", data=df).fit()
tab = sm.stats.anova_lm(m, typ=2)
for name, row in tab.iterrows():
    print(f"{name:20s} ss={row['sum_sq']!r} df={row['df']!r} F={row['F']!r} p={row['PR(>F)']!r}")
