"""Synthetic data shaped like a one-year happiness-report extract.

Column names and ranges follow the public report; values are simulated from
a latent index so the ladder score is related to the covariates. A few cells
are blanked to exercise the missing-value policy.
"""
import numpy as np
import pandas as pd

rng = np.random.default_rng(2017)
n = 141
latent = rng.normal(0, 1, n)


def noisy(scale, lo, hi, centre, spread):
    x = centre + spread * (scale * latent + np.sqrt(1 - scale**2) * rng.normal(0, 1, n))
    return np.clip(x, lo, hi).round(6)


df = pd.DataFrame({
    "country": [f"Country {i:03d}" for i in range(n)],
    "year": 2017,
    "Log GDP per capita": noisy(0.8, 6.5, 11.8, 9.2, 1.1),
    "Social support": noisy(0.7, 0.3, 0.99, 0.81, 0.11),
    "Healthy life expectancy at birth": noisy(0.75, 40, 77, 63.5, 7.0),
    "Freedom to make life choices": noisy(0.5, 0.3, 0.99, 0.78, 0.11),
    "Generosity": noisy(0.2, -0.35, 0.6, 0.0, 0.16),
    "Perceptions of corruption": noisy(-0.45, 0.05, 0.98, 0.74, 0.18),
    "Confidence in national government": noisy(0.1, 0.1, 0.98, 0.48, 0.19),
    "Democratic Quality": noisy(0.55, -2.4, 1.6, -0.1, 0.85),
    "Delivery Quality": noisy(0.7, -1.8, 2.2, 0.0, 0.95),
    "GINI of household income": noisy(-0.3, 0.2, 0.65, 0.44, 0.09),
})
df["Life Ladder"] = np.clip(5.4 + 1.05 * latent + rng.normal(0, 0.45, n), 2.6, 7.8).round(6)
for col, rows in {"Generosity": [7, 88], "Perceptions of corruption": [15, 60, 102], "GINI of household income": [33], "Life Ladder": [120]}.items():
    df.loc[rows, col] = np.nan
df.to_csv("whr2017_shaped.csv", index=False, na_rep="NA")
print(len(df), (df["Life Ladder"] >= 6).sum())
