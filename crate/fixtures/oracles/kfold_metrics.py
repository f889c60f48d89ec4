"""Per-fold metrics for a fixed set of partitions, macro-averaged over folds.

Fits each training fold with statsmodels, scores the held-out fold with
scikit-learn, and averages each metric over the folds where it is defined.
"""
import json
import sys

import numpy as np
import pandas as pd
import statsmodels.api as sm
from sklearn.metrics import accuracy_score, confusion_matrix, roc_auc_score

src, parts, out = sys.argv[1], sys.argv[2], sys.argv[3]
df = pd.read_csv(src)
y = df["y"].to_numpy(int)
X = np.column_stack([np.ones(len(df)), df.drop(columns="y").to_numpy(float)])
folds = json.load(open(parts))
L = sm.families.links
links = {"probit": L.Probit(), "logit": L.Logit(), "cauchit": L.Cauchy(), "cloglog": L.CLogLog()}

result = {}
for name, link in links.items():
    per_fold = []
    for f in folds:
        tr, te = f["train"], f["test"]
        fit = sm.GLM(y[tr], X[tr], family=sm.families.Binomial(link=link)).fit(tol=1e-12, maxiter=200)
        score = fit.predict(X[te])
        pred = (score >= 0.5).astype(int)
        tn, fp, fn, tp = confusion_matrix(y[te], pred, labels=[0, 1]).ravel()
        both = 0 < y[te].sum() < len(te)
        per_fold.append({
            "e1": accuracy_score(y[te], pred),
            "e2": tp / (tp + fn) if tp + fn else None,
            "e3": tn / (tn + fp) if tn + fp else None,
            "e4": roc_auc_score(y[te], score) if both else None,
        })
    agg = {}
    for m in ("e1", "e2", "e3", "e4"):
        vals = [p[m] for p in per_fold if p[m] is not None]
        agg[m] = float(np.mean(vals))
    result[name] = {"metrics": agg, "folds": per_fold}
    print(name, agg)

json.dump(result, open(out, "w"), indent=2, default=float)
open(out, "a").write("\n")
