"""
Standard errors and a Wald test for the drift
=============================================

The drift estimator converges at rate ``sqrt(n h)`` and the diffusion
estimator at rate ``sqrt(n)``; the two are asymptotically independent.
"""

import numpy as np

from mdpde import DriftAffine, MdpdeConfig, fit, inference_report, simulate_path, step_size, vech

B = np.array([[-0.6, -0.2], [0.1, -0.4]])
b = np.array([2.0, 1.0])
sigma = np.array([[1.0, 0.5], [0.5, 0.7]])
alpha = 0.1

n = 2000
path = simulate_path(DriftAffine(B, b), sigma, np.zeros(2), n, step_size(n), seed=5)
res = fit(path, MdpdeConfig(alpha=alpha))

# test the true drift, then a wrong one
truth = DriftAffine(B, b).beta
for name, null in (("true drift", truth), ("no drift", np.zeros(6))):
    rep = inference_report(path, res.params, alpha, beta_null=null)
    print(f"H0 = {name}: Wald = {rep.wald_stat:.2f} on {rep.wald_df} df, p = {rep.wald_pvalue:.3g}")

# standard errors: sigma_beta is the covariance of sqrt(n h)(beta_hat - beta)
se_beta = np.sqrt(np.diag(rep.sigma_beta) / (n * path.h))
se_vech = np.sqrt(np.diag(rep.cov_vech_sigma) / n)
print("\nbeta_hat (vec(B), b):", np.round(res.params.beta, 3))
print("std errors          :", np.round(se_beta, 3))
print("vech(Sigma_hat)     :", np.round(vech(res.params.sigma), 3))
print("std errors          :", np.round(se_vech, 4))
