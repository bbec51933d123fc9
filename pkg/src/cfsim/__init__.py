"""cfsim: counterfactual trajectory prediction under time-varying
treatment strategies.

Subpackages:

* ``simulator`` -- stochastic hemodynamic ground truth (observational
  and seed-coupled counterfactual cohorts);
* ``model`` -- sequential conditional covariate models with ordered
  group decomposition, trained by teacher forcing;
* ``gcomp`` -- Monte-Carlo g-computation over trained (or oracle)
  models with residual-bootstrap noise and optional constant-mask
  dropout;
* ``evaluation`` -- MSE, calibration coverage, population averages and
  treatment effects, plus CSV/figure reports;
* ``pipeline`` -- experiment orchestration with a hashed manifest.
"""

__version__ = "0.1.0"
