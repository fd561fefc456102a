"""w-cutset sampling for discrete Bayesian networks."""
