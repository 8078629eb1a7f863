# Low-rank Hankel solvers: penalty factorization, ADMM, SVT and CS baselines
