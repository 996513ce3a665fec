"""
Rate curves for squared-error compression of an i.i.d. Gaussian source.

Prints the Shannon rate-distortion function R*(D) = 0.5*ln(sigma2/D) next to
the achievable rate of the sparse-regression codebook, which follows R*(D)
for small distortion ratios and switches to the straight line 1 - D/sigma2
above the crossover ratio x* ~ 0.2032 (the root of 1 - x + 0.5*ln x = 0).
"""
import numpy as np

from sparcomp import theory


def print_table(sigma2=1.0, points=15):
    x_star = theory.solve_x_star()
    print(f"crossover ratio x* = {x_star:.6f}  "
          f"(rate there: {1.0 - x_star:.6f} nats = "
          f"{(1.0 - x_star) / np.log(2):.6f} bits)\n")
    print(f"{'D/sigma2':>9}  {'R*(D)':>9}  {'R_sp(D)':>9}  {'excess':>9}  branch")
    grid = sorted(set(np.linspace(0.02, 0.98, points)) | {x_star})
    for d in grid:
        pt = theory.rate_point(sigma2, d)
        branch = ("crossover" if d == x_star
                  else "shannon" if d < x_star else "linear")
        print(f"{d:9.4f}  {pt.r_shannon:9.5f}  {pt.r_sp:9.5f}  "
              f"{pt.r_sp - pt.r_shannon:9.5f}  {branch}")


def print_exponents(sigma2=1.0):
    # above 1 - x* the codebook attains the optimal excess-distortion
    # exponent; between the covering rate and 1 - x* it falls short
    print("\nerror exponents at D/sigma2 = 0.5:")
    print(f"{'R (nats)':>9}  {'optimal':>9}  {'achieved':>9}")
    for R in (0.55, 0.65, 0.75, 0.85, 1.0, 1.2):
        opt = theory.optimal_error_exponent(R, 0.5, sigma2)
        got = theory.sparc_error_exponent(R, 0.5, sigma2)
        print(f"{R:9.3f}  {opt:9.5f}  {got:9.5f}")


if __name__ == "__main__":
    print_table()
    print_exponents()
