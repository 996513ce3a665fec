"""
Two Monte Carlo studies on seeded ensembles.

First, robustness: a dictionary drawn for a Gaussian design variance also
covers Laplace, uniform and Gauss-Markov sources of the same variance, and
the success rates conditioned on in-window blocks stay within joint
3-standard-error bands of the Gaussian baseline.

Second, the error trend: along a family of sizes sharing (R, D), the
empirical error probability falls and the implied exponent -ln(P_e)/n is
nondecreasing.
"""
import math

from sparcomp import make_params
from sparcomp.sim import SourceModel, exponent_trend, robustness_suite


def robustness_block():
    params = make_params(12, 5, 16, 1.0, 0.3, seed=7)
    models = [SourceModel("gaussian_iid", 1.0),
              SourceModel("laplace_iid", 1.0),
              SourceModel("uniform_iid", 1.0),
              SourceModel("gauss_markov", 1.0, 0.8)]
    result = robustness_suite(params, models, 300, seed=7)
    print(f"robustness at n={params.n}, L={params.L}, M={params.M}, "
          f"R={params.R:.4f}, D={params.D} (300 trials per source)")
    print(f"{'source':>18}  {'P_err':>6}  {'cond. success':>13}  in-band")
    for label, rep in result.reports.items():
        cond = result.conditional[label]
        print(f"{label:>18}  {rep.p_error:6.3f}  "
              f"{cond.rate:7.3f} +-{cond.se:5.3f}  {result.within_band[label]}")
    print()


def trend_block():
    D = math.exp(0.8) / 8   # R*(D) + 0.4 equals the family rate below
    family = [make_params(n, 3, M, 1.0, D, rho2=2.0, seed=21)
              for (n, M) in [(8, 16), (12, 64), (16, 256)]]
    print(f"exponent trend at shared R = {family[0].R:.4f} nats "
          "(400 trials per size; the acceptance suite runs 1000)")
    trend = exponent_trend(family, SourceModel("gaussian_iid", 1.0), 400,
                           seed=21)
    print(f"{'n':>3} {'M':>4}  {'P_err':>6}  {'-ln(P)/n':>8}")
    for e in trend.entries:
        exp = f"{e.exponent:8.4f}" if e.exponent is not None else "   (0 errors)"
        print(f"{e.n:3d} {e.M:4d}  {e.p_error:6.3f}  {exp}")
    print(f"fitted slope vs n: {trend.slope:+.5f} per sample")


if __name__ == "__main__":
    robustness_block()
    trend_block()
