"""
The analytic machinery behind the covering proof, evaluated at desk scale.

Walks through the pieces in the order they compose: the single-codeword
rate function f(z2) with its defining Chernoff optimization, the pairwise
exponent at positive overlap, the correlation functional g and the margin
h(alpha) = alpha*R - g(rho2) that must stay positive, and finally the
overlap-counted second-moment and Suen bounds on the failure probability
of one tiny codebook.
"""
import numpy as np

from sparcomp import make_params, theory
from sparcomp.sim import estimate_pU1, estimate_pair_prob, exact_pU1


def rate_function_block(params):
    print("single-codeword rate function f(z2) vs its Chernoff definition:")
    print(f"{'z2':>7}  {'f closed':>10}  {'f numeric':>10}  {'tilt t0':>9}")
    for z2 in np.linspace(params.D * 1.2, params.rho2, 6):
        closed = theory.f_rate(z2, params.gamma2, params.D)
        numeric = theory.chernoff_rate_oracle(z2, params.gamma2, params.D)
        t0 = theory.t0_tilt(z2, params.gamma2, params.D)
        print(f"{z2:7.3f}  {closed:10.6f}  {numeric:10.6f}  {t0:9.4f}")
    full = theory.f_rate(params.rho2, params.gamma2, params.D)
    print(f"at z2 = rho2 the closed form collapses to 0.5*ln(rho2/D) "
          f"= {full:.6f}\n")


def margin_block(params):
    print("overlap margin h(alpha) = alpha*R - g(rho2, alpha):")
    print(f"{'alpha':>6}  {'g':>9}  {'h':>9}")
    for r in range(1, params.L):
        a = r / params.L
        g = theory.g_corr(a, params.rho2, params.gamma2, params.D)
        h = theory.h_alpha(a, params.R, params.rho2, params.D)
        print(f"{a:6.3f}  {g:9.5f}  {h:9.5f}")
    astar = theory.alpha_star(params.R, params.rho2, params.D)
    if astar is not None:
        print(f"interior argmax alpha* = {astar:.6f}")
    print()


def bound_block(params, z2, samples=200_000):
    prof = theory.overlap_profile(params.L, params.M)
    print(f"overlap profile (L={params.L}, M={params.M}):",
          list(prof.counts), f" total {prof.total} = M^L\n")

    pU1 = estimate_pU1(params, z2, samples, seed=1)
    exact = exact_pU1(params, z2)
    pairs = [estimate_pair_prob(params, z2, r, samples, seed=1)
             for r in range(1, params.L)]
    print(f"P(single codeword covers | z2={z2}) = {pU1.p:.5f} "
          f"(exact noncentral chi2: {exact:.5f})")
    for r, est in enumerate(pairs, start=1):
        print(f"P(two codewords sharing {r} sections both cover) = {est.p:.5f}")

    sm = theory.second_moment_bound(params, z2, pU1.p, [e.p for e in pairs])
    su = theory.suen_bound(params, z2, pU1.p, [e.p for e in pairs])
    print(f"\nsecond-moment bound on P(no codeword covers): {sm:.5f}")
    print(f"Suen bound: {su.bound:.5f}   "
          f"(terms t1={su.t1:.4g}, t2={su.t2:.4g}, t3={su.t3:.4g})")
    tb = theory.t_bound_finite_L(params, z2)
    print(f"finite-L overlap-correction bound: ln T <= {tb.log_bound:.4f} "
          f"(converges: {tb.converges}; desk-scale b is far below "
          f"b_min = {theory.b_min(params.R, params.D, params.rho2, 'rd'):.2f})")


if __name__ == "__main__":
    params = make_params(12, 3, 4, 1.0, 0.7, seed=0)
    print(f"instance: n={params.n}, L={params.L}, M={params.M}, "
          f"R={params.R:.4f} nats, D={params.D}, rho2={params.rho2:.4f}\n")
    rate_function_block(params)
    margin_block(params)
    bound_block(params, z2=0.85)
