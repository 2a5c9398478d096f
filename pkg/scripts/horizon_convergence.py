#!/usr/bin/env python3
"""Finite-horizon convergence and the second-order expansion check.

For a chosen offer family, tabulates how fast the normalized maximum of a
mixed-Poisson offer stream approaches its limiting law as the horizon
grows, then (for power-tail families) compares the approach rate against
the explicit second-order term.  Ends with a seeded Monte Carlo replication
check at one horizon.
"""

import argparse

import numpy as np

from hevlab import (
    HevLaw,
    HorizonLaw,
    OfferModel,
    TypeDistribution,
    finite_cdf,
    hev_cdf,
    normalized_cdf,
    second_order_diagnostic,
    simulate_max,
)


def build_offers(args) -> OfferModel:
    if args.family == "pareto":
        return OfferModel.pareto(args.gamma)
    if args.family == "exponential":
        return OfferModel.exponential()
    return OfferModel.hall(args.gamma, args.amp, args.beta)


def run(args) -> None:
    offers = build_offers(args)
    mixing = TypeDistribution.from_atoms([0.5, 3.0], [0.8, 0.2])
    limit = HevLaw(offers.gamma, mixing)
    x = np.linspace(-0.5, 6.0, 25)
    limit_cdf = np.asarray(hev_cdf(limit, x))

    print(f"offer family: {args.family} (gamma={offers.gamma})")
    print(f"{'theta':>10} {'sup |F_theta - H|':>18}")
    for theta in args.thetas:
        law = HorizonLaw(theta, offers, mixing)
        gap = float(np.max(np.abs(np.asarray(normalized_cdf(law, x)) - limit_cdf)))
        print(f"{theta:>10.0f} {gap:>18.3e}")

    if offers.family in ("pareto", "hall"):
        print("\nsecond-order expansion (sup_ratio should shrink like A(theta)):")
        print(f"{'theta':>10} {'sup_ratio':>12} {'leading error':>14} {'|A(theta)|':>12}")
        for row in second_order_diagnostic(mixing, offers, x, args.thetas):
            amp = abs(offers.second_order_amp(row.theta))
            print(f"{row.theta:>10.0f} {row.sup_ratio:>12.3e} "
                  f"{row.leading_term_error:>14.3e} {amp:>12.3e}")

    # Simulation cost scales with n * theta, so replicate at a small horizon
    # unless the caller asks otherwise.
    theta = args.sim_theta if args.sim_theta is not None else min(args.thetas)
    law = HorizonLaw(theta, offers, mixing)
    draws = simulate_max(law, args.seed, args.n)
    a, b = law.offers.scale(theta), law.offers.location(theta)
    ts = b + a * np.array([-0.5, 0.0, 0.5, 1.5, 4.0])
    model = np.asarray(finite_cdf(law, ts))
    emp = np.asarray(draws.empirical_cdf(ts))
    se = np.sqrt(model * (1.0 - model) / draws.n)
    print(f"\nMonte Carlo at theta={theta:.0f} (n={args.n}, seed={args.seed}):")
    print(f"{'threshold':>10} {'model':>9} {'empirical':>10} {'z':>7}")
    for t, m, e, s in zip(ts, model, emp, se):
        print(f"{t:>10.4f} {m:>9.5f} {e:>10.5f} {(e - m) / s:>7.2f}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--family", choices=("pareto", "exponential", "hall"),
                        default="hall")
    parser.add_argument("--gamma", type=float, default=0.5)
    parser.add_argument("--amp", type=float, default=0.5)
    parser.add_argument("--beta", type=float, default=1.0)
    parser.add_argument("--thetas", type=float, nargs="+",
                        default=[1e2, 1e3, 1e4, 1e5])
    parser.add_argument("--sim-theta", type=float, default=None,
                        help="horizon for the Monte Carlo check (default: smallest theta)")
    parser.add_argument("--n", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=2026)
    args = parser.parse_args()
    run(args)


if __name__ == "__main__":
    main()
