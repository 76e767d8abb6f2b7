"""Train one policy, then tabulate DP over K against the mean-action RL rollout."""

import argparse

from brushagent.dp import compare_rl_dp, write_comparison
from brushagent.policy import PolicyParams
from brushagent.training import TrainConfig, load_shapes, train

SHAPES = ["straight", "c_arc_wide", "s_curve"]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--candidates", default="2,4,8,16,32")
    ap.add_argument("--csv", help="optional output path")
    args = ap.parse_args()

    contexts = load_shapes(SHAPES)
    trace, _ = train(TrainConfig(master_seed=args.seed, shapes=SHAPES, threads=3, episodes=50, steps=16,
                                 iterations=30), contexts)
    best = max(trace, key=lambda r: r.avg_return)
    theta = PolicyParams.from_vector(best.theta)
    rows = compare_rl_dp(contexts, theta, [int(k) for k in args.candidates.split(",")])
    print(f"{'shape':<12} {'method':<6} {'K':>3} {'return':>10} {'ms':>10}")
    for r in rows:
        print(f"{r['shape']:<12} {r['method']:<6} {str(r['candidates']):>3} {r['return']:10.2f} {r['time_ms']:10.1f}")
    if args.csv:
        write_comparison(rows, args.csv)


if __name__ == "__main__":
    main()
