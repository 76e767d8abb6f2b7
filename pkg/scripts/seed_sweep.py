"""Train the desk configuration over several seeds and print learning-curve statistics."""

import argparse

import numpy as np

from brushagent.training import TrainConfig, load_shapes, train

SHAPES = ["straight", "c_arc_wide", "s_curve"]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--episodes", type=int, default=50)
    ap.add_argument("--steps", type=int, default=16)
    ap.add_argument("--iterations", type=int, default=30)
    ap.add_argument("--threads", type=int, default=3)
    args = ap.parse_args()

    contexts = load_shapes(SHAPES)
    curves = []
    for seed in range(args.seeds):
        cfg = TrainConfig(master_seed=seed, shapes=SHAPES, threads=args.threads, episodes=args.episodes,
                          steps=args.steps, iterations=args.iterations)
        trace, _ = train(cfg, contexts)
        curve = np.array([r.avg_return for r in trace])
        tail = curve[-5:]
        print(f"seed {seed}: first {curve[0]:8.2f}  final {curve[-1]:8.2f}  tail cv {tail.std() / tail.mean():.3f}")
        curves.append(curve)
    med = np.median(curves, axis=0)
    tail = med[-5:]
    print(f"median: first {med[0]:.2f}  final {med[-1]:.2f}  ratio {med[-1] / med[0]:.1f}  "
          f"tail cv {tail.std() / tail.mean():.3f}")


if __name__ == "__main__":
    main()
