"""Command line for the trainer: ``train`` and ``infer``.

Flags mirror the training configuration; datasets are addressed by the
pipeline manifest they were generated with.
"""

import argparse
import sys

from .config import ConfigurationError, DataError, ModelConfig, TrainConfig


def _widths(text):
    return tuple(int(t) for t in text.split(","))


def build_parser():
    parser = argparse.ArgumentParser(prog="polartrain", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("train", help="train a normal estimator on a pipeline dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="checkpoint/output directory")
    p.add_argument("--split", help="restrict to one manifest split")
    p.add_argument("--lr", type=float, default=TrainConfig.learning_rate)
    p.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)
    p.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    p.add_argument("--lr-step-epochs", type=int, default=TrainConfig.lr_step_epochs)
    p.add_argument("--lr-decay", type=float, default=TrainConfig.lr_decay)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=0)
    p.add_argument("--widths", type=_widths, default=ModelConfig.unet_channel_widths)
    p.add_argument("--no-polar", action="store_true", help="feed RGB only (ablation)")
    p.add_argument("--no-backbone", action="store_true", help="plain UNet (ablation)")
    p.add_argument("--aug-mode", choices=("pre", "post", "off"), default="pre")
    p.set_defaults(cmd="train")

    p = sub.add_parser("infer", help="write predicted normal maps for a manifest")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split")
    p.set_defaults(cmd="infer")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not getattr(args, "cmd", None):
        build_parser().print_usage(sys.stderr)
        return 1
    try:
        if args.cmd == "train":
            from .train import train

            model_cfg = ModelConfig(
                unet_channel_widths=args.widths,
                with_polar=not args.no_polar,
                with_backbone=not args.no_backbone,
                aug_mode=args.aug_mode,
            )
            train_cfg = TrainConfig(
                learning_rate=args.lr,
                batch_size=args.batch_size,
                epochs=args.epochs,
                lr_step_epochs=args.lr_step_epochs,
                lr_decay=args.lr_decay,
                seed=args.seed,
                max_steps=args.max_steps,
            )
            ckpt, losses = train(args.manifest, model_cfg, train_cfg, args.out, args.split)
            print(f"trained {len(losses)} step(s); final loss {losses[-1]:.5f}; checkpoint {ckpt}")
        else:
            from .infer import infer

            written = infer(args.checkpoint, args.manifest, args.out, args.split)
            print(f"wrote {len(written)} normal map(s) to {args.out}")
        return 0
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
