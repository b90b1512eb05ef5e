import logging
import sys

import pytorch_lightning as pl
from threadpoolctl import threadpool_limits

from args import parse_args
from quasr_experiment import run_experiment_cmd
from quasr_fit import run_fit
from quasr_simulate import run_simulate

log = logging.getLogger("quasr")

EXIT_BAD_INPUT = 2

COMMANDS = {
    "fit": run_fit,
    "simulate": run_simulate,
    "experiment": run_experiment_cmd,
}


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    if args.seed is not None:
        pl.seed_everything(args.seed)

    command = COMMANDS[args.command]
    try:
        if args.deterministic:
            with threadpool_limits(limits=1):
                return command(args)
        return command(args)
    except (ValueError, OSError) as exc:
        # QuasrError and every config validation error are ValueErrors
        log.error("%s: %s", args.command, exc)
        return EXIT_BAD_INPUT


if __name__ == '__main__':
    sys.exit(main())
