"""
Sweep command cog.
Runs a (C0, C0_hard) sensitivity grid on one catalog scenario.
"""

from config import DEFAULT_REPS
from experiment import ExperimentConfig, sensitivity_sweep_async
from utils.helpers import add_run_options, apply_run_options, parse_float_list
from views.table_views import format_sweep


class SweepCog:
    """`lab sweep --kind bandit --scenario bandit-e --c0 1,2,3 --c0-hard 0.2,0.6`"""

    def add_arguments(self, parser):
        parser.add_argument("--kind", choices=["sequential", "bandit"], required=True)
        parser.add_argument("--scenario", required=True, help="catalog name such as seq-a or bandit-e")
        parser.add_argument("--c0", type=parse_float_list, required=True, help="comma-separated C0 values")
        parser.add_argument("--c0-hard", type=parse_float_list, required=True, dest="c0_hard",
                            help="comma-separated C0_hard values")
        parser.add_argument("--reps", type=int, default=None, help="replications per cell")
        parser.add_argument("--T", type=int, default=None, dest="T", help="horizon override")
        parser.add_argument("--seed", type=int, default=None, help="base seed")
        add_run_options(parser)

    async def handle(self, args) -> int:
        payload = {"preset": args.scenario}
        if args.T is not None:
            payload["T"] = args.T
        data = {
            "kind": args.kind,
            "name": f"sweep-{args.scenario}",
            "scenarios": [payload],
            "reps": args.reps if args.reps is not None else DEFAULT_REPS[args.kind],
        }
        if args.seed is not None:
            data["seed"] = args.seed
        base = ExperimentConfig.from_dict(apply_run_options(data, args))
        tables = await sensitivity_sweep_async(args.c0, args.c0_hard, base)
        for table in tables:
            print(format_sweep(table))
        return 0


def setup(subparsers):
    """Register the sweep command"""
    cog = SweepCog()
    parser = subparsers.add_parser("sweep", help="run a (C0, C0_hard) sensitivity grid")
    cog.add_arguments(parser)
    parser.set_defaults(handler=cog.handle)
