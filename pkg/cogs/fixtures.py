"""
Fixtures command cog.
Builds a packing set, draws from the radial prior or estimates a margin curve,
and dumps the result to fixture.csv.
"""

from experiment import FIXTURES, ExperimentConfig, run_experiment_async
from utils.helpers import apply_run_options
from views.table_views import format_report


class FixturesCog:
    """`lab fixtures packing --d 100 --s 5 --r 1 --delta 0.1`"""

    def add_arguments(self, parser):
        parser.add_argument("name", choices=FIXTURES)
        parser.add_argument("--d", type=int, default=100, help="dimension")
        parser.add_argument("--s", type=int, default=5, help="sparsity")
        parser.add_argument("--r", type=float, default=1.0, help="radius")
        parser.add_argument("--delta", type=float, default=0.1, help="packing separation")
        parser.add_argument("--n", type=int, default=None, help="draws (omega1) or samples (margin)")
        parser.add_argument("--seed", type=int, default=None, help="base seed")
        parser.add_argument("--out", default=None, help="output directory")

    async def handle(self, args) -> int:
        fixture = {"name": args.name, "d": args.d, "s": args.s, "r": args.r}
        if args.name == "packing":
            fixture["delta"] = args.delta
        if args.n is not None:
            fixture["n"] = args.n
        data = {"kind": "fixtures", "name": f"fixture-{args.name}", "fixture": fixture}
        if args.seed is not None:
            data["seed"] = args.seed
        cfg = ExperimentConfig.from_dict(apply_run_options(data, args))
        manifest = await run_experiment_async(cfg)
        print(format_report(manifest))
        return 0


def setup(subparsers):
    """Register the fixtures command"""
    cog = FixturesCog()
    parser = subparsers.add_parser("fixtures", help="build and dump a theory fixture")
    cog.add_arguments(parser)
    parser.set_defaults(handler=cog.handle)
