"""
Plot command cog.
Renders one metric of any curves.csv as an SVG line chart.
"""

from labels import get_label
from results import ResultStore
from views.svg_views import render_curves_svg


class PlotCog:
    """`lab plot --curves runs/fig2/curves.csv --out fig2.svg`"""

    def add_arguments(self, parser):
        parser.add_argument("--curves", required=True, help="curves.csv written by a run")
        parser.add_argument("--out", required=True, help="SVG file to write")
        parser.add_argument("--metric", default=None, help="curve metric (default: first in file)")
        parser.add_argument("--scenario", default=None, help="scenario (default: first in file)")

    async def handle(self, args) -> int:
        curves = ResultStore.read_curves(args.curves)
        if not curves:
            raise ValueError(f"{args.curves} holds no curves")
        keys = list(curves)
        scenario = args.scenario or keys[0][0]
        metric = args.metric or next(m for s, _, m in keys if s == scenario)
        series = {method: curves[(s, method, m)] for s, method, m in keys if s == scenario and m == metric}
        if not series:
            raise ValueError(f"no {metric!r} curves for scenario {scenario!r} in {args.curves}")
        render_curves_svg(series, args.out, title=scenario, x_label="t",
                          y_label=get_label("metrics", metric))
        print(f"📊 {args.out}")
        return 0


def setup(subparsers):
    """Register the plot command"""
    cog = PlotCog()
    parser = subparsers.add_parser("plot", help="render curves.csv to SVG")
    cog.add_arguments(parser)
    parser.set_defaults(handler=cog.handle)
