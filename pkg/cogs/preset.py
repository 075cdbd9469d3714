"""
Preset command cog.
Runs a named table or figure preset, with desk-scale overrides, and renders
the figure presets' curves to SVG next to the CSV outputs.
"""

from pathlib import Path

from config import PRESETS, get_table_preset
from experiment import ExperimentConfig, run_experiment_async
from labels import get_label
from results import ResultStore
from utils.helpers import add_run_options, apply_run_options, parse_name_list
from views.svg_views import render_curves_svg
from views.table_views import format_report


class PresetCog:
    """`lab preset table1 --reps 20 --T 2000`"""

    def add_arguments(self, parser):
        parser.add_argument("name", choices=sorted(PRESETS), help="table or figure preset")
        parser.add_argument("--reps", type=int, default=None, help="replications per method")
        parser.add_argument("--T", type=int, default=None, dest="T", help="horizon override")
        parser.add_argument("--seed", type=int, default=None, help="base seed")
        parser.add_argument("--scenarios", type=parse_name_list, default=None,
                            help="subset such as a,c or seq-a,seq-c")
        add_run_options(parser)

    async def handle(self, args) -> int:
        data = get_table_preset(args.name, reps=args.reps, T=args.T, seed=args.seed, scenarios=args.scenarios)
        cfg = ExperimentConfig.from_dict(apply_run_options(data, args))
        manifest = await run_experiment_async(cfg)
        print(format_report(manifest))
        if cfg.plot:
            self.render_figures(cfg, manifest.parent)
        return 0

    @staticmethod
    def render_figures(cfg: ExperimentConfig, out_dir: Path) -> list:
        """One SVG per (scenario, plotted metric), one polyline per method."""
        curves = ResultStore.read_curves(out_dir / "curves.csv")
        written = []
        for i in range(len(cfg.scenarios)):
            scenario = cfg.scenario_label(i)
            for metric in cfg.plot:
                series = {m: v for (s, m, name), v in curves.items() if s == scenario and name == metric}
                path = out_dir / f"{scenario}_{metric}.svg"
                written.append(render_curves_svg(
                    series, path,
                    title=f"{get_label('presets', cfg.name)}: {scenario}",
                    x_label="t", y_label=get_label("metrics", metric),
                ))
        return written


def setup(subparsers):
    """Register the preset command"""
    cog = PresetCog()
    parser = subparsers.add_parser("preset", help="run a table or figure preset")
    cog.add_arguments(parser)
    parser.set_defaults(handler=cog.handle)
