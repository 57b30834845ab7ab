"""Regenerate data/synthetic_weekly_pm.csv, an 82-week three-station panel.

The panel is simulated from an MA(1) model per station with a linear trend
and annual plus semi-annual harmonics (period 52). Responses are written on
the raw (positive) scale; the covariates are rebuilt by ``--harmonics 52``.
"""
import argparse
from pathlib import Path

from mbsarma.datasets import synthetic_application_panel, write_panel
from mbsarma.model import SeriesPanel

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--seed", type=int, default=2016)
parser.add_argument("--output", default=str(Path(__file__).resolve().parents[1] / "data" / "synthetic_weekly_pm.csv"))
args = parser.parse_args()

panel = synthetic_application_panel(seed=args.seed)
# covariates are deterministic calendar terms, so only responses are stored
write_panel(args.output, SeriesPanel(panel.y, None, panel.names), raw_scale=True)
print(f"wrote {panel.n} weeks x {panel.d} stations to {args.output}")
