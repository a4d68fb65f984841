"""Run the BW/DS/SNR/K sweeps and draw the MI trend figures."""
import argparse
from pathlib import Path

from skgsim.experiments import SweepConfig, emit_trend_figures, run_sweep, write_table

MHZ, NS = 1e6, 1e-9


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/trends")
    ap.add_argument("--frames", type=int, default=5000)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out)
    base = dict(n_frames=args.frames, n_seeds=args.seeds, jobs=args.jobs)
    grids = {
        "snr_bw": dict(bw_list=[b * MHZ for b in (50, 100, 200, 300, 400)],
                       snr_db_list=[float(s) for s in range(0, 34, 3)]),
        "snr_ds": dict(bw_list=[200 * MHZ], ds_list=[d * NS for d in (25, 50, 100, 150, 200, 300)],
                       snr_db_list=[float(s) for s in range(0, 34, 3)]),
        "k": dict(bw_list=[200 * MHZ], k_db_list=[0.0, 10.0, 20.0, 30.0],
                  snr_db_list=[float(s) for s in range(0, 34, 3)]),
    }
    rows = []
    for name, grid in grids.items():
        print(f"sweep {name}")
        rows += run_sweep(SweepConfig(output_dir=str(out / name), **base, **grid))
    path = write_table(rows, out / "all.csv")
    for p in emit_trend_figures(path, out):
        print(f"wrote {p}")


if __name__ == "__main__":
    main()
