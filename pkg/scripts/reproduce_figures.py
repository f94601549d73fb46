"""Write the four figure tables and the zero/extremum reports for the planar curves."""

import argparse
import json
from pathlib import Path

from boolcov import curves
from boolcov.reporting import write_csv, write_json


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results/figures")
    args = ap.parse_args()
    out = Path(args.out_dir)
    for n in (1, 2, 3, 4):
        header, data = curves.figure_table(n)
        print(write_csv(out / f"figure{n}.csv", header, data, {"figure": n}))
    for name in ("sigma01", "sigma02", "sigma12"):
        f = curves.curve(name)
        rep = {"zeros": curves.zeros(f, 0.005, 4.0), "extrema": curves.extrema(f, 0.005, 4.0, 0.01)}
        write_json(out / f"{name}.json", rep)
        print(name, json.dumps([z["root"] for z in rep["zeros"]]))
        for e in rep["extrema"]:
            tag = "global " if e["global"] else ""
            print(f"  {tag}{e['kind']} at {e['location']:.7f}: {e['value']:.9f}")


if __name__ == "__main__":
    main()
