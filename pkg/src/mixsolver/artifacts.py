"""Run-directory artifacts: CSV tables, JSON blocks, gnuplot scripts.

All numeric output goes through repr() of Python floats (shortest
round-trip form), so identical runs produce byte-identical files and
reading a column back recovers the exact binary value.  Masked cells
(NaN) are serialized as empty fields.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

SUMMARY_SCHEMA = "mixsolver-summary/1"


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return ""
    return repr(v)


def write_csv(path, header: list[str], columns: list[np.ndarray]) -> None:
    n = len(columns[0])
    for col in columns:
        if len(col) != n:
            raise ValueError("CSV columns must share a length")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in range(n):
            fh.write(",".join(_fmt(col[row]) for col in columns) + "\n")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Read a CSV written by write_csv; empty fields come back as NaN."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = []
        for line in fh:
            parts = line.rstrip("\n").split(",")
            rows.append([float(p) if p else math.nan for p in parts])
    return header, np.array(rows)


def read_csv_rows(path) -> tuple[list[str], list[list[str]]]:
    """Read a CSV as raw text fields (for tables with string columns)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.rstrip("\n").split(",") for line in fh]
    return header, rows


def write_kernel_csv(path, x: np.ndarray, kernel: np.ndarray,
                     value_name: str = "H_ind") -> None:
    """Grid kernel as (x1, x2, value) rows, row-major over the mesh."""
    n = x.size
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"x1,x2,{value_name}\n")
        for i in range(n):
            xi = _fmt(x[i])
            row = kernel[i]
            for j in range(n):
                fh.write(f"{xi},{_fmt(x[j])},{_fmt(row[j])}\n")


def read_kernel_csv(path) -> tuple[np.ndarray, np.ndarray]:
    header, data = read_csv(path)
    n = int(round(math.sqrt(data.shape[0])))
    if n * n != data.shape[0]:
        raise ValueError(f"{path}: kernel rows do not form a square mesh")
    x = data[::n, 0]
    kernel = data[:, 2].reshape(n, n)
    return x, kernel


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


FIG1_SCRIPT = """\
# Effective potentials and one-body densities (both species)
set datafile separator ","
set terminal pngcairo size 1100,450
set output "fig1_effective_potentials.png"
set multiplot layout 1,2
set xlabel "x"
set xrange [-4:4]
set key top center
set title "fermionic species"
plot "vind_f.csv" using 1:6 with lines lc rgb "green" title "x^2/2", \\
     "vind_f.csv" using 1:($6+$5) with lines dashtype 2 lc rgb "blue" title "SMF", \\
     "vind_f.csv" using 1:($6+$2) with lines lc rgb "red" title "x^2/2 + V1", \\
     "vind_f.csv" using 1:4 with lines lc rgb "black" title "V_eff", \\
     "rho1_f.csv" using 1:2 with lines dashtype 3 lc rgb "brown" title "rho1"
set title "bosonic species"
plot "vind_b.csv" using 1:6 with lines lc rgb "green" title "x^2/2", \\
     "vind_b.csv" using 1:($6+$5) with lines dashtype 2 lc rgb "blue" title "SMF", \\
     "vind_b.csv" using 1:($6+$2) with lines lc rgb "red" title "x^2/2 + V1", \\
     "vind_b.csv" using 1:4 with lines lc rgb "black" title "V_eff", \\
     "rho1_b.csv" using 1:2 with lines dashtype 3 lc rgb "brown" title "rho1"
unset multiplot
"""

FIG2_SCRIPT = """\
# Pair correlations (full solution) and induced interaction kernels
set datafile separator ","
set terminal pngcairo size 1300,800
set output "fig2_induced.png"
set multiplot layout 2,3
set xlabel "x1"; set ylabel "x2"
set xrange [-3:3]; set yrange [-3:3]
set title "g2 fermions (full)"
plot "g2_f_full.csv" using 1:2:3 with image notitle
set title "H_ind fermions"
plot "hind_f.csv" using 1:2:3 with image notitle
set title "H_ind fermions: cuts"
set xlabel "r (R=0) / R (r=0)"; unset ylabel
set xrange [-6:6]; set autoscale y
plot "hind_f_cut_relative.csv" using 1:2 with lines lc rgb "blue" title "vs r", \\
     "hind_f_cut_center.csv" using 1:2 with lines dashtype 2 lc rgb "red" title "vs R"
set xlabel "x1"; set ylabel "x2"
set xrange [-3:3]; set yrange [-3:3]
set title "g2 bosons (full)"
plot "g2_b_full.csv" using 1:2:3 with image notitle
set title "H_ind bosons"
plot "hind_b.csv" using 1:2:3 with image notitle
set title "H_ind bosons: cuts"
set xlabel "r (R=0) / R (r=0)"; unset ylabel
set xrange [-6:6]; set autoscale y
plot "hind_b_cut_relative.csv" using 1:2 with lines lc rgb "blue" title "vs r", \\
     "hind_b_cut_center.csv" using 1:2 with lines dashtype 2 lc rgb "red" title "vs R"
unset multiplot
"""

FIG3_SCRIPT = """\
# Pair correlations from the effective Hamiltonians vs full and SMF cuts
set datafile separator ","
set terminal pngcairo size 1100,800
set output "fig3_g2.png"
set multiplot layout 2,2
set xlabel "x1"; set ylabel "x2"
set xrange [-3:3]; set yrange [-3:3]
set title "g2 fermions (effective)"
plot "g2_f_effective.csv" using 1:2:3 with image notitle
set title "g2 bosons (effective)"
plot "g2_b_effective.csv" using 1:2:3 with image notitle
set title "fermionic cuts"
set xlabel "r"; unset ylabel
set xrange [-6:6]; set autoscale y
plot "g2_f_effective_cuts.csv" using 3:4 with lines dashtype 2 lc rgb "blue" title "eff offdiag", \\
     "g2_f_full_cuts.csv" using 3:4 with lines lc rgb "black" title "full offdiag", \\
     "g2_f_smf_cuts.csv" using 3:4 with lines dashtype 4 lc rgb "green" title "SMF offdiag"
set title "bosonic cuts"
plot "g2_b_effective_cuts.csv" using 3:4 with lines dashtype 2 lc rgb "blue" title "eff offdiag", \\
     "g2_b_effective_cuts.csv" using 1:2 with lines dashtype 3 lc rgb "brown" title "eff diag", \\
     "g2_b_full_cuts.csv" using 3:4 with lines lc rgb "black" title "full offdiag"
unset multiplot
"""


def emit_plot_scripts(out_dir: str) -> list[str]:
    names = {
        "fig1_effective_potentials.gp": FIG1_SCRIPT,
        "fig2_induced.gp": FIG2_SCRIPT,
        "fig3_g2.gp": FIG3_SCRIPT,
    }
    for name, text in names.items():
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
            fh.write(text)
    return list(names)


def script_references(out_dir: str, script_name: str) -> list[str]:
    """Data files a gnuplot script reads (quoted names before 'using')."""
    import re
    with open(os.path.join(out_dir, script_name), "r", encoding="utf-8") as fh:
        text = fh.read()
    return sorted(set(re.findall(r'"([^"]+\.csv)"', text)))
