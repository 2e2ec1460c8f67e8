"""Run orchestration and the `mix` command line.

A run executes the stage pipeline solve -> schmidt -> induced -> effective
-> smf -> observables -> report on one configuration, writing CSV/JSON
artifacts and gnuplot scripts into a run directory.  Configurations are
flat key = value text files with --set overrides; unknown keys are
rejected outright.  `mix sweep` fans a config out over parameter ranges,
and `mix check` re-verifies invariants on a stored run directory.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
import traceback

import numpy as np

from . import artifacts
from .basis import OrbitalBasis
from .effective import build_effective, smf_solve, solve_effective
from .fock import Statistics, enumerate_sector
from .hamiltonian import MixtureModel, assemble, eigensolve, save_eigenstates
from .induced import antidiagonal_cut, compute_induced, diagonal_cut
from .observables import (UndefinedObservableError, correlation_set, rho1_grid,
                          species_slice)
from .schmidt import (decompose, entanglement_report, mu_identity_residuals,
                      transition_amplitudes)

STAGES = ("solve", "schmidt", "induced", "effective", "smf", "observables", "report")
STAGE_DEPS = {
    "solve": (),
    "schmidt": ("solve",),
    "induced": ("schmidt",),
    "effective": ("induced",),
    "smf": (),
    "observables": ("solve",),
    "report": (),
}


class ConfigError(ValueError):
    """Bad configuration file or override."""


_CONFIG_FIELDS: dict[str, type] = {
    "n_bosons": int,
    "n_fermions": int,
    "num_orbitals": int,
    "quad_order": int,
    "g_bf": float,
    "g_bb": float,
    "g_ff": float,
    "state_index": int,
    "grid_halfwidth": float,
    "grid_points": int,
    "lambda_floor": float,
    "ttilde_floor_rel": float,
    "weak_threshold": float,
    "smf_mixing": float,
    "smf_tol": float,
    "smf_max_iter": int,
    "dense_cutoff": int,
    "n_context_states": int,
    "stages": str,
    "checkpoint": bool,
}


@dataclasses.dataclass
class RunConfig:
    """Defaults reproduce the two-plus-two benchmark at unit coupling."""

    n_bosons: int = 2
    n_fermions: int = 2
    num_orbitals: int = 14
    quad_order: int = 0              # 0 -> 4 * num_orbitals
    g_bf: float = 1.0
    g_bb: float = 0.0
    g_ff: float = 0.0
    state_index: int = 0
    grid_halfwidth: float = 8.0
    grid_points: int = 401
    lambda_floor: float = 1e-10
    ttilde_floor_rel: float = 1e-12
    weak_threshold: float = 0.3
    smf_mixing: float = 0.5
    smf_tol: float = 1e-10
    smf_max_iter: int = 500
    dense_cutoff: int = 4000
    n_context_states: int = 1
    stages: str = "all"
    checkpoint: bool = False

    def stage_list(self) -> list[str]:
        if self.stages.strip() in ("all", ""):
            wanted = set(STAGES)
        else:
            wanted = set()
            for name in self.stages.split(","):
                name = name.strip()
                if name not in STAGES:
                    raise ConfigError(f"unknown stage {name!r}; stages are {', '.join(STAGES)}")
                wanted.add(name)
        # close over dependencies, keep canonical order
        changed = True
        while changed:
            changed = False
            for name in tuple(wanted):
                for dep in STAGE_DEPS[name]:
                    if dep not in wanted:
                        wanted.add(dep)
                        changed = True
        return [s for s in STAGES if s in wanted]

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _coerce(key: str, raw: str):
    typ = _CONFIG_FIELDS[key]
    try:
        if typ is bool:
            lowered = raw.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return typ(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r} as {typ.__name__}") from exc


def parse_config_text(text: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value.split("#", 1)[0].strip()
    return pairs


def load_config(path: str | None, overrides: list[str] = ()) -> RunConfig:
    """Config file plus --set key=value overrides; unknown keys rejected."""
    pairs: dict[str, str] = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            pairs = parse_config_text(fh.read())
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, value = item.partition("=")
        pairs[key.strip()] = value.strip()
    unknown = sorted(set(pairs) - set(_CONFIG_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = RunConfig(**{k: _coerce(k, v) for k, v in pairs.items()})
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.n_bosons < 0 or cfg.n_fermions < 0:
        raise ConfigError("particle numbers must be nonnegative")
    if cfg.num_orbitals < 1:
        raise ConfigError("num_orbitals must be positive")
    if cfg.n_fermions > cfg.num_orbitals:
        raise ConfigError(
            f"{cfg.n_fermions} fermions need at least that many orbitals "
            f"(num_orbitals = {cfg.num_orbitals})")
    if cfg.grid_points < 3 or cfg.grid_halfwidth <= 0:
        raise ConfigError("grid must have at least 3 points and positive halfwidth")
    if not 0 < cfg.smf_mixing <= 1:
        raise ConfigError("smf_mixing must lie in (0, 1]")
    if cfg.state_index < 0:
        raise ConfigError("state_index must be >= 0")
    cfg.stage_list()


def build_model(cfg: RunConfig) -> MixtureModel:
    basis = OrbitalBasis(
        cfg.num_orbitals,
        quad_order=(cfg.quad_order or None),
        grid=np.linspace(-cfg.grid_halfwidth, cfg.grid_halfwidth, cfg.grid_points))
    return MixtureModel(
        sector_b=enumerate_sector(Statistics.BOSE, cfg.n_bosons, cfg.num_orbitals),
        sector_f=enumerate_sector(Statistics.FERMI, cfg.n_fermions, cfg.num_orbitals),
        basis=basis,
        g_bf=cfg.g_bf, g_bb=cfg.g_bb, g_ff=cfg.g_ff,
        dense_cutoff=cfg.dense_cutoff)


# ---------------------------------------------------------------------------
# stage implementations; each reads/extends the shared store dict
# ---------------------------------------------------------------------------

def _stage_solve(cfg: RunConfig, store: dict, out: str) -> None:
    model = build_model(cfg)
    operator = assemble(model)
    states = eigensolve(operator, k=max(cfg.n_context_states, 1), target=cfg.state_index)
    state = states[0]
    store.update(model=model, operator=operator, states=states, state=state)
    if cfg.checkpoint:
        save_eigenstates(os.path.join(out, "eigenstates.bin"), model, states)


def _stage_schmidt(cfg: RunConfig, store: dict, out: str) -> None:
    state = store["state"]
    decomp = decompose(state, lambda_floor=cfg.lambda_floor)
    report = entanglement_report(decomp, weak_threshold=cfg.weak_threshold)
    t = transition_amplitudes(decomp, store["model"], store["operator"])
    mu_resid = mu_identity_residuals(decomp, t)
    store.update(decomp=decomp, ent_report=report, t_matrix=t, mu_residuals=mu_resid)
    idx = np.arange(1, decomp.rank + 1)
    artifacts.write_csv(os.path.join(out, "schmidt.csv"),
                        ["i", "lambda_i", "sqrt_lambda_i"],
                        [idx, decomp.lambdas, np.sqrt(decomp.lambdas)])
    r = decomp.rank
    tk = t[:r, :r]
    artifacts.write_json(os.path.join(out, "schmidt.json"), {
        "energy": decomp.energy,
        "rank": decomp.rank,
        "lambda_sum": float(decomp.full_lambdas.sum()),
        "discarded_weight": decomp.discarded_weight,
        "entropy": report.entropy,
        "dominance_ratio": report.dominance_ratio,
        "verdict": report.verdict,
        "near_degenerate": report.near_degenerate,
        "t_symmetry_max": float(np.abs(tk - tk.T).max()),
        "mu_identity_max": float(mu_resid.max()),
    })


def _stage_induced(cfg: RunConfig, store: dict, out: str) -> None:
    model = store["model"]
    induced = compute_induced(store["decomp"], model, store["operator"],
                              ttilde_floor_rel=cfg.ttilde_floor_rel)
    store["induced"] = induced
    x = induced.x
    for species in ("b", "f"):
        gam = induced.gamma_b if species == "b" else induced.gamma_f
        header = ["x"] + [f"gamma_1{i + 1}" for i in range(gam.shape[0])]
        artifacts.write_csv(os.path.join(out, f"gamma_{species}.csv"),
                            header, [x] + [gam[i] for i in range(gam.shape[0])])
        sp = induced.species[species]
        artifacts.write_kernel_csv(os.path.join(out, f"hind_{species}.csv"), x, sp.h_ind)
        r_coord, r_vals = antidiagonal_cut(sp.h_ind, x)
        artifacts.write_csv(os.path.join(out, f"hind_{species}_cut_relative.csv"),
                            ["r", "H_ind"], [r_coord, r_vals])
        c_coord, c_vals = diagonal_cut(sp.h_ind, x)
        artifacts.write_csv(os.path.join(out, f"hind_{species}_cut_center.csv"),
                            ["R", "H_ind"], [c_coord, c_vals])
    _write_vind(store, out)


def _write_vind(store: dict, out: str) -> None:
    induced = store.get("induced")
    if induced is None:
        return
    smf = store.get("smf")
    for species in ("b", "f"):
        sp = induced.species[species]
        vsmf = (smf.v_smf[species] if smf is not None
                else np.full_like(sp.x, np.nan))
        artifacts.write_csv(
            os.path.join(out, f"vind_{species}.csv"),
            ["x", "V1", "Vno", "Veff", "V_SMF", "half_x2"],
            [sp.x, sp.v1, sp.v_no, sp.v_eff, vsmf, sp.half_x2])


def _stage_effective(cfg: RunConfig, store: dict, out: str) -> None:
    model = store["model"]
    solutions = {}
    for species in ("b", "f"):
        eff = build_effective(store["induced"], store["decomp"], model, species,
                              store["operator"])
        sol = solve_effective(eff)
        solutions[species] = sol
        artifacts.write_json(os.path.join(out, f"effective_{species}.json"), {
            "species": species,
            "E1": sol.e1,
            "selected_index": sol.selected_index,
            "selected_energy": sol.selected_energy,
            "fidelity": sol.fidelity,
            "ambiguous": sol.ambiguous,
            "ambiguous_indices": sol.ambiguous_indices,
            "spectrum_low": [float(v) for v in sol.energies[:12]],
        })
    store["effective"] = solutions


def _stage_smf(cfg: RunConfig, store: dict, out: str) -> None:
    model = store.get("model")
    if model is None:
        model = build_model(cfg)
        store["model"] = model
        store["operator"] = assemble(model)
    smf = smf_solve(model, mixing=cfg.smf_mixing, tol=cfg.smf_tol,
                    max_iter=cfg.smf_max_iter, operator=store.get("operator"))
    store["smf"] = smf
    artifacts.write_json(os.path.join(out, "smf.json"), {
        "iterations": smf.iterations,
        "converged": smf.converged,
        "residuals": [float(r) for r in smf.residuals],
        "energy_history": [float(e) for e in smf.energy_history],
        "energies": smf.energies,
    })
    _write_vind(store, out)


def _stage_observables(cfg: RunConfig, store: dict, out: str) -> None:
    model = store["model"]
    basis = model.basis
    sets: dict[tuple[str, str], object] = {}
    sources: dict[str, dict[str, np.ndarray]] = {}
    state = store.get("state")
    if state is not None:
        sources["full"] = {sp: species_slice(state.coeffs, sp) for sp in ("b", "f")}
    decomp = store.get("decomp")
    if decomp is not None:
        sources["schmidt1"] = {"b": decomp.vecs_b[:, 0], "f": decomp.vecs_f[:, 0]}
    smf = store.get("smf")
    if smf is not None:
        sources["smf"] = {"b": smf.psi_b, "f": smf.psi_f}
    effective = store.get("effective")
    if effective is not None:
        sources["effective"] = {sp: effective[sp].state for sp in ("b", "f")}

    rho1_cols: dict[str, dict[str, np.ndarray]] = {"b": {}, "f": {}}
    for prov, by_species in sources.items():
        for species, vec in by_species.items():
            sector = model.sector_b if species == "b" else model.sector_f
            try:
                cset = correlation_set(sector, vec, basis, prov)
            except UndefinedObservableError:
                rho1_cols[species][prov] = rho1_grid(sector, vec, basis)
                continue
            sets[(species, prov)] = cset
            rho1_cols[species][prov] = cset.rho1
            artifacts.write_kernel_csv(
                os.path.join(out, f"g2_{species}_{prov}.csv"), cset.x, cset.g2, "g2")
            dx, dvals = cset.diagonal()
            rx, rvals = cset.antidiagonal()
            artifacts.write_csv(
                os.path.join(out, f"g2_{species}_{prov}_cuts.csv"),
                ["x", "g2_diagonal", "r", "g2_offdiagonal"],
                [dx, dvals, rx, rvals])
    for species in ("b", "f"):
        if not rho1_cols[species]:
            continue
        provs = [p for p in ("full", "smf", "effective", "schmidt1")
                 if p in rho1_cols[species]]
        artifacts.write_csv(
            os.path.join(out, f"rho1_{species}.csv"),
            ["x"] + [f"rho1_{p}" for p in provs],
            [basis.grid] + [rho1_cols[species][p] for p in provs])
    store["correlations"] = sets


def _quadratic_fit_curvature(x: np.ndarray, values: np.ndarray, halfwidth: float) -> float:
    sel = np.abs(x) <= halfwidth
    coeffs = np.polyfit(x[sel], values[sel], 2)
    return float(2.0 * coeffs[0])


def _stage_report(cfg: RunConfig, store: dict, out: str) -> None:
    summary: dict = {"schema": artifacts.SUMMARY_SCHEMA, "config": cfg.as_dict()}
    state = store.get("state")
    if state is not None:
        summary["energies"] = {"E": state.energy, **state.decomposition}
        summary["solver"] = {
            "dims": list(store["operator"].dims),
            "product_dim": store["model"].product_dim,
            "residual": state.residual,
            "state_index": state.index,
            "degenerate": state.degenerate,
        }
    decomp = store.get("decomp")
    if decomp is not None:
        report = store["ent_report"]
        r = decomp.rank
        t = store["t_matrix"][:r, :r]
        summary["schmidt"] = {
            "lambdas": [float(v) for v in decomp.lambdas[:20]],
            "lambda_sum": float(decomp.full_lambdas.sum()),
            "rank": decomp.rank,
            "discarded_weight": decomp.discarded_weight,
            "entropy": report.entropy,
            "dominance_ratio": report.dominance_ratio,
            "verdict": report.verdict,
        }
        summary["identities"] = {
            "t_symmetry_max": float(np.abs(t - t.T).max()),
            "mu_identity_max": float(store["mu_residuals"].max()),
        }
    induced = store.get("induced")
    if induced is not None:
        block: dict = {"dropped_pairs": induced.dropped}
        if induced.ttilde.size > 1:
            used = induced.species["b"].kernel_terms
            if used and store.get("t_matrix") is not None:
                t = store["t_matrix"]
                g = store["model"].g_bf
                devs = [abs(t[0, i] - g * induced.ttilde[i]) for i in used]
                summary.setdefault("identities", {})["t1i_vs_ttilde_max"] = float(max(devs))
        for species in ("b", "f"):
            sp = induced.species[species]
            x = sp.x
            r_coord, r_vals = antidiagonal_cut(sp.h_ind, x)
            block[species] = {
                "max_V1": float(np.abs(sp.v1).max()),
                "max_Vno": float(np.abs(sp.v_no).max()),
                "max_Hind": float(np.abs(sp.h_ind).max()),
                "hind_at_origin": float(r_vals[x.size // 2]),
                "kernel_terms": len(sp.kernel_terms),
                "veff_curvature_fit": _quadratic_fit_curvature(x, sp.v_eff, 1.0),
                "contributions": sp.contributions[:12],
            }
        if induced.species["b"].h_ind.size and induced.species["f"].h_ind.size:
            peak_b = float(np.abs(induced.species["b"].h_ind).max())
            peak_f = float(np.abs(induced.species["f"].h_ind).max())
            block["peak_ratio_f_over_b"] = peak_f / peak_b if peak_b > 0 else math.inf
        summary["induced"] = block
    smf = store.get("smf")
    if smf is not None:
        gap = {}
        if induced is not None:
            x = induced.x
            window = np.abs(x) <= 3.0
            for species in ("b", "f"):
                v1_vals = induced.species[species].v1[window]
                vs = smf.v_smf[species][window]
                scale = np.abs(vs).max()
                gap[species] = float(np.abs(v1_vals - vs).max() / scale) if scale else 0.0
        summary["smf"] = {
            "iterations": smf.iterations,
            "converged": smf.converged,
            "energies": smf.energies,
            "v1_vs_vsmf_gap": gap,
        }
    effective = store.get("effective")
    if effective is not None:
        summary["effective"] = {
            sp: {
                "E1": sol.e1,
                "selected_index": sol.selected_index,
                "selected_energy": sol.selected_energy,
                "fidelity": sol.fidelity,
                "ambiguous": sol.ambiguous,
            } for sp, sol in effective.items()
        }
    correlations = store.get("correlations")
    if correlations is not None:
        mid = cfg.grid_points // 2
        cblock = {}
        for (species, prov), cset in correlations.items():
            n = cset.x.size
            diag = cset.g2[np.arange(n), np.arange(n)]
            cblock[f"{species}_{prov}"] = {
                "g2_center": (None if math.isnan(cset.g2[mid, mid])
                              else float(cset.g2[mid, mid])),
                "g2_diag_max_abs": float(np.nanmax(np.abs(diag)))
                if np.isfinite(diag).any() else None,
            }
        summary["g2"] = cblock
    summary["stages"] = store["stage_status"]
    artifacts.write_json(os.path.join(out, "summary.json"), summary)
    emitted = artifacts.emit_plot_scripts(out)
    files = sorted(f for f in os.listdir(out) if not f.startswith("."))
    artifacts.write_json(os.path.join(out, "manifest.json"), {
        "stages": store["stage_status"],
        "files": files,
        "plot_scripts": emitted,
    })


_STAGE_FUNCS = {
    "solve": _stage_solve,
    "schmidt": _stage_schmidt,
    "induced": _stage_induced,
    "effective": _stage_effective,
    "smf": _stage_smf,
    "observables": _stage_observables,
    "report": _stage_report,
}


def run(cfg: RunConfig, out_dir: str, echo=print) -> int:
    """Execute the configured stages; returns a process exit code."""
    os.makedirs(out_dir, exist_ok=True)
    stages = cfg.stage_list()
    store: dict = {"stage_status": {}}
    status = store["stage_status"]
    failed: set[str] = set()
    for name in stages:
        unmet = [d for d in STAGE_DEPS[name] if d in failed or status.get(d) == "skipped"]
        if unmet:
            status[name] = "skipped"
            echo(f"[mix] stage {name}: skipped (failed dependencies: {', '.join(unmet)})")
            continue
        try:
            _STAGE_FUNCS[name](cfg, store, out_dir)
            status[name] = "ok"
            echo(f"[mix] stage {name}: ok")
        except Exception as exc:  # noqa: BLE001 - stage boundary
            failed.add(name)
            status[name] = f"failed: {exc}"
            echo(f"[mix] stage {name}: FAILED ({exc})")
            echo(traceback.format_exc())
    if "report" not in status:
        # always leave a manifest behind
        artifacts.write_json(os.path.join(out_dir, "manifest.json"), {
            "stages": status,
            "files": sorted(os.listdir(out_dir)),
        })
    return 0 if not failed else 1


def sweep(cfg_pairs: dict[str, str], vary: dict[str, list[str]], out_dir: str,
          echo=print) -> int:
    """One run per point of the cartesian parameter grid, plus an aggregate table."""
    import itertools
    if not vary or any(len(v) == 0 for v in vary.values()):
        raise ConfigError("sweep needs at least one nonempty --vary range")
    keys = sorted(vary)
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    any_failed = False
    for idx, combo in enumerate(itertools.product(*(vary[k] for k in keys))):
        overrides = [f"{k}={v}" for k, v in zip(keys, combo)]
        point_dir = os.path.join(out_dir, f"point_{idx:03d}")
        echo(f"[mix] sweep point {idx}: {' '.join(overrides)}")
        row = {"point": idx, **{k: v for k, v in zip(keys, combo)}}
        try:
            base = [f"{k}={v}" for k, v in cfg_pairs.items()]
            cfg = load_config(None, base + overrides)
            code = run(cfg, point_dir, echo=echo)
            summary = artifacts.read_json(os.path.join(point_dir, "summary.json"))
            row["status"] = "ok" if code == 0 else "failed"
            any_failed = any_failed or code != 0
            energies = summary.get("energies", {})
            row["E"] = energies.get("E")
            row["E_int_bf"] = energies.get("E_int_bf")
            schmidt_block = summary.get("schmidt", {})
            lambdas = schmidt_block.get("lambdas") or [None]
            row["lambda_1"] = lambdas[0]
            ind = summary.get("induced", {})
            row["max_Hind_b"] = ind.get("b", {}).get("max_Hind")
            row["max_Hind_f"] = ind.get("f", {}).get("max_Hind")
        except Exception as exc:  # noqa: BLE001 - point boundary
            echo(f"[mix] sweep point {idx}: FAILED ({exc})")
            row["status"] = f"failed: {exc}"
            any_failed = True
        rows.append(row)
    cols = ["point", *keys, "status", "E", "E_int_bf", "lambda_1",
            "max_Hind_b", "max_Hind_f"]
    with open(os.path.join(out_dir, "aggregate.csv"), "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join("" if row.get(c) is None else str(row.get(c))
                              for c in cols) + "\n")
    return 1 if any_failed else 0


def check(run_dir: str, echo=print) -> int:
    """Re-verify invariants on stored artifacts; 0 when everything holds."""
    problems = []

    def verify(name, ok, detail=""):
        line = f"[check] {name}: {'ok' if ok else 'FAIL'}"
        if detail:
            line += f" ({detail})"
        echo(line)
        if not ok:
            problems.append(name)

    manifest_path = os.path.join(run_dir, "manifest.json")
    manifest = {}
    if os.path.exists(manifest_path):
        manifest = artifacts.read_json(manifest_path)
        missing = [f for f in manifest.get("files", [])
                   if not os.path.exists(os.path.join(run_dir, f))]
        verify("manifest files exist", not missing, ", ".join(missing))
        for script in manifest.get("plot_scripts", []):
            refs = artifacts.script_references(run_dir, script)
            missing = [f for f in refs if not os.path.exists(os.path.join(run_dir, f))]
            verify(f"{script} references emitted files", not missing, ", ".join(missing))
    else:
        verify("manifest.json present", False)

    summary_path = os.path.join(run_dir, "summary.json")
    summary = None
    if os.path.exists(summary_path):
        summary = artifacts.read_json(summary_path)
        verify("summary schema", summary.get("schema") == artifacts.SUMMARY_SCHEMA,
               str(summary.get("schema")))
        if "energies" in summary:
            e = summary["energies"]
            total = sum(e[k] for k in ("E_kin", "E_trap", "E_int_bf", "E_int_bb", "E_int_ff"))
            verify("energy components sum to E", abs(total - e["E"]) < 1e-9,
                   f"|sum - E| = {abs(total - e['E']):.2e}")
    elif manifest.get("stages", {}).get("report") == "ok":
        verify("summary.json present", False)

    schmidt_path = os.path.join(run_dir, "schmidt.csv")
    schmidt_json = os.path.join(run_dir, "schmidt.json")
    if os.path.exists(schmidt_path) and os.path.exists(schmidt_json):
        _, data = artifacts.read_csv(schmidt_path)
        kept_sum = data[:, 1].sum()
        discarded = artifacts.read_json(schmidt_json).get("discarded_weight", 0.0)
        verify("schmidt weights sum to 1", abs(kept_sum + discarded - 1.0) < 1e-12,
               f"dev = {abs(kept_sum + discarded - 1.0):.2e}")

    for species in ("b", "f"):
        vind_path = os.path.join(run_dir, f"vind_{species}.csv")
        if os.path.exists(vind_path):
            _, data = artifacts.read_csv(vind_path)
            dev = np.abs(data[:, 5] + data[:, 1] + data[:, 2] - data[:, 3]).max()
            verify(f"vind_{species}: Veff = x^2/2 + V1 + Vno", dev < 1e-12,
                   f"max dev = {dev:.2e}")
        hind_path = os.path.join(run_dir, f"hind_{species}.csv")
        if os.path.exists(hind_path):
            _, kernel = artifacts.read_kernel_csv(hind_path)
            dev = np.abs(kernel - kernel.T).max()
            verify(f"hind_{species}: exchange symmetric", dev == 0.0, f"max dev = {dev:.2e}")
    g2f = os.path.join(run_dir, "g2_f_full.csv")
    if os.path.exists(g2f):
        _, kernel = artifacts.read_kernel_csv(g2f)
        diag = np.diagonal(kernel)
        finite = diag[np.isfinite(diag)]
        ok = finite.size == 0 or np.abs(finite).max() < 1e-10
        verify("fermionic g2 diagonal vanishes", ok,
               f"max = {np.abs(finite).max():.2e}" if finite.size else "all masked")
    return 0 if not problems else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mix",
        description="Exact diagonalization and induced-interaction analysis "
                    "of a trapped 1D Bose-Fermi mixture.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute the stage pipeline on one configuration")
    p_run.add_argument("config", nargs="?", default=None,
                       help="flat key = value config file (defaults are the benchmark)")
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key")
    p_run.add_argument("--stages", default=None,
                       help="comma list of stages (dependencies are pulled in)")
    p_run.add_argument("--out", default="mix_run", help="run directory")

    p_sweep = sub.add_parser("sweep", help="run a cartesian parameter sweep")
    p_sweep.add_argument("config", nargs="?", default=None)
    p_sweep.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p_sweep.add_argument("--vary", action="append", default=[], metavar="KEY=A,B,C",
                         help="parameter range; repeatable")
    p_sweep.add_argument("--out", default="mix_sweep")

    p_check = sub.add_parser("check", help="re-verify invariants on a run directory")
    p_check.add_argument("run_dir")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            overrides = list(args.set)
            if args.stages:
                overrides.append(f"stages={args.stages}")
            cfg = load_config(args.config, overrides)
            return run(cfg, args.out)
        if args.command == "sweep":
            pairs = {}
            if args.config:
                with open(args.config, "r", encoding="utf-8") as fh:
                    pairs = parse_config_text(fh.read())
            for item in args.set:
                key, _, value = item.partition("=")
                pairs[key.strip()] = value.strip()
            vary = {}
            for item in args.vary:
                key, _, values = item.partition("=")
                vary[key.strip()] = [v for v in values.split(",") if v != ""]
            return sweep(pairs, vary, args.out)
        if args.command == "check":
            return check(args.run_dir)
    except ConfigError as exc:
        print(f"[mix] configuration error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
