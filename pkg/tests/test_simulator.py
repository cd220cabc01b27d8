"""Simulator tests: exact oracles against hand arithmetic and brute force."""

import json
import math
from dataclasses import replace
from math import fsum

import numpy as np
import pytest

from gapdeck.cells import quantile_bins
from gapdeck.data import load_postings, load_seekers, outcome
from gapdeck.simulator import (
    BLOCK_NAMES,
    PRESETS,
    ScenarioConfig,
    clipped_mass,
    compute_oracle,
    draw_postings,
    draw_seekers,
    generate,
    oracle_phi,
    population_quintiles,
    preset,
)


def test_population_quintiles_pairs():
    masses = (0.11, 0.11, 0.105, 0.105, 0.10, 0.10, 0.095, 0.095, 0.09, 0.09)
    got = population_quintiles(tuple(range(10)), masses)
    assert got.tolist() == [1, 1, 2, 2, 3, 3, 4, 4, 5, 5]


def test_population_quintiles_three_values_match_sample_rule():
    # population rule on masses (0.4, 0.3, 0.3) over values 1 < 3 < 5
    got = population_quintiles((5.0, 1.0, 3.0), (0.3, 0.4, 0.3))
    assert got.tolist() == [4, 1, 3]
    # the sample binning of an exact-proportion draw agrees value by value
    sample = np.repeat([1.0, 3.0, 5.0], [4, 3, 3])
    bins = quantile_bins(sample, 5)
    by_value = {1.0: 1, 3.0: 3, 5.0: 4}
    assert [by_value[v] for v in sample] == bins.assignment.tolist()


def test_sampled_quintiles_agree_with_population(tmp_path):
    cfg = preset("paper-shape")
    cols = draw_seekers(cfg)
    ages = np.asarray(cfg.ages)[cols["age_idx"]]
    assert np.array_equal(
        quantile_bins(ages, 5).assignment,
        population_quintiles(cfg.ages, cfg.age_masses)[cols["age_idx"]],
    )
    regions = np.asarray(cfg.region_levels)[cols["region_idx"]]
    assert np.array_equal(
        quantile_bins(regions, 5).assignment,
        population_quintiles(cfg.region_levels, cfg.region_masses)[cols["region_idx"]],
    )
    known = cols["occ_slot"] > 0
    occ_vals = np.asarray(cfg.occ_levels)[cols["occ_slot"][known] - 1]
    assert np.array_equal(
        quantile_bins(occ_vals, 5).assignment,
        population_quintiles(cfg.occ_levels, cfg.occ_masses)[cols["occ_slot"][known] - 1],
    )


def _two_cell_config(region_coef: float) -> ScenarioConfig:
    return ScenarioConfig(
        n_seekers=100,
        n_postings=100,
        month_effects=(0.0,) * 12,
        ages=(30,),
        age_masses=(1.0,),
        age_slope=0.0,
        region_codes=(5, 27),
        region_masses=(0.5, 0.5),
        region_levels=(-0.5, 0.5),
        region_coef=region_coef,
        occ_names=("only",),
        occ_masses=(1.0,),
        occ_levels=(0.0,),
        occ_coef=0.0,
        missing_occ_share=0.0,
        missing_effect=0.0,
        gap_region_q=(0.1, 0.0, 0.3, 0.0, 0.0),
        fs_base=0.4,
        fs_region_coef=-0.4,
    )


def test_two_cell_hand_oracle():
    # female shares 0.6/0.2 on equal-mass cells -> female weights 0.75/0.25,
    # planted cell gaps 0.1/0.3 -> fully adjusted gap 0.75*0.1 + 0.25*0.3
    cfg = _two_cell_config(region_coef=0.0)
    assert oracle_phi(cfg, BLOCK_NAMES) == pytest.approx(0.15, abs=1e-12)
    assert oracle_phi(cfg, ()) == pytest.approx(0.15, abs=1e-12)
    oracle = compute_oracle(cfg)
    assert oracle.residual == pytest.approx(0.15, abs=1e-12)
    assert oracle.p_female == pytest.approx(0.4, abs=1e-12)

    # with a wage slope over regions the raw gap picks up the composition
    # term 0.12 * (E_f[L] - E_m[L]) = 0.12 * (-5/12) = -0.05
    cfg = _two_cell_config(region_coef=0.12)
    assert oracle_phi(cfg, ()) == pytest.approx(0.10, abs=1e-12)
    assert oracle_phi(cfg, ("month",)) == pytest.approx(0.10, abs=1e-12)
    assert oracle_phi(cfg, ("region",)) == pytest.approx(0.15, abs=1e-12)
    assert oracle_phi(cfg, BLOCK_NAMES) == pytest.approx(0.15, abs=1e-12)


def test_oracle_phi_rejects_unknown_block():
    with pytest.raises(ValueError):
        oracle_phi(preset("null"), ("wage",))


def test_full_set_phi_equals_female_mean_gap():
    # redundant path: lattice projection vs direct female-weighted sum of g
    cfg = replace(
        preset("paper-shape"),
        gap_age_q=(0.0, -0.01, -0.03, -0.01, 0.0),
        gap_occ_q=(0.02, 0.0, -0.01, -0.02, -0.01, 0.0),
    )
    st_ages = population_quintiles(cfg.ages, cfg.age_masses)
    st_regions = population_quintiles(cfg.region_levels, cfg.region_masses)
    st_occs = population_quintiles(cfg.occ_levels, cfg.occ_masses)
    a_bar = fsum(a * m for a, m in zip(cfg.ages, cfg.age_masses))
    l_bar = fsum(l * m for l, m in zip(cfg.region_levels, cfg.region_masses))
    o_bar = fsum(o * m for o, m in zip(cfg.occ_levels, cfg.occ_masses))
    num = []
    den = []
    for month in range(1, 13):
        for ai, (age, am) in enumerate(zip(cfg.ages, cfg.age_masses)):
            for ri, (lv, rm) in enumerate(zip(cfg.region_levels, cfg.region_masses)):
                occ_states = [(None, cfg.missing_occ_share)] + [
                    (oi, (1.0 - cfg.missing_occ_share) * om)
                    for oi, om in enumerate(cfg.occ_masses)
                ]
                for oi, om in occ_states:
                    mass = am * rm * om / 12.0
                    fs = (
                        cfg.fs_base
                        + cfg.fs_month_amp * math.sin(2.0 * math.pi * (month - 1) / 12.0)
                        + cfg.fs_age_slope * (age - a_bar)
                        + cfg.fs_region_coef * (lv - l_bar)
                        + (
                            cfg.fs_missing
                            if oi is None
                            else cfg.fs_occ_coef * (cfg.occ_levels[oi] - o_bar)
                        )
                    )
                    assert 0.02 < fs < 0.98
                    oq = 0 if oi is None else int(st_occs[oi])
                    g = (
                        cfg.gap_base
                        + cfg.gap_age_q[int(st_ages[ai]) - 1]
                        + cfg.gap_region_q[int(st_regions[ri]) - 1]
                        + cfg.gap_occ_q[oq]
                    )
                    num.append(mass * fs * g)
                    den.append(mass * fs)
    direct = fsum(num) / fsum(den)
    assert oracle_phi(cfg, BLOCK_NAMES) == pytest.approx(direct, abs=1e-12)


def _brute_config() -> ScenarioConfig:
    return ScenarioConfig(
        n_seekers=1000,
        n_postings=1000,
        seed=3,
        month_effects=tuple(
            0.012 * math.sin(2.0 * math.pi * k / 12.0 + 0.3) for k in range(12)
        ),
        ages=(30, 50),
        age_masses=(0.6, 0.4),
        age_slope=-0.004,
        region_codes=(5, 27),
        region_masses=(0.5, 0.5),
        region_levels=(-0.1, 0.1),
        region_coef=0.7,
        occ_names=("alpha", "beta"),
        occ_masses=(0.5, 0.5),
        occ_levels=(-0.1, 0.1),
        occ_coef=0.8,
        missing_occ_share=0.2,
        missing_effect=-0.05,
        gap_base=-0.1,
        gap_age_q=(0.01, 0.0, 0.0, -0.02, 0.0),
        gap_region_q=(0.005, 0.0, -0.005, 0.0, 0.0),
        gap_occ_q=(0.02, -0.01, 0.0, 0.0, 0.015, 0.0),
        fs_base=0.5,
        fs_month_amp=0.03,
        fs_age_slope=-0.002,
        fs_region_coef=-0.3,
        fs_occ_coef=-0.25,
        fs_missing=0.04,
        confounder_y=0.3,
        confounder_d=0.1,
    )


def _brute_quintiles(values, masses):
    pairs = sorted(zip(values, range(len(values))))
    cum = []
    total = 0.0
    for v, i in pairs:
        total += masses[i]
        cum.append(total)
    edges = []
    for step in (0.2, 0.4, 0.6, 0.8, 1.0):
        for (v, _), c in zip(pairs, cum):
            if c >= step - 1e-12:
                edges.append(v)
                break
    return {v: 1 + sum(1 for e in edges if e < v) for v, _ in pairs}


def test_oracle_matches_brute_force_enumeration():
    cfg = _brute_config()
    aq_of = _brute_quintiles(cfg.ages, cfg.age_masses)
    rq_of = _brute_quintiles(cfg.region_levels, cfg.region_masses)
    oq_of = _brute_quintiles(cfg.occ_levels, cfg.occ_masses)
    a_bar = fsum(a * m for a, m in zip(cfg.ages, cfg.age_masses))
    l_bar = fsum(l * m for l, m in zip(cfg.region_levels, cfg.region_masses))
    o_bar = fsum(o * m for o, m in zip(cfg.occ_levels, cfg.occ_masses))

    rows = []
    for month in range(1, 13):
        for ai, (age, am) in enumerate(zip(cfg.ages, cfg.age_masses)):
            for ri, (lv, rm) in enumerate(zip(cfg.region_levels, cfg.region_masses)):
                occ_states = [(None, cfg.missing_occ_share)] + [
                    (oi, (1.0 - cfg.missing_occ_share) * om)
                    for oi, om in enumerate(cfg.occ_masses)
                ]
                for oi, om in occ_states:
                    for u in (0, 1):
                        mass = am * rm * om * 0.5 / 12.0
                        mu = (
                            cfg.base_wage
                            + cfg.month_effects[month - 1]
                            + cfg.age_slope * (age - a_bar)
                            + cfg.region_coef * (lv - l_bar)
                            + (
                                cfg.missing_effect
                                if oi is None
                                else cfg.occ_coef * (cfg.occ_levels[oi] - o_bar)
                            )
                        )
                        fs = (
                            cfg.fs_base
                            + cfg.fs_month_amp
                            * math.sin(2.0 * math.pi * (month - 1) / 12.0)
                            + cfg.fs_age_slope * (age - a_bar)
                            + cfg.fs_region_coef * (lv - l_bar)
                            + (
                                cfg.fs_missing
                                if oi is None
                                else cfg.fs_occ_coef * (cfg.occ_levels[oi] - o_bar)
                            )
                            + cfg.confounder_d * (u - 0.5)
                        )
                        fs = min(max(fs, 0.02), 0.98)
                        aq = aq_of[age]
                        rq = rq_of[lv]
                        oq = 0 if oi is None else oq_of[cfg.occ_levels[oi]]
                        g = (
                            cfg.gap_base
                            + cfg.gap_age_q[aq - 1]
                            + cfg.gap_region_q[rq - 1]
                            + cfg.gap_occ_q[oq]
                        )
                        m0 = mu + cfg.confounder_y * (u - 0.5)
                        rows.append(
                            {
                                "x": (month, ai, ri, oi),
                                "z": (aq, rq, oq),
                                "mass": mass,
                                "fs": fs,
                                "m0": m0,
                                "m1": m0 + g,
                            }
                        )

    p = fsum(r["mass"] * r["fs"] for r in rows)
    ey1 = fsum(r["mass"] * r["fs"] * r["m1"] for r in rows) / p
    ey0 = fsum(r["mass"] * (1.0 - r["fs"]) * r["m0"] for r in rows) / (1.0 - p)

    def brute_phi(block_ids):
        groups = {}
        for r in rows:
            key = tuple(r["x"][j] for j in block_ids)
            wm, s = groups.get(key, (0.0, 0.0))
            groups[key] = (wm + r["mass"] * (1.0 - r["fs"]),
                           s + r["mass"] * (1.0 - r["fs"]) * r["m0"])
        proj = {k: s / wm for k, (wm, s) in groups.items()}
        return (
            fsum(
                r["mass"] * r["fs"] * (r["m1"] - proj[tuple(r["x"][j] for j in block_ids)])
                for r in rows
            )
            / p
        )

    oracle = compute_oracle(cfg)
    assert oracle.p_female == pytest.approx(p, abs=1e-13)
    assert oracle.mean_y_female == pytest.approx(ey1, abs=1e-11)
    assert oracle.mean_y_male == pytest.approx(ey0, abs=1e-11)
    assert oracle.raw_gap == pytest.approx(ey1 - ey0, abs=1e-11)
    for covset, ids in (("x1", (0,)), ("x2", (0, 1)), ("x3", (0, 1, 2)),
                        ("x4", (0, 1, 2, 3))):
        assert oracle.phi[covset] == pytest.approx(brute_phi(ids), abs=1e-11)

    # per-cell gaps need the observable two-stage projection: male-weighted
    # m0 within each x-cell, then female-weighted within each z-cell
    x_acc = {}
    for r in rows:
        wm = r["mass"] * (1.0 - r["fs"])
        wf = r["mass"] * r["fs"]
        acc = x_acc.setdefault(r["x"], [0.0, 0.0, 0.0, 0.0, r["z"]])
        acc[0] += wm
        acc[1] += wm * r["m0"]
        acc[2] += wf
        acc[3] += wf * r["m1"]
    z_acc = {}
    for wm, sm, wf, sf, z in x_acc.values():
        gap_x = sf / wf - sm / wm
        acc = z_acc.setdefault(z, [0.0, 0.0])
        acc[0] += wf
        acc[1] += wf * gap_x
    for (aq, rq, oq), (wf, num) in z_acc.items():
        occ = "Unknown" if oq == 0 else str(oq)
        label = f"age{aq}-region{rq}-occ{occ}"
        assert oracle.cell_gap[label] == pytest.approx(num / wf, abs=1e-10)
    assert set(oracle.cell_gap) == {
        f"age{a}-region{r}-occ{'Unknown' if o == 0 else o}"
        for (a, r, o) in z_acc
    }

    # per-occupation residual gaps, same two-stage arithmetic
    for slot, name in ((None, "Unknown"), (0, "alpha"), (1, "beta")):
        wf_t = 0.0
        num = 0.0
        for (month, ai, ri, oi), (wm, sm, wf, sf, _) in x_acc.items():
            if oi == slot:
                wf_t += wf
                num += wf * (sf / wf - sm / wm)
        assert oracle.subgroup_gaps[name] == pytest.approx(num / wf_t, abs=1e-10)


def test_oracle_telescoping_presets():
    for name in PRESETS:
        oracle = compute_oracle(preset(name))
        drift = (
            oracle.raw_gap
            - sum(oracle.contributions.values())
            - oracle.residual
        )
        assert abs(drift) < 1e-12
        assert oracle.residual == oracle.phi["x4"]
        assert list(oracle.phi) == ["x1", "x2", "x3", "x4"]


def test_null_preset_oracle_is_flat():
    oracle = compute_oracle(preset("null"))
    assert abs(oracle.raw_gap) < 1e-12
    assert all(abs(v) < 1e-12 for v in oracle.phi.values())
    assert all(abs(v) < 1e-12 for v in oracle.contributions.values())
    assert all(abs(v) < 1e-12 for v in oracle.cell_gap.values())
    assert all(abs(v) < 1e-12 for v in oracle.blp_beta_gap.values())
    assert all(abs(v) < 1e-12 for v in oracle.subgroup_gaps.values())
    assert len(oracle.cell_gap) == 150
    assert sum(oracle.cell_mass.values()) == pytest.approx(1.0, abs=1e-12)
    assert all(
        v == pytest.approx(0.45, abs=1e-12) for v in oracle.cell_female_share.values()
    )


def test_paper_shape_oracle_calibration():
    oracle = compute_oracle(preset("paper-shape"))
    assert oracle.p_female == pytest.approx(0.455, abs=1e-6)
    assert oracle.contributions["month"] == pytest.approx(0.0008, abs=1e-6)
    assert oracle.contributions["age"] == pytest.approx(0.012, abs=1e-6)
    assert oracle.contributions["region"] == pytest.approx(-0.005, abs=1e-6)
    assert oracle.contributions["occupation"] == pytest.approx(-0.035, abs=1e-6)
    assert oracle.residual == pytest.approx(-0.148, abs=1e-12)
    reported = compute_oracle(preset("paper-shape")).to_dict()["male_minus_female"]
    assert reported["contributions"]["age"] < 0
    assert 0 < reported["contributions"]["region"] < reported["contributions"]["occupation"]
    assert reported["residual"] > reported["contributions"]["occupation"]
    assert reported["raw_gap"] == pytest.approx(0.1752, abs=1e-4)


def test_u_shape_preset_plants_middle_age_dip():
    oracle = compute_oracle(preset("u-shape-heterogeneity"))
    agg = {q: [0.0, 0.0] for q in range(1, 6)}
    for label, gap in oracle.cell_gap.items():
        aq = int(label.split("-")[0][3:])
        wf = oracle.cell_mass[label] * oracle.cell_female_share[label]
        agg[aq][0] += wf
        agg[aq][1] += wf * gap
    by_q = {q: num / wf for q, (wf, num) in agg.items()}
    assert by_q[1] == pytest.approx(-0.148, abs=1e-12)
    assert by_q[2] == pytest.approx(-0.163, abs=1e-12)
    assert by_q[3] == pytest.approx(-0.198, abs=1e-12)
    assert by_q[4] == pytest.approx(-0.163, abs=1e-12)
    assert by_q[5] == pytest.approx(-0.148, abs=1e-12)


def test_blp_beta_gap_closed_form():
    gap_age_q = (0.0, -0.01, -0.03, -0.01, 0.0)
    gap_region_q = (0.0, 0.005, 0.01, 0.015, 0.02)
    gap_occ_q = (0.01, 0.0, -0.02, -0.04, -0.02, 0.0)
    cfg = replace(
        preset("paper-shape"),
        gap_base=-0.1,
        gap_age_q=gap_age_q,
        gap_region_q=gap_region_q,
        gap_occ_q=gap_occ_q,
    )
    beta = compute_oracle(cfg).blp_beta_gap
    assert beta["intercept"] == pytest.approx(-0.1 + 0.01, abs=1e-9)
    for q in range(2, 6):
        assert beta[f"age_q{q}"] == pytest.approx(gap_age_q[q - 1], abs=1e-9)
        assert beta[f"region_q{q}"] == pytest.approx(gap_region_q[q - 1], abs=1e-9)
    for q in range(1, 6):
        assert beta[f"occ_q{q}"] == pytest.approx(gap_occ_q[q] - gap_occ_q[0], abs=1e-9)


def test_subgroup_planted_gap():
    cfg = replace(
        preset("paper-shape"),
        gap_base=0.0,
        gap_occ_q=(0.0, 0.0, 0.0, 0.0, 0.0, -0.088),
    )
    oracle = compute_oracle(cfg)
    assert oracle.subgroup_gaps["engineering"] == pytest.approx(-0.088, abs=1e-12)
    for name in ("Unknown", "assembly", "care", "clerical", "sales"):
        assert oracle.subgroup_gaps[name] == pytest.approx(0.0, abs=1e-12)


def test_presets_never_clip_female_share():
    for name in PRESETS:
        assert clipped_mass(preset(name)) == 0.0


def test_generated_moments_match_oracle():
    cfg = replace(preset("paper-shape"), n_seekers=1_000_000, seed=17)
    cols = draw_seekers(cfg)
    oracle = compute_oracle(cfg)
    n = cfg.n_seekers
    d = cols["d"]
    y = cols["y"]
    p_hat = d.mean()
    assert abs(p_hat - oracle.p_female) < 4.0 * math.sqrt(0.455 * 0.545 / n)
    mean_y = p_hat * y[d == 1].mean() + (1 - p_hat) * y[d == 0].mean()
    truth = (
        oracle.p_female * oracle.mean_y_female
        + (1 - oracle.p_female) * oracle.mean_y_male
    )
    assert abs(y.mean() - truth) < 4.0 * y.std() / math.sqrt(n)
    nf = int(d.sum())
    assert abs(y[d == 1].mean() - oracle.mean_y_female) < 4.0 * y[d == 1].std() / math.sqrt(nf)
    missing_share = (cols["occ_slot"] == 0).mean()
    assert abs(missing_share - 0.1) < 4.0 * math.sqrt(0.1 * 0.9 / n)
    ages = np.asarray(cfg.ages)[cols["age_idx"]]
    a_bar = float(np.asarray(cfg.ages) @ np.asarray(cfg.age_masses))
    assert abs(ages.mean() - a_bar) < 4.0 * ages.std() / math.sqrt(n)
    assert abs(cols["u"].mean() - 0.5) < 4.0 * 0.5 / math.sqrt(n)


def test_generate_round_trip_and_determinism(tmp_path):
    cfg = replace(preset("paper-shape"), n_seekers=400, n_postings=300, seed=9)
    s1, p1, oracle1 = generate(cfg, tmp_path / "a")
    s2, p2, _ = generate(cfg, tmp_path / "b")
    assert s1.read_bytes() == s2.read_bytes()
    assert p1.read_bytes() == p2.read_bytes()
    assert (tmp_path / "a" / "oracle.json").read_bytes() == (
        tmp_path / "b" / "oracle.json"
    ).read_bytes()
    s3, _, _ = generate(replace(cfg, seed=10), tmp_path / "c")
    assert s1.read_bytes() != s3.read_bytes()

    records, report = load_seekers(str(s1))
    assert report.n_valid == 400 and not report.drops
    cols = draw_seekers(cfg)
    for i, rec in enumerate(records):
        assert rec.gender == int(cols["d"][i])
        assert rec.age == int(cfg.ages[cols["age_idx"][i]])
        assert rec.month == int(cols["month"][i])
        assert rec.region == int(cfg.region_codes[cols["region_idx"][i]])
        slot = int(cols["occ_slot"][i])
        assert rec.occupation == (None if slot == 0 else cfg.occ_names[slot - 1])
        assert outcome(rec).y == pytest.approx(float(cols["y"][i]), abs=1e-12)

    postings, preport = load_postings(str(p1))
    assert preport.n_valid == 300 and not preport.drops
    pcols = draw_postings(cfg)
    for i, rec in enumerate(postings):
        assert rec.region == int(cfg.region_codes[pcols["region_idx"][i]])
        assert rec.occupation == cfg.occ_names[pcols["occ_idx"][i]]
        assert rec.wage_lower <= rec.wage_upper

    payload = json.loads((tmp_path / "a" / "oracle.json").read_text())
    assert payload["config"]["seed"] == 9
    assert payload["oracle"]["residual"] == pytest.approx(oracle1.residual)
    assert payload["oracle"]["male_minus_female"]["residual"] == pytest.approx(
        -oracle1.residual
    )


def test_config_validation_errors():
    with pytest.raises(ValueError):
        ScenarioConfig(n_seekers=0).validate()
    with pytest.raises(ValueError):
        ScenarioConfig(age_masses=(0.5, 0.5)).validate()
    with pytest.raises(ValueError):
        ScenarioConfig(month_effects=(0.0,) * 11).validate()
    with pytest.raises(ValueError):
        ScenarioConfig(fs_base=1.2).validate()
    with pytest.raises(ValueError):
        ScenarioConfig(gap_occ_q=(0.0,) * 5).validate()
    with pytest.raises(ValueError):
        ScenarioConfig(posting_upper_max=0.9).validate()
    with pytest.raises(ValueError):
        ScenarioConfig(region_codes=(0,) + (4, 8, 11, 14, 20, 26, 28, 34, 40)).validate()
    with pytest.raises(ValueError):
        preset("missing-preset")


def test_generate_rejects_invalid_config(tmp_path):
    with pytest.raises(ValueError):
        generate(ScenarioConfig(missing_occ_share=1.5), tmp_path)
