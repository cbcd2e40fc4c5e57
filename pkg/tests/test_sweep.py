import json
import math
import os
import runpy

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncrayleigh.errors import DomainError, MissingColumn
from ncrayleigh.supremum import capacity_supremum
from ncrayleigh.sweep import (
    COLUMNS,
    METHOD_COLUMNS,
    SweepConfig,
    SweepRow,
    csv_text,
    emit_csv,
    emit_json,
    emit_plot_script,
    evaluate_row,
    figure_curves,
    format_value,
    read_csv,
    run_sweep,
    snr_grid,
    verify_point,
)

EXPECTED_HEADER = (
    "snr_db,p_linear,n_r,n_t,zeta_s,beta,c_sup_nats,c_beta_pos_nats,c_asym_nats,c_coherent_nats,"
    "c_coherent_stderr,c_sengupta_nats,c_discrete_nats,kt_violation,constraint_residual_max"
)


def test_single_point_supremum_row():
    rows = run_sweep(SweepConfig(nr_list=[1], snr_db_grid=(0, 0, 1), methods={"sup"}), workers=1)
    assert len(rows) == 1
    assert rows[0].c_sup_nats == pytest.approx(0.4769, abs=1e-4)
    assert rows[0].zeta_s == pytest.approx(0.5)


def test_zero_power_row():
    row = evaluate_row(3, -math.inf, SweepConfig(nr_list=[3], snr_db_grid=(0, 0, 1)))
    assert row.p_linear == 0.0
    assert row.c_sup_nats == 0.0 and row.zeta_s == pytest.approx(3.0)


def test_row_order_and_grid():
    cfg = SweepConfig(nr_list=[4, 1, 2], snr_db_grid=(-5, 5, 2.5), methods={"sup"})
    rows = run_sweep(cfg, workers=1)
    keys = [(r.n_r, r.snr_db) for r in rows]
    assert keys == sorted(keys)
    assert [r.snr_db for r in rows[:5]] == [-5.0, -2.5, 0.0, 2.5, 5.0]


def test_snr_grid_by_index():
    g = snr_grid(0.0, 1.0, 0.1)
    assert len(g) == 11 and g[-1] == pytest.approx(1.0)
    assert snr_grid(3.0, 3.0, 1.0) == [3.0]
    with pytest.raises(DomainError):
        snr_grid(0.0, 1.0, 0.0)
    with pytest.raises(DomainError):
        snr_grid(2.0, 1.0, 1.0)


def test_config_validation():
    with pytest.raises(DomainError):
        SweepConfig(nr_list=[], snr_db_grid=(0, 1, 1))
    with pytest.raises(DomainError):
        SweepConfig(nr_list=[1], snr_db_grid=(0, 1, 1), methods={"magic"})
    with pytest.raises(DomainError):
        SweepConfig(nr_list=[1], snr_db_grid=(0, 1, 1), seed=-1)
    with pytest.raises(DomainError):
        SweepConfig(nr_list=[1], snr_db_grid=(0, 1, 1), format="xml")


def test_populated_fields_match_methods():
    cfg = SweepConfig(nr_list=[2], snr_db_grid=(0, 0, 1), methods={"sup", "sengupta"})
    row = run_sweep(cfg, workers=1)[0]
    filled = {c for c in COLUMNS if getattr(row, c) is not None}
    assert filled == {"snr_db", "p_linear", "n_r", "n_t"} | set(METHOD_COLUMNS["sup"]) | {"c_sengupta_nats"}


def test_no_solution_is_an_empty_cell():
    cfg = SweepConfig(nr_list=[2], snr_db_grid=(-10, -10, 1), methods={"sup", "beta_pos"})
    row = run_sweep(cfg, workers=1)[0]
    assert row.c_beta_pos_nats is None
    assert "beta_pos" in row.errors
    line = csv_text([row]).splitlines()[1].split(",")
    assert line[COLUMNS.index("c_beta_pos_nats")] == ""


def test_csv_format(tmp_path):
    cfg = SweepConfig(nr_list=[1], snr_db_grid=(0, 10, 10), methods={"sup"})
    rows = run_sweep(cfg, workers=1)
    path = tmp_path / "out.csv"
    emit_csv(rows, path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    text = raw.decode("utf-8")
    lines = text.split("\n")
    assert lines[0] == EXPECTED_HEADER
    assert lines[-1] == "" and len(lines) == 4
    assert all(line == line.rstrip() for line in lines)
    first = lines[1].split(",")
    assert first[COLUMNS.index("c_sup_nats")] == format(rows[0].c_sup_nats, ".8e")
    assert ",," in lines[1]
    assert first[COLUMNS.index("c_discrete_nats")] == ""


@given(st.floats(allow_nan=False, allow_infinity=False, min_value=-1e300, max_value=1e300))
def test_format_round_trip(v):
    text = format_value(v)
    mantissa = text.split("e")[0].lstrip("-")
    assert len(mantissa.replace(".", "")) == 9
    back = float(text)
    assert back == pytest.approx(v, rel=5e-9, abs=0.0) or back == v


def test_csv_round_trip(tmp_path):
    cfg = SweepConfig(nr_list=[1, 2], snr_db_grid=(0, 20, 10), methods={"sup", "asym", "verify"})
    rows = run_sweep(cfg, workers=1)
    path = tmp_path / "rt.csv"
    emit_csv(rows, path)
    back = read_csv(path)
    assert len(back) == len(rows)
    for a, b in zip(rows, back):
        for c in COLUMNS:
            x, y = getattr(a, c), getattr(b, c)
            if x is None:
                assert y is None
            else:
                assert y == pytest.approx(x, rel=1e-8)


def test_bits_conversion():
    row = SweepRow(snr_db=0.0, p_linear=1.0, n_r=1, n_t=1, zeta_s=0.5, c_sup_nats=math.log(2.0))
    assert row.value("c_sup_nats", "bits") == pytest.approx(1.0)
    assert row.value("zeta_s", "bits") == 0.5


def test_json_output(tmp_path):
    cfg = SweepConfig(nr_list=[1], snr_db_grid=(0, 10, 10), methods={"sup"})
    rows = run_sweep(cfg, workers=1)
    path = tmp_path / "out.json"
    emit_json(rows, path)
    data = json.loads(path.read_text())
    assert len(data) == 2
    assert set(data[0]) == {"snr_db", "p_linear", "n_r", "n_t", "zeta_s", "beta", "c_sup_nats"}
    assert data[1]["c_sup_nats"] == rows[1].c_sup_nats


def test_emit_rejects_empty_rows(tmp_path):
    with pytest.raises(DomainError):
        emit_csv([], tmp_path / "x.csv")


def test_emit_reports_path_on_io_error(tmp_path):
    rows = [SweepRow(snr_db=0.0, p_linear=1.0, n_r=1, n_t=1)]
    target = tmp_path / "missing" / "x.csv"
    with pytest.raises(OSError, match="missing"):
        emit_csv(rows, target)


def test_determinism_across_workers(tmp_path):
    cfg = SweepConfig(nr_list=[1, 2], snr_db_grid=(0, 10, 10), methods={"sup", "coherent", "verify"},
                      samples=5000, seed=42)
    outputs = []
    for workers in (1, 2):
        path = tmp_path / f"w{workers}.csv"
        emit_csv(run_sweep(cfg, workers=workers), path)
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]


def test_verify_point_residuals():
    rep = verify_point(1, 30.0)
    assert rep.ok and rep.worst <= 1e-7
    assert set(rep.residuals) == {"normalization", "power", "log_moment", "bridge", "input_log_moment"}
    assert verify_point(4, 0.0).ok


def test_verify_flags_perturbed_shape():
    rep = verify_point(1, 10.0, zeta_scale=1.1)
    assert rep.residuals["log_moment"] > 1e-3
    assert not rep.ok


def _rows_for(methods, nr_list=(1, 2, 3), grid=(0, 20, 10)):
    return run_sweep(SweepConfig(nr_list=nr_list, snr_db_grid=grid, methods=methods), workers=1)


def test_fig4_curves_monotone():
    curves = figure_curves(_rows_for({"sup"}), "fig4")
    assert len(curves) == 3
    for _, _, _, _, cap in curves:
        assert all(a < b for a, b in zip(cap, cap[1:]))


def test_fig6_gaps_shrink():
    rows = _rows_for({"sup", "sengupta", "asym"}, nr_list=(10, 20, 30, 50), grid=(20, 60, 20))
    curves = figure_curves(rows, "fig6")
    assert {c[0] for c in curves} == {"supremum", "large array", "asymptotic"}
    for n_r in (10, 20, 30, 50):
        sup = [r.c_sup_nats for r in rows if r.n_r == n_r]
        sen = [r.c_sengupta_nats for r in rows if r.n_r == n_r]
        gaps = [abs(a - b) for a, b in zip(sup, sen)]
        assert gaps[0] > gaps[1] > gaps[2]


def test_fig7_ordering():
    rows = [
        SweepRow(snr_db=s, p_linear=10 ** (s / 10), n_r=1, n_t=1, c_sup_nats=capacity_supremum(1, 10 ** (s / 10)).nats,
                 c_beta_pos_nats=0.9 * capacity_supremum(1, 10 ** (s / 10)).nats,
                 c_discrete_nats=0.5 * capacity_supremum(1, 10 ** (s / 10)).nats)
        for s in (0.0, 10.0)
    ]
    curves = figure_curves(rows, "fig7")
    assert [c[0] for c in curves] == ["supremum", "beta > 0", "discrete input"]


def test_plot_script_needs_columns(tmp_path):
    with pytest.raises(MissingColumn):
        emit_plot_script(_rows_for({"sup"}), tmp_path / "f.py", "fig7")


def test_plot_script_runs(tmp_path):
    path = tmp_path / "fig4.py"
    emit_plot_script(_rows_for({"sup"}), path, "fig4")
    text = path.read_text()
    assert "matplotlib" in text and "http" not in text
    compile(text, str(path), "exec")
    pytest.importorskip("matplotlib")
    cwd = os.getcwd()
    os.chdir(tmp_path)
    try:
        runpy.run_path(str(path), run_name="__main__")
    finally:
        os.chdir(cwd)
    assert (tmp_path / "fig4.png").stat().st_size > 0
