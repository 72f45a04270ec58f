import numpy as np
import pytest

from dptestbed.thrusters import (
    Thruster,
    ThrusterLayout,
    build_config_matrix,
    config_column_derivative,
    load_layout,
    parse_layout,
    save_layout,
    st_layout,
)


def test_st_layout_matches_data_sheet():
    lay = st_layout()
    assert [t.name for t in lay.thrusters] == ["No1", "No2", "No3", "No4"]
    assert [t.kind for t in lay.thrusters] == ["lateral", "azimuth", "azimuth", "main"]
    assert [t.x for t in lay.thrusters] == [60.59, 57.00, -40.34, -61.17]
    assert [t.u_max for t in lay.thrusters] == [246.0, 275.0, 275.0, 480.0]
    assert lay.thrusters[3].u_min == 0.0  # main screw forward-only
    assert lay.steerable_indices == [1, 2]


def test_bow_lateral_column():
    lay = st_layout()
    b = build_config_matrix(lay.default_angles(), lay)
    assert np.allclose(b[:, 0], [0.0, 1.0, 60.59], atol=1e-12)


def test_main_column_is_pure_surge():
    lay = st_layout()
    b = build_config_matrix(lay.default_angles(), lay)
    assert np.allclose(b[:, 3], [1.0, 0.0, 0.0], atol=1e-12)


def test_force_direction_unit_norm():
    lay = st_layout()
    for alpha in np.linspace(-np.pi, np.pi, 17):
        angles = lay.default_angles()
        angles[1] = alpha
        b = build_config_matrix(angles, lay)
        norms = np.hypot(b[0], b[1])
        assert np.allclose(norms, 1.0, rtol=1e-12)


def test_column_derivative_matches_finite_difference():
    lay = st_layout()
    t = lay.thrusters[1]
    a = 0.7
    eps = 1e-7
    hi = build_config_matrix(np.array([np.pi / 2, a + eps, 0.0, 0.0]), lay)[:, 1]
    lo = build_config_matrix(np.array([np.pi / 2, a - eps, 0.0, 0.0]), lay)[:, 1]
    fd = (hi - lo) / (2 * eps)
    assert np.allclose(config_column_derivative(a, t), fd, atol=1e-6)


def test_capability_estimate():
    cap = st_layout().capability()
    assert cap[0] == pytest.approx(480.0 + 2 * 275.0)
    assert cap[1] == pytest.approx(246.0 + 2 * 275.0)
    assert cap[2] == pytest.approx(246.0 * 60.59 + 275.0 * 57.0 + 275.0 * 40.34)


def test_layout_file_round_trip(tmp_path):
    lay = st_layout()
    path = tmp_path / "st.layout"
    save_layout(lay, path)
    back = load_layout(path)
    for a, b in zip(lay.thrusters, back.thrusters):
        assert a.name == b.name and a.kind == b.kind
        assert a.x == b.x and a.y == b.y
        assert a.u_min == b.u_min and a.u_max == b.u_max
        assert a.du_max == b.du_max
        if a.alpha_fixed is None:
            assert b.alpha_fixed is None
        else:
            assert b.alpha_fixed == pytest.approx(a.alpha_fixed, rel=1e-12)
        assert b.dalpha_max == pytest.approx(a.dalpha_max, rel=1e-12)


def test_layout_parse_errors():
    with pytest.raises(ValueError, match="9 columns"):
        parse_layout("No1 lateral 1 2 3\n")
    with pytest.raises(ValueError, match="unknown thruster kind"):
        parse_layout("No1 rocket 0 0 -1 1 0.5 0 0\n")
    with pytest.raises(ValueError, match="alpha_fixed"):
        Thruster("x", "main", 0, 0, 0, 1, 0.1)
    with pytest.raises(ValueError, match="bracket zero"):
        Thruster("x", "main", 0, 0, 1.0, 2.0, 0.1, alpha_fixed=0.0)
    with pytest.raises(ValueError):
        ThrusterLayout([])


def test_config_matrix_shape_check():
    lay = st_layout()
    with pytest.raises(ValueError):
        build_config_matrix(np.zeros(3), lay)
