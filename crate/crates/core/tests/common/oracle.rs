//! Reference values from an independent implementation
//! (`tests/oracle/sdp_oracle.py`: cvxpy with the CLARABEL conic solver, and a
//! numpy rebuild of the preset circuit). Rerun the script and update these
//! constants if the preset changes.

/// `(e^{-2r}, E)` for two-mode squeezed vacua.
pub const TMSV_E: [(f64, f64); 3] = [(0.9, 0.10000000000035658), (0.5, 0.5000000000118874), (0.1, 0.9000000000005357)];

pub const PRESET_E: f64 = 0.014562299210787444;
pub const PRESET_P: f64 = 0.017060103665831734;
pub const PRESET_PHYSICALITY: f64 = 0.01250000000000009;

#[rustfmt::skip]
pub const PRESET_MATRIX: [[f64; 8]; 8] = [
    [2.227839897252921, 0.03587081074543846, -0.7826510922317377, -0.10238911746008025, 0.7859388236291802, 0.23508237602297732, -0.6006873929198753, 0.23935122250312324],
    [0.03587081074543847, 1.7830721027470786, -0.10238911746008027, -0.45567982358034853, 0.06757828287069892, -0.37833055071782395, 0.02986375916188026, -0.18096861104497963],
    [-0.7826510922317377, -0.10238911746008025, 1.6238338998520012, -0.043147338757334154, -0.5101429493165792, 0.28554366457750713, 0.4483450358859533, 0.394603813598981],
    [-0.10238911746008027, -0.4556798235803484, -0.04314733875733415, 1.4314041001479985, 0.04136658723735174, -0.24599449854463712, 0.08922598326999191, -0.5080894237990051],
    [0.7859388236291801, 0.06757828287069892, -0.5101429493165791, 0.04136658723735174, 1.020119414134465, -0.08409441399799639, -0.3556757270813411, -0.17485168915949115],
    [0.23508237602297732, -0.37833055071782395, 0.28554366457750713, -0.24599449854463712, -0.08409441399799628, 3.347444085865536, -0.174851689159491, 1.2285773999189815],
    [-0.6006873929198752, 0.02986375916188026, 0.44834503588595326, 0.08922598326999191, -0.35567572708134115, -0.1748516891594912, 0.8596915920197351, -0.162961408704452],
    [0.23935122250312324, -0.18096861104497963, 0.394603813598981, -0.5080894237990051, -0.17485168915949104, 1.2285773999189817, -0.16296140870445183, 3.9015949079802654],
];
