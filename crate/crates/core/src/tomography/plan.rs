use nalgebra::{DMatrix, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub angles_deg: Vec<f64>,
    pub label: String,
    /// Calibration setting with the signal blocked: every detector sees vacuum.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub shot_noise: bool,
}

impl MeasurementSetting {
    pub fn new(angles_deg: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if angles_deg.is_empty() || angles_deg.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("measurement angles must be finite and nonempty"));
        }
        Ok(MeasurementSetting { angles_deg, label: label.into(), shot_noise: false })
    }

    pub fn shot_noise(n_modes: usize) -> Self {
        MeasurementSetting { angles_deg: vec![0.0; n_modes], label: "shot-noise".into(), shot_noise: true }
    }

    pub fn n_modes(&self) -> usize {
        self.angles_deg.len()
    }

    /// `(cos θ_k, sin θ_k)` per mode.
    pub(crate) fn directions(&self) -> Vec<(f64, f64)> {
        self.angles_deg
            .iter()
            .map(|a| {
                let (s, c) = a.to_radians().sin_cos();
                (c, s)
            })
            .collect()
    }
}

/// Shot noise, all-0°, all-90°, for each bit `b < ⌈log₂ n⌉` the 0°/90° pattern
/// given by bit `b` of the mode index and its complement, and all-45°.
///
/// All-0° and all-90° fix the `xx` and `pp` moments, the bit patterns separate
/// every pair of distinct modes into one `x` and one `p` reading, and all-45°
/// supplies the local `xp` terms. Four modes give eight settings.
pub fn default_setting_plan(n_modes: usize) -> Result<Vec<MeasurementSetting>> {
    if n_modes == 0 {
        return Err(Error::invalid("a setting plan needs at least one mode"));
    }
    let mut plan = vec![
        MeasurementSetting::shot_noise(n_modes),
        MeasurementSetting::new(vec![0.0; n_modes], "all-0")?,
        MeasurementSetting::new(vec![90.0; n_modes], "all-90")?,
    ];
    let bits = usize::BITS - (n_modes - 1).leading_zeros();
    for b in 0..bits as usize {
        let pattern: Vec<f64> = (0..n_modes).map(|k| if (k >> b) & 1 == 1 { 90.0 } else { 0.0 }).collect();
        let complement = pattern.iter().map(|a| 90.0 - a).collect();
        plan.push(MeasurementSetting::new(pattern, format!("bit-{b}"))?);
        plan.push(MeasurementSetting::new(complement, format!("bit-{b}-complement"))?);
    }
    plan.push(MeasurementSetting::new(vec![45.0; n_modes], "all-45")?);
    Ok(plan)
}

/// Upper-triangle entries of γ, in row-major order.
pub(crate) fn unknowns(n_modes: usize) -> Vec<(usize, usize)> {
    let d = 2 * n_modes;
    (0..d).flat_map(|r| (r..d).map(move |c| (r, c))).collect()
}

/// Mode pairs `i <= j` whose joint moment a setting yields.
pub(crate) fn mode_pairs(n_modes: usize) -> Vec<(usize, usize)> {
    (0..n_modes).flat_map(|i| (i..n_modes).map(move |j| (i, j))).collect()
}

fn quadrature_name(k: usize) -> String {
    format!("{}{}", if k % 2 == 0 { "x" } else { "p" }, k / 2 + 1)
}

/// `γ[x1,p2]`-style name of an entry.
pub fn entry_name(r: usize, c: usize) -> String {
    format!("γ[{},{}]", quadrature_name(r), quadrature_name(c))
}

/// Linear map from upper-triangle γ entries to the second moments of every
/// non-calibration setting (one row per setting and mode pair).
pub fn design_matrix(settings: &[MeasurementSetting], n_modes: usize) -> Result<DMatrix<f64>> {
    let unknown = unknowns(n_modes);
    let index = |r: usize, c: usize| unknown.iter().position(|&u| u == (r.min(c), r.max(c))).expect("entry");
    let pairs = mode_pairs(n_modes);
    let used: Vec<&MeasurementSetting> = settings.iter().filter(|s| !s.shot_noise).collect();
    let mut d = DMatrix::zeros(used.len() * pairs.len(), unknown.len());
    for (s, setting) in used.iter().enumerate() {
        if setting.n_modes() != n_modes {
            return Err(Error::invalid(format!(
                "setting `{}` has {} angles, expected {n_modes}",
                setting.label,
                setting.n_modes()
            )));
        }
        let dir = setting.directions();
        for (p, &(i, j)) in pairs.iter().enumerate() {
            let row = s * pairs.len() + p;
            let (ci, cj) = ([dir[i].0, dir[i].1], [dir[j].0, dir[j].1]);
            for a in 0..2 {
                for b in 0..2 {
                    d[(row, index(2 * i + a, 2 * j + b))] += ci[a] * cj[b];
                }
            }
        }
    }
    Ok(d)
}

/// Entries of γ left undetermined by the plan; empty when it has full rank.
pub fn identifiability(settings: &[MeasurementSetting], n_modes: usize) -> Result<Vec<String>> {
    let d = design_matrix(settings, n_modes)?;
    let unknown = unknowns(n_modes);
    if d.nrows() == 0 {
        return Ok(unknown.iter().map(|&(r, c)| entry_name(r, c)).collect());
    }
    // Null-space directions of D: right singular vectors with negligible singular value.
    let gram = d.transpose() * &d;
    let svd = SVD::new(gram, false, true);
    let v_t = svd.v_t.expect("requested");
    let scale = svd.singular_values.max().max(1.0);
    let mut leak = vec![0.0; unknown.len()];
    for (k, &sv) in svd.singular_values.iter().enumerate() {
        if sv <= 1e-10 * scale {
            for (u, l) in leak.iter_mut().enumerate() {
                *l += v_t[(k, u)].powi(2);
            }
        }
    }
    Ok(unknown.iter().zip(&leak).filter(|(_, &l)| l > 1e-10).map(|(&(r, c), _)| entry_name(r, c)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_sized_plan() {
        let plan = default_setting_plan(4).unwrap();
        assert_eq!(plan.len(), 8);
        assert_eq!(plan.iter().filter(|s| s.shot_noise).count(), 1);
        assert!(identifiability(&plan, 4).unwrap().is_empty());
        let d = design_matrix(&plan, 4).unwrap();
        assert_eq!(d.ncols(), 36);
        assert_eq!(d.clone().rank(1e-9), 36);
    }

    #[test]
    fn single_mode_plan() {
        let plan = default_setting_plan(1).unwrap();
        let angles: Vec<f64> = plan.iter().filter(|s| !s.shot_noise).map(|s| s.angles_deg[0]).collect();
        assert_eq!(angles, vec![0.0, 90.0, 45.0]);
        assert!(identifiability(&plan, 1).unwrap().is_empty());
    }

    #[test]
    fn plans_are_full_rank_for_small_n() {
        for n in 1..=6 {
            assert!(identifiability(&default_setting_plan(n).unwrap(), n).unwrap().is_empty(), "n = {n}");
        }
    }

    #[test]
    fn x_only_plan_is_unidentifiable() {
        let plan = vec![MeasurementSetting::new(vec![0.0; 2], "x").unwrap()];
        let missing = identifiability(&plan, 2).unwrap();
        assert!(missing.contains(&"γ[p1,p1]".to_string()));
        assert!(missing.contains(&"γ[x1,p2]".to_string()));
        assert!(!missing.contains(&"γ[x1,x2]".to_string()));
    }
}
