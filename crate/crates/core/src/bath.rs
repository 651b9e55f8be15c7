//! Bath response spectra, detailed balance, harmonic filters and Lamb shifts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::integrate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BathLabel {
    Hot,
    Cold,
}

impl BathLabel {
    pub fn name(self) -> &'static str {
        match self {
            BathLabel::Hot => "H",
            BathLabel::Cold => "C",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumShape {
    /// `amplitude` on [0, cutoff], zero above. No cutoff means a flat tail.
    Flat { amplitude: f64, cutoff: Option<f64> },
    /// amplitude·ω·exp(−ω/cutoff).
    OhmicExpCutoff { amplitude: f64, cutoff: f64 },
    /// Peak value `amplitude` at `center`, half width `width`.
    Lorentzian { amplitude: f64, center: f64, width: f64 },
    /// Linear interpolation, zero outside the sampled range.
    Tabulated { omega: Vec<f64>, value: Vec<f64> },
}

impl SpectrumShape {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Param(m.to_string()));
        match self {
            SpectrumShape::Flat { amplitude, cutoff } => {
                if !(*amplitude >= 0.0) {
                    return bad("flat amplitude must be >= 0");
                }
                if let Some(c) = cutoff {
                    if !(*c > 0.0) {
                        return bad("flat cutoff must be > 0");
                    }
                }
            }
            SpectrumShape::OhmicExpCutoff { amplitude, cutoff } => {
                if !(*amplitude >= 0.0) || !(*cutoff > 0.0) {
                    return bad("ohmic spectrum needs amplitude >= 0 and cutoff > 0");
                }
            }
            SpectrumShape::Lorentzian { amplitude, center, width } => {
                if !(*amplitude >= 0.0) || !(*width > 0.0) || !center.is_finite() {
                    return bad("lorentzian needs amplitude >= 0, width > 0, finite center");
                }
            }
            SpectrumShape::Tabulated { omega, value } => {
                if omega.len() != value.len() || omega.len() < 2 {
                    return bad("tabulated spectrum needs >= 2 matching samples");
                }
                if omega.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("tabulated frequencies must be strictly increasing");
                }
                if value.iter().any(|v| !(*v >= 0.0)) || omega.iter().any(|w| !w.is_finite()) {
                    return bad("tabulated values must be finite and >= 0");
                }
            }
        }
        Ok(())
    }

    /// G(ω) for ω ≥ 0.
    pub fn eval(&self, w: f64) -> f64 {
        if w < 0.0 {
            return 0.0;
        }
        match self {
            SpectrumShape::Flat { amplitude, cutoff } => match cutoff {
                Some(c) if w > *c => 0.0,
                _ => *amplitude,
            },
            SpectrumShape::OhmicExpCutoff { amplitude, cutoff } => amplitude * w * (-w / cutoff).exp(),
            SpectrumShape::Lorentzian { amplitude, center, width } => {
                let x = w - center;
                amplitude * width * width / (x * x + width * width)
            }
            SpectrumShape::Tabulated { omega, value } => {
                if w < omega[0] || w > omega[omega.len() - 1] {
                    return 0.0;
                }
                let k = omega.partition_point(|&x| x <= w).clamp(1, omega.len() - 1);
                let (x0, x1) = (omega[k - 1], omega[k]);
                let f = (w - x0) / (x1 - x0);
                value[k - 1] * (1.0 - f) + value[k] * f
            }
        }
    }

    /// Largest value on ω ≥ 0.
    pub fn peak(&self) -> f64 {
        match self {
            SpectrumShape::Flat { amplitude, .. } => *amplitude,
            SpectrumShape::OhmicExpCutoff { amplitude, cutoff } => amplitude * cutoff / std::f64::consts::E,
            SpectrumShape::Lorentzian { center, .. } => self.eval(center.max(0.0)),
            SpectrumShape::Tabulated { value, .. } => value.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// Frequency above which G < 1e-12 · peak.
    pub fn support_end(&self) -> Result<f64> {
        const REL: f64 = 1e-12;
        match self {
            SpectrumShape::Flat { cutoff: Some(c), .. } => Ok(*c),
            SpectrumShape::Flat { cutoff: None, amplitude } => {
                if *amplitude == 0.0 {
                    Ok(0.0)
                } else {
                    Err(Error::NonIntegrable("flat spectrum without cutoff".into()))
                }
            }
            SpectrumShape::OhmicExpCutoff { cutoff, .. } => {
                // ω e^{−ω/c} = REL · c/e, solved above the maximum at ω = c.
                let target = REL / std::f64::consts::E;
                let f = |x: f64| x * (-x).exp() - target;
                let (mut lo, mut hi) = (1.0, 2.0);
                while f(hi) > 0.0 {
                    lo = hi;
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if f(mid) > 0.0 {
                        lo = mid
                    } else {
                        hi = mid
                    }
                }
                Ok(hi * cutoff)
            }
            SpectrumShape::Lorentzian { center, width, .. } => Ok(center.max(0.0) + width * (1.0 / REL).sqrt()),
            SpectrumShape::Tabulated { omega, .. } => Ok(omega[omega.len() - 1]),
        }
    }

    /// Points where G is not smooth.
    fn kinks(&self) -> Vec<f64> {
        match self {
            SpectrumShape::Flat { cutoff: Some(c), .. } => vec![*c],
            SpectrumShape::Lorentzian { center, .. } if *center > 0.0 => vec![*center],
            SpectrumShape::Tabulated { omega, .. } => omega.clone(),
            _ => vec![],
        }
    }

    /// Parses two-column text (ω, G); '#' starts a comment.
    pub fn from_table_text(text: &str) -> Result<Self> {
        let mut omega = Vec::new();
        let mut value = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
            if cols.len() != 2 {
                return Err(Error::Parse(format!("line {}: expected two columns", lineno + 1)));
            }
            let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)));
            omega.push(parse(cols[0])?);
            value.push(parse(cols[1])?);
        }
        let s = SpectrumShape::Tabulated { omega, value };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    pub omega_f: f64,
    pub gamma_f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    label: BathLabel,
    temperature: f64,
    base: SpectrumShape,
    filter: Option<FilterSpec>,
}

impl BathSpec {
    pub fn new(label: BathLabel, temperature: f64, base: SpectrumShape, filter: Option<FilterSpec>) -> Result<Self> {
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(Error::Param(format!("temperature must be positive, got {temperature}")));
        }
        base.validate()?;
        if let Some(f) = filter {
            if !(f.omega_f > 0.0) || !(f.gamma_f > 0.0) {
                return Err(Error::Param("filter needs omega_f > 0 and gamma_f > 0".into()));
            }
            base.support_end()?;
        }
        Ok(Self { label, temperature, base, filter })
    }

    pub fn label(&self) -> BathLabel {
        self.label
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn base(&self) -> &SpectrumShape {
        &self.base
    }

    pub fn filter(&self) -> Option<FilterSpec> {
        self.filter
    }

    /// Same bath with a different temperature.
    pub fn with_temperature(&self, temperature: f64) -> Result<Self> {
        Self::new(self.label, temperature, self.base.clone(), self.filter)
    }
}

/// G(ω) with the negative branch fixed by detailed balance.
pub fn response(bath: &BathSpec, omega: f64) -> f64 {
    if omega < 0.0 {
        return (omega / bath.temperature).exp() * response(bath, -omega);
    }
    match bath.filter {
        Some(f) => filtered_value(&bath.base, f, omega),
        None => bath.base.eval(omega),
    }
}

/// Principal value P∫₀^∞ G(ω′)/(ω − ω′) dω′.
pub fn lamb_shift(base: &SpectrumShape, omega: f64) -> Result<f64> {
    base.validate()?;
    let upper = base.support_end()?;
    if base.peak() == 0.0 || upper <= 0.0 {
        return Ok(0.0);
    }
    let g = |x: f64| base.eval(x);
    let scale = base.peak();
    let tol = 1e-13 * scale;
    let kinks = base.kinks();
    let direct = |a: f64, b: f64| -> f64 {
        if b <= a {
            return 0.0;
        }
        integrate(&|x| g(x) / (omega - x), a, b, &kinks, tol)
    };
    if omega <= 0.0 {
        if omega == 0.0 && g(0.0) > 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        return Ok(direct(0.0, upper));
    }
    if omega >= upper {
        if omega == upper && g(upper) > 0.0 {
            return Ok(f64::INFINITY);
        }
        return Ok(direct(0.0, upper));
    }
    // Symmetric window around the pole: the log term of the subtraction vanishes.
    let h = omega.min(upper - omega);
    let g0 = g(omega);
    let sub = |x: f64| (g(x) - g0) / (omega - x);
    let mut total = integrate(&sub, omega - h, omega, &kinks, tol) + integrate(&sub, omega, omega + h, &kinks, tol);
    total += direct(0.0, omega - h);
    total += direct(omega + h, upper);
    Ok(total)
}

fn filtered_value(base: &SpectrumShape, f: FilterSpec, omega: f64) -> f64 {
    let gw = base.eval(omega);
    if gw == 0.0 {
        return 0.0;
    }
    let shift = match lamb_shift(base, omega) {
        Ok(s) => s,
        Err(_) => return 0.0,
    };
    if !shift.is_finite() {
        return 0.0;
    }
    let width = std::f64::consts::PI * gw;
    let det = omega - f.omega_f - shift;
    f.gamma_f / std::f64::consts::PI * width * width / (det * det + width * width)
}

/// Filtered response G_f(ω) for ω ≥ 0; negative ω uses detailed balance.
pub fn filtered_response(bath: &BathSpec, omega: f64) -> Result<f64> {
    let f = bath.filter.ok_or(Error::NoFilter)?;
    if omega < 0.0 {
        return Ok((omega / bath.temperature).exp() * filtered_response(bath, -omega)?);
    }
    Ok(filtered_value(&bath.base, f, omega))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinationFrequencies {
    pub omega0: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseRow {
    pub name: String,
    pub omega: f64,
    pub hot: f64,
    pub cold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceRatio {
    pub name: String,
    pub value: f64,
    pub weak: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub table: Vec<ResponseRow>,
    /// C owns ω₀, H owns ω₊.
    pub engine: Vec<DominanceRatio>,
    /// H owns ω₀, C owns ω₋.
    pub refrigerator: Vec<DominanceRatio>,
}

impl SeparationReport {
    pub fn engine_ok(&self) -> bool {
        self.engine.iter().all(|r| !r.weak)
    }

    pub fn refrigerator_ok(&self) -> bool {
        self.refrigerator.iter().all(|r| !r.weak)
    }
}

pub const WEAK_SEPARATION: f64 = 100.0;

fn ratio(name: &str, num: f64, den: f64) -> DominanceRatio {
    let value = if den == 0.0 {
        if num == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    };
    DominanceRatio { name: name.to_string(), value, weak: value < WEAK_SEPARATION }
}

pub fn spectral_separation_report(hot: &BathSpec, cold: &BathSpec, freqs: CombinationFrequencies) -> Result<SeparationReport> {
    let ws = [freqs.omega0, freqs.omega_plus, freqs.omega_minus];
    if ws.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::Param("frequencies must be positive".into()));
    }
    let names = ["omega0", "omega_plus", "omega_minus"];
    let table: Vec<ResponseRow> = names
        .iter()
        .zip(ws)
        .map(|(n, w)| ResponseRow { name: n.to_string(), omega: w, hot: response(hot, w), cold: response(cold, w) })
        .collect();
    let (h0, c0) = (table[0].hot, table[0].cold);
    let (hp, cp) = (table[1].hot, table[1].cold);
    let (hm, cm) = (table[2].hot, table[2].cold);
    let engine = vec![
        ratio("G_C(omega0)/G_H(omega0)", c0, h0),
        ratio("G_H(omega_plus)/G_C(omega_plus)", hp, cp),
        ratio("G_H(omega_plus)/max(G_H,G_C)(omega_minus)", hp, hm.max(cm)),
    ];
    let refrigerator = vec![
        ratio("G_H(omega0)/G_C(omega0)", h0, c0),
        ratio("G_C(omega_minus)/max(G_C(omega_plus),G_H(omega_plus),G_H(omega_minus))", cm, cp.max(hp).max(hm)),
    ];
    Ok(SeparationReport { table, engine, refrigerator })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_interpolates_and_vanishes_outside() {
        let s = SpectrumShape::from_table_text("# w G\n0.5 1.0\n1.5 3.0 # peak\n\n2.5, 1.0\n").unwrap();
        assert_eq!(s.eval(1.0), 2.0);
        assert_eq!(s.eval(0.4), 0.0);
        assert_eq!(s.eval(2.6), 0.0);
        assert_eq!(s.eval(1.5), 3.0);
    }

    #[test]
    fn table_rejects_unsorted() {
        assert!(SpectrumShape::from_table_text("1 1\n0.5 2\n").is_err());
    }
}
