//! Run configuration. Every field has a default; a JSON file only needs the fields it
//! changes. Unknown fields are rejected so typos surface as config errors.

use crate::checks::{
    DecayParams, EllipticParams, EvolveParams, GcpParams, GreensParams, Initial, KernelParams, ParabolicParams,
    RegularityParams, RotationParams, SandwichParams, ShiftParams, SymbolParams,
};
use helegraph::DiniModulus;
use helegraph_whitney::SuiteConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    /// Dotted path of the offending field.
    pub field: String,
    pub reason: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error in `{}`: {}", self.field, self.reason)
    }
}

impl std::error::Error for ConfigError {}

fn err(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    pub out_dir: PathBuf,
    pub evolve: EvolveParams,
    pub symbol: SymbolParams,
    pub kernel: KernelParams,
    pub sandwich: SandwichParams,
    pub shift: ShiftParams,
    pub rotation: RotationParams,
    pub gcp: GcpParams,
    pub decay: DecayParams,
    pub greens: GreensParams,
    pub whitney: SuiteConfig,
    pub parabolic: ParabolicParams,
    pub regularity: RegularityParams,
    pub elliptic: EllipticParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            threads: 0,
            out_dir: PathBuf::from("helegraph-out"),
            evolve: EvolveParams::default(),
            symbol: SymbolParams::default(),
            kernel: KernelParams::default(),
            sandwich: SandwichParams::default(),
            shift: ShiftParams::default(),
            rotation: RotationParams::default(),
            gcp: GcpParams::default(),
            decay: DecayParams::default(),
            greens: GreensParams::default(),
            whitney: SuiteConfig::default(),
            parabolic: ParabolicParams::default(),
            regularity: RegularityParams::default(),
            elliptic: EllipticParams::default(),
        }
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(err(field, format!("must be positive and finite, got {v}")))
    }
}

fn all_positive(field: &str, v: &[f64]) -> Result<(), ConfigError> {
    if v.is_empty() {
        return Err(err(field, "must not be empty"));
    }
    for (i, &x) in v.iter().enumerate() {
        positive(&format!("{field}[{i}]"), x)?;
    }
    Ok(())
}

fn grid(field: &str, n: usize, min: usize) -> Result<(), ConfigError> {
    if n >= min && n % 2 == 0 {
        Ok(())
    } else {
        Err(err(field, format!("must be even and at least {min}, got {n}")))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "<root>".to_string() } else { path };
            err(field, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| err("--config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Canonical JSON used for hashing: compact, fields in declaration order.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        validate_evolve("evolve", &self.evolve)?;
        validate_evolve("regularity.evolve", &self.regularity.evolve)?;
        validate_evolve("parabolic.relaxation", &self.parabolic.relaxation)?;
        positive("regularity.monotone_slack", self.regularity.monotone_slack)?;

        let s = &self.symbol;
        grid("symbol.n", s.n, 8)?;
        grid("symbol.ny", s.ny, 4)?;
        positive("symbol.rel_tol", s.rel_tol)?;
        positive("symbol.period", s.period)?;
        all_positive("symbol.xi", &s.xi)?;
        positive("symbol.probe.amplitude", s.probe.amplitude)?;
        positive("symbol.probe.defect_tol", s.probe.defect_tol)?;
        positive("symbol.probe.noise_floor", s.probe.noise_floor)?;

        let k = &self.kernel;
        grid("kernel.n", k.n, 8)?;
        grid("kernel.ny", k.ny, 4)?;
        positive("kernel.h_min", k.h_min)?;
        if k.h_max <= k.h_min {
            return Err(err("kernel.h_max", "must exceed kernel.h_min"));
        }
        positive("kernel.c_max", k.c_max)?;
        positive("kernel.delta", k.delta)?;
        all_positive("kernel.drift_taus", &k.drift_taus)?;
        all_positive("kernel.drift_radii", &k.drift_radii)?;
        positive("kernel.probe.amplitude", k.probe.amplitude)?;
        positive("kernel.probe.defect_tol", k.probe.defect_tol)?;
        positive("kernel.probe.noise_floor", k.probe.noise_floor)?;

        grid("sandwich.n", self.sandwich.n, 8)?;
        positive("sandwich.width", self.sandwich.width)?;
        positive("sandwich.r0", self.sandwich.r0)?;
        grid("shift.n", self.shift.n, 8)?;
        positive("shift.tol", self.shift.tol)?;
        positive("shift.flat_tol", self.shift.flat_tol)?;
        all_positive("shift.eps", &self.shift.eps)?;
        grid("rotation.n", self.rotation.n, 8)?;

        let g = &self.gcp;
        if g.pairs == 0 {
            return Err(err("gcp.pairs", "must be at least 1"));
        }
        grid("gcp.n", g.n, 8)?;
        positive("gcp.solver_tol", g.solver_tol)?;
        positive("gcp.tol_factor", g.tol_factor)?;

        let d = &self.decay;
        grid("decay.n", d.n, 8)?;
        positive("decay.period", d.period)?;
        all_positive("decay.radii", &d.radii)?;

        let gr = &self.greens;
        grid("greens.n", gr.n, 8)?;
        positive("greens.c_max", gr.c_max)?;
        positive("greens.spread_tol", gr.spread_tol)?;
        positive("greens.solver_tol", gr.solver_tol)?;
        all_positive("greens.radii", &gr.radii)?;

        if self.whitney.points == 0 {
            return Err(err("whitney.points", "must be at least 1"));
        }
        positive("whitney.r0", self.whitney.r0)?;

        let p = &self.parabolic;
        positive("parabolic.sandwich_tol", p.sandwich_tol)?;
        positive("parabolic.scaling_tol", p.scaling_tol)?;
        positive("parabolic.quotient_tol", p.quotient_tol)?;
        positive("parabolic.scaling_r", p.scaling_r)?;
        if !(p.lambda >= 1.0) {
            return Err(err("parabolic.lambda", format!("must be at least 1, got {}", p.lambda)));
        }
        if !(0.0..=1.0).contains(&p.min_fraction) {
            return Err(err("parabolic.min_fraction", "must lie in [0, 1]"));
        }

        let e = &self.elliptic;
        positive("elliptic.max_principle_tol", e.max_principle_tol)?;
        grid("elliptic.coarse", e.coarse, 8)?;
        if e.fine <= e.coarse {
            return Err(err("elliptic.fine", "must exceed elliptic.coarse"));
        }
        Ok(())
    }
}

fn validate_evolve(prefix: &str, e: &EvolveParams) -> Result<(), ConfigError> {
    let f = |name: &str| format!("{prefix}.{name}");
    grid(&f("nx"), e.nx, 8)?;
    grid(&f("ny"), e.ny, 4)?;
    positive(&f("period"), e.period)?;
    positive(&f("strip_height"), e.strip_height)?;
    positive(&f("t_end"), e.t_end)?;
    positive(&f("cadence"), e.cadence)?;
    positive(&f("cfl"), e.cfl)?;
    positive(&f("dt_max"), e.dt_max)?;
    positive(&f("solver_tol"), e.solver_tol)?;
    positive(&f("planar_tol"), e.planar_tol)?;
    positive(&f("equilibrium_tol"), e.equilibrium_tol)?;
    all_positive(&f("gammas"), &e.gammas)?;
    if let Some(i) = e.gammas.iter().position(|&g| g >= 1.0) {
        return Err(err(format!("{}[{i}]", f("gammas")), "must lie in (0, 1)"));
    }
    if !(e.delta > 0.0 && e.delta < 0.5 * e.strip_height) {
        return Err(err(f("delta"), format!("must lie in (0, strip_height / 2), got {}", e.delta)));
    }
    positive(&f("lip_bound"), e.lip_bound)?;
    match e.modulus {
        DiniModulus::Holder { beta } if !(beta > 0.0 && beta <= 1.0) => {
            return Err(err(f("modulus.beta"), format!("must lie in (0, 1], got {beta}")))
        }
        DiniModulus::Log { power } if !(power > 1.0) => {
            return Err(err(f("modulus.power"), format!("must exceed 1 for a Dini modulus, got {power}")))
        }
        _ => {}
    }
    match e.initial {
        Initial::Flat { height } | Initial::Cosine { mean: height, .. } | Initial::BarelyDini { mean: height, .. }
            if !(height > 0.0 && height < e.strip_height) =>
        {
            return Err(err(f("initial"), format!("mean height {height} must lie inside (0, strip_height)")))
        }
        Initial::BarelyDini { power, .. } if !(power > 1.0) => {
            return Err(err(f("initial.power"), format!("must exceed 1, got {power}")))
        }
        _ => {}
    }
    if let Err(e) = e.law.validate() {
        return Err(err(f("law"), e.to_string()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let back = RunConfig::from_json(&c.canonical_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = RunConfig::from_json(r#"{"seed": 3, "evolve": {"t_end": 0.25}}"#).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.evolve.t_end, 0.25);
        assert_eq!(c.evolve.nx, 128);
    }

    #[test]
    fn errors_name_the_field() {
        let e = RunConfig::from_json(r#"{"evolve": {"cfl": -1}}"#).unwrap_err();
        assert_eq!(e.field, "evolve.cfl");
        let e = RunConfig::from_json(r#"{"gcp": {"pairz": 3}}"#).unwrap_err();
        assert_eq!(e.field, "gcp.pairz");
        assert!(e.reason.contains("pairz"), "{}", e.reason);
        let e = RunConfig::from_json(r#"{"evolve": {"nx": "many"}}"#).unwrap_err();
        assert_eq!(e.field, "evolve.nx");
        let e = RunConfig::from_json(r#"{"evolve": {"modulus": {"family": "log", "power": 1.0}}}"#).unwrap_err();
        assert_eq!(e.field, "evolve.modulus.power");
    }
}
