//! Flat `key = value` run configuration.
//!
//! Blank lines and text after `#` are ignored. Every key is optional and
//! defaults to the Ohmic figure parameters; unknown or repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qbm_core::grid::{TimeGrid, DEFAULT_STEPS_PER_PERIOD};
use qbm_core::moments::{GaussianState, DRIFT_THRESHOLD};
use qbm_core::oracle::{DEFAULT_MODES, DEFAULT_OMEGA_MAX_OVER_CUTOFF};
use qbm_core::params::{
    CoefficientForm, DissipationSign, FrequencyConvention, NoiseKernel, SpectralDensityParams, Switches, Thermal,
};

use crate::CliError;

/// A switch value that is either fixed or left to the oracle calibration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice<T> {
    Fixed(T),
    Auto,
}

impl<T: Copy> Choice<T> {
    pub fn fixed(&self) -> Option<T> {
        match self {
            Choice::Fixed(v) => Some(*v),
            Choice::Auto => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemperatureMode {
    Quantum,
    Classical,
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub s: f64,
    pub gamma: f64,
    pub cutoff: f64,
    pub temperature: TemperatureMode,
    pub beta: f64,
    /// Momentum couplings as m*mu*omega_S.
    pub mu: Vec<f64>,
    pub initial: Vec<GaussianState>,
    pub t_end: f64,
    pub dt: f64,
    pub oracle: bool,
    pub oracle_modes: usize,
    pub oracle_omega_max: f64,
    pub oracle_t_end: f64,
    pub output: PathBuf,
    pub frequency: Choice<FrequencyConvention>,
    pub sign: Choice<DissipationSign>,
    pub noise: Choice<NoiseKernel>,
    pub form: CoefficientForm,
    pub window: f64,
    pub drift_threshold: f64,
    pub witness_tolerance: f64,
    pub table1_gamma_s2: f64,
    pub table1_t_end_s2: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let cutoff = 20.0;
        Self {
            s: 1.0,
            gamma: 3e-3,
            cutoff,
            temperature: TemperatureMode::Quantum,
            beta: 1e-2,
            mu: vec![0.0, 0.5, 1.0],
            initial: vec![GaussianState::minimum_uncertainty(1.0, 1e-2, 0.5)],
            t_end: 50.0,
            dt: 2.0 * std::f64::consts::PI / DEFAULT_STEPS_PER_PERIOD as f64,
            oracle: false,
            oracle_modes: DEFAULT_MODES,
            oracle_omega_max: DEFAULT_OMEGA_MAX_OVER_CUTOFF * cutoff,
            oracle_t_end: 50.0,
            output: PathBuf::from("out"),
            frequency: Choice::Fixed(FrequencyConvention::default()),
            sign: Choice::Fixed(DissipationSign::default()),
            noise: Choice::Fixed(NoiseKernel::default()),
            form: CoefficientForm::default(),
            window: 0.2,
            drift_threshold: DRIFT_THRESHOLD,
            witness_tolerance: 1e-8,
            table1_gamma_s2: 3.4e-3,
            table1_t_end_s2: 1000.0,
        }
    }
}

/// Every accepted key, in manifest order.
pub const KEYS: &[&str] = &[
    "s",
    "gamma",
    "cutoff",
    "temperature",
    "beta",
    "mu",
    "q0",
    "p0",
    "var_q",
    "var_p",
    "cov_qp",
    "t_end",
    "dt",
    "steps_per_period",
    "oracle",
    "oracle_modes",
    "oracle_omega_max",
    "oracle_t_end",
    "output",
    "frequency",
    "sign",
    "noise",
    "form",
    "window",
    "drift_threshold",
    "witness_tolerance",
    "table1_gamma_s2",
    "table1_t_end_s2",
];

fn bad(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

fn num(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = v.parse().map_err(|_| bad(key, format!("not a number: {v:?}")))?;
    if !x.is_finite() {
        return Err(bad(key, "must be finite"));
    }
    Ok(x)
}

fn list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    let out: Vec<f64> = v.split(',').map(|x| num(key, x.trim())).collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(bad(key, "empty list"));
    }
    Ok(out)
}

fn choice<T>(key: &str, v: &str, parse: fn(&str) -> Option<T>, names: &[&str]) -> Result<Choice<T>, CliError> {
    if v == "auto" {
        return Ok(Choice::Auto);
    }
    parse(v).map(Choice::Fixed).ok_or_else(|| bad(key, format!("expected one of {} or auto, got {v:?}", names.join(", "))))
}

fn names<T: Copy>(all: &[T], name: fn(&T) -> &'static str) -> Vec<&'static str> {
    all.iter().map(name).collect()
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", ln + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(CliError::Config(format!("line {}: unknown key {k:?}", ln + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key {k:?}", ln + 1)));
            }
        }
        let mut c = RunConfig::default();
        let get = |k: &str| entries.get(k).map(String::as_str);

        if let Some(v) = get("s") {
            c.s = num("s", v)?;
        }
        if let Some(v) = get("gamma") {
            c.gamma = num("gamma", v)?;
        }
        if let Some(v) = get("cutoff") {
            c.cutoff = num("cutoff", v)?;
            c.oracle_omega_max = DEFAULT_OMEGA_MAX_OVER_CUTOFF * c.cutoff;
        }
        if let Some(v) = get("temperature") {
            c.temperature = match v {
                "quantum" => TemperatureMode::Quantum,
                "classical" => TemperatureMode::Classical,
                "zero" => TemperatureMode::Zero,
                _ => return Err(bad("temperature", format!("expected quantum, classical or zero, got {v:?}"))),
            };
        }
        if let Some(v) = get("beta") {
            c.beta = num("beta", v)?;
        }
        if let Some(v) = get("mu") {
            c.mu = list("mu", v)?;
        }
        c.initial = initial_states(&get)?;
        if let Some(v) = get("t_end") {
            c.t_end = num("t_end", v)?;
        }
        match (get("dt"), get("steps_per_period")) {
            (Some(_), Some(_)) => return Err(bad("dt", "give either dt or steps_per_period, not both")),
            (Some(v), None) => c.dt = num("dt", v)?,
            (None, Some(v)) => {
                let n = num("steps_per_period", v)?;
                if !(n >= 1.0 && n.fract() == 0.0) {
                    return Err(bad("steps_per_period", "must be a positive integer"));
                }
                c.dt = 2.0 * std::f64::consts::PI / n;
            }
            (None, None) => {}
        }
        if let Some(v) = get("oracle") {
            c.oracle = match v {
                "true" | "on" | "1" => true,
                "false" | "off" | "0" => false,
                _ => return Err(bad("oracle", format!("expected true or false, got {v:?}"))),
            };
        }
        if let Some(v) = get("oracle_modes") {
            c.oracle_modes = v.parse().map_err(|_| bad("oracle_modes", format!("not a count: {v:?}")))?;
        }
        if let Some(v) = get("oracle_omega_max") {
            c.oracle_omega_max = num("oracle_omega_max", v)?;
        }
        if let Some(v) = get("oracle_t_end") {
            c.oracle_t_end = num("oracle_t_end", v)?;
        }
        if let Some(v) = get("output") {
            c.output = PathBuf::from(v);
        }
        if let Some(v) = get("frequency") {
            c.frequency = choice("frequency", v, FrequencyConvention::parse, &names(FrequencyConvention::ALL, FrequencyConvention::name))?;
        }
        if let Some(v) = get("sign") {
            c.sign = choice("sign", v, DissipationSign::parse, &names(DissipationSign::ALL, DissipationSign::name))?;
        }
        if let Some(v) = get("noise") {
            c.noise = choice("noise", v, NoiseKernel::parse, &names(NoiseKernel::ALL, NoiseKernel::name))?;
        }
        if let Some(v) = get("form") {
            c.form = CoefficientForm::parse(v).ok_or_else(|| bad("form", format!("expected derived or printed, got {v:?}")))?;
        }
        if let Some(v) = get("window") {
            c.window = num("window", v)?;
        }
        if let Some(v) = get("drift_threshold") {
            c.drift_threshold = num("drift_threshold", v)?;
        }
        if let Some(v) = get("witness_tolerance") {
            c.witness_tolerance = num("witness_tolerance", v)?;
        }
        if let Some(v) = get("table1_gamma_s2") {
            c.table1_gamma_s2 = num("table1_gamma_s2", v)?;
        }
        if let Some(v) = get("table1_t_end_s2") {
            c.table1_t_end_s2 = num("table1_t_end_s2", v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn thermal(&self) -> Thermal {
        match self.temperature {
            TemperatureMode::Quantum => Thermal::Quantum { beta: self.beta },
            TemperatureMode::Classical => Thermal::Classical { beta: self.beta },
            TemperatureMode::Zero => Thermal::Zero,
        }
    }

    pub fn params(&self) -> SpectralDensityParams {
        SpectralDensityParams::natural(self.s, self.gamma, self.cutoff, self.thermal())
    }

    pub fn grid(&self) -> Result<TimeGrid, CliError> {
        TimeGrid::new(self.dt, self.t_end).map_err(|e| bad("dt", e))
    }

    /// True when some switch is left to calibration.
    pub fn needs_calibration(&self) -> bool {
        self.frequency == Choice::Auto || self.sign == Choice::Auto || self.noise == Choice::Auto
    }

    /// Fixed switches, with defaults standing in for `auto`.
    pub fn switches_or_default(&self) -> Switches {
        Switches {
            frequency: self.frequency.fixed().unwrap_or_default(),
            sign: self.sign.fixed().unwrap_or_default(),
            noise: self.noise.fixed().unwrap_or_default(),
            form: self.form,
        }
    }

    /// Checks every module precondition before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        self.params().validate().map_err(|e| bad("spectral parameters", e))?;
        self.grid()?;
        for (k, s) in self.initial.iter().enumerate() {
            s.validate().map_err(|e| bad("initial state", format!("#{k}: {e}")))?;
        }
        if self.mu.iter().any(|m| !m.is_finite()) {
            return Err(bad("mu", "must be finite"));
        }
        if !(self.window > 0.0 && self.window <= 1.0) {
            return Err(bad("window", "must be in (0, 1]"));
        }
        if !(self.drift_threshold > 0.0) {
            return Err(bad("drift_threshold", "must be > 0"));
        }
        if !(self.witness_tolerance >= 0.0) {
            return Err(bad("witness_tolerance", "must be >= 0"));
        }
        if self.oracle {
            if self.oracle_modes == 0 {
                return Err(bad("oracle_modes", "must be >= 1"));
            }
            if !(self.oracle_omega_max > 0.0) {
                return Err(bad("oracle_omega_max", "must be > 0"));
            }
            if !(self.oracle_t_end > 0.0) {
                return Err(bad("oracle_t_end", "must be > 0"));
            }
        } else if self.needs_calibration() {
            return Err(bad("frequency/sign/noise", "auto requires oracle = true"));
        }
        if !(self.table1_gamma_s2 >= 0.0 && self.table1_t_end_s2 > 0.0) {
            return Err(bad("table1_gamma_s2", "table1 parameters must be positive"));
        }
        Ok(())
    }

    /// `#`-prefixed manifest lines recording every value and the switch set in use.
    pub fn manifest(&self, command: &str, switches: &Switches) -> String {
        let mut m = String::new();
        let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let col = |f: fn(&GaussianState) -> f64| join(&self.initial.iter().map(f).collect::<Vec<_>>());
        let choice_name = |fixed: bool, name: &str| if fixed { name.to_string() } else { format!("auto->{name}") };
        let _ = writeln!(m, "# qbm {} {command}", env!("CARGO_PKG_VERSION"));
        let temp = match self.temperature {
            TemperatureMode::Quantum => "quantum",
            TemperatureMode::Classical => "classical",
            TemperatureMode::Zero => "zero",
        };
        let rows: Vec<(&str, String)> = vec![
            ("s", format!("{}", self.s)),
            ("gamma", format!("{}", self.gamma)),
            ("cutoff", format!("{}", self.cutoff)),
            ("temperature", temp.into()),
            ("beta", format!("{}", self.beta)),
            ("mu", join(&self.mu)),
            ("q0", col(|s| s.q_a)),
            ("p0", col(|s| s.p_a)),
            ("var_q", col(|s| s.var_q)),
            ("var_p", col(|s| s.var_p)),
            ("cov_qp", col(|s| s.cov_qp)),
            ("t_end", format!("{}", self.t_end)),
            ("dt", format!("{}", self.dt)),
            ("oracle", format!("{}", self.oracle)),
            ("oracle_modes", format!("{}", self.oracle_modes)),
            ("oracle_omega_max", format!("{}", self.oracle_omega_max)),
            ("oracle_t_end", format!("{}", self.oracle_t_end)),
            ("output", self.output.display().to_string()),
            ("frequency", choice_name(self.frequency.fixed().is_some(), switches.frequency.name())),
            ("sign", choice_name(self.sign.fixed().is_some(), switches.sign.name())),
            ("noise", choice_name(self.noise.fixed().is_some(), switches.noise.name())),
            ("form", switches.form.name().into()),
            ("window", format!("{}", self.window)),
            ("drift_threshold", format!("{}", self.drift_threshold)),
            ("witness_tolerance", format!("{}", self.witness_tolerance)),
            ("table1_gamma_s2", format!("{}", self.table1_gamma_s2)),
            ("table1_t_end_s2", format!("{}", self.table1_t_end_s2)),
        ];
        for (k, v) in rows {
            let _ = writeln!(m, "# {k} = {v}");
        }
        m
    }
}

/// Initial states from q0, p0, var_q, var_p, cov_qp. Each key takes a comma
/// list; single values broadcast. var_p defaults to the minimum-uncertainty
/// value 1/(4 var_q), cov_qp to 0.
fn initial_states<'a>(get: &impl Fn(&str) -> Option<&'a str>) -> Result<Vec<GaussianState>, CliError> {
    let d = GaussianState::minimum_uncertainty(1.0, 1e-2, 0.5);
    let read = |k: &str, default: Option<f64>| -> Result<Option<Vec<f64>>, CliError> {
        match get(k) {
            Some(v) => list(k, v).map(Some),
            None => Ok(default.map(|x| vec![x])),
        }
    };
    let q = read("q0", Some(d.q_a))?.unwrap();
    let p = read("p0", Some(d.p_a))?.unwrap();
    let vq = read("var_q", Some(d.var_q))?.unwrap();
    let vp = read("var_p", None)?;
    let cq = read("cov_qp", Some(0.0))?.unwrap();
    let lens = [Some(q.len()), Some(p.len()), Some(vq.len()), vp.as_ref().map(Vec::len), Some(cq.len())];
    let n = lens.iter().flatten().copied().max().unwrap_or(1);
    if lens.iter().flatten().any(|&l| l != 1 && l != n) {
        return Err(bad("q0/p0/var_q/var_p/cov_qp", "lists must have equal length (or length 1)"));
    }
    let at = |v: &[f64], i: usize| if v.len() == 1 { v[0] } else { v[i] };
    Ok((0..n)
        .map(|i| {
            let var_q = at(&vq, i);
            GaussianState {
                q_a: at(&q, i),
                p_a: at(&p, i),
                var_q,
                var_p: vp.as_ref().map_or(0.25 / var_q, |v| at(v, i)),
                cov_qp: at(&cq, i),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_figure_one() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.initial[0].var_p, 0.5);
    }

    #[test]
    fn parses_lists_and_switches() {
        let c = RunConfig::parse(
            "s = 2 # comment\nmu = 0, 0.01\nvar_q = 0.5, 2, 4\nfrequency = auto\noracle = true\nsign = plus\n",
        )
        .unwrap();
        assert_eq!(c.s, 2.0);
        assert_eq!(c.mu, vec![0.0, 0.01]);
        assert_eq!(c.initial.len(), 3);
        assert_eq!(c.initial[2].var_p, 0.0625);
        assert_eq!(c.frequency, Choice::Auto);
        assert_eq!(c.sign, Choice::Fixed(DissipationSign::Flipped));
        assert!(c.needs_calibration());
    }

    #[test]
    fn rejects_unknown_duplicate_and_invalid() {
        assert!(matches!(RunConfig::parse("colour = red"), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::parse("s = 1\ns = 2"), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::parse("s = 0"), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::parse("var_q = 1\nvar_p = 0.1"), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::parse("noise = auto"), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::parse("q0 = 1,2\np0 = 1,2,3"), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::parse("dt = 0.1\nsteps_per_period = 100"), Err(CliError::Config(_))));
    }

    #[test]
    fn manifest_lists_every_key() {
        let c = RunConfig::default();
        let m = c.manifest("simulate", &c.switches_or_default());
        for k in KEYS.iter().filter(|k| **k != "steps_per_period") {
            assert!(m.contains(&format!("# {k} = ")), "missing {k}");
        }
        assert!(m.lines().all(|l| l.starts_with('#')));
    }
}
