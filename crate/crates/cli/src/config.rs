//! Flat `key = value` run configuration.
//!
//! Keys are globally unique, so a file may use section headers for grouping
//! or leave them out. A key placed under the wrong section is rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use nipd_core::harness::BaselineGrid;
use nipd_core::plant::lump;
use nipd_core::{
    EpisodeConfig, Gains, ImmunePidBaselineParams, InputScale, LumpedParams, NetTopology, NominalParams,
    PhysicalParams, PlantState, Scenario, TrainOptions, Trajectory,
};

use crate::error::CliError;

/// Section of every accepted key.
const KEYS: &[(&str, &str)] = &[
    ("plant", "a2"),
    ("plant", "a1"),
    ("plant", "a0"),
    ("physical", "J_c"),
    ("physical", "m"),
    ("physical", "r"),
    ("physical", "B"),
    ("physical", "g"),
    ("physical", "J_m"),
    ("physical", "B_m"),
    ("physical", "j"),
    ("physical", "R"),
    ("physical", "L"),
    ("physical", "k_t"),
    ("physical", "k_v"),
    ("nominal", "a2_hat"),
    ("nominal", "a1_hat"),
    ("gains", "K_P"),
    ("gains", "K_D"),
    ("network", "p"),
    ("network", "T"),
    ("network", "a"),
    ("network", "init_scale"),
    ("network", "e_scale"),
    ("network", "e_dot_scale"),
    ("network", "v_dot_scale"),
    ("training", "eta"),
    ("training", "epochs"),
    ("training", "seed"),
    ("training", "error_sign"),
    ("trajectory", "trajectory"),
    ("trajectory", "amplitude"),
    ("trajectory", "omega"),
    ("trajectory", "from"),
    ("trajectory", "to"),
    ("trajectory", "start"),
    ("trajectory", "rise_time"),
    ("trajectory", "value"),
    ("episode", "t0"),
    ("episode", "tf"),
    ("episode", "dt"),
    ("episode", "substeps"),
    ("episode", "theta0"),
    ("episode", "theta_dot0"),
    ("episode", "controller"),
    ("episode", "suppressor"),
    ("baseline", "K0"),
    ("baseline", "suppression"),
    ("baseline", "sigma"),
    ("baseline", "Kp_i"),
    ("baseline", "Ki_i"),
    ("baseline", "Kd_i"),
    ("compare", "checkpoint"),
    ("compare", "against"),
    ("compare", "tune_baseline"),
    ("sweep", "grid"),
    ("gradcheck", "gc_hidden"),
    ("gradcheck", "gc_steps"),
    ("gradcheck", "gc_seeds"),
    ("gradcheck", "gc_weight_scale"),
    ("gradcheck", "corrupt_derivative"),
    ("output", "out"),
];

const PHYSICAL_REQUIRED: &[&str] = &["J_c", "m", "r", "B", "g", "J_m", "B_m", "j", "R", "k_t", "k_v"];

fn section_of(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(_, k)| *k == key).map(|(s, _)| *s)
}

/// Where the plant coefficients come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlantSpec {
    Lumped(LumpedParams),
    Physical(PhysicalParams),
}

impl PlantSpec {
    pub fn lumped(&self) -> nipd_core::Result<LumpedParams> {
        match self {
            PlantSpec::Lumped(lp) => Ok(*lp),
            PlantSpec::Physical(p) => lump(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    NeuralImmunePd,
    ImmunePidBaseline,
    PdOnly,
    OracleCompensation,
}

impl ControllerKind {
    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::NeuralImmunePd => "neural-immune-pd",
            ControllerKind::ImmunePidBaseline => "immune-pid-baseline",
            ControllerKind::PdOnly => "pd-only",
            ControllerKind::OracleCompensation => "oracle-compensation",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            ControllerKind::NeuralImmunePd,
            ControllerKind::ImmunePidBaseline,
            ControllerKind::PdOnly,
            ControllerKind::OracleCompensation,
        ]
        .into_iter()
        .find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckConfig {
    pub hidden: Vec<usize>,
    pub steps: usize,
    pub seeds: u64,
    pub weight_scale: f64,
    /// Multiplies the hidden-cell derivative inside BPTT; 1 leaves it intact.
    pub corrupt_derivative: f64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig {
            hidden: vec![1, 3, 5],
            steps: 20,
            seeds: 10,
            weight_scale: 0.5,
            corrupt_derivative: 1.0,
        }
    }
}

/// Fully validated settings for every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub plant: PlantSpec,
    /// `None` uses the exact a2, a1 of the plant.
    pub nominal: Option<NominalParams>,
    pub gains: Gains,
    pub topology: NetTopology,
    pub training: TrainOptions,
    pub trajectory: Trajectory,
    pub episode: EpisodeConfig,
    pub controller: ControllerKind,
    pub suppressor: bool,
    pub baseline: ImmunePidBaselineParams,
    pub checkpoint: Option<PathBuf>,
    pub against: ControllerKind,
    pub tune_baseline: bool,
    /// (K_P, K_D) pairs.
    pub sweep_grid: Vec<(f64, f64)>,
    pub gradcheck: GradcheckConfig,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            plant: PlantSpec::Lumped(LumpedParams::default()),
            nominal: None,
            gains: Gains::default(),
            topology: NetTopology::default(),
            training: TrainOptions::default(),
            trajectory: Trajectory::default(),
            episode: EpisodeConfig::default(),
            controller: ControllerKind::NeuralImmunePd,
            suppressor: true,
            baseline: ImmunePidBaselineParams::default(),
            checkpoint: None,
            against: ControllerKind::ImmunePidBaseline,
            tune_baseline: true,
            sweep_grid: vec![(25.0, 10.0), (100.0, 20.0), (400.0, 40.0)],
            gradcheck: GradcheckConfig::default(),
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn scenario(&self) -> nipd_core::Result<Scenario> {
        let lumped = self.plant.lumped()?;
        Ok(Scenario {
            trajectory: self.trajectory,
            lumped,
            nominal: self.nominal.unwrap_or_else(|| NominalParams::exact(&lumped)),
            gains: self.gains,
        })
    }

    pub fn baseline_grid(&self) -> BaselineGrid {
        BaselineGrid {
            inner: (self.baseline.kp, self.baseline.ki, self.baseline.kd),
            ..BaselineGrid::default()
        }
    }
}

/// A value and where it was set.
#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: Option<usize>,
}

impl Entry {
    fn origin(&self) -> String {
        match self.line {
            Some(n) => format!("line {n}"),
            None => "--set".to_string(),
        }
    }
}

/// Raw key/value pairs before typing.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<&'static str, Entry>,
}

fn intern(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(_, k)| *k == key).map(|(_, k)| *k)
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut raw = RawConfig::default();
        let mut section: Option<String> = None;
        for (idx, line) in text.lines().enumerate() {
            let n = idx + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::config(format!("line {n}: malformed section header `{line}`")))?
                    .trim();
                if !KEYS.iter().any(|(s, _)| *s == name) {
                    return Err(CliError::config(format!("line {n}: unknown section `{name}`")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {n}: expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let Some(k) = intern(key) else {
                return Err(CliError::config(format!("line {n}: unknown key `{key}`")));
            };
            if let Some(s) = &section {
                let home = section_of(k).unwrap_or_default();
                if s != home {
                    return Err(CliError::config(format!("line {n}: key `{key}` belongs in [{home}], not [{s}]")));
                }
            }
            if raw.entries.contains_key(k) {
                return Err(CliError::config(format!("line {n}: duplicate key `{key}`")));
            }
            raw.entries.insert(k, Entry { value: value.to_string(), line: Some(n) });
        }
        Ok(raw)
    }

    /// Apply a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("--set: expected key=value, got `{assignment}`")))?;
        let key = key.trim();
        let k = intern(key).ok_or_else(|| CliError::config(format!("--set: unknown key `{key}`")))?;
        self.entries.insert(k, Entry { value: value.trim().to_string(), line: None });
        Ok(())
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn get<T>(&self, key: &str, default: T, parse: impl Fn(&str) -> Option<T>, expected: &str) -> Result<T, CliError> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(e) => parse(&e.value).ok_or_else(|| {
                CliError::config(format!("{}: key `{key}` expects {expected}, got `{}`", e.origin(), e.value))
            }),
        }
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64, CliError> {
        self.get(key, default, |s| s.parse().ok(), "a number")
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize, CliError> {
        self.get(key, default, |s| s.parse().ok(), "a non-negative integer")
    }

    fn u64(&self, key: &str, default: u64) -> Result<u64, CliError> {
        self.get(key, default, |s| s.parse().ok(), "a non-negative integer")
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool, CliError> {
        self.get(
            key,
            default,
            |s| match s {
                "true" | "on" => Some(true),
                "false" | "off" => Some(false),
                _ => None,
            },
            "true/false or on/off",
        )
    }

    fn required_f64(&self, key: &str) -> Result<f64, CliError> {
        if !self.has(key) {
            return Err(CliError::config(format!("key `{key}` is required when physical parameters are given")));
        }
        self.f64(key, 0.0)
    }

    /// Attach the origin of `key` to a domain error raised while validating it.
    fn invalid(&self, key: &str, err: impl std::fmt::Display) -> CliError {
        match self.entries.get(key) {
            Some(e) => CliError::config(format!("{}: key `{key}`: {err}", e.origin())),
            None => CliError::config(format!("key `{key}`: {err}")),
        }
    }

    /// Route a core validation error to the key it names, else to `fallback`.
    fn check(&self, r: nipd_core::Result<()>, fallback: &str) -> Result<(), CliError> {
        r.map_err(|e| {
            let key = match &e {
                nipd_core::Error::Domain { name, .. } => match *name {
                    "initial state" => "theta0",
                    n if intern(n).is_some() => n,
                    _ => fallback,
                },
                _ => fallback,
            };
            self.invalid(key, e)
        })
    }

    /// Type and validate every value, applying defaults for absent keys.
    pub fn build(&self) -> Result<(RunConfig, Vec<String>), CliError> {
        let d = RunConfig::default();
        let mut warnings = Vec::new();

        let lumped_keys = ["a2", "a1", "a0"].iter().any(|k| self.has(k));
        let physical_keys = KEYS.iter().any(|(s, k)| *s == "physical" && self.has(k));
        if lumped_keys && physical_keys {
            return Err(CliError::config(
                "give either lumped coefficients (a2, a1, a0) or physical parameters, not both",
            ));
        }
        let plant = if physical_keys {
            let mut vals = BTreeMap::new();
            for k in PHYSICAL_REQUIRED {
                vals.insert(*k, self.required_f64(k)?);
            }
            let p = PhysicalParams {
                load_inertia: vals["J_c"],
                mass: vals["m"],
                arm_length: vals["r"],
                load_friction: vals["B"],
                gravity: vals["g"],
                motor_inertia: vals["J_m"],
                motor_friction: vals["B_m"],
                gear_ratio: vals["j"],
                resistance: vals["R"],
                inductance: self.f64("L", 0.0)?,
                torque_constant: vals["k_t"],
                back_emf_constant: vals["k_v"],
            };
            lump(&p).map_err(|e| CliError::config(format!("physical parameters: {e}")))?;
            PlantSpec::Physical(p)
        } else {
            let lp0 = LumpedParams::default();
            let lp = LumpedParams {
                a2: self.f64("a2", lp0.a2)?,
                a1: self.f64("a1", lp0.a1)?,
                a0: self.f64("a0", lp0.a0)?,
            };
            self.check(lp.validate(), "a2")?;
            PlantSpec::Lumped(lp)
        };

        let nominal = match (self.has("a2_hat"), self.has("a1_hat")) {
            (false, false) => None,
            (true, true) => {
                let np = NominalParams {
                    a2_hat: self.f64("a2_hat", 0.0)?,
                    a1_hat: self.f64("a1_hat", 0.0)?,
                };
                self.check(np.validate(), "a2_hat")?;
                Some(np)
            }
            _ => return Err(CliError::config("a2_hat and a1_hat must be given together")),
        };

        let gains = Gains {
            kp: self.f64("K_P", d.gains.kp)?,
            kd: self.f64("K_D", d.gains.kd)?,
        };
        self.check(gains.validate(), "K_P")?;
        if !gains.is_critically_damped() {
            warnings.push(format!(
                "K_D^2 = {} differs from 4 K_P = {}; the error dynamics are not critically damped",
                gains.kd * gains.kd,
                4.0 * gains.kp
            ));
        }

        let topology = NetTopology {
            hidden: self.usize("p", d.topology.hidden)?,
            steepness: self.f64("T", d.topology.steepness)?,
            output_gain: self.f64("a", d.topology.output_gain)?,
        };
        self.check(topology.validate(), "p")?;

        let d_train = d.training;
        let input_scale = InputScale {
            e: self.f64("e_scale", d_train.input_scale.e)?,
            e_dot: self.f64("e_dot_scale", d_train.input_scale.e_dot)?,
            v_dot: self.f64("v_dot_scale", d_train.input_scale.v_dot)?,
        };
        let training = TrainOptions {
            epochs: self.usize("epochs", d_train.epochs)?,
            eta: self.f64("eta", d_train.eta)?,
            seed: self.u64("seed", d_train.seed)?,
            init_scale: self.f64("init_scale", d_train.init_scale)?,
            error_sign: self.f64("error_sign", d_train.error_sign)?,
            input_scale,
        };
        if !(training.init_scale >= 0.0 && training.init_scale.is_finite()) {
            return Err(self.invalid("init_scale", "must be finite and >= 0"));
        }
        self.check(training.validate(), "epochs")?;

        let kind = self.get("trajectory", "sinusoid".to_string(), |s| Some(s.to_string()), "a trajectory kind")?;
        let trajectory = match kind.as_str() {
            "sinusoid" => Trajectory::Sinusoid {
                amplitude: self.f64("amplitude", 1.0)?,
                omega: self.f64("omega", 1.0)?,
            },
            "smooth_step" => Trajectory::SmoothStep {
                from: self.f64("from", 0.0)?,
                to: self.f64("to", 1.0)?,
                start: self.f64("start", 0.0)?,
                rise_time: self.f64("rise_time", 1.0)?,
            },
            "constant" => Trajectory::Constant { value: self.f64("value", 0.0)? },
            other => {
                return Err(self.invalid(
                    "trajectory",
                    format!("unknown kind `{other}` (sinusoid, smooth_step, constant)"),
                ))
            }
        };
        self.check(trajectory.validate(), "trajectory")?;

        let initial = if self.has("theta0") || self.has("theta_dot0") {
            Some(PlantState::new(self.f64("theta0", 0.0)?, self.f64("theta_dot0", 0.0)?))
        } else {
            None
        };
        let episode = EpisodeConfig {
            t0: self.f64("t0", d.episode.t0)?,
            tf: self.f64("tf", d.episode.tf)?,
            dt: self.f64("dt", d.episode.dt)?,
            initial,
            substeps: self.usize("substeps", d.episode.substeps)?,
        };
        self.check(episode.steps().map(|_| ()), "dt")?;

        let controller = self.controller("controller", d.controller)?;
        let against = self.controller("against", d.against)?;

        let baseline = ImmunePidBaselineParams {
            k0: self.f64("K0", d.baseline.k0)?,
            eta: self.f64("suppression", d.baseline.eta)?,
            sigma: self.f64("sigma", d.baseline.sigma)?,
            kp: self.f64("Kp_i", d.baseline.kp)?,
            ki: self.f64("Ki_i", d.baseline.ki)?,
            kd: self.f64("Kd_i", d.baseline.kd)?,
        };
        self.check(baseline.validate(), "K0")?;

        let sweep_grid = self.get("grid", d.sweep_grid.clone(), parse_grid, "K_P:K_D pairs separated by commas")?;
        for &(kp, kd) in &sweep_grid {
            if Gains::new(kp, kd).is_err() {
                return Err(self.invalid("grid", format!("gains must be positive, got {kp}:{kd}")));
            }
        }

        let gradcheck = GradcheckConfig {
            hidden: self.get("gc_hidden", d.gradcheck.hidden.clone(), parse_list, "integers separated by commas")?,
            steps: self.usize("gc_steps", d.gradcheck.steps)?,
            seeds: self.u64("gc_seeds", d.gradcheck.seeds)?,
            weight_scale: self.f64("gc_weight_scale", d.gradcheck.weight_scale)?,
            corrupt_derivative: self.f64("corrupt_derivative", d.gradcheck.corrupt_derivative)?,
        };
        if gradcheck.hidden.is_empty() || gradcheck.steps == 0 || gradcheck.seeds == 0 {
            return Err(CliError::config("gc_hidden, gc_steps and gc_seeds must be non-empty / >= 1"));
        }

        let cfg = RunConfig {
            plant,
            nominal,
            gains,
            topology,
            training,
            trajectory,
            episode,
            controller,
            suppressor: self.bool("suppressor", d.suppressor)?,
            baseline,
            checkpoint: self.entries.get("checkpoint").map(|e| PathBuf::from(&e.value)),
            against,
            tune_baseline: self.bool("tune_baseline", d.tune_baseline)?,
            sweep_grid,
            gradcheck,
            out: self.entries.get("out").map_or(d.out, |e| PathBuf::from(&e.value)),
        };
        Ok((cfg, warnings))
    }

    fn controller(&self, key: &str, default: ControllerKind) -> Result<ControllerKind, CliError> {
        self.get(
            key,
            default,
            ControllerKind::parse,
            "one of neural-immune-pd, immune-pid-baseline, pd-only, oracle-compensation",
        )
    }
}

fn parse_grid(s: &str) -> Option<Vec<(f64, f64)>> {
    let pairs: Option<Vec<_>> = s
        .split(',')
        .map(|pair| {
            let (kp, kd) = pair.split_once(':')?;
            Some((kp.trim().parse().ok()?, kd.trim().parse().ok()?))
        })
        .collect();
    pairs.filter(|p| !p.is_empty())
}

fn parse_list(s: &str) -> Option<Vec<usize>> {
    s.split(',').map(|x| x.trim().parse().ok()).collect()
}

/// Parse a configuration document; warnings are returned alongside.
pub fn parse_config(text: &str) -> Result<(RunConfig, Vec<String>), CliError> {
    RawConfig::parse(text)?.build()
}

/// Render the effective configuration so that it re-parses to the same value.
pub fn render_config(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let kv = |out: &mut String, k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    let head = |out: &mut String, name: &str| {
        if !out.is_empty() {
            out.push('\n');
        }
        let _ = writeln!(out, "[{name}]");
    };

    match cfg.plant {
        PlantSpec::Lumped(lp) => {
            head(&mut out, "plant");
            kv(&mut out, "a2", format!("{:?}", lp.a2));
            kv(&mut out, "a1", format!("{:?}", lp.a1));
            kv(&mut out, "a0", format!("{:?}", lp.a0));
        }
        PlantSpec::Physical(p) => {
            head(&mut out, "physical");
            for (k, v) in [
                ("J_c", p.load_inertia),
                ("m", p.mass),
                ("r", p.arm_length),
                ("B", p.load_friction),
                ("g", p.gravity),
                ("J_m", p.motor_inertia),
                ("B_m", p.motor_friction),
                ("j", p.gear_ratio),
                ("R", p.resistance),
                ("L", p.inductance),
                ("k_t", p.torque_constant),
                ("k_v", p.back_emf_constant),
            ] {
                kv(&mut out, k, format!("{v:?}"));
            }
        }
    }
    if let Some(np) = cfg.nominal {
        head(&mut out, "nominal");
        kv(&mut out, "a2_hat", format!("{:?}", np.a2_hat));
        kv(&mut out, "a1_hat", format!("{:?}", np.a1_hat));
    }

    head(&mut out, "gains");
    kv(&mut out, "K_P", format!("{:?}", cfg.gains.kp));
    kv(&mut out, "K_D", format!("{:?}", cfg.gains.kd));

    let t = &cfg.training;
    head(&mut out, "network");
    kv(&mut out, "p", cfg.topology.hidden.to_string());
    kv(&mut out, "T", format!("{:?}", cfg.topology.steepness));
    kv(&mut out, "a", format!("{:?}", cfg.topology.output_gain));
    kv(&mut out, "init_scale", format!("{:?}", t.init_scale));
    kv(&mut out, "e_scale", format!("{:?}", t.input_scale.e));
    kv(&mut out, "e_dot_scale", format!("{:?}", t.input_scale.e_dot));
    kv(&mut out, "v_dot_scale", format!("{:?}", t.input_scale.v_dot));

    head(&mut out, "training");
    kv(&mut out, "eta", format!("{:?}", t.eta));
    kv(&mut out, "epochs", t.epochs.to_string());
    kv(&mut out, "seed", t.seed.to_string());
    kv(&mut out, "error_sign", format!("{:?}", t.error_sign));

    head(&mut out, "trajectory");
    match cfg.trajectory {
        Trajectory::Sinusoid { amplitude, omega } => {
            kv(&mut out, "trajectory", "sinusoid".into());
            kv(&mut out, "amplitude", format!("{amplitude:?}"));
            kv(&mut out, "omega", format!("{omega:?}"));
        }
        Trajectory::SmoothStep { from, to, start, rise_time } => {
            kv(&mut out, "trajectory", "smooth_step".into());
            kv(&mut out, "from", format!("{from:?}"));
            kv(&mut out, "to", format!("{to:?}"));
            kv(&mut out, "start", format!("{start:?}"));
            kv(&mut out, "rise_time", format!("{rise_time:?}"));
        }
        Trajectory::Constant { value } => {
            kv(&mut out, "trajectory", "constant".into());
            kv(&mut out, "value", format!("{value:?}"));
        }
    }

    let e = &cfg.episode;
    head(&mut out, "episode");
    kv(&mut out, "t0", format!("{:?}", e.t0));
    kv(&mut out, "tf", format!("{:?}", e.tf));
    kv(&mut out, "dt", format!("{:?}", e.dt));
    kv(&mut out, "substeps", e.substeps.to_string());
    if let Some(s) = e.initial {
        kv(&mut out, "theta0", format!("{:?}", s.theta));
        kv(&mut out, "theta_dot0", format!("{:?}", s.theta_dot));
    }
    kv(&mut out, "controller", cfg.controller.name().into());
    kv(&mut out, "suppressor", if cfg.suppressor { "on" } else { "off" }.into());

    let b = &cfg.baseline;
    head(&mut out, "baseline");
    kv(&mut out, "K0", format!("{:?}", b.k0));
    kv(&mut out, "suppression", format!("{:?}", b.eta));
    kv(&mut out, "sigma", format!("{:?}", b.sigma));
    kv(&mut out, "Kp_i", format!("{:?}", b.kp));
    kv(&mut out, "Ki_i", format!("{:?}", b.ki));
    kv(&mut out, "Kd_i", format!("{:?}", b.kd));

    head(&mut out, "compare");
    if let Some(p) = &cfg.checkpoint {
        kv(&mut out, "checkpoint", p.display().to_string());
    }
    kv(&mut out, "against", cfg.against.name().into());
    kv(&mut out, "tune_baseline", cfg.tune_baseline.to_string());

    head(&mut out, "sweep");
    let grid: Vec<String> = cfg.sweep_grid.iter().map(|(kp, kd)| format!("{kp:?}:{kd:?}")).collect();
    kv(&mut out, "grid", grid.join(", "));

    let g = &cfg.gradcheck;
    head(&mut out, "gradcheck");
    let hidden: Vec<String> = g.hidden.iter().map(usize::to_string).collect();
    kv(&mut out, "gc_hidden", hidden.join(", "));
    kv(&mut out, "gc_steps", g.steps.to_string());
    kv(&mut out, "gc_seeds", g.seeds.to_string());
    kv(&mut out, "gc_weight_scale", format!("{:?}", g.weight_scale));
    kv(&mut out, "corrupt_derivative", format!("{:?}", g.corrupt_derivative));

    head(&mut out, "output");
    kv(&mut out, "out", cfg.out.display().to_string());
    out
}
