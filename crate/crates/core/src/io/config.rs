use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::experiments::{
    MeshRule, Protocol, Reference, Scenario, SweepPlan, DEFAULT_KAPPA, DEFAULT_RECORDS,
    DEFAULT_REFINEMENT,
};
use crate::grid::{BoundaryRule, DatumSpec, Grid1D};
use crate::kernels::{Alignment, ConvolutionMethod, KernelProfile};
use crate::models::{preset, VelocitySpec};
use crate::schemes::{Locality, SchemeKind, SchemeSpec, DEFAULT_CFL};

const DEFAULT_CELLS_PER_EPSILON: f64 = 50.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

/// The document as written: every key optional, unknown keys rejected.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    x_min: Option<f64>,
    x_max: Option<f64>,
    n_cells: Option<usize>,
    boundary: Option<String>,
    kernel: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    alignment: Option<String>,
    convolution: Option<String>,
    velocity_a: Option<f64>,
    velocity_b: Option<f64>,
    range: Option<(f64, f64)>,
    locality: Option<String>,
    scheme: Option<String>,
    nu: Option<f64>,
    cfl: Option<f64>,
    t_final: Option<f64>,
    records: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<PathBuf>,
    datum: Option<DatumSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<RawSweep>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    #[serde(skip_serializing_if = "Option::is_none")]
    variable: Option<String>,
    protocol: Option<String>,
    values: Option<Vec<f64>>,
    mesh_rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cells_per_epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    refinement: Option<usize>,
    schemes: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    half_line_x0: Option<f64>,
    timing: Option<bool>,
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
    pub boundary: BoundaryRule,
    pub kernel: KernelProfile,
    /// Required whenever a nonlocal scheme is run.
    pub epsilon: Option<f64>,
    /// `None` lets each scheme pick its own alignment.
    pub alignment: Option<Alignment>,
    pub convolution: ConvolutionMethod,
    pub velocity: VelocitySpec,
    pub scheme: SchemeSpec,
    pub t_final: f64,
    pub records: usize,
    pub datum: DatumSpec,
    pub output: Option<PathBuf>,
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub protocol: Protocol,
    pub values: Vec<f64>,
    pub mesh_rule: MeshRule,
    pub schemes: Vec<SchemeSpec>,
    pub half_line_x0: f64,
    /// Write wall-clock runtimes; off by default so reruns are byte-identical.
    pub timing: bool,
}

fn boundary_name(b: BoundaryRule) -> &'static str {
    match b {
        BoundaryRule::Periodic => "periodic",
        BoundaryRule::ConstantExtension => "constant",
    }
}

fn parse_choice<T: Copy>(key: &str, value: &str, choices: &[(&str, T)]) -> Result<T, ConfigError> {
    choices
        .iter()
        .find(|(name, _)| *name == value)
        .map(|(_, v)| *v)
        .ok_or_else(|| {
            let names: Vec<_> = choices.iter().map(|(n, _)| *n).collect();
            invalid(key, format!("`{value}` is not one of {}", names.join(", ")))
        })
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be a positive number, got {v}")))
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl RunConfig {
    /// Parses and validates a TOML document.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.span().map_or(1, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        Self::resolve(raw)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Defaults of a named preset, with no sweep block.
    pub fn from_preset(name: &str) -> Result<Self, ConfigError> {
        Self::resolve(RawConfig {
            preset: Some(name.to_string()),
            ..RawConfig::default()
        })
    }

    fn resolve(raw: RawConfig) -> Result<Self, ConfigError> {
        let base = match &raw.preset {
            Some(name) => Some(preset(name).ok_or_else(|| {
                let names: Vec<_> = crate::models::PRESETS.iter().map(|p| p.name).collect();
                invalid(
                    "preset",
                    format!("unknown preset `{name}`; known: {}", names.join(", ")),
                )
            })?),
            None => None,
        };
        let need = |key: &str| invalid(key, "required when no preset is given");

        let x_min = raw
            .x_min
            .or(base.map(|p| p.x_min))
            .ok_or_else(|| need("x_min"))?;
        let x_max = raw
            .x_max
            .or(base.map(|p| p.x_max))
            .ok_or_else(|| need("x_max"))?;
        let n_cells = raw
            .n_cells
            .or(base.map(|p| p.n_cells))
            .ok_or_else(|| need("n_cells"))?;
        Grid1D::new(x_min, x_max, n_cells).map_err(|e| {
            let key = if n_cells < crate::grid::MIN_CELLS {
                "n_cells"
            } else {
                "x_max"
            };
            invalid(key, e.to_string())
        })?;

        let boundary = match &raw.boundary {
            Some(b) => parse_choice(
                "boundary",
                b,
                &[
                    ("constant", BoundaryRule::ConstantExtension),
                    ("periodic", BoundaryRule::Periodic),
                ],
            )?,
            None => base.map_or(BoundaryRule::ConstantExtension, |p| p.boundary),
        };
        let kernel = match &raw.kernel {
            Some(k) => k
                .parse()
                .map_err(|e: crate::Error| invalid("kernel", e.to_string()))?,
            None => base.map_or(KernelProfile::BoxBackward, |p| p.kernel),
        };
        let alignment = match raw.alignment.as_deref() {
            None => None,
            Some(a) => parse_choice(
                "alignment",
                a,
                &[
                    ("auto", None),
                    ("cell", Some(Alignment::CellCentered)),
                    ("interface", Some(Alignment::InterfaceCentered)),
                ],
            )?,
        };
        let convolution = match raw.convolution.as_deref() {
            None => ConvolutionMethod::Direct,
            Some(c) => parse_choice(
                "convolution",
                c,
                &[
                    ("direct", ConvolutionMethod::Direct),
                    ("sliding-box", ConvolutionMethod::SlidingBox),
                ],
            )?,
        };
        if convolution == ConvolutionMethod::SlidingBox && !kernel.is_box() {
            return Err(invalid(
                "convolution",
                format!("sliding-box needs a box kernel, not {kernel}"),
            ));
        }

        let base_velocity = base.map_or(VelocitySpec::TRAFFIC, |p| p.velocity);
        let velocity = VelocitySpec {
            a: raw.velocity_a.unwrap_or(base_velocity.a),
            b: raw.velocity_b.unwrap_or(base_velocity.b),
            range: raw.range.unwrap_or(base_velocity.range),
        };
        let model = velocity.build().map_err(|e| {
            let key = if raw.range.is_some() {
                "range"
            } else {
                "velocity_a"
            };
            invalid(key, e.to_string())
        })?;

        let base_scheme = base.map_or(
            SchemeSpec::new(Locality::Nonlocal, SchemeKind::Godunov),
            |p| p.scheme,
        );
        let locality = match raw.locality.as_deref() {
            None => base_scheme.locality,
            Some(l) => parse_choice(
                "locality",
                l,
                &[("nonlocal", Locality::Nonlocal), ("local", Locality::Local)],
            )?,
        };
        let kind = match raw.scheme.as_deref() {
            None => base_scheme.kind,
            Some(k) => parse_choice(
                "scheme",
                k,
                &[
                    ("lxf", SchemeKind::LaxFriedrichs),
                    ("godunov", SchemeKind::Godunov),
                    ("upwind", SchemeKind::Upwind),
                ],
            )?,
        };
        let nu = raw.nu.unwrap_or(base_scheme.nu);
        if !(nu.is_finite() && nu >= 0.0) {
            return Err(invalid("nu", format!("must be >= 0, got {nu}")));
        }
        let cfl = raw.cfl.unwrap_or(if base.is_some() {
            base_scheme.cfl
        } else {
            DEFAULT_CFL
        });
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(invalid("cfl", format!("must lie in (0, 1], got {cfl}")));
        }
        let scheme = SchemeSpec::new(locality, kind).with_nu(nu).with_cfl(cfl);

        let epsilon = match raw.epsilon.or(base.map(|p| p.epsilon)) {
            Some(e) => Some(positive("epsilon", e)?),
            None => None,
        };
        let t_final = positive(
            "t_final",
            raw.t_final
                .or(base.map(|p| p.t_final))
                .ok_or_else(|| need("t_final"))?,
        )?;
        let records = raw.records.unwrap_or(DEFAULT_RECORDS);
        if records < 2 {
            return Err(invalid("records", "at least two record times are needed"));
        }

        let datum = raw
            .datum
            .clone()
            .or(base.map(|p| p.datum.clone()))
            .ok_or_else(|| need("datum"))?;
        let grid = Grid1D::new(x_min, x_max, n_cells).expect("checked above");
        let (lo, hi) = model.admissible_range();
        datum
            .to_datum()
            .and_then(|d| d.check_range(lo, hi, &grid))
            .map_err(|e| invalid("datum", e.to_string()))?;

        let mut config = RunConfig {
            preset: raw.preset.clone(),
            x_min,
            x_max,
            n_cells,
            boundary,
            kernel,
            epsilon,
            alignment,
            convolution,
            velocity,
            scheme,
            t_final,
            records,
            datum,
            output: raw.output.clone(),
            sweep: None,
        };
        if scheme.locality == Locality::Nonlocal && epsilon.is_none() && raw.sweep.is_none() {
            return Err(need("epsilon"));
        }
        if let Some(s) = raw.sweep {
            config.sweep = Some(config.resolve_sweep(s)?);
            config
                .sweep_plan()
                .map_err(|e| invalid("sweep", e.to_string()))?;
        }
        Ok(config)
    }

    fn resolve_sweep(&self, raw: RawSweep) -> Result<SweepConfig, ConfigError> {
        let protocol_name = match (raw.protocol.as_deref(), raw.variable.as_deref()) {
            (Some(p), _) => p.to_string(),
            (None, None | Some("epsilon")) => "epsilon".to_string(),
            (None, Some("nu")) => {
                return Err(invalid(
                    "sweep.protocol",
                    "a nu sweep needs `protocol = \"local-nu\"` or `\"nonlocal-nu\"`",
                ))
            }
            (None, Some(v)) => {
                return Err(invalid(
                    "sweep.variable",
                    format!("`{v}` is not one of epsilon, nu"),
                ))
            }
        };
        let entropy = || -> Result<Reference, ConfigError> {
            Ok(match raw.reference.as_deref() {
                None | Some("auto") => Reference::entropy_for(&self.datum),
                Some("exact-riemann") => Reference::ExactRiemann,
                Some("fine-mesh") => Reference::FineMesh {
                    refinement: raw.refinement.unwrap_or(DEFAULT_REFINEMENT),
                },
                Some("viscous-local") => Reference::ViscousLocal,
                Some(other) => {
                    return Err(invalid(
                        "sweep.reference",
                        format!(
                            "`{other}` is not one of auto, exact-riemann, fine-mesh, viscous-local"
                        ),
                    ))
                }
            })
        };
        let protocol = match protocol_name.as_str() {
            "epsilon" => Protocol::Epsilon {
                reference: entropy()?,
            },
            "local-nu" => Protocol::LocalNu {
                reference: entropy()?,
            },
            "viscous-eps" => Protocol::ViscousEps {
                nu: positive("sweep.nu", raw.nu.unwrap_or(self.scheme.nu))?,
            },
            "nonlocal-nu" => Protocol::NonlocalNu {
                epsilon: positive(
                    "sweep.epsilon",
                    raw.epsilon
                        .or(self.epsilon)
                        .ok_or_else(|| invalid("sweep.epsilon", "nonlocal-nu needs a fixed eps"))?,
                )?,
            },
            other => {
                return Err(invalid(
                    "sweep.protocol",
                    format!("`{other}` is not one of epsilon, viscous-eps, local-nu, nonlocal-nu"),
                ))
            }
        };
        if let Some(v) = raw.variable.as_deref() {
            let expected = match protocol.variable() {
                crate::experiments::SweepVariable::Epsilon => "epsilon",
                crate::experiments::SweepVariable::Nu => "nu",
            };
            if v != expected {
                return Err(invalid(
                    "sweep.variable",
                    format!("the {} protocol sweeps {expected}", protocol.name()),
                ));
            }
        }

        let values = raw
            .values
            .ok_or_else(|| invalid("sweep.values", "a sweep needs values"))?;
        if values.is_empty() || values.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(invalid(
                "sweep.values",
                "must be a non-empty, strictly decreasing list",
            ));
        }

        let default_h = (self.x_max - self.x_min) / self.n_cells as f64;
        let mesh_rule = match raw.mesh_rule.as_deref().unwrap_or("fixed-h") {
            "fixed-h" => MeshRule::FixedH {
                h: positive("sweep.h", raw.h.unwrap_or(default_h))?,
            },
            "coupled" => MeshRule::Coupled {
                kappa: positive("sweep.kappa", raw.kappa.unwrap_or(DEFAULT_KAPPA))?,
            },
            "proportional" => MeshRule::Proportional {
                cells_per_epsilon: positive(
                    "sweep.cells_per_epsilon",
                    raw.cells_per_epsilon.unwrap_or(DEFAULT_CELLS_PER_EPSILON),
                )?,
            },
            other => {
                return Err(invalid(
                    "sweep.mesh_rule",
                    format!("`{other}` is not one of fixed-h, coupled, proportional"),
                ))
            }
        };

        let schemes = match raw.schemes {
            Some(labels) => labels
                .iter()
                .map(|l| {
                    l.parse::<SchemeSpec>()
                        .map(|s| s.with_nu(self.scheme.nu).with_cfl(self.scheme.cfl))
                        .map_err(|e| invalid("sweep.schemes", e.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => match protocol {
                Protocol::LocalNu { .. } => vec![self.scheme.local_counterpart()],
                _ => vec![self.scheme],
            },
        };

        Ok(SweepConfig {
            protocol,
            values,
            mesh_rule,
            schemes,
            half_line_x0: raw.half_line_x0.unwrap_or(0.0),
            timing: raw.timing.unwrap_or(false),
        })
    }

    pub fn grid(&self) -> Grid1D {
        Grid1D::new(self.x_min, self.x_max, self.n_cells).expect("validated on parse")
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            model: self.velocity.build().expect("validated on parse"),
            kernel: self.kernel,
            datum: self.datum.clone(),
            x_min: self.x_min,
            x_max: self.x_max,
            boundary: self.boundary,
            t_final: self.t_final,
        }
    }

    /// The sweep block as an executable plan.
    pub fn sweep_plan(&self) -> crate::Result<SweepPlan> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| crate::Error::InvalidPlan("the config has no [sweep] block".into()))?;
        let mut plan = SweepPlan::new(
            self.scenario(),
            s.protocol,
            s.values.clone(),
            s.mesh_rule,
            s.schemes.clone(),
        );
        plan.alignment = self.alignment;
        plan.convolution = self.convolution;
        plan.records = self.records;
        plan.half_line_x0 = s.half_line_x0;
        plan.validate()?;
        Ok(plan)
    }

    /// Renders the configuration as a document that parses back to `self`.
    pub fn to_toml(&self) -> String {
        let raw = RawConfig {
            preset: self.preset.clone(),
            x_min: Some(self.x_min),
            x_max: Some(self.x_max),
            n_cells: Some(self.n_cells),
            boundary: Some(boundary_name(self.boundary).into()),
            kernel: Some(self.kernel.name().into()),
            epsilon: self.epsilon,
            alignment: Some(self.alignment.map_or("auto", Alignment::name).into()),
            convolution: Some(
                match self.convolution {
                    ConvolutionMethod::Direct => "direct",
                    ConvolutionMethod::SlidingBox => "sliding-box",
                }
                .into(),
            ),
            velocity_a: Some(self.velocity.a),
            velocity_b: Some(self.velocity.b),
            range: Some(self.velocity.range),
            locality: Some(self.scheme.locality.name().into()),
            scheme: Some(self.scheme.kind.name().into()),
            nu: Some(self.scheme.nu),
            cfl: Some(self.scheme.cfl),
            t_final: Some(self.t_final),
            records: Some(self.records),
            output: self.output.clone(),
            datum: Some(self.datum.clone()),
            sweep: self.sweep.as_ref().map(|s| self.raw_sweep(s)),
        };
        toml::to_string(&raw).expect("config fields are all representable")
    }

    fn raw_sweep(&self, s: &SweepConfig) -> RawSweep {
        let mut raw = RawSweep {
            protocol: Some(s.protocol.name().into()),
            values: Some(s.values.clone()),
            schemes: Some(s.schemes.iter().map(SchemeSpec::label).collect()),
            half_line_x0: Some(s.half_line_x0),
            timing: Some(s.timing),
            ..RawSweep::default()
        };
        match s.mesh_rule {
            MeshRule::FixedH { h } => {
                raw.mesh_rule = Some("fixed-h".into());
                raw.h = Some(h);
            }
            MeshRule::Coupled { kappa } => {
                raw.mesh_rule = Some("coupled".into());
                raw.kappa = Some(kappa);
            }
            MeshRule::Proportional { cells_per_epsilon } => {
                raw.mesh_rule = Some("proportional".into());
                raw.cells_per_epsilon = Some(cells_per_epsilon);
            }
        }
        let mut set_reference = |r: Reference| match r {
            Reference::ExactRiemann => raw.reference = Some("exact-riemann".into()),
            Reference::FineMesh { refinement } => {
                raw.reference = Some("fine-mesh".into());
                raw.refinement = Some(refinement);
            }
            Reference::ViscousLocal => raw.reference = Some("viscous-local".into()),
        };
        match s.protocol {
            Protocol::Epsilon { reference } | Protocol::LocalNu { reference } => {
                set_reference(reference)
            }
            Protocol::ViscousEps { nu } => raw.nu = Some(nu),
            Protocol::NonlocalNu { epsilon } => raw.epsilon = Some(epsilon),
        }
        raw
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn key_of(e: ConfigError) -> String {
        match e {
            ConfigError::Invalid { key, .. } => key,
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_preset_document() {
        let c = RunConfig::parse("preset = \"traffic-riemann\"\nepsilon = 0.1\n").unwrap();
        let p = preset("traffic-riemann").unwrap();
        assert_eq!(c.epsilon, Some(0.1));
        assert_eq!((c.x_min, c.x_max, c.n_cells), (p.x_min, p.x_max, p.n_cells));
        assert_eq!(c.scheme, p.scheme);
        assert_eq!(c.datum, p.datum);
        assert_eq!(c.t_final, p.t_final);
        assert!(c.sweep.is_none());
    }

    #[test]
    fn negative_epsilon_names_the_key() {
        let e = RunConfig::parse("preset = \"traffic-riemann\"\nepsilon = -1\n").unwrap_err();
        assert_eq!(key_of(e), "epsilon");
    }

    #[test]
    fn coupled_sweep_block() {
        let c = RunConfig::parse(
            r#"
preset = "traffic-riemann"

[sweep]
values = [0.4, 0.2, 0.1]
mesh_rule = "coupled"
kappa = 1000
"#,
        )
        .unwrap();
        let s = c.sweep.as_ref().unwrap();
        assert_eq!(s.mesh_rule, MeshRule::Coupled { kappa: 1000.0 });
        assert_eq!(
            s.protocol,
            Protocol::Epsilon {
                reference: Reference::ExactRiemann
            }
        );
        let plan = c.sweep_plan().unwrap();
        assert_eq!(plan.mesh_rule.n_cells(4.0, Some(0.1)).unwrap(), 400);
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let e = RunConfig::parse("preset = \"traffic-riemann\"\n\nepsilonn = 0.1\n").unwrap_err();
        match e {
            ConfigError::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("epsilonn"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let e =
            RunConfig::parse("preset = \"traffic-riemann\"\n[sweep]\nvalues = [0.1]\nkapa = 3\n")
                .unwrap_err();
        assert!(matches!(e, ConfigError::Parse { line: 4, .. }), "{e:?}");
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let e = RunConfig::parse("preset = \"traffic-riemann\"\nepsilon = \n").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { line: 2, .. }), "{e:?}");
    }

    #[test]
    fn validation_errors_name_keys() {
        let cases = [
            ("preset = \"nope\"", "preset"),
            ("preset = \"traffic-riemann\"\ncfl = 1.5", "cfl"),
            ("preset = \"traffic-riemann\"\nnu = -0.1", "nu"),
            ("preset = \"traffic-riemann\"\nn_cells = 2", "n_cells"),
            ("preset = \"traffic-riemann\"\nboundary = \"wall\"", "boundary"),
            ("preset = \"traffic-riemann\"\nkernel = \"gauss\"", "kernel"),
            ("preset = \"traffic-riemann\"\nt_final = 0", "t_final"),
            ("preset = \"traffic-riemann\"\nscheme = \"weno\"", "scheme"),
            ("preset = \"traffic-riemann\"\n[datum]\nkind = \"step\"\nleft = 2.0\nright = 0.0\nat = 0.0", "datum"),
            ("preset = \"traffic-riemann\"\n[sweep]\nvalues = [0.1, 0.2]", "sweep.values"),
            ("preset = \"traffic-riemann\"\n[sweep]\nvalues = [0.1]\nmesh_rule = \"adaptive\"", "sweep.mesh_rule"),
            ("preset = \"traffic-riemann\"\n[sweep]\nvalues = [0.1]\nschemes = [\"weno-local\"]", "sweep.schemes"),
            ("preset = \"traffic-oscillatory\"\n[sweep]\nvalues = [0.1]\nreference = \"exact-riemann\"", "sweep"),
            ("preset = \"traffic-riemann\"\n[sweep]\nprotocol = \"viscous-eps\"\nvalues = [0.1]", "sweep.nu"),
            ("x_min = 0.0\nx_max = 1.0\nn_cells = 10\nt_final = 1.0\n[datum]\nkind = \"step\"\nleft = 1.0\nright = 0.0\nat = 0.5", "epsilon"),
            ("x_min = 0.0\nx_max = 1.0\nn_cells = 10\nepsilon = 0.1\n[datum]\nkind = \"step\"\nleft = 1.0\nright = 0.0\nat = 0.5", "t_final"),
        ];
        for (text, key) in cases {
            assert_eq!(key_of(RunConfig::parse(text).unwrap_err()), key, "{text}");
        }
    }

    #[test]
    fn standalone_document() {
        let c = RunConfig::parse(
            r#"
x_min = 0.0
x_max = 2.0
n_cells = 100
boundary = "periodic"
kernel = "even-hat"
epsilon = 0.1
alignment = "cell"
locality = "local"
scheme = "lxf"
nu = 0.01
t_final = 0.5
records = 5

[datum]
kind = "square-wave"
origin = 0.0
period = 0.5
low = 0.2
high = 0.8
"#,
        )
        .unwrap();
        assert_eq!(c.boundary, BoundaryRule::Periodic);
        assert_eq!(c.alignment, Some(Alignment::CellCentered));
        assert_eq!(c.scheme.label(), "lxf-local");
        assert_eq!(c.scheme.nu, 0.01);
        assert_eq!(c.velocity, VelocitySpec::TRAFFIC);
    }

    #[test]
    fn nu_protocol_defaults() {
        let c = RunConfig::parse(
            "preset = \"traffic-riemann\"\nnu = 0.1\n[sweep]\nprotocol = \"local-nu\"\nvalues = [0.1, 0.05]\n",
        )
        .unwrap();
        let s = c.sweep.unwrap();
        assert_eq!(s.schemes[0].label(), "godunov-local");
        assert_eq!(
            s.protocol,
            Protocol::LocalNu {
                reference: Reference::ExactRiemann
            }
        );
        let c = RunConfig::parse(
            "preset = \"traffic-riemann\"\n[sweep]\nvariable = \"nu\"\nprotocol = \"nonlocal-nu\"\nvalues = [0.1, 0.0]\n",
        )
        .unwrap();
        assert_eq!(
            c.sweep.unwrap().protocol,
            Protocol::NonlocalNu { epsilon: 0.2 }
        );
        let e = RunConfig::parse(
            "preset = \"traffic-riemann\"\n[sweep]\nvariable = \"nu\"\nvalues = [0.1, 0.0]\n",
        )
        .unwrap_err();
        assert_eq!(key_of(e), "sweep.protocol");
    }

    #[test]
    fn every_preset_round_trips() {
        for p in crate::models::PRESETS {
            let c = RunConfig::from_preset(p.name).unwrap();
            assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c, "{}", p.name);
        }
    }

    fn datum_strategy() -> impl Strategy<Value = DatumSpec> {
        prop_oneof![
            (0.0f64..=1.0, 0.0f64..=1.0, -1.0f64..1.0)
                .prop_map(|(left, right, at)| DatumSpec::Step { left, right, at }),
            (0.0f64..0.5, 0.5f64..=1.0, 0.05f64..1.0).prop_map(|(low, high, period)| {
                DatumSpec::SquareWave {
                    origin: 0.0,
                    period,
                    low,
                    high,
                }
            }),
            (0.0f64..0.5, 0.0f64..0.5, 0.1f64..1.0).prop_map(|(base, amplitude, width)| {
                DatumSpec::Bump {
                    base,
                    amplitude,
                    center: 0.0,
                    width,
                }
            }),
        ]
    }

    fn sweep_strategy() -> impl Strategy<Value = Option<SweepConfig>> {
        let protocol = prop_oneof![
            Just(Protocol::Epsilon {
                reference: Reference::FineMesh { refinement: 4 }
            }),
            Just(Protocol::Epsilon {
                reference: Reference::ViscousLocal
            }),
            (0.01f64..1.0).prop_map(|nu| Protocol::ViscousEps { nu }),
            (0.01f64..1.0).prop_map(|epsilon| Protocol::NonlocalNu { epsilon }),
        ];
        let mesh = prop_oneof![
            (0.001f64..0.1).prop_map(|h| MeshRule::FixedH { h }),
            (10.0f64..5000.0).prop_map(|kappa| MeshRule::Coupled { kappa }),
            (4.0f64..100.0)
                .prop_map(|cells_per_epsilon| MeshRule::Proportional { cells_per_epsilon }),
        ];
        proptest::option::of(
            (
                protocol,
                mesh,
                proptest::collection::vec(0.01f64..1.0, 1..5),
                any::<bool>(),
                -1.0f64..1.0,
            )
                .prop_map(|(protocol, mesh_rule, mut values, timing, half_line_x0)| {
                    values.sort_by(|a, b| b.total_cmp(a));
                    values.dedup();
                    SweepConfig {
                        protocol,
                        values,
                        mesh_rule,
                        schemes: vec![
                            "godunov-nonlocal".parse().unwrap(),
                            "lxf-nonlocal".parse().unwrap(),
                        ],
                        half_line_x0,
                        timing,
                    }
                }),
        )
    }

    proptest! {
        #[test]
        fn parse_print_round_trip(
            x_min in -5.0f64..0.0,
            len in 0.5f64..10.0,
            n_cells in 4usize..5000,
            periodic in any::<bool>(),
            kernel in prop::sample::select(KernelProfile::ALL.to_vec()),
            epsilon in 1e-4f64..2.0,
            alignment in prop::sample::select(vec![None, Some(Alignment::CellCentered), Some(Alignment::InterfaceCentered)]),
            kind in prop::sample::select(vec![SchemeKind::LaxFriedrichs, SchemeKind::Godunov, SchemeKind::Upwind]),
            nu in prop_oneof![Just(0.0), 0.0f64..1.0],
            cfl in 0.01f64..=1.0,
            t_final in 0.01f64..3.0,
            records in 2usize..200,
            datum in datum_strategy(),
            sweep in sweep_strategy(),
            preset_name in prop::sample::select(vec![None, Some("traffic-riemann".to_string())]),
        ) {
            let mut config = RunConfig {
                preset: preset_name,
                x_min,
                x_max: x_min + len,
                n_cells,
                boundary: if periodic { BoundaryRule::Periodic } else { BoundaryRule::ConstantExtension },
                kernel,
                epsilon: Some(epsilon),
                alignment,
                convolution: ConvolutionMethod::Direct,
                velocity: VelocitySpec::TRAFFIC,
                scheme: SchemeSpec::new(Locality::Nonlocal, kind).with_nu(nu).with_cfl(cfl),
                t_final,
                records,
                datum,
                output: Some(PathBuf::from("out/results.csv")),
                sweep,
            };
            if let Some(s) = config.sweep.as_mut() {
                for scheme in s.schemes.iter_mut() {
                    *scheme = scheme.with_nu(nu).with_cfl(cfl);
                }
            }
            let text = config.to_toml();
            prop_assert_eq!(RunConfig::parse(&text).unwrap(), config, "{}", text);
        }
    }
}
