use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use symcocycle::cocycle::{GridSpec, PathSettings, COLLAR_TOL};
use symcocycle::dynamics::{Diffeo, FlowMap, GeneratorTable, HamiltonianSpec, IntegratorSettings, Isotopy, Scheme, TwistMap};
use symcocycle::{Expr, ManifoldModel, Point, Primitive, PrimitiveKind, Window};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub manifold: ManifoldBlock,
    #[serde(default)]
    pub primitive: PrimitiveBlock,
    #[serde(default)]
    pub hamiltonians: Vec<HamiltonianBlock>,
    #[serde(default)]
    pub twists: Vec<TwistBlock>,
    /// Names of hamiltonians or twists forming the generating set.
    #[serde(default)]
    pub generators: Vec<String>,
    #[serde(default)]
    pub integrator: IntegratorBlock,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub basepoint: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldBlock {
    pub kind: ManifoldKindName,
    pub circumference: Option<f64>,
    /// `[p_min, p_max, q_min, q_max]`
    pub window: [f64; 4],
    #[serde(default)]
    pub resolution: Resolution,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldKindName {
    Plane,
    Cylinder,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Resolution {
    Square(usize),
    Rect([usize; 2]),
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution::Square(101)
    }
}

impl Resolution {
    fn dims(self) -> (usize, usize) {
        match self {
            Resolution::Square(n) => (n, n),
            Resolution::Rect([a, b]) => (a, b),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum PrimitiveBlock {
    Named(String),
    Custom { custom: CustomPrimitive },
}

impl Default for PrimitiveBlock {
    fn default() -> Self {
        PrimitiveBlock::Named("p_dq".into())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomPrimitive {
    pub a_p: String,
    pub a_q: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianBlock {
    pub name: String,
    pub expression: String,
    #[serde(default = "one")]
    pub duration: f64,
    /// `[p_min, p_max, q_min, q_max]` outside which `F` vanishes.
    pub support_claim: Option<[f64; 4]>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistBlock {
    pub name: String,
    pub profile: String,
    #[serde(default = "yes")]
    pub clamped: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorBlock {
    #[serde(default = "rk4")]
    pub scheme: String,
    #[serde(default = "default_h")]
    pub h: f64,
}

fn rk4() -> String {
    "rk4".into()
}

fn default_h() -> f64 {
    1e-3
}

impl Default for IntegratorBlock {
    fn default() -> Self {
        IntegratorBlock { scheme: rk4(), h: default_h() }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Adaptive line and area integrals.
    pub quadrature: f64,
    /// Oscillation allowed on the collar by compact normalization.
    pub collar: f64,
    /// Largest loop period accepted as exact on the cylinder.
    pub exactness: f64,
    /// Boundary difference counted as zero by `twist-check`.
    pub twist: f64,
    /// Growth rate counted as bounded by `flux`.
    pub growth: f64,
    /// Nodes per axis of the fixed-point scan.
    pub fixed_point_scan: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { quadrature: 1e-8, collar: COLLAR_TOL, exactness: 1e-8, twist: 1e-6, growth: 1e-3, fixed_point_scan: 21 }
    }
}

/// A named map of the scenario.
#[derive(Clone)]
pub enum NamedMap {
    Flow(Arc<FlowMap>),
    Twist(Arc<TwistMap>),
}

impl NamedMap {
    pub fn diffeo(&self) -> Arc<dyn Diffeo> {
        match self {
            NamedMap::Flow(f) => f.clone(),
            NamedMap::Twist(t) => t.clone(),
        }
    }

    pub fn isotopy(&self) -> Arc<dyn Isotopy> {
        match self {
            NamedMap::Flow(f) => f.clone(),
            NamedMap::Twist(t) => t.clone(),
        }
    }
}

/// A validated scenario.
pub struct Scenario {
    pub model: ManifoldModel,
    pub primitive: Primitive,
    pub grid: GridSpec,
    pub integrator: IntegratorSettings,
    pub tolerances: Tolerances,
    pub basepoint: Option<Point>,
    /// Hamiltonians first, then twists, in file order.
    pub maps: Vec<(String, NamedMap)>,
    pub generators: GeneratorTable,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn window(w: [f64; 4], what: &str) -> Result<Window, CliError> {
    Window::new(w[0], w[1], w[2], w[3]).map_err(|e| invalid(format!("{what}: {e}")))
}

impl Scenario {
    pub fn load(path: &Path, tol_override: Option<f64>) -> Result<Scenario, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        let file: ScenarioFile = serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Scenario::from_file(file, tol_override)
    }

    pub fn from_file(file: ScenarioFile, tol_override: Option<f64>) -> Result<Scenario, CliError> {
        let w = window(file.manifold.window, "manifold window")?;
        let model = match (file.manifold.kind, file.manifold.circumference) {
            (ManifoldKindName::Plane, None) => ManifoldModel::plane(w),
            (ManifoldKindName::Plane, Some(_)) => return Err(invalid("a plane has no circumference")),
            (ManifoldKindName::Cylinder, None) => ManifoldModel::cylinder(w),
            (ManifoldKindName::Cylinder, Some(c)) => ManifoldModel::cylinder_with(c, w)?,
        };
        let (n_p, n_q) = file.manifold.resolution.dims();
        let grid = GridSpec::new(w, n_p, n_q)?;

        let primitive = match file.primitive {
            PrimitiveBlock::Named(name) => match PrimitiveKind::from_name(&name) {
                Some(PrimitiveKind::Custom) | None => {
                    return Err(invalid(format!("unknown primitive `{name}`; use p_dq, minus_q_dp, symmetric or {{\"custom\": ...}}")))
                }
                Some(kind) => Primitive::builtin(kind),
            },
            PrimitiveBlock::Custom { custom } => Primitive::custom(
                Expr::parse(&custom.a_p).map_err(symcocycle::Error::from)?,
                Expr::parse(&custom.a_q).map_err(symcocycle::Error::from)?,
            ),
        };
        primitive.validate(&model)?;

        let scheme = match file.integrator.scheme.as_str() {
            "rk4" => Scheme::Rk4,
            "implicit_midpoint" => Scheme::ImplicitMidpoint,
            other => return Err(invalid(format!("unknown integrator scheme `{other}`; use rk4 or implicit_midpoint"))),
        };
        let integrator = IntegratorSettings { scheme, h: file.integrator.h };
        integrator.validate()?;

        let mut tolerances = file.tolerances;
        if let Some(t) = tol_override {
            tolerances.quadrature = t;
        }
        let t = tolerances;
        if ![t.quadrature, t.collar, t.exactness, t.twist, t.growth].iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(invalid("tolerances must be positive"));
        }
        if t.fixed_point_scan < 3 {
            return Err(invalid("tolerances.fixed_point_scan must be at least 3"));
        }

        let basepoint = file.basepoint.map(|[p, q]| Point::new(p, q));
        if let Some(x) = basepoint {
            if !model.window.contains(x) {
                return Err(invalid(format!("basepoint {x} lies outside the window")));
            }
        }

        let mut seen = HashSet::new();
        let mut maps = Vec::new();
        for h in &file.hamiltonians {
            if !seen.insert(h.name.clone()) {
                return Err(invalid(format!("duplicate name `{}`", h.name)));
            }
            let mut spec = HamiltonianSpec::parse(h.name.clone(), &h.expression)?.with_duration(h.duration)?;
            if let Some(claim) = h.support_claim {
                spec = spec.with_support(window(claim, &format!("support claim of `{}`", h.name))?);
            }
            if let Some(c) = model.circumference() {
                warn_if_not_periodic(&spec, &model, c);
            }
            let flow = FlowMap::new(spec, integrator, model)?;
            maps.push((h.name.clone(), NamedMap::Flow(Arc::new(flow))));
        }
        for tw in &file.twists {
            if !seen.insert(tw.name.clone()) {
                return Err(invalid(format!("duplicate name `{}`", tw.name)));
            }
            if !model.is_cylinder() {
                return Err(invalid(format!("twist `{}` needs a cylinder", tw.name)));
            }
            maps.push((tw.name.clone(), NamedMap::Twist(Arc::new(TwistMap::parse(&tw.profile, tw.clamped)?))));
        }

        let by_name: BTreeMap<&str, &NamedMap> = maps.iter().map(|(n, m)| (n.as_str(), m)).collect();
        let mut generators = GeneratorTable::new();
        for g in &file.generators {
            let m = by_name.get(g.as_str()).ok_or_else(|| invalid(format!("generator `{g}` is not defined")))?;
            if generators.insert(g.clone(), m.diffeo()).is_some() {
                return Err(invalid(format!("generator `{g}` listed twice")));
            }
        }

        Ok(Scenario { model, primitive, grid, integrator, tolerances, basepoint, maps, generators })
    }

    pub fn path_settings(&self) -> PathSettings {
        PathSettings { tol: self.tolerances.quadrature.min(1e-9), ..PathSettings::default() }
    }

    /// The named map, or the first one when no name is given.
    pub fn map(&self, name: Option<&str>) -> Result<(&str, &NamedMap), CliError> {
        match name {
            Some(n) => self
                .maps
                .iter()
                .find(|(m, _)| m == n)
                .map(|(m, v)| (m.as_str(), v))
                .ok_or_else(|| invalid(format!("no hamiltonian or twist named `{n}`"))),
            None => self.maps.first().map(|(m, v)| (m.as_str(), v)).ok_or_else(|| invalid("the scenario defines no maps")),
        }
    }

    pub fn flow(&self, name: Option<&str>) -> Result<(&str, Arc<FlowMap>), CliError> {
        let name = name.or_else(|| self.maps.iter().find(|(_, m)| matches!(m, NamedMap::Flow(_))).map(|(n, _)| n.as_str()));
        match self.map(name)? {
            (n, NamedMap::Flow(f)) => Ok((n, f.clone())),
            (n, NamedMap::Twist(_)) => Err(invalid(format!("`{n}` is a twist, not a hamiltonian"))),
        }
    }

    pub fn twist(&self, name: Option<&str>) -> Result<(&str, Arc<TwistMap>), CliError> {
        let name = name.or_else(|| self.maps.iter().find(|(_, m)| matches!(m, NamedMap::Twist(_))).map(|(n, _)| n.as_str()));
        match self.map(name)? {
            (n, NamedMap::Twist(t)) => Ok((n, t.clone())),
            (n, NamedMap::Flow(_)) => Err(invalid(format!("`{n}` is a hamiltonian, not a twist"))),
        }
    }
}

/// A Hamiltonian that is not periodic in `q` still has a periodic field
/// when its `q`-dependence is linear, but its flow then carries flux.
fn warn_if_not_periodic(spec: &HamiltonianSpec, model: &ManifoldModel, c: f64) {
    let w = model.window;
    for i in 0..5 {
        for j in 0..5 {
            let x = Point::new(w.p_min + w.width() * i as f64 / 4.0, w.q_min + w.height() * j as f64 / 4.0);
            if let (Ok(a), Ok(b)) = (spec.value(x, 0.0), spec.value(Point::new(x.p, x.q + c), 0.0)) {
                if (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
                    log::warn!("hamiltonian `{}` is not periodic in q; its flow need not be Hamiltonian on the cylinder", spec.name);
                    return;
                }
            }
        }
    }
}
