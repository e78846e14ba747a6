//! Polar partition of the control horizon and per-region vertex controllers.
//!
//! The disk of radius `R_m` is cut by `n_r` circles and `n_θ` rays into
//! `(n_r-1)(n_θ-1)` regions. Region `(i, j)` has vertices
//! `v0=(r_i,θ_j)`, `v1=(r_{i+1},θ_j)`, `v2=(r_{i+1},θ_{j+1})`, `v3=(r_i,θ_{j+1})`.
//! A controller fixes a polar velocity `(u_r, u_θ)` at each vertex; inside the
//! region the field is the bilinear interpolation of the four in `(r, θ)`.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::Vec2;

/// Default margin fraction `κ` on decisive facets.
pub const DEFAULT_MARGIN: f64 = 0.5;
/// Default lateral fraction of the design speed used to keep exit flows off
/// the side facets.
pub const DEFAULT_LATERAL: f64 = 0.25;
/// Side length of the validation sample grid.
pub const VALIDATION_GRID: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolarError {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("region ({i},{j}) is outside the partition")]
    IndexOutOfRange { i: usize, j: usize },
    #[error("point at radius {r} is outside the control horizon {r_max}")]
    OutOfHorizon { r: f64, r_max: f64 },
    #[error("mode {mode} is not available in region ({i},{j})")]
    IllegalMode { mode: ControlMode, i: usize, j: usize },
    #[error("controller infeasible: {0}")]
    Infeasible(String),
    #[error("point ({x}, {y}) is outside region ({i},{j})")]
    OutsideRegion { x: f64, y: f64, i: usize, j: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPartition {
    r_max: f64,
    n_r: usize,
    n_theta: usize,
}

/// 1-based region address: radial band `i`, angular sector `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionIndex {
    pub i: usize,
    pub j: usize,
}

impl RegionIndex {
    pub const fn new(i: usize, j: usize) -> Self {
        RegionIndex { i, j }
    }
}

impl fmt::Display for RegionIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionBounds {
    pub r_lo: f64,
    pub r_hi: f64,
    pub theta_lo: f64,
    /// Equals `2π` for the last sector.
    pub theta_hi: f64,
}

impl PolarPartition {
    pub fn new(r_max: f64, n_r: usize, n_theta: usize) -> Result<Self, PolarError> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(PolarError::InvalidPartition(format!(
                "R_m must be positive, got {r_max}"
            )));
        }
        if n_r < 2 || n_theta < 2 {
            return Err(PolarError::InvalidPartition(format!(
                "need n_r >= 2 and n_theta >= 2, got {n_r} and {n_theta}"
            )));
        }
        Ok(PolarPartition { r_max, n_r, n_theta })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    /// Number of radial bands, `n_r - 1`.
    pub fn rings(&self) -> usize {
        self.n_r - 1
    }

    /// Number of angular sectors, `n_θ - 1`.
    pub fn sectors(&self) -> usize {
        self.n_theta - 1
    }

    pub fn delta_r(&self) -> f64 {
        self.r_max / self.rings() as f64
    }

    pub fn delta_theta(&self) -> f64 {
        TAU / self.sectors() as f64
    }

    /// `r_i` for `i` in `1..=n_r`.
    pub fn radius(&self, i: usize) -> f64 {
        if i == self.n_r {
            self.r_max
        } else {
            self.r_max * (i - 1) as f64 / self.rings() as f64
        }
    }

    /// `θ_j` for `j` in `1..=n_θ`.
    pub fn angle(&self, j: usize) -> f64 {
        if j == self.n_theta {
            TAU
        } else {
            TAU * (j - 1) as f64 / self.sectors() as f64
        }
    }

    /// Location tolerance `τ_loc`.
    pub fn tolerance(&self) -> f64 {
        1e-6 * self.r_max
    }

    /// Radius below which angular rates are computed as if at this radius.
    pub fn r_eps(&self) -> f64 {
        1e-3 * self.r_max
    }

    pub fn contains_index(&self, idx: RegionIndex) -> bool {
        (1..=self.rings()).contains(&idx.i) && (1..=self.sectors()).contains(&idx.j)
    }

    fn check(&self, idx: RegionIndex) -> Result<(), PolarError> {
        if self.contains_index(idx) {
            Ok(())
        } else {
            Err(PolarError::IndexOutOfRange { i: idx.i, j: idx.j })
        }
    }

    /// All regions, ring-major.
    pub fn regions(&self) -> impl Iterator<Item = RegionIndex> + '_ {
        (1..=self.rings()).flat_map(move |i| (1..=self.sectors()).map(move |j| RegionIndex::new(i, j)))
    }

    pub fn region_bounds(&self, idx: RegionIndex) -> Result<RegionBounds, PolarError> {
        self.check(idx)?;
        Ok(RegionBounds {
            r_lo: self.radius(idx.i),
            r_hi: self.radius(idx.i + 1),
            theta_lo: self.angle(idx.j),
            theta_hi: self.angle(idx.j + 1),
        })
    }

    /// The region containing `x`, ties going to the lower index.
    pub fn locate(&self, x: Vec2) -> Result<RegionIndex, PolarError> {
        let r = x.norm();
        if r > self.r_max {
            return Err(PolarError::OutOfHorizon { r, r_max: self.r_max });
        }
        let i = ((r / self.delta_r()).ceil() as usize).clamp(1, self.rings());
        let j = if r == 0.0 {
            1
        } else {
            ((x.angle() / self.delta_theta()).ceil() as usize).clamp(1, self.sectors())
        };
        Ok(RegionIndex::new(i, j))
    }

    /// Unclamped bilinear coordinates `(α, β)` of `x` relative to region
    /// `idx`; the angle is unwrapped around the sector centre.
    pub fn local_coordinates(&self, idx: RegionIndex, x: Vec2) -> Result<(f64, f64), PolarError> {
        let b = self.region_bounds(idx)?;
        let r = x.norm();
        let centre = 0.5 * (b.theta_lo + b.theta_hi);
        let theta = centre + crate::geometry::angle_difference(x.angle(), centre);
        Ok((
            (r - b.r_lo) / (b.r_hi - b.r_lo),
            (theta - b.theta_lo) / (b.theta_hi - b.theta_lo),
        ))
    }

    /// Cartesian point at local coordinates `(α, β)` of region `idx`.
    pub fn point_at(&self, idx: RegionIndex, alpha: f64, beta: f64) -> Result<Vec2, PolarError> {
        let b = self.region_bounds(idx)?;
        Ok(Vec2::from_polar(
            b.r_lo + alpha * (b.r_hi - b.r_lo),
            b.theta_lo + beta * (b.theta_hi - b.theta_lo),
        ))
    }

    /// The region across `facet`, if any. Angular neighbours wrap around.
    pub fn neighbour(&self, idx: RegionIndex, facet: Facet) -> Option<RegionIndex> {
        let s = self.sectors();
        match facet {
            Facet::RPlus => (idx.i < self.rings()).then(|| RegionIndex::new(idx.i + 1, idx.j)),
            Facet::RMinus => (idx.i > 1).then(|| RegionIndex::new(idx.i - 1, idx.j)),
            Facet::ThetaPlus => Some(RegionIndex::new(idx.i, idx.j % s + 1)),
            Facet::ThetaMinus => Some(RegionIndex::new(idx.i, (idx.j + s - 2) % s + 1)),
        }
    }
}

/// Edges of a region: `E_r^+` (outer arc), `E_r^-` (inner arc), `E_θ^+`, `E_θ^-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Facet {
    RPlus,
    RMinus,
    ThetaPlus,
    ThetaMinus,
}

impl Facet {
    pub const ALL: [Facet; 4] = [Facet::RPlus, Facet::RMinus, Facet::ThetaPlus, Facet::ThetaMinus];

    /// Indices of the two vertices on this facet.
    pub fn vertices(self) -> [usize; 2] {
        match self {
            Facet::RPlus => [1, 2],
            Facet::RMinus => [0, 3],
            Facet::ThetaPlus => [2, 3],
            Facet::ThetaMinus => [0, 1],
        }
    }

    /// Outward normal component of a polar velocity.
    pub fn outward(self, u: PolarVelocity) -> f64 {
        match self {
            Facet::RPlus => u.ur,
            Facet::RMinus => -u.ur,
            Facet::ThetaPlus => u.utheta,
            Facet::ThetaMinus => -u.utheta,
        }
    }

    /// Whether local coordinates `(α, β)` lie on this facet.
    fn holds(self, alpha: f64, beta: f64) -> bool {
        match self {
            Facet::RPlus => alpha == 1.0,
            Facet::RMinus => alpha == 0.0,
            Facet::ThetaPlus => beta == 1.0,
            Facet::ThetaMinus => beta == 0.0,
        }
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Facet::RPlus => "E_r+",
            Facet::RMinus => "E_r-",
            Facet::ThetaPlus => "E_theta+",
            Facet::ThetaMinus => "E_theta-",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ControlMode {
    Invariant,
    ExitRPlus,
    ExitRMinus,
    ExitThetaPlus,
    ExitThetaMinus,
}

impl ControlMode {
    pub const ALL: [ControlMode; 5] = [
        ControlMode::Invariant,
        ControlMode::ExitRPlus,
        ControlMode::ExitRMinus,
        ControlMode::ExitThetaPlus,
        ControlMode::ExitThetaMinus,
    ];

    pub fn exit_facet(self) -> Option<Facet> {
        match self {
            ControlMode::Invariant => None,
            ControlMode::ExitRPlus => Some(Facet::RPlus),
            ControlMode::ExitRMinus => Some(Facet::RMinus),
            ControlMode::ExitThetaPlus => Some(Facet::ThetaPlus),
            ControlMode::ExitThetaMinus => Some(Facet::ThetaMinus),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ControlMode::Invariant => "invariant",
            ControlMode::ExitRPlus => "exit_r+",
            ControlMode::ExitRMinus => "exit_r-",
            ControlMode::ExitThetaPlus => "exit_theta+",
            ControlMode::ExitThetaMinus => "exit_theta-",
        }
    }

    /// Whether the mode is available in region `idx`: there is no inward exit
    /// from the innermost ring.
    pub fn is_legal(self, idx: RegionIndex) -> bool {
        !(self == ControlMode::ExitRMinus && idx.i == 1)
    }
}

impl fmt::Display for ControlMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ControlMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ControlMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown control mode `{s}`"))
    }
}

/// Radial and tangential velocity components, m/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolarVelocity {
    pub ur: f64,
    pub utheta: f64,
}

impl PolarVelocity {
    pub const fn new(ur: f64, utheta: f64) -> Self {
        PolarVelocity { ur, utheta }
    }

    pub fn norm(self) -> f64 {
        self.ur.hypot(self.utheta)
    }

    pub fn scaled(self, k: f64) -> Self {
        PolarVelocity::new(self.ur * k, self.utheta * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexControls {
    pub mode: ControlMode,
    pub u: [PolarVelocity; 4],
}

impl VertexControls {
    pub fn max_speed(&self) -> f64 {
        self.u.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, k: f64) -> Self {
        VertexControls {
            mode: self.mode,
            u: self.u.map(|v| v.scaled(k)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerDesign {
    /// Vertex speed, m/s.
    pub speed: f64,
    /// Magnitude bound on every vertex vector.
    pub u_max: f64,
    /// Margin fraction `κ`.
    pub margin: f64,
    /// Tangential (or radial) fraction used to push exit flows away from side facets.
    pub lateral: f64,
}

impl ControllerDesign {
    pub fn new(speed: f64, u_max: f64) -> Self {
        ControllerDesign {
            speed,
            u_max,
            margin: DEFAULT_MARGIN,
            lateral: DEFAULT_LATERAL,
        }
    }
}

/// Facets that bound the region: the inner arc of the innermost ring
/// degenerates to the origin and is not a facet.
pub fn region_facets(idx: RegionIndex) -> impl Iterator<Item = Facet> {
    Facet::ALL
        .into_iter()
        .filter(move |&f| !(idx.i == 1 && f == Facet::RMinus))
}

/// Vertex vectors for `mode` in region `idx`.
///
/// Exit modes put `speed·√(1-l²)` along the exit normal at every vertex and
/// `speed·l` pointing inward at the vertices of the two side facets, where `l`
/// is the lateral fraction. The invariant mode points every vertex at the
/// region's interior diagonal with speed `speed`.
pub fn design_controller(
    p: &PolarPartition,
    idx: RegionIndex,
    mode: ControlMode,
    design: &ControllerDesign,
) -> Result<VertexControls, PolarError> {
    p.check(idx)?;
    if !mode.is_legal(idx) {
        return Err(PolarError::IllegalMode {
            mode,
            i: idx.i,
            j: idx.j,
        });
    }
    let s = design.speed;
    if !(s.is_finite() && s > 0.0) {
        return Err(PolarError::Infeasible(format!("speed must be positive, got {s}")));
    }
    if s > design.u_max {
        return Err(PolarError::Infeasible(format!(
            "speed {s} exceeds the bound {}",
            design.u_max
        )));
    }
    let l = design.lateral;
    if !(0.0..1.0).contains(&l) {
        return Err(PolarError::Infeasible(format!(
            "lateral fraction {l} must lie in [0, 1)"
        )));
    }
    let along = (1.0 - l * l).sqrt();
    let diag = std::f64::consts::FRAC_1_SQRT_2;
    let margin_ok = match mode {
        ControlMode::Invariant => diag >= design.margin,
        _ => along >= design.margin,
    };
    if !margin_ok {
        return Err(PolarError::Infeasible(format!(
            "margin fraction {} cannot be met by mode {mode}",
            design.margin
        )));
    }
    let v = |ur: f64, ut: f64| PolarVelocity::new(ur * s, ut * s);
    let u = match mode {
        ControlMode::Invariant => [v(diag, diag), v(-diag, diag), v(-diag, -diag), v(diag, -diag)],
        ControlMode::ExitRMinus => [v(-along, l), v(-along, l), v(-along, -l), v(-along, -l)],
        ControlMode::ExitRPlus => [v(along, l), v(along, l), v(along, -l), v(along, -l)],
        ControlMode::ExitThetaPlus => [v(l, along), v(-l, along), v(-l, along), v(l, along)],
        ControlMode::ExitThetaMinus => [v(l, -along), v(-l, -along), v(-l, -along), v(l, -along)],
    };
    Ok(VertexControls { mode, u })
}

/// Bilinear weights `λ` for vertices `v0..v3`.
pub fn interpolation_weights(alpha: f64, beta: f64) -> [f64; 4] {
    [
        (1.0 - alpha) * (1.0 - beta),
        alpha * (1.0 - beta),
        alpha * beta,
        (1.0 - alpha) * beta,
    ]
}

fn interpolate(vc: &VertexControls, alpha: f64, beta: f64) -> PolarVelocity {
    let w = interpolation_weights(alpha, beta);
    let mut out = PolarVelocity::default();
    for (wm, um) in w.iter().zip(&vc.u) {
        out.ur += wm * um.ur;
        out.utheta += wm * um.utheta;
    }
    out
}

/// Interpolated polar velocity at `x`, which must lie in region `idx` up to
/// the location tolerance.
pub fn eval_polar(
    p: &PolarPartition,
    idx: RegionIndex,
    vc: &VertexControls,
    x: Vec2,
) -> Result<PolarVelocity, PolarError> {
    let (alpha, beta) = p.local_coordinates(idx, x)?;
    let b = p.region_bounds(idx)?;
    let tol = p.tolerance();
    let r = x.norm();
    let radial_slack = tol / (b.r_hi - b.r_lo);
    let angular_slack = tol / (r.max(p.r_eps()) * (b.theta_hi - b.theta_lo));
    let near_origin = idx.i == 1 && r <= tol;
    let inside = (-radial_slack..=1.0 + radial_slack).contains(&alpha)
        && (near_origin || (-angular_slack..=1.0 + angular_slack).contains(&beta));
    if !inside {
        return Err(PolarError::OutsideRegion {
            x: x.x,
            y: x.y,
            i: idx.i,
            j: idx.j,
        });
    }
    Ok(interpolate(vc, alpha.clamp(0.0, 1.0), beta.clamp(0.0, 1.0)))
}

/// Cartesian velocity at `x`:
/// `u_r·r̂ + u_θ·(r / max(r, r_ε))·θ̂`, so the angular rate is `u_θ / max(r, r_ε)`.
pub fn eval_control(p: &PolarPartition, idx: RegionIndex, vc: &VertexControls, x: Vec2) -> Result<Vec2, PolarError> {
    let u = eval_polar(p, idx, vc, x)?;
    let r = x.norm();
    let theta = if r > 0.0 {
        x.angle()
    } else {
        let b = p.region_bounds(idx)?;
        0.5 * (b.theta_lo + b.theta_hi)
    };
    let radial = Vec2::from_polar(1.0, theta);
    let tangential = Vec2::new(-radial.y, radial.x);
    Ok(radial * u.ur + tangential * (u.utheta * r / r.max(p.r_eps())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FacetViolation {
    pub facet: Facet,
    /// Local coordinates of the offending vertex or sample.
    pub at: (f64, f64),
    /// Outward normal component found there.
    pub outward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<FacetViolation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violated_facets(&self) -> Vec<Facet> {
        let mut out: Vec<Facet> = self.violations.iter().map(|v| v.facet).collect();
        out.sort();
        out.dedup();
        out
    }
}

const VERTEX_COORDS: [(f64, f64); 4] = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];

/// Re-checks the facet conditions of a controller.
///
/// Margins are relative to the controller's own largest vertex speed `s`:
/// the exit facet needs outward component `≥ κ·s` at all four vertices, other
/// facets need `≤ 0` at their vertices, and in invariant mode every facet
/// needs `≤ -κ·s`. The interpolated field is then sampled on a closed
/// 20×20 grid and must not point outward across any non-exit facet.
pub fn validate_controller(p: &PolarPartition, idx: RegionIndex, vc: &VertexControls) -> ValidationReport {
    validate_with_margin(p, idx, vc, DEFAULT_MARGIN)
}

pub fn validate_with_margin(
    p: &PolarPartition,
    idx: RegionIndex,
    vc: &VertexControls,
    margin: f64,
) -> ValidationReport {
    let mut violations = Vec::new();
    let s = vc.max_speed();
    let exit = vc.mode.exit_facet();
    let tol = 1e-12 * s.max(1.0);
    if !p.contains_index(idx) || !vc.mode.is_legal(idx) {
        // Report every facet: the controller has no meaning here.
        for facet in Facet::ALL {
            violations.push(FacetViolation {
                facet,
                at: (f64::NAN, f64::NAN),
                outward: f64::NAN,
            });
        }
        return ValidationReport { violations };
    }

    if let Some(f) = exit {
        for (m, &at) in VERTEX_COORDS.iter().enumerate() {
            let out = f.outward(vc.u[m]);
            if out < margin * s - tol || s == 0.0 {
                violations.push(FacetViolation {
                    facet: f,
                    at,
                    outward: out,
                });
            }
        }
    }
    for f in region_facets(idx).filter(|&f| Some(f) != exit) {
        let bound = if exit.is_none() { -margin * s } else { 0.0 };
        for m in f.vertices() {
            let out = f.outward(vc.u[m]);
            if out > bound + tol {
                violations.push(FacetViolation {
                    facet: f,
                    at: VERTEX_COORDS[m],
                    outward: out,
                });
            }
        }
    }

    let n = VALIDATION_GRID;
    for a in 0..n {
        for b in 0..n {
            let alpha = a as f64 / (n - 1) as f64;
            let beta = b as f64 / (n - 1) as f64;
            let u = interpolate(vc, alpha, beta);
            for f in region_facets(idx).filter(|&f| Some(f) != exit && f.holds(alpha, beta)) {
                let out = f.outward(u);
                if out > tol {
                    violations.push(FacetViolation {
                        facet: f,
                        at: (alpha, beta),
                        outward: out,
                    });
                }
            }
        }
    }
    ValidationReport { violations }
}

/// Text form: `mode`, `region`, then one `vK: u_r u_θ` line per vertex with
/// nine significant digits.
pub fn write_controller(idx: RegionIndex, vc: &VertexControls) -> String {
    let mut out = format!("mode: {}\nregion: {} {}\n", vc.mode, idx.i, idx.j);
    for (m, u) in vc.u.iter().enumerate() {
        out.push_str(&format!("v{m}: {:.8e} {:.8e}\n", u.ur, u.utheta));
    }
    out
}

pub fn parse_controller(text: &str) -> Result<(RegionIndex, VertexControls), PolarError> {
    let err = |line: usize, message: String| PolarError::Parse { line, message };
    let mut mode = None;
    let mut region = None;
    let mut u: [Option<PolarVelocity>; 4] = [None; 4];
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| err(line_no, "expected `key: values`".into()))?;
        let fields: Vec<&str> = rest.split_whitespace().collect();
        match (key, fields.as_slice()) {
            ("mode", [m]) => mode = Some(m.parse::<ControlMode>().map_err(|e| err(line_no, e))?),
            ("region", [i, j]) => {
                let parse = |s: &str| s.parse::<usize>().map_err(|e| err(line_no, e.to_string()));
                region = Some(RegionIndex::new(parse(i)?, parse(j)?));
            }
            (v, [a, b]) if v.len() == 2 && v.starts_with('v') => {
                let m: usize = v[1..].parse().map_err(|_| err(line_no, format!("bad vertex `{v}`")))?;
                if m > 3 {
                    return Err(err(line_no, format!("bad vertex `{v}`")));
                }
                let parse = |s: &str| s.parse::<f64>().map_err(|e| err(line_no, e.to_string()));
                u[m] = Some(PolarVelocity::new(parse(a)?, parse(b)?));
            }
            _ => return Err(err(line_no, format!("unexpected line `{line}`"))),
        }
    }
    let mode = mode.ok_or_else(|| err(0, "missing mode".into()))?;
    let region = region.ok_or_else(|| err(0, "missing region".into()))?;
    let mut vertices = [PolarVelocity::default(); 4];
    for (m, slot) in u.into_iter().enumerate() {
        vertices[m] = slot.ok_or_else(|| err(0, format!("missing v{m}")))?;
    }
    Ok((region, VertexControls { mode, u: vertices }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p549() -> PolarPartition {
        PolarPartition::new(40.0, 5, 9).unwrap()
    }

    #[test]
    fn bounds_follow_grid_formulas() {
        let p = p549();
        let b = p.region_bounds(RegionIndex::new(1, 1)).unwrap();
        assert_eq!((b.r_lo, b.r_hi, b.theta_lo), (0.0, 10.0, 0.0));
        assert!((b.theta_hi - PI / 4.0).abs() < 1e-15);
        assert_eq!(p.region_bounds(RegionIndex::new(4, 8)).unwrap().r_hi, 40.0);
        let radii: Vec<f64> = (1..=5).map(|i| p.radius(i)).collect();
        assert_eq!(radii, [0.0, 10.0, 20.0, 30.0, 40.0]);
        assert!(p.region_bounds(RegionIndex::new(5, 1)).is_err());
        assert!(p.region_bounds(RegionIndex::new(1, 0)).is_err());
    }

    #[test]
    fn locate_examples() {
        let p = p549();
        assert_eq!(p.locate(Vec2::ZERO).unwrap(), RegionIndex::new(1, 1));
        assert_eq!(
            p.locate(Vec2::from_polar(15.0, 3.0 * PI / 8.0)).unwrap(),
            RegionIndex::new(2, 2)
        );
        assert!(matches!(
            p.locate(Vec2::new(40.0 + 1e-9, 0.0)),
            Err(PolarError::OutOfHorizon { .. })
        ));
        // A point on r = r_2 belongs to the lower ring.
        assert_eq!(p.locate(Vec2::new(10.0, 0.0)).unwrap(), RegionIndex::new(1, 1));
        assert_eq!(p.locate(Vec2::new(10.0, -1e-9)).unwrap().j, 8);
    }

    #[test]
    fn weights_match_hand_values() {
        assert_eq!(interpolation_weights(0.25, 0.5), [0.375, 0.125, 0.125, 0.375]);
    }

    #[test]
    fn exit_r_minus_is_illegal_in_first_ring() {
        let p = p549();
        let d = ControllerDesign::new(2.0, 5.0);
        assert!(matches!(
            design_controller(&p, RegionIndex::new(1, 3), ControlMode::ExitRMinus, &d),
            Err(PolarError::IllegalMode { .. })
        ));
        let vc = design_controller(&p, RegionIndex::new(2, 3), ControlMode::ExitRMinus, &d).unwrap();
        assert!(vc.u.iter().all(|u| u.ur < 0.0));
    }

    #[test]
    fn exit_theta_plus_sign_pattern() {
        let p = p549();
        let d = ControllerDesign::new(2.0, 5.0);
        let vc = design_controller(&p, RegionIndex::new(2, 3), ControlMode::ExitThetaPlus, &d).unwrap();
        assert!(vc.u.iter().all(|u| u.utheta > 0.0));
        assert!(vc.u[1].ur <= 0.0 && vc.u[2].ur <= 0.0);
        assert!(vc.u[0].ur >= 0.0 && vc.u[3].ur >= 0.0);
    }

    #[test]
    fn infeasible_designs() {
        let p = p549();
        let idx = RegionIndex::new(2, 2);
        assert!(matches!(
            design_controller(&p, idx, ControlMode::Invariant, &ControllerDesign::new(6.0, 5.0)),
            Err(PolarError::Infeasible(_))
        ));
        assert!(matches!(
            design_controller(&p, idx, ControlMode::Invariant, &ControllerDesign::new(0.0, 5.0)),
            Err(PolarError::Infeasible(_))
        ));
        let mut d = ControllerDesign::new(2.0, 5.0);
        d.margin = 0.9;
        assert!(matches!(
            design_controller(&p, idx, ControlMode::Invariant, &d),
            Err(PolarError::Infeasible(_))
        ));
    }

    #[test]
    fn eval_at_vertex_and_centre() {
        let p = p549();
        let idx = RegionIndex::new(2, 3);
        let vc = design_controller(&p, idx, ControlMode::ExitRPlus, &ControllerDesign::new(2.0, 5.0)).unwrap();
        let v0 = p.point_at(idx, 0.0, 0.0).unwrap();
        let u = eval_polar(&p, idx, &vc, v0).unwrap();
        assert!((u.ur - vc.u[0].ur).abs() < 1e-12 && (u.utheta - vc.u[0].utheta).abs() < 1e-12);
        let c = p.point_at(idx, 0.5, 0.5).unwrap();
        let u = eval_polar(&p, idx, &vc, c).unwrap();
        let mean_r: f64 = vc.u.iter().map(|v| v.ur).sum::<f64>() / 4.0;
        let mean_t: f64 = vc.u.iter().map(|v| v.utheta).sum::<f64>() / 4.0;
        assert!((u.ur - mean_r).abs() < 1e-12 && (u.utheta - mean_t).abs() < 1e-12);
        assert!(matches!(
            eval_control(&p, idx, &vc, Vec2::new(-30.0, 0.0)),
            Err(PolarError::OutsideRegion { .. })
        ));
    }

    #[test]
    fn validation_flags_flipped_exit_sign() {
        let p = p549();
        let idx = RegionIndex::new(3, 5);
        let mut vc = design_controller(&p, idx, ControlMode::ExitRMinus, &ControllerDesign::new(2.0, 5.0)).unwrap();
        assert!(validate_controller(&p, idx, &vc).passed());
        vc.u[2].ur = -vc.u[2].ur;
        let report = validate_controller(&p, idx, &vc);
        assert!(!report.passed());
        assert!(report.violated_facets().contains(&Facet::RMinus));
    }

    #[test]
    fn scaled_invariant_still_passes() {
        let p = p549();
        let idx = RegionIndex::new(1, 4);
        let vc = design_controller(&p, idx, ControlMode::Invariant, &ControllerDesign::new(2.0, 5.0)).unwrap();
        assert!(validate_controller(&p, idx, &vc.scaled(0.1)).passed());
    }

    #[test]
    fn controller_text_round_trip() {
        let p = p549();
        let idx = RegionIndex::new(2, 7);
        let vc = design_controller(&p, idx, ControlMode::ExitThetaMinus, &ControllerDesign::new(1.7, 5.0)).unwrap();
        let text = write_controller(idx, &vc);
        let (idx2, vc2) = parse_controller(&text).unwrap();
        assert_eq!(idx2, idx);
        assert_eq!(vc2.mode, vc.mode);
        for (a, b) in vc.u.iter().zip(&vc2.u) {
            assert!((a.ur - b.ur).abs() <= 1e-8 * a.ur.abs().max(1.0));
        }
        assert_eq!(write_controller(idx2, &vc2), text);
    }

    #[test]
    fn neighbours_wrap_angularly() {
        let p = p549();
        assert_eq!(
            p.neighbour(RegionIndex::new(2, 8), Facet::ThetaPlus),
            Some(RegionIndex::new(2, 1))
        );
        assert_eq!(
            p.neighbour(RegionIndex::new(2, 1), Facet::ThetaMinus),
            Some(RegionIndex::new(2, 8))
        );
        assert_eq!(p.neighbour(RegionIndex::new(1, 1), Facet::RMinus), None);
        assert_eq!(p.neighbour(RegionIndex::new(4, 1), Facet::RPlus), None);
    }
}
